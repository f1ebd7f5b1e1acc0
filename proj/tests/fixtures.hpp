#pragma once

// Random model/data generators shared by the unit tests and the acceptance binary.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "latconf/dataset.hpp"
#include "latconf/latentize.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace latconf;

inline Dataset table(const std::vector<std::string>& names, const std::vector<int>& cards, std::vector<int> cells) {
    std::vector<Variable> vars;
    for (std::size_t i = 0; i < names.size(); ++i) vars.push_back({names[i], cards[i], {}});
    return Dataset(std::move(vars), std::move(cells));
}

struct Instance {
    LatentizedDag model;
    Dataset data;
};

// Up to `max_nodes` nodes in total, at most `max_latents` of them latent, uniform
// random cells. Observed columns are X1.. in sorted order.
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_nodes = 5, std::size_t max_latents = 2,
                                std::size_t max_rows = 50) {
    std::uniform_int_distribution<std::size_t> pick_latents(0, max_latents);
    const auto latents = pick_latents(rng);
    const auto observed = std::max<std::size_t>(2, max_nodes - latents - (rng() % 2));
    auto dag = oracle::random_dag(observed, 0.4, rng);
    auto mag = dag.with_kind(GraphKind::MAG);

    LatentSpec spec;
    std::uniform_int_distribution<std::size_t> pick(0, observed - 1);
    for (std::size_t l = 0; l < latents; ++l) {
        std::set<std::size_t> kids;
        while (kids.size() < 2) kids.insert(pick(rng));
        Latent lat{"_L" + std::to_string(l + 1), {}, 2 + static_cast<int>(rng() % 2)};
        for (auto k : kids) lat.children.push_back(dag.name(k));
        spec.latents.push_back(std::move(lat));
    }
    // Build the DAG directly; source_mag is only used for naming observed nodes here.
    std::vector<std::string> names = dag.names();
    for (const auto& l : spec.latents) names.push_back(l.name);
    MixedGraph full(GraphKind::DAG, names);
    for (const auto& e : dag.edges()) full.set_edge(full.index(dag.name(e.first)), full.index(dag.name(e.second)), e.at_first, e.at_second);
    for (const auto& l : spec.latents)
        for (const auto& c : l.children) full.add_directed(l.name, c);

    std::vector<int> cards;
    for (std::size_t i = 0; i < observed; ++i) cards.push_back(2 + static_cast<int>(rng() % 2));
    std::uniform_int_distribution<std::size_t> pick_rows(5, max_rows);
    const auto rows = pick_rows(rng);
    std::vector<int> cells;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < observed; ++c) cells.push_back(static_cast<int>(rng() % static_cast<unsigned>(cards[c])));
    return {{std::move(full), std::move(spec), std::move(mag)}, table(dag.names(), cards, std::move(cells))};
}

// Parent lists of a fully observed instance in the oracle's column indexing.
inline std::vector<std::vector<std::size_t>> parent_columns(const MixedGraph& dag, const Dataset& data) {
    std::vector<std::vector<std::size_t>> out(data.cols());
    for (std::size_t c = 0; c < data.cols(); ++c)
        for (auto p : dag.parents(dag.index(data.variables()[c].name)))
            out[c].push_back(*data.column(dag.name(p)));
    return out;
}

inline std::vector<std::vector<int>> rows_of(const Dataset& data) {
    std::vector<std::vector<int>> out(data.rows(), std::vector<int>(data.cols()));
    for (std::size_t r = 0; r < data.rows(); ++r)
        for (std::size_t c = 0; c < data.cols(); ++c) out[r][c] = data.at(r, c);
    return out;
}

inline std::vector<int> cards_of(const Dataset& data) {
    std::vector<int> out;
    for (const auto& v : data.variables()) out.push_back(v.cardinality);
    return out;
}

// A<-L->B, binary, N rows drawn from a strongly dependent generator.
inline Dataset confounded_pair(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5), agree(0.9);
    std::vector<int> cells;
    for (std::size_t r = 0; r < n; ++r) {
        const int l = coin(rng);
        cells.push_back(agree(rng) ? l : 1 - l);
        cells.push_back(agree(rng) ? l : 1 - l);
    }
    return table({"A", "B"}, {2, 2}, std::move(cells));
}

} // namespace fixtures
