#pragma once

// MAG -> DAG with the fewest latent confounders that keeps the MAG's conditional
// independencies over the observed variables.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latconf/errors.hpp"
#include "latconf/graph.hpp"
#include "latconf/graph_io.hpp"

namespace latconf {

// Names beginning with this prefix are reserved for generated latents.
inline constexpr std::string_view kLatentPrefix = "_L";

struct Latent {
    std::string name;
    std::vector<std::string> children; // sorted
    int states = 2;

    friend bool operator==(const Latent&, const Latent&) = default;
};

struct LatentSpec {
    std::vector<Latent> latents;

    std::size_t size() const noexcept { return latents.size(); }
    bool empty() const noexcept { return latents.empty(); }

    const Latent* find(std::string_view name) const {
        for (const auto& l : latents)
            if (l.name == name) return &l;
        return nullptr;
    }

    void check(const std::vector<std::string>& observed) const {
        for (const auto& l : latents) {
            if (l.children.size() < 2) throw ValidationError("latent " + l.name + " needs at least two children");
            if (l.states < 2) throw ValidationError("latent " + l.name + " needs at least two states");
            if (std::binary_search(observed.begin(), observed.end(), l.name))
                throw ValidationError("latent name " + l.name + " collides with an observed variable");
            for (const auto& c : l.children)
                if (!std::binary_search(observed.begin(), observed.end(), c))
                    throw ValidationError("latent " + l.name + " has unknown child " + c);
        }
    }

    friend bool operator==(const LatentSpec&, const LatentSpec&) = default;
};

struct LatentizedDag {
    MixedGraph dag;        // observed nodes plus latents
    LatentSpec spec;
    MixedGraph source_mag; // over observed nodes only

    const std::vector<std::string>& observed() const noexcept { return source_mag.names(); }

    friend bool operator==(const LatentizedDag&, const LatentizedDag&) = default;
};

// DAG over the MAG's nodes plus one parentless latent per child set. Bi-directed edges
// between two children of the same latent are dropped; any other MAG edge must be directed.
inline LatentizedDag build_latentized(const MixedGraph& mag, LatentSpec spec) {
    const auto& observed = mag.names();
    spec.check(observed);
    std::vector<std::string> names = observed;
    for (const auto& l : spec.latents) names.push_back(l.name);
    MixedGraph dag(GraphKind::DAG, names);

    std::vector<std::vector<bool>> covered(mag.size(), std::vector<bool>(mag.size(), false));
    for (const auto& l : spec.latents) {
        for (const auto& c : l.children) dag.add_directed(l.name, c);
        for (const auto& a : l.children)
            for (const auto& b : l.children) covered[mag.index(a)][mag.index(b)] = true;
    }
    for (const auto& e : mag.edges()) {
        const auto u = dag.index(mag.name(e.first));
        const auto v = dag.index(mag.name(e.second));
        if (e.at_first == Mark::Arrow && e.at_second == Mark::Arrow) {
            if (!covered[e.first][e.second])
                throw ValidationError("bi-directed edge " + mag.name(e.first) + " <-> " + mag.name(e.second) +
                                      " is not covered by any latent");
        } else {
            dag.set_edge(u, v, e.at_first, e.at_second);
        }
    }
    require_valid(dag, GraphKind::DAG);
    return {std::move(dag), std::move(spec), mag};
}

namespace detail {

inline std::vector<Edge> bidirected_edges(const MixedGraph& mag) {
    std::vector<Edge> out;
    for (const auto& e : mag.edges())
        if (e.at_first == Mark::Arrow && e.at_second == Mark::Arrow) out.push_back(e);
    return out;
}

inline bool block_connected(const std::vector<Edge>& edges, const std::vector<std::size_t>& block) {
    std::vector<bool> in(block.size(), false);
    in[0] = true;
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t i = 0; i < block.size(); ++i) {
            if (in[i]) continue;
            const auto& a = edges[block[i]];
            for (std::size_t j = 0; j < block.size() && !in[i]; ++j) {
                if (!in[j]) continue;
                const auto& b = edges[block[j]];
                if (a.first == b.first || a.first == b.second || a.second == b.first || a.second == b.second)
                    in[i] = grew = true;
            }
        }
    }
    return std::all_of(in.begin(), in.end(), [](bool b) { return b; });
}

inline std::vector<std::string> sorted_names(const MixedGraph& g, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(g.name(i));
    return out;
}

} // namespace detail

inline constexpr std::size_t kMaxGroupedBidirected = 10;

// Partitions of the bi-directed edges into connected groups, one latent per group with
// the group's endpoints as children. Ordered by latent count, then by child sets.
inline std::vector<LatentSpec> candidate_groupings(const MixedGraph& mag) {
    const auto edges = detail::bidirected_edges(mag);
    const auto k = edges.size();
    if (k > kMaxGroupedBidirected)
        throw GuardExceeded(std::to_string(k) + " bi-directed edges exceed the grouping limit of " +
                            std::to_string(kMaxGroupedBidirected));
    if (k == 0) return {LatentSpec{}};

    using ChildSets = std::vector<std::vector<std::size_t>>;
    std::vector<ChildSets> found;
    // Restricted growth strings enumerate each set partition once.
    std::vector<std::size_t> label(k, 0);
    while (true) {
        const auto blocks = *std::max_element(label.begin(), label.end()) + 1;
        std::vector<std::vector<std::size_t>> members(blocks);
        for (std::size_t i = 0; i < k; ++i) members[label[i]].push_back(i);
        if (std::all_of(members.begin(), members.end(),
                        [&](const auto& m) { return detail::block_connected(edges, m); })) {
            ChildSets sets;
            for (const auto& m : members) {
                std::vector<std::size_t> kids;
                for (auto i : m) {
                    kids.push_back(edges[i].first);
                    kids.push_back(edges[i].second);
                }
                std::sort(kids.begin(), kids.end());
                kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
                sets.push_back(std::move(kids));
            }
            std::sort(sets.begin(), sets.end());
            found.push_back(std::move(sets));
        }
        // next restricted growth string
        std::size_t i = k;
        while (i-- > 1) {
            const auto prefix_max = *std::max_element(label.begin(), label.begin() + static_cast<std::ptrdiff_t>(i));
            if (label[i] <= prefix_max) {
                ++label[i];
                std::fill(label.begin() + static_cast<std::ptrdiff_t>(i) + 1, label.end(), 0);
                break;
            }
        }
        if (i == 0) break;
    }
    std::sort(found.begin(), found.end(), [](const ChildSets& a, const ChildSets& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    found.erase(std::unique(found.begin(), found.end()), found.end());

    std::vector<LatentSpec> out;
    for (const auto& sets : found) {
        LatentSpec spec;
        for (std::size_t j = 0; j < sets.size(); ++j)
            spec.latents.push_back({std::string(kLatentPrefix) + std::to_string(j + 1), detail::sorted_names(mag, sets[j]), 2});
        out.push_back(std::move(spec));
    }
    return out;
}

struct CiCheckOptions {
    std::size_t exhaustive_limit = 12;
    std::optional<std::uint64_t> sample_seed; // enables sampled checking above the limit
    std::size_t samples = 20000;
};

inline bool verify_ci_equivalence(const LatentizedDag& candidate, const CiCheckOptions& options = {}) {
    const auto& observed = candidate.observed();
    if (observed.size() <= options.exhaustive_limit)
        return ci_signature(candidate.dag, observed) == ci_signature(candidate.source_mag, observed);
    if (!options.sample_seed)
        throw GuardExceeded("verify_ci_equivalence: " + std::to_string(observed.size()) +
                            " observed variables exceed the exhaustive limit and sampling is disabled");

    std::mt19937_64 rng(*options.sample_seed);
    const auto n = observed.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t s = 0; s < options.samples; ++s) {
        const auto x = pick(rng);
        auto y = pick(rng);
        if (x == y) continue;
        SeparationQuery q{observed[x], observed[y], {}};
        for (std::size_t k = 0; k < n; ++k)
            if (k != x && k != y && coin(rng)) q.z.push_back(observed[k]);
        if (d_separated(candidate.dag, q) != m_separated(candidate.source_mag, q)) return false;
    }
    return true;
}

// Fewest-latent CI-preserving DAG for the MAG; all latents binary.
inline LatentizedDag latentize_min(const MixedGraph& mag, const CiCheckOptions& options = {}) {
    require_valid(mag, GraphKind::MAG);
    for (const auto& name : mag.names())
        if (name.starts_with(kLatentPrefix))
            throw ValidationError("node name " + name + " uses the reserved latent prefix");
    if (mag.bidirected_count() == 0) return build_latentized(mag, {});

    std::optional<CISet> target;
    if (mag.size() <= options.exhaustive_limit) target = ci_signature(mag);
    for (auto& spec : candidate_groupings(mag)) {
        auto candidate = build_latentized(mag, std::move(spec));
        const bool ok = target ? ci_signature(candidate.dag, mag.names()) == *target
                               : verify_ci_equivalence(candidate, options);
        if (ok) return candidate;
    }
    throw ValidationError("latentize_min: no CI-preserving latent grouping found for the MAG");
}

// MAG over `observed` induced by a DAG with the remaining nodes marginalized: two observed
// nodes are adjacent iff no observed subset separates them, oriented by DAG ancestry.
inline MixedGraph marginal_mag(const MixedGraph& dag, std::vector<std::string> observed) {
    require_valid(dag, GraphKind::DAG);
    const auto ci = ci_signature(dag, observed);
    const auto& over = ci.over();
    const auto n = over.size();
    MixedGraph mag(GraphKind::MAG, over);
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = x + 1; y < n; ++y) {
            bool separable = false;
            for (std::uint32_t z = 0; z < (1u << n) && !separable; ++z)
                if (!(z & ((1u << x) | (1u << y)))) separable = ci.separated(x, y, z);
            if (separable) continue;
            const auto dx = dag.index(over[x]);
            const auto dy = dag.index(over[y]);
            if (dag.ancestors(dy)[dx]) mag.add_directed(x, y);
            else if (dag.ancestors(dx)[dy]) mag.add_directed(y, x);
            else mag.add_bidirected(x, y);
        }
    return mag;
}

// ---------------------------------------------------------------------------
// Text form: observed node and edge lines plus `latent` lines.

inline std::string serialize_latentized(const LatentizedDag& model, const std::map<std::string, NodeDecl>& decls = {}) {
    std::string out;
    std::vector<bool> skip(model.dag.size(), false);
    for (const auto& l : model.spec.latents) skip[model.dag.index(l.name)] = true;
    for (const auto& name : model.observed()) {
        auto it = decls.find(name);
        out += serialize_node_line(it != decls.end() ? it->second : NodeDecl{name, 0, {}});
    }
    out += serialize_edges(model.dag, skip);
    for (const auto& l : model.spec.latents) {
        out += "latent " + l.name + " states " + std::to_string(l.states) + " children";
        for (const auto& c : l.children) out += " " + c;
        out += "\n";
    }
    return out;
}

inline LatentizedDag latentized_from_document(const GraphDocument& doc) {
    const auto observed = graph_from_document(doc, GraphKind::DAG);
    LatentSpec spec;
    for (const auto& line : doc.latents) {
        Latent l{line.name, line.children, line.states};
        std::sort(l.children.begin(), l.children.end());
        if (std::adjacent_find(l.children.begin(), l.children.end()) != l.children.end())
            throw ParseError(line.line, "repeated child in latent " + line.name);
        if (spec.find(l.name)) throw ParseError(line.line, "latent " + l.name + " declared twice");
        for (const auto& c : l.children)
            if (!observed.find(c)) throw ParseError(line.line, "latent " + l.name + " has unknown child " + c);
        spec.latents.push_back(std::move(l));
    }
    spec.check(observed.names());
    std::vector<std::string> names = observed.names();
    for (const auto& l : spec.latents) names.push_back(l.name);
    MixedGraph dag(GraphKind::DAG, names);
    for (const auto& e : observed.edges())
        dag.set_edge(dag.index(observed.name(e.first)), dag.index(observed.name(e.second)), e.at_first, e.at_second);
    for (const auto& l : spec.latents)
        for (const auto& c : l.children) dag.add_directed(l.name, c);
    require_valid(dag, GraphKind::DAG);
    auto mag = marginal_mag(dag, observed.names());
    return {std::move(dag), std::move(spec), std::move(mag)};
}

inline LatentizedDag parse_latentized(std::string_view text) { return latentized_from_document(parse_document(text)); }

} // namespace latconf
