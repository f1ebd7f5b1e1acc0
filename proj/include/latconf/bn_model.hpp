#pragma once

// Fully specified discrete Bayesian networks: model file format and ancestral sampling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latconf/dataset.hpp"
#include "latconf/errors.hpp"
#include "latconf/graph.hpp"
#include "latconf/graph_io.hpp"
#include "latconf/text.hpp"

namespace latconf {

struct BnModel {
    MixedGraph dag;
    std::map<std::string, NodeDecl> decls;
    // Per node, probabilities flattened as [parent config][state]; parents in canonical
    // order, first parent most significant.
    std::vector<std::vector<double>> cpts;

    int cardinality(std::size_t v) const { return decls.at(dag.name(v)).cardinality; }

    std::size_t configs(std::size_t v) const {
        std::size_t c = 1;
        for (auto p : dag.parents(v)) c *= static_cast<std::size_t>(cardinality(p));
        return c;
    }

    // Parent states of config index `config` of node v.
    std::vector<int> decode_config(std::size_t v, std::size_t config) const {
        const auto parents = dag.parents(v);
        std::vector<int> states(parents.size());
        for (std::size_t p = parents.size(); p-- > 0;) {
            const auto card = static_cast<std::size_t>(cardinality(parents[p]));
            states[p] = static_cast<int>(config % card);
            config /= card;
        }
        return states;
    }

    void check() const {
        require_valid(dag, GraphKind::DAG);
        if (cpts.size() != dag.size()) throw ValidationError("model needs one CPT per node");
        for (std::size_t v = 0; v < dag.size(); ++v) {
            const auto card = static_cast<std::size_t>(cardinality(v));
            if (cpts[v].size() != configs(v) * card) throw ValidationError("CPT of " + dag.name(v) + " has wrong size");
            for (std::size_t j = 0; j < configs(v); ++j) {
                double total = 0.0;
                for (std::size_t k = 0; k < card; ++k) {
                    const double p = cpts[v][j * card + k];
                    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("CPT of " + dag.name(v) + " has an entry outside [0,1]");
                    total += p;
                }
                if (std::abs(total - 1.0) > 1e-9) throw ValidationError("CPT row of " + dag.name(v) + " does not sum to 1");
            }
        }
    }
};

inline BnModel parse_model(std::string_view text) {
    const auto doc = parse_document(text);
    if (!doc.latents.empty()) throw ParseError(doc.latents.front().line, "latent lines are not allowed in a model file");
    BnModel model{graph_from_document(doc, GraphKind::DAG), doc.nodes, {}};
    const auto report = validate(model.dag);
    if (!report.ok()) throw ValidationError("invalid DAG: " + report.violations.front().detail);
    for (const auto& [name, decl] : model.decls)
        if (decl.cardinality == 0) throw ValidationError("node " + name + " has no declared cardinality");

    model.cpts.resize(model.dag.size());
    std::vector<std::vector<bool>> filled(model.dag.size());
    for (std::size_t v = 0; v < model.dag.size(); ++v) {
        model.cpts[v].assign(model.configs(v) * static_cast<std::size_t>(model.cardinality(v)), 0.0);
        filled[v].assign(model.configs(v), false);
    }
    for (const auto& line : doc.cpts) {
        const auto node = model.dag.find(line.node);
        if (!node) throw ParseError(line.line, "cpt for unknown node '" + line.node + "'");
        const auto parents = model.dag.parents(*node);
        if (line.parent_states.size() != parents.size())
            throw ParseError(line.line, "cpt of " + line.node + " must assign exactly its parents");
        std::size_t config = 0;
        for (auto p : parents) {
            auto it = std::find_if(line.parent_states.begin(), line.parent_states.end(),
                                   [&](const auto& a) { return a.first == model.dag.name(p); });
            if (it == line.parent_states.end())
                throw ParseError(line.line, "cpt of " + line.node + " misses parent " + model.dag.name(p));
            if (it->second >= model.cardinality(p))
                throw ParseError(line.line, "parent state exceeds cardinality of " + model.dag.name(p));
            config = config * static_cast<std::size_t>(model.cardinality(p)) + static_cast<std::size_t>(it->second);
        }
        const auto card = static_cast<std::size_t>(model.cardinality(*node));
        if (line.probabilities.size() != card)
            throw ParseError(line.line, "cpt row of " + line.node + " needs " + std::to_string(card) + " probabilities");
        if (filled[*node][config]) throw ParseError(line.line, "duplicate cpt row for " + line.node);
        filled[*node][config] = true;
        double total = 0.0;
        for (std::size_t k = 0; k < card; ++k) {
            const double p = line.probabilities[k];
            if (!(p >= 0.0 && p <= 1.0)) throw ParseError(line.line, "probability outside [0,1]");
            model.cpts[*node][config * card + k] = p;
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ParseError(line.line, "cpt row does not sum to 1");
    }
    for (std::size_t v = 0; v < model.dag.size(); ++v)
        if (std::find(filled[v].begin(), filled[v].end(), false) != filled[v].end())
            throw ValidationError("cpt of " + model.dag.name(v) + " is incomplete");
    return model;
}

inline std::string serialize_model(const BnModel& model) {
    std::string out = serialize_graph(model.dag, model.decls);
    for (std::size_t v = 0; v < model.dag.size(); ++v) {
        const auto parents = model.dag.parents(v);
        const auto card = static_cast<std::size_t>(model.cardinality(v));
        for (std::size_t j = 0; j < model.configs(v); ++j) {
            out += "cpt " + model.dag.name(v) + " |";
            const auto states = model.decode_config(v, j);
            for (std::size_t p = 0; p < parents.size(); ++p)
                out += " " + model.dag.name(parents[p]) + "=" + std::to_string(states[p]);
            out += " :";
            for (std::size_t k = 0; k < card; ++k) out += " " + text::format_double(model.cpts[v][j * card + k]);
            out += "\n";
        }
    }
    return out;
}

// n i.i.d. rows by ancestral sampling; columns of `hide` nodes are dropped.
inline Dataset forward_sample(const BnModel& model, std::size_t n, std::uint64_t seed,
                              const std::set<std::string>& hide = {}) {
    model.check();
    if (n == 0) throw ValidationError("sample size must be positive");
    for (const auto& h : hide)
        if (!model.dag.find(h)) throw ValidationError("cannot hide unknown node '" + h + "'");

    std::vector<std::size_t> order;
    {
        std::vector<std::size_t> pending(model.dag.size());
        for (std::size_t v = 0; v < model.dag.size(); ++v) pending[v] = model.dag.parents(v).size();
        std::vector<bool> done(model.dag.size(), false);
        while (order.size() < model.dag.size())
            for (std::size_t v = 0; v < model.dag.size(); ++v)
                if (!done[v] && pending[v] == 0) {
                    done[v] = true;
                    order.push_back(v);
                    for (auto c : model.dag.children(v)) --pending[c];
                }
    }
    std::vector<std::vector<std::size_t>> parents(model.dag.size());
    for (std::size_t v = 0; v < model.dag.size(); ++v) parents[v] = model.dag.parents(v);

    std::vector<Variable> vars;
    std::vector<std::size_t> kept;
    for (std::size_t v = 0; v < model.dag.size(); ++v) {
        if (hide.count(model.dag.name(v))) continue;
        const auto& decl = model.decls.at(model.dag.name(v));
        vars.push_back({decl.name, decl.cardinality, decl.labels});
        kept.push_back(v);
    }
    if (vars.empty()) throw ValidationError("every node is hidden");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<int> row(model.dag.size());
    std::vector<int> cells;
    cells.reserve(n * kept.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (auto v : order) {
            std::size_t config = 0;
            for (auto p : parents[v]) config = config * static_cast<std::size_t>(model.cardinality(p)) + static_cast<std::size_t>(row[p]);
            const auto card = static_cast<std::size_t>(model.cardinality(v));
            const double* probs = model.cpts[v].data() + config * card;
            const double u = unit(rng);
            double cum = 0.0;
            int state = -1;
            for (std::size_t k = 0; k < card; ++k) {
                if (probs[k] <= 0.0) continue;
                cum += probs[k];
                state = static_cast<int>(k);
                if (u < cum) break;
            }
            row[v] = state;
        }
        for (auto v : kept) cells.push_back(row[v]);
    }
    return Dataset(std::move(vars), std::move(cells));
}

} // namespace latconf
