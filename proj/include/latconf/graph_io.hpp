#pragma once

// Line-oriented graph text format:
//
//   # comment
//   node A 2                 name, cardinality, optional state labels
//   node B 3 low mid high
//   A --> B                  also <--, <->, o->, <-o, o-o
//   latent _L1 states 2 children X Y
//   cpt B | A=0 : 0.2 0.8    (model files only)
//
// Serialization is canonical: nodes sorted by name, edges in index order.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "latconf/errors.hpp"
#include "latconf/graph.hpp"
#include "latconf/text.hpp"

namespace latconf {

struct NodeDecl {
    std::string name;
    int cardinality = 0; // 0 when undeclared
    std::vector<std::string> labels;

    friend bool operator==(const NodeDecl&, const NodeDecl&) = default;
};

struct EdgeLine {
    std::string first;
    std::string second;
    Mark at_first;
    Mark at_second;
    std::size_t line;
};

struct LatentLine {
    std::string name;
    int states;
    std::vector<std::string> children;
    std::size_t line;
};

struct CptLine {
    std::string node;
    std::vector<std::pair<std::string, int>> parent_states;
    std::vector<double> probabilities;
    std::size_t line;
};

// Everything a graph/model file can contain, before it is bound to a graph kind.
struct GraphDocument {
    std::map<std::string, NodeDecl> nodes; // declared and implied
    std::vector<EdgeLine> edges;
    std::vector<LatentLine> latents;
    std::vector<CptLine> cpts;
};

namespace detail {

inline std::optional<std::pair<Mark, Mark>> parse_edge_token(std::string_view tok) {
    if (tok.size() != 3 || tok[1] != '-') return std::nullopt;
    std::optional<Mark> left, right;
    switch (tok[0]) {
    case '<': left = Mark::Arrow; break;
    case 'o': left = Mark::Circle; break;
    case '-': left = Mark::Tail; break;
    default: break;
    }
    switch (tok[2]) {
    case '>': right = Mark::Arrow; break;
    case 'o': right = Mark::Circle; break;
    case '-': right = Mark::Tail; break;
    default: break;
    }
    if (!left || !right) return std::nullopt;
    return std::pair{*left, *right};
}

inline std::string edge_token(Mark at_first, Mark at_second) {
    std::string tok = "?-?";
    tok[0] = at_first == Mark::Arrow ? '<' : at_first == Mark::Circle ? 'o' : '-';
    tok[2] = at_second == Mark::Arrow ? '>' : at_second == Mark::Circle ? 'o' : '-';
    return tok;
}

inline void check_name(std::string_view name, std::size_t line) {
    if (name.empty()) throw ParseError(line, "empty node name");
    for (char c : name)
        if (c == ',' || c == '=' || c == '|' || c == ':' || c == '#')
            throw ParseError(line, "node name '" + std::string(name) + "' contains a reserved character");
}

} // namespace detail

inline GraphDocument parse_document(std::string_view text) {
    GraphDocument doc;
    auto imply = [&](const std::string& name, std::size_t line) {
        detail::check_name(name, line);
        doc.nodes.try_emplace(name, NodeDecl{name, 0, {}});
    };

    std::size_t line_no = 0;
    for (auto raw : text::lines(text)) {
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto tok = text::tokens(line);

        if (tok[0] == "node") {
            if (tok.size() < 2) throw ParseError(line_no, "expected 'node <name> [cardinality [labels...]]'");
            NodeDecl decl{std::string(tok[1]), 0, {}};
            detail::check_name(decl.name, line_no);
            if (tok.size() >= 3) {
                const auto card = text::parse_int<int>(tok[2]);
                if (!card || *card < 2) throw ParseError(line_no, "cardinality must be an integer >= 2");
                decl.cardinality = *card;
                for (std::size_t k = 3; k < tok.size(); ++k) decl.labels.emplace_back(tok[k]);
                if (!decl.labels.empty() && decl.labels.size() != static_cast<std::size_t>(*card))
                    throw ParseError(line_no, "label count does not match cardinality");
            }
            auto [it, inserted] = doc.nodes.try_emplace(decl.name, decl);
            if (!inserted) {
                if (it->second.cardinality != 0) throw ParseError(line_no, "node '" + decl.name + "' declared twice");
                it->second = decl;
            }
        } else if (tok[0] == "latent") {
            // latent <name> states <k> children <c1> <c2> ...
            if (tok.size() < 6 || tok[2] != "states" || tok[4] != "children")
                throw ParseError(line_no, "expected 'latent <name> states <k> children <c1> <c2> ...'");
            const auto states = text::parse_int<int>(tok[3]);
            if (!states || *states < 2) throw ParseError(line_no, "latent state count must be an integer >= 2");
            LatentLine lat{std::string(tok[1]), *states, {}, line_no};
            detail::check_name(lat.name, line_no);
            for (std::size_t k = 5; k < tok.size(); ++k) lat.children.emplace_back(tok[k]);
            if (lat.children.size() < 2) throw ParseError(line_no, "a latent needs at least two children");
            doc.latents.push_back(std::move(lat));
        } else if (tok[0] == "cpt") {
            // cpt <node> | <p>=<s> ... : <prob> ...
            const auto bar = line.find('|');
            const auto colon = line.find(':');
            if (tok.size() < 2 || bar == std::string_view::npos || colon == std::string_view::npos || colon < bar)
                throw ParseError(line_no, "expected 'cpt <node> | <parent>=<state> ... : <p1> <p2> ...'");
            CptLine cpt{std::string(tok[1]), {}, {}, line_no};
            if (text::trim(line.substr(3, bar - 3)) != tok[1]) throw ParseError(line_no, "malformed cpt head");
            for (auto assign : text::tokens(line.substr(bar + 1, colon - bar - 1))) {
                const auto eq = assign.find('=');
                if (eq == std::string_view::npos) throw ParseError(line_no, "parent assignment needs '='");
                const auto state = text::parse_int<int>(assign.substr(eq + 1));
                if (!state || *state < 0) throw ParseError(line_no, "parent state must be a non-negative integer");
                cpt.parent_states.emplace_back(std::string(assign.substr(0, eq)), *state);
            }
            for (auto p : text::tokens(line.substr(colon + 1))) {
                const auto v = text::parse_double(p);
                if (!v) throw ParseError(line_no, "probability '" + std::string(p) + "' is not a number");
                cpt.probabilities.push_back(*v);
            }
            doc.cpts.push_back(std::move(cpt));
        } else {
            if (tok.size() != 3) throw ParseError(line_no, "expected '<node> <mark> <node>'");
            const auto marks = detail::parse_edge_token(tok[1]);
            if (!marks) throw ParseError(line_no, "malformed edge token '" + std::string(tok[1]) + "'");
            if (marks->first == Mark::Tail && marks->second == Mark::Tail)
                throw ParseError(line_no, "undirected edges (selection variables) are not supported");
            if (tok[0] == tok[2]) throw ParseError(line_no, "self-loop");
            EdgeLine e{std::string(tok[0]), std::string(tok[2]), marks->first, marks->second, line_no};
            imply(e.first, line_no);
            imply(e.second, line_no);
            doc.edges.push_back(std::move(e));
        }
    }
    return doc;
}

// Builds the observed graph from a document's node and edge lines. Latent and cpt
// lines are interpreted by the callers that need them.
inline MixedGraph graph_from_document(const GraphDocument& doc, GraphKind kind) {
    std::vector<std::string> names;
    for (const auto& [name, decl] : doc.nodes) names.push_back(name);
    MixedGraph g(kind, names);
    for (const auto& e : doc.edges) {
        const auto u = g.index(e.first);
        const auto v = g.index(e.second);
        if (g.adjacent(u, v)) throw ParseError(e.line, "second edge between " + e.first + " and " + e.second);
        if (kind != GraphKind::PAG && (e.at_first == Mark::Circle || e.at_second == Mark::Circle))
            throw ParseError(e.line, "circle marks are only allowed in a PAG");
        g.set_edge(u, v, e.at_first, e.at_second);
    }
    return g;
}

inline MixedGraph parse_graph(std::string_view text, GraphKind kind) {
    auto g = graph_from_document(parse_document(text), kind);
    const auto report = validate(g);
    if (!report.ok()) throw ValidationError("invalid " + std::string(to_string(kind)) + ": " + report.violations.front().detail);
    return g;
}

inline MixedGraph parse_pag(std::string_view text) { return parse_graph(text, GraphKind::PAG); }

inline std::string serialize_node_line(const NodeDecl& d) {
    std::string out = "node " + d.name;
    if (d.cardinality > 0) out += " " + std::to_string(d.cardinality);
    for (const auto& l : d.labels) out += " " + l;
    return out + "\n";
}

// Canonical edge lines; nodes in `skip` (e.g. latents written separately) are left out.
inline std::string serialize_edges(const MixedGraph& g, const std::vector<bool>& skip = {}) {
    std::string out;
    for (const auto& e : g.edges()) {
        if (!skip.empty() && (skip[e.first] || skip[e.second])) continue;
        out += g.name(e.first) + " " + detail::edge_token(e.at_first, e.at_second) + " " + g.name(e.second) + "\n";
    }
    return out;
}

// `decls` supplies cardinalities/labels where known; every graph node gets a node line.
inline std::string serialize_graph(const MixedGraph& g, const std::map<std::string, NodeDecl>& decls = {}) {
    std::string out;
    for (const auto& name : g.names()) {
        auto it = decls.find(name);
        out += serialize_node_line(it != decls.end() ? it->second : NodeDecl{name, 0, {}});
    }
    return out + serialize_edges(g);
}

} // namespace latconf
