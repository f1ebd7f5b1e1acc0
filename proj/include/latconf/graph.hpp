#pragma once

// Mixed graphs (DAG / MAG / PAG), validity checks, m-/d-separation and
// conditional-independence signatures.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latconf/errors.hpp"

namespace latconf {

enum class Mark : std::uint8_t { Tail, Arrow, Circle };

enum class GraphKind : std::uint8_t { DAG, MAG, PAG };

inline std::string_view to_string(GraphKind kind) {
    switch (kind) {
    case GraphKind::DAG: return "DAG";
    case GraphKind::MAG: return "MAG";
    case GraphKind::PAG: return "PAG";
    }
    return "?";
}

// One edge in canonical orientation: `first` < `second` by node index.
struct Edge {
    std::size_t first;
    std::size_t second;
    Mark at_first;
    Mark at_second;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Nodes are kept sorted by name, so two graphs over the same names share
// indices and compare by value.
class MixedGraph {
public:
    MixedGraph() = default;

    MixedGraph(GraphKind kind, std::vector<std::string> names) : kind_(kind), names_(std::move(names)) {
        std::sort(names_.begin(), names_.end());
        if (std::adjacent_find(names_.begin(), names_.end()) != names_.end())
            throw ValidationError("duplicate node name in graph");
        for (const auto& n : names_)
            if (n.empty()) throw ValidationError("empty node name");
        marks_.assign(names_.size() * names_.size(), kNoEdge);
    }

    GraphKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::string& name(std::size_t v) const { return names_.at(v); }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = std::lower_bound(names_.begin(), names_.end(), name);
        if (it == names_.end() || *it != name) return std::nullopt;
        return static_cast<std::size_t>(it - names_.begin());
    }

    std::size_t index(std::string_view name) const {
        if (auto i = find(name)) return *i;
        throw ValidationError("unknown node '" + std::string(name) + "'");
    }

    MixedGraph with_kind(GraphKind kind) const {
        MixedGraph g = *this;
        g.kind_ = kind;
        return g;
    }

    bool adjacent(std::size_t u, std::size_t v) const { return raw(u, v) != kNoEdge; }

    // Mark at endpoint `v` of the edge u–v.
    Mark mark(std::size_t u, std::size_t v) const {
        const auto m = raw(u, v);
        if (m == kNoEdge) throw ValidationError("no edge " + names_[u] + " - " + names_[v]);
        return static_cast<Mark>(m - 1);
    }

    void set_edge(std::size_t u, std::size_t v, Mark at_u, Mark at_v) {
        if (u == v) throw ValidationError("self-loop on '" + names_.at(u) + "'");
        check_index(u);
        check_index(v);
        marks_[v * size() + u] = static_cast<std::uint8_t>(static_cast<int>(at_u) + 1);
        marks_[u * size() + v] = static_cast<std::uint8_t>(static_cast<int>(at_v) + 1);
    }

    void set_mark(std::size_t u, std::size_t v, Mark at_v) {
        if (!adjacent(u, v)) throw ValidationError("no edge " + names_[u] + " - " + names_[v]);
        marks_[u * size() + v] = static_cast<std::uint8_t>(static_cast<int>(at_v) + 1);
    }

    void remove_edge(std::size_t u, std::size_t v) {
        marks_[u * size() + v] = kNoEdge;
        marks_[v * size() + u] = kNoEdge;
    }

    void add_directed(std::size_t from, std::size_t to) { set_edge(from, to, Mark::Tail, Mark::Arrow); }
    void add_bidirected(std::size_t u, std::size_t v) { set_edge(u, v, Mark::Arrow, Mark::Arrow); }
    void add_directed(std::string_view from, std::string_view to) { add_directed(index(from), index(to)); }
    void add_bidirected(std::string_view u, std::string_view v) { add_bidirected(index(u), index(v)); }

    bool is_directed(std::size_t from, std::size_t to) const {
        return adjacent(from, to) && mark(from, to) == Mark::Arrow && mark(to, from) == Mark::Tail;
    }
    bool is_bidirected(std::size_t u, std::size_t v) const {
        return adjacent(u, v) && mark(u, v) == Mark::Arrow && mark(v, u) == Mark::Arrow;
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (std::size_t u = 0; u < size(); ++u)
            for (std::size_t v = u + 1; v < size(); ++v)
                if (adjacent(u, v)) out.push_back({u, v, mark(v, u), mark(u, v)});
        return out;
    }

    std::vector<std::size_t> neighbors(std::size_t v) const {
        std::vector<std::size_t> out;
        for (std::size_t u = 0; u < size(); ++u)
            if (adjacent(v, u)) out.push_back(u);
        return out;
    }

    std::vector<std::size_t> parents(std::size_t v) const {
        std::vector<std::size_t> out;
        for (std::size_t u = 0; u < size(); ++u)
            if (is_directed(u, v)) out.push_back(u);
        return out;
    }

    std::vector<std::size_t> children(std::size_t v) const {
        std::vector<std::size_t> out;
        for (std::size_t u = 0; u < size(); ++u)
            if (is_directed(v, u)) out.push_back(u);
        return out;
    }

    std::size_t bidirected_count() const {
        std::size_t n = 0;
        for (const auto& e : edges())
            if (e.at_first == Mark::Arrow && e.at_second == Mark::Arrow) ++n;
        return n;
    }

    std::size_t circle_count() const {
        std::size_t n = 0;
        for (const auto& e : edges()) n += (e.at_first == Mark::Circle) + (e.at_second == Mark::Circle);
        return n;
    }

    // Proper ancestors of `v` through directed edges only; bi-directed edges carry no ancestry.
    std::vector<bool> ancestors(std::size_t v) const {
        std::vector<bool> seen(size(), false);
        std::vector<std::size_t> stack{v};
        while (!stack.empty()) {
            const auto w = stack.back();
            stack.pop_back();
            for (std::size_t u = 0; u < size(); ++u)
                if (!seen[u] && is_directed(u, w)) {
                    seen[u] = true;
                    stack.push_back(u);
                }
        }
        return seen;
    }

    std::vector<bool> descendants(std::size_t v) const {
        std::vector<bool> seen(size(), false);
        std::vector<std::size_t> stack{v};
        while (!stack.empty()) {
            const auto w = stack.back();
            stack.pop_back();
            for (std::size_t u = 0; u < size(); ++u)
                if (!seen[u] && is_directed(w, u)) {
                    seen[u] = true;
                    stack.push_back(u);
                }
        }
        return seen;
    }

    friend bool operator==(const MixedGraph&, const MixedGraph&) = default;

private:
    static constexpr std::uint8_t kNoEdge = 0;

    std::uint8_t raw(std::size_t u, std::size_t v) const { return marks_[u * size() + v]; }

    void check_index(std::size_t v) const {
        if (v >= size()) throw ValidationError("node index out of range");
    }

    GraphKind kind_ = GraphKind::DAG;
    std::vector<std::string> names_;
    // marks_[u * n + v] holds 1 + mark at v on edge u–v, 0 when absent.
    std::vector<std::uint8_t> marks_;
};

// ---------------------------------------------------------------------------
// Validity

struct Violation {
    enum class Code {
        CircleMark,          // circle mark in a DAG or MAG
        UndirectedEdge,      // tail–tail edge (selection variables are unsupported)
        BidirectedInDag,
        DirectedCycle,
        AlmostDirectedCycle, // A<->B with A an ancestor of B or vice versa
    };
    Code code;
    std::string detail;
};

struct ValidityReport {
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
    bool has(Violation::Code code) const {
        return std::any_of(violations.begin(), violations.end(), [&](const auto& v) { return v.code == code; });
    }
};

namespace detail {

inline std::string edge_text(const MixedGraph& g, const Edge& e) {
    auto left = [](Mark m) { return m == Mark::Arrow ? "<" : m == Mark::Circle ? "o" : "-"; };
    auto right = [](Mark m) { return m == Mark::Arrow ? ">" : m == Mark::Circle ? "o" : "-"; };
    return g.name(e.first) + " " + left(e.at_first) + "-" + right(e.at_second) + " " + g.name(e.second);
}

// Kahn's algorithm over the directed (tail->arrow) edges; returns nodes left on a cycle.
inline std::vector<std::size_t> directed_cycle_nodes(const MixedGraph& g) {
    const auto n = g.size();
    std::vector<std::size_t> indegree(n, 0);
    for (std::size_t v = 0; v < n; ++v) indegree[v] = g.parents(v).size();
    std::deque<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    std::vector<bool> done(n, false);
    while (!ready.empty()) {
        const auto v = ready.front();
        ready.pop_front();
        done[v] = true;
        for (auto c : g.children(v))
            if (--indegree[c] == 0) ready.push_back(c);
    }
    std::vector<std::size_t> left;
    for (std::size_t v = 0; v < n; ++v)
        if (!done[v]) left.push_back(v);
    return left;
}

} // namespace detail

inline ValidityReport validate(const MixedGraph& g) {
    ValidityReport report;
    auto add = [&](Violation::Code code, std::string detail) { report.violations.push_back({code, std::move(detail)}); };

    for (const auto& e : g.edges()) {
        const bool circle = e.at_first == Mark::Circle || e.at_second == Mark::Circle;
        if (circle && g.kind() != GraphKind::PAG) add(Violation::Code::CircleMark, detail::edge_text(g, e));
        if (e.at_first == Mark::Tail && e.at_second == Mark::Tail)
            add(Violation::Code::UndirectedEdge, detail::edge_text(g, e));
        if (g.kind() == GraphKind::DAG && e.at_first == Mark::Arrow && e.at_second == Mark::Arrow)
            add(Violation::Code::BidirectedInDag, detail::edge_text(g, e));
    }

    const auto cyclic = detail::directed_cycle_nodes(g);
    if (!cyclic.empty()) {
        std::string nodes;
        for (auto v : cyclic) nodes += (nodes.empty() ? "" : " ") + g.name(v);
        add(Violation::Code::DirectedCycle, "nodes on or downstream of a directed cycle: " + nodes);
    } else if (g.kind() == GraphKind::MAG) {
        for (const auto& e : g.edges()) {
            if (e.at_first != Mark::Arrow || e.at_second != Mark::Arrow) continue;
            if (g.ancestors(e.second)[e.first] || g.ancestors(e.first)[e.second])
                add(Violation::Code::AlmostDirectedCycle, detail::edge_text(g, e));
        }
    }
    return report;
}

inline void require_valid(const MixedGraph& g, GraphKind expected) {
    if (g.kind() != expected)
        throw ValidationError("expected a " + std::string(to_string(expected)) + ", got a " +
                              std::string(to_string(g.kind())));
    const auto report = validate(g);
    if (!report.ok())
        throw ValidationError("invalid " + std::string(to_string(expected)) + ": " + report.violations.front().detail);
}

// ---------------------------------------------------------------------------
// Separation

struct SeparationQuery {
    std::string x;
    std::string y;
    std::vector<std::string> z;
};

// Nodes reachable from `x` by an m-connecting walk given the conditioning set `in_z`.
// Walk states are (node, entered through an arrowhead). A node is passable as a
// collider iff it is in Z and as a non-collider iff it is not; this walk rule is
// equivalent to path-based m-/d-separation.
inline std::vector<bool> connected_from(const MixedGraph& g, std::size_t x, const std::vector<bool>& in_z) {
    const auto n = g.size();
    std::vector<bool> reached(n, false);
    std::vector<std::uint8_t> visited(2 * n, 0);
    std::vector<std::pair<std::size_t, bool>> stack;
    for (std::size_t w = 0; w < n; ++w) {
        if (!g.adjacent(x, w)) continue;
        const bool arrow = g.mark(x, w) == Mark::Arrow;
        if (!visited[2 * w + arrow]) {
            visited[2 * w + arrow] = 1;
            stack.emplace_back(w, arrow);
        }
    }
    while (!stack.empty()) {
        const auto [v, arrived_arrow] = stack.back();
        stack.pop_back();
        reached[v] = true;
        for (std::size_t w = 0; w < n; ++w) {
            if (!g.adjacent(v, w)) continue;
            const bool collider = arrived_arrow && g.mark(w, v) == Mark::Arrow;
            if (collider != static_cast<bool>(in_z[v])) continue;
            const bool arrow = g.mark(v, w) == Mark::Arrow;
            if (!visited[2 * w + arrow]) {
                visited[2 * w + arrow] = 1;
                stack.emplace_back(w, arrow);
            }
        }
    }
    return reached;
}

namespace detail {

inline bool separated_unchecked(const MixedGraph& g, const SeparationQuery& q) {
    const auto x = g.index(q.x);
    const auto y = g.index(q.y);
    if (x == y) throw ValidationError("separation query needs distinct endpoints");
    std::vector<bool> in_z(g.size(), false);
    for (const auto& name : q.z) in_z[g.index(name)] = true;
    if (in_z[x] || in_z[y]) throw ValidationError("separation endpoints may not be conditioned on");
    return !connected_from(g, x, in_z)[y];
}

} // namespace detail

inline bool d_separated(const MixedGraph& dag, const SeparationQuery& q) {
    if (dag.kind() != GraphKind::DAG) throw ValidationError("d_separated needs a DAG");
    return detail::separated_unchecked(dag, q);
}

inline bool m_separated(const MixedGraph& mag, const SeparationQuery& q) {
    if (mag.kind() == GraphKind::PAG) throw ValidationError("m_separated needs a MAG");
    return detail::separated_unchecked(mag, q);
}

// All separation statements (x, y | z) among the nodes of `over`, with z ranging over
// subsets of the remaining `over` nodes. Other graph nodes are marginalized: paths may
// traverse them but they are never conditioned on.
class CISet {
public:
    static constexpr std::size_t kMaxNodes = 16;

    CISet() = default;
    CISet(std::vector<std::string> over, std::vector<bool> bits) : over_(std::move(over)), bits_(std::move(bits)) {}

    const std::vector<std::string>& over() const noexcept { return over_; }

    // Position of (x, y, z) in the bit vector; x < y are indices into over(), z a bitmask over over().
    static std::size_t slot(std::size_t n, std::size_t x, std::size_t y, std::uint32_t z) {
        return (x * n + y) * (std::size_t{1} << n) + z;
    }

    bool separated(std::size_t x, std::size_t y, std::uint32_t z) const {
        if (x > y) std::swap(x, y);
        return bits_[slot(over_.size(), x, y, z)];
    }

    std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

    // First statement on which the two sets disagree, if any.
    std::optional<SeparationQuery> first_difference(const CISet& other) const {
        if (over_ != other.over_) return SeparationQuery{};
        const auto n = over_.size();
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = x + 1; y < n; ++y)
                for (std::uint32_t z = 0; z < (1u << n); ++z) {
                    if (z & ((1u << x) | (1u << y))) continue;
                    const auto s = slot(n, x, y, z);
                    if (bits_[s] == other.bits_[s]) continue;
                    SeparationQuery q{over_[x], over_[y], {}};
                    for (std::size_t k = 0; k < n; ++k)
                        if (z & (1u << k)) q.z.push_back(over_[k]);
                    return q;
                }
        return std::nullopt;
    }

    friend bool operator==(const CISet&, const CISet&) = default;

private:
    std::vector<std::string> over_;
    std::vector<bool> bits_;
};

inline CISet ci_signature(const MixedGraph& g, std::vector<std::string> over) {
    if (g.kind() == GraphKind::PAG) throw ValidationError("ci_signature needs a DAG or MAG");
    std::sort(over.begin(), over.end());
    over.erase(std::unique(over.begin(), over.end()), over.end());
    const auto n = over.size();
    if (n > CISet::kMaxNodes)
        throw GuardExceeded("ci_signature over " + std::to_string(n) + " nodes exceeds the limit of " +
                            std::to_string(CISet::kMaxNodes));
    std::vector<std::size_t> at(n);
    for (std::size_t k = 0; k < n; ++k) at[k] = g.index(over[k]);

    std::vector<bool> bits(n * n * (std::size_t{1} << n), false);
    std::vector<bool> in_z(g.size(), false);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::uint32_t z = 0; z < (1u << n); ++z) {
            if (z & (1u << x)) continue;
            for (std::size_t k = 0; k < n; ++k) in_z[at[k]] = (z >> k) & 1u;
            const auto reached = connected_from(g, at[x], in_z);
            for (std::size_t y = x + 1; y < n; ++y) {
                if (z & (1u << y)) continue;
                bits[CISet::slot(n, x, y, z)] = !reached[at[y]];
            }
        }
    }
    return CISet(std::move(over), std::move(bits));
}

inline CISet ci_signature(const MixedGraph& g) { return ci_signature(g, g.names()); }

inline bool markov_equivalent(const MixedGraph& a, const MixedGraph& b) {
    if (a.names() != b.names()) throw ValidationError("markov_equivalent: node sets differ");
    return ci_signature(a) == ci_signature(b);
}

} // namespace latconf
