#pragma once

// The MAG space behind a PAG: enumeration of its Markov-equivalent MAGs by
// bi-directed-edge count, a deterministic representative MAG, and single-mark
// orientation moves for hill-climbing.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latconf/errors.hpp"
#include "latconf/graph.hpp"

namespace latconf {

inline constexpr std::size_t kDefaultEnumerationLimit = 100000;

struct MagStratum {
    std::size_t bidirected_count = 0;
    std::vector<MixedGraph> mags;
};

// Flip of one endpoint mark: the mark at `second` when `at_second`, else at `first`.
struct OrientationMove {
    std::size_t first;
    std::size_t second;
    bool at_second;
    Mark new_mark;

    friend bool operator==(const OrientationMove&, const OrientationMove&) = default;
};

namespace detail {

// Endpoints carrying a circle, as (other end, circled end) pairs in canonical edge order.
inline std::vector<std::pair<std::size_t, std::size_t>> circle_endpoints(const MixedGraph& pag) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& e : pag.edges()) {
        if (e.at_first == Mark::Circle) out.emplace_back(e.second, e.first);
        if (e.at_second == Mark::Circle) out.emplace_back(e.first, e.second);
    }
    return out;
}

// Maximum cardinality search over the o-o subgraph; lowest index wins ties.
inline std::vector<std::size_t> circle_component_order(const MixedGraph& g) {
    const auto n = g.size();
    auto circle_edge = [&](std::size_t u, std::size_t v) {
        return g.adjacent(u, v) && g.mark(u, v) == Mark::Circle && g.mark(v, u) == Mark::Circle;
    };
    std::vector<std::size_t> position(n, n);
    std::vector<std::size_t> weight(n, 0);
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t pick = n;
        for (std::size_t v = 0; v < n; ++v)
            if (position[v] == n && (pick == n || weight[v] > weight[pick])) pick = v;
        position[pick] = step;
        for (std::size_t v = 0; v < n; ++v)
            if (position[v] == n && circle_edge(pick, v)) ++weight[v];
    }
    return position;
}

} // namespace detail

// One MAG of the PAG's equivalence class: `o->` becomes `-->`, and the o-o component
// is oriented along a maximum-cardinality-search order, which adds no unshielded
// colliders on a chordal circle component.
inline MixedGraph reference_mag(const MixedGraph& pag) {
    require_valid(pag, GraphKind::PAG);
    auto mag = pag.with_kind(GraphKind::MAG);
    const auto position = detail::circle_component_order(pag);
    for (const auto& e : pag.edges()) {
        const bool c1 = e.at_first == Mark::Circle;
        const bool c2 = e.at_second == Mark::Circle;
        if (c1 && c2) {
            if (position[e.first] < position[e.second]) mag.add_directed(e.first, e.second);
            else mag.add_directed(e.second, e.first);
        } else if (c1) {
            mag.set_mark(e.second, e.first, e.at_second == Mark::Arrow ? Mark::Tail : Mark::Arrow);
        } else if (c2) {
            mag.set_mark(e.first, e.second, e.at_first == Mark::Arrow ? Mark::Tail : Mark::Arrow);
        }
    }
    const auto report = validate(mag);
    if (!report.ok())
        throw ValidationError("reference_mag: cannot orient PAG into a MAG, blocked at " + report.violations.front().detail);
    return mag;
}

// Every orientation of the PAG's circle marks that is a valid MAG Markov-equivalent to
// reference_mag(pag), grouped into strata of ascending bi-directed count.
inline std::vector<MagStratum> enumerate_mags(const MixedGraph& pag,
                                              std::optional<std::size_t> limit = kDefaultEnumerationLimit) {
    const auto reference = reference_mag(pag);
    const auto circles = detail::circle_endpoints(pag);
    if (circles.size() >= 40) throw LimitExceeded(SIZE_MAX, limit.value_or(SIZE_MAX));
    const std::size_t candidates = std::size_t{1} << circles.size();
    if (limit && candidates > *limit) throw LimitExceeded(candidates, *limit);

    const auto reference_ci = ci_signature(reference);
    std::map<std::size_t, std::vector<MixedGraph>> strata;
    auto base = pag.with_kind(GraphKind::MAG);
    for (std::size_t mask = 0; mask < candidates; ++mask) {
        auto mag = base;
        bool undirected = false;
        for (std::size_t k = 0; k < circles.size(); ++k) {
            const auto [other, end] = circles[k];
            mag.set_mark(other, end, (mask >> k) & 1u ? Mark::Arrow : Mark::Tail);
        }
        for (const auto& [other, end] : circles)
            if (mag.mark(other, end) == Mark::Tail && mag.mark(end, other) == Mark::Tail) undirected = true;
        if (undirected || !validate(mag).ok()) continue;
        if (ci_signature(mag) != reference_ci) continue;
        strata[mag.bidirected_count()].push_back(std::move(mag));
    }
    if (strata.empty()) throw ValidationError("enumerate_mags: no valid orientation of the PAG");

    std::vector<MagStratum> out;
    for (auto& [count, mags] : strata) out.push_back({count, std::move(mags)});
    return out;
}

// Brute-force PAG of a MAG: orient every skeleton edge as ->, <- or <->, keep the
// Markov-equivalent MAGs, and circle each endpoint that is not invariant across them.
// Exponential in the edge count; meant for desk-scale ground truths.
inline MixedGraph pag_of_mag(const MixedGraph& mag, std::optional<std::size_t> limit = kDefaultEnumerationLimit) {
    require_valid(mag, GraphKind::MAG);
    const auto edges = mag.edges();
    std::size_t candidates = 1;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (candidates > SIZE_MAX / 3) throw LimitExceeded(SIZE_MAX, limit.value_or(SIZE_MAX));
        candidates *= 3;
    }
    if (limit && candidates > *limit) throw LimitExceeded(candidates, *limit);

    const auto target = ci_signature(mag);
    static constexpr std::pair<Mark, Mark> kOrientations[] = {
        {Mark::Tail, Mark::Arrow}, {Mark::Arrow, Mark::Tail}, {Mark::Arrow, Mark::Arrow}};
    std::vector<std::uint8_t> seen_first(edges.size(), 0), seen_second(edges.size(), 0);
    for (std::size_t code = 0; code < candidates; ++code) {
        auto g = mag;
        auto rest = code;
        for (const auto& e : edges) {
            const auto& [a, b] = kOrientations[rest % 3];
            rest /= 3;
            g.set_edge(e.first, e.second, a, b);
        }
        if (!validate(g).ok() || ci_signature(g) != target) continue;
        for (std::size_t k = 0; k < edges.size(); ++k) {
            seen_first[k] |= std::uint8_t{1} << static_cast<int>(g.mark(edges[k].second, edges[k].first));
            seen_second[k] |= std::uint8_t{1} << static_cast<int>(g.mark(edges[k].first, edges[k].second));
        }
    }
    auto pag = mag.with_kind(GraphKind::PAG);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        auto pick = [](std::uint8_t seen, Mark own) {
            return (seen & (seen - 1)) ? Mark::Circle : own;
        };
        pag.set_edge(edges[k].first, edges[k].second, pick(seen_first[k], edges[k].at_first),
                     pick(seen_second[k], edges[k].at_second));
    }
    return pag;
}

// Valid MAGs one endpoint flip away from `current`, restricted to endpoints that are
// circles in the PAG. No Markov-equivalence filtering.
inline std::vector<std::pair<OrientationMove, MixedGraph>> orientation_neighbors(const MixedGraph& current,
                                                                                 const MixedGraph& pag) {
    if (current.names() != pag.names()) throw ValidationError("orientation_neighbors: node sets differ");
    std::vector<std::pair<OrientationMove, MixedGraph>> out;
    for (const auto& e : pag.edges()) {
        for (const bool at_second : {false, true}) {
            if ((at_second ? e.at_second : e.at_first) != Mark::Circle) continue;
            const auto end = at_second ? e.second : e.first;
            const auto other = at_second ? e.first : e.second;
            const auto flipped = current.mark(other, end) == Mark::Arrow ? Mark::Tail : Mark::Arrow;
            auto g = current;
            g.set_mark(other, end, flipped);
            if (!validate(g).ok()) continue;
            out.emplace_back(OrientationMove{e.first, e.second, at_second, flipped}, std::move(g));
        }
    }
    return out;
}

} // namespace latconf
