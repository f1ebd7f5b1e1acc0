#include <gtest/gtest.h>

#include <random>
#include <set>

#include "latconf/graph_io.hpp"
#include "latconf/mag_space.hpp"
#include "oracles.hpp"

using namespace latconf;

namespace {

std::set<std::string> as_text(const std::vector<MixedGraph>& graphs) {
    std::set<std::string> out;
    for (const auto& g : graphs) out.insert(serialize_graph(g));
    return out;
}

std::vector<MixedGraph> flatten(const std::vector<MagStratum>& strata) {
    std::vector<MixedGraph> out;
    for (const auto& s : strata) out.insert(out.end(), s.mags.begin(), s.mags.end());
    return out;
}

// Maximal MAGs from random DAGs over X1..Xn with up to two hidden confounders.
MixedGraph random_maximal_mag(std::size_t n, std::mt19937_64& rng) {
    const auto dag = oracle::random_dag_with_latents(n, rng() % 3, 0.35, rng);
    std::vector<std::size_t> observed;
    for (std::size_t v = 0; v < dag.size(); ++v)
        if (dag.name(v)[0] == 'X') observed.push_back(v);
    return oracle::marginal_mag(dag, observed);
}

} // namespace

TEST(EnumerateMags, CircleCircleGivesThreeMags) {
    const auto pag = parse_pag("A o-o B\n");
    const auto strata = enumerate_mags(pag);
    ASSERT_EQ(strata.size(), 2u);
    EXPECT_EQ(strata[0].bidirected_count, 0u);
    EXPECT_EQ(strata[0].mags.size(), 2u);
    EXPECT_EQ(strata[1].bidirected_count, 1u);
    ASSERT_EQ(strata[1].mags.size(), 1u);
    EXPECT_TRUE(strata[1].mags[0].is_bidirected(0, 1));
    EXPECT_EQ(as_text(strata[0].mags), as_text({parse_graph("A --> B\n", GraphKind::MAG),
                                               parse_graph("B --> A\n", GraphKind::MAG)}));
}

TEST(EnumerateMags, NoCirclesGivesThePagItself) {
    const auto pag = parse_pag("A --> B\nB --> C\nD --> C\n");
    const auto strata = enumerate_mags(pag);
    ASSERT_EQ(strata.size(), 1u);
    ASSERT_EQ(strata[0].mags.size(), 1u);
    EXPECT_EQ(strata[0].mags[0], pag.with_kind(GraphKind::MAG));
}

TEST(EnumerateMags, LimitIsATypedError) {
    const auto pag = parse_pag("A o-o B\nB o-o C\nC o-o D\n");
    EXPECT_THROW(enumerate_mags(pag, 8), LimitExceeded);
    EXPECT_NO_THROW(enumerate_mags(pag, 64));
    EXPECT_NO_THROW(enumerate_mags(pag, std::nullopt));
}

TEST(EnumerateMags, MatchesBruteForceOracleOnRandomPags) {
    std::mt19937_64 rng(21);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const auto mag = random_maximal_mag(3 + trial % 3, rng);
        const auto cls = oracle::equivalence_class(mag);
        const auto pag = oracle::pag_from_class(cls);
        const auto strata = enumerate_mags(pag);
        EXPECT_EQ(as_text(flatten(strata)), as_text(cls)) << serialize_graph(pag);
        std::size_t last = 0;
        for (const auto& s : strata) {
            EXPECT_GE(s.bidirected_count, last);
            last = s.bidirected_count + 1;
            for (const auto& g : s.mags) {
                EXPECT_EQ(g.bidirected_count(), s.bidirected_count);
                EXPECT_TRUE(validate(g).ok());
                EXPECT_TRUE(markov_equivalent(g, s.mags.front()));
            }
        }
        // the library's brute-force PAG agrees with the oracle's
        EXPECT_EQ(pag_of_mag(mag), pag);
        ++checked;
    }
    EXPECT_EQ(checked, 60);
}

TEST(ReferenceMag, TailCompletion) {
    const auto mag = reference_mag(parse_pag("A o-> B\n"));
    EXPECT_TRUE(mag.is_directed(0, 1));
    EXPECT_EQ(mag.kind(), GraphKind::MAG);
}

TEST(ReferenceMag, IdentityWithoutCircles) {
    const auto pag = parse_pag("A <-> B\nC --> B\n");
    EXPECT_EQ(reference_mag(pag), pag.with_kind(GraphKind::MAG));
}

TEST(ReferenceMag, EquivalentToOriginatingMag) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 40; ++trial) {
        const auto mag = random_maximal_mag(5, rng);
        const auto pag = oracle::pag_from_class(oracle::equivalence_class(mag));
        const auto ref = reference_mag(pag);
        EXPECT_TRUE(validate(ref).ok());
        EXPECT_TRUE(markov_equivalent(ref, mag)) << serialize_graph(pag);
        // enumerate_mags contains it
        EXPECT_EQ(as_text(flatten(enumerate_mags(pag))).count(serialize_graph(ref)), 1u);
    }
}

TEST(OrientationNeighbors, SingleFlipsOfCircleMarks) {
    const auto pag = parse_pag("A o-o B\n");
    const auto start = parse_graph("A --> B\n", GraphKind::MAG);
    const auto nbrs = orientation_neighbors(start, pag);
    // flipping the tail at A gives A<->B; flipping the arrow at B gives A---B, which is invalid
    ASSERT_EQ(nbrs.size(), 1u);
    EXPECT_TRUE(nbrs[0].second.is_bidirected(0, 1));
    EXPECT_EQ(nbrs[0].first.new_mark, Mark::Arrow);
    EXPECT_FALSE(nbrs[0].first.at_second);
}

TEST(OrientationNeighbors, NoCirclesNoNeighbors) {
    const auto pag = parse_pag("A --> B\nB <-> C\n");
    EXPECT_TRUE(orientation_neighbors(reference_mag(pag), pag).empty());
}

TEST(OrientationNeighbors, ValidReversibleAndRespectInvariantMarks) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const auto mag = random_maximal_mag(5, rng);
        const auto pag = oracle::pag_from_class(oracle::equivalence_class(mag));
        const auto start = reference_mag(pag);
        for (const auto& [move, g] : orientation_neighbors(start, pag)) {
            EXPECT_TRUE(validate(g).ok());
            for (const auto& e : pag.edges()) {
                if (e.at_first != Mark::Circle) { EXPECT_EQ(g.mark(e.second, e.first), e.at_first); }
                if (e.at_second != Mark::Circle) { EXPECT_EQ(g.mark(e.first, e.second), e.at_second); }
            }
            // exactly one endpoint differs from the start
            int diffs = 0;
            for (const auto& e : pag.edges())
                diffs += (g.mark(e.first, e.second) != start.mark(e.first, e.second)) +
                         (g.mark(e.second, e.first) != start.mark(e.second, e.first));
            EXPECT_EQ(diffs, 1);
            bool back = false;
            for (const auto& [m2, g2] : orientation_neighbors(g, pag)) back = back || g2 == start;
            EXPECT_TRUE(back);
        }
    }
}
