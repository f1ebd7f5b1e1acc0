#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "latconf/bn_model.hpp"
#include "latconf/graph_io.hpp"
#include "latconf/search.hpp"
#include "oracles.hpp"

using namespace latconf;
using fixtures::table;

namespace {

SearchConfig quick(std::uint64_t seed = 0) {
    SearchConfig cfg;
    cfg.seed = seed;
    cfg.restarts = 3;
    return cfg;
}

void expect_trace_consistent(const SearchResult& r) {
    ASSERT_FALSE(r.trace.visited.empty());
    double best = -INFINITY;
    std::size_t best_id = 0;
    for (const auto& v : r.trace.visited)
        if (v.p_elbo > best) {
            best = v.p_elbo;
            best_id = v.model_id;
        }
    EXPECT_EQ(r.trace.best_id, best_id);
    EXPECT_EQ(r.best.report.p_elbo, best);
    for (std::size_t i = 1; i < r.trace.visited.size(); ++i) {
        EXPECT_GE(r.trace.visited[i].seconds, r.trace.visited[i - 1].seconds);
        EXPECT_EQ(r.trace.visited[i].model_id, i + 1);
    }
}

// Data from A<-L->B, B<-M->C style models, sampled through the model file format.
Dataset sample(const std::string& model_text, std::size_t n, std::uint64_t seed, std::set<std::string> hide) {
    return forward_sample(parse_model(model_text), n, seed, hide);
}

const char* kConfounded5 = R"(node A 2
node B 2
node C 2
node D 2
node L 2
A --> B
L --> B
L --> C
D --> C
cpt A | : 0.5 0.5
cpt D | : 0.5 0.5
cpt L | : 0.5 0.5
cpt B | A=0 L=0 : 0.9 0.1
cpt B | A=0 L=1 : 0.2 0.8
cpt B | A=1 L=0 : 0.6 0.4
cpt B | A=1 L=1 : 0.05 0.95
cpt C | D=0 L=0 : 0.9 0.1
cpt C | D=0 L=1 : 0.15 0.85
cpt C | D=1 L=0 : 0.6 0.4
cpt C | D=1 L=1 : 0.1 0.9
)";

} // namespace

TEST(Ilcv, InvariantPagIsScoredOnce) {
    const auto pag = parse_pag("A --> B\n");
    const auto data = table({"A", "B"}, {2, 2}, {0, 0, 0, 1, 1, 1, 1, 1});
    const auto r = ilcv(pag, data, quick());
    EXPECT_EQ(r.trace.visited.size(), 1u);
    EXPECT_TRUE(r.best.model.spec.empty());
    EXPECT_EQ(r.trace.stop_reason, StopReason::Converged);
    const double exact = oracle::complete_log_marginal(fixtures::rows_of(data), {{}, {0}}, {2, 2});
    EXPECT_NEAR(r.best.report.p_elbo, exact, 1e-9);
    expect_trace_consistent(r);
}

TEST(Ilcv, FigureOneStylePlacesMinimumLatents) {
    // X1<->X2<->X3 is invariant; the winner needs exactly two latents.
    std::string model = "node X1 2\nnode X2 2\nnode X3 2\nnode H1 2\nnode H2 2\n"
                        "H1 --> X1\nH1 --> X2\nH2 --> X2\nH2 --> X3\n"
                        "cpt H1 | : 0.5 0.5\ncpt H2 | : 0.5 0.5\n"
                        "cpt X1 | H1=0 : 0.9 0.1\ncpt X1 | H1=1 : 0.1 0.9\n"
                        "cpt X3 | H2=0 : 0.9 0.1\ncpt X3 | H2=1 : 0.1 0.9\n";
    for (int h1 = 0; h1 < 2; ++h1)
        for (int h2 = 0; h2 < 2; ++h2) {
            const double p = 0.05 + 0.45 * h1 + 0.45 * h2;
            model += "cpt X2 | H1=" + std::to_string(h1) + " H2=" + std::to_string(h2) + " : " +
                     text::format_double(1 - p) + " " + text::format_double(p) + "\n";
        }
    const auto data = sample(model, 800, 3, {"H1", "H2"});
    const auto pag = parse_pag("X1 <-> X2\nX2 <-> X3\n");
    const auto r = ilcv(pag, data, quick());
    EXPECT_EQ(r.best.model.spec.size(), 2u);
    EXPECT_EQ(r.best.stratum, 2u);
    expect_trace_consistent(r);
}

TEST(Ilcv, RecoversConfounderOfSampleModel) {
    const auto truth = parse_model(kConfounded5);
    const auto data = forward_sample(truth, 1000, 11, {"L"});
    const auto pag = parse_pag("A o-> B\nB <-> C\nD o-> C\n");
    const auto r = ilcv(pag, data, quick());
    ASSERT_EQ(r.best.model.spec.size(), 1u);
    EXPECT_EQ(r.best.model.spec.latents[0].children, (std::vector<std::string>{"B", "C"}));
    EXPECT_EQ(r.trace.stop_reason, StopReason::StratumNoImprovement);
    // strata visited form a contiguous run starting at the minimum
    std::set<std::size_t> strata;
    for (const auto& v : r.trace.visited) strata.insert(v.stratum);
    EXPECT_EQ(*strata.begin(), 1u);
    EXPECT_EQ(*strata.rbegin() - *strata.begin() + 1, strata.size());
    expect_trace_consistent(r);
}

TEST(Ilcv, EveryScoredModelHasMinimalLatents) {
    // Rescore the trace's best and compare against latentize_min of its MAG.
    const auto data = sample(kConfounded5, 300, 5, {"L"});
    const auto pag = parse_pag("A o-> B\nB <-> C\nD o-> C\n");
    const auto r = ilcv(pag, data, quick());
    EXPECT_EQ(r.best.model.spec.size(), latentize_min(r.best.model.source_mag).spec.size());
}

TEST(Ilcv, StratumAboveMaximumIsRejected) {
    const auto pag = parse_pag("A <-> B\nB <-> C\n");
    const auto data = table({"A", "B", "C"}, {2, 2, 2}, {0, 1, 0, 1, 1, 0});
    auto cfg = quick();
    cfg.max_bidirected = 1;
    EXPECT_THROW(ilcv(pag, data, cfg), ValidationError);
}

TEST(Ilcv, CircleCircleWithConfoundedData) {
    // A<-L->B with strong dependence. Score every candidate separately, then check that
    // the search returns the best of them.
    const auto data = fixtures::confounded_pair(1000, 4);
    const auto pag = parse_pag("A o-o B\n");
    const auto r = ilcv(pag, data, quick());
    double best_free = -INFINITY;
    for (const auto& text : {"A --> B\n", "B --> A\n"}) {
        const auto model = build_latentized(parse_graph(text, GraphKind::MAG), {});
        best_free = std::max(best_free, run_vbem(model, data).second.p_elbo);
    }
    VbemOptions opts;
    opts.restarts = 3;
    const auto latent = run_vbem(latentize_min(parse_graph("A <-> B\n", GraphKind::MAG)), data, opts).second.p_elbo;
    // Two binary variables: one binary latent saturates the joint, so it cannot beat
    // the latent-free orientations once the label penalty is paid.
    EXPECT_LT(latent, best_free);
    EXPECT_TRUE(r.best.model.spec.empty());
    EXPECT_NEAR(r.best.report.p_elbo, best_free, 1e-9);
}

TEST(Hclcv, NoCirclesStopsAtLocalMaximum) {
    const auto pag = parse_pag("A --> B\nB <-> C\n");
    const auto data = table({"A", "B", "C"}, {2, 2, 2}, {0, 1, 0, 1, 1, 0, 0, 0, 1});
    const auto r = hclcv(pag, data, quick());
    EXPECT_EQ(r.trace.stop_reason, StopReason::LocalMaximum);
    EXPECT_EQ(r.best.model.spec.size(), 1u);
    expect_trace_consistent(r);
}

TEST(Hclcv, AllNeighborsWorseStopsAfterOneRound) {
    // Independent columns: the reference orientation is hard to beat.
    std::mt19937_64 rng(5);
    std::vector<int> cells;
    for (int i = 0; i < 400; ++i) cells.push_back(static_cast<int>(rng() % 2));
    const auto data = table({"A", "B"}, {2, 2}, cells);
    const auto pag = parse_pag("A o-o B\n");
    const auto r = hclcv(pag, data, quick());
    EXPECT_EQ(r.trace.stop_reason, StopReason::LocalMaximum);
    // start + its single valid neighbor
    EXPECT_EQ(r.trace.visited.size(), 2u);
    EXPECT_EQ(r.trace.best_id, 1u);
}

TEST(Strategies, IlcvDominatesOnTruePags) {
    const auto pag = parse_pag("A o-> B\nB <-> C\nD o-> C\n");
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto data = sample(kConfounded5, 200, seed, {"L"});
        const auto cfg = quick(seed);
        const auto a = ilcv(pag, data, cfg);
        ASSERT_NE(a.trace.stop_reason, StopReason::Budget);
        const auto b = hclcv(pag, data, cfg);
        EXPECT_GE(a.best.report.p_elbo, b.best.report.p_elbo - kScoreTolerance);
    }
}

TEST(Search, BudgetReturnsBestSoFar) {
    const auto data = sample(kConfounded5, 4000, 1, {"L"});
    const auto pag = parse_pag("A o-o B\nB o-o C\nC o-o D\n");
    for (auto strategy : {Strategy::ILCV, Strategy::HCLCV}) {
        auto cfg = quick();
        cfg.strategy = strategy;
        cfg.budget_seconds = 0.05;
        cfg.threshold = 1e-7;
        const auto start = std::chrono::steady_clock::now();
        const auto r = run_search(pag, data, cfg);
        const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        EXPECT_EQ(r.trace.stop_reason, StopReason::Budget);
        EXPECT_LT(took, 10.0);
        expect_trace_consistent(r);
    }
}

TEST(Search, SameSeedSameTrace) {
    const auto data = sample(kConfounded5, 300, 2, {"L"});
    const auto pag = parse_pag("A o-> B\nB <-> C\nD o-> C\n");
    for (auto strategy : {Strategy::ILCV, Strategy::HCLCV}) {
        auto cfg = quick(17);
        cfg.strategy = strategy;
        const auto a = run_search(pag, data, cfg);
        const auto b = run_search(pag, data, cfg);
        ASSERT_EQ(a.trace.visited.size(), b.trace.visited.size());
        for (std::size_t i = 0; i < a.trace.visited.size(); ++i) EXPECT_EQ(a.trace.visited[i].p_elbo, b.trace.visited[i].p_elbo);
        EXPECT_EQ(a.best.model, b.best.model);
    }
}

TEST(StateSearch, StaysBinaryWhenMoreStatesDoNotHelp) {
    const auto data = fixtures::confounded_pair(300, 3);
    SearchSession session(data, quick());
    auto start = session.fit(latentize_min(parse_graph("A <-> B\n", GraphKind::MAG)), 1, "t");
    EXPECT_TRUE(state_search(session, start));
    EXPECT_EQ(start.model.spec.latents[0].states, 2);
}

TEST(StateSearch, StopsAtTheMaximum) {
    // A four-state latent drives three four-state children.
    std::string model = "node H 4\nnode A 4\nnode B 4\nnode C 4\nH --> A\nH --> B\nH --> C\ncpt H | : 0.25 0.25 0.25 0.25\n";
    for (const char* child : {"A", "B", "C"})
        for (int h = 0; h < 4; ++h) {
            model += std::string("cpt ") + child + " | H=" + std::to_string(h) + " :";
            for (int k = 0; k < 4; ++k) model += k == h ? " 0.91" : " 0.03";
            model += "\n";
        }
    const auto data = sample(model, 2000, 8, {"H"});
    auto cfg = quick();
    cfg.max_states = 3;
    const auto mag = parse_graph("A <-> B\nB <-> C\nA <-> C\n", GraphKind::MAG);
    const LatentizedDag one = build_latentized(mag, {{{"_L1", {"A", "B", "C"}, 2}}});
    SearchSession session(data, cfg);
    auto start = session.fit(one, 3, "t");
    EXPECT_TRUE(state_search(session, start));
    EXPECT_EQ(start.model.spec.latents[0].states, 3);
}

TEST(StateSearch, ThreeStateLatentAndRefitOracle) {
    std::string model = "node H 3\nnode A 3\nnode B 3\nnode C 3\nH --> A\nH --> B\nH --> C\ncpt H | : 0.3 0.3 0.4\n";
    for (const char* child : {"A", "B", "C"})
        for (int h = 0; h < 3; ++h) {
            model += std::string("cpt ") + child + " | H=" + std::to_string(h) + " :";
            for (int k = 0; k < 3; ++k) model += k == h ? " 0.8" : " 0.1";
            model += "\n";
        }
    const auto data = sample(model, 5000, 9, {"H"});
    const auto mag = parse_graph("A <-> B\nB <-> C\nA <-> C\n", GraphKind::MAG);
    const auto start_model = build_latentized(mag, {{{"_L1", {"A", "B", "C"}, 2}}});
    auto cfg = quick();
    SearchSession session(data, cfg);
    auto current = session.fit(start_model, 3, "t");
    ASSERT_TRUE(state_search(session, current));
    EXPECT_EQ(current.model.spec.latents[0].states, 3);

    // Every family touches the latent, so the subgraph score is the full ELBO.
    VbemOptions opts;
    opts.restarts = 3;
    const auto two = run_vbem(with_states(start_model, 0, 2), data, opts).second.elbo;
    const auto three = run_vbem(with_states(start_model, 0, 3), data, opts).second.elbo;
    EXPECT_GT(three - std::log(6.0), two - std::log(2.0));
}
