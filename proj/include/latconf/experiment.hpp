#pragma once

// Desk-scale evaluation: sample from a ground-truth network with one confounder
// hidden, derive the true PAG, search, and score the true structure on the same data.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "latconf/bn_model.hpp"
#include "latconf/latentize.hpp"
#include "latconf/mag_space.hpp"
#include "latconf/random.hpp"
#include "latconf/report.hpp"
#include "latconf/search.hpp"
#include "latconf/vbem.hpp"

namespace latconf {

struct ExperimentSpec {
    BnModel model;
    std::string hidden;
    std::size_t sample_size = 1000;
    std::vector<std::uint64_t> seeds{0};
    SearchConfig search;

    void check() const {
        model.check();
        const auto h = model.dag.find(hidden);
        if (!h) throw ValidationError("hidden variable '" + hidden + "' is not in the model");
        if (model.dag.children(*h).size() < 2)
            throw ValidationError("hidden variable '" + hidden + "' needs at least two children to be a confounder");
        if (!model.dag.parents(*h).empty())
            throw ValidationError("hidden variable '" + hidden + "' must have no parents");
        if (sample_size == 0) throw ValidationError("sample size must be positive");
        if (seeds.empty()) throw ValidationError("no seeds given");
    }
};

struct ExperimentRun {
    std::uint64_t seed = 0;
    MixedGraph pag;
    SearchResult learned;
    LatentizedDag truth;
    ScoreReport truth_score;
    double learn_seconds = 0.0;
    double total_seconds = 0.0;
    bool budget_expired = false;
};

struct ReportBundle {
    std::vector<ExperimentRun> runs;
};

// The generating DAG with the hidden node recast as a latent of its own cardinality.
inline LatentizedDag truth_model(const BnModel& model, const std::string& hidden) {
    const auto h = model.dag.index(hidden);
    Latent latent{hidden, {}, model.cardinality(h)};
    for (auto c : model.dag.children(h)) latent.children.push_back(model.dag.name(c));
    std::vector<std::string> observed;
    for (const auto& name : model.dag.names())
        if (name != hidden) observed.push_back(name);
    LatentSpec spec{{latent}};
    spec.check(observed);
    return {model.dag, std::move(spec), marginal_mag(model.dag, observed)};
}

inline ExperimentRun run_experiment_seed(const ExperimentSpec& spec, std::uint64_t seed) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    ExperimentRun run;
    run.seed = seed;
    run.truth = truth_model(spec.model, spec.hidden);
    run.pag = pag_of_mag(run.truth.source_mag);

    const auto data = forward_sample(spec.model, spec.sample_size, stream_seed(seed, "sample"), {spec.hidden});
    auto cfg = spec.search;
    cfg.seed = stream_seed(seed, "search");
    const auto learn_start = Clock::now();
    run.learned = run_search(run.pag, data, cfg);
    run.learn_seconds = std::chrono::duration<double>(Clock::now() - learn_start).count();
    run.budget_expired = run.learned.trace.stop_reason == StopReason::Budget;

    VbemOptions opts;
    opts.threshold = cfg.threshold;
    opts.restarts = cfg.restarts;
    opts.max_iterations = cfg.max_iterations;
    opts.seed = stream_seed(seed, "truth");
    run.truth_score = run_vbem(VbemModel(run.truth, data, cfg.alpha), opts).second;
    run.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return run;
}

inline ReportBundle run_experiment(const ExperimentSpec& spec) {
    spec.check();
    ReportBundle bundle;
    for (auto seed : spec.seeds) bundle.runs.push_back(run_experiment_seed(spec, seed));
    return bundle;
}

inline std::string serialize_experiment_run(const ExperimentRun& run, const SearchConfig& cfg,
                                            Timing timing = Timing::Include) {
    KeyValueWriter w;
    w.add("seed", std::to_string(run.seed));
    w.add("budget_expired", run.budget_expired);
    w.add("learned_p_elbo", run.learned.best.report.p_elbo);
    w.add("true_p_elbo", run.truth_score.p_elbo);
    w.add("gap", run.learned.best.report.p_elbo - run.truth_score.p_elbo);
    if (timing == Timing::Include) {
        w.add("learn_seconds", text::format_fixed(run.learn_seconds, 6));
        w.add("total_seconds", text::format_fixed(run.total_seconds, 6));
    }
    auto search_cfg = cfg;
    search_cfg.seed = stream_seed(run.seed, "search");
    return w.str() + serialize_search_report(run.learned, search_cfg, timing);
}

} // namespace latconf
