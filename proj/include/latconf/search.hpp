#pragma once

// Model selection over latentized DAGs derived from a PAG.
//
//  * ilcv  - incremental latent confounder search: score every MAG of the PAG's
//            equivalence class, stratum by stratum of bi-directed edge count, and
//            stop at the first stratum that does not improve on the incumbent.
//  * hclcv - hill-climbing over single endpoint orientations of the PAG's circle
//            marks, without equivalence checks.
//
// Both finish with a greedy search over latent cardinalities (scored on the
// subgraph of each latent and its children) and a final refit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latconf/dataset.hpp"
#include "latconf/errors.hpp"
#include "latconf/graph.hpp"
#include "latconf/graph_io.hpp"
#include "latconf/latentize.hpp"
#include "latconf/mag_space.hpp"
#include "latconf/random.hpp"
#include "latconf/vbem.hpp"

namespace latconf {

enum class Strategy : std::uint8_t { ILCV, HCLCV };

inline std::string_view to_string(Strategy s) { return s == Strategy::ILCV ? "ilcv" : "hclcv"; }

enum class StopReason : std::uint8_t { Converged, StratumNoImprovement, LocalMaximum, Budget, Limit };

inline std::string_view to_string(StopReason r) {
    switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::StratumNoImprovement: return "stratum-no-improvement";
    case StopReason::LocalMaximum: return "local-maximum";
    case StopReason::Budget: return "budget";
    case StopReason::Limit: return "limit";
    }
    return "?";
}

// Absolute tolerance for every score comparison in the search.
inline constexpr double kScoreTolerance = 1e-6;

struct SearchConfig {
    std::size_t max_bidirected = 4;        // m
    double threshold = 0.01;               // c, VBEM convergence
    int max_states = 4;                    // S
    double budget_seconds = 12.0 * 3600.0; // T
    int restarts = 5;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::ILCV;
    int max_iterations = 500;
    double alpha = 1.0;
    std::optional<std::size_t> enumeration_limit = kDefaultEnumerationLimit;

    void check() const {
        if (max_states < 2) throw ValidationError("max states must be at least 2");
        if (!(budget_seconds > 0.0)) throw ValidationError("budget must be positive");
        if (!(threshold > 0.0)) throw ValidationError("VBEM threshold must be positive");
        if (restarts < 1) throw ValidationError("restarts must be at least 1");
        if (max_iterations < 1) throw ValidationError("iteration cap must be at least 1");
        if (!(alpha > 0.0)) throw ValidationError("Dirichlet hyperparameter must be positive");
    }
};

struct ScoredModel {
    LatentizedDag model;
    VariationalState state;
    ScoreReport report;
    std::size_t stratum = 0; // bi-directed edges in the source MAG
    std::size_t id = 0;      // position in the trace, 1-based
};

struct VisitRecord {
    std::size_t stratum;
    std::size_t model_id;
    double p_elbo;
    double seconds;
};

struct SearchTrace {
    std::vector<VisitRecord> visited;
    std::size_t best_id = 0;
    StopReason stop_reason = StopReason::Converged;
};

struct SearchResult {
    ScoredModel best;
    SearchTrace trace;
};

// Shared bookkeeping of one search: clock, budget, trace, and the best model seen.
class SearchSession {
public:
    using Clock = std::chrono::steady_clock;

    SearchSession(const Dataset& data, SearchConfig cfg)
        : data_(data), cfg_(std::move(cfg)), start_(Clock::now()),
          deadline_(start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.budget_seconds))) {
        cfg_.check();
    }

    const SearchConfig& config() const noexcept { return cfg_; }
    const Dataset& data() const noexcept { return data_; }

    // True once the budget is spent and at least one model has been scored.
    bool expired() const { return best_.has_value() && Clock::now() >= deadline_; }

    double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

    // Fits `model` with VBEM seeded from the model's text, so both strategies score a model alike.
    // `salt` separates the final refit from the first fit of the same model.
    ScoredModel fit(const LatentizedDag& model, std::size_t stratum, std::string_view salt = {}) {
        VbemOptions opts;
        opts.threshold = cfg_.threshold;
        opts.restarts = cfg_.restarts;
        opts.max_iterations = cfg_.max_iterations;
        opts.seed = stream_seed(cfg_.seed, std::string(salt) + "\n" + serialize_latentized(model));
        auto [state, report] = run_vbem(VbemModel(model, data_, cfg_.alpha), opts);
        ScoredModel scored{model, std::move(state), report, stratum, trace_.visited.size() + 1};
        trace_.visited.push_back({stratum, scored.id, report.p_elbo, elapsed()});
        if (!best_ || report.p_elbo > best_->report.p_elbo) {
            best_ = scored;
            trace_.best_id = scored.id;
        }
        return scored;
    }

    double subgraph_score(const ScoredModel& m, const std::string& latent) const {
        const VbemModel bound(m.model, data_, cfg_.alpha);
        return score_subgraph(bound, m.state, {latent});
    }

    SearchResult finish(StopReason reason) && {
        if (!best_) throw Error("search finished without scoring any model");
        trace_.stop_reason = reason;
        return {std::move(*best_), std::move(trace_)};
    }

private:
    const Dataset& data_;
    SearchConfig cfg_;
    Clock::time_point start_;
    Clock::time_point deadline_;
    SearchTrace trace_;
    std::optional<ScoredModel> best_;
};

inline LatentizedDag with_states(const LatentizedDag& model, std::size_t latent, int states) {
    auto spec = model.spec;
    spec.latents.at(latent).states = states;
    return build_latentized(model.source_mag, std::move(spec));
}

// Greedy cardinality search: per latent in canonical order, add one state at a time
// while the penalized subgraph score strictly improves, up to the configured maximum.
// Returns false if the budget ran out.
inline bool state_search(SearchSession& session, ScoredModel& current) {
    const int max_states = session.config().max_states;
    for (std::size_t i = 0; i < current.model.spec.size(); ++i) {
        const auto name = current.model.spec.latents[i].name;
        while (current.model.spec.latents[i].states < max_states) {
            if (session.expired()) return false;
            const int states = current.model.spec.latents[i].states;
            auto candidate = session.fit(with_states(current.model, i, states + 1), current.stratum);
            const double before = session.subgraph_score(current, name) - log_factorial(states);
            const double after = session.subgraph_score(candidate, name) - log_factorial(states + 1);
            if (!(after > before + kScoreTolerance)) break;
            current = std::move(candidate);
        }
    }
    return true;
}

inline ScoredModel state_search(const ScoredModel& model, const Dataset& data, const SearchConfig& cfg) {
    SearchSession session(data, cfg);
    auto current = model;
    state_search(session, current);
    return current;
}

namespace detail {

inline void check_stratum_bound(std::size_t min_bidirected, const SearchConfig& cfg) {
    if (min_bidirected > cfg.max_bidirected)
        throw ValidationError("every MAG of the PAG has at least " + std::to_string(min_bidirected) +
                              " bi-directed edges, above the configured maximum of " +
                              std::to_string(cfg.max_bidirected));
}

// Cardinality search plus the final refit of the winning structure.
inline SearchResult finish_search(SearchSession& session, ScoredModel winner, StopReason reason) {
    if (!state_search(session, winner)) return std::move(session).finish(StopReason::Budget);
    if (!winner.model.spec.empty()) {
        if (session.expired()) return std::move(session).finish(StopReason::Budget);
        session.fit(winner.model, winner.stratum, "final");
    }
    return std::move(session).finish(reason);
}

} // namespace detail

inline SearchResult ilcv(const MixedGraph& pag, const Dataset& data, SearchConfig cfg) {
    cfg.strategy = Strategy::ILCV;
    SearchSession session(data, cfg);
    const auto strata = enumerate_mags(pag, cfg.enumeration_limit);
    if (strata.empty()) throw ValidationError("ilcv: PAG yields no MAG strata");
    detail::check_stratum_bound(strata.front().bidirected_count, cfg);

    std::optional<ScoredModel> incumbent;
    StopReason reason = StopReason::Converged;
    for (const auto& stratum : strata) {
        if (stratum.bidirected_count > cfg.max_bidirected) {
            reason = StopReason::Limit;
            break;
        }
        std::optional<ScoredModel> stratum_best;
        for (const auto& mag : stratum.mags) {
            if (session.expired()) return std::move(session).finish(StopReason::Budget);
            auto scored = session.fit(latentize_min(mag), stratum.bidirected_count);
            if (!stratum_best || scored.report.p_elbo > stratum_best->report.p_elbo) stratum_best = std::move(scored);
        }
        if (!incumbent || stratum_best->report.p_elbo > incumbent->report.p_elbo + kScoreTolerance) {
            incumbent = std::move(stratum_best);
        } else {
            reason = StopReason::StratumNoImprovement;
            break;
        }
    }
    return detail::finish_search(session, std::move(*incumbent), reason);
}

inline SearchResult hclcv(const MixedGraph& pag, const Dataset& data, SearchConfig cfg) {
    cfg.strategy = Strategy::HCLCV;
    SearchSession session(data, cfg);
    auto current_mag = reference_mag(pag);
    detail::check_stratum_bound(current_mag.bidirected_count(), cfg);
    auto current = session.fit(latentize_min(current_mag), current_mag.bidirected_count());

    std::set<std::string> seen{serialize_graph(current_mag)};
    StopReason reason = StopReason::LocalMaximum;
    while (true) {
        auto neighbors = orientation_neighbors(current_mag, pag);
        std::stable_sort(neighbors.begin(), neighbors.end(), [](const auto& a, const auto& b) {
            return a.second.bidirected_count() < b.second.bidirected_count();
        });
        bool blocked_by_limit = false;
        std::optional<std::pair<MixedGraph, ScoredModel>> step;
        for (const auto& [move, mag] : neighbors) {
            if (mag.bidirected_count() > cfg.max_bidirected) {
                blocked_by_limit = true;
                continue;
            }
            // Revisited orientations scored no better than some earlier incumbent.
            if (!seen.insert(serialize_graph(mag)).second) continue;
            if (session.expired()) return std::move(session).finish(StopReason::Budget);

            // Latents whose child sets persist keep the incumbent's cardinality.
            auto spec = latentize_min(mag).spec;
            for (auto& l : spec.latents)
                for (const auto& kept : current.model.spec.latents)
                    if (kept.children == l.children) l.states = kept.states;
            auto scored = session.fit(build_latentized(mag, std::move(spec)), mag.bidirected_count());
            const double bar = step ? step->second.report.p_elbo : current.report.p_elbo;
            if (scored.report.p_elbo > bar + kScoreTolerance) step.emplace(mag, std::move(scored));
        }
        if (!step) {
            const bool any_within = std::any_of(neighbors.begin(), neighbors.end(), [&](const auto& nb) {
                return nb.second.bidirected_count() <= cfg.max_bidirected;
            });
            reason = blocked_by_limit && !any_within ? StopReason::Limit : StopReason::LocalMaximum;
            break;
        }
        current_mag = std::move(step->first);
        current = std::move(step->second);
    }
    return detail::finish_search(session, std::move(current), reason);
}

inline SearchResult run_search(const MixedGraph& pag, const Dataset& data, const SearchConfig& cfg) {
    return cfg.strategy == Strategy::ILCV ? ilcv(pag, data, cfg) : hclcv(pag, data, cfg);
}

} // namespace latconf
