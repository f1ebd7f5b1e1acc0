#pragma once

// Key-value reports and comma-separated search traces.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "latconf/search.hpp"
#include "latconf/text.hpp"
#include "latconf/vbem.hpp"

namespace latconf {

// Wall-clock fields are the only non-reproducible output; Omit drops them.
enum class Timing : std::uint8_t { Include, Omit };

class KeyValueWriter {
public:
    KeyValueWriter& add(const std::string& key, const std::string& value) {
        out_ += key + "=" + value + "\n";
        return *this;
    }
    KeyValueWriter& add(const std::string& key, double value) { return add(key, text::format_double(value)); }
    KeyValueWriter& add(const std::string& key, std::size_t value) { return add(key, std::to_string(value)); }
    KeyValueWriter& add(const std::string& key, int value) { return add(key, std::to_string(value)); }
    KeyValueWriter& add(const std::string& key, bool value) { return add(key, std::string(value ? "true" : "false")); }
    KeyValueWriter& add(const std::string& key, const char* value) { return add(key, std::string(value)); }

    const std::string& str() const noexcept { return out_; }

private:
    std::string out_;
};

inline std::string serialize_score_report(const ScoreReport& r) {
    KeyValueWriter w;
    w.add("elbo", r.elbo).add("p_elbo", r.p_elbo).add("iterations", r.iterations).add("converged", r.converged);
    w.add("restarts_used", r.restarts_used);
    return w.str();
}

inline std::string serialize_trace(const SearchTrace& trace, Timing timing = Timing::Include) {
    std::string out = timing == Timing::Include ? "stratum,model_id,p_elbo,seconds\n" : "stratum,model_id,p_elbo\n";
    for (const auto& v : trace.visited) {
        out += std::to_string(v.stratum) + "," + std::to_string(v.model_id) + "," + text::format_double(v.p_elbo);
        if (timing == Timing::Include) out += "," + text::format_fixed(v.seconds, 6);
        out += "\n";
    }
    return out;
}

inline void describe_latents(KeyValueWriter& w, const LatentSpec& spec) {
    w.add("latents", spec.size());
    for (const auto& l : spec.latents) {
        std::string kids;
        for (const auto& c : l.children) kids += (kids.empty() ? "" : " ") + c;
        w.add("latent." + l.name, "states " + std::to_string(l.states) + " children " + kids);
    }
}

inline std::string serialize_search_report(const SearchResult& result, const SearchConfig& cfg,
                                           Timing timing = Timing::Include) {
    KeyValueWriter w;
    w.add("strategy", std::string(to_string(cfg.strategy)));
    w.add("seed", std::to_string(cfg.seed));
    w.add("max_bidirected", cfg.max_bidirected).add("threshold", cfg.threshold).add("max_states", cfg.max_states);
    w.add("restarts", cfg.restarts);
    w.add("stop_reason", std::string(to_string(result.trace.stop_reason)));
    w.add("visited", result.trace.visited.size());
    w.add("best_id", result.trace.best_id).add("best_stratum", result.best.stratum);
    w.add("elbo", result.best.report.elbo).add("p_elbo", result.best.report.p_elbo);
    w.add("iterations", result.best.report.iterations).add("converged", result.best.report.converged);
    describe_latents(w, result.best.model.spec);
    if (timing == Timing::Include && !result.trace.visited.empty())
        w.add("seconds", text::format_fixed(result.trace.visited.back().seconds, 6));
    return w.str();
}

} // namespace latconf
