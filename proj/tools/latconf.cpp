// Command-line front end: sample, learn, score, enumerate-mags, latentize, trace.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "latconf/bn_model.hpp"
#include "latconf/dataset.hpp"
#include "latconf/experiment.hpp"
#include "latconf/graph_io.hpp"
#include "latconf/latentize.hpp"
#include "latconf/mag_space.hpp"
#include "latconf/report.hpp"
#include "latconf/search.hpp"
#include "latconf/vbem.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kValidation = 2,
    kBudget = 3,
    kLimit = 4,
    kInternal = 5,
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw latconf::ValidationError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw latconf::Error("cannot write " + path);
    out << content;
}

struct SearchFlags {
    std::string strategy = "ilcv";
    std::size_t max_bidirected = 4;
    double threshold = 0.01;
    int max_states = 4;
    double budget_seconds = 12.0 * 3600.0;
    int restarts = 5;
    std::uint64_t seed = 0;
    std::size_t limit = latconf::kDefaultEnumerationLimit;

    void attach(CLI::App* cmd) {
        cmd->add_option("--strategy", strategy, "Search strategy")->check(CLI::IsMember({"ilcv", "hclcv"}));
        cmd->add_option("--max-bidirected", max_bidirected, "Maximum bi-directed edges (m)");
        cmd->add_option("--threshold", threshold, "VBEM convergence threshold (c)");
        cmd->add_option("--max-states", max_states, "Maximum latent states (S)");
        cmd->add_option("--budget-seconds", budget_seconds, "Wall-clock budget (T)");
        cmd->add_option("--restarts", restarts, "VBEM random restarts per model");
        cmd->add_option("--seed", seed, "Master random seed");
        cmd->add_option("--limit", limit, "Maximum candidate orientations for MAG enumeration");
    }

    latconf::SearchConfig config() const {
        latconf::SearchConfig cfg;
        cfg.strategy = strategy == "hclcv" ? latconf::Strategy::HCLCV : latconf::Strategy::ILCV;
        cfg.max_bidirected = max_bidirected;
        cfg.threshold = threshold;
        cfg.max_states = max_states;
        cfg.budget_seconds = budget_seconds;
        cfg.restarts = restarts;
        cfg.seed = seed;
        cfg.enumeration_limit = limit;
        cfg.check();
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent confounder discovery and density estimation over PAGs"};
    app.require_subcommand(1);

    // sample
    std::string model_path, out_path, hide_list;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    auto* sample = app.add_subcommand("sample", "Draw a dataset from a model file");
    sample->add_option("--model", model_path, "Model file")->required();
    sample->add_option("--n", n, "Number of rows");
    sample->add_option("--seed", seed, "Random seed");
    sample->add_option("--hide", hide_list, "Comma-separated nodes to leave out");
    sample->add_option("--out", out_path, "Output CSV (default stdout)");

    // learn
    std::string pag_path, data_path, trace_path, report_path;
    bool no_timings = false;
    SearchFlags learn_flags;
    auto* learn = app.add_subcommand("learn", "Search for latent confounders given a PAG and data");
    learn->add_option("--pag", pag_path, "PAG file")->required();
    learn->add_option("--data", data_path, "Data CSV")->required();
    learn->add_option("--out", out_path, "Learned model file (default stdout)");
    learn->add_option("--trace", trace_path, "Search trace CSV");
    learn->add_option("--report", report_path, "Key-value search report");
    learn->add_flag("--no-timings", no_timings, "Leave wall-clock fields out of reports and traces");
    learn_flags.attach(learn);

    // score
    std::string latent_model_path;
    SearchFlags score_flags;
    auto* score = app.add_subcommand("score", "Fit a latentized DAG with VBEM and report ELBO / p-ELBO");
    score->add_option("--model", latent_model_path, "Latentized DAG file")->required();
    score->add_option("--data", data_path, "Data CSV")->required();
    score->add_option("--threshold", score_flags.threshold, "VBEM convergence threshold");
    score->add_option("--restarts", score_flags.restarts, "VBEM random restarts");
    score->add_option("--seed", score_flags.seed, "Random seed");

    // enumerate-mags
    std::size_t limit = latconf::kDefaultEnumerationLimit;
    auto* enumerate = app.add_subcommand("enumerate-mags", "List the MAGs of a PAG by bi-directed edge count");
    enumerate->add_option("--pag", pag_path, "PAG file")->required();
    enumerate->add_option("--limit", limit, "Maximum candidate orientations");

    // latentize
    std::string mag_path;
    auto* latentize = app.add_subcommand("latentize", "Replace bi-directed edges by the fewest latent confounders");
    latentize->add_option("--mag", mag_path, "MAG file")->required();

    // trace
    std::string hidden, seeds_list = "0", out_dir;
    SearchFlags trace_flags;
    auto* trace = app.add_subcommand("trace", "Run sample/learn/score-truth experiments and emit search traces");
    trace->add_option("--model", model_path, "Ground-truth model file")->required();
    trace->add_option("--hide", hidden, "Confounder to hide")->required();
    trace->add_option("--n", n, "Sample size");
    trace->add_option("--seeds", seeds_list, "Comma-separated experiment seeds");
    trace->add_option("--report", report_path, "Key-value experiment report");
    trace->add_flag("--no-timings", no_timings, "Leave wall-clock fields out of reports and traces");
    trace_flags.attach(trace);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    const auto timing = no_timings ? latconf::Timing::Omit : latconf::Timing::Include;
    try {
        if (*sample) {
            const auto model = latconf::parse_model(read_file(model_path));
            std::set<std::string> hide;
            if (!hide_list.empty())
                for (auto h : latconf::text::split(hide_list, ',')) hide.emplace(latconf::text::trim(h));
            write_output(out_path, latconf::serialize_data(latconf::forward_sample(model, n, seed, hide)));
        } else if (*learn) {
            const auto doc = latconf::parse_document(read_file(pag_path));
            auto pag = latconf::graph_from_document(doc, latconf::GraphKind::PAG);
            latconf::require_valid(pag, latconf::GraphKind::PAG);
            const auto data = latconf::parse_data(read_file(data_path), doc.nodes);
            const auto cfg = learn_flags.config();
            const auto result = latconf::run_search(pag, data, cfg);
            std::map<std::string, latconf::NodeDecl> decls = doc.nodes;
            for (const auto& v : data.variables()) decls[v.name] = {v.name, v.cardinality, v.labels};
            write_output(out_path, latconf::serialize_latentized(result.best.model, decls));
            if (!trace_path.empty()) write_output(trace_path, latconf::serialize_trace(result.trace, timing));
            if (!report_path.empty()) write_output(report_path, latconf::serialize_search_report(result, cfg, timing));
            if (result.trace.stop_reason == latconf::StopReason::Budget) {
                std::cerr << "budget expired; wrote the best model found so far\n";
                return kBudget;
            }
        } else if (*score) {
            const auto doc = latconf::parse_document(read_file(latent_model_path));
            const auto model = latconf::latentized_from_document(doc);
            const auto data = latconf::parse_data(read_file(data_path), doc.nodes);
            latconf::VbemOptions opts;
            opts.threshold = score_flags.threshold;
            opts.restarts = score_flags.restarts;
            opts.seed = score_flags.seed;
            const auto [state, report] = latconf::run_vbem(latconf::VbemModel(model, data), opts);
            std::cout << latconf::serialize_score_report(report);
        } else if (*enumerate) {
            const auto doc = latconf::parse_document(read_file(pag_path));
            const auto pag = latconf::graph_from_document(doc, latconf::GraphKind::PAG);
            std::string out;
            for (const auto& stratum : latconf::enumerate_mags(pag, limit)) {
                out += "# stratum " + std::to_string(stratum.bidirected_count) + ": " +
                       std::to_string(stratum.mags.size()) + " MAG(s)\n";
                for (const auto& mag : stratum.mags) out += latconf::serialize_graph(mag, doc.nodes) + "\n";
            }
            std::cout << out;
        } else if (*latentize) {
            const auto doc = latconf::parse_document(read_file(mag_path));
            auto mag = latconf::graph_from_document(doc, latconf::GraphKind::MAG);
            latconf::require_valid(mag, latconf::GraphKind::MAG);
            std::cout << latconf::serialize_latentized(latconf::latentize_min(mag), doc.nodes);
        } else if (*trace) {
            latconf::ExperimentSpec spec;
            spec.model = latconf::parse_model(read_file(model_path));
            spec.hidden = hidden;
            spec.sample_size = n;
            spec.seeds.clear();
            for (auto s : latconf::text::split(seeds_list, ',')) {
                const auto v = latconf::text::parse_int<std::uint64_t>(latconf::text::trim(s));
                if (!v) throw latconf::ValidationError("bad seed '" + std::string(s) + "'");
                spec.seeds.push_back(*v);
            }
            spec.search = trace_flags.config();
            const auto bundle = latconf::run_experiment(spec);
            std::string csv = timing == latconf::Timing::Include ? "seed,stratum,model_id,p_elbo,seconds\n"
                                                                 : "seed,stratum,model_id,p_elbo\n";
            std::string report;
            bool expired = false;
            for (const auto& run : bundle.runs) {
                const auto rows = latconf::text::lines(latconf::serialize_trace(run.learned.trace, timing));
                for (std::size_t i = 1; i < rows.size(); ++i) csv += std::to_string(run.seed) + "," + std::string(rows[i]) + "\n";
                report += "[run]\n" + latconf::serialize_experiment_run(run, spec.search, timing);
                expired = expired || run.budget_expired;
            }
            std::cout << csv;
            if (!report_path.empty()) write_output(report_path, report);
            if (expired) return kBudget;
        }
    } catch (const latconf::LimitExceeded& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kLimit;
    } catch (const latconf::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kOk;
}
