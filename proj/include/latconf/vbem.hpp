#pragma once

// Variational Bayesian EM for discrete Bayesian networks whose latent nodes are
// parentless confounders of observed nodes.
//
// q(L, theta) = prod_n prod_i q_n(L_i) * prod_families Dir(theta_ij | alpha~_ij).
// VB-E is one coordinate-ascent sweep over the latents of every row; VB-M is the
// conjugate Dirichlet update. At the VB-M fixed point the bound reduces to
//
//   ELBO = sum_n sum_i H(q_n(L_i)) + sum_families [log B(alpha~_ij) - log B(alpha_ij)].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "latconf/dataset.hpp"
#include "latconf/errors.hpp"
#include "latconf/latentize.hpp"
#include "latconf/random.hpp"

namespace latconf {

// Dirichlet parameters per node, flattened as [parent config][state].
using FamilyTable = std::vector<std::vector<double>>;

struct FamilyPrior {
    FamilyTable alpha;
};

// Responsibilities per latent, flattened as [row][state].
using Responsibilities = std::vector<std::vector<double>>;

struct VariationalState {
    FamilyTable q_theta;
    Responsibilities q_latent;
    std::vector<double> elbo_trace;
};

struct ScoreReport {
    double elbo = 0.0;
    double p_elbo = 0.0;
    int iterations = 0;
    bool converged = false;
    int restarts_used = 0;
};

inline double log_factorial(int k) {
    if (k <= 20) {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return std::log(f);
    }
    return std::lgamma(static_cast<double>(k) + 1.0);
}

// ELBO minus the label-switching penalty sum_i log |L_i|!.
inline double p_elbo(double elbo_value, const LatentSpec& spec) {
    double penalty = 0.0;
    for (const auto& l : spec.latents) penalty += log_factorial(l.states);
    return elbo_value - penalty;
}

inline double log_beta(const double* a, std::size_t k) {
    double s = 0.0, lg = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        s += a[i];
        lg += std::lgamma(a[i]);
    }
    return lg - std::lgamma(s);
}

// A LatentizedDag bound to a dataset: node cardinalities, parent strides, and the
// observed columns the model reads.
class VbemModel {
public:
    struct Node {
        std::string name;
        bool latent = false;
        std::size_t slot = 0; // observed column slot, or latent index
        int card = 2;
        std::vector<std::size_t> parents; // node indices, canonical order
        std::vector<std::size_t> strides; // first parent most significant
        std::size_t configs = 1;
    };

    VbemModel(const LatentizedDag& model, const Dataset& data, double alpha = 1.0) : spec_(model.spec) {
        if (data.rows() == 0) throw ValidationError("dataset has no rows");
        if (!(alpha > 0.0)) throw ValidationError("Dirichlet hyperparameter must be positive");
        const auto& dag = model.dag;
        rows_ = data.rows();
        std::vector<std::size_t> columns;
        nodes_.resize(dag.size());
        for (std::size_t v = 0; v < dag.size(); ++v) {
            auto& node = nodes_[v];
            node.name = dag.name(v);
            if (const auto* lat = spec_.find(node.name)) {
                node.latent = true;
                node.slot = static_cast<std::size_t>(lat - spec_.latents.data());
                node.card = lat->states;
            } else {
                const auto col = data.column(node.name);
                if (!col) throw ValidationError("dataset has no column for model variable " + node.name);
                node.slot = columns.size();
                node.card = data.variables()[*col].cardinality;
                columns.push_back(*col);
            }
        }
        for (std::size_t v = 0; v < dag.size(); ++v) {
            auto& node = nodes_[v];
            node.parents = dag.parents(v);
            if (node.latent && !node.parents.empty()) throw ValidationError("latent " + node.name + " has parents");
            node.strides.assign(node.parents.size(), 1);
            for (std::size_t p = node.parents.size(); p-- > 0;) {
                node.strides[p] = node.configs;
                node.configs *= static_cast<std::size_t>(nodes_[node.parents[p]].card);
            }
        }
        latent_nodes_.assign(spec_.size(), 0);
        latent_children_.assign(spec_.size(), {});
        for (std::size_t v = 0; v < dag.size(); ++v) {
            if (nodes_[v].latent) latent_nodes_[nodes_[v].slot] = v;
            for (auto p : nodes_[v].parents)
                if (nodes_[p].latent) latent_children_[nodes_[p].slot].push_back(v);
        }
        observed_count_ = columns.size();
        values_.resize(rows_ * observed_count_);
        for (std::size_t n = 0; n < rows_; ++n)
            for (std::size_t s = 0; s < columns.size(); ++s) values_[n * observed_count_ + s] = data.at(n, columns[s]);

        prior_.alpha.resize(nodes_.size());
        for (std::size_t v = 0; v < nodes_.size(); ++v)
            prior_.alpha[v].assign(nodes_[v].configs * static_cast<std::size_t>(nodes_[v].card), alpha);
    }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const LatentSpec& spec() const noexcept { return spec_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t latent_count() const noexcept { return spec_.size(); }
    std::size_t latent_node(std::size_t latent) const { return latent_nodes_[latent]; }
    const std::vector<std::size_t>& latent_children(std::size_t latent) const { return latent_children_[latent]; }
    int latent_states(std::size_t latent) const { return spec_.latents[latent].states; }

    const FamilyPrior& prior() const noexcept { return prior_; }

    void set_prior(FamilyPrior prior) {
        if (prior.alpha.size() != nodes_.size()) throw ValidationError("prior does not match model families");
        for (std::size_t v = 0; v < nodes_.size(); ++v) {
            if (prior.alpha[v].size() != nodes_[v].configs * static_cast<std::size_t>(nodes_[v].card))
                throw ValidationError("prior does not match family of " + nodes_[v].name);
            for (double a : prior.alpha[v])
                if (!(a > 0.0)) throw ValidationError("Dirichlet hyperparameters must be positive");
        }
        prior_ = std::move(prior);
    }

    int value(std::size_t row, std::size_t node) const { return values_[row * observed_count_ + nodes_[node].slot]; }

    std::size_t latent_index(std::string_view name) const {
        for (std::size_t i = 0; i < spec_.size(); ++i)
            if (spec_.latents[i].name == name) return i;
        throw ValidationError("unknown latent '" + std::string(name) + "'");
    }

    // Calls f(config, weight) for every parent configuration of `node` on `row` with
    // nonzero mean-field weight. Latent `fixed` (if not npos) is clamped to `fixed_state`.
    template <typename F>
    void for_each_config(std::size_t row, std::size_t node, const Responsibilities& q, std::size_t fixed,
                         int fixed_state, F&& f) const {
        const auto& nd = nodes_[node];
        std::size_t base = 0;
        std::size_t free_latents[16];
        std::size_t free_count = 0;
        for (std::size_t p = 0; p < nd.parents.size(); ++p) {
            const auto& pn = nodes_[nd.parents[p]];
            if (!pn.latent) base += static_cast<std::size_t>(value(row, nd.parents[p])) * nd.strides[p];
            else if (pn.slot == fixed) base += static_cast<std::size_t>(fixed_state) * nd.strides[p];
            else {
                if (free_count == 16) throw ValidationError("too many latent parents for " + nd.name);
                free_latents[free_count++] = p;
            }
        }
        if (free_count == 0) {
            f(base, 1.0);
            return;
        }
        int state[16] = {};
        while (true) {
            std::size_t config = base;
            double w = 1.0;
            for (std::size_t k = 0; k < free_count; ++k) {
                const auto& pn = nodes_[nd.parents[free_latents[k]]];
                config += static_cast<std::size_t>(state[k]) * nd.strides[free_latents[k]];
                w *= q[pn.slot][row * static_cast<std::size_t>(pn.card) + static_cast<std::size_t>(state[k])];
            }
            if (w > 0.0) f(config, w);
            std::size_t k = 0;
            for (; k < free_count; ++k) {
                if (++state[k] < nodes_[nd.parents[free_latents[k]]].card) break;
                state[k] = 0;
            }
            if (k == free_count) break;
        }
    }

private:
    LatentSpec spec_;
    std::vector<Node> nodes_;
    std::vector<std::size_t> latent_nodes_;
    std::vector<std::vector<std::size_t>> latent_children_;
    std::size_t rows_ = 0;
    std::size_t observed_count_ = 0;
    std::vector<int> values_;
    FamilyPrior prior_;
};

namespace detail {

inline FamilyTable expected_log_theta(const VbemModel& model, const FamilyTable& q_theta) {
    FamilyTable out(q_theta.size());
    for (std::size_t v = 0; v < q_theta.size(); ++v) {
        const auto card = static_cast<std::size_t>(model.nodes()[v].card);
        out[v].resize(q_theta[v].size());
        for (std::size_t j = 0; j < q_theta[v].size() / card; ++j) {
            double total = 0.0;
            for (std::size_t k = 0; k < card; ++k) total += q_theta[v][j * card + k];
            const double dg_total = boost::math::digamma(total);
            for (std::size_t k = 0; k < card; ++k)
                out[v][j * card + k] = boost::math::digamma(q_theta[v][j * card + k]) - dg_total;
        }
    }
    return out;
}

inline void check_q_theta(const VbemModel& model, const FamilyTable& q_theta) {
    if (q_theta.size() != model.nodes().size()) throw ValidationError("q_theta does not match model families");
    for (std::size_t v = 0; v < q_theta.size(); ++v)
        if (q_theta[v].size() != model.prior().alpha[v].size())
            throw ValidationError("q_theta does not match family of " + model.nodes()[v].name);
}

inline void check_q_latent(const VbemModel& model, const Responsibilities& q) {
    if (q.size() != model.latent_count()) throw ValidationError("q_latent does not match model latents");
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i].size() != model.rows() * static_cast<std::size_t>(model.latent_states(i)))
            throw ValidationError("q_latent has wrong shape for latent " + model.spec().latents[i].name);
}

} // namespace detail

// One mean-field sweep: each latent of each row, in canonical order, is set to its
// optimal factor given q_theta and the current factors of the other latents.
inline Responsibilities vb_e_step(const VbemModel& model, const FamilyTable& q_theta, Responsibilities q) {
    detail::check_q_theta(model, q_theta);
    detail::check_q_latent(model, q);
    const auto elog = detail::expected_log_theta(model, q_theta);
    std::vector<double> logit;
    for (std::size_t n = 0; n < model.rows(); ++n) {
        for (std::size_t i = 0; i < model.latent_count(); ++i) {
            const auto states = static_cast<std::size_t>(model.latent_states(i));
            const auto lnode = model.latent_node(i);
            logit.assign(elog[lnode].begin(), elog[lnode].begin() + static_cast<std::ptrdiff_t>(states));
            for (std::size_t l = 0; l < states; ++l) {
                for (auto child : model.latent_children(i)) {
                    const auto card = static_cast<std::size_t>(model.nodes()[child].card);
                    const auto x = static_cast<std::size_t>(model.value(n, child));
                    model.for_each_config(n, child, q, i, static_cast<int>(l), [&](std::size_t config, double w) {
                        logit[l] += w * elog[child][config * card + x];
                    });
                }
            }
            const double top = *std::max_element(logit.begin(), logit.end());
            double total = 0.0;
            for (auto& v : logit) total += (v = std::exp(v - top));
            if (!std::isfinite(total) || total <= 0.0)
                throw NumericalError("non-finite responsibilities for latent " + model.spec().latents[i].name);
            for (std::size_t l = 0; l < states; ++l) q[i][n * states + l] = logit[l] / total;
        }
    }
    return q;
}

// alpha~ = alpha + expected counts under q_latent.
inline FamilyTable vb_m_step(const VbemModel& model, const Responsibilities& q) {
    detail::check_q_latent(model, q);
    FamilyTable out = model.prior().alpha;
    for (std::size_t v = 0; v < model.nodes().size(); ++v) {
        const auto& node = model.nodes()[v];
        const auto card = static_cast<std::size_t>(node.card);
        for (std::size_t n = 0; n < model.rows(); ++n) {
            if (node.latent) {
                for (std::size_t l = 0; l < card; ++l) out[v][l] += q[node.slot][n * card + l];
                continue;
            }
            const auto x = static_cast<std::size_t>(model.value(n, v));
            model.for_each_config(n, v, q, SIZE_MAX, 0, [&](std::size_t config, double w) { out[v][config * card + x] += w; });
        }
    }
    return out;
}

namespace detail {

inline double entropy_of_latent(const VbemModel& model, const Responsibilities& q, std::size_t i) {
    double h = 0.0;
    for (double p : q[i])
        if (p > 0.0) h -= p * std::log(p);
    (void)model;
    return h;
}

inline double family_term(const VbemModel& model, const FamilyTable& q_theta, std::size_t v) {
    const auto card = static_cast<std::size_t>(model.nodes()[v].card);
    const auto& prior = model.prior().alpha[v];
    double sum = 0.0;
    for (std::size_t j = 0; j < prior.size() / card; ++j)
        sum += log_beta(q_theta[v].data() + j * card, card) - log_beta(prior.data() + j * card, card);
    return sum;
}

inline double elbo_at_fixed_point(const VbemModel& model, const FamilyTable& q_theta, const Responsibilities& q) {
    double value = 0.0;
    for (std::size_t v = 0; v < model.nodes().size(); ++v) value += family_term(model, q_theta, v);
    for (std::size_t i = 0; i < model.latent_count(); ++i) value += entropy_of_latent(model, q, i);
    return value;
}

inline void require_fixed_point(const VbemModel& model, const VariationalState& state) {
    detail::check_q_theta(model, state.q_theta);
    const auto expected = vb_m_step(model, state.q_latent);
    for (std::size_t v = 0; v < expected.size(); ++v)
        for (std::size_t k = 0; k < expected[v].size(); ++k)
            if (std::abs(expected[v][k] - state.q_theta[v][k]) > 1e-9 * (1.0 + std::abs(expected[v][k])))
                throw ValidationError("variational state is not at the VB-M fixed point; refusing to report a bound");
}

} // namespace detail

inline double elbo(const VbemModel& model, const VariationalState& state) {
    detail::require_fixed_point(model, state);
    const double value = detail::elbo_at_fixed_point(model, state.q_theta, state.q_latent);
    if (!std::isfinite(value)) throw NumericalError("non-finite ELBO");
    return value;
}

// ELBO restricted to the families of the listed latents and of their children, plus
// the entropy of those latents.
inline double score_subgraph(const VbemModel& model, const VariationalState& state,
                             const std::vector<std::string>& latents_of_interest) {
    detail::require_fixed_point(model, state);
    std::vector<bool> family(model.nodes().size(), false);
    double value = 0.0;
    for (const auto& name : latents_of_interest) {
        const auto i = model.latent_index(name);
        family[model.latent_node(i)] = true;
        for (auto c : model.latent_children(i)) family[c] = true;
        value += detail::entropy_of_latent(model, state.q_latent, i);
    }
    for (std::size_t v = 0; v < family.size(); ++v)
        if (family[v]) value += detail::family_term(model, state.q_theta, v);
    return value;
}

struct VbemOptions {
    double threshold = 0.01;
    int restarts = 5;
    int max_iterations = 500;
    std::uint64_t seed = 0;
};

// Responsibilities drawn from a symmetric Dirichlet(1) per row and latent.
inline Responsibilities random_responsibilities(const VbemModel& model, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gamma1(1.0);
    Responsibilities q(model.latent_count());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const auto states = static_cast<std::size_t>(model.latent_states(i));
        q[i].resize(model.rows() * states);
        for (std::size_t n = 0; n < model.rows(); ++n) {
            double total = 0.0;
            for (std::size_t l = 0; l < states; ++l) total += (q[i][n * states + l] = gamma1(rng) + 1e-300);
            for (std::size_t l = 0; l < states; ++l) q[i][n * states + l] /= total;
        }
    }
    return q;
}

// Alternates VB-E and VB-M from `initial` until |dELBO| < threshold or the cap.
inline std::pair<VariationalState, ScoreReport> run_vbem_from(const VbemModel& model, Responsibilities initial,
                                                              const VbemOptions& options) {
    if (!(options.threshold > 0.0)) throw ValidationError("VBEM threshold must be positive");
    VariationalState state;
    state.q_latent = std::move(initial);
    state.q_theta = vb_m_step(model, state.q_latent);
    state.elbo_trace.push_back(detail::elbo_at_fixed_point(model, state.q_theta, state.q_latent));
    ScoreReport report;
    for (int it = 1; it <= options.max_iterations; ++it) {
        state.q_latent = vb_e_step(model, state.q_theta, std::move(state.q_latent));
        state.q_theta = vb_m_step(model, state.q_latent);
        const double value = detail::elbo_at_fixed_point(model, state.q_theta, state.q_latent);
        if (!std::isfinite(value)) throw NumericalError("non-finite ELBO during VBEM");
        const double delta = value - state.elbo_trace.back();
        state.elbo_trace.push_back(value);
        report.iterations = it;
        if (std::abs(delta) < options.threshold) {
            report.converged = true;
            break;
        }
    }
    report.elbo = state.elbo_trace.back();
    report.p_elbo = p_elbo(report.elbo, model.spec());
    report.restarts_used = 1;
    return {std::move(state), report};
}

// Best of `restarts` seeded runs. Models without latents need a single run.
inline std::pair<VariationalState, ScoreReport> run_vbem(const VbemModel& model, const VbemOptions& options = {}) {
    const int runs = model.latent_count() == 0 ? 1 : std::max(1, options.restarts);
    std::pair<VariationalState, ScoreReport> best;
    bool have = false;
    for (int r = 0; r < runs; ++r) {
        auto init = random_responsibilities(model, stream_seed(options.seed, "restart-" + std::to_string(r)));
        auto run = run_vbem_from(model, std::move(init), options);
        if (!have || run.second.elbo > best.second.elbo) {
            best = std::move(run);
            have = true;
        }
    }
    best.second.restarts_used = runs;
    return best;
}

inline std::pair<VariationalState, ScoreReport> run_vbem(const LatentizedDag& dag, const Dataset& data,
                                                         const VbemOptions& options = {}, double alpha = 1.0) {
    return run_vbem(VbemModel(dag, data, alpha), options);
}

} // namespace latconf
