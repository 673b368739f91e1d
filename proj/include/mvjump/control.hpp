#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvjump/dynamics.hpp"
#include "mvjump/error.hpp"
#include "mvjump/generator.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/model.hpp"
#include "mvjump/parallel.hpp"

namespace mvjump {

enum class Backend { moment, particle };

inline std::string to_string(Backend b) { return b == Backend::moment ? "moment" : "particle"; }

inline Backend parse_backend(const std::string& s) {
    if (s == "moment") return Backend::moment;
    if (s == "particle") return Backend::particle;
    throw DomainError("unknown backend '" + s + "' (expected moment or particle)");
}

struct SimParams {
    double dt = 0.01;
    std::size_t n_particles = 10000;
    std::uint64_t seed = 1;
    int D = 4;  // moment order for the moment backend (raised to the model's needs)
};

struct CostBreakdown {
    double total = 0.0;
    std::vector<double> interval_costs;  // running cost per control interval
    double terminal = 0.0;
};

struct PathEvaluation {
    CostBreakdown cost;
    MeasureState final_state;
};

namespace detail {

inline int moment_backend_order(const ModelSpec& model, const SimParams& sim) {
    return std::max({1, model.required_order(), sim.D});
}

inline PathEvaluation evaluate_moment(const ModelSpec& model, const MeasureState& mu0, const ControlPath& alpha,
                                      const SimParams& sim) {
    if (!model.state_cost.is_zero() && !model.state_cost.polynomial) throw CostNotEvaluableError("L3 (running state cost)");
    if (!model.terminal.of_moments) throw CostNotEvaluableError("G (terminal cost)");
    const int D = moment_backend_order(model, sim);
    const MomentVector m0 = moments_of(mu0, D);
    const MeasureFlow flow = moment_flow(model, m0, alpha, D, sim.dt);
    const TimeGrid g = make_grid(alpha, sim.dt);

    CostBreakdown c;
    c.interval_costs.assign(alpha.intervals(), 0.0);
    auto L = [&](std::size_t k, const Control& a) {
        const MomentVector& m = flow.moments[k];
        return running_cost(model, g.times[k], m, state_cost_pairing(model, m), a);
    };
    for (std::size_t s = 0; s < g.steps(); ++s) {
        const double h = g.times[s + 1] - g.times[s];
        const Control& a = g.step_control[s];
        c.interval_costs[g.step_interval[s]] += 0.5 * h * (L(s, a) + L(s + 1, a));
    }
    c.terminal = model.terminal.of_moments(flow.final_moments());
    c.total = c.terminal;
    for (double v : c.interval_costs) c.total += v;
    return {std::move(c), flow.final_moments()};
}

inline PathEvaluation evaluate_particle(const ModelSpec& model, const MeasureState& mu0, const ControlPath& alpha,
                                        const SimParams& sim) {
    const auto* p0 = std::get_if<ParticleMeasure>(&mu0);
    if (!p0) throw DomainError("particle backend needs a particle initial measure");
    ParticleOptions opt;
    opt.dt = sim.dt;
    opt.n_particles = sim.n_particles;
    opt.seed = sim.seed;
    opt.moment_order = std::max({1, model.running_moment_order, model.terminal.moment_order});
    if (!model.state_cost.is_zero()) opt.observables.push_back(model.state_cost.fn);
    const ParticleRun run = simulate_particles(model, *p0, alpha, opt);
    const TimeGrid& g = run.grid;

    CostBreakdown c;
    c.interval_costs.assign(alpha.intervals(), 0.0);
    auto L = [&](std::size_t k, const Control& a) {
        double l3 = model.state_cost.is_zero() ? 0.0 : run.observable_mean[0][k];
        return running_cost(model, g.times[k], run.flow.moments[k], l3, a);
    };
    for (std::size_t s = 0; s < g.steps(); ++s) {
        const double h = g.times[s + 1] - g.times[s];
        const Control& a = g.step_control[s];
        c.interval_costs[g.step_interval[s]] += 0.5 * h * (L(s, a) + L(s + 1, a));
    }
    c.terminal = terminal_cost(model, run.final_state);
    c.total = c.terminal;
    for (double v : c.interval_costs) c.total += v;
    return {std::move(c), run.final_state};
}

}  // namespace detail

// Running cost by the trapezoid rule on the simulation grid (each step uses
// its own control at both ends) plus G at the final time.
inline PathEvaluation evaluate_path(const ModelSpec& model, const MeasureState& mu0, const ControlPath& alpha,
                                    Backend backend, const SimParams& sim) {
    return backend == Backend::moment ? detail::evaluate_moment(model, mu0, alpha, sim)
                                      : detail::evaluate_particle(model, mu0, alpha, sim);
}

inline CostBreakdown cost_breakdown(const ModelSpec& model, double t, const MeasureState& mu0, const ControlPath& alpha,
                                    Backend backend, const SimParams& sim) {
    if (std::fabs(t - alpha.start()) > 1e-12 * std::max(1.0, std::fabs(t)))
        throw DomainError("cost_functional: control path must start at t");
    return evaluate_path(model, mu0, alpha, backend, sim).cost;
}

// J(t, mu0, alpha) = int_t^T L(s, mu_s, alpha_s) ds + G(mu_T)
inline double cost_functional(const ModelSpec& model, double t, const MeasureState& mu0, const ControlPath& alpha,
                              Backend backend, const SimParams& sim) {
    return cost_breakdown(model, t, mu0, alpha, backend, sim).total;
}

// ---------------------------------------------------------------------------
// Exhaustive search over piecewise-constant controls
// ---------------------------------------------------------------------------

struct SearchOptions {
    Backend backend = Backend::moment;
    SimParams sim;
    std::size_t budget = std::size_t{1} << 20;  // max number of candidate sequences
};

struct ValueResult {
    double value = 0.0;
    std::optional<ControlPath> control;       // empty when t == T
    std::vector<std::size_t> control_indices; // positions in the model's control grid
    Backend backend = Backend::moment;
    std::vector<double> interval_costs;
    double terminal_cost = 0.0;
    std::uint64_t seed = 0;
    double t0 = 0.0;
    double horizon = 0.0;
    std::size_t candidates = 0;
    // Minimum over piecewise-constant controls only: an upper approximation of V.
    std::string label = "upper_approximation";
};

inline std::size_t candidate_count(std::size_t grid_size, std::size_t n_intervals, std::size_t budget) {
    std::size_t total = 1;
    for (std::size_t k = 0; k < n_intervals; ++k) {
        if (grid_size != 0 && total > budget / grid_size)
            throw BudgetError("value search: " + std::to_string(grid_size) + "^" + std::to_string(n_intervals) +
                              " control sequences exceed the budget of " + std::to_string(budget) +
                              "; use fewer intervals or a coarser control grid");
        total *= grid_size;
    }
    if (total > budget) throw BudgetError("value search: candidate count exceeds budget " + std::to_string(budget));
    return total;
}

// Minimum over all control sequences on the given breakpoints. Candidate
// index order is lexicographic in the grid positions; the first minimum wins.
inline ValueResult value_search_on(const ModelSpec& model, const MeasureState& mu0, const std::vector<double>& breakpoints,
                                   const SearchOptions& opt) {
    if (breakpoints.empty()) throw DomainError("value search: no breakpoints");
    if (model.controls.empty()) throw DomainError("value search: empty control grid");
    ValueResult res;
    res.backend = opt.backend;
    res.seed = opt.sim.seed;
    res.t0 = breakpoints.front();
    res.horizon = breakpoints.back();
    const std::size_t n = breakpoints.size() - 1;

    if (n == 0) {
        res.value = res.terminal_cost = terminal_cost(model, mu0);
        res.candidates = 1;
        return res;
    }

    const std::size_t A = model.controls.size();
    const std::size_t total = candidate_count(A, n, opt.budget);
    auto digits = [&](std::size_t idx) {
        std::vector<std::size_t> d(n);
        for (std::size_t k = n; k-- > 0;) {
            d[k] = idx % A;
            idx /= A;
        }
        return d;
    };
    auto path_of = [&](const std::vector<std::size_t>& d) {
        std::vector<Control> v;
        v.reserve(n);
        for (std::size_t k : d) v.push_back(model.controls[k]);
        return ControlPath(breakpoints, std::move(v));
    };

    std::vector<double> totals(total);
    parallel_for(total, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            totals[i] = evaluate_path(model, mu0, path_of(digits(i)), opt.backend, opt.sim).cost.total;
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < total; ++i)
        if (totals[i] < totals[best]) best = i;

    res.control_indices = digits(best);
    res.control = path_of(res.control_indices);
    const PathEvaluation ev = evaluate_path(model, mu0, *res.control, opt.backend, opt.sim);
    res.value = ev.cost.total;
    res.interval_costs = ev.cost.interval_costs;
    res.terminal_cost = ev.cost.terminal;
    res.candidates = total;
    return res;
}

inline std::vector<double> uniform_breakpoints(double t, double T, std::size_t n) {
    if (n == 0) {
        if (std::fabs(T - t) > 1e-12 * std::max(1.0, std::fabs(T)))
            throw DomainError("value search: zero intervals requires t == T");
        return {t};
    }
    if (!(T > t)) throw DomainError("value search: horizon must exceed t");
    std::vector<double> bp(n + 1);
    for (std::size_t k = 0; k <= n; ++k) bp[k] = t + (T - t) * static_cast<double>(k) / static_cast<double>(n);
    bp[n] = T;
    return bp;
}

// V(t, mu0) approximated by the best control that is constant on each of
// n_intervals equal pieces of [t, T].
inline ValueResult value_search(const ModelSpec& model, double t, const MeasureState& mu0, double T,
                                std::size_t n_intervals, const SearchOptions& opt = {}) {
    return value_search_on(model, mu0, uniform_breakpoints(t, T, n_intervals), opt);
}

// ---------------------------------------------------------------------------
// Dynamic programming diagnostics
// ---------------------------------------------------------------------------

struct DppReport {
    double residual = 0.0;
    double direct = 0.0;  // V(t, mu0)
    double split = 0.0;   // min over first-stage controls of stage cost + V(theta, mu_theta)
    std::size_t theta_index = 0;
};

// |V(t, mu0) - min_{first stage} [int_t^theta L + V(theta, mu_theta)]| with
// both stages searched on the same uniform breakpoints.
inline DppReport dpp_residual(const ModelSpec& model, double t, const MeasureState& mu0, double T, std::size_t n_intervals,
                              double theta, const SearchOptions& opt = {}) {
    const std::vector<double> bp = uniform_breakpoints(t, T, n_intervals);
    std::size_t k = bp.size();
    for (std::size_t i = 0; i < bp.size(); ++i)
        if (std::fabs(bp[i] - theta) <= 1e-12 * std::max(1.0, std::fabs(theta))) k = i;
    if (k == bp.size())
        throw DomainError("dpp_residual: misaligned grids, theta = " + std::to_string(theta) +
                          " is not a control breakpoint");

    DppReport rep;
    rep.theta_index = k;
    rep.direct = value_search_on(model, mu0, bp, opt).value;

    const std::vector<double> first(bp.begin(), bp.begin() + static_cast<std::ptrdiff_t>(k) + 1);
    const std::vector<double> second(bp.begin() + static_cast<std::ptrdiff_t>(k), bp.end());
    if (k == 0) {
        rep.split = value_search_on(model, mu0, second, opt).value;
    } else {
        const std::size_t A = model.controls.size();
        const std::size_t total = candidate_count(A, k, opt.budget);
        std::vector<double> vals(total);
        parallel_for(total, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                std::vector<Control> v(k);
                std::size_t idx = i;
                for (std::size_t q = k; q-- > 0;) {
                    v[q] = model.controls[idx % A];
                    idx /= A;
                }
                const PathEvaluation ev = evaluate_path(model, mu0, ControlPath(first, std::move(v)), opt.backend, opt.sim);
                double stage = 0.0;
                for (double c : ev.cost.interval_costs) stage += c;
                vals[i] = stage + value_search_on(model, ev.final_state, second, opt).value;
            }
        });
        rep.split = *std::min_element(vals.begin(), vals.end());
    }
    rep.residual = std::fabs(rep.direct - rep.split);
    return rep;
}

// -d/dt phi(t, mu) + max_a H^a(t, mu, D_m phi)
inline double viscosity_residual(const CylindricalTest& phi, double t, const MeasureState& mu, const ModelSpec& model) {
    return -phi.time_derivative(t, mu) + hamiltonian(t, mu, phi.linear_derivative(t, mu), model).value;
}

// phi(t, mu) = (t - t0)^2 + sum_{j>=1} <mu - mu0, x^j>^2 / ((j + 1) 2^j),
// truncated at j_max. With R the largest |x| over both supports and
// q = R^2 / 2, the j-th term is at most 4 q^j / (j + 1), so the omitted tail
// is at most 4 q^{J+1} / ((J + 2)(1 - q)) when q < 1.
class StrictMaxTest {
public:
    StrictMaxTest(double t0, ParticleMeasure mu0, std::size_t j_max)
        : t0_(t0), mu0_(std::move(mu0)), j_max_(j_max) {
        if (j_max_ == 0) throw DomainError("strict_max_testfn: j_max must be at least 1");
        m0_ = mu0_.moments(static_cast<int>(j_max_));
    }

    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] std::size_t j_max() const noexcept { return j_max_; }
    [[nodiscard]] static double weight(std::size_t j) { return 1.0 / (static_cast<double>(j + 1) * std::ldexp(1.0, static_cast<int>(j))); }

    [[nodiscard]] double value(double t, const MeasureState& mu) const {
        const MomentVector m = moments_of(mu, static_cast<int>(j_max_));
        double v = (t - t0_) * (t - t0_);
        for (std::size_t j = 1; j <= j_max_; ++j) {
            double d = m.moment(static_cast<int>(j)) - m0_.moment(static_cast<int>(j));
            v += weight(j) * d * d;
        }
        return v;
    }

    // Certified bound on the omitted terms; +inf when it cannot be certified
    // (moment input or R^2 >= 2).
    [[nodiscard]] double tail_bound(const MeasureState& mu) const {
        const auto* p = std::get_if<ParticleMeasure>(&mu);
        if (!p) return std::numeric_limits<double>::infinity();
        const double R = std::max(p->max_abs(), mu0_.max_abs());
        const double q = 0.5 * R * R;
        if (q >= 1.0) return std::numeric_limits<double>::infinity();
        const auto J = static_cast<double>(j_max_);
        return 4.0 * std::pow(q, J + 1.0) / ((J + 2.0) * (1.0 - q));
    }

    [[nodiscard]] double time_derivative(double t) const { return 2.0 * (t - t0_); }

    // D_m phi(t, mu, x) = sum_j 2 w_j <mu - mu0, x^j> x^j
    [[nodiscard]] NumericPolynomial linear_derivative(const MeasureState& mu) const {
        const MomentVector m = moments_of(mu, static_cast<int>(j_max_));
        NumericPolynomial out;
        for (std::size_t j = 1; j <= j_max_; ++j) {
            double d = m.moment(static_cast<int>(j)) - m0_.moment(static_cast<int>(j));
            out += NumericPolynomial::monomial(static_cast<unsigned>(j), 2.0 * weight(j) * d);
        }
        return out;
    }

private:
    double t0_;
    ParticleMeasure mu0_;
    std::size_t j_max_;
    MomentVector m0_;
};

inline StrictMaxTest strict_max_testfn(double t0, const ParticleMeasure& mu0, std::size_t j_max) {
    return StrictMaxTest(t0, mu0, j_max);
}

}  // namespace mvjump
