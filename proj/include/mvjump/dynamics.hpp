#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvjump/coefficients.hpp"
#include "mvjump/error.hpp"
#include "mvjump/generator.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/metrics.hpp"
#include "mvjump/model.hpp"
#include "mvjump/parallel.hpp"
#include "mvjump/random.hpp"

namespace mvjump {

// ---------------------------------------------------------------------------
// Controls and time grids
// ---------------------------------------------------------------------------

// Piecewise-constant control: values[k] on [breakpoints[k], breakpoints[k+1]).
class ControlPath {
public:
    ControlPath(std::vector<double> breakpoints, std::vector<Control> values)
        : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
        if (values_.empty() || breakpoints_.size() != values_.size() + 1)
            throw DomainError("control path: need one more breakpoint than values");
        for (std::size_t k = 0; k + 1 < breakpoints_.size(); ++k)
            if (!(breakpoints_[k] < breakpoints_[k + 1])) throw DomainError("control path: breakpoints must increase strictly");
    }

    static ControlPath constant(double t0, double t1, Control a) { return ControlPath({t0, t1}, {a}); }

    static ControlPath uniform(double t0, double t1, std::vector<Control> values) {
        const std::size_t n = values.size();
        std::vector<double> bp(n + 1);
        for (std::size_t k = 0; k <= n; ++k) bp[k] = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n);
        bp[n] = t1;
        return ControlPath(std::move(bp), std::move(values));
    }

    [[nodiscard]] double start() const noexcept { return breakpoints_.front(); }
    [[nodiscard]] double end() const noexcept { return breakpoints_.back(); }
    [[nodiscard]] std::size_t intervals() const noexcept { return values_.size(); }
    [[nodiscard]] const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    [[nodiscard]] const std::vector<Control>& values() const noexcept { return values_; }

    [[nodiscard]] std::size_t interval_of(double t) const {
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        std::ptrdiff_t k = (it - breakpoints_.begin()) - 1;
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(values_.size()) - 1));
    }
    [[nodiscard]] const Control& at(double t) const { return values_[interval_of(t)]; }

private:
    std::vector<double> breakpoints_;
    std::vector<Control> values_;
};

// Integration grid: every control breakpoint is a grid time; each control
// interval is split into equal steps no longer than dt.
struct TimeGrid {
    std::vector<double> times;
    std::vector<Control> step_control;       // control on [times[k], times[k+1])
    std::vector<std::size_t> step_interval;  // index of that control interval

    [[nodiscard]] std::size_t steps() const noexcept { return step_control.size(); }
};

inline TimeGrid make_grid(const ControlPath& alpha, double dt) {
    if (!(dt > 0.0)) throw DomainError("time step dt must be positive");
    TimeGrid g;
    const auto& bp = alpha.breakpoints();
    g.times.push_back(bp.front());
    for (std::size_t i = 0; i < alpha.intervals(); ++i) {
        double len = bp[i + 1] - bp[i];
        auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / dt - 1e-9)));
        for (std::size_t j = 1; j <= n; ++j) {
            g.times.push_back(j == n ? bp[i + 1] : bp[i] + len * static_cast<double>(j) / static_cast<double>(n));
            g.step_control.push_back(alpha.values()[i]);
            g.step_interval.push_back(i);
        }
    }
    return g;
}

// Moment trajectory of (mu_s) on a time grid.
struct MeasureFlow {
    std::vector<double> times;
    std::vector<MomentVector> moments;
    std::vector<std::vector<double>> std_errors;  // particle backend: SE of each moment
    std::vector<std::pair<double, ParticleMeasure>> snapshots;
    // Runge-Kutta stage states per step (moment backend), used by Picard.
    std::vector<std::array<std::vector<double>, 4>> stages;

    [[nodiscard]] int order() const { return moments.empty() ? 0 : moments.front().order(); }
    [[nodiscard]] const MomentVector& final_moments() const { return moments.back(); }
};

// ---------------------------------------------------------------------------
// Interacting particle simulation
// ---------------------------------------------------------------------------

struct ParticleOptions {
    double dt = 0.01;
    std::size_t n_particles = 10000;
    std::uint64_t seed = 1;
    int moment_order = 4;                 // moments recorded at each grid time
    std::optional<double> exp_delta;      // also record <mu, e_delta>
    std::vector<std::function<double(double)>> observables;  // extra recorded means
    std::vector<double> snapshot_times;   // nearest grid times
    bool record_trajectories = false;
};

struct ParticleRun {
    TimeGrid grid;
    MeasureFlow flow;
    std::vector<double> exp_mean, exp_se;
    std::vector<std::vector<double>> observable_mean, observable_se;  // [observable][time]
    std::vector<std::vector<double>> trajectories;                    // [time][particle]
    ParticleMeasure final_state = ParticleMeasure::dirac(0.0);
};

namespace detail {

// n equally weighted particles at the quantiles (i + 1/2)/n of mu0; a
// uniform cloud of size n is taken as is.
inline std::vector<double> initial_particles(const ParticleMeasure& mu0, std::size_t n) {
    const auto& w = mu0.weights();
    bool uniform = std::all_of(w.begin(), w.end(), [&](double v) { return std::fabs(v - w.front()) < 1e-15; });
    if (uniform && mu0.size() == n) return mu0.points();
    std::vector<std::size_t> order(mu0.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mu0.points()[a] < mu0.points()[b]; });
    std::vector<double> cdf(order.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) cdf[k] = (acc += w[order[k]]);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = (static_cast<double>(i) + 0.5) / static_cast<double>(n) * acc;
        auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        x[i] = mu0.points()[order[std::min(k, order.size() - 1)]];
    }
    return x;
}

struct EnsembleStats {
    std::vector<double> mean, se;
};

// Mean and standard error of g(x_i) over equally weighted particles, for
// the powers x^1..x^D. Fixed summation order.
inline EnsembleStats power_stats(const std::vector<double>& x, int D) {
    EnsembleStats s{std::vector<double>(static_cast<std::size_t>(D), 0.0), std::vector<double>(static_cast<std::size_t>(D), 0.0)};
    std::vector<double> sq(static_cast<std::size_t>(D), 0.0);
    for (double xi : x) {
        double p = 1.0;
        for (int k = 0; k < D; ++k) {
            p *= xi;
            s.mean[static_cast<std::size_t>(k)] += p;
            sq[static_cast<std::size_t>(k)] += p * p;
        }
    }
    const double n = static_cast<double>(x.size());
    for (int k = 0; k < D; ++k) {
        auto kk = static_cast<std::size_t>(k);
        s.mean[kk] /= n;
        double var = n > 1 ? std::max(0.0, (sq[kk] / n - s.mean[kk] * s.mean[kk]) * n / (n - 1.0)) : 0.0;
        s.se[kk] = std::sqrt(var / n);
    }
    return s;
}

template <class F>
std::pair<double, double> mean_se(const std::vector<double>& x, F&& g) {
    double sum = 0.0, sq = 0.0;
    for (double xi : x) {
        double v = g(xi);
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(x.size());
    double mean = sum / n;
    double var = n > 1 ? std::max(0.0, (sq / n - mean * mean) * n / (n - 1.0)) : 0.0;
    return {mean, std::sqrt(var / n)};
}

}  // namespace detail

// Euler-Maruyama for dX = b dt + sigma dW + dJ with the law replaced by the
// ensemble's empirical measure. Particles start at the quantiles of mu0. Per step each particle receives a
// Poisson(lambda dt) number of jumps drawn from gamma. Particle i uses the
// stream (seed, i); results are bitwise reproducible for a fixed seed.
inline ParticleRun simulate_particles(const ModelSpec& model, const ParticleMeasure& mu0, const ControlPath& alpha,
                                      const ParticleOptions& opt) {
    if (opt.n_particles == 0) throw DomainError("simulate_particles: need at least one particle");
    ParticleRun run;
    run.grid = make_grid(alpha, opt.dt);
    const TimeGrid& g = run.grid;
    const std::size_t n = opt.n_particles;
    const int dep = model.dependence_order();
    const int D = std::max(opt.moment_order, dep);

    std::vector<double> x = detail::initial_particles(mu0, n);
    std::vector<StreamRng> rng;
    rng.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rng.emplace_back(opt.seed, i);

    run.observable_mean.assign(opt.observables.size(), {});
    run.observable_se.assign(opt.observables.size(), {});
    std::vector<double> snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    auto record = [&](std::size_t k) {
        auto st = detail::power_stats(x, D);
        std::optional<double> em;
        if (opt.exp_delta) {
            auto [m, se] = detail::mean_se(x, [d = *opt.exp_delta](double v) { return e_delta(v, d); });
            run.exp_mean.push_back(m);
            run.exp_se.push_back(se);
            em = m;
        }
        for (std::size_t o = 0; o < opt.observables.size(); ++o) {
            auto [m, se] = detail::mean_se(x, opt.observables[o]);
            run.observable_mean[o].push_back(m);
            run.observable_se[o].push_back(se);
        }
        run.flow.times.push_back(g.times[k]);
        run.flow.moments.emplace_back(st.mean, em);
        run.flow.std_errors.push_back(st.se);
        if (opt.record_trajectories) run.trajectories.push_back(x);
        while (next_snap < snaps.size()) {
            double ts = snaps[next_snap];
            bool last = k + 1 == g.times.size();
            double here = std::fabs(g.times[k] - ts);
            double there = last ? here + 1.0 : std::fabs(g.times[k + 1] - ts);
            if (here > there) break;
            run.flow.snapshots.emplace_back(g.times[k], ParticleMeasure::uniform(x));
            ++next_snap;
        }
    };

    record(0);
    for (std::size_t k = 0; k < g.steps(); ++k) {
        const double t = g.times[k];
        const double h = g.times[k + 1] - t;
        const FrozenCoefficients c = freeze(model, t, run.flow.moments.back(), g.step_control[k]);
        if (!std::isfinite(c.drift) || !std::isfinite(c.volatility) || !std::isfinite(c.intensity))
            throw SimulationError(k, t, "non-finite coefficient");
        if (c.intensity < 0.0) throw SimulationError(k, t, "negative jump intensity");
        const double sq = std::sqrt(h);
        const double rate = c.intensity * h;

        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                StreamRng& r = rng[i];
                double dx = c.drift * h;
                if (c.volatility != 0.0) dx += c.volatility * sq * std::normal_distribution<double>(0.0, 1.0)(r);
                if (rate > 0.0) {
                    int jumps = std::poisson_distribution<int>(rate)(r);
                    for (int q = 0; q < jumps; ++q) dx += model.jump.sample(r);
                }
                x[i] += dx;
            }
        });
        for (std::size_t i = 0; i < n; ++i)
            if (!std::isfinite(x[i])) throw SimulationError(k, t, "non-finite particle state (particle " + std::to_string(i) + ")");
        record(k + 1);
    }
    run.final_state = ParticleMeasure::uniform(x);
    return run;
}

// ---------------------------------------------------------------------------
// Moment flow: d/ds <mu_s, x^k> = <mu_s, L[x^k]>, k = 1..D
// ---------------------------------------------------------------------------

namespace detail {

// Precomputed pieces of L[x^k]: derivative, second derivative, jump image.
struct MonomialGenerator {
    std::vector<NumericPolynomial> first, second, jump;

    MonomialGenerator(int D, std::span<const double> m) {
        for (int k = 1; k <= D; ++k) {
            auto xk = NumericPolynomial::monomial(static_cast<unsigned>(k));
            first.push_back(xk.derivative(1));
            second.push_back(xk.derivative(2));
            jump.push_back(jump_image(xk, m));
        }
    }

    void rhs(const FrozenCoefficients& c, const std::vector<double>& y, std::vector<double>& dy) const {
        MomentVector mv(y);
        dy.resize(y.size());
        const double diff = 0.5 * c.volatility * c.volatility;
        for (std::size_t k = 0; k < y.size(); ++k) {
            dy[k] = c.drift * pairing(mv, first[k]) + diff * pairing(mv, second[k]) + c.intensity * pairing(mv, jump[k]);
        }
    }
};

// Coefficients at (step, stage, stage time, stage state).
using CoefficientSource =
    std::function<FrozenCoefficients(std::size_t, int, double, const std::vector<double>&)>;

// Classical RK4 on the grid; records every stage state.
inline MeasureFlow rk4_moments(const ModelSpec& model, const std::vector<double>& y0, const TimeGrid& g,
                               const CoefficientSource& coefficients) {
    const int D = static_cast<int>(y0.size());
    MonomialGenerator gen(D, model.jump_m(static_cast<unsigned>(D)));
    MeasureFlow flow;
    flow.times = g.times;
    flow.moments.reserve(g.times.size());
    flow.moments.emplace_back(y0);
    flow.stages.reserve(g.steps());

    std::vector<double> y = y0, k1, k2, k3, k4, tmp(y0.size());
    for (std::size_t s = 0; s < g.steps(); ++s) {
        const double t = g.times[s];
        const double h = g.times[s + 1] - t;
        std::array<std::vector<double>, 4> st;

        st[0] = y;
        gen.rhs(coefficients(s, 0, t, st[0]), st[0], k1);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        st[1] = tmp;
        gen.rhs(coefficients(s, 1, t + 0.5 * h, st[1]), st[1], k2);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        st[2] = tmp;
        gen.rhs(coefficients(s, 2, t + 0.5 * h, st[2]), st[2], k3);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + h * k3[i];
        st[3] = tmp;
        gen.rhs(coefficients(s, 3, t + h, st[3]), st[3], k4);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

        flow.stages.push_back(std::move(st));
        flow.moments.emplace_back(y);
    }
    return flow;
}

inline std::vector<double> initial_moments(const ModelSpec& model, const MomentVector& mu0, int D) {
    if (D < 1) throw DomainError("moment order D must be at least 1");
    for (int i : model.moment_indices)
        if (i < 1 || i > D)
            throw DomainError("moment system not closed: coefficients read moment " + std::to_string(i) +
                              " but D = " + std::to_string(D));
    return mu0.truncated(D).raw();
}

}  // namespace detail

// Fourth-order Runge-Kutta integration of the closed moment system.
inline MeasureFlow moment_flow(const ModelSpec& model, const MomentVector& mu0, const ControlPath& alpha, int D, double dt) {
    const auto y0 = detail::initial_moments(model, mu0, D);
    const TimeGrid g = make_grid(alpha, dt);
    return detail::rk4_moments(model, y0, g, [&](std::size_t s, int, double t, const std::vector<double>& y) {
        return freeze(model, t, MomentVector(y), g.step_control[s]);
    });
}

// ---------------------------------------------------------------------------
// Picard iteration for the law
// ---------------------------------------------------------------------------

struct PicardOptions {
    double tol = 1e-12;
    std::size_t max_iter = 50;
    std::size_t j_max = 20;
    std::optional<CoefficientTable> table;     // metric for the gaps; built from the model if absent
    std::optional<MeasureFlow> initial_guess;  // default: mu_s = mu_0 for all s
};

struct PicardResult {
    MeasureFlow flow;
    std::vector<double> gaps;  // d_sup(Phi^{k}, Phi^{k-1}), k = 1, 2, ...
    std::size_t iterations = 0;
};

// sup over grid times of the moment-restricted absolute metric.
inline double flow_distance(const MeasureFlow& a, const MeasureFlow& b, const CoefficientTable& table, std::size_t j_max) {
    if (a.moments.size() != b.moments.size()) throw DomainError("flow_distance: flows on different grids");
    double d = 0.0;
    for (std::size_t k = 0; k < a.moments.size(); ++k)
        d = std::max(d, moment_metric_d_abs(a.moments[k], b.moments[k], table, j_max));
    return d;
}

// Iterates Phi: integrate the moment ODEs with b, sigma, lambda frozen along
// the previous flow (evaluated at its Runge-Kutta stage states, so the fixed
// point is exactly the direct moment_flow solution). Stops once successive
// flows are within `tol` in d_sup.
inline PicardResult picard_solve(const ModelSpec& model, const MomentVector& mu0, const ControlPath& alpha, int D,
                                 double dt, const PicardOptions& opt = {}) {
    const auto y0 = detail::initial_moments(model, mu0, D);
    const TimeGrid g = make_grid(alpha, dt);
    const CoefficientTable table =
        opt.table ? *opt.table : coeff_table(1.0, opt.j_max, model.jump, model.delta);
    const std::size_t j_max = std::min(opt.j_max, table.size());

    MeasureFlow current;
    if (opt.initial_guess) {
        current = *opt.initial_guess;
        if (current.moments.size() != g.times.size()) throw DomainError("picard_solve: initial guess on a different grid");
        if (current.stages.size() != g.steps()) {
            current.stages.clear();
            for (std::size_t s = 0; s < g.steps(); ++s) {
                const auto& a = current.moments[s].raw();
                const auto& b = current.moments[s + 1].raw();
                std::vector<double> mid(a.size());
                for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
                current.stages.push_back({a, mid, mid, b});
            }
        }
    } else {
        current.times = g.times;
        current.moments.assign(g.times.size(), MomentVector(y0));
        current.stages.assign(g.steps(), {y0, y0, y0, y0});
    }

    PicardResult res;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        MeasureFlow next = detail::rk4_moments(model, y0, g, [&](std::size_t s, int stage, double t, const std::vector<double>&) {
            return freeze(model, t, MomentVector(current.stages[s][static_cast<std::size_t>(stage)]), g.step_control[s]);
        });
        double gap = flow_distance(next, current, table, j_max);
        res.gaps.push_back(gap);
        current = std::move(next);
        if (gap < opt.tol) {
            res.flow = std::move(current);
            res.iterations = it;
            return res;
        }
    }
    throw ConvergenceError(res.gaps);
}

// ---------------------------------------------------------------------------
// Exponential-moment invariance
// ---------------------------------------------------------------------------

struct InvariancePoint {
    double time = 0.0;
    double estimate = 0.0;    // MC estimate of <mu_u, e_delta>
    double std_error = 0.0;
    double level_bound = 0.0; // N exp(K* u)
    double flow_bound = 0.0;  // exp(K*(u - t)) <mu_t, e_delta>
    bool flagged = false;     // estimate - 3 SE > level_bound
};

struct InvarianceReport {
    std::vector<InvariancePoint> points;
    bool initial_in_level = true;
    [[nodiscard]] bool ok() const {
        return std::none_of(points.begin(), points.end(), [](const auto& p) { return p.flagged; });
    }
};

// Needs a run that recorded <mu, e_delta> (ParticleOptions::exp_delta).
inline InvarianceReport invariance_check(const ParticleRun& run, double level, const ExpMomentParams& params) {
    if (run.exp_mean.size() != run.flow.times.size())
        throw DomainError("invariance_check: particle run did not record the exponential moment");
    InvarianceReport rep;
    const double t0 = run.flow.times.front();
    rep.initial_in_level = run.exp_mean.front() <= level * std::exp(params.k_star * t0) * (1.0 + 1e-12);
    for (std::size_t k = 0; k < run.flow.times.size(); ++k) {
        InvariancePoint p;
        p.time = run.flow.times[k];
        p.estimate = run.exp_mean[k];
        p.std_error = run.exp_se[k];
        p.level_bound = level * std::exp(params.k_star * p.time);
        p.flow_bound = std::exp(params.k_star * (p.time - t0)) * run.exp_mean.front();
        p.flagged = p.estimate - 3.0 * p.std_error > p.level_bound;
        rep.points.push_back(p);
    }
    return rep;
}

}  // namespace mvjump
