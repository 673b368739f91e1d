#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "mvjump/closure.hpp"
#include "mvjump/coefficients.hpp"
#include "mvjump/config.hpp"
#include "mvjump/control.hpp"
#include "mvjump/dynamics.hpp"
#include "mvjump/expression.hpp"
#include "mvjump/metrics.hpp"

namespace mvjump {

struct CheckResult {
    std::string name;
    bool passed = false;
    bool skipped = false;
    std::string detail;
};

namespace checks {

inline ClosureSet closure_of(const std::vector<std::string>& items, const std::string& generator) {
    std::vector<Polynomial> el;
    for (const auto& s : items) el.push_back(parse_polynomial(s));
    return ClosureSet(parse_polynomial(generator), std::move(el));
}

// The three closures listed for x, x^2, x^3.
inline std::vector<ClosureSet> closure_goldens() {
    return {
        closure_of({"0", "1", "m1", "x"}, "x"),
        closure_of({"0", "2", "2*m1", "2*m1^2", "2*x", "2*m1*x + 2*m2", "x^2"}, "x^2"),
        closure_of({"0", "6", "6*m1", "6*m1^2", "6*m1^3", "6*x", "6*m1*x + 6*m2", "6*m1^2*x + 12*m1*m2", "3*x^2",
                    "3*m1*x^2 + 6*m2*x + 6*m3", "x^3"},
                   "x^3"),
    };
}

inline CheckResult closure_check() {
    CheckResult r{"closure goldens", true, false, ""};
    std::ostringstream os;
    for (const auto& golden : closure_goldens()) {
        ClosureSet got = star_closure(golden.generator());
        bool same = got.elements() == golden.elements();
        r.passed = r.passed && same;
        os << "|chi(" << golden.generator().to_string() << ")| = " << got.size() << (same ? "" : " (mismatch)") << "; ";
    }
    r.detail = os.str();
    return r;
}

// c_j <= 2^{-j}, c_j <= c_i for i in I_j, and the series bound on mu0.
inline CheckResult coefficient_check(const RunConfig& cfg, std::size_t J = 50) {
    CheckResult r{"coefficient inequalities", true, false, ""};
    const double b = std::max(1.0, pairing(cfg.initial, [&](double x) { return e_delta(x, cfg.model.delta); }));
    const CoefficientTable t = coeff_table(b, J, cfg.model.jump, cfg.model.delta);
    std::size_t bad_decay = 0, bad_mono = 0;
    for (std::size_t j = 0; j < J; ++j) {
        if (!(t.c[j] <= std::ldexp(1.0, -static_cast<int>(j + 1)))) ++bad_decay;
        for (std::size_t i : t.deps[j])
            if (!(t.c[j] <= t.c[i - 1])) ++bad_mono;
    }
    double series = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        double v = pairing(cfg.initial, t.numeric[j]);
        series += t.c[j] * v * v;
    }
    const double tail = std::ldexp(1.0, -static_cast<int>(J));
    r.passed = bad_decay == 0 && bad_mono == 0 && series <= 1.0 + tail;
    std::ostringstream os;
    os << "b = " << b << ", decay violations " << bad_decay << ", monotonicity violations " << bad_mono
       << ", sum c_j <mu0,f_j>^2 = " << series;
    r.detail = os.str();
    return r;
}

// Ensemble moments versus moment_flow, 3 standard errors at every grid time.
inline CheckResult agreement_check(const RunConfig& cfg) {
    CheckResult r{"particle / moment-flow agreement", true, false, ""};
    const ModelSpec& m = cfg.model;
    const int K = std::min(4, cfg.D);
    const ControlPath alpha = ControlPath::constant(cfg.t0, cfg.horizon, m.controls.front());
    ParticleOptions opt;
    opt.dt = cfg.dt;
    opt.n_particles = cfg.particles;
    opt.seed = cfg.seed;
    opt.moment_order = std::max(K, m.dependence_order());
    const ParticleRun run = simulate_particles(m, cfg.initial, alpha, opt);
    const int D = std::max(K, m.dependence_order());
    const MeasureFlow flow = moment_flow(m, cfg.initial.moments(D), alpha, D, cfg.dt);
    double worst = 0.0;
    for (std::size_t k = 1; k < flow.times.size(); ++k) {
        for (int q = 1; q <= K; ++q) {
            double se = run.flow.std_errors[k][static_cast<std::size_t>(q - 1)];
            double diff = std::fabs(run.flow.moments[k].moment(q) - flow.moments[k].moment(q));
            double z = se > 0.0 ? diff / se : (diff > 1e-9 ? INFINITY : 0.0);
            worst = std::max(worst, z);
        }
    }
    r.passed = worst <= 3.0;
    std::ostringstream os;
    os << cfg.particles << " particles, moments 1.." << K << ", largest deviation " << worst << " SE";
    r.detail = os.str();
    return r;
}

// No grid time where the exponential moment exceeds N e^{K* u} by 3 SE,
// with N the smallest level containing (t0, mu0).
inline CheckResult invariance_battery(const RunConfig& cfg) {
    CheckResult r{"exponential-moment invariance", true, false, ""};
    const ModelSpec& m = cfg.model;
    const double em = pairing(cfg.initial, [&](double x) { return e_delta(x, m.delta); });
    const ExpMomentParams params = ExpMomentParams::make(m.c0, m.delta, m.jump, 1.0);
    const double N = em * std::exp(-params.k_star * cfg.t0);
    ParticleOptions opt;
    opt.dt = cfg.dt;
    opt.n_particles = cfg.particles;
    opt.seed = cfg.seed;
    opt.moment_order = 1;
    opt.exp_delta = m.delta;
    std::size_t flagged = 0;
    for (const Control& a : m.controls) {
        const ParticleRun run = simulate_particles(m, cfg.initial, ControlPath::constant(cfg.t0, cfg.horizon, a), opt);
        const InvarianceReport rep = invariance_check(run, N, ExpMomentParams::make(m.c0, m.delta, m.jump, N));
        for (const auto& p : rep.points) flagged += p.flagged;
    }
    r.passed = flagged == 0;
    std::ostringstream os;
    os << "K* = " << params.k_star << ", N = " << N << ", " << m.controls.size() << " constant controls, flagged times "
       << flagged;
    r.detail = os.str();
    return r;
}

inline CheckResult dpp_check(const RunConfig& cfg) {
    CheckResult r{"dynamic programming residual", true, false, ""};
    const std::size_t n = std::max<std::size_t>(cfg.n_intervals, 2);
    const double theta = cfg.theta.value_or(cfg.t0 + (cfg.horizon - cfg.t0) * static_cast<double>(n / 2) / static_cast<double>(n));
    SearchOptions opt = cfg.search();
    opt.backend = Backend::moment;
    try {
        const DppReport rep = dpp_residual(cfg.model, cfg.t0, cfg.initial, cfg.horizon, n, theta, opt);
        r.passed = rep.residual <= 1e-9;
        std::ostringstream os;
        os << "n = " << n << ", theta = " << theta << ", V = " << rep.direct << ", residual " << rep.residual;
        r.detail = os.str();
    } catch (const CostNotEvaluableError& e) {
        r.skipped = true;
        r.passed = true;
        r.detail = std::string("skipped: ") + e.what();
    }
    return r;
}

inline CheckResult picard_check(const RunConfig& cfg) {
    CheckResult r{"Picard fixed point", true, false, ""};
    const ModelSpec& m = cfg.model;
    const int D = std::max(1, std::min(cfg.D, std::max(4, m.dependence_order())));
    const ControlPath alpha = ControlPath::constant(cfg.t0, cfg.horizon, m.controls.front());
    PicardOptions po;
    po.tol = cfg.picard_tol;
    po.max_iter = cfg.picard_max_iter;
    po.j_max = cfg.j_max;
    try {
        const MomentVector m0 = cfg.initial.moments(D);
        const PicardResult pr = picard_solve(m, m0, alpha, D, cfg.dt, po);
        const MeasureFlow direct = moment_flow(m, m0, alpha, D, cfg.dt);
        const CoefficientTable table = coeff_table(1.0, po.j_max, m.jump, m.delta);
        const double diff = flow_distance(pr.flow, direct, table, std::min(po.j_max, table.size()));
        r.passed = diff <= 10.0 * po.tol;
        std::ostringstream os;
        os << pr.iterations << " iterations, final gap " << pr.gaps.back() << ", distance to moment_flow " << diff;
        r.detail = os.str();
    } catch (const ConvergenceError& e) {
        r.passed = false;
        r.detail = e.what();
    }
    return r;
}

inline CheckResult assumption_check(const RunConfig& cfg) {
    CheckResult r{"standing assumptions (sampled)", true, false, ""};
    auto issues = check_assumptions(cfg.model, cfg.horizon);
    r.passed = issues.empty();
    r.detail = issues.empty() ? "bounds hold on all samples" : issues.front();
    return r;
}

}  // namespace checks

// The battery behind `mvjump check`.
inline std::vector<CheckResult> run_check_battery(const RunConfig& cfg) {
    std::vector<CheckResult> out;
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, false, std::string("error: ") + e.what()});
        }
    };
    guarded("closure goldens", [] { return checks::closure_check(); });
    guarded("standing assumptions (sampled)", [&] { return checks::assumption_check(cfg); });
    guarded("coefficient inequalities", [&] { return checks::coefficient_check(cfg); });
    guarded("particle / moment-flow agreement", [&] { return checks::agreement_check(cfg); });
    guarded("exponential-moment invariance", [&] { return checks::invariance_battery(cfg); });
    guarded("Picard fixed point", [&] { return checks::picard_check(cfg); });
    guarded("dynamic programming residual", [&] { return checks::dpp_check(cfg); });
    return out;
}

}  // namespace mvjump
