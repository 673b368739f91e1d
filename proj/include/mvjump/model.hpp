#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mvjump/error.hpp"
#include "mvjump/jump_law.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/random.hpp"
#include "mvjump/symbolic.hpp"

namespace mvjump {

// A point of the control grid. One-dimensional models use a1 only.
struct Control {
    double a1 = 0.0;
    double a2 = 0.0;

    friend bool operator==(const Control&, const Control&) = default;
};

// b, sigma, lambda and L1 see the measure only through its moments.
using CoefficientFn = std::function<double(double t, const MomentVector& m, const Control& a)>;

// L3 in L = L1 + L2(a) <mu, L3>.
struct StateCost {
    std::function<double(double)> fn;           // empty means L3 == 0
    std::optional<NumericPolynomial> polynomial; // set when L3 is a polynomial

    [[nodiscard]] bool is_zero() const noexcept { return !fn; }
    double operator()(double x) const { return fn ? fn(x) : 0.0; }

    static StateCost zero() { return {}; }
    static StateCost from_polynomial(NumericPolynomial p) {
        StateCost s;
        s.fn = [p](double x) { return p(x); };
        s.polynomial = std::move(p);
        return s;
    }
    static StateCost from_function(std::function<double(double)> f) {
        StateCost s;
        s.fn = std::move(f);
        return s;
    }
};

// G(mu). `of_moments` reads moments up to `moment_order`; `of_particles`
// is only needed for costs that are not functions of finitely many moments.
struct TerminalCost {
    std::function<double(const MomentVector&)> of_moments;
    std::function<double(const ParticleMeasure&)> of_particles;
    int moment_order = 0;

    static TerminalCost zero() {
        return {[](const MomentVector&) { return 0.0; }, {}, 0};
    }
};

// Controlled McKean-Vlasov jump-diffusion together with its cost.
// Immutable after construction; the callables must be pure and reentrant.
struct ModelSpec {
    std::string name;

    CoefficientFn drift;
    CoefficientFn volatility;
    CoefficientFn intensity;
    std::vector<int> moment_indices;  // finite set I the coefficients read

    CoefficientFn running_base;                  // L1
    std::function<double(const Control&)> cost_weight;  // L2
    StateCost state_cost;                        // L3
    int running_moment_order = 0;                // moments read by L1
    TerminalCost terminal;                       // G

    double c0 = 1.0;
    double kappa0 = 1.0;
    double delta = 1.0;
    std::vector<Control> controls;  // A_grid
    JumpLaw jump = JumpLaw::point_mass(0.0);

    // max I
    [[nodiscard]] int dependence_order() const {
        int d = 0;
        for (int i : moment_indices) d = std::max(d, i);
        return d;
    }

    // Smallest moment order that closes dynamics and costs.
    [[nodiscard]] int required_order() const {
        int d = std::max({dependence_order(), running_moment_order, terminal.moment_order});
        if (state_cost.polynomial) d = std::max(d, state_cost.polynomial->degree());
        return d;
    }

    [[nodiscard]] std::vector<double> jump_m(unsigned D) const { return jump.m_values(D); }
};

// ---------------------------------------------------------------------------
// Cost evaluation
// ---------------------------------------------------------------------------

// L(t, mu, a) given the moments and the pairing <mu, L3>.
inline double running_cost(const ModelSpec& model, double t, const MomentVector& m, double l3_pairing,
                           const Control& a) {
    double v = model.running_base ? model.running_base(t, m, a) : 0.0;
    if (!model.state_cost.is_zero() && model.cost_weight) v += model.cost_weight(a) * l3_pairing;
    return v;
}

// <mu, L3> on a moment vector; requires a polynomial L3.
inline double state_cost_pairing(const ModelSpec& model, const MomentVector& m) {
    if (model.state_cost.is_zero()) return 0.0;
    if (!model.state_cost.polynomial) throw CostNotEvaluableError("L3 (running state cost)");
    return pairing(m, *model.state_cost.polynomial);
}

inline double running_cost(const ModelSpec& model, double t, const MeasureState& mu, const Control& a) {
    const int D = std::max(model.running_moment_order,
                           model.state_cost.polynomial ? model.state_cost.polynomial->degree() : 0);
    if (const auto* p = std::get_if<ParticleMeasure>(&mu)) {
        double l3 = model.state_cost.is_zero() ? 0.0 : pairing(*p, model.state_cost.fn);
        return running_cost(model, t, p->moments(D), l3, a);
    }
    const auto& m = std::get<MomentVector>(mu);
    return running_cost(model, t, m, state_cost_pairing(model, m), a);
}

inline double terminal_cost(const ModelSpec& model, const MeasureState& mu) {
    if (const auto* p = std::get_if<ParticleMeasure>(&mu)) {
        if (model.terminal.of_particles) return model.terminal.of_particles(*p);
        if (!model.terminal.of_moments) return 0.0;
        return model.terminal.of_moments(p->moments(model.terminal.moment_order));
    }
    if (!model.terminal.of_moments) throw CostNotEvaluableError("G (terminal cost)");
    return model.terminal.of_moments(std::get<MomentVector>(mu));
}

// ---------------------------------------------------------------------------
// Standing-assumption checks by sampling
// ---------------------------------------------------------------------------

// Samples (t, moments, a) and x and reports every violation of
// |b| + |sigma| + |lambda| <= C0, lambda >= 0 and |L3(x) x| <= C0 e^{delta |x|}.
inline std::vector<std::string> check_assumptions(const ModelSpec& model, double horizon, std::size_t samples = 2000,
                                                  std::uint64_t seed = 7) {
    std::vector<std::string> out;
    StreamRng rng(seed, 0);
    const int D = std::max(1, model.dependence_order());
    for (std::size_t s = 0; s < samples && out.size() < 5; ++s) {
        double t = rng.uniform() * horizon;
        std::vector<double> raw(static_cast<std::size_t>(D));
        for (int k = 0; k < D; ++k) raw[static_cast<std::size_t>(k)] = (rng.uniform() * 2.0 - 1.0) * std::pow(4.0, k + 1);
        MomentVector m(raw);
        for (const Control& a : model.controls) {
            double b = model.drift(t, m, a);
            double sg = model.volatility(t, m, a);
            double l = model.intensity(t, m, a);
            if (std::fabs(b) + std::fabs(sg) + std::fabs(l) > model.c0 * (1.0 + 1e-12))
                out.push_back("H1 violated: |b|+|sigma|+|lambda| = " + std::to_string(std::fabs(b) + std::fabs(sg) + std::fabs(l)) +
                              " > C0 = " + std::to_string(model.c0) + " at t=" + std::to_string(t));
            if (l < 0.0) out.push_back("negative intensity " + std::to_string(l));
        }
    }
    if (!model.state_cost.is_zero()) {
        for (int i = -4000; i <= 4000; ++i) {
            double x = i * 0.01;
            double lhs = std::fabs(model.state_cost(x) * x);
            if (lhs > model.c0 * std::exp(model.delta * std::fabs(x)) * (1.0 + 1e-12)) {
                out.push_back("H4 violated at x=" + std::to_string(x));
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

namespace detail {
inline CoefficientFn constant_fn(double v) {
    return [v](double, const MomentVector&, const Control&) { return v; };
}
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
}  // namespace detail

// b, sigma, lambda constant; no cost.
inline ModelSpec constant_model(double b0, double sigma, double lambda, JumpLaw jump, double delta = 1.0) {
    ModelSpec m;
    m.name = "constant";
    m.drift = detail::constant_fn(b0);
    m.volatility = detail::constant_fn(sigma);
    m.intensity = detail::constant_fn(lambda);
    m.cost_weight = [](const Control&) { return 0.0; };
    m.terminal = TerminalCost::zero();
    m.c0 = std::fabs(b0) + std::fabs(sigma) + std::fabs(lambda);
    m.kappa0 = 0.0;
    m.delta = delta;
    m.controls = {Control{}};
    m.jump = std::move(jump);
    return m;
}

// dX = a dt, cost G(mu) = <mu, x>. Value: <mu, x> - (T - t) with a = -1.
inline ModelSpec drift_only_model(std::vector<double> grid = {-1.0, 0.0, 1.0}) {
    ModelSpec m;
    m.name = "drift_only";
    m.drift = [](double, const MomentVector&, const Control& a) { return a.a1; };
    m.volatility = detail::constant_fn(0.0);
    m.intensity = detail::constant_fn(0.0);
    m.cost_weight = [](const Control&) { return 0.0; };
    m.terminal = {[](const MomentVector& mv) { return mv.moment(1); }, {}, 1};
    double amax = 0.0;
    for (double a : grid) {
        amax = std::max(amax, std::fabs(a));
        m.controls.push_back(Control{a, 0.0});
    }
    m.c0 = std::max(amax, 1e-12);
    m.kappa0 = 0.0;
    m.delta = 1.0;
    m.jump = JumpLaw::point_mass(0.0);
    return m;
}

// Mean-field coupled model used for fixed-point and integrator tests:
// b = beta tanh(m1) + b0, sigma constant, lambda = lambda0 sigmoid(m1),
// jump law as given, I = {1}.
struct CoupledParams {
    double beta = 0.4;
    double b0 = 0.1;
    double sigma = 0.3;
    double lambda0 = 0.5;
    JumpLaw jump = JumpLaw::point_mass(0.2);
    double delta = 1.0;
};

inline ModelSpec coupled_model(const CoupledParams& p = {}) {
    ModelSpec m;
    m.name = "coupled";
    m.drift = [beta = p.beta, b0 = p.b0](double, const MomentVector& mv, const Control& a) {
        return beta * std::tanh(mv.moment(1)) + b0 + a.a1;
    };
    m.volatility = detail::constant_fn(p.sigma);
    m.intensity = [l = p.lambda0](double, const MomentVector& mv, const Control&) {
        return l * detail::sigmoid(mv.moment(1));
    };
    m.moment_indices = {1};
    m.cost_weight = [](const Control&) { return 0.0; };
    m.terminal = TerminalCost::zero();
    m.c0 = std::fabs(p.beta) + std::fabs(p.b0) + std::fabs(p.sigma) + std::fabs(p.lambda0);
    m.kappa0 = std::max(std::fabs(p.beta), 0.25 * std::fabs(p.lambda0));
    m.delta = p.delta;
    m.controls = {Control{}};
    m.jump = p.jump;
    return m;
}

// Knowledge-diffusion model with research funding a1 and meeting rate a2:
//   b = b_max tanh(m1) a1,  lambda = lambda_max sigmoid(m1) a2,  sigma const,
//   L = (a1)^2 - (1 - a2) <mu, min(e^x, e^{x_cap})>,  G = 0.
// The reward is maximized, so the cost is its negation.
struct InnovationParams {
    double b_max = 0.5;
    double lambda_max = 1.0;
    double sigma = 0.2;
    double delta = 2.0;
    double x_cap = std::numeric_limits<double>::infinity();
    JumpLaw jump = JumpLaw::point_mass(0.2);
    std::vector<Control> controls = {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
};

// sup_x |min(e^x, e^{cap}) x| e^{-delta |x|}
inline double innovation_cost_constant(double delta, double x_cap) {
    double neg = 1.0 / (std::exp(1.0) * (1.0 + delta));
    if (!std::isfinite(x_cap)) {
        if (delta <= 1.0) throw DomainError("innovation model: uncapped exponential cost needs delta > 1 (H4)");
        return std::max(neg, 1.0 / ((delta - 1.0) * std::exp(1.0)));
    }
    double cap = std::max(x_cap, 0.0);
    // 0 <= x <= cap: x e^{(1 - delta) x}
    double inner = 0.0;
    if (delta > 1.0) {
        double xs = std::min(1.0 / (delta - 1.0), cap);
        inner = xs * std::exp((1.0 - delta) * xs);
    } else {
        inner = cap * std::exp((1.0 - delta) * cap);
    }
    // x > cap: x e^{cap - delta x}, peak at max(cap, 1/delta)
    double xs = std::max(cap, 1.0 / delta);
    double outer = xs * std::exp(cap - delta * xs);
    return std::max({neg, inner, outer});
}

inline ModelSpec innovation_model(const InnovationParams& p = {}) {
    if (!(p.delta > 0.0)) throw DomainError("innovation model: delta must be positive");
    double a1max = 0.0, a2max = 0.0;
    for (const Control& a : p.controls) {
        if (a.a2 < 0.0 || a.a2 > 1.0) throw DomainError("innovation model: meeting control a2 must lie in [0, 1]");
        a1max = std::max(a1max, std::fabs(a.a1));
        a2max = std::max(a2max, a.a2);
    }
    const double h4 = innovation_cost_constant(p.delta, p.x_cap);

    ModelSpec m;
    m.name = "innovation";
    m.drift = [bm = p.b_max](double, const MomentVector& mv, const Control& a) {
        return bm * std::tanh(mv.moment(1)) * a.a1;
    };
    m.volatility = detail::constant_fn(p.sigma);
    m.intensity = [lm = p.lambda_max](double, const MomentVector& mv, const Control& a) {
        return lm * detail::sigmoid(mv.moment(1)) * a.a2;
    };
    m.moment_indices = {1};
    m.running_base = [](double, const MomentVector&, const Control& a) { return a.a1 * a.a1; };
    m.cost_weight = [](const Control& a) { return -(1.0 - a.a2); };
    double cap = p.x_cap;
    m.state_cost = StateCost::from_function(
        [cap](double x) { return std::isfinite(cap) ? std::exp(std::min(x, cap)) : std::exp(x); });
    m.terminal = TerminalCost::zero();
    m.c0 = std::max(p.b_max * a1max + std::fabs(p.sigma) + p.lambda_max * a2max, h4);
    m.kappa0 = std::max(p.b_max * a1max, 0.25 * p.lambda_max * a2max);
    m.delta = p.delta;
    m.controls = p.controls;
    m.jump = p.jump;
    return m;
}

}  // namespace mvjump
