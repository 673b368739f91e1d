#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>

#include "mvjump/measures.hpp"
#include "mvjump/model.hpp"
#include "mvjump/symbolic.hpp"

namespace mvjump {

// Coefficients b, sigma, lambda frozen at one (t, mu, a).
struct FrozenCoefficients {
    double drift = 0.0;
    double volatility = 0.0;
    double intensity = 0.0;
};

inline FrozenCoefficients freeze(const ModelSpec& model, double t, const MomentVector& m, const Control& a) {
    return {model.drift(t, m, a), model.volatility(t, m, a), model.intensity(t, m, a)};
}

// L[f] = b f' + sigma^2/2 f'' + lambda sum_i m_i f^{(i)}, the jump part being
// the exact Taylor form of int (f(x+y) - f(x)) gamma(dy) for polynomial f.
inline NumericPolynomial apply_generator(const NumericPolynomial& f, const FrozenCoefficients& k,
                                         std::span<const double> jump_m) {
    NumericPolynomial out = f.derivative(1) * k.drift;
    out += f.derivative(2) * (0.5 * k.volatility * k.volatility);
    if (k.intensity != 0.0) out += jump_image(f, jump_m) * k.intensity;
    return out;
}

inline NumericPolynomial apply_generator(const NumericPolynomial& f, double t, const MeasureState& mu, const Control& a,
                                         const ModelSpec& model) {
    MomentVector m = moments_of(mu, model.dependence_order());
    auto jm = model.jump_m(static_cast<unsigned>(std::max(f.degree(), 0)));
    return apply_generator(f, freeze(model, t, m, a), jm);
}

// Symbolic input: the m_i symbols are specialized to the model's jump law.
inline NumericPolynomial apply_generator(const Polynomial& f, double t, const MeasureState& mu, const Control& a,
                                         const ModelSpec& model) {
    unsigned D = std::max<unsigned>(f.max_symbol(), static_cast<unsigned>(std::max(f.degree(), 0)));
    auto jm = model.jump_m(D);
    return apply_generator(f.specialize(jm), t, mu, a, model);
}

// <mu, L[f]>
template <class Poly>
double expected_generator(const Poly& f, double t, const MeasureState& mu, const Control& a, const ModelSpec& model) {
    return pairing(mu, apply_generator(f, t, mu, a, model));
}

// C in |<mu, L[f]>| <= C sum_{i=0}^{deg f} |<mu, f^{(i)}>|, from |b|,|sigma|,
// |lambda| <= C0 and the jump moments up to `degree`.
inline double generator_bound_constant(const ModelSpec& model, int degree) {
    double mmax = 0.0;
    for (int i = 1; i <= degree; ++i) mmax = std::max(mmax, std::fabs(model.jump.m(static_cast<unsigned>(i))));
    return model.c0 + 0.5 * model.c0 * model.c0 + model.c0 * mmax;
}

struct HamiltonianValue {
    double value = -std::numeric_limits<double>::infinity();
    Control argmax;
    std::size_t argmax_index = 0;
};

// H^a(t, mu, v) = -L(t, mu, a) - <mu, L^{a,mu}_t[v]>
inline double hamiltonian_at(double t, const MeasureState& mu, const NumericPolynomial& v, const Control& a,
                             const ModelSpec& model) {
    return -running_cost(model, t, mu, a) - expected_generator(v, t, mu, a, model);
}

// max over the control grid; ties go to the first grid entry.
inline HamiltonianValue hamiltonian(double t, const MeasureState& mu, const NumericPolynomial& v, const ModelSpec& model) {
    if (model.controls.empty()) throw DomainError("hamiltonian: empty control grid");
    HamiltonianValue best;
    for (std::size_t i = 0; i < model.controls.size(); ++i) {
        double h = hamiltonian_at(t, mu, v, model.controls[i], model);
        if (h > best.value) best = {h, model.controls[i], i};
    }
    return best;
}

// phi(t, mu) = F(t, <mu, f>) with closed-form partials. Its linear derivative
// is D_m phi(t, mu, x) = dF/dy(t, <mu, f>) f(x).
struct CylindricalTest {
    NumericPolynomial f;
    std::function<double(double, double)> F;
    std::function<double(double, double)> F_t;
    std::function<double(double, double)> F_y;

    [[nodiscard]] double value(double t, const MeasureState& mu) const { return F(t, pairing(mu, f)); }
    [[nodiscard]] double time_derivative(double t, const MeasureState& mu) const { return F_t(t, pairing(mu, f)); }
    [[nodiscard]] NumericPolynomial linear_derivative(double t, const MeasureState& mu) const {
        return f * F_y(t, pairing(mu, f));
    }
};

}  // namespace mvjump
