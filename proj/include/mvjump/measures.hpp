#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mvjump/error.hpp"
#include "mvjump/jump_law.hpp"
#include "mvjump/symbolic.hpp"

namespace mvjump {

// e_delta(x) = exp(delta (sqrt(x^2 + 1) - 1)), sandwiched between
// exp(delta(|x| - 1)) and exp(delta |x|).
inline double e_delta(double x, double delta) {
    return std::exp(delta * (std::sqrt(x * x + 1.0) - 1.0));
}

// Truncated moment vector <mu, x>, ..., <mu, x^D>. <mu, x^0> = 1 implicitly.
class MomentVector {
public:
    MomentVector() = default;
    explicit MomentVector(std::vector<double> raw, std::optional<double> exp_moment = std::nullopt)
        : raw_(std::move(raw)), exp_moment_(exp_moment) {}

    [[nodiscard]] int order() const noexcept { return static_cast<int>(raw_.size()); }
    [[nodiscard]] const std::vector<double>& raw() const noexcept { return raw_; }
    [[nodiscard]] std::vector<double>& raw() noexcept { return raw_; }
    [[nodiscard]] const std::optional<double>& exp_moment() const noexcept { return exp_moment_; }

    // <mu, x^k>; throws MissingMomentError beyond the stored order.
    [[nodiscard]] double moment(int k) const {
        if (k == 0) return 1.0;
        if (k < 0 || k > order()) throw MissingMomentError(k, order());
        return raw_[static_cast<std::size_t>(k) - 1];
    }
    [[nodiscard]] double operator[](int k) const { return moment(k); }

    [[nodiscard]] MomentVector truncated(int D) const {
        if (D > order()) throw MissingMomentError(D, order());
        return MomentVector(std::vector<double>(raw_.begin(), raw_.begin() + D), exp_moment_);
    }

    friend bool operator==(const MomentVector&, const MomentVector&) = default;

private:
    std::vector<double> raw_;
    std::optional<double> exp_moment_;
};

// Weighted particle cloud; weights are non-negative and sum to one.
class ParticleMeasure {
public:
    ParticleMeasure(std::vector<double> points, std::vector<double> weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.empty()) throw DomainError("particle measure needs at least one point");
        if (points_.size() != weights_.size()) throw DomainError("particle measure: points and weights differ in length");
        // Neumaier summation: large uniform clouds would otherwise drift past 1e-12
        double total = 0.0, comp = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_[i])) throw DomainError("particle measure: non-finite position");
            if (!(weights_[i] >= 0.0)) throw DomainError("particle measure: negative weight");
            double t = total + weights_[i];
            comp += std::fabs(total) >= weights_[i] ? (total - t) + weights_[i] : (weights_[i] - t) + total;
            total = t;
        }
        if (std::fabs(total + comp - 1.0) > 1e-12) throw DomainError("particle measure: weights must sum to 1");
    }

    static ParticleMeasure uniform(std::vector<double> points) {
        std::vector<double> w(points.size(), points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size()));
        return ParticleMeasure(std::move(points), std::move(w));
    }
    static ParticleMeasure dirac(double x) { return ParticleMeasure({x}, {1.0}); }

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const std::vector<double>& points() const noexcept { return points_; }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

    [[nodiscard]] ParticleMeasure shifted(double h) const {
        std::vector<double> p = points_;
        for (double& x : p) x += h;
        return ParticleMeasure(std::move(p), weights_);
    }

    // Exact summation of <mu, x^k>, k = 1..D, plus <mu, e_delta> if delta given.
    [[nodiscard]] MomentVector moments(int D, std::optional<double> delta = std::nullopt) const {
        std::vector<double> raw(static_cast<std::size_t>(std::max(D, 0)), 0.0);
        double expm = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            double p = 1.0;
            for (int k = 0; k < D; ++k) {
                p *= points_[i];
                raw[static_cast<std::size_t>(k)] += weights_[i] * p;
            }
            if (delta) expm += weights_[i] * e_delta(points_[i], *delta);
        }
        return MomentVector(std::move(raw), delta ? std::optional<double>(expm) : std::nullopt);
    }

    [[nodiscard]] double max_abs() const noexcept {
        double r = 0.0;
        for (double x : points_) r = std::max(r, std::fabs(x));
        return r;
    }

private:
    std::vector<double> points_;
    std::vector<double> weights_;
};

// Either representation of mu.
using MeasureState = std::variant<ParticleMeasure, MomentVector>;

// <mu, f> = sum_i w_i f(x_i)
template <class F>
    requires std::is_invocable_r_v<double, F, double>
double pairing(const ParticleMeasure& mu, F&& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double v = f(mu.points()[i]);
        if (!std::isfinite(v)) throw DomainError("pairing: non-finite value at support point " + std::to_string(mu.points()[i]));
        s += mu.weights()[i] * v;
    }
    return s;
}

inline double pairing(const ParticleMeasure& mu, const NumericPolynomial& f) {
    return pairing(mu, [&](double x) { return f(x); });
}

// Polynomial pairing through moments; needs order >= deg f.
inline double pairing(const MomentVector& mu, const NumericPolynomial& f) {
    double s = 0.0;
    for (int k = 0; k <= f.degree(); ++k) {
        double c = f.coefficient(static_cast<std::size_t>(k));
        if (c != 0.0) s += c * mu.moment(k);
    }
    return s;
}

inline double pairing(const MeasureState& mu, const NumericPolynomial& f) {
    return std::visit([&](const auto& m) { return pairing(m, f); }, mu);
}

// Moments 1..D of either representation.
inline MomentVector moments_of(const MeasureState& mu, int D) {
    if (const auto* p = std::get_if<ParticleMeasure>(&mu)) return p->moments(D);
    return std::get<MomentVector>(mu).truncated(D);
}

// ---------------------------------------------------------------------------
// Exponential-moment sets
// ---------------------------------------------------------------------------

// K* = (delta C0 / 2)(2 + C0 + delta C0) + C0 (<gamma, e^{delta|y|}> - 1)
inline double k_star(double c0, double delta, const JumpLaw& jump) {
    if (!(delta > 0.0)) throw DomainError("k_star: delta must be positive");
    if (!(c0 >= 0.0)) throw DomainError("k_star: C0 must be non-negative");
    double em = jump.exp_moment(delta);
    if (!std::isfinite(em)) throw DomainError("k_star: jump law has no delta-exponential moment");
    return 0.5 * delta * c0 * (2.0 + c0 + delta * c0) + c0 * (em - 1.0);
}

struct ExpMomentParams {
    double delta = 1.0;
    double c0 = 1.0;
    double k_star = 0.0;
    double level = 1.0;  // N

    static ExpMomentParams make(double c0, double delta, const JumpLaw& jump, double level) {
        return {delta, c0, mvjump::k_star(c0, delta, jump), level};
    }
};

// mu in M_b  <=>  <mu, e_delta> <= b
inline bool in_M_b(const ParticleMeasure& mu, double b, double delta) {
    if (!(delta > 0.0)) throw DomainError("in_M_b: delta must be positive");
    return pairing(mu, [&](double x) { return e_delta(x, delta); }) <= b;
}

// (t, mu) in O_N  <=>  <mu, e_delta> <= N exp(K* t)
inline bool in_O_N(double t, const ParticleMeasure& mu, const ExpMomentParams& p) {
    return pairing(mu, [&](double x) { return e_delta(x, p.delta); }) <= p.level * std::exp(p.k_star * t);
}

}  // namespace mvjump
