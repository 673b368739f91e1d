#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mvjump/error.hpp"
#include "mvjump/random.hpp"

namespace mvjump {

// Distribution gamma of the jump size xi.
class JumpLaw {
public:
    enum class Kind { point_mass, discrete, gaussian, density };

    static JumpLaw point_mass(double c) {
        JumpLaw j;
        j.kind_ = Kind::point_mass;
        j.points_ = {c};
        j.probs_ = {1.0};
        return j;
    }

    static JumpLaw discrete(std::vector<double> points, std::vector<double> probs) {
        if (points.empty() || points.size() != probs.size())
            throw DomainError("discrete jump law: points and probabilities must be non-empty and equal length");
        double total = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw DomainError("discrete jump law: negative probability");
            total += p;
        }
        if (std::fabs(total - 1.0) > 1e-12) throw DomainError("discrete jump law: probabilities must sum to 1");
        JumpLaw j;
        j.kind_ = Kind::discrete;
        j.points_ = std::move(points);
        j.probs_ = std::move(probs);
        return j;
    }

    static JumpLaw gaussian(double mean, double sd) {
        if (!(sd > 0.0)) throw DomainError("gaussian jump law: standard deviation must be positive");
        JumpLaw j;
        j.kind_ = Kind::gaussian;
        j.mean_ = mean;
        j.sd_ = sd;
        return j;
    }

    // Density (not necessarily normalized) supported on [lo, hi]. Moments by
    // adaptive Gauss-Kronrod; sampling by inversion of a tabulated CDF.
    static JumpLaw density(std::function<double(double)> pdf, double lo, double hi, std::string label = "density") {
        if (!(hi > lo)) throw DomainError("density jump law: empty support");
        auto tab = std::make_shared<Tabulated>();
        tab->pdf = std::move(pdf);
        tab->lo = lo;
        tab->hi = hi;
        tab->label = std::move(label);
        tab->norm = integrate(tab->pdf, lo, hi);
        if (!(tab->norm > 0.0) || !std::isfinite(tab->norm)) throw DomainError("density jump law: density does not integrate to a positive number");
        constexpr std::size_t cells = 4096;
        tab->cdf.resize(cells + 1, 0.0);
        double h = (hi - lo) / cells;
        for (std::size_t k = 0; k < cells; ++k) {
            double a = lo + k * h;
            // Simpson on each cell
            double mass = h / 6.0 * (tab->pdf(a) + 4.0 * tab->pdf(a + h / 2) + tab->pdf(a + h));
            tab->cdf[k + 1] = tab->cdf[k] + std::max(0.0, mass);
        }
        for (double& c : tab->cdf) c /= tab->cdf.back();
        JumpLaw j;
        j.kind_ = Kind::density;
        j.tab_ = std::move(tab);
        return j;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::vector<double>& points() const noexcept { return points_; }
    [[nodiscard]] const std::vector<double>& probabilities() const noexcept { return probs_; }
    [[nodiscard]] double mean_parameter() const noexcept { return mean_; }
    [[nodiscard]] double sd_parameter() const noexcept { return sd_; }
    [[nodiscard]] double support_lo() const noexcept { return tab_ ? tab_->lo : 0.0; }
    [[nodiscard]] double support_hi() const noexcept { return tab_ ? tab_->hi : 0.0; }
    [[nodiscard]] std::string label() const {
        switch (kind_) {
            case Kind::point_mass: return "point";
            case Kind::discrete: return "discrete";
            case Kind::gaussian: return "gaussian";
            default: return tab_->label;
        }
    }

    // <gamma, y^i>
    [[nodiscard]] double raw_moment(unsigned i) const {
        if (i == 0) return 1.0;
        switch (kind_) {
            case Kind::point_mass:
            case Kind::discrete: {
                double s = 0.0;
                for (std::size_t k = 0; k < points_.size(); ++k) s += probs_[k] * std::pow(points_[k], static_cast<double>(i));
                return s;
            }
            case Kind::gaussian: {
                // E[Y^n] = mean E[Y^{n-1}] + (n-1) sd^2 E[Y^{n-2}]
                double prev = 1.0, cur = mean_;
                for (unsigned n = 2; n <= i; ++n) {
                    double next = mean_ * cur + (n - 1) * sd_ * sd_ * prev;
                    prev = cur;
                    cur = next;
                }
                return cur;
            }
            default: {
                const Tabulated& t = *tab_;
                double d = static_cast<double>(i);
                return integrate([&](double y) { return std::pow(y, d) * t.pdf(y); }, t.lo, t.hi) / t.norm;
            }
        }
    }

    // m_i = <gamma, y^i> / i!
    [[nodiscard]] double m(unsigned i) const {
        double f = 1.0;
        for (unsigned k = 2; k <= i; ++k) f *= k;
        return raw_moment(i) / f;
    }

    // m_1 .. m_D
    [[nodiscard]] std::vector<double> m_values(unsigned D) const {
        std::vector<double> v(D);
        for (unsigned i = 1; i <= D; ++i) v[i - 1] = m(i);
        return v;
    }

    // <gamma, exp(delta |y|)>; finite for every law offered here.
    [[nodiscard]] double exp_moment(double delta) const {
        switch (kind_) {
            case Kind::point_mass:
            case Kind::discrete: {
                double s = 0.0;
                for (std::size_t k = 0; k < points_.size(); ++k) s += probs_[k] * std::exp(delta * std::fabs(points_[k]));
                return s;
            }
            case Kind::gaussian: {
                auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
                double v = 0.5 * delta * delta * sd_ * sd_;
                return std::exp(delta * mean_ + v) * Phi(mean_ / sd_ + delta * sd_) +
                       std::exp(-delta * mean_ + v) * Phi(-mean_ / sd_ + delta * sd_);
            }
            default: {
                const Tabulated& t = *tab_;
                return integrate([&](double y) { return std::exp(delta * std::fabs(y)) * t.pdf(y); }, t.lo, t.hi) / t.norm;
            }
        }
    }

    [[nodiscard]] double sample(StreamRng& rng) const {
        switch (kind_) {
            case Kind::point_mass: return points_[0];
            case Kind::discrete: {
                double u = rng.uniform();
                double acc = 0.0;
                for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
                    acc += probs_[k];
                    if (u < acc) return points_[k];
                }
                return points_.back();
            }
            case Kind::gaussian: return std::normal_distribution<double>(mean_, sd_)(rng);
            default: {
                const Tabulated& t = *tab_;
                double u = rng.uniform();
                auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
                std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - t.cdf.begin())) - 1;
                k = std::min(k, t.cdf.size() - 2);
                double span = t.cdf[k + 1] - t.cdf[k];
                double frac = span > 0.0 ? (u - t.cdf[k]) / span : 0.5;
                double h = (t.hi - t.lo) / static_cast<double>(t.cdf.size() - 1);
                return t.lo + (static_cast<double>(k) + frac) * h;
            }
        }
    }

private:
    struct Tabulated {
        std::function<double(double)> pdf;
        double lo = 0.0, hi = 0.0, norm = 1.0;
        std::string label;
        std::vector<double> cdf;
    };

    template <class F>
    static double integrate(F&& f, double lo, double hi) {
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-13);
    }

    Kind kind_ = Kind::point_mass;
    std::vector<double> points_{0.0};
    std::vector<double> probs_{1.0};
    double mean_ = 0.0;
    double sd_ = 0.0;
    std::shared_ptr<const Tabulated> tab_;
};

}  // namespace mvjump
