#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "mvjump/closure.hpp"
#include "mvjump/error.hpp"
#include "mvjump/jump_law.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/symbolic.hpp"

namespace mvjump {

// sup_x |f(x)| / e_delta(x).
//
// Beyond X* = rho + 2 deg/delta + 1 (rho = Cauchy root bound) the log-ratio
// has derivative at most deg/(|x| - rho) - delta/sqrt(2) < 0, so the sup is
// attained on [-X*, X*]. There: dense scan, then Brent refinement of every
// local maximum of the scan.
inline double sup_ratio(const NumericPolynomial& f, double delta) {
    if (!(delta > 0.0)) throw DomainError("sup_ratio: delta must be positive");
    if (f.is_zero()) return 0.0;
    const int n = f.degree();
    if (n == 0) return std::fabs(f.coefficient(0));  // e_delta(0) = 1 is the minimum

    const double lead = f.coefficient(static_cast<std::size_t>(n));
    double rho = 0.0;
    for (int k = 0; k < n; ++k) rho = std::max(rho, std::fabs(f.coefficient(static_cast<std::size_t>(k)) / lead));
    rho += 1.0;
    const double x_star = rho + 2.0 * n / delta + 1.0;

    auto ratio = [&](double x) { return std::fabs(f(x)) / e_delta(x, delta); };

    constexpr int grid = 4000;
    const double h = 2.0 * x_star / grid;
    std::vector<double> r(grid + 1);
    for (int i = 0; i <= grid; ++i) r[static_cast<std::size_t>(i)] = ratio(-x_star + i * h);

    double best = *std::max_element(r.begin(), r.end());
    for (int i = 1; i < grid; ++i) {
        auto k = static_cast<std::size_t>(i);
        if (r[k] < r[k - 1] || r[k] < r[k + 1]) continue;
        double lo = -x_star + (i - 1) * h;
        double hi = -x_star + (i + 1) * h;
        auto [xm, neg] = boost::math::tools::brent_find_minima([&](double x) { return -ratio(x); }, lo, hi, 52);
        best = std::max(best, -neg);
    }
    if (!std::isfinite(best)) throw Error("sup_ratio: non-finite supremum");
    return best;
}

// Enumerated basis f_1..f_J of Theta with the decaying weights c_j(b).
// Indices in `deps` are 1-based, matching f_j.
struct CoefficientTable {
    std::vector<Polynomial> basis;
    std::vector<NumericPolynomial> numeric;  // f_j at the jump law's m_i
    std::vector<double> sup_ratio;           // C_j
    std::vector<double> s;                   // upper bound of s_j(b): 1 + (b C_j)^2
    std::vector<double> c;
    std::vector<std::vector<std::size_t>> deps;  // I_j
    double bound_b = 1.0;
    double delta = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return basis.size(); }
};

// Fill c_j from s and deps: c_j = (sum_{k in I_j} 2^k)^{-1} (sum_{k in I_j} s_k)^{-2}.
// Summation in increasing index order keeps c_j <= c_i for I_i subset of I_j
// exact in floating point (rounded addition is monotone).
inline void assign_weights(CoefficientTable& table) {
    table.c.assign(table.size(), 0.0);
    for (std::size_t j = 0; j < table.size(); ++j) {
        double pow_sum = 0.0, s_sum = 0.0;
        for (std::size_t k : table.deps[j]) {
            pow_sum += std::ldexp(1.0, static_cast<int>(k));
            s_sum += table.s[k - 1];
        }
        table.c[j] = 1.0 / pow_sum / (s_sum * s_sum);
    }
}

inline CoefficientTable coeff_table(double b, std::size_t j_max, const JumpLaw& jump, double delta) {
    if (!(b > 0.0)) throw DomainError("coeff_table: b must be positive");
    if (!(delta > 0.0)) throw DomainError("coeff_table: delta must be positive");

    CoefficientTable t;
    t.bound_b = b;
    t.delta = delta;
    t.basis = enumerate_theta(j_max);

    unsigned D = 0;
    for (const auto& p : t.basis) D = std::max(D, p.max_symbol());
    const std::vector<double> m = jump.m_values(D);

    std::map<Polynomial, std::size_t> index;
    for (std::size_t j = 0; j < t.size(); ++j) index.emplace(t.basis[j], j + 1);

    for (std::size_t j = 0; j < t.size(); ++j) {
        t.numeric.push_back(t.basis[j].specialize(m));
        double cj = mvjump::sup_ratio(t.numeric.back(), delta);
        if (!std::isfinite(cj)) throw Error("coeff_table: non-finite sup ratio for f_" + std::to_string(j + 1));
        t.sup_ratio.push_back(cj);
        t.s.push_back(1.0 + (b * cj) * (b * cj));

        std::vector<std::size_t> dep;
        const ClosureSet closure = star_closure(t.basis[j]);
        for (const Polynomial& g : closure.elements()) {
            if (g.is_zero()) continue;
            auto it = index.find(g);
            if (it == index.end()) throw Error("coeff_table: closure element " + g.to_string() + " missing from enumeration");
            dep.push_back(it->second);
        }
        std::sort(dep.begin(), dep.end());
        t.deps.push_back(std::move(dep));
    }
    assign_weights(t);
    return t;
}

}  // namespace mvjump
