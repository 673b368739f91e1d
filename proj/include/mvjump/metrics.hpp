#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "mvjump/coefficients.hpp"
#include "mvjump/error.hpp"
#include "mvjump/measures.hpp"

namespace mvjump {

struct MetricValue {
    double value = 0.0;       // truncated sum over j <= j_max
    double tail_bound = 0.0;  // certified bound on the omitted terms
};

namespace detail {

inline void require_in_table_ball(const ParticleMeasure& mu, const CoefficientTable& table, const char* who) {
    double em = pairing(mu, [&](double x) { return e_delta(x, table.delta); });
    if (em > table.bound_b * (1.0 + 1e-12))
        throw DomainError(std::string(who) + ": measure outside M_b (<mu,e_delta> = " + std::to_string(em) +
                          " > b = " + std::to_string(table.bound_b) + ")");
}

inline void require_jmax(std::size_t j_max, const CoefficientTable& table, const char* who) {
    if (j_max == 0 || j_max > table.size())
        throw DomainError(std::string(who) + ": j_max must lie in [1, " + std::to_string(table.size()) + "]");
}

}  // namespace detail

// d(mu, nu) = sum_j c_j <mu - nu, f_j>^2.
// For mu, nu in M_b, <mu - nu, f_j>^2 <= 4 (s_j - 1) and c_j <= 2^{-j} s_j^{-2},
// so each term is at most 2^{-j} and the tail past j_max at most 2^{-j_max}.
inline MetricValue metric_d_sq(const ParticleMeasure& mu, const ParticleMeasure& nu, const CoefficientTable& table,
                               std::size_t j_max) {
    detail::require_jmax(j_max, table, "metric_d_sq");
    detail::require_in_table_ball(mu, table, "metric_d_sq");
    detail::require_in_table_ball(nu, table, "metric_d_sq");
    MetricValue out;
    for (std::size_t j = 0; j < j_max; ++j) {
        double diff = pairing(mu, table.numeric[j]) - pairing(nu, table.numeric[j]);
        out.value += table.c[j] * diff * diff;
    }
    out.tail_bound = std::ldexp(1.0, -static_cast<int>(j_max));
    return out;
}

// d(mu, nu; b) = sum_j c_j |<mu - nu, f_j>|.
// Cauchy-Schwarz against s_j bounds each term by sqrt(2) 2^{-j}; tail past
// j_max is at most sqrt(2) 2^{-j_max}.
inline MetricValue metric_d_abs(const ParticleMeasure& mu, const ParticleMeasure& nu, const CoefficientTable& table,
                                std::size_t j_max) {
    detail::require_jmax(j_max, table, "metric_d_abs");
    detail::require_in_table_ball(mu, table, "metric_d_abs");
    detail::require_in_table_ball(nu, table, "metric_d_abs");
    MetricValue out;
    for (std::size_t j = 0; j < j_max; ++j) {
        out.value += table.c[j] * std::fabs(pairing(mu, table.numeric[j]) - pairing(nu, table.numeric[j]));
    }
    out.tail_bound = std::sqrt(2.0) * std::ldexp(1.0, -static_cast<int>(j_max));
    return out;
}

// Absolute metric restricted to the basis elements a moment vector can pair
// with (deg f_j <= order). Used to measure gaps between moment flows, where no
// exponential moment is available to certify a tail.
inline double moment_metric_d_abs(const MomentVector& mu, const MomentVector& nu, const CoefficientTable& table,
                                  std::size_t j_max) {
    int D = std::min(mu.order(), nu.order());
    double s = 0.0;
    for (std::size_t j = 0; j < std::min(j_max, table.size()); ++j) {
        if (table.numeric[j].degree() > D) continue;
        s += table.c[j] * std::fabs(pairing(mu, table.numeric[j]) - pairing(nu, table.numeric[j]));
    }
    return s;
}

}  // namespace mvjump
