#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mvjump/coefficients.hpp"
#include "mvjump/expression.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/metrics.hpp"

using namespace mvjump;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
ParticleMeasure random_measure(std::mt19937_64& rng, std::size_t n, double spread) {
    std::uniform_real_distribution<double> u(-spread, spread);
    std::uniform_real_distribution<double> w(0.1, 1.0);
    std::vector<double> pts(n), ws(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pts[i] = u(rng);
        ws[i] = w(rng);
        total += ws[i];
    }
    for (double& v : ws) v /= total;
    double fix = 1.0;
    for (std::size_t i = 1; i < n; ++i) fix -= ws[i];
    ws[0] = fix;
    return ParticleMeasure(pts, ws);
}
}  // namespace

TEST_CASE("e_delta values and sandwich", "[measures]") {
    CHECK(e_delta(0.0, 1.7) == 1.0);
    CHECK_THAT(e_delta(std::sqrt(3.0), 1.0), WithinRel(std::exp(1.0), 1e-14));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nx(0.0, 5.0);
    std::uniform_real_distribution<double> ud(0.05, 3.0);
    for (int i = 0; i < 10000; ++i) {
        double x = nx(rng), d = ud(rng);
        double e = e_delta(x, d);
        CHECK(std::exp(d * (std::fabs(x) - 1.0)) <= e * (1 + 1e-14));
        CHECK(e <= std::exp(d * std::fabs(x)) * (1 + 1e-14));
    }
}

TEST_CASE("pairing", "[measures]") {
    const auto mu = ParticleMeasure::uniform({0.0, 2.0});
    CHECK(pairing(mu, NumericPolynomial::constant(1.0)) == 1.0);
    CHECK(pairing(mu, NumericPolynomial::monomial(1)) == 1.0);
    CHECK(pairing(mu, NumericPolynomial::monomial(2)) == 2.0);
    CHECK_THROWS_AS(pairing(mu, [](double x) { return 1.0 / x; }), DomainError);
    const MeasureState ms = mu.moments(3);
    CHECK(pairing(ms, NumericPolynomial({1.0, 1.0, 1.0})) == 4.0);
    CHECK_THROWS_AS(pairing(MomentVector({1.0}), NumericPolynomial::monomial(2)), MissingMomentError);
}

TEST_CASE("particle measure validation", "[measures]") {
    CHECK_THROWS_AS(ParticleMeasure({}, {}), DomainError);
    CHECK_THROWS_AS(ParticleMeasure({0.0, 1.0}, {0.5}), DomainError);
    CHECK_THROWS_AS(ParticleMeasure({0.0, 1.0}, {0.6, 0.6}), DomainError);
    CHECK_THROWS_AS(ParticleMeasure({0.0, 1.0}, {1.5, -0.5}), DomainError);
    std::vector<double> pts(100000, 0.0);
    CHECK_NOTHROW(ParticleMeasure::uniform(pts));
}

TEST_CASE("k_star", "[measures]") {
    CHECK_THAT(k_star(1.0, 1.0, JumpLaw::point_mass(0.0)), WithinAbs(2.0, 1e-15));
    CHECK(k_star(0.0, 1.3, JumpLaw::gaussian(0.0, 1.0)) == 0.0);
    const double c0 = 0.7, d = 1.5, c = -0.4;
    CHECK_THAT(k_star(c0, d, JumpLaw::point_mass(c)),
               WithinRel(d * c0 / 2 * (2 + c0 + d * c0) + c0 * (std::exp(d * std::fabs(c)) - 1.0), 1e-14));
    CHECK_THROWS_AS(k_star(1.0, 0.0, JumpLaw::point_mass(0.0)), DomainError);
    // heavy tail on a wide support: <gamma, e^{delta|y|}> overflows
    const JumpLaw heavy = JumpLaw::density([](double y) { return 1.0 / (1.0 + y * y); }, -2000.0, 2000.0);
    CHECK_THROWS_AS(k_star(1.0, 1.0, heavy), DomainError);
}

TEST_CASE("gaussian exponential moment matches quadrature", "[measures]") {
    const JumpLaw g = JumpLaw::gaussian(0.3, 0.8);
    const JumpLaw q = JumpLaw::density([](double y) { return std::exp(-0.5 * std::pow((y - 0.3) / 0.8, 2)); }, -12.0, 12.0);
    CHECK_THAT(g.exp_moment(1.2), WithinRel(q.exp_moment(1.2), 1e-9));
    for (unsigned i = 1; i <= 6; ++i) CHECK_THAT(g.raw_moment(i), WithinAbs(q.raw_moment(i), 1e-9));
    CHECK_THAT(g.m(2), WithinRel((0.09 + 0.64) / 2.0, 1e-14));
}

TEST_CASE("M_b and O_N membership", "[measures]") {
    const auto p0 = ParticleMeasure::dirac(0.0);
    const auto params = ExpMomentParams::make(1.0, 1.0, JumpLaw::point_mass(0.0), 1.0);
    for (double t : {0.0, 0.5, 3.0}) CHECK(in_O_N(t, p0, params));
    const auto mu = ParticleMeasure::dirac(2.0);
    const double em = e_delta(2.0, 1.0);
    auto lvl = ExpMomentParams::make(1.0, 1.0, JumpLaw::point_mass(0.0), em - 1.0);
    CHECK_FALSE(in_O_N(0.0, mu, lvl));
    // monotone in N and t
    lvl.level = em;
    CHECK(in_O_N(0.0, mu, lvl));
    CHECK(in_O_N(1.0, mu, lvl));
    CHECK(in_M_b(mu, em, 1.0));
    CHECK_FALSE(in_M_b(mu, em * 0.99, 1.0));
}

TEST_CASE("metrics", "[measures]") {
    const double b = 3.0, delta = 1.0;
    const CoefficientTable t = coeff_table(b, 40, JumpLaw::point_mass(0.2), delta);
    std::mt19937_64 rng(9);
    std::vector<ParticleMeasure> ms;
    while (ms.size() < 30) {
        auto m = random_measure(rng, 6, 1.2);
        if (in_M_b(m, b, delta)) ms.push_back(m);
    }
    for (std::size_t a = 0; a < ms.size(); ++a) {
        CHECK(metric_d_sq(ms[a], ms[a], t, 40).value == 0.0);
        CHECK(metric_d_abs(ms[a], ms[a], t, 40).value == 0.0);
        double series = 0.0;
        for (std::size_t j = 0; j < 40; ++j) {
            double v = pairing(ms[a], t.numeric[j]);
            series += t.c[j] * v * v;
        }
        CHECK(series <= 1.0);
        for (std::size_t c = 0; c < ms.size(); ++c) {
            auto sq = metric_d_sq(ms[a], ms[c], t, 40);
            auto ab = metric_d_abs(ms[a], ms[c], t, 40);
            CHECK(sq.value <= 4.0);
            CHECK(ab.value <= std::sqrt(2.0));
            CHECK(ab.value == metric_d_abs(ms[c], ms[a], t, 40).value);
            if (a != c) CHECK(sq.value > 0.0);
            // triangle inequality through a third measure
            const auto& m3 = ms[(a + c + 1) % ms.size()];
            CHECK(ab.value <= metric_d_abs(ms[a], m3, t, 40).value + metric_d_abs(m3, ms[c], t, 40).value + 1e-15);
        }
    }
    auto sq = metric_d_sq(ms[0], ms[1], t, 40);
    CHECK(sq.tail_bound <= 4.0 * std::ldexp(1.0, -40));
    CHECK(metric_d_abs(ms[0], ms[1], t, 40).tail_bound == std::sqrt(2.0) * std::ldexp(1.0, -40));
}

TEST_CASE("metrics are permutation invariant", "[measures]") {
    const CoefficientTable t = coeff_table(4.0, 20, JumpLaw::point_mass(0.1), 1.0);
    ParticleMeasure a({-0.3, 0.2, 0.9}, {0.2, 0.5, 0.3});
    ParticleMeasure a2({0.9, -0.3, 0.2}, {0.3, 0.2, 0.5});
    ParticleMeasure b = ParticleMeasure::uniform({0.0, 0.4});
    CHECK_THAT(metric_d_abs(a, b, t, 20).value, WithinAbs(metric_d_abs(a2, b, t, 20).value, 1e-15));
    CHECK_THAT(metric_d_sq(a, b, t, 20).value, WithinAbs(metric_d_sq(a2, b, t, 20).value, 1e-15));
}

TEST_CASE("metrics reject measures outside M_b", "[measures]") {
    const CoefficientTable t = coeff_table(1.5, 10, JumpLaw::point_mass(0.0), 1.0);
    const auto far = ParticleMeasure::dirac(5.0);
    CHECK_THROWS_AS(metric_d_sq(far, ParticleMeasure::dirac(0.0), t, 10), DomainError);
    CHECK_THROWS_AS(metric_d_abs(ParticleMeasure::dirac(0.0), far, t, 10), DomainError);
    CHECK_THROWS_AS(metric_d_abs(ParticleMeasure::dirac(0.0), ParticleMeasure::dirac(0.0), t, 0), DomainError);
}

TEST_CASE("shrinking shifts converge in d_abs", "[measures]") {
    const auto mu0 = ParticleMeasure::uniform({-0.5, 0.5});
    const CoefficientTable t = coeff_table(2.0, 30, JumpLaw::point_mass(0.2), 1.0);
    double prev = INFINITY;
    for (int n = 1; n <= 64; ++n) {
        double d = metric_d_abs(mu0.shifted(1.0 / n), mu0, t, 30).value;
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("moment vectors", "[measures]") {
    const MomentVector m({0.5, 0.3, 0.2});
    CHECK(m.moment(0) == 1.0);
    CHECK(m[2] == 0.3);
    CHECK_THROWS_AS(m.moment(4), MissingMomentError);
    CHECK(m.truncated(2).order() == 2);
    const auto mu = ParticleMeasure({1.0, 2.0}, {0.5, 0.5});
    const auto mv = mu.moments(3, 1.0);
    CHECK(mv.raw() == std::vector<double>{1.5, 2.5, 4.5});
    CHECK_THAT(*mv.exp_moment(), WithinRel(0.5 * (e_delta(1.0, 1.0) + e_delta(2.0, 1.0)), 1e-15));
}
