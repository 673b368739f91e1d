#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mvjump/expression.hpp"
#include "mvjump/generator.hpp"
#include "mvjump/model.hpp"

using namespace mvjump;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
// b, sigma, lambda constants with a point-mass jump at c.
ModelSpec frozen(double b, double s, double l, double c) { return constant_model(b, s, l, JumpLaw::point_mass(c)); }
}  // namespace

TEST_CASE("generator on x with hand coefficients", "[generator]") {
    // m1 = 1/2 from a point mass at 1/2
    const ModelSpec m = frozen(2.0, 3.0, 1.0, 0.5);
    const MeasureState mu = ParticleMeasure::uniform({-1.0, 0.3, 4.0});
    const NumericPolynomial Lx = apply_generator(NumericPolynomial::monomial(1), 0.0, mu, Control{}, m);
    CHECK(Lx.degree() == 0);
    CHECK(Lx.coefficient(0) == 2.5);
    CHECK(expected_generator(NumericPolynomial::monomial(1), 0.0, mu, Control{}, m) == 2.5);
    CHECK(expected_generator(parse_polynomial("x"), 0.0, mu, Control{}, m) == 2.5);
}

TEST_CASE("generator special cases", "[generator]") {
    const MeasureState mu = ParticleMeasure::uniform({0.2, 0.7});
    // lambda = 0: b f' + sigma^2/2 f''
    const ModelSpec nojump = frozen(0.4, 0.6, 0.0, 1.0);
    const NumericPolynomial f({1.0, -2.0, 0.5, 1.0});
    const NumericPolynomial expect = f.derivative(1) * 0.4 + f.derivative(2) * (0.5 * 0.6 * 0.6);
    CHECK(apply_generator(f, 0.0, mu, Control{}, nojump) == expect);
    // constants are annihilated
    CHECK(apply_generator(NumericPolynomial::constant(3.0), 0.0, mu, Control{}, frozen(1, 1, 1, 1)).is_zero());
    // f = x^2, b = 0, sigma = 1, lambda = 0
    CHECK(expected_generator(NumericPolynomial::monomial(2), 0.0, mu, Control{}, frozen(0, 1, 0, 0)) == 1.0);
}

TEST_CASE("generator is linear", "[generator]") {
    const ModelSpec m = constant_model(0.3, 0.5, 0.8, JumpLaw::gaussian(0.1, 0.4));
    const MeasureState mu = ParticleMeasure::uniform({-0.4, 0.1, 0.9});
    const NumericPolynomial f({0.5, 1.0, -1.0, 0.25}), g({0.0, 2.0, 0.0, 0.0, 1.0});
    const double a = 1.5, b = -0.75;
    const NumericPolynomial lhs = apply_generator(f * a + g * b, 0.0, mu, Control{}, m);
    const NumericPolynomial rhs = apply_generator(f, 0.0, mu, Control{}, m) * a + apply_generator(g, 0.0, mu, Control{}, m) * b;
    REQUIRE(lhs.degree() == rhs.degree());
    for (int k = 0; k <= lhs.degree(); ++k)
        CHECK_THAT(lhs.coefficient(static_cast<std::size_t>(k)), WithinAbs(rhs.coefficient(static_cast<std::size_t>(k)), 1e-14));
}

TEST_CASE("generator needs the moments the coefficients read", "[generator]") {
    const ModelSpec m = coupled_model();
    const MeasureState empty = MomentVector(std::vector<double>{});
    CHECK_THROWS_AS(apply_generator(NumericPolynomial::monomial(1), 0.0, empty, Control{}, m), MissingMomentError);
}

TEST_CASE("generator bound with C0 and jump moments", "[generator]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const ModelSpec m = coupled_model({0.4, 0.1, 0.3, 0.5, JumpLaw::gaussian(0.2, 0.5), 1.0});
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> pts(5);
        for (double& p : pts) p = 2.0 * u(rng);
        const MeasureState mu = ParticleMeasure::uniform(pts);
        NumericPolynomial f;
        for (unsigned k = 0; k <= 4; ++k) f += NumericPolynomial::monomial(k, u(rng));
        const double lhs = std::fabs(expected_generator(f, 3.0 * std::fabs(u(rng)), mu, Control{}, m));
        double rhs = 0.0;
        for (unsigned i = 0; i <= 4; ++i) rhs += std::fabs(pairing(mu, f.derivative(i)));
        CHECK(lhs <= generator_bound_constant(m, 4) * rhs + 1e-12);
    }
}

TEST_CASE("hamiltonian", "[generator]") {
    const MeasureState mu = ParticleMeasure::uniform({0.0, 1.0});
    ModelSpec zero = frozen(0, 0, 0, 0);
    zero.controls = {{0.0, 0.0}, {1.0, 0.0}};
    const auto h0 = hamiltonian(0.0, mu, NumericPolynomial::monomial(3), zero);
    CHECK(h0.value == 0.0);
    CHECK(h0.argmax_index == 0);

    // H^0 = 1, H^1 = 2 through L1 = -(1 + a)
    ModelSpec costed = zero;
    costed.running_base = [](double, const MomentVector&, const Control& a) { return -(1.0 + a.a1); };
    auto h = hamiltonian(0.0, mu, NumericPolynomial::monomial(1), costed);
    CHECK(h.value == 2.0);
    CHECK(h.argmax.a1 == 1.0);

    // singleton grid
    ModelSpec single = costed;
    single.controls = {{0.5, 0.0}};
    CHECK(hamiltonian(0.0, mu, NumericPolynomial::monomial(1), single).value ==
          hamiltonian_at(0.0, mu, NumericPolynomial::monomial(1), Control{0.5, 0.0}, single));

    // a control-independent constant added to L shifts the value only
    ModelSpec shifted = costed;
    shifted.running_base = [](double, const MomentVector&, const Control& a) { return 5.0 - (1.0 + a.a1); };
    auto hs = hamiltonian(0.0, mu, NumericPolynomial::monomial(1), shifted);
    CHECK(hs.argmax_index == h.argmax_index);
    CHECK(hs.value == h.value - 5.0);

    ModelSpec empty = zero;
    empty.controls.clear();
    CHECK_THROWS_AS(hamiltonian(0.0, mu, NumericPolynomial::monomial(1), empty), DomainError);
}

TEST_CASE("innovation model", "[generator]") {
    InnovationParams p;
    p.x_cap = 3.0;
    p.delta = 1.5;
    const ModelSpec m = innovation_model(p);
    const MomentVector mv({0.7});
    // no research, no meetings: zero drift and intensity, full harvest term
    CHECK(m.drift(0.0, mv, {0.0, 0.0}) == 0.0);
    CHECK(m.intensity(0.0, mv, {0.0, 0.0}) == 0.0);
    const MeasureState mu = ParticleMeasure::uniform({0.5, 1.0});
    CHECK_THAT(running_cost(m, 0.0, mu, Control{0.0, 0.0}), WithinRel(-0.5 * (std::exp(0.5) + std::exp(1.0)), 1e-14));
    // bounded coefficients, H1 with the model's C0
    CHECK(check_assumptions(m, 2.0).empty());
    CHECK(m.c0 >= p.b_max + p.sigma + p.lambda_max);
    // Lipschitz in m1 with constant b_max
    double worst = 0.0;
    for (int i = -400; i < 400; ++i) {
        double x = i * 0.01, h = 0.01;
        double d = std::fabs(m.drift(0.0, MomentVector({x + h}), {1.0, 0.0}) - m.drift(0.0, MomentVector({x}), {1.0, 0.0})) / h;
        worst = std::max(worst, d);
    }
    CHECK(worst <= p.b_max + 1e-12);
    CHECK(m.moment_indices == std::vector<int>{1});
    // uncapped exponential cost needs delta > 1
    InnovationParams bad;
    bad.delta = 1.0;
    CHECK_THROWS_AS(innovation_model(bad), DomainError);
    CHECK_NOTHROW(innovation_model(InnovationParams{}));
}

TEST_CASE("H4 constant of the innovation cost", "[generator]") {
    for (double delta : {0.5, 1.0, 1.5, 3.0}) {
        const double cap = 2.0;
        const double C = innovation_cost_constant(delta, cap);
        double brute = 0.0;
        for (int i = -200000; i <= 200000; ++i) {
            double x = i * 1e-4;
            brute = std::max(brute, std::fabs(std::exp(std::min(x, cap)) * x) * std::exp(-delta * std::fabs(x)));
        }
        CHECK(C >= brute * (1 - 1e-9));
        CHECK_THAT(C, WithinRel(brute, 1e-6));
    }
}

TEST_CASE("cylindrical test function derivative", "[generator]") {
    CylindricalTest phi{NumericPolynomial::monomial(2), [](double t, double y) { return t * y * y; },
                        [](double, double y) { return y * y; }, [](double t, double y) { return 2.0 * t * y; }};
    const MeasureState mu = ParticleMeasure::uniform({1.0, 3.0});
    CHECK(phi.value(2.0, mu) == 2.0 * 25.0);
    CHECK(phi.time_derivative(2.0, mu) == 25.0);
    // D_m phi = 2 t <mu, x^2> x^2
    CHECK(phi.linear_derivative(2.0, mu) == NumericPolynomial::monomial(2, 20.0));
    // increment identity phi(mu') - phi(mu) = int_0^1 <mu' - mu, D_m phi(mu + s(mu' - mu))> ds
    const ParticleMeasure a = ParticleMeasure::uniform({1.0, 3.0}), b = ParticleMeasure::uniform({0.0, 2.0});
    double integral = 0.0;
    const int n = 2000;
    for (int k = 0; k < n; ++k) {
        double s = (k + 0.5) / n;
        std::vector<double> pts = {1.0, 3.0, 0.0, 2.0};
        std::vector<double> w = {0.5 * (1 - s), 0.5 * (1 - s), 0.5 * s, 0.5 * s};
        const MeasureState mix = ParticleMeasure(pts, w);
        NumericPolynomial d = phi.linear_derivative(2.0, mix);
        integral += (pairing(b, d) - pairing(a, d)) / n;
    }
    CHECK_THAT(integral, WithinAbs(phi.value(2.0, b) - phi.value(2.0, a), 1e-5));
}
