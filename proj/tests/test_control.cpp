#include <catch_amalgamated.hpp>

#include <cmath>

#include "mvjump/control.hpp"

using namespace mvjump;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
// Coupled dynamics with controlled drift, quadratic control cost and G = <mu, x^2>.
ModelSpec costed_model(std::vector<double> grid = {-0.5, 0.0, 0.5}) {
    ModelSpec m = coupled_model();
    m.controls.clear();
    for (double a : grid) m.controls.push_back({a, 0.0});
    m.running_base = [](double, const MomentVector&, const Control& a) { return 0.5 * a.a1 * a.a1; };
    m.terminal = {[](const MomentVector& mv) { return mv.moment(2); }, {}, 2};
    return m;
}

SimParams sim(double dt = 0.05) { return {dt, 2000, 1, 2}; }
}  // namespace

TEST_CASE("backend names", "[control]") {
    CHECK(parse_backend("moment") == Backend::moment);
    CHECK(to_string(parse_backend("particle")) == "particle");
    CHECK_THROWS_AS(parse_backend("quantum"), DomainError);
}

TEST_CASE("cost functional on the drift-only model", "[control]") {
    const ModelSpec m = drift_only_model();
    const auto mu0 = ParticleMeasure::uniform({0.0, 1.0});
    const auto down = ControlPath::constant(0.0, 1.0, {-1.0, 0.0});
    CHECK_THAT(cost_functional(m, 0.0, mu0, down, Backend::moment, sim()), WithinAbs(-0.5, 1e-14));
    CHECK_THAT(cost_functional(m, 0.0, mu0, down, Backend::particle, sim()), WithinAbs(-0.5, 1e-12));
    const auto zig = ControlPath::uniform(0.0, 1.0, {{1.0, 0.0}, {-1.0, 0.0}, {-1.0, 0.0}, {0.0, 0.0}});
    CHECK_THAT(cost_functional(m, 0.0, mu0, zig, Backend::moment, sim()), WithinAbs(0.5 - 0.25, 1e-14));
    CHECK_THROWS_AS(cost_functional(m, 0.3, mu0, down, Backend::moment, sim()), DomainError);
}

TEST_CASE("running cost is integrated per interval", "[control]") {
    ModelSpec m = constant_model(0.0, 0.0, 0.0, JumpLaw::point_mass(0.0));
    m.controls = {{1.0, 0.0}, {2.0, 0.0}};
    m.running_base = [](double t, const MomentVector&, const Control& a) { return a.a1 * t; };
    m.terminal = {[](const MomentVector&) { return 3.0; }, {}, 0};
    const auto path = ControlPath::uniform(0.0, 2.0, {{1.0, 0.0}, {2.0, 0.0}});
    const CostBreakdown c = cost_breakdown(m, 0.0, ParticleMeasure::dirac(0.0), path, Backend::moment, sim(0.1));
    REQUIRE(c.interval_costs.size() == 2);
    CHECK_THAT(c.interval_costs[0], WithinAbs(0.5, 1e-13));
    CHECK_THAT(c.interval_costs[1], WithinAbs(3.0, 1e-13));
    CHECK(c.terminal == 3.0);
    CHECK_THAT(c.total, WithinAbs(6.5, 1e-13));
}

TEST_CASE("non-polynomial state cost needs the particle backend", "[control]") {
    InnovationParams p;
    p.x_cap = 2.0;
    const ModelSpec m = innovation_model(p);
    const auto mu0 = ParticleMeasure::uniform({-0.2, 0.2});
    const auto path = ControlPath::constant(0.0, 0.5, {1.0, 1.0});
    CHECK_THROWS_AS(cost_functional(m, 0.0, mu0, path, Backend::moment, sim()), CostNotEvaluableError);
    CHECK(std::isfinite(cost_functional(m, 0.0, mu0, path, Backend::particle, sim())));
    CHECK_THROWS_AS(cost_functional(m, 0.0, MomentVector({0.0}), path, Backend::particle, sim()), DomainError);
}

TEST_CASE("value search on the drift-only model", "[control]") {
    const ModelSpec m = drift_only_model();
    const auto mu0 = ParticleMeasure::dirac(0.3);
    SearchOptions opt;
    opt.sim = sim();
    const ValueResult r = value_search(m, 0.0, mu0, 1.0, 2, opt);
    CHECK_THAT(r.value, WithinAbs(-0.7, 1e-14));
    CHECK(r.control_indices == std::vector<std::size_t>{0, 0});
    CHECK(r.candidates == 9);
    CHECK(r.label == "upper_approximation");
    // t == T returns G
    const ValueResult end = value_search(m, 1.0, mu0, 1.0, 0, opt);
    CHECK(end.value == 0.3);
    CHECK_FALSE(end.control.has_value());
    CHECK_THROWS_AS(value_search(m, 0.0, mu0, 1.0, 0, opt), DomainError);
}

TEST_CASE("value search is monotone in the grid and under refinement", "[control]") {
    const auto mu0 = ParticleMeasure::uniform({-0.5, 0.0, 0.5});
    SearchOptions opt;
    opt.sim = sim();
    const double coarse_grid = value_search(costed_model({0.0}), 0.0, mu0, 1.0, 2, opt).value;
    const double fine_grid = value_search(costed_model({-0.5, 0.0, 0.5}), 0.0, mu0, 1.0, 2, opt).value;
    CHECK(fine_grid <= coarse_grid);
    const ModelSpec m = costed_model();
    const double v2 = value_search(m, 0.0, mu0, 1.0, 2, opt).value;
    const double v4 = value_search(m, 0.0, mu0, 1.0, 4, opt).value;
    CHECK(v4 <= v2 + 1e-14);
}

TEST_CASE("value search budget", "[control]") {
    CHECK(candidate_count(3, 4, 100) == 81);
    CHECK_THROWS_AS(candidate_count(3, 5, 100), BudgetError);
    CHECK_THROWS_AS(candidate_count(10, 40, std::size_t{1} << 20), BudgetError);
    SearchOptions opt;
    opt.budget = 10;
    CHECK_THROWS_AS(value_search(costed_model(), 0.0, ParticleMeasure::dirac(0.0), 1.0, 3, opt), BudgetError);
}

TEST_CASE("dynamic programming residual", "[control]") {
    const ModelSpec m = costed_model();
    const auto mu0 = ParticleMeasure::uniform({-0.5, 0.5});
    SearchOptions opt;
    opt.sim = sim();
    for (double theta : {0.0, 0.25, 0.5, 1.0}) {
        const DppReport r = dpp_residual(m, 0.0, mu0, 1.0, 4, theta, opt);
        CHECK(r.residual <= 1e-12);
        CHECK_THAT(r.direct, WithinAbs(value_search(m, 0.0, mu0, 1.0, 4, opt).value, 1e-15));
    }
    CHECK_THROWS_AS(dpp_residual(m, 0.0, mu0, 1.0, 4, 0.3, opt), DomainError);
}

TEST_CASE("viscosity residual", "[control]") {
    // drift-only value <mu, x> - (T - t) is classical and solves the equation
    const ModelSpec m = drift_only_model();
    const double T = 1.0;
    CylindricalTest phi{NumericPolynomial::monomial(1), [T](double t, double y) { return y - (T - t); },
                        [](double, double) { return 1.0; }, [](double, double) { return 1.0; }};
    for (double t : {0.0, 0.3, 0.9})
        for (double c : {-2.0, 0.0, 1.5}) CHECK(viscosity_residual(phi, t, ParticleMeasure::uniform({c, c + 1.0}), m) == 0.0);
    // a candidate with the wrong slope leaves a residual
    CylindricalTest wrong{NumericPolynomial::monomial(1), [T](double t, double y) { return y - 2.0 * (T - t); },
                          [](double, double) { return 2.0; }, [](double, double) { return 1.0; }};
    CHECK(viscosity_residual(wrong, 0.5, ParticleMeasure::dirac(0.0), m) == -1.0);
}

TEST_CASE("strict-max test function", "[control]") {
    const auto mu0 = ParticleMeasure::uniform({-0.4, 0.2, 0.6});
    const StrictMaxTest phi = strict_max_testfn(0.5, mu0, 12);
    CHECK(phi.value(0.5, mu0) == 0.0);
    CHECK(phi.value(0.7, mu0) > 0.0);
    CHECK(phi.value(0.5, mu0.shifted(0.01)) > 0.0);
    CHECK(pairing(mu0, phi.linear_derivative(mu0)) == 0.0);
    CHECK(phi.time_derivative(0.5) == 0.0);
    CHECK(phi.time_derivative(0.7) > 0.0);
    CHECK(StrictMaxTest::weight(3) == 1.0 / 32.0);
    CHECK(std::isinf(phi.tail_bound(MomentVector(std::vector<double>(12, 0.0)))));
    CHECK(std::isinf(phi.tail_bound(ParticleMeasure::dirac(1.5))));
    const double tail = phi.tail_bound(mu0.shifted(0.1));
    CHECK(tail > 0.0);
    CHECK(tail < 1e-6);
    // directional derivative against D_m phi
    const auto nu = ParticleMeasure::uniform({0.1, 0.3});
    const auto base = mu0.shifted(0.05);
    const double eps = 1e-6;
    std::vector<double> pts = base.points(), w = base.weights();
    for (double& v : w) v *= 1.0 - eps;
    for (double x : nu.points()) {
        pts.push_back(x);
        w.push_back(0.5 * eps);
    }
    const double fd = (phi.value(0.5, ParticleMeasure(pts, w)) - phi.value(0.5, base)) / eps;
    const NumericPolynomial d = phi.linear_derivative(base);
    CHECK_THAT(fd, WithinAbs(pairing(nu, d) - pairing(base, d), 1e-6));
    CHECK_THROWS_AS(strict_max_testfn(0.0, mu0, 0), DomainError);
}
