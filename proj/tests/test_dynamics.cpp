#include <catch_amalgamated.hpp>

#include <cmath>

#include "mvjump/dynamics.hpp"

using namespace mvjump;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
// First two moments of X_t = X_0 + b t + sigma W_t + compound Poisson(lambda, gamma):
// mean rate mu = b + lambda E[Y], variance rate v = sigma^2 + lambda E[Y^2].
struct Closed {
    double mu, v;
    double m1(double m10, double t) const { return m10 + mu * t; }
    double m2(double m10, double m20, double t) const { return m20 + 2.0 * m10 * mu * t + mu * mu * t * t + v * t; }
};

Closed closed_form(double b, double sigma, double lambda, const JumpLaw& j) {
    return {b + lambda * j.raw_moment(1), sigma * sigma + lambda * j.raw_moment(2)};
}

ParticleOptions popts(std::size_t n, std::uint64_t seed, double dt = 0.01) {
    ParticleOptions o;
    o.n_particles = n;
    o.seed = seed;
    o.dt = dt;
    o.moment_order = 2;
    return o;
}
}  // namespace

TEST_CASE("control paths and grids", "[dynamics]") {
    CHECK_THROWS_AS(ControlPath({0.0, 1.0}, {}), DomainError);
    CHECK_THROWS_AS(ControlPath({1.0, 0.0}, {Control{}}), DomainError);
    const ControlPath p = ControlPath::uniform(0.0, 1.0, {{-1.0, 0.0}, {1.0, 0.0}});
    CHECK(p.intervals() == 2);
    CHECK(p.at(0.25).a1 == -1.0);
    CHECK(p.at(0.5).a1 == 1.0);
    CHECK(p.at(1.0).a1 == 1.0);
    const TimeGrid g = make_grid(p, 0.1);
    CHECK(g.steps() == 10);
    CHECK(g.times.front() == 0.0);
    CHECK(g.times.back() == 1.0);
    // breakpoints are grid points
    CHECK(std::find(g.times.begin(), g.times.end(), 0.5) != g.times.end());
    CHECK(g.step_control[4].a1 == -1.0);
    CHECK(g.step_control[5].a1 == 1.0);
    // an interval shorter than dt gets one step
    CHECK(make_grid(ControlPath({0.0, 0.03, 1.0}, {Control{}, Control{}}), 0.1).step_interval.front() == 0);
}

TEST_CASE("pure drift translates every particle", "[dynamics]") {
    const ModelSpec m = constant_model(0.7, 0.0, 0.0, JumpLaw::point_mass(0.0));
    const auto mu0 = ParticleMeasure::uniform({-1.0, 0.0, 2.0});
    const ParticleRun run = simulate_particles(m, mu0, ControlPath::constant(0.0, 1.0, Control{}), popts(3, 1, 0.1));
    auto pts = run.final_state.points();
    std::sort(pts.begin(), pts.end());
    CHECK_THAT(pts[0], WithinAbs(-0.3, 1e-14));
    CHECK_THAT(pts[1], WithinAbs(0.7, 1e-14));
    CHECK_THAT(pts[2], WithinAbs(2.7, 1e-14));
}

TEST_CASE("frozen coefficients: particles match the closed form", "[dynamics]") {
    struct Case {
        double b, s, l;
        JumpLaw j;
    };
    const Case cases[] = {{0.2, 0.5, 0.0, JumpLaw::point_mass(0.0)},
                          {0.0, 0.0, 2.0, JumpLaw::gaussian(0.3, 0.5)},
                          {-0.1, 0.3, 1.0, JumpLaw::discrete({-0.5, 0.5}, {0.3, 0.7})}};
    const auto mu0 = ParticleMeasure({-0.5, 0.5}, {0.5, 0.5});
    std::uint64_t seed = 100;
    for (const auto& c : cases) {
        const ModelSpec m = constant_model(c.b, c.s, c.l, c.j);
        const ParticleRun run = simulate_particles(m, mu0, ControlPath::constant(0.0, 1.0, Control{}), popts(40000, seed++));
        const Closed cf = closed_form(c.b, c.s, c.l, c.j);
        for (std::size_t k = 10; k < run.flow.times.size(); k += 30) {
            double t = run.flow.times[k];
            CHECK(std::fabs(run.flow.moments[k].moment(1) - cf.m1(0.0, t)) <= 4.0 * run.flow.std_errors[k][0]);
            CHECK(std::fabs(run.flow.moments[k].moment(2) - cf.m2(0.0, 0.25, t)) <= 4.0 * run.flow.std_errors[k][1]);
        }
    }
}

TEST_CASE("moment flow matches closed forms", "[dynamics]") {
    const MomentVector m0({0.1, 0.3, 0.0, 0.2});
    for (const auto& [b, s, l, j] : {std::tuple{0.2, 0.5, 0.0, JumpLaw::point_mass(0.0)},
                                     std::tuple{0.0, 0.0, 1.5, JumpLaw::gaussian(0.3, 0.5)},
                                     std::tuple{-0.4, 0.2, 0.7, JumpLaw::point_mass(0.25)}}) {
        const ModelSpec m = constant_model(b, s, l, j);
        const MeasureFlow f = moment_flow(m, m0, ControlPath::constant(0.0, 2.0, Control{}), 4, 0.05);
        const Closed cf = closed_form(b, s, l, j);
        for (std::size_t k = 0; k < f.times.size(); ++k) {
            CHECK_THAT(f.moments[k].moment(1), WithinAbs(cf.m1(0.1, f.times[k]), 1e-10));
            CHECK_THAT(f.moments[k].moment(2), WithinAbs(cf.m2(0.1, 0.3, f.times[k]), 1e-10));
        }
    }
}

TEST_CASE("moment system must be closed", "[dynamics]") {
    ModelSpec m = coupled_model();
    m.moment_indices = {3};
    CHECK_THROWS_AS(moment_flow(m, MomentVector({0.0, 1.0}), ControlPath::constant(0.0, 1.0, Control{}), 2, 0.1), DomainError);
    CHECK_THROWS_AS(moment_flow(m, MomentVector({0.0, 1.0}), ControlPath::constant(0.0, 1.0, Control{}), 4, 0.1),
                    MissingMomentError);
}

TEST_CASE("particle runs are reproducible per seed", "[dynamics]") {
    const ModelSpec m = coupled_model();
    const auto mu0 = ParticleMeasure::uniform({-0.5, 0.5});
    const auto alpha = ControlPath::constant(0.0, 0.5, Control{});
    const auto a = simulate_particles(m, mu0, alpha, popts(500, 42));
    const auto b = simulate_particles(m, mu0, alpha, popts(500, 42));
    const auto c = simulate_particles(m, mu0, alpha, popts(500, 43));
    CHECK(a.final_state.points() == b.final_state.points());
    CHECK(a.final_state.points() != c.final_state.points());
}

TEST_CASE("particles agree with the moment flow on the coupled model", "[dynamics]") {
    const ModelSpec m = coupled_model();
    const auto mu0 = ParticleMeasure::uniform({-0.5, 0.5});
    const auto alpha = ControlPath::constant(0.0, 1.0, Control{});
    const ParticleRun run = simulate_particles(m, mu0, alpha, popts(20000, 7));
    const MeasureFlow f = moment_flow(m, mu0.moments(2), alpha, 2, 0.01);
    for (std::size_t k = 0; k < f.times.size(); k += 20)
        for (int q = 1; q <= 2; ++q)
            CHECK(std::fabs(run.flow.moments[k].moment(q) - f.moments[k].moment(q)) <=
                  4.0 * run.flow.std_errors[k][static_cast<std::size_t>(q - 1)] + 1e-12);
}

TEST_CASE("rk4 converges at fourth order", "[dynamics]") {
    const ModelSpec m = coupled_model();
    const MomentVector m0({0.0, 0.25});
    const auto alpha = ControlPath::constant(0.0, 1.0, Control{});
    double y[3];
    for (int i = 0; i < 3; ++i) y[i] = moment_flow(m, m0, alpha, 2, 0.2 / std::pow(2.0, i)).final_moments().moment(1);
    const double ratio = (y[0] - y[1]) / (y[1] - y[2]);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("picard iteration", "[dynamics]") {
    const auto alpha = ControlPath::constant(0.0, 1.0, Control{});
    const MomentVector m0({0.0, 0.25, 0.0, 0.0625});

    SECTION("started at the fixed point") {
        const ModelSpec m = coupled_model();
        PicardOptions po;
        po.initial_guess = moment_flow(m, m0, alpha, 4, 0.01);
        const PicardResult r = picard_solve(m, m0, alpha, 4, 0.01, po);
        CHECK(r.iterations == 1);
        CHECK(r.gaps.front() <= 1e-15);
    }
    SECTION("law-independent coefficients settle after one map") {
        const ModelSpec m = constant_model(0.3, 0.2, 0.5, JumpLaw::point_mass(0.1));
        const PicardResult r = picard_solve(m, m0, alpha, 4, 0.01, PicardOptions{});
        REQUIRE(r.gaps.size() == 2);
        CHECK(r.gaps[0] > 0.0);
        CHECK(r.gaps[1] == 0.0);
    }
    SECTION("gaps shrink and the limit is the moment flow") {
        const ModelSpec m = coupled_model();
        const PicardResult r = picard_solve(m, m0, alpha, 4, 0.01, PicardOptions{});
        for (std::size_t k = 2; k + 1 < r.gaps.size() && r.gaps[k + 1] > 1e-13; ++k) CHECK(r.gaps[k + 1] * 5.0 <= r.gaps[k]);
        const MeasureFlow direct = moment_flow(m, m0, alpha, 4, 0.01);
        const CoefficientTable t = coeff_table(1.0, 20, m.jump, m.delta);
        CHECK(flow_distance(r.flow, direct, t, 20) <= 1e-10);
    }
    SECTION("budget exhaustion reports the gaps") {
        PicardOptions po;
        po.max_iter = 2;
        try {
            (void)picard_solve(coupled_model(), m0, alpha, 4, 0.01, po);
            FAIL("expected non-convergence");
        } catch (const ConvergenceError& e) {
            CHECK(e.gaps().size() == 2);
        }
    }
}

TEST_CASE("exponential-moment invariance report", "[dynamics]") {
    const ModelSpec m = constant_model(0.0, 0.0, 0.0, JumpLaw::point_mass(0.0));
    const auto mu0 = ParticleMeasure::uniform({-1.0, 1.0});
    ParticleOptions o = popts(10, 1, 0.1);
    o.exp_delta = 1.0;
    ParticleRun run = simulate_particles(m, mu0, ControlPath::constant(0.0, 1.0, Control{}), o);
    const double em = e_delta(1.0, 1.0);
    for (double v : run.exp_mean) CHECK_THAT(v, WithinRel(em, 1e-14));
    const auto params = ExpMomentParams::make(m.c0 + 0.1, 1.0, m.jump, em);
    CHECK(invariance_check(run, em, params).ok());
    CHECK(invariance_check(run, em, params).initial_in_level);
    // a level below the initial moment is violated immediately
    const auto rep = invariance_check(run, 0.5 * em, ExpMomentParams::make(1e-9, 1.0, m.jump, 0.5 * em));
    CHECK_FALSE(rep.initial_in_level);
    CHECK_FALSE(rep.ok());
    ParticleRun bare = simulate_particles(m, mu0, ControlPath::constant(0.0, 1.0, Control{}), popts(10, 1, 0.1));
    CHECK_THROWS_AS(invariance_check(bare, em, params), DomainError);
}

TEST_CASE("bounded random model stays in its level set", "[dynamics]") {
    CoupledParams p;
    p.jump = JumpLaw::gaussian(0.1, 0.3);
    const ModelSpec m = coupled_model(p);
    const auto mu0 = ParticleMeasure::uniform({-0.5, 0.0, 0.5});
    ParticleOptions o = popts(6000, 3, 0.02);
    o.exp_delta = m.delta;
    const ParticleRun run = simulate_particles(m, mu0, ControlPath::constant(0.0, 1.0, Control{}), o);
    const double N = pairing(mu0, [&](double x) { return e_delta(x, m.delta); });
    const InvarianceReport rep = invariance_check(run, N, ExpMomentParams::make(m.c0, m.delta, m.jump, N));
    CHECK(rep.initial_in_level);
    CHECK(rep.ok());
}
