#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mvjump/mvjump.hpp"

using namespace mvjump;
namespace fs = std::filesystem;

namespace {

struct ConfigArgs {
    std::string path;
    ConfigOverrides o;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--dt", o.dt, "override simulation.dt");
        cmd->add_option("--particles", o.particles, "override simulation.particles");
        cmd->add_option("--seed", o.seed, "override simulation.seed");
        cmd->add_option("--D", o.D, "override simulation.D");
        cmd->add_option("--horizon", o.horizon, "override simulation.horizon");
        cmd->add_option("--n-intervals", o.n_intervals, "override control.n_intervals");
        cmd->add_option("--backend", o.backend, "override control.backend (moment|particle)");
        cmd->add_option("--theta", o.theta, "override control.theta");
        cmd->add_option("--out", o.output_dir, "override output.dir");
    }

    RunConfig load() const {
        RunConfig cfg = load_config(path, o);
        fs::create_directories(cfg.output_dir);
        return cfg;
    }
};

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.output_dir) / name).string(); }

int cmd_closure(const std::string& text, const std::string& json_path, bool ascii) {
    const Polynomial f = parse_polynomial(text);
    const ClosureSet s = star_closure(f);
    const Notation n = ascii ? Notation::ascii : Notation::pretty;
    std::cout << "chi(" << f.to_string(n) << ") = {";
    for (std::size_t i = 0; i < s.size(); ++i) std::cout << (i ? ", " : "") << s.elements()[i].to_string(n);
    std::cout << "}\n" << s.size() << " elements\n";
    if (!json_path.empty()) io::write_json(json_path, io::to_json(s));
    return 0;
}

int cmd_coeffs(std::size_t j_max, double b, double delta, double jump_point, const std::string& config,
               const std::string& json_path) {
    JumpLaw jump = JumpLaw::point_mass(jump_point);
    if (!config.empty()) {
        RunConfig cfg = load_config(config);
        jump = cfg.model.jump;
        delta = cfg.model.delta;
    }
    const CoefficientTable t = coeff_table(b, j_max, jump, delta);
    std::cout << "b = " << b << ", delta = " << delta << ", jump = " << jump.label() << ", " << t.size() << " entries\n";
    std::cout << std::left << std::setw(4) << "j" << std::setw(28) << "f_j" << std::setw(14) << "C_j" << std::setw(14)
              << "c_j" << "I_j\n";
    for (std::size_t j = 0; j < t.size(); ++j) {
        std::cout << std::setw(4) << j + 1 << std::setw(28) << t.basis[j].to_string(Notation::ascii) << std::setw(14)
                  << t.sup_ratio[j] << std::setw(14) << t.c[j];
        for (std::size_t k = 0; k < t.deps[j].size(); ++k) std::cout << (k ? "," : "") << t.deps[j][k];
        std::cout << "\n";
    }
    if (!json_path.empty()) io::write_json(json_path, io::to_json(t));
    return 0;
}

int cmd_metric(const ConfigArgs& ca, const std::string& mu_path, const std::string& nu_path, std::size_t j_max,
               std::optional<double> b) {
    RunConfig cfg = ca.load();
    const ParticleMeasure mu = io::read_particles_csv(mu_path);
    const ParticleMeasure nu = io::read_particles_csv(nu_path);
    const double d = cfg.model.delta;
    auto em = [&](const ParticleMeasure& m) { return pairing(m, [&](double x) { return e_delta(x, d); }); };
    const double bound = b.value_or(std::max(em(mu), em(nu)));
    const CoefficientTable t = coeff_table(bound, j_max, cfg.model.jump, d);
    const MetricValue sq = metric_d_sq(mu, nu, t, j_max);
    const MetricValue ab = metric_d_abs(mu, nu, t, j_max);
    std::cout << std::setprecision(12) << "b = " << bound << ", j_max = " << j_max << "\n"
              << "d_sq  = " << sq.value << " (tail <= " << sq.tail_bound << ")\n"
              << "d_abs = " << ab.value << " (tail <= " << ab.tail_bound << ")\n";
    io::write_json(out_path(cfg, "metric.json"), {{"b", bound},
                                                  {"j_max", j_max},
                                                  {"d_sq", sq.value},
                                                  {"d_sq_tail", sq.tail_bound},
                                                  {"d_abs", ab.value},
                                                  {"d_abs_tail", ab.tail_bound}});
    return 0;
}

int cmd_simulate(const ConfigArgs& ca, std::size_t control_index) {
    RunConfig cfg = ca.load();
    const ModelSpec& m = cfg.model;
    if (control_index >= m.controls.size()) throw DomainError("--control-index outside the control grid");
    const ControlPath alpha = ControlPath::constant(cfg.t0, cfg.horizon, m.controls[control_index]);
    ParticleOptions opt;
    opt.dt = cfg.dt;
    opt.n_particles = cfg.particles;
    opt.seed = cfg.seed;
    opt.moment_order = cfg.D;
    opt.exp_delta = m.delta;
    opt.snapshot_times = {cfg.horizon};
    const ParticleRun run = simulate_particles(m, cfg.initial, alpha, opt);
    const MeasureFlow flow = moment_flow(m, cfg.initial.moments(cfg.D), alpha, cfg.D, cfg.dt);

    io::write_flow_csv(out_path(cfg, "particle_flow.csv"), run.flow, cfg.seed);
    io::write_flow_csv(out_path(cfg, "moment_flow.csv"), flow, cfg.seed);
    io::write_particles_csv(out_path(cfg, "particles_final.csv"), run.final_state, cfg.seed);

    std::cout << std::setprecision(10) << "steps " << run.grid.steps() << ", particles " << cfg.particles << ", seed "
              << cfg.seed << "\n";
    std::cout << "final moments (particle +- SE | moment flow):\n";
    for (int k = 1; k <= cfg.D; ++k) {
        std::cout << "  <mu_T, x^" << k << "> = " << run.flow.final_moments().moment(k) << " +- "
                  << run.flow.std_errors.back()[static_cast<std::size_t>(k - 1)] << " | " << flow.final_moments().moment(k)
                  << "\n";
    }
    std::cout << "  <mu_T, e_delta> = " << run.exp_mean.back() << " +- " << run.exp_se.back() << "\n";
    std::cout << "wrote " << out_path(cfg, "particle_flow.csv") << ", " << out_path(cfg, "moment_flow.csv") << ", "
              << out_path(cfg, "particles_final.csv") << "\n";
    return 0;
}

int cmd_picard(const ConfigArgs& ca) {
    RunConfig cfg = ca.load();
    const ControlPath alpha = ControlPath::constant(cfg.t0, cfg.horizon, cfg.model.controls.front());
    PicardOptions po;
    po.tol = cfg.picard_tol;
    po.max_iter = cfg.picard_max_iter;
    po.j_max = cfg.j_max;
    try {
        const PicardResult pr = picard_solve(cfg.model, cfg.initial.moments(cfg.D), alpha, cfg.D, cfg.dt, po);
        std::cout << std::setprecision(6);
        for (std::size_t k = 0; k < pr.gaps.size(); ++k) std::cout << "iteration " << k + 1 << "  gap " << pr.gaps[k] << "\n";
        io::write_flow_csv(out_path(cfg, "picard_flow.csv"), pr.flow, cfg.seed);
        io::write_json(out_path(cfg, "picard_gaps.json"), {{"gaps", pr.gaps}, {"iterations", pr.iterations}, {"tol", po.tol}});
        std::cout << "converged in " << pr.iterations << " iterations\n";
    } catch (const ConvergenceError& e) {
        io::write_json(out_path(cfg, "picard_gaps.json"), {{"gaps", e.gaps()}, {"converged", false}});
        throw;
    }
    return 0;
}

int cmd_value(const ConfigArgs& ca) {
    RunConfig cfg = ca.load();
    const ValueResult r = value_search(cfg.model, cfg.t0, cfg.initial, cfg.horizon, cfg.n_intervals, cfg.search());
    io::write_json(out_path(cfg, "value.json"), io::to_json(r));
    std::cout << std::setprecision(15) << "value " << r.value << " (" << r.label << ", " << to_string(r.backend)
              << " backend, " << r.candidates << " candidates, seed " << r.seed << ")\n";
    if (r.control) {
        std::cout << "control:";
        for (const auto& a : r.control->values()) std::cout << " (" << a.a1 << ", " << a.a2 << ")";
        std::cout << "\n";
    }
    std::cout << "wrote " << out_path(cfg, "value.json") << "\n";
    return 0;
}

int cmd_dpp(const ConfigArgs& ca) {
    RunConfig cfg = ca.load();
    const std::size_t n = cfg.n_intervals;
    const double theta =
        cfg.theta.value_or(cfg.t0 + (cfg.horizon - cfg.t0) * static_cast<double>(n / 2) / static_cast<double>(std::max<std::size_t>(n, 1)));
    const DppReport rep = dpp_residual(cfg.model, cfg.t0, cfg.initial, cfg.horizon, n, theta, cfg.search());
    std::cout << std::setprecision(15) << "V(t, mu) = " << rep.direct << "\nsplit at theta = " << theta << ": "
              << rep.split << "\nresidual " << rep.residual << "\n";
    io::write_json(out_path(cfg, "dpp.json"), {{"theta", theta},
                                               {"direct", rep.direct},
                                               {"split", rep.split},
                                               {"residual", rep.residual},
                                               {"seed", cfg.seed}});
    return 0;
}

int cmd_check(const ConfigArgs& ca) {
    RunConfig cfg = ca.load();
    const auto results = run_check_battery(cfg);
    bool ok = true;
    for (const auto& r : results) {
        const char* tag = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
        std::cout << "[" << tag << "] " << r.name << ": " << r.detail << "\n";
        ok = ok && r.passed;
    }
    std::cout << (ok ? "all checks passed" : "some checks failed") << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Controlled McKean-Vlasov jump-diffusions: closures, metrics, simulation and value search"};
    app.require_subcommand(1);

    std::string expr, json_path;
    bool ascii = false;
    auto* closure = app.add_subcommand("closure", "print the closure chi(f) of a polynomial");
    closure->add_option("polynomial", expr, "polynomial in x and m1, m2, ... (e.g. x^3)")->required();
    closure->add_option("--json", json_path, "also write the set as JSON");
    closure->add_flag("--ascii", ascii, "plain ASCII notation");

    std::size_t j_max = 20;
    double b = 1.0, delta = 1.0, jump_point = 0.0;
    std::string coeff_config;
    auto* coeffs = app.add_subcommand("coeffs", "coefficient table c_j(b) for the enumerated basis");
    coeffs->add_option("--j-max", j_max, "number of basis elements");
    coeffs->add_option("--b", b, "exponential-moment bound b");
    coeffs->add_option("--delta", delta, "rate delta");
    coeffs->add_option("--jump-point", jump_point, "point-mass jump size");
    coeffs->add_option("-c,--config", coeff_config, "take jump law and delta from a config")->check(CLI::ExistingFile);
    coeffs->add_option("--json", json_path, "write the table as JSON");

    ConfigArgs metric_args, sim_args, picard_args, value_args, dpp_args, check_args;
    std::string mu_path, nu_path;
    std::optional<double> metric_b;
    auto* metric = app.add_subcommand("metric", "distances d and d(.,.;b) between two particle measures");
    metric_args.attach(metric);
    metric->add_option("--mu", mu_path, "first measure (CSV position,weight)")->required()->check(CLI::ExistingFile);
    metric->add_option("--nu", nu_path, "second measure (CSV position,weight)")->required()->check(CLI::ExistingFile);
    metric->add_option("--j-max", j_max, "truncation index");
    metric->add_option("--b", metric_b, "bound b (default: larger exponential moment of the two)");

    std::size_t control_index = 0;
    auto* simulate = app.add_subcommand("simulate", "particle and moment-flow simulation under a constant control");
    sim_args.attach(simulate);
    simulate->add_option("--control-index", control_index, "position in control.A_grid");

    auto* picard = app.add_subcommand("picard", "Picard iteration for the law");
    picard_args.attach(picard);
    auto* value = app.add_subcommand("value", "value function by exhaustive piecewise-constant search");
    value_args.attach(value);
    auto* dpp = app.add_subcommand("dpp", "dynamic programming residual at an intermediate time");
    dpp_args.attach(dpp);
    auto* check = app.add_subcommand("check", "run the invariant battery");
    check_args.attach(check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*closure) return cmd_closure(expr, json_path, ascii);
        if (*coeffs) return cmd_coeffs(j_max, b, delta, jump_point, coeff_config, json_path);
        if (*metric) return cmd_metric(metric_args, mu_path, nu_path, j_max, metric_b);
        if (*simulate) return cmd_simulate(sim_args, control_index);
        if (*picard) return cmd_picard(picard_args);
        if (*value) return cmd_value(value_args);
        if (*dpp) return cmd_dpp(dpp_args);
        if (*check) return cmd_check(check_args);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
