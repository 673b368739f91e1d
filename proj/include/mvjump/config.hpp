#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvjump/control.hpp"
#include "mvjump/error.hpp"
#include "mvjump/expression.hpp"
#include "mvjump/io.hpp"
#include "mvjump/jump_law.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/model.hpp"

namespace mvjump {

// Everything a CLI run needs, validated.
struct RunConfig {
    std::string path;
    nlohmann::json raw;  // effective document after overrides

    ModelSpec model;

    double dt = 0.01;
    std::size_t particles = 10000;
    std::uint64_t seed = 1;
    int D = 4;
    double t0 = 0.0;
    double horizon = 1.0;
    ParticleMeasure initial = ParticleMeasure::dirac(0.0);

    std::size_t n_intervals = 1;
    Backend backend = Backend::moment;
    std::optional<double> theta;
    std::size_t budget = std::size_t{1} << 20;

    double picard_tol = 1e-12;
    std::size_t picard_max_iter = 50;
    std::size_t j_max = 20;

    std::string output_dir = "out";

    [[nodiscard]] SimParams sim() const { return {dt, particles, seed, D}; }
    [[nodiscard]] SearchOptions search() const { return {backend, sim(), budget}; }
};

// Command-line values that replace the corresponding config scalars.
struct ConfigOverrides {
    std::optional<double> dt, horizon, theta;
    std::optional<std::size_t> particles, n_intervals;
    std::optional<std::uint64_t> seed;
    std::optional<int> D;
    std::optional<std::string> backend, output_dir;
};

namespace detail {

// Collects every problem instead of stopping at the first.
class ConfigReader {
public:
    explicit ConfigReader(const nlohmann::json& root) : root_(root) {}

    std::vector<std::string> problems;

    [[nodiscard]] const nlohmann::json* find(const std::string& path) const {
        const nlohmann::json* node = &root_;
        std::size_t start = 0;
        while (start <= path.size()) {
            std::size_t dot = path.find('.', start);
            std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(key)) return nullptr;
            node = &(*node)[key];
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        return node;
    }

    std::optional<double> number(const std::string& path, bool required) {
        const auto* n = find(path);
        if (!n) {
            if (required) problems.push_back(path + ": required field is missing");
            return std::nullopt;
        }
        if (!n->is_number()) {
            problems.push_back(path + ": must be a number");
            return std::nullopt;
        }
        return n->get<double>();
    }

    std::optional<std::int64_t> integer(const std::string& path, bool required) {
        const auto* n = find(path);
        if (!n) {
            if (required) problems.push_back(path + ": required field is missing");
            return std::nullopt;
        }
        if (!n->is_number_integer()) {
            problems.push_back(path + ": must be an integer");
            return std::nullopt;
        }
        return n->get<std::int64_t>();
    }

    std::optional<std::string> string(const std::string& path, bool required) {
        const auto* n = find(path);
        if (!n) {
            if (required) problems.push_back(path + ": required field is missing");
            return std::nullopt;
        }
        if (!n->is_string()) {
            problems.push_back(path + ": must be a string");
            return std::nullopt;
        }
        return n->get<std::string>();
    }

    void require(bool ok, const std::string& message) {
        if (!ok) problems.push_back(message);
    }

private:
    const nlohmann::json& root_;
};

inline bool is_moment_variable(const std::string& v) {
    return v.size() > 1 && v[0] == 'm' && std::isdigit(static_cast<unsigned char>(v[1]));
}

inline std::shared_ptr<const Expression> parse_field(ConfigReader& r, const std::string& path, const std::string& src,
                                                     const std::set<std::string>& allowed, bool moments_allowed) {
    try {
        auto e = std::make_shared<const Expression>(Expression::parse(src));
        for (const auto& v : e->variables()) {
            bool ok = allowed.count(v) > 0 || (moments_allowed && is_moment_variable(v));
            if (!ok) r.problems.push_back(path + ": variable '" + v + "' is not allowed here");
        }
        return e;
    } catch (const ParseError& ex) {
        r.problems.push_back(path + ": " + ex.what());
        return nullptr;
    }
}

inline CoefficientFn coefficient_of(std::shared_ptr<const Expression> e) {
    return [e](double t, const MomentVector& m, const Control& a) {
        return e->evaluate(Bindings{t, 0.0, a.a1, a.a2, std::span<const double>(m.raw())});
    };
}

// model.name == "expr": coefficients and costs given as expressions.
inline ModelSpec expression_model(ConfigReader& r, std::vector<Control> controls, JumpLaw jump) {
    ModelSpec m;
    m.name = "expr";
    m.controls = std::move(controls);
    m.jump = std::move(jump);
    const std::set<std::string> coeff_vars{"t", "a1", "a2"};

    auto text = [&](const char* key, bool required) -> std::optional<std::string> {
        return r.string(std::string("model.expressions.") + key, required);
    };

    std::set<int> indices;
    auto coefficient = [&](const char* key) -> CoefficientFn {
        auto src = text(key, true);
        if (!src) return {};
        auto e = parse_field(r, std::string("model.expressions.") + key, *src, coeff_vars, true);
        if (!e) return {};
        for (const auto& v : e->variables())
            if (is_moment_variable(v)) indices.insert(std::stoi(v.substr(1)));
        return coefficient_of(e);
    };
    m.drift = coefficient("b");
    m.volatility = coefficient("sigma");
    m.intensity = coefficient("lambda");
    m.moment_indices.assign(indices.begin(), indices.end());

    if (auto src = text("L1", false)) {
        if (auto e = parse_field(r, "model.expressions.L1", *src, coeff_vars, true)) {
            m.running_base = coefficient_of(e);
            m.running_moment_order = e->max_moment_index();
        }
    }
    if (auto src = text("L2", false)) {
        if (auto e = parse_field(r, "model.expressions.L2", *src, {"a1", "a2"}, false))
            m.cost_weight = [e](const Control& a) { return e->evaluate(Bindings{0.0, 0.0, a.a1, a.a2, {}}); };
    } else {
        m.cost_weight = [](const Control&) { return 1.0; };
    }
    if (auto src = text("L3", false)) {
        if (auto e = parse_field(r, "model.expressions.L3", *src, {"x"}, false)) {
            std::optional<Polynomial> poly;
            try {
                poly = e->to_polynomial();
            } catch (const ParseError&) {
            }
            if (poly && poly->max_symbol() == 0)
                m.state_cost = StateCost::from_polynomial(poly->specialize({}));
            else
                m.state_cost = StateCost::from_function([e](double x) { return e->evaluate(Bindings{0.0, x, 0.0, 0.0, {}}); });
        }
    }
    if (auto src = text("G", false)) {
        if (auto e = parse_field(r, "model.expressions.G", *src, {}, true)) {
            m.terminal.moment_order = e->max_moment_index();
            m.terminal.of_moments = [e](const MomentVector& mv) {
                return e->evaluate(Bindings{0.0, 0.0, 0.0, 0.0, std::span<const double>(mv.raw())});
            };
        }
    } else {
        m.terminal = TerminalCost::zero();
    }

    auto c0 = r.number("model.C0", true);
    auto kappa0 = r.number("model.kappa0", false);
    auto delta = r.number("model.delta", true);
    if (c0) r.require(*c0 > 0.0, "model.C0: must be positive");
    if (delta) r.require(*delta > 0.0, "model.delta: must be positive");
    m.c0 = c0.value_or(1.0);
    m.kappa0 = kappa0.value_or(0.0);
    m.delta = delta.value_or(1.0);
    return m;
}

inline double param(ConfigReader& r, const std::string& name, double fallback) {
    return r.number("model.params." + name, false).value_or(fallback);
}

inline ModelSpec build_model(ConfigReader& r, std::vector<Control> controls) {
    auto name = r.string("model.name", true);
    JumpLaw jump = JumpLaw::point_mass(0.0);
    bool has_jump = false;
    if (const auto* j = r.find("model.jump")) {
        try {
            jump = io::jump_law_from_json(*j);
            has_jump = true;
        } catch (const std::exception& e) {
            r.problems.push_back(std::string("model.jump: ") + e.what());
        }
    }
    if (!name) return drift_only_model();

    try {
        if (*name == "expr") {
            const auto* ex = r.find("model.expressions");
            if (!ex || !ex->is_object()) {
                r.problems.push_back("model.expressions: required for model 'expr'");
                return drift_only_model();
            }
            return expression_model(r, std::move(controls), jump);
        }
        if (*name == "drift_only") {
            std::vector<double> grid;
            for (const auto& c : controls) grid.push_back(c.a1);
            if (grid.empty()) grid = {-1.0, 0.0, 1.0};
            return drift_only_model(grid);
        }
        if (*name == "constant") {
            return constant_model(param(r, "b0", 0.0), param(r, "sigma", 0.0), param(r, "lambda", 0.0),
                                  has_jump ? jump : JumpLaw::point_mass(0.0), param(r, "delta", 1.0));
        }
        if (*name == "coupled") {
            CoupledParams p;
            p.beta = param(r, "beta", p.beta);
            p.b0 = param(r, "b0", p.b0);
            p.sigma = param(r, "sigma", p.sigma);
            p.lambda0 = param(r, "lambda0", p.lambda0);
            p.delta = param(r, "delta", p.delta);
            if (has_jump) p.jump = jump;
            ModelSpec m = coupled_model(p);
            if (!controls.empty()) {
                double amax = 0.0;
                for (const auto& c : controls) amax = std::max(amax, std::fabs(c.a1));
                m.controls = std::move(controls);
                m.c0 += amax;
            }
            return m;
        }
        if (*name == "innovation") {
            InnovationParams p;
            p.b_max = param(r, "b_max", p.b_max);
            p.lambda_max = param(r, "lambda_max", p.lambda_max);
            p.sigma = param(r, "sigma", p.sigma);
            p.delta = param(r, "delta", p.delta);
            p.x_cap = param(r, "x_cap", p.x_cap);
            if (has_jump) p.jump = jump;
            if (!controls.empty()) p.controls = std::move(controls);
            return innovation_model(p);
        }
        r.problems.push_back("model.name: unknown model '" + *name +
                             "' (expected expr, drift_only, constant, coupled or innovation)");
    } catch (const DomainError& e) {
        r.problems.push_back("model: " + std::string(e.what()));
    }
    return drift_only_model();
}

inline void apply_overrides(nlohmann::json& doc, const ConfigOverrides& o) {
    auto set = [&](const char* section, const char* key, const nlohmann::json& v) {
        if (!doc.contains(section) || !doc[section].is_object()) doc[section] = nlohmann::json::object();
        doc[section][key] = v;
    };
    if (o.dt) set("simulation", "dt", *o.dt);
    if (o.horizon) set("simulation", "horizon", *o.horizon);
    if (o.particles) set("simulation", "particles", *o.particles);
    if (o.seed) set("simulation", "seed", *o.seed);
    if (o.D) set("simulation", "D", *o.D);
    if (o.n_intervals) set("control", "n_intervals", *o.n_intervals);
    if (o.backend) set("control", "backend", *o.backend);
    if (o.theta) set("control", "theta", *o.theta);
    if (o.output_dir) set("output", "dir", *o.output_dir);
}

}  // namespace detail

// Validates the whole document and throws ConfigError listing every problem.
// Relative CSV paths resolve against `base_dir`.
inline RunConfig parse_config(nlohmann::json doc, const ConfigOverrides& overrides = {},
                              const std::filesystem::path& base_dir = ".") {
    if (!doc.is_object()) throw ConfigError({"config: top level must be a JSON object"});
    detail::apply_overrides(doc, overrides);
    detail::ConfigReader r(doc);
    RunConfig cfg;
    cfg.raw = doc;

    for (const char* section : {"model", "simulation"})
        if (!doc.contains(section)) r.problems.push_back(std::string(section) + ": required section is missing");

    // control grid first: built-in models take it as their A_grid
    std::vector<Control> controls;
    if (const auto* g = r.find("control.A_grid")) {
        if (!g->is_array() || g->empty()) {
            r.problems.push_back("control.A_grid: must be a non-empty list");
        } else {
            for (std::size_t i = 0; i < g->size(); ++i) {
                try {
                    controls.push_back(io::control_from_json((*g)[i]));
                } catch (const std::exception&) {
                    r.problems.push_back("control.A_grid[" + std::to_string(i) + "]: must be a number or [a1, a2]");
                }
            }
        }
    } else if (r.string("model.name", false).value_or("") == "expr") {
        r.problems.push_back("control.A_grid: required for model 'expr'");
    }

    if (doc.contains("model")) cfg.model = detail::build_model(r, controls);

    if (auto v = r.number("simulation.dt", true)) {
        r.require(*v > 0.0, "simulation.dt: must be positive");
        cfg.dt = *v;
    }
    if (auto v = r.integer("simulation.particles", true)) {
        r.require(*v >= 1, "simulation.particles: must be at least 1");
        cfg.particles = static_cast<std::size_t>(std::max<std::int64_t>(*v, 1));
    }
    if (auto v = r.integer("simulation.seed", true)) {
        r.require(*v >= 0, "simulation.seed: must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(*v);
    }
    if (auto v = r.integer("simulation.D", true)) {
        int dep = cfg.model.dependence_order();
        r.require(*v >= 1, "simulation.D: must be at least 1");
        r.require(*v >= dep, "simulation.D: must be at least max(I) = " + std::to_string(dep));
        cfg.D = static_cast<int>(*v);
    }
    cfg.t0 = r.number("simulation.t0", false).value_or(0.0);
    if (auto v = r.number("simulation.horizon", true)) {
        r.require(*v > cfg.t0, "simulation.horizon: must exceed simulation.t0");
        cfg.horizon = *v;
    }

    if (const auto* init = r.find("simulation.initial")) {
        try {
            if (init->contains("csv")) {
                std::filesystem::path p = (*init)["csv"].get<std::string>();
                if (p.is_relative()) p = base_dir / p;
                cfg.initial = io::read_particles_csv(p.string());
            } else {
                auto pts = init->at("points").get<std::vector<double>>();
                if (init->contains("weights"))
                    cfg.initial = ParticleMeasure(pts, (*init)["weights"].get<std::vector<double>>());
                else
                    cfg.initial = ParticleMeasure::uniform(pts);
            }
        } catch (const std::exception& e) {
            r.problems.push_back(std::string("simulation.initial: ") + e.what());
        }
    } else {
        r.problems.push_back("simulation.initial: required field is missing");
    }

    if (auto v = r.integer("control.n_intervals", false)) {
        r.require(*v >= 0, "control.n_intervals: must be non-negative");
        cfg.n_intervals = static_cast<std::size_t>(std::max<std::int64_t>(*v, 0));
    }
    if (auto v = r.string("control.backend", false)) {
        try {
            cfg.backend = parse_backend(*v);
        } catch (const DomainError& e) {
            r.problems.push_back(std::string("control.backend: ") + e.what());
        }
    }
    cfg.theta = r.number("control.theta", false);
    if (auto v = r.integer("control.budget", false)) {
        r.require(*v >= 1, "control.budget: must be at least 1");
        cfg.budget = static_cast<std::size_t>(std::max<std::int64_t>(*v, 1));
    }

    if (auto v = r.number("picard.tol", false)) {
        r.require(*v > 0.0, "picard.tol: must be positive");
        cfg.picard_tol = *v;
    }
    if (auto v = r.integer("picard.max_iter", false)) {
        r.require(*v >= 1, "picard.max_iter: must be at least 1");
        cfg.picard_max_iter = static_cast<std::size_t>(std::max<std::int64_t>(*v, 1));
    }
    if (auto v = r.integer("picard.j_max", false)) {
        r.require(*v >= 1, "picard.j_max: must be at least 1");
        cfg.j_max = static_cast<std::size_t>(std::max<std::int64_t>(*v, 1));
    }

    if (auto v = r.string("output.dir", false)) {
        std::filesystem::path p = *v;
        cfg.output_dir = (p.is_relative() ? base_dir / p : p).string();
    } else {
        cfg.output_dir = (base_dir / "out").string();
    }

    if (!r.problems.empty()) throw ConfigError(r.problems);
    return cfg;
}

inline RunConfig load_config(const std::string& path, const ConfigOverrides& overrides = {}) {
    nlohmann::json doc;
    try {
        doc = io::read_json(path);
    } catch (const Error& e) {
        throw ConfigError({std::string("config: ") + e.what()});
    }
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    RunConfig cfg = parse_config(std::move(doc), overrides, base.empty() ? "." : base);
    cfg.path = path;
    return cfg;
}

}  // namespace mvjump
