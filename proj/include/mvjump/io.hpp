#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mvjump/closure.hpp"
#include "mvjump/coefficients.hpp"
#include "mvjump/control.hpp"
#include "mvjump/dynamics.hpp"
#include "mvjump/error.hpp"
#include "mvjump/expression.hpp"
#include "mvjump/jump_law.hpp"
#include "mvjump/measures.hpp"
#include "mvjump/symbolic.hpp"

namespace mvjump::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Symbolic objects
// ---------------------------------------------------------------------------

// {"terms": {"<degree>": "<coefficient>"}, "text": ..., "pretty": ...}
// Coefficients are polynomials in m1..mD with rationals written p/q.
inline json to_json(const Polynomial& p) {
    json terms = json::object();
    for (const auto& [d, c] : p.terms()) terms[std::to_string(d)] = c.to_string(Notation::ascii);
    return {{"terms", terms}, {"text", p.to_string(Notation::ascii)}, {"pretty", p.to_string(Notation::pretty)}};
}

inline Polynomial polynomial_from_json(const json& j) {
    Polynomial out;
    for (const auto& [key, val] : j.at("terms").items()) {
        Polynomial c = parse_polynomial(val.get<std::string>());
        if (c.degree() > 0) throw ParseError(0, "term coefficient '" + val.get<std::string>() + "' depends on x");
        out += Polynomial::monomial(static_cast<unsigned>(std::stoul(key)), c.coefficient(0));
    }
    return out;
}

inline json to_json(const ClosureSet& s) {
    json el = json::array();
    for (const auto& p : s.elements()) el.push_back(to_json(p));
    return {{"generator", to_json(s.generator())}, {"size", s.size()}, {"elements", el}};
}

inline ClosureSet closure_from_json(const json& j) {
    std::vector<Polynomial> el;
    for (const auto& e : j.at("elements")) el.push_back(polynomial_from_json(e));
    return ClosureSet(polynomial_from_json(j.at("generator")), std::move(el));
}

inline json to_json(const JumpLaw& g) {
    switch (g.kind()) {
        case JumpLaw::Kind::point_mass: return {{"kind", "point"}, {"value", g.points().front()}};
        case JumpLaw::Kind::discrete: return {{"kind", "discrete"}, {"points", g.points()}, {"probabilities", g.probabilities()}};
        case JumpLaw::Kind::gaussian: return {{"kind", "gaussian"}, {"mean", g.mean_parameter()}, {"sd", g.sd_parameter()}};
        default: return {{"kind", "density"}, {"pdf", g.label()}, {"lo", g.support_lo()}, {"hi", g.support_hi()}};
    }
}

// Accepts the forms written by to_json; a density's "pdf" is an expression in x.
inline JumpLaw jump_law_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "point") return JumpLaw::point_mass(j.at("value").get<double>());
    if (kind == "discrete")
        return JumpLaw::discrete(j.at("points").get<std::vector<double>>(), j.at("probabilities").get<std::vector<double>>());
    if (kind == "gaussian") return JumpLaw::gaussian(j.at("mean").get<double>(), j.at("sd").get<double>());
    if (kind == "density") {
        const std::string src = j.at("pdf").get<std::string>();
        auto e = std::make_shared<Expression>(Expression::parse(src));
        for (const auto& v : e->variables())
            if (v != "x") throw DomainError("jump density may only use x, found '" + v + "'");
        return JumpLaw::density([e](double x) { return e->evaluate(Bindings{0.0, x, 0.0, 0.0, {}}); },
                                j.at("lo").get<double>(), j.at("hi").get<double>(), src);
    }
    throw DomainError("unknown jump law kind '" + kind + "'");
}

inline json to_json(const CoefficientTable& t) {
    json rows = json::array();
    for (std::size_t j = 0; j < t.size(); ++j) {
        rows.push_back({{"j", j + 1},
                        {"polynomial", to_json(t.basis[j])},
                        {"numeric", t.numeric[j].coefficients()},
                        {"sup_ratio", t.sup_ratio[j]},
                        {"s", t.s[j]},
                        {"c", t.c[j]},
                        {"deps", t.deps[j]}});
    }
    return {{"bound_b", t.bound_b}, {"delta", t.delta}, {"entries", rows}};
}

inline CoefficientTable table_from_json(const json& j) {
    CoefficientTable t;
    t.bound_b = j.at("bound_b").get<double>();
    t.delta = j.at("delta").get<double>();
    for (const auto& r : j.at("entries")) {
        t.basis.push_back(polynomial_from_json(r.at("polynomial")));
        t.numeric.emplace_back(r.at("numeric").get<std::vector<double>>());
        t.sup_ratio.push_back(r.at("sup_ratio").get<double>());
        t.s.push_back(r.at("s").get<double>());
        t.c.push_back(r.at("c").get<double>());
        t.deps.push_back(r.at("deps").get<std::vector<std::size_t>>());
    }
    return t;
}

// ---------------------------------------------------------------------------
// Measures and flows
// ---------------------------------------------------------------------------

inline json to_json(const MomentVector& m) {
    json j = {{"order", m.order()}, {"moments", m.raw()}};
    if (m.exp_moment()) j["exp_moment"] = *m.exp_moment();
    return j;
}

// Either a bare array of moments or the object written by to_json.
inline MomentVector moment_vector_from_json(const json& j) {
    if (j.is_array()) return MomentVector(j.get<std::vector<double>>());
    std::optional<double> em;
    if (j.contains("exp_moment")) em = j.at("exp_moment").get<double>();
    return MomentVector(j.at("moments").get<std::vector<double>>(), em);
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DomainError(where + ": '" + s + "' is not a number");
    }
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return in;
}

}  // namespace detail

// CSV "position,weight"; lines starting with '#' are comments.
inline void write_particles_csv(std::ostream& out, const ParticleMeasure& mu, std::optional<std::uint64_t> seed = {}) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    if (seed) out << "# seed=" << *seed << "\n";
    out << "position,weight\n";
    for (std::size_t i = 0; i < mu.size(); ++i) out << mu.points()[i] << "," << mu.weights()[i] << "\n";
}

inline void write_particles_csv(const std::string& path, const ParticleMeasure& mu, std::optional<std::uint64_t> seed = {}) {
    auto out = detail::open_out(path);
    write_particles_csv(out, mu, seed);
}

// Reads "position,weight" or a single "position" column (equal weights).
inline ParticleMeasure read_particles_csv(std::istream& in, const std::string& name = "particle csv") {
    std::string line;
    std::vector<double> pts, w;
    bool header = false, weighted = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cols = detail::split(line, ',');
        if (!header) {
            header = true;
            if (cols.empty() || cols[0] != "position") throw DomainError(name + ": expected header 'position[,weight]'");
            weighted = cols.size() > 1;
            continue;
        }
        std::string where = name + " line " + std::to_string(lineno);
        pts.push_back(detail::to_double(cols.at(0), where));
        if (weighted) w.push_back(detail::to_double(cols.at(1), where));
    }
    if (!weighted) return ParticleMeasure::uniform(std::move(pts));
    return ParticleMeasure(std::move(pts), std::move(w));
}

inline ParticleMeasure read_particles_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return read_particles_csv(in, path);
}

// CSV "time,moment_1,...,moment_D" followed, for particle flows, by
// "se_1,...,se_D" standard-error columns.
inline void write_flow_csv(std::ostream& out, const MeasureFlow& f, std::optional<std::uint64_t> seed = {}) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    if (seed) out << "# seed=" << *seed << "\n";
    const int D = f.order();
    const bool se = !f.std_errors.empty();
    out << "time";
    for (int k = 1; k <= D; ++k) out << ",moment_" << k;
    if (se)
        for (int k = 1; k <= D; ++k) out << ",se_" << k;
    out << "\n";
    for (std::size_t i = 0; i < f.times.size(); ++i) {
        out << f.times[i];
        for (double v : f.moments[i].raw()) out << "," << v;
        if (se)
            for (double v : f.std_errors[i]) out << "," << v;
        out << "\n";
    }
}

inline void write_flow_csv(const std::string& path, const MeasureFlow& f, std::optional<std::uint64_t> seed = {}) {
    auto out = detail::open_out(path);
    write_flow_csv(out, f, seed);
}

inline MeasureFlow read_flow_csv(std::istream& in, const std::string& name = "flow csv") {
    MeasureFlow f;
    std::string line;
    std::size_t D = 0, lineno = 0;
    bool se = false, header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cols = detail::split(line, ',');
        if (!header) {
            header = true;
            if (cols.empty() || cols[0] != "time") throw DomainError(name + ": expected header starting with 'time'");
            for (std::size_t c = 1; c < cols.size(); ++c) {
                if (cols[c].rfind("moment_", 0) == 0) ++D;
                else if (cols[c].rfind("se_", 0) == 0) se = true;
            }
            continue;
        }
        std::string where = name + " line " + std::to_string(lineno);
        if (cols.size() != 1 + D * (se ? 2 : 1)) throw DomainError(where + ": wrong number of columns");
        f.times.push_back(detail::to_double(cols[0], where));
        std::vector<double> m, s;
        for (std::size_t k = 0; k < D; ++k) m.push_back(detail::to_double(cols[1 + k], where));
        if (se)
            for (std::size_t k = 0; k < D; ++k) s.push_back(detail::to_double(cols[1 + D + k], where));
        f.moments.emplace_back(std::move(m));
        if (se) f.std_errors.push_back(std::move(s));
    }
    return f;
}

inline MeasureFlow read_flow_csv(const std::string& path) {
    auto in = detail::open_in(path);
    return read_flow_csv(in, path);
}

// ---------------------------------------------------------------------------
// Value results
// ---------------------------------------------------------------------------

inline json to_json(const Control& a) { return json::array({a.a1, a.a2}); }

inline Control control_from_json(const json& j) {
    if (j.is_number()) return Control{j.get<double>(), 0.0};
    if (j.is_array() && (j.size() == 1 || j.size() == 2))
        return Control{j.at(0).get<double>(), j.size() == 2 ? j.at(1).get<double>() : 0.0};
    throw DomainError("control must be a number or [a1, a2]");
}

inline json to_json(const ValueResult& r) {
    json ctrl = nullptr;
    if (r.control) {
        json vals = json::array();
        for (const auto& a : r.control->values()) vals.push_back(to_json(a));
        ctrl = {{"breakpoints", r.control->breakpoints()}, {"values", vals}, {"indices", r.control_indices}};
    }
    return {{"value", r.value},
            {"label", r.label},
            {"backend", to_string(r.backend)},
            {"seed", r.seed},
            {"t0", r.t0},
            {"horizon", r.horizon},
            {"candidates", r.candidates},
            {"control", ctrl},
            {"interval_costs", r.interval_costs},
            {"terminal_cost", r.terminal_cost}};
}

inline ValueResult value_result_from_json(const json& j) {
    ValueResult r;
    r.value = j.at("value").get<double>();
    r.label = j.at("label").get<std::string>();
    r.backend = parse_backend(j.at("backend").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.t0 = j.at("t0").get<double>();
    r.horizon = j.at("horizon").get<double>();
    r.candidates = j.at("candidates").get<std::size_t>();
    r.interval_costs = j.at("interval_costs").get<std::vector<double>>();
    r.terminal_cost = j.at("terminal_cost").get<double>();
    const json& c = j.at("control");
    if (!c.is_null()) {
        std::vector<Control> vals;
        for (const auto& v : c.at("values")) vals.push_back(control_from_json(v));
        r.control = ControlPath(c.at("breakpoints").get<std::vector<double>>(), std::move(vals));
        r.control_indices = c.at("indices").get<std::vector<std::size_t>>();
    }
    return r;
}

inline json read_json(const std::string& path) {
    auto in = detail::open_in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DomainError(path + ": invalid JSON (" + e.what() + ")");
    }
}

inline void write_json(const std::string& path, const json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace mvjump::io
