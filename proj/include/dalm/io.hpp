#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dalm/calibration.hpp"
#include "dalm/cox_simulator.hpp"
#include "dalm/errors.hpp"
#include "dalm/fourier.hpp"
#include "dalm/model.hpp"
#include "dalm/quadrature.hpp"

namespace dalm {

using json = nlohmann::ordered_json;

inline constexpr const char* model_format_tag = "dalm-model/1";
inline constexpr const char* curve_header = "tenor_date,riskfree_bond,defaultable_bond";

// 17 significant digits, as used in every CSV we write
inline std::string format_double(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct ModelConfig {
    std::filesystem::path base_dir; // directory of the config file; relative paths resolve against it
    ProductAffineSpec driver;
    std::vector<double> tenor_dates; // empty: take the dates from the curve file
    std::string curves_file;
    std::string model_file = "model.json";
    CalibrationOptions calibration;
    SimConfig simulation;
    DampingVector damping_1d = DampingVector::one_dim();
    DampingVector damping_2d = DampingVector::two_dim();
    QuadratureConfig quadrature;

    std::filesystem::path resolve(const std::string& p) const {
        std::filesystem::path q(p);
        return q.is_absolute() ? q : base_dir / q;
    }
};

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ParseError("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T get_req(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(where + ": field '" + key + "': " + e.what());
    }
}

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + " must be an object");
}

inline const char* scheme_name(Scheme s) { return s == Scheme::exact_cir ? "exact_cir" : "euler"; }
inline const char* interpolation_name(Interpolation i) {
    return i == Interpolation::piecewise_constant ? "piecewise_constant" : "linear";
}
inline const char* rule_name(QuadratureRule r) {
    return r == QuadratureRule::tanh_sinh ? "tanh_sinh" : "gauss_legendre";
}

} // namespace detail

inline json driver_to_json(const ProductAffineSpec& d) {
    json comps = json::array();
    for (const auto& c : d.components)
        comps.push_back({{"lambda", c.lambda}, {"theta", c.theta}, {"eta", c.eta}, {"ell", c.ell}, {"mu", c.mu},
                         {"x0", c.x0}});
    return {{"d1", d.d1}, {"d2", d.d2}, {"components", comps}};
}

inline ProductAffineSpec driver_from_json(const json& j) {
    detail::require_object(j, "driver");
    ProductAffineSpec d;
    d.d1 = detail::get_req<std::size_t>(j, "d1", "driver");
    d.d2 = detail::get_req<std::size_t>(j, "d2", "driver");
    const json& comps = j.contains("components") ? j.at("components") : json();
    if (!comps.is_array()) throw ParseError("driver: 'components' must be an array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const json& c = comps[i];
        std::string where = "driver component " + std::to_string(i);
        detail::require_object(c, where);
        AffineComponentSpec s;
        s.lambda = detail::get_req<double>(c, "lambda", where);
        s.theta = detail::get_req<double>(c, "theta", where);
        s.eta = detail::get_req<double>(c, "eta", where);
        s.ell = detail::get_or<double>(c, "ell", 0.0);
        s.mu = detail::get_or<double>(c, "mu", 0.0);
        s.x0 = detail::get_req<double>(c, "x0", where);
        d.components.push_back(s);
    }
    d.validate();
    return d;
}

inline ModelConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
    detail::require_object(j, "config");
    ModelConfig cfg;
    cfg.base_dir = base_dir;
    if (!j.contains("driver")) throw ParseError("config: missing 'driver' block");
    cfg.driver = driver_from_json(j.at("driver"));

    if (j.contains("tenor")) {
        const json& t = j.at("tenor");
        detail::require_object(t, "tenor");
        if (t.contains("dates")) {
            cfg.tenor_dates = detail::get_req<std::vector<double>>(t, "dates", "tenor");
        } else {
            auto n = detail::get_req<std::size_t>(t, "N", "tenor");
            auto delta = detail::get_req<double>(t, "delta", "tenor");
            cfg.tenor_dates = TenorGrid::uniform(n, delta).dates();
        }
        TenorGrid check(cfg.tenor_dates);
    }
    cfg.curves_file = detail::get_req<std::string>(j, "curves", "config");
    cfg.model_file = detail::get_or<std::string>(j, "model", cfg.model_file);

    if (j.contains("calibration")) {
        const json& c = j.at("calibration");
        detail::require_object(c, "calibration");
        auto& o = cfg.calibration;
        o.risk_free_direction = detail::get_or(c, "risk_free_direction", o.risk_free_direction);
        o.spread_direction = detail::get_or(c, "spread_direction", o.spread_direction);
        o.xi_tolerance = detail::get_or(c, "xi_tolerance", o.xi_tolerance);
        o.target_tolerance = detail::get_or(c, "target_tolerance", o.target_tolerance);
    }
    if (j.contains("simulation")) {
        const json& s = j.at("simulation");
        detail::require_object(s, "simulation");
        auto& o = cfg.simulation;
        o.n_paths = detail::get_or(s, "n_paths", o.n_paths);
        o.steps_per_period = detail::get_or(s, "steps_per_period", o.steps_per_period);
        o.seed = detail::get_or(s, "seed", o.seed);
        std::string scheme = detail::get_or<std::string>(s, "scheme", detail::scheme_name(o.scheme));
        if (scheme == "euler") o.scheme = Scheme::euler_full_truncation;
        else if (scheme == "exact_cir") o.scheme = Scheme::exact_cir;
        else throw ParseError("simulation: unknown scheme '" + scheme + "'");
        std::string interp = detail::get_or<std::string>(s, "interpolation", detail::interpolation_name(o.interpolation));
        if (interp == "linear") o.interpolation = Interpolation::linear;
        else if (interp == "piecewise_constant") o.interpolation = Interpolation::piecewise_constant;
        else throw ParseError("simulation: unknown interpolation '" + interp + "'");
        o.validate();
    }
    if (j.contains("pricing")) {
        const json& p = j.at("pricing");
        detail::require_object(p, "pricing");
        cfg.damping_1d.R = detail::get_or(p, "damping_1d", cfg.damping_1d.R);
        cfg.damping_2d.R = detail::get_or(p, "damping_2d", cfg.damping_2d.R);
        if (p.contains("quadrature")) {
            const json& q = p.at("quadrature");
            detail::require_object(q, "quadrature");
            auto& o = cfg.quadrature;
            std::string rule = detail::get_or<std::string>(q, "rule", detail::rule_name(o.rule));
            if (rule == "gauss_legendre") o.rule = QuadratureRule::gauss_legendre;
            else if (rule == "tanh_sinh") o.rule = QuadratureRule::tanh_sinh;
            else throw ParseError("quadrature: unknown rule '" + rule + "'");
            o.truncation = detail::get_or(q, "truncation", o.truncation);
            o.nodes = detail::get_or(q, "nodes", o.nodes);
            o.panel_width = detail::get_or(q, "panel_width", o.panel_width);
            o.tolerance = detail::get_or(q, "tolerance", o.tolerance);
            o.cone_margin = detail::get_or(q, "cone_margin", o.cone_margin);
            o.error_estimate = detail::get_or(q, "error_estimate", o.error_estimate);
            o.validate();
        }
    }
    return cfg;
}

inline json config_to_json(const ModelConfig& cfg) {
    json j;
    j["driver"] = driver_to_json(cfg.driver);
    if (!cfg.tenor_dates.empty()) j["tenor"] = {{"dates", cfg.tenor_dates}};
    j["curves"] = cfg.curves_file;
    j["model"] = cfg.model_file;
    j["calibration"] = {{"risk_free_direction", cfg.calibration.risk_free_direction},
                        {"spread_direction", cfg.calibration.spread_direction},
                        {"xi_tolerance", cfg.calibration.xi_tolerance},
                        {"target_tolerance", cfg.calibration.target_tolerance}};
    const auto& s = cfg.simulation;
    j["simulation"] = {{"n_paths", s.n_paths},
                       {"steps_per_period", s.steps_per_period},
                       {"seed", s.seed},
                       {"scheme", detail::scheme_name(s.scheme)},
                       {"interpolation", detail::interpolation_name(s.interpolation)}};
    const auto& q = cfg.quadrature;
    j["pricing"] = {{"damping_1d", cfg.damping_1d.R},
                    {"damping_2d", cfg.damping_2d.R},
                    {"quadrature",
                     {{"rule", detail::rule_name(q.rule)},
                      {"truncation", q.truncation},
                      {"nodes", q.nodes},
                      {"panel_width", q.panel_width},
                      {"tolerance", q.tolerance},
                      {"cone_margin", q.cone_margin},
                      {"error_estimate", q.error_estimate}}}};
    return j;
}

inline ModelConfig load_config(const std::filesystem::path& path) {
    json j = detail::parse_json_text(detail::read_text(path), "config " + path.string());
    return config_from_json(j, path.parent_path());
}

struct CurveFile {
    std::vector<double> dates;
    InitialCurves curves;
};

// CSV with header tenor_date,riskfree_bond,defaultable_bond; LF line endings; one row per T_k.
inline CurveFile parse_curve_csv(const std::string& text, const std::string& name = "curves") {
    if (text.find('\r') != std::string::npos) throw ParseError(name + ": CR line endings are not accepted (use LF)");
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        lines.push_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty() || lines[0] != curve_header)
        throw ParseError(name + ": line 1: header must be '" + std::string(curve_header) + "'");

    std::vector<double> dates, rf, df;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string at = name + ": line " + std::to_string(i + 1) + " (row " + std::to_string(i) + ")";
        const std::string& ln = lines[i];
        double v[3];
        std::size_t start = 0;
        for (int c = 0; c < 3; ++c) {
            std::size_t comma = ln.find(',', start);
            if ((c < 2) != (comma != std::string::npos)) throw ParseError(at + ": expected 3 comma-separated fields");
            std::string field = ln.substr(start, c < 2 ? comma - start : std::string::npos);
            char* end = nullptr;
            v[c] = std::strtod(field.c_str(), &end);
            if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v[c]))
                throw ParseError(at + ": not a number: '" + field + "'");
            start = comma + 1;
        }
        if (!dates.empty() && !(v[0] > dates.back()))
            throw ParseError(at + ": tenor dates must be strictly increasing");
        dates.push_back(v[0]);
        rf.push_back(v[1]);
        df.push_back(v[2]);
    }
    if (dates.empty()) throw ParseError(name + ": no data rows");
    try {
        TenorGrid check(dates);
        return {dates, InitialCurves(rf, df)};
    } catch (const ValidationError& e) {
        throw ParseError(name + ": " + e.what());
    }
}

inline CurveFile read_curve_csv(const std::filesystem::path& path) {
    return parse_curve_csv(detail::read_text(path), path.string());
}

inline std::string curve_csv(const std::vector<double>& dates, const InitialCurves& c) {
    std::string out = std::string(curve_header) + "\n";
    for (std::size_t k = 1; k <= c.size(); ++k)
        out += format_double(dates[k - 1]) + "," + format_double(c.bond(k)) + "," + format_double(c.defaultable_bond(k)) +
               "\n";
    return out;
}

// tenor grid and curves for a config: the curve file's dates must match the tenor block when both are given
inline CurveFile load_market(const ModelConfig& cfg) {
    auto file = read_curve_csv(cfg.resolve(cfg.curves_file));
    if (!cfg.tenor_dates.empty()) {
        if (cfg.tenor_dates.size() != file.dates.size())
            throw ParseError("curve file has " + std::to_string(file.dates.size()) + " rows but the tenor block has " +
                             std::to_string(cfg.tenor_dates.size()) + " dates");
        for (std::size_t k = 0; k < file.dates.size(); ++k)
            if (std::abs(file.dates[k] - cfg.tenor_dates[k]) > 1e-12 * (1 + cfg.tenor_dates[k]))
                throw ParseError("curve file row " + std::to_string(k + 1) + ": date differs from the tenor block");
        file.dates = cfg.tenor_dates;
    }
    return file;
}

inline json report_to_json(const ConditionReport& r) {
    return {{"c1", r.c1}, {"c2", r.c2}, {"c3", r.c3}, {"c4", r.c4}, {"violations", r.violations}};
}

inline json model_to_json(const CalibratedModel& m, const ConditionReport& report) {
    auto seq = [&](auto get) {
        json a = json::array();
        for (std::size_t k = 1; k <= m.size(); ++k) {
            auto s = get(k);
            a.push_back(std::vector<double>(s.begin(), s.end()));
        }
        return a;
    };
    json j;
    j["format"] = model_format_tag;
    j["driver"] = driver_to_json(m.driver());
    j["tenor"] = {{"dates", m.grid().dates()}};
    j["curves"] = {{"riskfree_bond", m.curves().risk_free()}, {"defaultable_bond", m.curves().defaultable()}};
    j["u"] = seq([&](std::size_t k) { return m.u(k); });
    j["w"] = seq([&](std::size_t k) { return m.w(k); });
    j["v"] = seq([&](std::size_t k) { return m.v(k); });
    j["conditions"] = report_to_json(report);
    return j;
}

inline CalibratedModel model_from_json(const json& j) {
    detail::require_object(j, "model");
    if (detail::get_or<std::string>(j, "format", "") != model_format_tag)
        throw ParseError(std::string("model: format tag must be '") + model_format_tag + "'");
    auto driver = driver_from_json(j.at("driver"));
    const json& tenor = j.contains("tenor") ? j.at("tenor") : json::object();
    TenorGrid grid(detail::get_req<std::vector<double>>(tenor, "dates", "model tenor"));
    const json& curves = j.contains("curves") ? j.at("curves") : json::object();
    InitialCurves c(detail::get_req<std::vector<double>>(curves, "riskfree_bond", "model curves"),
                    detail::get_req<std::vector<double>>(curves, "defaultable_bond", "model curves"));
    auto u = detail::get_req<std::vector<std::vector<double>>>(j, "u", "model");
    auto w = detail::get_req<std::vector<std::vector<double>>>(j, "w", "model");
    try {
        return assemble(driver, grid, c, std::move(u), std::move(w));
    } catch (const AssemblyError& e) {
        throw ParseError(std::string("model: inconsistent sequences: ") + e.what());
    }
}

inline CalibratedModel load_model(const std::filesystem::path& path) {
    return model_from_json(detail::parse_json_text(detail::read_text(path), "model " + path.string()));
}

// dates at which C4 is checked: every tenor date plus midpoints
inline std::vector<double> condition_time_grid(const TenorGrid& g) {
    std::vector<double> t{0.0};
    for (std::size_t k = 1; k <= g.size(); ++k) {
        t.push_back(0.5 * (g.date(k - 1) + g.date(k)));
        t.push_back(g.date(k));
    }
    return t;
}

} // namespace dalm
