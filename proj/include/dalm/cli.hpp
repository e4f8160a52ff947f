#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dalm/calibration.hpp"
#include "dalm/cox_simulator.hpp"
#include "dalm/errors.hpp"
#include "dalm/fourier.hpp"
#include "dalm/io.hpp"
#include "dalm/term_model.hpp"

namespace dalm {

enum ExitCode : int { exit_ok = 0, exit_parse = 1, exit_infeasible = 2, exit_damping = 3 };

struct PriceRequest {
    std::string instrument; // cds | bond-option | vulnerable
    std::string method = "analytic";
    std::size_t i = 1;      // bond-option expiry index
    std::size_t k = 1;      // vulnerable-option expiry index
    std::size_t m = 2;      // maturity index
    double strike = 0.9;
    double recovery = 0.4;  // pi for cds and bond-option, q for vulnerable
    double coupon = 0.0;
};

namespace detail {

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw ParseError("cannot write " + out_path);
    f << text;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json price_parameters(const PriceRequest& r) {
    json p;
    if (r.instrument == "cds") {
        p = {{"m", r.m}, {"recovery", r.recovery}, {"coupon", r.coupon}};
    } else if (r.instrument == "bond-option") {
        p = {{"i", r.i}, {"m", r.m}, {"strike", r.strike}, {"recovery", r.recovery}};
    } else {
        p = {{"k", r.k}, {"m", r.m}, {"strike", r.strike}, {"recovery", r.recovery}};
    }
    return p;
}

inline json analytic_price(const CalibratedModel& model, const ModelConfig& cfg, const PriceRequest& r) {
    if (r.instrument == "cds") {
        double s = cds_spread(model, r.m, r.recovery, r.coupon);
        return {{"price", s},
                {"method", method_name(Method::closed_form)},
                {"quadrature_error", 0.0},
                {"model_independent", cds_spread_model_independent(model.curves(), r.m, r.recovery, r.coupon)}};
    }
    AnalyticPrice p;
    if (r.instrument == "bond-option")
        p = bond_option_price(model, r.i, r.m, r.strike, r.recovery, cfg.damping_2d, cfg.quadrature);
    else
        p = vulnerable_option_price(model, r.k, r.m, r.strike, r.recovery, cfg.damping_1d, cfg.quadrature);
    return {{"price", p.value}, {"method", method_name(Method::fourier)}, {"quadrature_error", p.quadrature_error}};
}

inline json mc_price(const CalibratedModel& model, const SimConfig& sim, const PriceRequest& r) {
    auto bundle = simulate(model, sim);
    PriceEstimate e;
    if (r.instrument == "cds") {
        if (r.m < 1 || r.m > model.size()) throw IndexError("cds: m must lie in 1..N");
        e = mc_price_cds(model, bundle, r.m, r.recovery, r.coupon).spread;
    } else if (r.instrument == "bond-option") {
        e = mc_price_bond_option(model, bundle, r.i, r.m, r.strike, r.recovery);
    } else {
        e = mc_price_vulnerable_option(model, bundle, r.k, r.m, r.strike, r.recovery);
    }
    return {{"price", e.value}, {"method", method_name(Method::monte_carlo)}, {"standard_error", e.standard_error},
            {"n_paths", sim.n_paths}, {"seed", sim.seed}};
}

} // namespace detail

inline std::string cmd_calibrate(const ModelConfig& cfg) {
    auto market = load_market(cfg);
    TenorGrid grid(market.dates);
    auto model = calibrate(cfg.driver, grid, market.curves, cfg.calibration);
    auto report = verify_conditions(model, condition_time_grid(grid));
    return detail::dump(model_to_json(model, report));
}

inline std::string cmd_price(const ModelConfig& cfg, const CalibratedModel& model, const PriceRequest& r) {
    json out;
    out["instrument"] = r.instrument;
    out["parameters"] = detail::price_parameters(r);
    if (r.method == "analytic") {
        json a = detail::analytic_price(model, cfg, r);
        out.update(a);
    } else if (r.method == "mc") {
        json b = detail::mc_price(model, cfg.simulation, r);
        out.update(b);
    } else {
        json a = detail::analytic_price(model, cfg, r);
        json b = detail::mc_price(model, cfg.simulation, r);
        double diff = b["price"].get<double>() - a["price"].get<double>();
        double se = b["standard_error"].get<double>();
        out["method"] = "both";
        out["analytic"] = a;
        out["mc"] = b;
        out["z_score"] = se > 0 ? diff / se : (diff == 0 ? 0.0 : std::copysign(INFINITY, diff));
        if (!std::isfinite(out["z_score"].get<double>())) out["z_score"] = nullptr;
    }
    return detail::dump(out);
}

// summary JSON; when dump is set also a per-path CSV
inline std::string cmd_simulate(const CalibratedModel& model, const SimConfig& sim, std::string* paths_csv = nullptr) {
    auto b = simulate(model, sim);
    const std::size_t n = model.size();
    json surv = json::array();
    std::vector<double> v(b.size());
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t p = 0; p < b.size(); ++p) v[p] = b.survived(p, k) ? 1.0 : 0.0;
        auto e = sample_mean(v);
        double model_p = terminal_survival_probability(model, k);
        surv.push_back({{"k", k},
                        {"tenor_date", model.grid().date(k)},
                        {"empirical", e.value},
                        {"standard_error", e.standard_error},
                        {"model", model_p}});
    }
    json mart = json::array();
    for (Family f : {Family::risk_free, Family::defaultable}) {
        for (std::size_t k = 1; k <= n; ++k) {
            double worst = 0.0;
            json means = json::array();
            for (std::size_t j = 0; j <= n; ++j) {
                double t = model.grid().date(j);
                double base = model.log_martingale(f, k, model.x0(), 0.0);
                for (std::size_t p = 0; p < b.size(); ++p)
                    v[p] = std::exp(model.log_martingale(f, k, b.state(p, j), t) - base);
                auto e = sample_mean(v);
                double z = e.standard_error > 0 ? (e.value - 1.0) / e.standard_error : 0.0;
                worst = std::max(worst, std::abs(z));
                means.push_back(e.value);
            }
            mart.push_back({{"family", f == Family::risk_free ? "u" : "v"},
                            {"k", k},
                            {"normalized_means", means},
                            {"max_abs_z", worst}});
        }
    }
    json out;
    out["n_paths"] = sim.n_paths;
    out["steps_per_period"] = sim.steps_per_period;
    out["seed"] = sim.seed;
    out["monotonicity_violations"] = b.monotonicity_violations();
    out["survival"] = surv;
    out["martingale"] = mart;

    if (paths_csv) {
        std::ostringstream os;
        os << "path_id,tenor_index";
        for (std::size_t i = 0; i < model.dim(); ++i) os << ",state_" << i;
        os << ",gamma,tau\n";
        for (std::size_t p = 0; p < b.size(); ++p) {
            for (std::size_t j = 0; j <= n; ++j) {
                os << p << ',' << j;
                for (double x : b.state(p, j)) os << ',' << format_double(x);
                os << ',' << format_double(b.hazard(p, j)) << ',' << format_double(b.tau(p)) << '\n';
            }
        }
        *paths_csv = os.str();
    }
    return detail::dump(out);
}

// model-implied term structures at t = 0, rows k = 1..N-1
inline std::string cmd_curves(const CalibratedModel& model) {
    std::ostringstream os;
    os << "tenor_date,L0,Lbar0,H0,S0,survival\n";
    auto x0 = model.x0();
    for (std::size_t k = 1; k + 1 <= model.size(); ++k) {
        os << format_double(model.grid().date(k)) << ',' << format_double(libor(model, x0, 0.0, k)) << ','
           << format_double(defaultable_libor(model, x0, 0.0, k)) << ','
           << format_double(default_intensity(model, x0, 0.0, k)) << ',' << format_double(spread(model, x0, 0.0, k))
           << ',' << format_double(model.curves().defaultable_bond(k) / model.curves().bond(k)) << '\n';
    }
    return os.str();
}

// Entry point shared by the dalm executable and the tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Defaultable affine LIBOR model: calibration, simulation and pricing"};
    app.require_subcommand(1);
    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "model config (JSON)")->required();
    app.add_option("--seed", seed, "override the simulation seed");
    app.add_option("--out", out_path, "output file (default: stdout; for calibrate: the config's model path)");

    auto* calib = app.add_subcommand("calibrate", "fit u, w, v to the curve file and write the model JSON");
    auto* price = app.add_subcommand("price", "price a CDS, bond option or vulnerable option");
    PriceRequest req;
    price->add_option("--instrument", req.instrument, "cds | bond-option | vulnerable")
        ->required()
        ->check(CLI::IsMember({"cds", "bond-option", "vulnerable"}));
    price->add_option("--method", req.method, "analytic | mc | both")
        ->check(CLI::IsMember({"analytic", "mc", "both"}));
    price->add_option("--i", req.i, "bond option expiry index");
    price->add_option("--k", req.k, "vulnerable option expiry index");
    price->add_option("--m", req.m, "maturity index");
    price->add_option("--strike", req.strike, "strike");
    price->add_option("--recovery", req.recovery, "recovery (pi, or q for vulnerable options)");
    price->add_option("--coupon", req.coupon, "CDS coupon");
    auto* sim = app.add_subcommand("simulate", "simulate paths and report survival and martingale diagnostics");
    std::string dump_paths;
    sim->add_option("--dump-paths", dump_paths, "write per-path CSV to this file");
    auto* curves = app.add_subcommand("curves", "model-implied rates at t = 0 as CSV");
    for (auto* sc : {calib, price, sim, curves}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return exit_ok;
        }
        err << "error: " << e.what() << "\n" << app.help();
        return exit_parse;
    }

    try {
        auto cfg = load_config(config_path);
        if (seed) cfg.simulation.seed = *seed;
        if (calib->parsed()) {
            std::string text = cmd_calibrate(cfg);
            std::string target = out_path.empty() ? cfg.resolve(cfg.model_file).string() : out_path;
            detail::emit(text, target, out);
            err << "model written to " << target << "\n";
            return exit_ok;
        }
        auto model = load_model(cfg.resolve(cfg.model_file));
        if (price->parsed()) {
            detail::emit(cmd_price(cfg, model, req), out_path, out);
        } else if (sim->parsed()) {
            std::string paths;
            std::string text = cmd_simulate(model, cfg.simulation, dump_paths.empty() ? nullptr : &paths);
            if (!dump_paths.empty()) detail::emit(paths, dump_paths, out);
            detail::emit(text, out_path, out);
        } else {
            detail::emit(cmd_curves(model), out_path, out);
        }
        return exit_ok;
    } catch (const DampingError& e) {
        err << "damping error: " << e.what() << "\n";
        return exit_damping;
    } catch (const CalibrationError& e) {
        err << "calibration infeasible: " << e.what() << " (attained " << e.attained() << ", target " << e.target()
            << ")\n";
        return exit_infeasible;
    } catch (const AssemblyError& e) {
        err << "calibration infeasible: " << e.what() << " (index " << e.index() << ")\n";
        return exit_infeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_parse;
    }
}

} // namespace dalm
