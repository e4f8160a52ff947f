#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dalm/affine.hpp"
#include "dalm/errors.hpp"
#include "dalm/model.hpp"

namespace dalm {

struct CalibrationOptions {
    std::vector<double> risk_free_direction; // length d1, empty means all ones
    std::vector<double> spread_direction;    // length d2, empty means all ones
    double xi_tolerance = 0.0; // 0: bisect to full double resolution
    double target_tolerance = 1e-10;
    double cap_fraction = 0.95;
};

namespace detail {

// embeds a block direction into R^d
inline std::vector<double> embed_direction(const ProductAffineSpec& driver, std::span<const double> dir,
                                           bool spread_block) {
    const std::size_t len = spread_block ? driver.d2 : driver.d1;
    const std::size_t off = spread_block ? driver.d1 : 0;
    std::vector<double> full(driver.dim(), 0.0);
    if (dir.empty()) {
        for (std::size_t i = 0; i < len; ++i) full[off + i] = 1.0;
        return full;
    }
    if (dir.size() != len) throw ParameterError("calibration direction has wrong length");
    bool any = false;
    for (std::size_t i = 0; i < len; ++i) {
        if (!(dir[i] >= 0) || !std::isfinite(dir[i])) throw ParameterError("calibration direction must be >= 0");
        any = any || dir[i] > 0;
        full[off + i] = dir[i];
    }
    if (!any) throw ParameterError("calibration direction is zero");
    return full;
}

// f(xi) = log M_0^{xi * dir} at horizon T_N
class RayMoment {
public:
    RayMoment(const ProductAffineSpec& driver, double horizon, std::vector<double> dir)
        : at_(driver, horizon), dir_(std::move(dir)), x0_(driver.x0()), u_(dir_.size()) {
        xi_max_ = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < dir_.size(); ++i)
            if (dir_[i] > 0) xi_max_ = std::min(xi_max_, at_.component(i).bound() / dir_[i]);
    }

    double xi_max() const { return xi_max_; }

    double operator()(double xi) const {
        for (std::size_t i = 0; i < dir_.size(); ++i) u_[i] = xi * dir_[i];
        return at_.log_mgf<double>(u_, x0_);
    }

    std::vector<double> point(double xi) const {
        std::vector<double> u(dir_.size());
        for (std::size_t i = 0; i < dir_.size(); ++i) u[i] = xi * dir_[i];
        return u;
    }

private:
    ProductAtHorizon at_;
    std::vector<double> dir_, x0_;
    mutable std::vector<double> u_;
    double xi_max_;
};

// root of f(xi) = log_target on [lo, hi] with f increasing
inline double bisect(const RayMoment& f, double log_target, double lo, double hi, const CalibrationOptions& opt) {
    for (int it = 0; it < 400; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double r = f(mid) - log_target;
        if (r < 0) lo = mid;
        else hi = mid;
        if (hi - lo <= opt.xi_tolerance * std::max(1.0, std::abs(hi)) && std::abs(r) <= 0.1 * opt.target_tolerance)
            break;
    }
    double rl = std::abs(f(lo) - log_target), rh = std::abs(f(hi) - log_target);
    double xi = rl <= rh ? lo : hi;
    double res = std::abs(std::expm1(f(xi) - log_target));
    if (!(res <= opt.target_tolerance)) {
        std::ostringstream os;
        os << "calibration: bisection residual " << res << " above tolerance";
        throw NumericalError(os.str());
    }
    return xi;
}

inline void assert_monotone(const RayMoment& f, double a, double b) {
    const int n = 32;
    double prev = f(a);
    for (int j = 1; j <= n; ++j) {
        double x = a + (b - a) * j / n;
        double cur = f(x);
        if (cur < prev - 1e-14 * (1 + std::abs(prev)))
            throw NumericalError("calibration: moment along the direction is not monotone on the bracket");
        prev = cur;
    }
    if (!(f(b) > f(a))) throw NumericalError("calibration: moment is flat along the direction");
}

} // namespace detail

// Risk-free sequence u_1 >= ... >= u_N = 0 (each a vector in R^d, zero spread block).
inline std::vector<std::vector<double>> fit_risk_free(const ProductAffineSpec& driver, const TenorGrid& grid,
                                                      const InitialCurves& curves,
                                                      std::span<const double> direction = {},
                                                      const CalibrationOptions& opt = {}) {
    driver.validate();
    const std::size_t n = grid.size();
    if (curves.size() != n) throw ValidationError("curves and tenor grid differ in length");
    detail::RayMoment f(driver, grid.horizon(), detail::embed_direction(driver, direction, false));

    std::vector<double> log_target(n + 1);
    for (std::size_t k = 1; k <= n; ++k) log_target[k] = std::log(curves.bond(k) / curves.bond(n));
    double top = log_target[1];
    for (std::size_t k = 1; k <= n; ++k) top = std::max(top, log_target[k]);

    std::vector<std::vector<double>> u(n, std::vector<double>(driver.dim(), 0.0));
    if (!(top > 0)) return u;

    double cap = opt.cap_fraction * f.xi_max();
    double hi = std::min(1.0, cap);
    for (int it = 0;; ++it) {
        double v = f(hi);
        if (v >= top) break;
        if (hi >= cap || it > 2000 || !std::isfinite(hi) || hi > 1e300) {
            std::ostringstream os;
            os << "fit_risk_free: target B(0,T_1)/B(0,T_N) = " << std::exp(top)
               << " exceeds the reachable moment " << std::exp(v) << " along the direction";
            throw CalibrationError(os.str(), std::exp(v), std::exp(top));
        }
        hi = std::min(2.0 * hi, cap);
    }
    detail::assert_monotone(f, 0.0, hi);

    double prev = hi;
    for (std::size_t k = 1; k <= n; ++k) {
        double xi = 0.0;
        if (log_target[k] > 0) xi = detail::bisect(f, log_target[k], 0.0, hi, opt);
        xi = std::min(xi, prev); // keep the sequence ordered when neighbouring targets coincide
        prev = xi;
        u[k - 1] = f.point(xi);
    }
    u[n - 1].assign(driver.dim(), 0.0);
    return u;
}

// Spread sequence 0 >= w_1 >= ... >= w_N (each a vector in R^{d2}).
inline std::vector<std::vector<double>> fit_spread(const ProductAffineSpec& driver, const TenorGrid& grid,
                                                   const InitialCurves& curves,
                                                   std::span<const double> direction = {},
                                                   const CalibrationOptions& opt = {}) {
    driver.validate();
    const std::size_t n = grid.size();
    if (curves.size() != n) throw ValidationError("curves and tenor grid differ in length");
    auto full = detail::embed_direction(driver, direction, true);
    detail::RayMoment f(driver, grid.horizon(), full);

    std::vector<double> log_target(n + 1);
    double bottom = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double r = curves.defaultable_bond(k) / curves.bond(k);
        if (r > 1.0 + 1e-13) throw ValidationError("fit_spread: survival ratio above 1 at k=" + std::to_string(k));
        log_target[k] = std::min(0.0, std::log(r));
        bottom = std::min(bottom, log_target[k]);
    }

    std::vector<std::vector<double>> w(n, std::vector<double>(driver.d2, 0.0));
    if (!(bottom < 0)) return w;

    double lo = -1.0;
    for (int it = 0;; ++it) {
        double v = f(lo);
        if (v <= bottom) break;
        if (it > 60) {
            std::ostringstream os;
            os << "fit_spread: survival ratio " << std::exp(bottom) << " is below the infimum "
               << std::exp(v) << " of the moment on the negative ray";
            throw CalibrationError(os.str(), std::exp(v), std::exp(bottom));
        }
        lo *= 2.0;
    }
    detail::assert_monotone(f, lo, 0.0);

    double prev = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double xi = 0.0;
        if (log_target[k] < 0) xi = detail::bisect(f, log_target[k], lo, 0.0, opt);
        xi = std::min(xi, prev);
        prev = xi;
        for (std::size_t j = 0; j < driver.d2; ++j) w[k - 1][j] = xi * full[driver.d1 + j];
    }
    return w;
}

inline CalibratedModel assemble(const ProductAffineSpec& driver, const TenorGrid& grid, const InitialCurves& curves,
                                std::vector<std::vector<double>> u, std::vector<std::vector<double>> w,
                                double tolerance = 1e-10) {
    const std::size_t n = grid.size();
    for (std::size_t k = 0; k < std::min(n, u.size()); ++k)
        for (std::size_t j = driver.d1; j < u[k].size(); ++j)
            if (u[k][j] != 0.0) throw AssemblyError("u_k has a nonzero spread block", k + 1);
    CalibratedModel m(driver, grid, curves, std::move(u), std::move(w));

    const std::size_t d = m.dim();
    for (std::size_t k = 1; k <= n; ++k) {
        auto uk = m.u(k), vk = m.v(k);
        for (std::size_t j = 0; j < d; ++j) {
            if (vk[j] > uk[j]) throw AssemblyError("v_k exceeds u_k componentwise", k);
            if (k < n && (m.u(k + 1)[j] > uk[j])) throw AssemblyError("u_k is not decreasing", k);
            if (k < n && (m.v(k + 1)[j] > vk[j])) throw AssemblyError("v_k is not decreasing", k);
        }
        for (double x : m.w(k))
            if (x > 0) throw AssemblyError("w_k is positive", k);
        if (k == n)
            for (double x : uk)
                if (x != 0.0) throw AssemblyError("u_N is not zero", k);

        auto x0 = m.x0();
        double bn = curves.bond(n);
        double mu = std::exp(m.log_martingale(Family::risk_free, k, x0, 0.0));
        double mv = std::exp(m.log_martingale(Family::defaultable, k, x0, 0.0));
        double tu = curves.bond(k) / bn, tv = curves.defaultable_bond(k) / bn;
        if (std::abs(mu / tu - 1) > tolerance)
            throw AssemblyError("M_0^{u_k} does not reproduce B(0,T_k)/B(0,T_N)", k);
        if (std::abs(mv / tv - 1) > tolerance)
            throw AssemblyError("M_0^{v_k} does not reproduce Bbar(0,T_k)/B(0,T_N)", k);
    }
    return m;
}

inline CalibratedModel calibrate(const ProductAffineSpec& driver, const TenorGrid& grid, const InitialCurves& curves,
                                 const CalibrationOptions& opt = {}) {
    auto u = fit_risk_free(driver, grid, curves, opt.risk_free_direction, opt);
    auto w = fit_spread(driver, grid, curves, opt.spread_direction, opt);
    return assemble(driver, grid, curves, std::move(u), std::move(w));
}

struct ConditionReport {
    bool c1 = true; // u_k decreasing, u_N = 0
    bool c2 = true; // v_k decreasing
    bool c3 = true; // u_k >= v_k
    bool c4 = true; // phi/psi differences nonincreasing in k
    std::vector<std::string> violations;

    bool all() const { return c1 && c2 && c3 && c4; }
};

inline ConditionReport verify_conditions(const CalibratedModel& m, std::span<const double> time_grid) {
    ConditionReport r;
    const std::size_t n = m.size(), d = m.dim();
    auto fail = [&](bool& flag, const std::string& msg) {
        flag = false;
        r.violations.push_back(msg);
    };
    for (std::size_t k = 1; k <= n; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            if (k < n && m.u(k + 1)[j] > m.u(k)[j]) fail(r.c1, "C1: u not decreasing at k=" + std::to_string(k));
            if (k < n && m.v(k + 1)[j] > m.v(k)[j]) fail(r.c2, "C2: v not decreasing at k=" + std::to_string(k));
            if (m.v(k)[j] > m.u(k)[j]) fail(r.c3, "C3: v exceeds u at k=" + std::to_string(k));
        }
    }
    for (double x : m.u(n))
        if (x != 0.0) fail(r.c1, "C1: u_N is not zero");

    for (double t : time_grid) {
        if (!(t >= 0 && t <= m.grid().horizon())) continue;
        ProductAtHorizon at(m.driver(), t);
        double prev_phi = 0;
        std::vector<double> prev_psi;
        for (std::size_t k = 1; k <= n; ++k) {
            ExponentPair eu, ev;
            try {
                eu = at.eval(m.u(k));
                ev = at.eval(m.v(k));
            } catch (const DomainError& e) {
                fail(r.c4, std::string("C4: exponent domain violated: ") + e.what());
                break;
            }
            double dphi = ev.phi - eu.phi;
            std::vector<double> dpsi(d);
            for (std::size_t j = 0; j < d; ++j) dpsi[j] = ev.psi[j] - eu.psi[j];
            if (k > 1) {
                auto tol = [](double a) { return 1e-12 * (1 + std::abs(a)); };
                if (dphi > prev_phi + tol(prev_phi))
                    fail(r.c4, "C4: phi difference increases at k=" + std::to_string(k) + ", t=" + std::to_string(t));
                for (std::size_t j = 0; j < d; ++j)
                    if (dpsi[j] > prev_psi[j] + tol(prev_psi[j]))
                        fail(r.c4, "C4: psi difference increases at k=" + std::to_string(k) +
                                       ", t=" + std::to_string(t));
            }
            prev_phi = dphi;
            prev_psi = dpsi;
        }
    }
    return r;
}

// Curves implied by a model: B(0,T_k) = B(0,T_N) M_0^{u_k}, Bbar(0,T_k) = B(0,T_N) M_0^{v_k}.
inline InitialCurves implied_curves(const CalibratedModel& m) {
    const std::size_t n = m.size();
    const double bn = m.curves().bond(n);
    std::vector<double> rf(n), df(n);
    for (std::size_t k = 1; k <= n; ++k) {
        rf[k - 1] = bn * std::exp(m.log_martingale(Family::risk_free, k, m.x0(), 0.0));
        df[k - 1] = bn * std::exp(m.log_martingale(Family::defaultable, k, m.x0(), 0.0));
    }
    return InitialCurves(std::move(rf), std::move(df));
}

} // namespace dalm
