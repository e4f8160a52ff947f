#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "dalm/errors.hpp"
#include "dalm/model.hpp"
#include "dalm/quadrature.hpp"
#include "dalm/special_functions.hpp"
#include "dalm/term_model.hpp"

namespace dalm {

// Damping: 1-D (call transform) needs R > 1; 2-D (put transform on the sum
// of two exponentials) needs R1 < 0 and R2 < 0.
struct DampingVector {
    std::vector<double> R;

    static DampingVector one_dim(double r = 1.5) { return {{r}}; }
    static DampingVector two_dim(double r1 = -0.5, double r2 = -0.5) { return {{r1, r2}}; }
};

struct AnalyticPrice {
    double value = 0.0;
    double quadrature_error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

inline std::string fmt_vec(const std::vector<double>& v) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
    os << ")";
    return os.str();
}

// exp(z (c + <beta, X_t>)) under a forward measure, as a function of complex z
class LinearMgf {
public:
    LinearMgf(const CalibratedModel& m, Measure measure, std::size_t k, double t, std::vector<std::vector<double>> betas,
              std::vector<double> consts)
        : mgf_(m, measure, k, t), betas_(std::move(betas)), consts_(std::move(consts)) {}

    std::size_t size() const { return consts_.size(); }

    bool feasible(std::span<const double> re_z) const {
        std::vector<double> arg(mgf_.dim(), 0.0);
        for (std::size_t j = 0; j < size(); ++j)
            for (std::size_t i = 0; i < arg.size(); ++i) arg[i] += re_z[j] * betas_[j][i];
        return mgf_.feasible(arg);
    }

    template <class T>
    T log_mgf(std::span<const T> z) const {
        T acc(mgf_.offset());
        for (std::size_t j = 0; j < size(); ++j) acc += z[j] * consts_[j];
        for (std::size_t i = 0; i < mgf_.dim(); ++i) {
            T a(0.0);
            for (std::size_t j = 0; j < size(); ++j) a += z[j] * betas_[j][i];
            acc += mgf_.term(i, a);
        }
        return acc;
    }

    // gradient of the real log-MGF at a real point (tilted mean)
    std::vector<double> mean(std::span<const double> r) const {
        std::vector<double> g(size()), p(r.begin(), r.end());
        for (std::size_t j = 0; j < size(); ++j) {
            double h = 1e-5 * std::max(1.0, std::abs(r[j]));
            p[j] = r[j] + h;
            double up = log_mgf<double>(p);
            p[j] = r[j] - h;
            double dn = log_mgf<double>(p);
            p[j] = r[j];
            g[j] = (up - dn) / (2.0 * h);
        }
        return g;
    }

private:
    MeasureMgf mgf_;
    std::vector<std::vector<double>> betas_;
    std::vector<double> consts_;
};

// largest t in (0, 1] such that t * dir is feasible, by bisection
template <class Feasible>
double feasible_scale(Feasible&& ok, std::span<const double> dir) {
    std::vector<double> p(dir.size());
    auto at = [&](double t) {
        for (std::size_t i = 0; i < dir.size(); ++i) p[i] = t * dir[i];
        return ok(p);
    };
    if (at(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (at(mid) ? lo : hi) = mid;
    }
    return lo;
}

inline void check_strike(double K) {
    if (!(K >= 0) || !std::isfinite(K)) throw ParameterError("strike must be finite and >= 0");
}

// (1/2pi) int ghat(iR - v) M(R + iv) dv with ghat(z) = K^{1+iz}/(iz(1+iz)): E[(e^Z - K)^+]
inline QuadratureResult call_integral(const LinearMgf& mgf, double K, double R, const QuadratureConfig& quad,
                                      double reference) {
    using C = std::complex<double>;
    const double logk = std::log(K);
    const std::vector<double> r{R};
    QuadratureHints hints;
    hints.conjugate_symmetric = true;
    hints.frequency = std::abs(mgf.mean(r)[0] - logk);
    hints.reference = reference;
    auto f = [&](double v) {
        C iz(-R, -v); // i z with z = iR - v
        C z1(R, v);
        C lm = mgf.log_mgf<C>(std::span<const C>(&z1, 1));
        return std::exp((1.0 + iz) * logk + lm) / (iz * (1.0 + iz));
    };
    return fourier_quadrature(f, quad, hints);
}

inline void check_call_damping(const LinearMgf& mgf, double R, const char* what) {
    std::vector<double> r{R};
    if (R > 1 && mgf.feasible(r)) return;
    std::vector<double> dir{1.5};
    double s = feasible_scale([&](std::span<const double> p) { return mgf.feasible(p); }, dir);
    double suggest = std::min(1.5, 1.0 + 0.5 * (1.5 * s - 1.0));
    std::ostringstream os;
    os << what << ": damping R = " << R << " is not admissible (need R > 1 with a finite moment)";
    if (1.5 * s > 1.0) {
        os << "; try R = " << suggest;
        throw DampingError(os.str(), {suggest});
    }
    os << "; no admissible value found";
    throw DampingError(os.str(), {});
}

// Z = A^m_k + <B^m_k, X_{T_k}> under P_k or Pbar_k
inline LinearMgf bond_log_mgf(const CalibratedModel& m, Measure measure, std::size_t k, std::size_t mm) {
    auto c = aggregate_coefficients(m, k, mm, Family::risk_free);
    return LinearMgf(m, measure, k, m.grid().date(k), {c.B}, {c.A});
}

} // namespace detail

// Model-independent CDS spread from the initial curves (exact under the product construction).
inline double cds_spread_model_independent(const InitialCurves& c, std::size_t m, double pi, double coupon) {
    if (m < 1 || m > c.size()) throw IndexError("cds: m must lie in 1..N");
    double fee = 0.0, prot = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        fee += c.defaultable_bond(k - 1);
        prot += (c.defaultable_bond(k - 1) * c.bond(k) - c.defaultable_bond(k) * c.bond(k - 1)) / c.bond(k - 1);
    }
    return (1.0 - pi * (1.0 + coupon)) * prot / fee;
}

// Closed-form CDS spread from the restricted forward exponents.
inline double cds_spread(const CalibratedModel& model, std::size_t m, double pi, double coupon) {
    if (m < 1 || m > model.size()) throw IndexError("cds: m must lie in 1..N");
    if (!(pi >= 0 && pi < 1)) throw ParameterError("cds: recovery must lie in [0,1)");
    const std::size_t d = model.dim();
    double fee = 0.0, prot = 0.0;
    for (std::size_t k = 1; k <= m; ++k) {
        double t = model.grid().date(k - 1);
        // 1 + delta_{k-1} H(T_{k-1},T_{k-1}) = exp(A_k + <B_k, X_{T_{k-1}}>)
        double A = 0.0;
        std::vector<double> B(d, 0.0);
        auto add = [&](Family f, std::size_t j, double sign) {
            auto e = model.exponents(f, j, t);
            A += sign * e.phi;
            for (std::size_t i = 0; i < d; ++i) B[i] += sign * e.psi[i];
        };
        if (k > 1) {
            add(Family::defaultable, k - 1, 1.0);
            add(Family::risk_free, k - 1, -1.0);
        }
        add(Family::defaultable, k, -1.0);
        add(Family::risk_free, k, 1.0);
        MeasureMgf mgf(model, Measure::restricted, k, t);
        if (!mgf.feasible(B))
            throw DomainError("cds: restricted exponent argument outside the domain at k=" + std::to_string(k));
        double lm = mgf.log_mgf<double>(B);
        fee += model.curves().defaultable_bond(k - 1);
        prot += model.curves().defaultable_bond(k) * std::expm1(A + lm);
    }
    return (1.0 - pi * (1.0 + coupon)) * prot / fee;
}

// Call on the default-free bond B(., T_m) with expiry T_k, priced under P_k.
inline AnalyticPrice bond_call_price(const CalibratedModel& model, std::size_t k, std::size_t mm, double K,
                                     double R = 1.5, const QuadratureConfig& quad = {}) {
    detail::check_strike(K);
    auto mgf = detail::bond_log_mgf(model, Measure::forward, k, mm);
    const double bk = model.curves().bond(k);
    const double fwd = model.curves().bond(mm) / bk;
    if (K == 0.0) return {bk * fwd, 0.0, 0};
    detail::check_call_damping(mgf, R, "bond call");
    auto q = detail::call_integral(mgf, K, R, quad, fwd);
    return {bk * q.value, bk * q.error_estimate, q.evaluations};
}

// Vulnerable call on B(., T_m) with expiry T_k; q is the recovered fraction.
// damping holds one value for both integrals or (R1, R2).
inline AnalyticPrice vulnerable_option_price(const CalibratedModel& model, std::size_t k, std::size_t mm, double K,
                                             double q, const DampingVector& damping = DampingVector::one_dim(),
                                             const QuadratureConfig& quad = {}) {
    if (!(k >= 1 && k < mm && mm <= model.size())) throw IndexError("vulnerable option needs 1 <= k < m <= N");
    if (!(q >= 0 && q <= 1)) throw ParameterError("vulnerable option: recovery must lie in [0,1]");
    detail::check_strike(K);
    if (damping.R.empty() || damping.R.size() > 2)
        throw ParameterError("vulnerable option: damping needs one or two values");
    const double R1 = damping.R[0], R2 = damping.R.back();
    const double bk = model.curves().bond(k), bbk = model.curves().defaultable_bond(k);
    AnalyticPrice out;
    if (q < 1) {
        auto mgf = detail::bond_log_mgf(model, Measure::restricted, k, mm);
        double one = 1.0;
        double fwd = std::exp(mgf.log_mgf<double>(std::span<const double>(&one, 1)));
        if (K == 0.0) {
            out.value += (1 - q) * bbk * fwd;
        } else {
            detail::check_call_damping(mgf, R1, "vulnerable option (defaultable leg)");
            auto r = detail::call_integral(mgf, K, R1, quad, fwd);
            out.value += (1 - q) * bbk * r.value;
            out.quadrature_error += (1 - q) * bbk * r.error_estimate;
            out.evaluations += r.evaluations;
        }
    }
    if (q > 0) {
        auto mgf = detail::bond_log_mgf(model, Measure::forward, k, mm);
        double fwd = model.curves().bond(mm) / bk;
        if (K == 0.0) {
            out.value += q * bk * fwd;
        } else {
            detail::check_call_damping(mgf, R2, "vulnerable option (default-free leg)");
            auto r = detail::call_integral(mgf, K, R2, quad, fwd);
            out.value += q * bk * r.value;
            out.quadrature_error += q * bk * r.error_estimate;
            out.evaluations += r.evaluations;
        }
    }
    return out;
}

// Knock-out call on the fractional-recovery bond pi B(.,T_m) + (1-pi) Bbar(.,T_m), expiry T_i.
// Computed as forward minus strike plus the put on e^{Y1} + e^{Y2}, whose transform is
// K^{1+iz1+iz2} Gamma(iz1) Gamma(iz2) / Gamma(2+iz1+iz2) for Im z1, Im z2 < 0.
inline AnalyticPrice bond_option_price(const CalibratedModel& model, std::size_t i, std::size_t mm, double K, double pi,
                                       const DampingVector& damping = DampingVector::two_dim(),
                                       const QuadratureConfig& quad = {}) {
    using C = std::complex<double>;
    if (!(i >= 1 && i < mm && mm <= model.size())) throw IndexError("bond option needs 1 <= i < m <= N");
    if (!(pi > 0 && pi < 1)) throw ParameterError("bond option: recovery must lie in (0,1)");
    detail::check_strike(K);
    if (damping.R.size() != 2) throw ParameterError("bond option: damping needs two values");
    auto rf = aggregate_coefficients(model, i, mm, Family::risk_free);
    auto df = aggregate_coefficients(model, i, mm, Family::defaultable);
    detail::LinearMgf mgf(model, Measure::restricted, i, model.grid().date(i), {rf.B, df.B},
                          {std::log(pi) + rf.A, std::log(1 - pi) + df.A});
    const double bbi = model.curves().defaultable_bond(i);
    const double e1[2] = {1.0, 0.0}, e2[2] = {0.0, 1.0};
    const double fwd = std::exp(mgf.log_mgf<double>(e1)) + std::exp(mgf.log_mgf<double>(e2));
    if (K == 0.0) return {bbi * fwd, 0.0, 0};

    const double R1 = damping.R[0], R2 = damping.R[1];
    if (!(R1 < 0 && R2 < 0 && mgf.feasible(damping.R))) {
        const double dir[2] = {-0.5, -0.5};
        double s = detail::feasible_scale([&](std::span<const double> p) { return mgf.feasible(p); }, dir);
        std::vector<double> suggest{-0.5 * s, -0.5 * s};
        if (s >= 1.0) suggest = {-0.5, -0.5};
        throw DampingError("bond option: damping R = " + detail::fmt_vec(damping.R) +
                               " is not admissible (need R1 < 0, R2 < 0 and a finite moment); try R = " +
                               detail::fmt_vec(suggest),
                           suggest);
    }

    const double logk = std::log(K);
    auto mean = mgf.mean(damping.R);
    QuadratureHints hints;
    hints.conjugate_symmetric = true;
    hints.frequency = std::abs(0.5 * (mean[0] + mean[1]) - logk);
    hints.frequency_inner = 0.5 * std::abs(mean[0] - mean[1]);
    hints.reference = fwd;
    auto f = [&](double w1, double w2) {
        C iz1(-R1, -w1), iz2(-R2, -w2); // i z with z = iR - w
        C arg[2] = {C(R1, w1), C(R2, w2)};
        C lm = mgf.log_mgf<C>(std::span<const C>(arg, 2));
        C lg = complex_log_gamma(iz1) + complex_log_gamma(iz2) - complex_log_gamma(2.0 + iz1 + iz2);
        return std::exp((1.0 + iz1 + iz2) * logk + lg + lm);
    };
    auto put = fourier_quadrature_2d(f, quad, hints);
    double call = fwd - K + put.value;
    return {bbi * std::max(call, 0.0), bbi * put.error_estimate, put.evaluations};
}

} // namespace dalm
