#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "dalm/errors.hpp"
#include "dalm/ode.hpp"

namespace dalm {

using cplx = std::complex<double>;

// One CIR factor with exponential jumps:
// dX = -lambda (X - theta) dt + 2 eta sqrt(X) dW + dZ,
// Z compound Poisson with intensity ell and Exp jumps of mean mu.
struct AffineComponentSpec {
    double lambda = 0.0;
    double theta = 0.0;
    double eta = 0.0;
    double ell = 0.0;
    double mu = 0.0;
    double x0 = 0.0;

    void validate() const {
        for (double p : {lambda, theta, eta, ell, mu, x0})
            if (!std::isfinite(p)) throw ParameterError("affine component: non-finite parameter");
        if (lambda < 0 || theta < 0 || eta < 0 || ell < 0 || mu < 0 || x0 < 0)
            throw ParameterError("affine component: parameters must be non-negative");
        if (ell > 0 && !(mu > 0)) throw ParameterError("affine component: ell > 0 requires mu > 0");
    }
};

struct ProductAffineSpec {
    std::vector<AffineComponentSpec> components;
    std::size_t d1 = 0;
    std::size_t d2 = 0;

    std::size_t dim() const { return components.size(); }

    void validate() const {
        if (d1 < 1 || d2 < 1) throw ParameterError("driver: need d1 >= 1 and d2 >= 1");
        if (d1 + d2 != components.size())
            throw ParameterError("driver: d1 + d2 must equal the number of components");
        for (const auto& c : components) c.validate();
    }

    std::vector<double> x0() const {
        std::vector<double> x;
        x.reserve(components.size());
        for (const auto& c : components) x.push_back(c.x0);
        return x;
    }
};

template <class T>
struct BasicExponentPair {
    T phi{};
    std::vector<T> psi;
};
using ExponentPair = BasicExponentPair<double>;
using ComplexExponentPair = BasicExponentPair<cplx>;

template <class T>
struct ScalarExponents {
    T phi{};
    T psi{};
};

namespace detail {

inline double real_part(double x) { return x; }
inline double real_part(const cplx& z) { return z.real(); }

// log(1+z)/z, finite at z = 0
inline double log1p_ratio(double z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return std::log1p(z) / z;
}

inline cplx log1p(const cplx& z) {
    double a = z.real(), b = z.imag();
    return {0.5 * std::log1p(a * (2.0 + a) + b * b), std::atan2(b, 1.0 + a)};
}

inline cplx log1p_ratio(const cplx& z) {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return log1p(z) / z;
}

} // namespace detail

// Closed-form coefficients of one component at a fixed horizon t.
class ComponentAtHorizon {
public:
    ComponentAtHorizon() = default;

    ComponentAtHorizon(const AffineComponentSpec& s, double t) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw ParameterError("horizon must be finite and >= 0");
        a_ = std::exp(-s.lambda * t);
        b_ = s.lambda > 0 ? -std::expm1(-s.lambda * t) / s.lambda : t;
        k1_ = 2.0 * s.eta * s.eta * b_;
        drift_ = s.lambda * s.theta * b_;
        jumps_ = s.ell > 0;
        mu_ = s.mu;
        c_ = s.lambda * s.mu - 2.0 * s.eta * s.eta;
        ellmu_ = s.ell * s.mu;
        if (jumps_) {
            bound_ = 1.0 / std::max(mu_, k1_ + mu_ * a_);
        } else {
            bound_ = k1_ > 0 ? 1.0 / k1_ : std::numeric_limits<double>::infinity();
        }
    }

    double bound() const { return bound_; }
    bool in_domain(double re_u) const { return re_u < bound_; }

    // no domain check; callers validate Re u against bound()
    template <class T>
    ScalarExponents<T> eval(const T& u) const {
        ScalarExponents<T> r;
        r.psi = a_ * u / (1.0 - k1_ * u);
        r.phi = drift_ * u * detail::log1p_ratio(T(-k1_ * u));
        if (jumps_) {
            T x = u * b_ / (1.0 - mu_ * u);
            r.phi += ellmu_ * x * detail::log1p_ratio(T(c_ * x));
        }
        return r;
    }

private:
    double a_ = 1.0, b_ = 0.0, k1_ = 0.0, drift_ = 0.0, mu_ = 0.0, c_ = 0.0, ellmu_ = 0.0;
    bool jumps_ = false;
    double bound_ = std::numeric_limits<double>::infinity();
};

inline double component_domain_bound(const AffineComponentSpec& spec, double horizon) {
    spec.validate();
    if (!(horizon > 0)) throw ParameterError("component_domain_bound: horizon must be > 0");
    return ComponentAtHorizon(spec, horizon).bound();
}

template <class T>
ScalarExponents<T> exponents_analytic(const AffineComponentSpec& spec, const T& u, double t) {
    spec.validate();
    ComponentAtHorizon c(spec, t);
    if (!c.in_domain(detail::real_part(u)))
        throw DomainError("exponents_analytic: u outside the exponent domain", c.bound());
    return c.eval(u);
}

inline ScalarExponents<double> exponents_ode(const AffineComponentSpec& spec, double u, double t,
                                             const OdeOptions& opt = {}) {
    spec.validate();
    if (!(t >= 0)) throw ParameterError("exponents_ode: t must be >= 0");
    const double lt = spec.lambda * spec.theta, e2 = 2.0 * spec.eta * spec.eta;
    auto rhs = [&](const std::array<double, 2>& y, std::array<double, 2>& dy) {
        double psi = y[1];
        double jump = 0.0;
        if (spec.ell > 0) {
            double den = 1.0 - spec.mu * psi;
            if (!(den > 0)) return false;
            jump = spec.ell * spec.mu * psi / den;
        }
        dy[0] = lt * psi + jump;
        dy[1] = e2 * psi * psi - spec.lambda * psi;
        return std::isfinite(dy[0]) && std::isfinite(dy[1]);
    };
    std::array<double, 2> y{0.0, u};
    OdeStatus st = dormand_prince<2>(rhs, y, t, opt);
    if (st == OdeStatus::singular) {
        double bound = t > 0 ? ComponentAtHorizon(spec, t).bound() : std::numeric_limits<double>::quiet_NaN();
        throw DomainError("exponents_ode: Riccati solution blows up before t", bound);
    }
    if (st == OdeStatus::max_steps) throw NumericalError("exponents_ode: step limit reached");
    return {y[0], y[1]};
}

// All components of a product driver at one horizon.
class ProductAtHorizon {
public:
    ProductAtHorizon() = default;

    ProductAtHorizon(const ProductAffineSpec& spec, double t) {
        comps_.reserve(spec.dim());
        for (const auto& c : spec.components) comps_.emplace_back(c, t);
    }

    std::size_t dim() const { return comps_.size(); }
    const ComponentAtHorizon& component(std::size_t i) const { return comps_[i]; }

    template <class T>
    void check(std::span<const T> u) const {
        if (u.size() != comps_.size()) throw ParameterError("exponent argument has wrong dimension");
        for (std::size_t i = 0; i < comps_.size(); ++i) {
            if (!comps_[i].in_domain(detail::real_part(u[i])))
                throw DomainError("component " + std::to_string(i) + " outside the exponent domain (Re u = " +
                                      std::to_string(detail::real_part(u[i])) + ", bound " +
                                      std::to_string(comps_[i].bound()) + ")",
                                  comps_[i].bound());
        }
    }

    template <class T>
    BasicExponentPair<T> eval(std::span<const T> u) const {
        check(u);
        BasicExponentPair<T> r;
        r.psi.resize(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            auto e = comps_[i].eval(u[i]);
            r.phi += e.phi;
            r.psi[i] = e.psi;
        }
        return r;
    }

    // phi + <psi, x>
    template <class T>
    T log_mgf(std::span<const T> u, std::span<const double> x) const {
        check(u);
        T acc{};
        for (std::size_t i = 0; i < u.size(); ++i) {
            auto e = comps_[i].eval(u[i]);
            acc += e.phi + e.psi * x[i];
        }
        return acc;
    }

private:
    std::vector<ComponentAtHorizon> comps_;
};

inline ExponentPair product_exponents(const ProductAffineSpec& spec, std::span<const double> u, double t) {
    return ProductAtHorizon(spec, t).eval(u);
}

inline ComplexExponentPair product_exponents(const ProductAffineSpec& spec, std::span<const cplx> u, double t) {
    return ProductAtHorizon(spec, t).eval(u);
}

inline double log_martingale_value(const ProductAffineSpec& spec, std::span<const double> x,
                                   std::span<const double> u, double t, double T_N) {
    if (!(t >= 0 && t <= T_N)) throw ParameterError("martingale_value: need 0 <= t <= T_N");
    if (x.size() != spec.dim()) throw ParameterError("martingale_value: state has wrong dimension");
    return ProductAtHorizon(spec, T_N - t).log_mgf(u, x);
}

inline double martingale_value(const ProductAffineSpec& spec, std::span<const double> x,
                               std::span<const double> u, double t, double T_N) {
    return std::exp(log_martingale_value(spec, x, u, t, T_N));
}

// max over probes xi of E_x0[exp(<xi * direction, X_T>)]; empty direction means all ones
inline double gamma_x_lower_bound(const ProductAffineSpec& spec, double T_N, std::span<const double> probe_grid,
                                  std::span<const double> direction = {}) {
    if (probe_grid.empty()) throw ParameterError("gamma_x_lower_bound: empty probe grid");
    std::vector<double> dir(direction.begin(), direction.end());
    if (dir.empty()) dir.assign(spec.dim(), 1.0);
    if (dir.size() != spec.dim()) throw ParameterError("gamma_x_lower_bound: direction has wrong dimension");
    ProductAtHorizon h(spec, T_N);
    auto x0 = spec.x0();
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    std::vector<double> u(dir.size());
    for (double xi : probe_grid) {
        for (std::size_t i = 0; i < dir.size(); ++i) u[i] = xi * dir[i];
        try {
            double v = h.log_mgf<double>(u, x0);
            best = std::max(best, v);
            any = true;
        } catch (const DomainError&) {
        }
    }
    if (!any) throw DomainError("gamma_x_lower_bound: every probe is outside the domain");
    return std::exp(best);
}

} // namespace dalm
