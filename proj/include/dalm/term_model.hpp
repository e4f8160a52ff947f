#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dalm/affine.hpp"
#include "dalm/errors.hpp"
#include "dalm/model.hpp"

namespace dalm {

struct RateCoefficients {
    double A = 0.0;
    std::vector<double> B;

    double eval(std::span<const double> x) const {
        double acc = A;
        for (std::size_t i = 0; i < B.size(); ++i) acc += B[i] * x[i];
        return acc;
    }
};

namespace detail {

inline void check_rate_index(const CalibratedModel& m, std::size_t k, double t) {
    if (k < 1 || k + 1 > m.size()) throw IndexError("rate index must lie in 1..N-1, got " + std::to_string(k));
    if (!(t >= 0 && t <= m.grid().date(k))) throw ParameterError("rate evaluation needs 0 <= t <= T_k");
}

inline void check_intensity_index(const CalibratedModel& m, std::size_t k, double t) {
    if (k + 1 > m.size()) throw IndexError("intensity index must lie in 0..N-1, got " + std::to_string(k));
    if (!(t >= 0 && t <= m.grid().date(k))) throw ParameterError("evaluation needs 0 <= t <= T_k");
}

} // namespace detail

// A_{T_N-t}(p_k, p_{k+1}), B_{T_N-t}(p_k, p_{k+1}) with p = u or v
inline RateCoefficients rate_coefficients(const CalibratedModel& m, Family f, std::size_t k, double t) {
    auto a = m.exponents(f, k, t), b = m.exponents(f, k + 1, t);
    RateCoefficients r{a.phi - b.phi, std::vector<double>(m.dim())};
    for (std::size_t i = 0; i < m.dim(); ++i) r.B[i] = a.psi[i] - b.psi[i];
    return r;
}

inline double libor(const CalibratedModel& m, std::span<const double> x, double t, std::size_t k) {
    detail::check_rate_index(m, k, t);
    double g = m.log_martingale(Family::risk_free, k, x, t) - m.log_martingale(Family::risk_free, k + 1, x, t);
    return std::expm1(g) / m.grid().delta(k);
}

inline double defaultable_libor(const CalibratedModel& m, std::span<const double> x, double t, std::size_t k) {
    detail::check_rate_index(m, k, t);
    double g = m.log_martingale(Family::defaultable, k, x, t) - m.log_martingale(Family::defaultable, k + 1, x, t);
    return std::expm1(g) / m.grid().delta(k);
}

// 1 + delta_k H(t,T_k) = (M^{v_k}/M^{u_k}) (M^{u_{k+1}}/M^{v_{k+1}}); k = 0 uses M^{v_0}/M^{u_0} = 1
inline double default_intensity(const CalibratedModel& m, std::span<const double> x, double t, std::size_t k) {
    detail::check_intensity_index(m, k, t);
    double g = m.log_survival_ratio(k, x, t) - m.log_survival_ratio(k + 1, x, t);
    return std::expm1(g) / m.grid().delta(k);
}

inline double spread(const CalibratedModel& m, std::span<const double> x, double t, std::size_t k) {
    return defaultable_libor(m, x, t, k) - libor(m, x, t, k);
}

// HH(t,T_k) = M^{v_{k+1}}_t / M^{u_{k+1}}_t, k = 0..N-1
inline double survival_process(const CalibratedModel& m, std::span<const double> x, double t, std::size_t k) {
    detail::check_intensity_index(m, k, t);
    return std::exp(m.log_survival_ratio(k + 1, x, t));
}

// Gamma_{T_{k+1}} = -log HH(T_k, T_k), from the state at T_k
inline double hazard_at_tenor(const CalibratedModel& m, std::span<const double> x_at_tk, std::size_t k) {
    if (k + 1 > m.size()) throw IndexError("hazard index must lie in 0..N-1, got " + std::to_string(k));
    for (double xi : x_at_tk)
        if (xi < 0) throw ParameterError("hazard_at_tenor: state must be >= 0");
    return -m.log_survival_ratio(k + 1, x_at_tk, m.grid().date(k));
}

// exp(A^m_i + <B^m_i, X_{T_i}>) = B(T_i,T_m) (risk-free) or Bbar(T_i,T_m) (defaultable)
inline RateCoefficients aggregate_coefficients(const CalibratedModel& m, std::size_t i, std::size_t mm, Family f) {
    if (i < 1 || i >= mm || mm > m.size()) throw IndexError("aggregate_coefficients needs 1 <= i < m <= N");
    double t = m.grid().date(i);
    auto a = m.exponents(f, mm, t), b = m.exponents(f, i, t);
    RateCoefficients r{a.phi - b.phi, std::vector<double>(m.dim())};
    for (std::size_t j = 0; j < m.dim(); ++j) r.B[j] = a.psi[j] - b.psi[j];
    return r;
}

enum class Measure { terminal, forward, restricted };

// log E[exp(<w, X_t>)] under P_N, P_k or the restricted defaultable forward measure Pbar_k.
class MeasureMgf {
public:
    MeasureMgf(const CalibratedModel& m, Measure measure, std::size_t k, double t)
        : at_(m.driver(), t), x0_(m.x0().begin(), m.x0().end()), shift_(m.dim(), 0.0) {
        m.check_time(t);
        if (measure != Measure::terminal) {
            auto e = m.exponents(measure == Measure::forward ? Family::risk_free : Family::defaultable, k, t);
            shift_ = e.psi;
        }
        auto b = at_.eval<double>(shift_);
        base_ = b.phi;
        base_psi_ = b.psi;
        offset_ = -base_;
        for (std::size_t i = 0; i < x0_.size(); ++i) offset_ -= base_psi_[i] * x0_[i];
    }

    std::size_t dim() const { return shift_.size(); }

    template <class T>
    BasicExponentPair<T> exponents(std::span<const T> w) const {
        if (w.size() != shift_.size()) throw ParameterError("MGF argument has wrong dimension");
        std::vector<T> y(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) y[i] = T(shift_[i]) + w[i];
        auto e = at_.eval<T>(y);
        e.phi -= base_;
        for (std::size_t i = 0; i < w.size(); ++i) e.psi[i] -= base_psi_[i];
        return e;
    }

    template <class T>
    T log_mgf(std::span<const T> w) const {
        if (w.size() != shift_.size()) throw ParameterError("MGF argument has wrong dimension");
        T acc(offset_);
        for (std::size_t i = 0; i < w.size(); ++i) acc += term(i, w[i]);
        return acc;
    }

    // contribution of component i to log_mgf, without the constant offset
    template <class T>
    T term(std::size_t i, const T& w) const {
        const auto& c = at_.component(i);
        T y = T(shift_[i]) + w;
        if (!c.in_domain(detail::real_part(y)))
            throw DomainError("component " + std::to_string(i) + " outside the exponent domain", c.bound());
        auto e = c.eval(y);
        return e.phi + e.psi * x0_[i];
    }
    double offset() const { return offset_; }

    // true when Re w keeps every shifted argument inside the domain
    bool feasible(std::span<const double> re_w) const {
        for (std::size_t i = 0; i < re_w.size(); ++i)
            if (!at_.component(i).in_domain(shift_[i] + re_w[i])) return false;
        return true;
    }

private:
    ProductAtHorizon at_;
    std::vector<double> x0_;
    std::vector<double> shift_;
    double base_ = 0.0;
    std::vector<double> base_psi_;
    double offset_ = 0.0;
};

inline ExponentPair forward_measure_exponents(const CalibratedModel& m, std::size_t k, std::span<const double> v,
                                              double t) {
    return MeasureMgf(m, Measure::forward, k, t).exponents(v);
}

inline ExponentPair restricted_forward_exponents(const CalibratedModel& m, std::size_t k,
                                                 std::span<const double> w, double t) {
    return MeasureMgf(m, Measure::restricted, k, t).exponents(w);
}

// E_N[exp(-Gamma_{T_k})], Gamma_{T_k} affine in X_{T_{k-1}}
inline double terminal_survival_probability(const CalibratedModel& m, std::size_t k) {
    if (k < 1 || k > m.size()) throw IndexError("survival index must lie in 1..N");
    double t = m.grid().date(k - 1);
    auto ev = m.exponents(Family::defaultable, k, t), eu = m.exponents(Family::risk_free, k, t);
    std::vector<double> c(m.dim());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = ev.psi[i] - eu.psi[i];
    MeasureMgf mgf(m, Measure::terminal, 0, t);
    return std::exp(ev.phi - eu.phi + mgf.log_mgf<double>(c));
}

} // namespace dalm
