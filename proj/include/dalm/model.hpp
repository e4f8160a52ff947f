#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dalm/affine.hpp"
#include "dalm/errors.hpp"

namespace dalm {

// T_1 < ... < T_N; T_0 = 0 is implicit.
class TenorGrid {
public:
    TenorGrid() = default;

    explicit TenorGrid(std::vector<double> dates) : dates_(std::move(dates)) {
        if (dates_.empty()) throw ValidationError("tenor grid: no dates");
        double prev = 0.0;
        for (std::size_t k = 0; k < dates_.size(); ++k) {
            if (!std::isfinite(dates_[k]) || !(dates_[k] > prev))
                throw ValidationError("tenor grid: dates must be strictly increasing and positive (index " +
                                      std::to_string(k + 1) + ")");
            prev = dates_[k];
        }
    }

    static TenorGrid uniform(std::size_t n, double delta) {
        if (n == 0 || !(delta > 0)) throw ValidationError("tenor grid: need N >= 1 and delta > 0");
        std::vector<double> d(n);
        for (std::size_t k = 0; k < n; ++k) d[k] = static_cast<double>(k + 1) * delta;
        return TenorGrid(std::move(d));
    }

    std::size_t size() const { return dates_.size(); }
    double date(std::size_t k) const {
        if (k > dates_.size()) throw IndexError("tenor index out of range");
        return k == 0 ? 0.0 : dates_[k - 1];
    }
    // delta_k = T_{k+1} - T_k, k = 0..N-1
    double delta(std::size_t k) const {
        if (k >= dates_.size()) throw IndexError("accrual index out of range");
        return date(k + 1) - date(k);
    }
    double horizon() const { return dates_.back(); }
    const std::vector<double>& dates() const { return dates_; }

    // index j with T_j == t exactly, or -1
    long index_of(double t) const {
        if (t == 0.0) return 0;
        auto it = std::lower_bound(dates_.begin(), dates_.end(), t);
        if (it != dates_.end() && *it == t) return static_cast<long>(it - dates_.begin()) + 1;
        return -1;
    }

private:
    std::vector<double> dates_;
};

// B(0,T_k) and Bbar(0,T_k) for k = 1..N.
class InitialCurves {
public:
    InitialCurves() = default;

    InitialCurves(std::vector<double> risk_free, std::vector<double> defaultable)
        : rf_(std::move(risk_free)), df_(std::move(defaultable)) {
        validate();
    }

    std::size_t size() const { return rf_.size(); }
    double bond(std::size_t k) const {
        if (k > rf_.size()) throw IndexError("curve index out of range");
        return k == 0 ? 1.0 : rf_[k - 1];
    }
    double defaultable_bond(std::size_t k) const {
        if (k > df_.size()) throw IndexError("curve index out of range");
        return k == 0 ? 1.0 : df_[k - 1];
    }
    const std::vector<double>& risk_free() const { return rf_; }
    const std::vector<double>& defaultable() const { return df_; }

private:
    void validate() const {
        if (rf_.empty() || rf_.size() != df_.size())
            throw ValidationError("curves: risk-free and defaultable curves need the same nonzero length");
        const double tol = 1e-13;
        for (std::size_t k = 1; k <= rf_.size(); ++k) {
            double b = bond(k), bb = defaultable_bond(k);
            std::string at = " at k=" + std::to_string(k);
            if (!std::isfinite(b) || !std::isfinite(bb)) throw ValidationError("curves: non-finite value" + at);
            if (!(bb > 0)) throw ValidationError("curves: defaultable bond must be positive" + at);
            if (bb > b * (1 + tol)) throw ValidationError("curves: defaultable bond exceeds risk-free bond" + at);
            if (b > 1 + tol) throw ValidationError("curves: risk-free bond exceeds 1" + at);
            double r = bond(k - 1) / b, rb = defaultable_bond(k - 1) / bb;
            if (r < 1 - tol) throw ValidationError("curves: negative initial LIBOR rate" + at);
            if (rb < r * (1 - tol))
                throw ValidationError("curves: defaultable rate below risk-free rate" + at);
        }
    }

    std::vector<double> rf_;
    std::vector<double> df_;
};

enum class Family { risk_free, defaultable };

// Calibrated parameter sequences plus everything needed to evaluate them.
// u(k), v(k), w(k) are 1-based, k = 1..N. Immutable.
class CalibratedModel {
public:
    CalibratedModel(ProductAffineSpec driver, TenorGrid grid, InitialCurves curves,
                    std::vector<std::vector<double>> u, std::vector<std::vector<double>> w)
        : driver_(std::move(driver)), grid_(std::move(grid)), curves_(std::move(curves)),
          u_(std::move(u)), w_(std::move(w)) {
        driver_.validate();
        const std::size_t n = grid_.size(), d = driver_.dim();
        if (curves_.size() != n) throw AssemblyError("curves and tenor grid differ in length", 0);
        if (u_.size() != n || w_.size() != n) throw AssemblyError("sequence length differs from N", 0);
        v_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            if (u_[k].size() != d) throw AssemblyError("u_k has wrong dimension", k + 1);
            if (w_[k].size() != driver_.d2) throw AssemblyError("w_k has wrong dimension", k + 1);
            v_[k] = u_[k];
            for (std::size_t j = 0; j < driver_.d2; ++j) v_[k][driver_.d1 + j] = w_[k][j];
        }
        x0_ = driver_.x0();
        tenor_.resize(n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            auto& c = tenor_[j];
            c.at = ProductAtHorizon(driver_, grid_.horizon() - grid_.date(j));
            c.u.resize(n);
            c.v.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                c.u[k] = c.at.eval<double>(u_[k]);
                c.v[k] = c.at.eval<double>(v_[k]);
            }
        }
    }

    const ProductAffineSpec& driver() const { return driver_; }
    const TenorGrid& grid() const { return grid_; }
    const InitialCurves& curves() const { return curves_; }
    std::size_t size() const { return grid_.size(); }
    std::size_t dim() const { return driver_.dim(); }
    std::span<const double> x0() const { return x0_; }

    std::span<const double> u(std::size_t k) const { return u_.at(check(k) - 1); }
    std::span<const double> v(std::size_t k) const { return v_.at(check(k) - 1); }
    std::span<const double> w(std::size_t k) const { return w_.at(check(k) - 1); }
    std::span<const double> param(Family f, std::size_t k) const { return f == Family::risk_free ? u(k) : v(k); }

    // (phi, psi) of u_k or v_k at horizon T_N - t
    ExponentPair exponents(Family f, std::size_t k, double t) const {
        check(k);
        check_time(t);
        long j = grid_.index_of(t);
        if (j >= 0) return f == Family::risk_free ? tenor_[j].u[k - 1] : tenor_[j].v[k - 1];
        return ProductAtHorizon(driver_, grid_.horizon() - t).eval(param(f, k));
    }

    // log M^{u_k}_t(x) or log M^{v_k}_t(x)
    double log_martingale(Family f, std::size_t k, std::span<const double> x, double t) const {
        check_state(x);
        check(k);
        check_time(t);
        auto affine = [&](const ExponentPair& e) {
            double acc = e.phi;
            for (std::size_t i = 0; i < x.size(); ++i) acc += e.psi[i] * x[i];
            return acc;
        };
        long j = grid_.index_of(t);
        if (j >= 0) return affine(f == Family::risk_free ? tenor_[j].u[k - 1] : tenor_[j].v[k - 1]);
        return affine(exponents(f, k, t));
    }

    // log of M^{v_k}/M^{u_k}; k = 0 gives 0 by convention
    double log_survival_ratio(std::size_t k, std::span<const double> x, double t) const {
        if (k == 0) return 0.0;
        return log_martingale(Family::defaultable, k, x, t) - log_martingale(Family::risk_free, k, x, t);
    }

    void check_state(std::span<const double> x) const {
        if (x.size() != dim()) throw ParameterError("state has wrong dimension");
    }

    void check_time(double t) const {
        if (!(t >= 0 && t <= grid_.horizon())) throw ParameterError("time outside [0, T_N]");
    }

private:
    std::size_t check(std::size_t k) const {
        if (k < 1 || k > grid_.size()) throw IndexError("sequence index out of range: " + std::to_string(k));
        return k;
    }

    struct TenorCache {
        ProductAtHorizon at;
        std::vector<ExponentPair> u, v;
    };

    ProductAffineSpec driver_;
    TenorGrid grid_;
    InitialCurves curves_;
    std::vector<std::vector<double>> u_, w_, v_;
    std::vector<double> x0_;
    std::vector<TenorCache> tenor_;
};

} // namespace dalm
