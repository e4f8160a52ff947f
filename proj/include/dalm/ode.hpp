#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <utility>

#include "dalm/errors.hpp"

namespace dalm {

struct OdeOptions {
    double atol = 1e-12;
    double rtol = 1e-10;
    std::size_t max_steps = 200000;
    double blowup = 1e100;
};

enum class OdeStatus { ok, singular, max_steps };

// Dormand-Prince 5(4), autonomous systems only.
// rhs(y, dydt) must return false when y is outside its domain; that stage
// is treated as a rejected step.
template <std::size_t N, class Rhs>
OdeStatus dormand_prince(Rhs&& rhs, std::array<double, N>& y, double t_end,
                         const OdeOptions& opt = {}) {
    using State = std::array<double, N>;
    if (t_end <= 0.0) return OdeStatus::ok;

    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // b - bhat
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    auto axpy = [](const State& base, std::initializer_list<std::pair<double, const State*>> terms,
                   double h) {
        State out = base;
        for (auto& [c, k] : terms)
            for (std::size_t i = 0; i < N; ++i) out[i] += h * c * (*k)[i];
        return out;
    };

    State k1, k2, k3, k4, k5, k6, k7;
    if (!rhs(y, k1)) return OdeStatus::singular;

    double t = 0.0;
    double h = t_end / 64.0;
    const double h_min = 1e-14 * t_end;
    std::size_t steps = 0;
    int rejects_in_row = 0;

    while (t_end - t > h_min) {
        if (++steps > opt.max_steps) return OdeStatus::max_steps;
        if (t + h > t_end) h = t_end - t;

        bool ok = true;
        State y2 = axpy(y, {{a21, &k1}}, h);
        ok = ok && rhs(y2, k2);
        State y3, y4, y5, y6, y7;
        if (ok) { y3 = axpy(y, {{a31, &k1}, {a32, &k2}}, h); ok = rhs(y3, k3); }
        if (ok) { y4 = axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h); ok = rhs(y4, k4); }
        if (ok) { y5 = axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h); ok = rhs(y5, k5); }
        if (ok) {
            y6 = axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h);
            ok = rhs(y6, k6);
        }
        if (ok) {
            y7 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
            ok = rhs(y7, k7);
        }

        double err = 0.0;
        if (ok) {
            for (std::size_t i = 0; i < N; ++i) {
                double d = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                e7 * k7[i]);
                double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y7[i]));
                err = std::max(err, std::abs(d) / sc);
                if (!std::isfinite(y7[i]) || std::abs(y7[i]) > opt.blowup) ok = false;
            }
            if (!std::isfinite(err)) ok = false;
        }

        if (ok && err <= 1.0) {
            t += h;
            y = y7;
            k1 = k7;
            rejects_in_row = 0;
            double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h *= std::min(5.0, std::max(0.2, fac));
        } else {
            ++rejects_in_row;
            if (ok) {
                double fac = 0.9 * std::pow(err, -0.2);
                h *= std::max(0.1, std::min(0.9, fac));
            } else {
                h *= 0.25;
            }
            if (h < h_min || rejects_in_row > 60) return OdeStatus::singular;
        }
    }
    return OdeStatus::ok;
}

} // namespace dalm
