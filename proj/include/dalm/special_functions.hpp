#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "dalm/errors.hpp"

namespace dalm {

namespace detail {

// log sin(pi z), modulo 2 pi i
inline std::complex<double> log_sin_pi(std::complex<double> z) {
    using C = std::complex<double>;
    const double pi = std::numbers::pi;
    double n = std::round(z.real());
    C r = z - n; // sin(pi z) = (-1)^n sin(pi r)
    C odd = std::fmod(std::abs(n), 2.0) == 1.0 ? C(0, pi) : C(0, 0);
    if (std::abs(r.imag()) < 10.0) return std::log(std::sin(pi * r)) + odd;
    C i(0, 1);
    if (r.imag() > 0) {
        C e = std::exp(2.0 * i * pi * r);
        return -i * pi * r + std::log(C(0, 0.5)) + std::log(1.0 - e) + odd;
    }
    C e = std::exp(-2.0 * i * pi * r);
    return i * pi * r + std::log(C(0, -0.5)) + std::log(1.0 - e) + odd;
}

} // namespace detail

// log Gamma(z) by Lanczos (g = 7, 9 terms), reflection for Re z < 0.5.
// Imaginary part is defined modulo 2 pi.
inline std::complex<double> complex_log_gamma(std::complex<double> z) {
    using C = std::complex<double>;
    static constexpr double g = 7.0;
    static constexpr std::array<double, 9> p = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    const double pi = std::numbers::pi;

    if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::round(z.real()))
        throw DomainError("complex_log_gamma: pole at a non-positive integer");

    if (z.real() < 0.5) return std::log(pi) - detail::log_sin_pi(z) - complex_log_gamma(1.0 - z);

    // partial-fraction sum in real arithmetic (std::complex division is slow)
    const double x = z.real() - 1.0, y = z.imag();
    double sr = p[0], si = 0.0;
    for (int i = 1; i < 9; ++i) {
        double a = x + i, r = p[i] / (a * a + y * y);
        sr += r * a;
        si -= r * y;
    }
    const double tr = x + g + 0.5;
    C log_t(0.5 * std::log(tr * tr + y * y), std::atan2(y, tr));
    C log_s(0.5 * std::log(sr * sr + si * si), std::atan2(si, sr));
    return 0.5 * std::log(2.0 * pi) + C(x + 0.5, y) * log_t - C(tr, y) + log_s;
}

} // namespace dalm
