#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "dalm/quadrature.hpp"
#include "dalm/special_functions.hpp"

using namespace dalm;
using C = std::complex<double>;

namespace {

// distance modulo 2 pi i
double mod_dist(C a) {
    double two_pi = 2 * std::numbers::pi;
    double im = std::remainder(a.imag(), two_pi);
    return std::abs(C(a.real(), im));
}

} // namespace

TEST(LogGamma, KnownValues) {
    EXPECT_NEAR(std::abs(complex_log_gamma(C(1, 0))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(complex_log_gamma(C(2, 0))), 0.0, 1e-15);
    EXPECT_NEAR(complex_log_gamma(C(0.5, 0)).real(), 0.5723649429246995, 1e-14);
    EXPECT_NEAR(complex_log_gamma(C(0.5, 0)).real(), 0.5 * std::log(std::numbers::pi), 1e-14);
}

TEST(LogGamma, MatchesRealLgamma) {
    for (double x = 0.05; x < 20; x += 0.37)
        EXPECT_NEAR(complex_log_gamma(C(x, 0)).real(), std::lgamma(x), 1e-12 * (1 + std::abs(std::lgamma(x))));
    // negative non-integers: |Gamma| only
    for (double x : {-0.5, -1.3, -4.7})
        EXPECT_NEAR(complex_log_gamma(C(x, 0)).real(), std::lgamma(x), 1e-12 * (1 + std::abs(std::lgamma(x))));
}

TEST(LogGamma, CriticalLineModulus) {
    // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
    for (double y = -150; y <= 150; y += 7.3) {
        double expect = 0.5 * (std::log(std::numbers::pi) - (std::numbers::pi * std::abs(y) +
                                                              std::log1p(std::exp(-2 * std::numbers::pi * std::abs(y))) -
                                                              std::log(2.0)));
        EXPECT_NEAR(complex_log_gamma(C(0.5, y)).real(), expect, 1e-12 * (1 + std::abs(expect)));
    }
}

TEST(LogGamma, Recurrence) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> re(-20, 20), im(-200, 200);
    for (int i = 0; i < 2000; ++i) {
        C z(re(rng), im(rng));
        C lhs = complex_log_gamma(z + 1.0) - complex_log_gamma(z) - std::log(z);
        EXPECT_LT(mod_dist(lhs), 1e-12 * (1 + std::abs(complex_log_gamma(z)))) << z;
    }
}

TEST(LogGamma, ConjugateSymmetry) {
    C z(0.3, 12.0);
    C a = complex_log_gamma(z), b = complex_log_gamma(std::conj(z));
    EXPECT_NEAR(a.real(), b.real(), 1e-13);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-12);
}

TEST(LogGamma, PolesRejected) {
    EXPECT_THROW(complex_log_gamma(C(0, 0)), DomainError);
    EXPECT_THROW(complex_log_gamma(C(-3, 0)), DomainError);
    EXPECT_NO_THROW(complex_log_gamma(C(-3, 1e-9)));
}

TEST(Rules, GaussLegendreExactForPolynomials) {
    auto r = gauss_legendre_rule(32);
    for (int p = 0; p <= 20; p += 2) {
        double s = 0;
        for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], p);
        EXPECT_NEAR(s, 2.0 / (p + 1), 1e-14);
    }
}

TEST(Quadrature, GaussianIntegrand) {
    QuadratureConfig cfg;
    auto f = [](double w) { return C(std::exp(-0.5 * w * w), 0.0); };
    auto r = fourier_quadrature(f, cfg);
    EXPECT_NEAR(r.value, 0.3989422804014327, 1e-12);
    EXPECT_LT(r.error_estimate, 1e-9);
    QuadratureHints h;
    h.conjugate_symmetric = true;
    EXPECT_NEAR(fourier_quadrature(f, cfg, h).value, 0.3989422804014327, 1e-12);
}

TEST(Quadrature, TanhSinhRule) {
    QuadratureConfig cfg;
    cfg.rule = QuadratureRule::tanh_sinh;
    auto f = [](double w) { return C(std::exp(-0.5 * w * w), 0.0); };
    EXPECT_NEAR(fourier_quadrature(f, cfg).value, 0.3989422804014327, 1e-10);
}

TEST(Quadrature, SymmetricIntegrandHasRealResult) {
    QuadratureConfig cfg;
    // characteristic function of N(0.3, 0.2^2): f(-w) = conj f(w)
    auto f = [](double w) { return std::exp(C(-0.02 * w * w, 0.3 * w)); };
    auto r = fourier_quadrature(f, cfg);
    EXPECT_LT(std::abs(r.imag), 1e-10);
    // (1/2pi) int e^{-a w^2} cos(bw) = exp(-b^2/4a) / (2 sqrt(pi a))
    EXPECT_NEAR(r.value, std::exp(-0.09 / 0.08) / (2 * std::sqrt(std::numbers::pi * 0.02)), 1e-10);
}

TEST(Quadrature, TwoDimensionalGaussian) {
    QuadratureConfig cfg;
    auto f = [](double a, double b) { return C(std::exp(-0.5 * (a * a + 0.25 * b * b)), 0.0); };
    auto r = fourier_quadrature_2d(f, cfg);
    // 2 pi * 2 / (4 pi^2)
    EXPECT_NEAR(r.value, 1.0 / std::numbers::pi, 1e-10);
}

TEST(Quadrature, SlowDecayHitsTruncation) {
    QuadratureConfig cfg;
    cfg.truncation = 200;
    auto f = [](double w) { return C(1.0 / (1.0 + std::abs(w)), 0.0); };
    try {
        fourier_quadrature(f, cfg);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("truncation"), std::string::npos);
    }
}

TEST(Quadrature, NodeDoublingIsStable) {
    QuadratureConfig a, b;
    b.nodes = 64;
    auto f = [](double w) { return std::exp(C(-0.0002 * w * w, 0.01 * w)) / C(1.0 + 0.0001 * w * w, 0.0); };
    EXPECT_NEAR(fourier_quadrature(f, a).value, fourier_quadrature(f, b).value, 1e-8);
}

TEST(Quadrature, ConfigValidated) {
    QuadratureConfig cfg;
    cfg.nodes = 16;
    auto f = [](double) { return C(0.0, 0.0); };
    EXPECT_THROW(fourier_quadrature(f, cfg), ParameterError);
    cfg = QuadratureConfig{};
    cfg.tolerance = 0;
    EXPECT_THROW(fourier_quadrature(f, cfg), ParameterError);
}
