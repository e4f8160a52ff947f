#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dalm/affine.hpp"

using namespace dalm;

namespace {

AffineComponentSpec cir(double lambda, double theta, double eta, double ell = 0, double mu = 0, double x0 = 1) {
    AffineComponentSpec c;
    c.lambda = lambda;
    c.theta = theta;
    c.eta = eta;
    c.ell = ell;
    c.mu = mu;
    c.x0 = x0;
    return c;
}

AffineComponentSpec random_spec(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto c = cir(2.0 * U(rng), 1.5 * U(rng), 0.6 * U(rng));
    if (U(rng) < 0.5) {
        c.ell = U(rng);
        c.mu = 0.05 + 0.5 * U(rng);
    }
    c.x0 = 2.0 * U(rng);
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

} // namespace

TEST(Exponents, PlainCirOracle) {
    // independent ODE oracle (scipy, rtol 1e-13)
    auto e = exponents_analytic(cir(1, 1, 0.5), 0.1, 1.0);
    EXPECT_NEAR(e.phi, 0.0642325571553207, 1e-13);
    EXPECT_NEAR(e.psi, 0.037988613290252, 1e-13);
    EXPECT_NEAR(component_domain_bound(cir(1, 1, 0.5), 1.0), 3.163953414, 1e-9);
}

TEST(Exponents, JumpOracle) {
    auto e = exponents_analytic(cir(0.7, 0.5, 0.3, 0.4, 0.6), 0.4, 2.0);
    EXPECT_NEAR(e.phi, 0.284310698585715, 1e-12);
    EXPECT_NEAR(e.psi, 0.106924687988545, 1e-12);
}

TEST(Exponents, ZeroMeanReversionLimit) {
    auto e = exponents_analytic(cir(0, 0.5, 0.3, 0.4, 0.6), 0.4, 2.0);
    EXPECT_NEAR(e.phi, 0.280095292995809, 1e-12);
    // lambda = 0: psi = u / (1 - 2 eta^2 t u)
    EXPECT_NEAR(e.psi, 0.4 / (1 - 2 * 0.09 * 2 * 0.4), 1e-14);
}

TEST(Exponents, ZeroIsFixedPoint) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        auto c = random_spec(rng);
        auto e = exponents_analytic(c, 0.0, 0.1 + 3.0 * i / 50.0);
        EXPECT_EQ(e.phi, 0.0);
        EXPECT_EQ(e.psi, 0.0);
    }
}

TEST(Exponents, HorizonZeroIsIdentity) {
    auto e = exponents_analytic(cir(0.7, 0.5, 0.3, 0.4, 0.6), 0.3, 0.0);
    EXPECT_EQ(e.phi, 0.0);
    EXPECT_DOUBLE_EQ(e.psi, 0.3);
}

TEST(Exponents, JumpDomainBound) {
    auto c = cir(1, 0, 0, 1, 2);
    EXPECT_DOUBLE_EQ(component_domain_bound(c, 1.0), 0.5);
    EXPECT_THROW(exponents_analytic(c, 0.5, 1.0), DomainError);
    EXPECT_THROW(exponents_ode(c, 0.5, 1.0), DomainError);
    auto a = exponents_analytic(c, 0.5 - 1e-6, 1.0);
    auto o = exponents_ode(c, 0.5 - 1e-6, 1.0);
    EXPECT_NEAR(a.phi, 12.6636894, 1e-6);
    EXPECT_NEAR(o.phi, a.phi, 1e-6 * a.phi);
}

TEST(Exponents, DomainErrorCarriesBound) {
    auto c = cir(1, 1, 0.5);
    try {
        exponents_analytic(c, 4.0, 1.0);
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NEAR(e.bound(), 3.163953414, 1e-9);
    }
}

TEST(Exponents, InvalidSpecRejected) {
    EXPECT_THROW(exponents_analytic(cir(-1, 1, 0.5), 0.1, 1.0), ParameterError);
    EXPECT_THROW(exponents_analytic(cir(1, 1, 0.5, 1.0, 0.0), 0.1, 1.0), ParameterError);
}

TEST(Exponents, AnalyticMatchesOde) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        auto c = random_spec(rng);
        double t = 0.05 + 4.0 * U(rng);
        double b = component_domain_bound(c, t);
        double hi = std::isfinite(b) ? 0.9 * b : 3.0;
        double u = -3.0 + (hi + 3.0) * U(rng);
        auto a = exponents_analytic(c, u, t);
        auto o = exponents_ode(c, u, t);
        EXPECT_LT(rel(o.phi, a.phi), 1e-8) << i;
        EXPECT_LT(rel(o.psi, a.psi), 1e-8) << i;
    }
}

TEST(Exponents, FlowProperty) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        auto c = random_spec(rng);
        double t = 0.1 + 3.0 * U(rng), s = t * U(rng);
        double b = component_domain_bound(c, t);
        double u = (std::isfinite(b) ? 0.8 * b : 2.0) * (2 * U(rng) - 1);
        auto full = exponents_analytic(c, u, t);
        auto first = exponents_analytic(c, u, s);
        auto rest = exponents_analytic(c, first.psi, t - s);
        EXPECT_NEAR(full.phi, first.phi + rest.phi, 1e-9 * (1 + std::abs(full.phi)));
        EXPECT_NEAR(full.psi, rest.psi, 1e-9 * (1 + std::abs(full.psi)));
    }
}

TEST(Exponents, OrderPreservingAndConvex) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        auto c = random_spec(rng);
        double t = 0.1 + 3.0 * U(rng);
        double b = component_domain_bound(c, t);
        double hi = std::isfinite(b) ? 0.9 * b : 2.0;
        double u = -2 + (hi + 2) * U(rng), v = -2 + (hi + 2) * U(rng);
        if (u > v) std::swap(u, v);
        auto eu = exponents_analytic(c, u, t), ev = exponents_analytic(c, v, t);
        EXPECT_LE(eu.phi, ev.phi + 1e-12);
        EXPECT_LE(eu.psi, ev.psi + 1e-12);
        double a = U(rng);
        auto em = exponents_analytic(c, a * u + (1 - a) * v, t);
        EXPECT_LE(em.phi, a * eu.phi + (1 - a) * ev.phi + 1e-9);
        EXPECT_LE(em.psi, a * eu.psi + (1 - a) * ev.psi + 1e-9);
    }
}

TEST(Exponents, ComplexArgumentReducesToReal) {
    auto c = cir(0.7, 0.5, 0.3, 0.4, 0.6);
    auto r = exponents_analytic(c, 0.4, 2.0);
    auto z = exponents_analytic(c, cplx(0.4, 0.0), 2.0);
    EXPECT_NEAR(z.phi.real(), r.phi, 1e-14);
    EXPECT_NEAR(z.psi.real(), r.psi, 1e-14);
    EXPECT_EQ(z.phi.imag(), 0.0);
    // conjugate symmetry
    auto p = exponents_analytic(c, cplx(0.2, 3.0), 2.0);
    auto m = exponents_analytic(c, cplx(0.2, -3.0), 2.0);
    EXPECT_NEAR(p.phi.real(), m.phi.real(), 1e-13);
    EXPECT_NEAR(p.phi.imag(), -m.phi.imag(), 1e-13);
}

TEST(Product, BlockWithZeroArgumentContributesNothing) {
    ProductAffineSpec spec;
    spec.components = {cir(1, 1, 0.5), cir(0.7, 0.5, 0.3, 0.4, 0.6)};
    spec.d1 = spec.d2 = 1;
    std::vector<double> u{0.1, 0.0};
    auto e = product_exponents(spec, u, 1.0);
    auto first = exponents_analytic(spec.components[0], 0.1, 1.0);
    EXPECT_DOUBLE_EQ(e.phi, first.phi);
    EXPECT_DOUBLE_EQ(e.psi[0], first.psi);
    EXPECT_EQ(e.psi[1], 0.0);
}

TEST(Product, SumOfComponents) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        ProductAffineSpec spec;
        spec.components = {random_spec(rng), random_spec(rng), random_spec(rng)};
        spec.d1 = 2;
        spec.d2 = 1;
        double t = 0.2 + 2 * U(rng);
        std::vector<double> u(3);
        double phi = 0;
        for (int j = 0; j < 3; ++j) {
            double b = component_domain_bound(spec.components[j], t);
            u[j] = (std::isfinite(b) ? 0.5 * b : 1.0) * (2 * U(rng) - 1);
            phi += exponents_analytic(spec.components[j], u[j], t).phi;
        }
        EXPECT_NEAR(product_exponents(spec, u, t).phi, phi, 1e-14 * (1 + std::abs(phi)));
    }
}

TEST(Martingale, EndpointsAndOrdering) {
    ProductAffineSpec spec;
    spec.components = {cir(1, 1, 0.5, 0, 0, 0.8), cir(0.5, 1, 0.1, 0, 0, 1.2)};
    spec.d1 = spec.d2 = 1;
    std::vector<double> x{0.8, 1.2}, zero{0, 0}, u{0.1, 0.05}, v{0.2, 0.05};
    EXPECT_DOUBLE_EQ(martingale_value(spec, x, zero, 0.3, 2.0), 1.0);
    EXPECT_NEAR(martingale_value(spec, x, u, 2.0, 2.0), std::exp(0.1 * 0.8 + 0.05 * 1.2), 1e-15);
    EXPECT_GE(martingale_value(spec, x, u, 0.0, 2.0), 1.0);
    EXPECT_LE(martingale_value(spec, x, u, 0.5, 2.0), martingale_value(spec, x, v, 0.5, 2.0));
    EXPECT_THROW(martingale_value(spec, x, u, 2.5, 2.0), ParameterError);
}

TEST(GammaBound, ProbeAtZeroIsOne) {
    ProductAffineSpec spec;
    spec.components = {cir(1, 1, 0.5), cir(0.5, 1, 0.1)};
    spec.d1 = spec.d2 = 1;
    std::vector<double> probes{0.0};
    EXPECT_DOUBLE_EQ(gamma_x_lower_bound(spec, 2.0, probes), 1.0);
}

TEST(GammaBound, GrowsTowardDomainEdge) {
    ProductAffineSpec spec;
    spec.components = {cir(1, 1, 0.5), cir(1, 1, 0.5)};
    spec.d1 = spec.d2 = 1;
    double b = component_domain_bound(spec.components[0], 2.0);
    std::vector<double> dir{1.0, 0.0};
    double prev = 1.0;
    for (double f : {0.5, 0.9, 0.99, 0.999}) {
        std::vector<double> probe{f * b};
        double g = gamma_x_lower_bound(spec, 2.0, probe, dir);
        EXPECT_GT(g, prev);
        prev = g;
    }
    EXPECT_GT(prev, 100.0);
}

TEST(GammaBound, DeterministicDriver) {
    ProductAffineSpec spec;
    spec.components = {cir(0.5, 2, 0, 0, 0, 1), cir(0, 0, 0, 0, 0, 0)};
    spec.d1 = spec.d2 = 1;
    std::vector<double> dir{1.0, 0.0}, probe{0.3};
    // x(T) = theta + (x0 - theta) e^{-lambda T}
    double xt = 2 + (1 - 2) * std::exp(-0.5 * 2.0);
    EXPECT_NEAR(gamma_x_lower_bound(spec, 2.0, probe, dir), std::exp(0.3 * xt), 1e-13);
}
