#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "dalm/cox_simulator.hpp"
#include "support.hpp"

using namespace dalm;
using dalm::test::cir;

namespace {

SimConfig small_config(std::size_t n = 20000, std::size_t steps = 16) {
    SimConfig cfg;
    cfg.n_paths = n;
    cfg.steps_per_period = steps;
    cfg.seed = 20240611;
    return cfg;
}

const CalibratedModel& model() {
    static const CalibratedModel m = test::sample_model();
    return m;
}

} // namespace

TEST(Simulation, Reproducible) {
    auto a = simulate(model(), small_config(3000));
    auto b = simulate(model(), small_config(3000));
    for (std::size_t p = 0; p < a.size(); p += 97) {
        EXPECT_EQ(a.tau(p), b.tau(p));
        EXPECT_EQ(a.state(p, 5)[0], b.state(p, 5)[0]);
    }
    auto cfg = small_config(3000);
    cfg.seed = 1;
    auto c = simulate(model(), cfg);
    EXPECT_NE(a.state(0, 5)[0], c.state(0, 5)[0]);
}

TEST(Simulation, IndependentOfWorkerCount) {
    auto a = simulate(model(), small_config(9000));
    ::setenv("DALM_THREADS", "1", 1);
    auto b = simulate(model(), small_config(9000));
    ::unsetenv("DALM_THREADS");
    std::vector<double> va(a.size()), vb(b.size());
    for (std::size_t p = 0; p < a.size(); ++p) {
        va[p] = a.state(p, 8)[1];
        vb[p] = b.state(p, 8)[1];
    }
    EXPECT_EQ(sample_mean(va).value, sample_mean(vb).value);
}

TEST(Simulation, ConfigValidated) {
    auto cfg = small_config();
    cfg.n_paths = 0;
    EXPECT_THROW(simulate(model(), cfg), ParameterError);
    cfg = small_config();
    cfg.steps_per_period = 0;
    EXPECT_THROW(simulate(model(), cfg), ParameterError);
}

TEST(Simulation, ExponentialMomentMatchesClosedForm) {
    ProductAffineSpec d;
    d.components = {cir(0.8, 0.6, 0.2, 0.5, 0.3, 0.4), cir(0.3, 1.0, 0.1, 0, 0, 1.2)};
    d.d1 = d.d2 = 1;
    std::vector<double> dates{0.0, 0.5, 1.0, 2.0};
    auto paths = simulate_driver(d, dates, small_config(40000, 64));
    std::vector<double> u{0.4, -0.5};
    for (std::size_t j = 1; j < dates.size(); ++j) {
        std::vector<double> v(paths.n_paths);
        for (std::size_t p = 0; p < v.size(); ++p) {
            auto x = paths.state(p, j);
            v[p] = std::exp(u[0] * x[0] + u[1] * x[1]);
        }
        auto e = sample_mean(v);
        double expect = std::exp(ProductAtHorizon(d, dates[j]).log_mgf<double>(u, d.x0()));
        EXPECT_LT(std::abs(e.value - expect), 3 * e.standard_error) << "date " << j;
    }
}

TEST(Simulation, ExactSchemeMatchesMoments) {
    ProductAffineSpec d;
    d.components = {cir(0.5, 1.0, 0.3, 0, 0, 0.5), cir(1.0, 0.5, 0.2, 0, 0, 1.0)};
    d.d1 = d.d2 = 1;
    auto cfg = small_config(40000);
    cfg.scheme = Scheme::exact_cir;
    std::vector<double> dates{0.0, 1.0, 3.0};
    auto paths = simulate_driver(d, dates, cfg);
    for (std::size_t j = 1; j < 3; ++j) {
        std::vector<double> v(paths.n_paths);
        for (std::size_t p = 0; p < v.size(); ++p) v[p] = paths.state(p, j)[0];
        auto e = sample_mean(v);
        double mean = 1.0 + (0.5 - 1.0) * std::exp(-0.5 * dates[j]);
        EXPECT_LT(std::abs(e.value - mean), 3 * e.standard_error);
    }
    auto jumpy = d;
    jumpy.components[0].ell = 0.5;
    jumpy.components[0].mu = 0.2;
    EXPECT_THROW(simulate_driver(jumpy, dates, cfg), ParameterError);
}

TEST(Simulation, EulerBiasShrinksWithStepSize) {
    // coupled paths: coarse levels reuse summed fine Brownian increments
    auto c = cir(0.5, 1.0, 0.3, 0, 0, 0.2);
    const int fine = 256, n = 20000;
    const double T = 2.0, h = T / fine;
    const std::vector<int> ratios{1, 8, 64};
    std::vector<std::vector<double>> x(ratios.size(), std::vector<double>(n));
    std::mt19937_64 eng(7);
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> state(ratios.size()), acc(ratios.size());
    for (int p = 0; p < n; ++p) {
        std::fill(state.begin(), state.end(), c.x0);
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int s = 1; s <= fine; ++s) {
            double dw = std::sqrt(h) * N(eng);
            for (std::size_t l = 0; l < ratios.size(); ++l) {
                acc[l] += dw;
                if (s % ratios[l] == 0) {
                    state[l] = euler_step(c, state[l], h * ratios[l], acc[l], 0.0);
                    acc[l] = 0.0;
                }
            }
        }
        for (std::size_t l = 0; l < ratios.size(); ++l) x[l][p] = std::max(state[l], 0.0);
    }
    auto e0 = sample_mean(x[0]), e1 = sample_mean(x[1]), e2 = sample_mean(x[2]);
    double exact = 1.0 + (0.2 - 1.0) * std::exp(-0.5 * T);
    EXPECT_LT(std::abs(e0.value - exact), 3 * e0.standard_error);
    EXPECT_LT(std::abs(e1.value - e0.value), std::abs(e2.value - e0.value));
    EXPECT_LT(std::abs(e1.value - e0.value), 5e-3);
}

TEST(DefaultTime, ZeroSpreadNeverDefaults) {
    auto g = TenorGrid::uniform(6, 0.5);
    auto m = calibrate(test::sample_driver(), g, test::flat_curves(g, 0.03, 0.0));
    auto b = simulate(m, small_config(2000));
    for (std::size_t p = 0; p < b.size(); ++p) {
        EXPECT_TRUE(b.survived(p, m.size()));
        EXPECT_TRUE(std::isinf(b.tau(p)));
    }
}

TEST(DefaultTime, HazardNondecreasingInMonotoneRegime) {
    auto b = simulate(model(), small_config());
    EXPECT_EQ(b.monotonicity_violations(), 0u);
    for (std::size_t p = 0; p < b.size(); p += 13) {
        for (std::size_t j = 1; j < b.n_dates(); ++j) EXPECT_GE(b.hazard(p, j), b.hazard(p, j - 1));
        if (std::isfinite(b.tau(p))) {
            EXPECT_GT(b.tau(p), 0.0);
            EXPECT_LE(b.tau(p), model().grid().horizon());
        }
    }
}

TEST(DefaultTime, HighVolatilityBreaksMonotonicity) {
    // the affine hazard at tenor dates is not pathwise monotone in general
    ProductAffineSpec d;
    d.components = {cir(0.2, 1.0, 0.15), cir(0.3, 1.0, 0.6)};
    d.d1 = d.d2 = 1;
    auto g = TenorGrid::uniform(8, 0.5);
    auto m = calibrate(d, g, test::flat_curves(g, 0.04, 0.03));
    auto b = simulate(m, small_config(5000));
    EXPECT_GT(b.monotonicity_violations(), 0u);
}

TEST(DefaultTime, SurvivalMatchesModel) {
    auto b = simulate(model(), small_config(40000));
    std::vector<double> v(b.size());
    for (std::size_t k = 1; k <= model().size(); ++k) {
        for (std::size_t p = 0; p < b.size(); ++p) v[p] = b.survived(p, k) ? 1.0 : 0.0;
        auto e = sample_mean(v);
        EXPECT_LT(std::abs(e.value - terminal_survival_probability(model(), k)), 3 * e.standard_error) << k;
    }
}

TEST(DefaultTime, InterpolationDoesNotMoveTenorIndicators) {
    auto lin = simulate(model(), small_config(5000));
    auto pc = rebuild_default_times(model(), lin, Interpolation::piecewise_constant);
    for (std::size_t p = 0; p < lin.size(); ++p) {
        for (std::size_t k = 0; k <= model().size(); ++k) EXPECT_EQ(lin.survived(p, k), pc.survived(p, k));
        if (std::isfinite(lin.tau(p))) {
            EXPECT_LE(lin.tau(p), pc.tau(p));
        }
    }
}

TEST(MonteCarlo, ForwardMeasureDensityHasUnitMean) {
    auto b = simulate(model(), small_config());
    for (std::size_t k = 1; k <= model().size(); ++k) {
        for (std::size_t j = 0; j <= model().size(); j += 2) {
            auto e = mc_expect(model(), b, Measure::forward, k, j, [](const PathBundle&, std::size_t) { return 1.0; });
            EXPECT_LT(std::abs(e.value - 1.0), 3 * e.standard_error + 1e-14) << k << " " << j;
        }
    }
}

TEST(MonteCarlo, ForwardBondPrice) {
    // E_i[B(T_i,T_m)] = B(0,T_m)/B(0,T_i)
    auto b = simulate(model(), small_config());
    auto c = aggregate_coefficients(model(), 2, 6, Family::risk_free);
    auto e = mc_expect_forward(model(), b, 2,
                               [&](const PathBundle& pb, std::size_t p) { return std::exp(c.eval(pb.state(p, 2))); });
    double expect = model().curves().bond(6) / model().curves().bond(2);
    EXPECT_LT(std::abs(e.value - expect), 3 * e.standard_error);
}

TEST(MonteCarlo, SampleMeanAndErrors) {
    std::vector<double> v{1, 2, 3, 4};
    auto e = sample_mean(v);
    EXPECT_DOUBLE_EQ(e.value, 2.5);
    EXPECT_NEAR(e.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
    EXPECT_THROW(sample_mean(std::vector<double>{}), ParameterError);
    auto b = simulate(model(), small_config(100));
    EXPECT_THROW(mc_price_bond_option(model(), b, 3, 3, 0.9, 0.4), IndexError);
    EXPECT_THROW(mc_price_cds(model(), b, 0, 0.4, 0.0), IndexError);
    EXPECT_THROW(mc_price_vulnerable_option(model(), b, 1, 4, 0.9, 1.5), ParameterError);
}
