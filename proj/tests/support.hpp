#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dalm/calibration.hpp"

namespace dalm::test {

inline AffineComponentSpec cir(double lambda, double theta, double eta, double ell = 0, double mu = 0,
                               double x0 = 1) {
    AffineComponentSpec c;
    c.lambda = lambda;
    c.theta = theta;
    c.eta = eta;
    c.ell = ell;
    c.mu = mu;
    c.x0 = x0;
    return c;
}

// one rate factor, one spread factor; same as samples/config.json
inline ProductAffineSpec sample_driver() {
    ProductAffineSpec d;
    d.components = {cir(0.2, 1.0, 0.15), cir(1.0, 1.0, 0.02)};
    d.d1 = d.d2 = 1;
    return d;
}

// continuously compounded flat rate r and spread s
inline InitialCurves flat_curves(const TenorGrid& g, double r, double s) {
    std::vector<double> rf(g.size()), df(g.size());
    for (std::size_t k = 1; k <= g.size(); ++k) {
        rf[k - 1] = std::exp(-r * g.date(k));
        df[k - 1] = std::exp(-(r + s) * g.date(k));
    }
    return InitialCurves(rf, df);
}

inline CalibratedModel sample_model() {
    auto g = TenorGrid::uniform(8, 0.5);
    return calibrate(sample_driver(), g, flat_curves(g, 0.04, 0.015));
}

// simple forward rates in [rlo, rhi], spreads in [0, smax]
inline InitialCurves random_curves(std::mt19937_64& rng, const TenorGrid& g, double rlo = 0.01, double rhi = 0.06,
                                   double smax = 0.03) {
    std::uniform_real_distribution<double> R(rlo, rhi), S(0.0, smax);
    std::vector<double> rf(g.size()), df(g.size());
    double b = 1.0, bb = 1.0;
    for (std::size_t k = 1; k <= g.size(); ++k) {
        double d = g.date(k) - g.date(k - 1);
        b /= 1 + d * R(rng);
        bb = bb * (b / (k == 1 ? 1.0 : rf[k - 2])) / (1 + d * S(rng));
        rf[k - 1] = b;
        df[k - 1] = bb;
    }
    return InitialCurves(rf, df);
}

} // namespace dalm::test
