#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "dalm/errors.hpp"
#include "dalm/parallel.hpp"

namespace dalm {

enum class QuadratureRule { gauss_legendre, tanh_sinh };

// Composite rule: panels graded near the origin (and near the cone edges
// |d| = s in 2-D), widened up to panel_width, extended outward until the
// tail estimate drops below tolerance * |integral| or truncation is hit.
struct QuadratureConfig {
    QuadratureRule rule = QuadratureRule::gauss_legendre;
    double truncation = 5000.0; // L, hard limit per axis
    std::size_t nodes = 32;     // nodes per panel per axis
    double panel_width = 16.0;
    double tolerance = 1e-10;
    double cone_margin = 30.0;
    bool error_estimate = true;

    void validate() const {
        if (!(truncation > 0)) throw ParameterError("quadrature: truncation must be > 0");
        if (nodes < 32) throw ParameterError("quadrature: need at least 32 nodes per axis");
        if (!(panel_width > 0)) throw ParameterError("quadrature: panel width must be > 0");
        if (!(tolerance > 0)) throw ParameterError("quadrature: tolerance must be > 0");
        if (!(cone_margin > 0)) throw ParameterError("quadrature: cone margin must be > 0");
    }
};

struct QuadratureHints {
    double feature_scale = 0.5; // first panel width near singular lines
    double frequency = 0.0;     // oscillation frequency along the (outer) axis
    double frequency_inner = 0.0;
    bool conjugate_symmetric = false; // f(-w) = conj f(w)
    double reference = 0.0; // absolute magnitude the tolerance may refer to instead of |integral|
};

struct QuadratureResult {
    double value = 0.0;
    double imag = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

struct PanelRule {
    std::vector<double> x; // nodes on [-1, 1]
    std::vector<double> w;
};

inline PanelRule gauss_legendre_rule(std::size_t n) {
    PanelRule r;
    r.x.resize(n);
    r.w.resize(n);
    const double pi = std::numbers::pi;
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        double p0 = 1.0, p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = p2;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    return r;
}

inline PanelRule tanh_sinh_rule(std::size_t n) {
    PanelRule r;
    const double half_pi = 0.5 * std::numbers::pi;
    long k = static_cast<long>(n / 2);
    double h = 3.2 / static_cast<double>(std::max<long>(k, 1));
    for (long j = -k; j <= k; ++j) {
        if (static_cast<std::size_t>(r.x.size()) == n) break;
        double t = h * static_cast<double>(j);
        double s = half_pi * std::sinh(t);
        double c = std::cosh(s);
        r.x.push_back(std::tanh(s));
        r.w.push_back(h * half_pi * std::cosh(t) / (c * c));
    }
    return r;
}

inline PanelRule panel_rule(QuadratureRule rule, std::size_t n) {
    return rule == QuadratureRule::gauss_legendre ? gauss_legendre_rule(n) : tanh_sinh_rule(n);
}

namespace detail {

// breakpoints of [a, b], panels growing geometrically away from graded ends
inline std::vector<double> graded_breaks(double a, double b, bool grade_a, bool grade_b, double h0, double hmax) {
    std::vector<double> left{a}, right{b};
    double wl = grade_a ? std::min(h0, hmax) : hmax;
    double wr = grade_b ? std::min(h0, hmax) : hmax;
    double xl = a, xr = b;
    while (xr - xl > wl + wr) {
        if (wl <= wr) {
            xl += wl;
            left.push_back(xl);
            wl = std::min(2.0 * wl, hmax);
        } else {
            xr -= wr;
            right.push_back(xr);
            wr = std::min(2.0 * wr, hmax);
        }
    }
    if (xr - xl > std::max(wl, wr)) left.push_back(0.5 * (xl + xr));
    left.insert(left.end(), right.rbegin(), right.rend());
    return left;
}

inline double step_cap(const QuadratureConfig& cfg, double frequency) {
    double h = cfg.panel_width;
    if (frequency > 0) h = std::min(h, 6.0 * std::numbers::pi / frequency);
    return h;
}

struct Rules {
    PanelRule full, half;
    Rules(const QuadratureConfig& cfg)
        : full(panel_rule(cfg.rule, cfg.nodes)), half(panel_rule(cfg.rule, cfg.nodes / 2)) {}
};

// outward march over [0, inf) in panels; panel(a, b) returns {sum, half_sum, mass}
// norm converts raw sums to the reported scale (reference is on that scale)
template <class Panel>
void march(const QuadratureConfig& cfg, double h0, double hmax, double norm, double reference, Panel&& panel,
           std::complex<double>& acc, std::complex<double>& acc_half, double& tail) {
    double a = 0.0, w = std::min(h0, hmax);
    int quiet = 0;
    for (;;) {
        double b = a + w;
        auto [sum, half, mass] = panel(a, b);
        acc += sum;
        acc_half += half;
        tail = mass / (b - a) * b;
        if (b >= 4.0 * h0 && tail * norm <= cfg.tolerance * std::max(std::abs(acc) * norm, reference)) {
            if (++quiet >= 2) return;
        } else {
            quiet = 0;
        }
        if (b >= cfg.truncation) {
            std::ostringstream os;
            os << "fourier quadrature: boundary mass " << tail * norm << " above tolerance at |w| = " << b
               << "; increase the truncation L";
            throw NumericalError(os.str());
        }
        a = b;
        w = std::min(2.0 * w, hmax);
    }
}

struct PanelSums {
    std::complex<double> sum, half;
    double mass;
};

} // namespace detail

// (1/2pi) * integral over R of f; returns the real part
inline QuadratureResult fourier_quadrature(const std::function<std::complex<double>(double)>& f,
                                           const QuadratureConfig& cfg, const QuadratureHints& hints = {}) {
    using C = std::complex<double>;
    cfg.validate();
    detail::Rules rules(cfg);
    QuadratureResult res;
    const bool sym = hints.conjugate_symmetric;
    auto panel = [&](double a, double b) {
        double c = 0.5 * (a + b), r = 0.5 * (b - a);
        detail::PanelSums s{0.0, 0.0, 0.0};
        auto eval = [&](double x) {
            C v = f(x);
            if (!sym) v += f(-x);
            return v;
        };
        for (std::size_t i = 0; i < rules.full.x.size(); ++i) {
            C v = eval(c + r * rules.full.x[i]) * (r * rules.full.w[i]);
            s.sum += v;
            s.mass += std::abs(v);
        }
        if (cfg.error_estimate)
            for (std::size_t i = 0; i < rules.half.x.size(); ++i)
                s.half += eval(c + r * rules.half.x[i]) * (r * rules.half.w[i]);
        res.evaluations += (rules.full.x.size() + (cfg.error_estimate ? rules.half.x.size() : 0)) * (sym ? 1 : 2);
        return s;
    };
    C acc = 0.0, acc_half = 0.0;
    double tail = 0.0;
    const double norm = (sym ? 2.0 : 1.0) / (2.0 * std::numbers::pi);
    detail::march(cfg, hints.feature_scale, detail::step_cap(cfg, hints.frequency), norm, hints.reference, panel, acc,
                  acc_half, tail);
    if (sym) {
        res.value = norm * acc.real();
        res.imag = 0.0;
        res.error_estimate = norm * (tail + (cfg.error_estimate ? std::abs(acc.real() - acc_half.real()) : 0.0));
    } else {
        res.value = norm * acc.real();
        res.imag = norm * acc.imag();
        res.error_estimate = norm * (tail + (cfg.error_estimate ? std::abs(acc - acc_half) : 0.0));
    }
    return res;
}

// (1/4pi^2) * integral over R^2 of f(w1, w2), in rotated coordinates
// s = w1 + w2, d = w1 - w2; inner range |d| <= |s| + cone_margin.
inline QuadratureResult fourier_quadrature_2d(const std::function<std::complex<double>(double, double)>& f,
                                              const QuadratureConfig& cfg, const QuadratureHints& hints = {}) {
    using C = std::complex<double>;
    cfg.validate();
    detail::Rules rules(cfg);
    QuadratureResult res;
    const bool sym = hints.conjugate_symmetric;
    const double h0 = hints.feature_scale;
    const double hd = detail::step_cap(cfg, hints.frequency_inner);
    const double M = cfg.cone_margin;

    // inner integral over d at fixed s >= 0 (and -s if not symmetric)
    auto inner = [&](double s, C& full, C& half, double& mass, std::size_t& evals) {
        std::vector<double> br;
        auto seg = [&](double a, double b, bool ga, bool gb) {
            auto part = detail::graded_breaks(a, b, ga, gb, h0, hd);
            if (!br.empty()) part.erase(part.begin());
            br.insert(br.end(), part.begin(), part.end());
        };
        seg(-s - M, -s, false, true);
        if (s > 0) seg(-s, s, true, true);
        seg(s, s + M, true, false);
        full = 0.0;
        half = 0.0;
        mass = 0.0;
        evals = 0;
        auto eval = [&](double d) {
            C v = f(0.5 * (s + d), 0.5 * (s - d));
            if (!sym) v += f(0.5 * (-s + d), 0.5 * (-s - d));
            return v;
        };
        for (std::size_t p = 0; p + 1 < br.size(); ++p) {
            double c = 0.5 * (br[p] + br[p + 1]), r = 0.5 * (br[p + 1] - br[p]);
            for (std::size_t i = 0; i < rules.full.x.size(); ++i) {
                C v = eval(c + r * rules.full.x[i]) * (r * rules.full.w[i]);
                full += v;
                mass += std::abs(v);
            }
            if (cfg.error_estimate)
                for (std::size_t i = 0; i < rules.half.x.size(); ++i)
                    half += eval(c + r * rules.half.x[i]) * (r * rules.half.w[i]);
            evals += (rules.full.x.size() + (cfg.error_estimate ? rules.half.x.size() : 0)) * (sym ? 1 : 2);
        }
    };

    const std::size_t n_outer = rules.full.x.size();
    std::vector<C> full(n_outer), half(n_outer);
    std::vector<double> mass(n_outer);
    std::vector<std::size_t> evals(n_outer);
    auto panel = [&](double a, double b) {
        double c = 0.5 * (a + b), r = 0.5 * (b - a);
        parallel_blocks(n_outer, [&](std::size_t i) { inner(c + r * rules.full.x[i], full[i], half[i], mass[i], evals[i]); });
        detail::PanelSums s{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < n_outer; ++i) {
            double wt = r * rules.full.w[i] * 0.5; // Jacobian 1/2
            s.sum += full[i] * wt;
            s.half += half[i] * wt;
            s.mass += mass[i] * wt;
            res.evaluations += evals[i];
        }
        return s;
    };

    C acc = 0.0, acc_half = 0.0;
    double tail = 0.0;
    const double norm = (sym ? 2.0 : 1.0) / (4.0 * std::numbers::pi * std::numbers::pi);
    detail::march(cfg, h0, detail::step_cap(cfg, hints.frequency), norm, hints.reference, panel, acc, acc_half, tail);
    if (sym) {
        res.value = norm * acc.real();
        res.error_estimate = norm * (tail + (cfg.error_estimate ? std::abs(acc.real() - acc_half.real()) : 0.0));
    } else {
        res.value = norm * acc.real();
        res.imag = norm * acc.imag();
        res.error_estimate = norm * (tail + (cfg.error_estimate ? std::abs(acc - acc_half) : 0.0));
    }
    return res;
}

} // namespace dalm
