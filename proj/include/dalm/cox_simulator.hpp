#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dalm/affine.hpp"
#include "dalm/errors.hpp"
#include "dalm/model.hpp"
#include "dalm/parallel.hpp"
#include "dalm/term_model.hpp"

namespace dalm {

enum class Scheme { euler_full_truncation, exact_cir };
enum class Interpolation { linear, piecewise_constant };

struct SimConfig {
    std::size_t n_paths = 100000;
    std::size_t steps_per_period = 64;
    std::uint64_t seed = 20240611;
    Scheme scheme = Scheme::euler_full_truncation;
    Interpolation interpolation = Interpolation::linear;

    void validate() const {
        if (n_paths < 1) throw ParameterError("simulation: n_paths must be >= 1");
        if (steps_per_period < 1) throw ParameterError("simulation: steps_per_period must be >= 1");
    }
};

enum class Method { closed_form, fourier, monte_carlo };

inline const char* method_name(Method m) {
    switch (m) {
    case Method::closed_form: return "closed-form";
    case Method::fourier: return "fourier";
    case Method::monte_carlo: return "monte-carlo";
    }
    return "?";
}

struct PriceEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    Method method = Method::monte_carlo;
};

struct CdsEstimate {
    PriceEstimate protection_leg;
    double fee_leg = 0.0; // per unit spread
    PriceEstimate spread;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// per-path stream, independent of how paths are scheduled
inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(path + 0x632be59bd9b4e019ULL)));
}

// one full-truncation Euler step; dw ~ N(0, h), jump_sum = sum of jump sizes in the step
inline double euler_step(const AffineComponentSpec& c, double x, double h, double dw, double jump_sum) {
    double xp = x > 0 ? x : 0.0;
    return x + c.lambda * (c.theta - xp) * h + 2.0 * c.eta * std::sqrt(xp) * dw + jump_sum;
}

// exact transition of the diffusion (no jumps) over h
template <class Engine>
double exact_cir_step(const AffineComponentSpec& c, double x, double h, Engine& eng) {
    double e = std::exp(-c.lambda * h);
    if (c.eta == 0.0) return x * e + c.theta * (1.0 - e);
    double s2 = 4.0 * c.eta * c.eta; // squared diffusion coefficient
    double scale = c.lambda > 0 ? s2 * (-std::expm1(-c.lambda * h)) / (4.0 * c.lambda) : s2 * h / 4.0;
    double df = 4.0 * c.lambda * c.theta / s2;
    double nc = x * e / scale;
    long n = 0;
    if (nc > 0) n = std::poisson_distribution<long>(0.5 * nc)(eng);
    double shape = 0.5 * df + static_cast<double>(n);
    if (!(shape > 0)) return 0.0;
    return scale * 2.0 * std::gamma_distribution<double>(shape, 1.0)(eng);
}

// Driver states at the given dates (dates[0] = 0), row-major [path][date][component].
struct DriverPaths {
    std::size_t n_paths = 0, n_dates = 0, dim = 0;
    std::vector<double> states;
    std::vector<double> triggers; // Exp(1) draw per path

    std::span<const double> state(std::size_t p, std::size_t j) const {
        return {states.data() + (p * n_dates + j) * dim, dim};
    }
};

namespace detail {

constexpr std::size_t mc_block = 4096;

template <class Engine>
void simulate_one(const ProductAffineSpec& spec, std::span<const double> dates, const SimConfig& cfg, Engine& eng,
                  double* out) {
    const std::size_t d = spec.dim();
    std::vector<double> x = spec.x0();
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < d; ++i) out[i] = x[i];
    for (std::size_t j = 1; j < dates.size(); ++j) {
        double dt = dates[j] - dates[j - 1];
        if (cfg.scheme == Scheme::exact_cir) {
            for (std::size_t i = 0; i < d; ++i) x[i] = exact_cir_step(spec.components[i], x[i], dt, eng);
        } else {
            double h = dt / static_cast<double>(cfg.steps_per_period), sh = std::sqrt(h);
            for (std::size_t s = 0; s < cfg.steps_per_period; ++s) {
                for (std::size_t i = 0; i < d; ++i) {
                    const auto& c = spec.components[i];
                    double dw = c.eta > 0 ? sh * normal(eng) : 0.0;
                    double jumps = 0.0;
                    if (c.ell > 0) {
                        long n = std::poisson_distribution<long>(c.ell * h)(eng);
                        for (long q = 0; q < n; ++q) jumps += std::exponential_distribution<double>(1.0 / c.mu)(eng);
                    }
                    x[i] = euler_step(c, x[i], h, dw, jumps);
                }
            }
        }
        for (std::size_t i = 0; i < d; ++i) out[j * d + i] = x[i] > 0 ? x[i] : 0.0;
    }
}

} // namespace detail

inline DriverPaths simulate_driver(const ProductAffineSpec& spec, std::span<const double> dates,
                                   const SimConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (dates.empty() || dates[0] != 0.0) throw ParameterError("simulate_driver: dates must start at 0");
    for (std::size_t j = 1; j < dates.size(); ++j)
        if (!(dates[j] > dates[j - 1])) throw ParameterError("simulate_driver: dates must increase");
    if (cfg.scheme == Scheme::exact_cir)
        for (const auto& c : spec.components)
            if (c.ell > 0) throw ParameterError("exact CIR scheme requires ell = 0 for every component");

    DriverPaths out;
    out.n_paths = cfg.n_paths;
    out.n_dates = dates.size();
    out.dim = spec.dim();
    out.states.assign(out.n_paths * out.n_dates * out.dim, 0.0);
    out.triggers.assign(out.n_paths, 0.0);
    const std::size_t nblocks = (cfg.n_paths + detail::mc_block - 1) / detail::mc_block;
    parallel_blocks(nblocks, [&](std::size_t b) {
        std::size_t lo = b * detail::mc_block, hi = std::min(cfg.n_paths, lo + detail::mc_block);
        for (std::size_t p = lo; p < hi; ++p) {
            auto eng = path_engine(cfg.seed, p);
            std::exponential_distribution<double> expo(1.0);
            double eta = 0.0;
            while (!(eta > 0)) eta = expo(eng);
            out.triggers[p] = eta;
            detail::simulate_one(spec, dates, cfg, eng, out.states.data() + p * out.n_dates * out.dim);
        }
    });
    return out;
}

// Simulated paths with the Cox construction of the default time.
class PathBundle {
public:
    PathBundle(DriverPaths paths, std::vector<double> dates, Interpolation interp)
        : paths_(std::move(paths)), dates_(std::move(dates)), interp_(interp) {}

    std::size_t size() const { return paths_.n_paths; }
    std::size_t n_dates() const { return paths_.n_dates; }
    std::size_t dim() const { return paths_.dim; }
    Interpolation interpolation() const { return interp_; }

    std::span<const double> state(std::size_t p, std::size_t j) const { return paths_.state(p, j); }
    double hazard(std::size_t p, std::size_t j) const { return hazards_[p * n_dates() + j]; }
    double trigger(std::size_t p) const { return paths_.triggers[p]; }
    double tau(std::size_t p) const { return tau_[p]; }
    // 1_{tau > T_k}
    bool survived(std::size_t p, std::size_t k) const { return k < crossing_[p]; }
    std::size_t monotonicity_violations() const { return violations_; }
    const std::vector<double>& dates() const { return dates_; }

private:
    friend PathBundle simulate(const CalibratedModel&, const SimConfig&);
    friend PathBundle rebuild_default_times(const CalibratedModel&, PathBundle, Interpolation);

    void build_default_times(const CalibratedModel& m) {
        const std::size_t n = size(), nd = n_dates(), N = nd - 1;
        hazards_.assign(n * nd, 0.0);
        tau_.assign(n, std::numeric_limits<double>::infinity());
        crossing_.assign(n, nd);
        std::vector<unsigned char> bad(n, 0);
        const std::size_t nblocks = (n + detail::mc_block - 1) / detail::mc_block;
        parallel_blocks(nblocks, [&](std::size_t b) {
            std::size_t lo = b * detail::mc_block, hi = std::min(n, lo + detail::mc_block);
            for (std::size_t p = lo; p < hi; ++p) {
                double* g = hazards_.data() + p * nd;
                g[0] = 0.0;
                for (std::size_t k = 0; k < N; ++k) {
                    g[k + 1] = hazard_at_tenor(m, state(p, k), k);
                    if (g[k + 1] < g[k] - 1e-14 * (1 + std::abs(g[k]))) bad[p] = 1;
                }
                double eta = trigger(p);
                for (std::size_t k = 1; k <= N; ++k) {
                    if (g[k] >= eta) {
                        crossing_[p] = k;
                        if (interp_ == Interpolation::piecewise_constant) {
                            tau_[p] = dates_[k];
                        } else {
                            double w = (eta - g[k - 1]) / (g[k] - g[k - 1]);
                            tau_[p] = dates_[k - 1] + w * (dates_[k] - dates_[k - 1]);
                        }
                        break;
                    }
                }
            }
        });
        violations_ = 0;
        for (auto v : bad) violations_ += v;
    }

    DriverPaths paths_;
    std::vector<double> dates_;
    Interpolation interp_;
    std::vector<double> hazards_;
    std::vector<double> tau_;
    std::vector<std::size_t> crossing_;
    std::size_t violations_ = 0;
};

inline PathBundle simulate(const CalibratedModel& m, const SimConfig& cfg) {
    std::vector<double> dates(m.size() + 1);
    for (std::size_t j = 0; j <= m.size(); ++j) dates[j] = m.grid().date(j);
    PathBundle b(simulate_driver(m.driver(), dates, cfg), dates, cfg.interpolation);
    b.build_default_times(m);
    return b;
}

// same driver paths and triggers, default times rebuilt under another interpolation
inline PathBundle rebuild_default_times(const CalibratedModel& m, PathBundle b, Interpolation interp) {
    b.interp_ = interp;
    b.build_default_times(m);
    return b;
}

// mean and standard error, reduced over fixed blocks in index order
inline PriceEstimate sample_mean(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) throw ParameterError("sample_mean: no samples");
    auto block_sum = [&](auto&& term) {
        double total = 0.0;
        for (std::size_t lo = 0; lo < n; lo += detail::mc_block) {
            double s = 0.0;
            for (std::size_t p = lo; p < std::min(n, lo + detail::mc_block); ++p) s += term(v[p]);
            total += s;
        }
        return total;
    };
    double mean = block_sum([](double x) { return x; }) / static_cast<double>(n);
    double ss = block_sum([&](double x) { return (x - mean) * (x - mean); });
    double se = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return {mean, se, Method::monte_carlo};
}

using PathPayoff = std::function<double(const PathBundle&, std::size_t)>;

// density of measure (k) relative to P_N on F_{T_j}
inline double mc_density(const CalibratedModel& m, const PathBundle& b, Measure measure, std::size_t k,
                         std::size_t j, std::size_t p) {
    if (measure == Measure::terminal) return 1.0;
    Family f = measure == Measure::forward ? Family::risk_free : Family::defaultable;
    return std::exp(m.log_martingale(f, k, b.state(p, j), m.grid().date(j)) - m.log_martingale(f, k, m.x0(), 0.0));
}

// E[payoff] under P_N, P_k or Pbar_k for a payoff known at T_j
inline PriceEstimate mc_expect(const CalibratedModel& m, const PathBundle& b, Measure measure, std::size_t k,
                               std::size_t j, const PathPayoff& payoff) {
    if (j > m.size()) throw IndexError("mc_expect: date index out of range");
    std::vector<double> v(b.size());
    const std::size_t nblocks = (b.size() + detail::mc_block - 1) / detail::mc_block;
    parallel_blocks(nblocks, [&](std::size_t blk) {
        std::size_t lo = blk * detail::mc_block, hi = std::min(b.size(), lo + detail::mc_block);
        for (std::size_t p = lo; p < hi; ++p) v[p] = payoff(b, p) * mc_density(m, b, measure, k, j, p);
    });
    return sample_mean(v);
}

// E_k[payoff] for a payoff known at T_k
inline PriceEstimate mc_expect_forward(const CalibratedModel& m, const PathBundle& b, std::size_t k,
                                       const PathPayoff& payoff) {
    if (k < 1 || k > m.size()) throw IndexError("mc_expect_forward: index must lie in 1..N");
    return mc_expect(m, b, Measure::forward, k, k, payoff);
}

inline double cds_fee_leg(const InitialCurves& c, std::size_t m) {
    double fee = 0.0;
    for (std::size_t l = 1; l <= m; ++l) fee += c.defaultable_bond(l - 1);
    return fee;
}

inline CdsEstimate mc_price_cds(const CalibratedModel& m, const PathBundle& b, std::size_t mm, double pi, double c) {
    if (mm < 1 || mm > m.size()) throw IndexError("mc_price_cds: m must lie in 1..N");
    if (!(pi >= 0 && pi < 1)) throw ParameterError("mc_price_cds: recovery must lie in [0,1)");
    const double lgd = 1.0 - pi * (1.0 + c);
    std::vector<double> v(b.size());
    const std::size_t nblocks = (b.size() + detail::mc_block - 1) / detail::mc_block;
    parallel_blocks(nblocks, [&](std::size_t blk) {
        std::size_t lo = blk * detail::mc_block, hi = std::min(b.size(), lo + detail::mc_block);
        for (std::size_t p = lo; p < hi; ++p) {
            double acc = 0.0;
            for (std::size_t k = 1; k <= mm; ++k) {
                if (b.survived(p, k - 1) && !b.survived(p, k))
                    acc += m.curves().bond(k) * mc_density(m, b, Measure::forward, k, k, p);
            }
            v[p] = lgd * acc;
        }
    });
    CdsEstimate r;
    r.protection_leg = sample_mean(v);
    r.fee_leg = cds_fee_leg(m.curves(), mm);
    r.spread = {r.protection_leg.value / r.fee_leg, r.protection_leg.standard_error / r.fee_leg, Method::monte_carlo};
    return r;
}

inline PriceEstimate mc_price_bond_option(const CalibratedModel& m, const PathBundle& b, std::size_t i,
                                          std::size_t mm, double K, double pi) {
    if (!(i >= 1 && i < mm && mm <= m.size())) throw IndexError("mc_price_bond_option needs 1 <= i < m <= N");
    if (!(pi >= 0 && pi <= 1)) throw ParameterError("mc_price_bond_option: recovery must lie in [0,1]");
    if (!(K >= 0)) throw ParameterError("mc_price_bond_option: strike must be >= 0");
    auto rf = aggregate_coefficients(m, i, mm, Family::risk_free);
    auto df = aggregate_coefficients(m, i, mm, Family::defaultable);
    const double bi = m.curves().bond(i);
    auto est = mc_expect_forward(m, b, i, [&](const PathBundle& pb, std::size_t p) {
        if (!pb.survived(p, i)) return 0.0;
        auto x = pb.state(p, i);
        double val = pi * std::exp(rf.eval(x)) + (1 - pi) * std::exp(df.eval(x)) - K;
        return val > 0 ? val : 0.0;
    });
    return {bi * est.value, bi * est.standard_error, Method::monte_carlo};
}

inline PriceEstimate mc_price_vulnerable_option(const CalibratedModel& m, const PathBundle& b, std::size_t k,
                                                std::size_t mm, double K, double q) {
    if (!(k >= 1 && k < mm && mm <= m.size())) throw IndexError("mc_price_vulnerable_option needs 1 <= k < m <= N");
    if (!(q >= 0 && q <= 1)) throw ParameterError("mc_price_vulnerable_option: recovery must lie in [0,1]");
    if (!(K >= 0)) throw ParameterError("mc_price_vulnerable_option: strike must be >= 0");
    auto rf = aggregate_coefficients(m, k, mm, Family::risk_free);
    const double bk = m.curves().bond(k);
    auto est = mc_expect_forward(m, b, k, [&](const PathBundle& pb, std::size_t p) {
        double val = std::exp(rf.eval(pb.state(p, k))) - K;
        if (val <= 0) return 0.0;
        return (pb.survived(p, k) ? 1.0 : q) * val;
    });
    return {bk * est.value, bk * est.standard_error, Method::monte_carlo};
}

} // namespace dalm
