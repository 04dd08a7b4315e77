#pragma once

// Monte Carlo and exact counting laws for the lattice-started particle system
// u_j = a (j - eps), eps ~ Uniform[0, 1], each particle moved by an
// independent X_j(t).
//
// Retained particles are handled exactly. Inside the retained window, those
// with a non-negligible hit probability are simulated explicitly and the rest
// by thinning over geometric blocks, so the cost of a replication does not
// grow with the window. Particles outside the window contribute a Poisson
// count with their total averaged mass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "numvar/error.hpp"
#include "numvar/numvar_analytic.hpp"
#include "numvar/quadrature.hpp"
#include "numvar/rng.hpp"
#include "numvar/stable_core.hpp"

namespace nv {

enum class PlanKind {
    strict,       // excluded mass below tol_trunc
    compensated,  // excluded particles replaced by a Poisson count; variance error below tol_trunc
};

inline std::string to_string(PlanKind k) { return k == PlanKind::strict ? "strict" : "compensated"; }

struct TruncationPlan {
    std::int64_t j_min = 0;
    std::int64_t j_max = -1;
    double tol_trunc = 0.0;
    double boundary_mass = 0.0;  // eps-averaged sum of q_j over excluded j
    double edge_q = 0.0;         // upper bound on q_j(eps) over excluded j
    double padding = 0.0;        // M: the window covers [-M, L + M]
    PlanKind kind = PlanKind::strict;

    std::int64_t size() const { return j_max - j_min + 1; }
    /// Bound on |Var error| from treating excluded particles as a Poisson count.
    double variance_error_bound() const { return edge_q * boundary_mass; }
};

inline constexpr std::int64_t kMaxPlanParticles = 10'000'000;

namespace sim_detail {

// (1/a) int_A^{A+L} P(X > z) dz with X ~ law
inline double strip_mass(const StableLaw& law, double a, double A, double L) {
    if (L <= 0.0) return 0.0;
    const double alpha = law.alpha();
    const double s = law.sigma;
    const double lo = A / s;
    const double hi = (A + L) / s;
    std::vector<double> br = {lo};
    if (lo < 0.0 && hi > 0.0) br.push_back(0.0);
    for (double y = std::max(lo, 1e-3) * 4.0; y < hi; y *= 4.0)
        if (y > br.back()) br.push_back(y);
    br.push_back(hi);
    const auto r = quad::adaptive([&](double y) { return standard_survival(alpha, y); }, br, 1e-300, 1e-12, 4000);
    return s * r.value / a;
}

// sup over excluded particles of q_j(eps) for a window padded by exactly (right, left)
inline double edge_bound(const StableLaw& law, double L, double right_gap, double left_gap) {
    const double r = survival(law, right_gap) - survival(law, right_gap + L);
    const double l = survival(law, left_gap) - survival(law, left_gap + L);
    return std::max({r, l, 0.0});
}

struct WindowStats {
    std::int64_t j_min;
    std::int64_t j_max;
    double mass;
    double edge;
    double padding;
};

inline WindowStats window_for(const SystemConfig& cfg, double L, double D) {
    const StableLaw law(cfg.stable, cfg.t);
    const double a = cfg.a;
    WindowStats w{};
    w.j_max = static_cast<std::int64_t>(std::ceil((L + D) / a));
    w.j_min = 1 - static_cast<std::int64_t>(std::ceil(D / a));
    const double right_gap = a * static_cast<double>(w.j_max) - L;  // excluded u >= a j_max
    const double left_gap = a * static_cast<double>(1 - w.j_min);   // excluded |u| >= a (1 - j_min)
    w.mass = strip_mass(law, a, right_gap, L) + strip_mass(law, a, left_gap, L);
    w.edge = edge_bound(law, L, right_gap, left_gap);
    w.padding = std::min(right_gap, left_gap);
    return w;
}

}  // namespace sim_detail

/// Chooses the retained particle window for the count on [0, L].
inline TruncationPlan plan_truncation(const SystemConfig& cfg, double L, double tol_trunc,
                                      PlanKind kind = PlanKind::strict,
                                      std::int64_t max_particles = kMaxPlanParticles) {
    cfg.validate();
    if (!(cfg.t > 0.0)) usage_error("plan_truncation requires t > 0");
    if (!(L >= 0.0)) usage_error("L must be nonnegative");
    if (!(tol_trunc > 0.0)) usage_error("tol_trunc must be positive");
    auto metric = [&](const sim_detail::WindowStats& w) {
        return kind == PlanKind::strict ? w.mass : w.edge * w.mass;
    };
    auto count = [&](const sim_detail::WindowStats& w) { return w.j_max - w.j_min + 1; };

    // the padding is searched on a grid of whole lattice cells
    const double a = cfg.a;
    std::int64_t hi_cells = 1;
    sim_detail::WindowStats hi = sim_detail::window_for(cfg, L, a * hi_cells);
    while (metric(hi) > tol_trunc) {
        if (count(hi) > max_particles) {
            const std::int64_t cells = (max_particles - static_cast<std::int64_t>(std::ceil(L / a))) / 2;
            const auto best = sim_detail::window_for(cfg, L, a * static_cast<double>(std::max<std::int64_t>(cells, 0)));
            numerical_error("truncation budget exceeded: " + std::to_string(max_particles) +
                            " particles reach tol_trunc = " + std::to_string(metric(best)));
        }
        hi_cells *= 2;
        hi = sim_detail::window_for(cfg, L, a * static_cast<double>(hi_cells));
    }
    std::int64_t lo_cells = 0;
    sim_detail::WindowStats lo = sim_detail::window_for(cfg, L, 0.0);
    if (metric(lo) <= tol_trunc) {
        hi = lo;
        hi_cells = 0;
    }
    while (hi_cells - lo_cells > 1) {
        const std::int64_t mid = lo_cells + (hi_cells - lo_cells) / 2;
        const auto w = sim_detail::window_for(cfg, L, a * static_cast<double>(mid));
        if (metric(w) <= tol_trunc) {
            hi_cells = mid;
            hi = w;
        } else {
            lo_cells = mid;
        }
    }
    if (count(hi) > max_particles)
        numerical_error("truncation budget exceeded: " + std::to_string(max_particles) + " particles reach tol_trunc = " +
                        std::to_string(metric(sim_detail::window_for(
                            cfg, L, a * static_cast<double>(std::max<std::int64_t>(
                                        (max_particles - static_cast<std::int64_t>(std::ceil(L / a))) / 2, 0))))));
    TruncationPlan plan;
    plan.j_min = hi.j_min;
    plan.j_max = hi.j_max;
    plan.tol_trunc = tol_trunc;
    plan.boundary_mass = hi.mass;
    plan.edge_q = hi.edge;
    plan.padding = hi.padding;
    plan.kind = kind;
    return plan;
}

struct CountingSample {
    std::int64_t replications = 0;
    std::vector<std::int32_t> counts;
    std::uint64_t seed = 0;
    SystemConfig config;
    double L = 0.0;
    TruncationPlan plan;
};

namespace sim_detail {

struct Block {
    std::int64_t first;
    std::int64_t last;
    double bound;  // q_j(eps) <= bound for every j in the block and every eps
};

struct Layout {
    std::int64_t core_min = 0;
    std::int64_t core_max = -1;
    std::vector<Block> blocks;
};

// probability that particle j lands in [0, L] given the shift eps
inline double hit_prob(const StableLaw& law, double a, double L, std::int64_t j, double eps) {
    const double u = a * (static_cast<double>(j) - eps);
    return interval_prob(law, -u, L - u);
}

inline constexpr double kCoreThreshold = 0.02;

inline Layout layout_for(const SystemConfig& cfg, double L, const TruncationPlan& plan) {
    const StableLaw law(cfg.stable, cfg.t);
    const double a = cfg.a;
    // q bounds: right j with a (j-1) >= L uses u >= a (j-1); left j <= 0 uses |u| >= a |j|
    auto right_bound = [&](std::int64_t j) {
        const double u = a * static_cast<double>(j - 1);
        return survival(law, u - L) - survival(law, u);
    };
    auto left_bound = [&](std::int64_t j) {
        const double v = a * static_cast<double>(-j);
        return survival(law, v) - survival(law, v + L);
    };
    Layout lay;
    std::int64_t right = std::max<std::int64_t>(static_cast<std::int64_t>(std::ceil(L / a)) + 1, 1);
    while (right <= plan.j_max && right_bound(right) >= kCoreThreshold) ++right;
    std::int64_t left = 0;
    while (left >= plan.j_min && left_bound(left) >= kCoreThreshold) --left;
    lay.core_min = std::max(left + 1, plan.j_min);
    lay.core_max = std::min(right - 1, plan.j_max);
    // geometric blocks outward, each as long as its distance from the core
    for (std::int64_t s = right; s <= plan.j_max;) {
        const std::int64_t len = std::max<std::int64_t>(1, s - lay.core_max);
        const std::int64_t e = std::min(plan.j_max, s + len - 1);
        lay.blocks.push_back({s, e, std::min(1.0, right_bound(s))});
        s = e + 1;
    }
    for (std::int64_t s = left; s >= plan.j_min;) {
        const std::int64_t len = std::max<std::int64_t>(1, lay.core_min - s);
        const std::int64_t e = std::max(plan.j_min, s - len + 1);
        lay.blocks.push_back({e, s, std::min(1.0, left_bound(s))});
        s = e - 1;
    }
    return lay;
}

template <class URBG>
std::int64_t poisson_draw(double mean, URBG& gen) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> dist(mean);
    return dist(gen);
}

inline std::int32_t one_replication(const SystemConfig& cfg, double L, const StableLaw& law, const Layout& lay,
                                    double far_mass, std::uint64_t seed, std::uint64_t rep) {
    if (L == 0.0) return 0;
    const double a = cfg.a;
    const double alpha = cfg.alpha();
    rng::Stream shift(seed, rep, 0, rng::Purpose::shift);
    const double eps = shift.uniform();
    std::int32_t n = 0;
    for (std::int64_t j = lay.core_min; j <= lay.core_max; ++j) {
        const auto u = rng::particle_uniforms(seed, rep, j);
        const double x = law.sigma * sample_standard(alpha, u[0], u[1]);
        const double y = a * (static_cast<double>(j) - eps) + x;
        if (y >= 0.0 && y <= L) ++n;
    }
    rng::Stream far(seed, rep, 0, rng::Purpose::far_field);
    for (const Block& b : lay.blocks) {
        if (b.bound <= 0.0) continue;
        const double log_miss = std::log1p(-b.bound);
        std::int64_t j = b.first - 1;
        for (;;) {
            // geometric skip to the next candidate of a Bernoulli(bound) sequence
            const double skip = b.bound >= 1.0 ? 0.0 : std::floor(std::log(far.uniform()) / log_miss);
            if (skip > static_cast<double>(b.last - j)) break;
            j += 1 + static_cast<std::int64_t>(skip);
            if (j > b.last) break;
            const double accept = far.uniform();
            if (accept * b.bound < hit_prob(law, a, L, j, eps)) ++n;
        }
    }
    if (far_mass > 0.0) {
        rng::Stream pois(seed, rep, 0, rng::Purpose::poisson_count);
        n += static_cast<std::int32_t>(poisson_draw(far_mass, pois));
    }
    return n;
}

}  // namespace sim_detail

/// Monte Carlo counts of particles in [0, L]; identical for any worker count.
inline CountingSample simulate_counts(const SystemConfig& cfg, double L, const TruncationPlan& plan,
                                      std::int64_t replications, std::uint64_t seed, unsigned workers = 1) {
    cfg.validate();
    if (replications <= 0) usage_error("replications must be positive");
    CountingSample out;
    out.replications = replications;
    out.seed = seed;
    out.config = cfg;
    out.L = L;
    out.plan = plan;
    out.counts.assign(static_cast<std::size_t>(replications), 0);
    if (L == 0.0) return out;
    if (cfg.t == 0.0) {
        // deterministic lattice: count of a (j - eps) in [0, L]
        for (std::int64_t r = 0; r < replications; ++r) {
            rng::Stream shift(seed, static_cast<std::uint64_t>(r), 0, rng::Purpose::shift);
            const double eps = shift.uniform();
            const auto hi = static_cast<std::int64_t>(std::floor(L / cfg.a + eps));
            const auto lo = static_cast<std::int64_t>(std::ceil(eps));
            out.counts[static_cast<std::size_t>(r)] = static_cast<std::int32_t>(std::max<std::int64_t>(0, hi - lo + 1));
        }
        return out;
    }
    const StableLaw law(cfg.stable, cfg.t);
    const sim_detail::Layout lay = sim_detail::layout_for(cfg, L, plan);
    auto run = [&](std::int64_t from, std::int64_t to) {
        for (std::int64_t r = from; r < to; ++r)
            out.counts[static_cast<std::size_t>(r)] =
                sim_detail::one_replication(cfg, L, law, lay, plan.boundary_mass, seed, static_cast<std::uint64_t>(r));
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        run(0, replications);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (replications + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::int64_t from = std::min<std::int64_t>(replications, chunk * w);
            const std::int64_t to = std::min<std::int64_t>(replications, from + chunk);
            pool.emplace_back(run, from, to);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

struct VarianceEstimate {
    double mean = 0.0;
    double V_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_se = 0.0;
    int resamples = 0;
};

inline constexpr int kBootstrapResamples = 2000;

/// Unbiased sample variance with a percentile bootstrap 95% interval.
/// Resampling works on the count histogram, which is exact for integer data.
inline VarianceEstimate empirical_numvar(std::span<const std::int32_t> counts, std::uint64_t seed,
                                         int resamples = kBootstrapResamples) {
    const auto n = static_cast<std::int64_t>(counts.size());
    if (n < 100) usage_error("insufficient replications: need at least 100");
    const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
    const std::int32_t base = *mn;
    std::vector<std::int64_t> hist(static_cast<std::size_t>(*mx - base + 1), 0);
    for (std::int32_t c : counts) ++hist[static_cast<std::size_t>(c - base)];

    auto moments = [&](const std::vector<std::int64_t>& h, double& mean, double& var) {
        double s1 = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) s1 += static_cast<double>(h[k]) * static_cast<double>(k);
        mean = s1 / static_cast<double>(n);
        double s2 = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double d = static_cast<double>(k) - mean;
            s2 += static_cast<double>(h[k]) * d * d;
        }
        var = s2 / static_cast<double>(n - 1);
    };
    VarianceEstimate est;
    double mean0 = 0.0;
    moments(hist, mean0, est.V_hat);
    est.mean = mean0 + base;
    est.mean_se = std::sqrt(est.V_hat / static_cast<double>(n));
    est.resamples = resamples;
    if (hist.size() == 1 || resamples <= 0) {
        est.ci_lo = est.ci_hi = est.V_hat;
        return est;
    }
    rng::Stream gen(seed, 0, 0, rng::Purpose::bootstrap);
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    std::vector<std::int64_t> draw(hist.size());
    for (int b = 0; b < resamples; ++b) {
        // multinomial(n, hist / n) by sequential conditional binomials
        std::int64_t left = n;
        double rest = 1.0;
        for (std::size_t k = 0; k < hist.size(); ++k) {
            const double p = static_cast<double>(hist[k]) / static_cast<double>(n);
            if (left == 0 || k + 1 == hist.size()) {
                draw[k] = left;
                left = 0;
                continue;
            }
            const double cond = std::clamp(p / rest, 0.0, 1.0);
            std::binomial_distribution<std::int64_t> bin(left, cond);
            draw[k] = bin(gen);
            left -= draw[k];
            rest -= p;
        }
        double m = 0.0;
        double v = 0.0;
        moments(draw, m, v);
        stats[static_cast<std::size_t>(b)] = v;
    }
    std::sort(stats.begin(), stats.end());
    auto quantile = [&](double p) {
        const double h = p * static_cast<double>(resamples - 1);
        const auto i = static_cast<std::size_t>(std::floor(h));
        const std::size_t j = std::min(i + 1, stats.size() - 1);
        return stats[i] + (h - static_cast<double>(i)) * (stats[j] - stats[i]);
    };
    est.ci_lo = quantile(0.025);
    est.ci_hi = quantile(0.975);
    return est;
}

inline VarianceEstimate empirical_numvar(const CountingSample& sample, int resamples = kBootstrapResamples) {
    return empirical_numvar(sample.counts, sample.seed, resamples);
}

struct CountingLaw {
    std::int64_t j_min = 0;
    std::vector<double> qs;   // eps-averaged q_j for retained j = j_min, j_min + 1, ...
    std::vector<double> pmf;  // P(N = k), k = 0, 1, ...; empty if not requested
    double cumulants[4] = {0.0, 0.0, 0.0, 0.0};
    double far_mass = 0.0;
    double pmf_lost = 0.0;          // mass cut by the support cap before renormalization
    double truncation_error = 0.0;  // bound on the cumulant error from the far field
    double lambda = 0.0;            // L / a

    double c1() const { return cumulants[0]; }
    double c2() const { return cumulants[1]; }
    double c3() const { return cumulants[2]; }
    double c4() const { return cumulants[3]; }
};

struct ExactLawOptions {
    bool pmf = true;
    int nodes_per_panel = 16;
    int min_panels = 4;
    int max_panels = 256;
    std::int64_t max_particles = 100'000;
};

namespace sim_detail {

// pmf of a sum of independent Bernoulli(p), support truncated at cap
inline std::vector<double> bernoulli_sum(std::span<const double> ps, std::size_t cap) {
    std::vector<double> pmf(1, 1.0);
    pmf.reserve(cap + 1);
    for (double p : ps) {
        if (p <= 0.0) continue;
        if (pmf.size() <= cap) pmf.push_back(0.0);
        for (std::size_t k = pmf.size() - 1; k >= 1; --k) pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        pmf[0] *= 1.0 - p;
    }
    return pmf;
}

// Poisson-binomial pmf; indicators with q > 1/2 are counted through their
// complements so both partial sums keep short supports.
inline std::vector<double> poisson_binomial(std::span<const double> q, std::size_t cap) {
    std::vector<double> low;
    std::vector<double> high_c;
    for (double p : q) {
        if (p > 0.5) high_c.push_back(1.0 - p);
        else low.push_back(p);
    }
    double mean_lo = 0.0;
    double mean_hc = 0.0;
    for (double p : low) mean_lo += p;
    for (double p : high_c) mean_hc += p;
    auto support = [](double m, std::size_t n) {
        return std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(m + 15.0 * std::sqrt(m) + 40.0)));
    };
    const auto A = bernoulli_sum(low, support(mean_lo, low.size()));
    const auto C = bernoulli_sum(high_c, support(mean_hc, high_c.size()));
    const std::size_t n_high = high_c.size();
    std::vector<double> out(cap + 1, 0.0);
    // N = A + n_high - C
    for (std::size_t c = 0; c < C.size(); ++c) {
        if (C[c] == 0.0) continue;
        for (std::size_t k = 0; k < A.size(); ++k) {
            const auto idx = static_cast<std::int64_t>(k + n_high) - static_cast<std::int64_t>(c);
            if (idx < 0 || idx > static_cast<std::int64_t>(cap)) continue;
            out[static_cast<std::size_t>(idx)] += A[k] * C[c];
        }
    }
    return out;
}

inline std::vector<double> poisson_pmf(double mean, std::size_t cap) {
    std::vector<double> p(cap + 1, 0.0);
    if (mean <= 0.0) {
        p[0] = 1.0;
        return p;
    }
    for (std::size_t k = 0; k <= cap; ++k)
        p[k] = std::exp(static_cast<double>(k) * std::log(mean) - mean - std::lgamma(static_cast<double>(k) + 1.0));
    return p;
}

inline std::vector<double> convolve(const std::vector<double>& x, const std::vector<double>& y, std::size_t cap) {
    std::vector<double> out(cap + 1, 0.0);
    for (std::size_t i = 0; i < x.size() && i <= cap; ++i) {
        if (x[i] == 0.0) continue;
        for (std::size_t j = 0; j < y.size() && i + j <= cap; ++j) out[i + j] += x[i] * y[j];
    }
    return out;
}

// excluded mass given eps; exact telescoped sums when L / a is an integer
inline double far_mass_given_eps(const StableLaw& law, double a, double L, std::int64_t j_min, std::int64_t j_max,
                                 double eps, double averaged) {
    const double ratio = L / a;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-12 || n > 1e4) return averaged;
    const auto ni = static_cast<std::int64_t>(n);
    double m = 0.0;
    for (std::int64_t k = j_max - ni + 1; k <= j_max; ++k) m += survival(law, a * (static_cast<double>(k) - eps));
    const std::int64_t first = 1 - j_min;
    for (std::int64_t i = first; i < first + ni; ++i) m += survival(law, a * (static_cast<double>(i) + eps));
    return m;
}

}  // namespace sim_detail

/// Exact law of the count in [lo, lo + L]: a mixture over eps of
/// Poisson-binomial laws, with the excluded particles as a Poisson count.
/// Cumulants are eps-averages of the conditional cumulants, so c2 is the
/// number variance.
inline CountingLaw exact_law_interval(const SystemConfig& cfg, double lo, double L, const TruncationPlan& plan,
                                      const ExactLawOptions& opt = {}) {
    cfg.validate();
    if (!(cfg.t > 0.0)) usage_error("exact_law requires t > 0");
    if (plan.size() > opt.max_particles)
        usage_error("window too large for exact law: " + std::to_string(plan.size()) + " particles");
    const StableLaw law(cfg.stable, cfg.t);
    const double a = cfg.a;
    // shift the lattice so the interval starts at 0: u_j - lo = a (j - eps - lo / a)
    const double shift_cells = std::floor(lo / a);
    const double frac = lo / a - shift_cells;
    const auto offset = static_cast<std::int64_t>(shift_cells);

    CountingLaw out;
    out.lambda = L / a;
    out.j_min = plan.j_min + offset;
    const auto n_w = static_cast<std::size_t>(plan.size());
    out.qs.assign(n_w, 0.0);
    const int panels = std::clamp(static_cast<int>(std::ceil(4.0 * a / law.sigma)), opt.min_panels, opt.max_panels);
    const quad::Rule rule = quad::composite_gauss_legendre(panels, opt.nodes_per_panel, 0.0, 1.0);
    const double mu = L / a + plan.boundary_mass;
    const auto cap = static_cast<std::size_t>(std::ceil(mu + 15.0 * std::sqrt(mu) + 40.0));
    if (opt.pmf) out.pmf.assign(cap + 1, 0.0);
    std::vector<double> q(n_w);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double eps = rule.nodes[i];
        const double w = rule.weights[i];
        // shifted phase: eps + frac, wrapped into [0, 1) with the index moved
        double e = eps + frac;
        std::int64_t extra = 0;
        if (e >= 1.0) {
            e -= 1.0;
            extra = -1;
        }
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
        for (std::size_t k = 0; k < n_w; ++k) {
            const std::int64_t j = plan.j_min + static_cast<std::int64_t>(k) + extra;
            const double p = sim_detail::hit_prob(law, a, L, j, e);
            q[k] = p;
            const double v = p * (1.0 - p);
            s1 += p;
            s2 += v;
            s3 += v * (1.0 - 2.0 * p);
            s4 += v * (1.0 - 6.0 * v);
            out.qs[k] += w * p;
        }
        const double m = sim_detail::far_mass_given_eps(law, a, L, plan.j_min + extra, plan.j_max + extra, e,
                                                          plan.boundary_mass);
        out.cumulants[0] += w * (s1 + m);
        out.cumulants[1] += w * (s2 + m);
        out.cumulants[2] += w * (s3 + m);
        out.cumulants[3] += w * (s4 + m);
        if (opt.pmf) {
            auto node = sim_detail::poisson_binomial(q, cap);
            if (m > 0.0) node = sim_detail::convolve(node, sim_detail::poisson_pmf(m, cap), cap);
            for (std::size_t k = 0; k <= cap; ++k) out.pmf[k] += w * node[k];
        }
    }
    out.far_mass = plan.boundary_mass;
    out.truncation_error = plan.variance_error_bound();
    if (opt.pmf) {
        const double total = std::accumulate(out.pmf.begin(), out.pmf.end(), 0.0);
        out.pmf_lost = std::max(0.0, 1.0 - total);
        if (out.pmf_lost > 1e-9) numerical_error("exact_law: support cap lost " + std::to_string(out.pmf_lost) + " of the mass");
        for (double& p : out.pmf) p /= total;
        while (out.pmf.size() > 1 && out.pmf.back() == 0.0) out.pmf.pop_back();
    }
    return out;
}

inline CountingLaw exact_law(const SystemConfig& cfg, double L, const TruncationPlan& plan, const ExactLawOptions& opt = {}) {
    return exact_law_interval(cfg, 0.0, L, plan, opt);
}

/// Total-variation distance between a counting pmf and Poisson(lambda).
inline double tv_to_poisson(std::span<const double> pmf, double lambda) {
    double diff = 0.0;
    double pois_mass = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
        const double pk = std::exp(static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
        pois_mass += pk;
        diff += std::abs(pmf[k] - pk);
    }
    diff += std::max(0.0, 1.0 - pois_mass);
    return 0.5 * diff;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Kolmogorov distance between integer counts standardized by (mean, var)
/// and the standard normal, with a half-unit continuity correction.
inline double ks_lattice_normal(std::span<const std::int32_t> counts, double mean, double var) {
    if (!(var > 0.0)) usage_error("KS statistic requires a positive variance");
    if (counts.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(counts.begin(), counts.end());
    std::vector<std::int64_t> hist(static_cast<std::size_t>(*mx - *mn + 1), 0);
    for (std::int32_t c : counts) ++hist[static_cast<std::size_t>(c - *mn)];
    const double n = static_cast<double>(counts.size());
    const double sd = std::sqrt(var);
    double cum = 0.0;
    double d = normal_cdf((*mn - 0.5 - mean) / sd);
    for (std::size_t k = 0; k < hist.size(); ++k) {
        cum += static_cast<double>(hist[k]);
        const double x = static_cast<double>(*mn) + static_cast<double>(k);
        d = std::max(d, std::abs(cum / n - normal_cdf((x + 0.5 - mean) / sd)));
    }
    return d;
}

/// P(K > x) for the asymptotic Kolmogorov distribution.
inline double kolmogorov_pvalue(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

/// 1% asymptotic critical value of the KS statistic for n observations.
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

struct CltDiagnostic {
    double ks_stat = 0.0;
    double skew_ratio = 0.0;
    double ks_pvalue = 1.0;
};

inline CltDiagnostic clt_diagnostic(const CountingLaw& law) {
    if (!(law.c2() > 0.0)) usage_error("clt_diagnostic requires V > 0");
    CltDiagnostic d;
    d.skew_ratio = law.c3() / std::pow(law.c2(), 1.5);
    if (!law.pmf.empty()) {
        const double sd = std::sqrt(law.c2());
        double cum = 0.0;
        for (std::size_t k = 0; k < law.pmf.size(); ++k) {
            cum += law.pmf[k];
            d.ks_stat = std::max(d.ks_stat, std::abs(cum - normal_cdf((static_cast<double>(k) + 0.5 - law.lambda) / sd)));
        }
    }
    return d;
}

/// KS diagnostic for sampled counts standardized by L / a and the variance V.
inline CltDiagnostic clt_diagnostic(const CountingSample& sample, double V) {
    if (!(V > 0.0)) usage_error("clt_diagnostic requires V > 0");
    CltDiagnostic d;
    d.ks_stat = ks_lattice_normal(sample.counts, sample.L / sample.config.a, V);
    d.ks_pvalue = kolmogorov_pvalue(d.ks_stat * std::sqrt(static_cast<double>(sample.counts.size())));
    // sample skewness stands in for c3 / c2^{3/2}
    double m = 0.0;
    for (auto c : sample.counts) m += c;
    m /= static_cast<double>(sample.counts.size());
    double m2 = 0.0, m3 = 0.0;
    for (auto c : sample.counts) {
        const double x = c - m;
        m2 += x * x;
        m3 += x * x * x;
    }
    m2 /= static_cast<double>(sample.counts.size());
    m3 /= static_cast<double>(sample.counts.size());
    d.skew_ratio = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    return d;
}

struct PoissonInitialSample {
    std::vector<std::int32_t> counts;
    double intensity = 1.0;
    double L = 0.0;
    double window_padding = 0.0;
    double far_mass = 0.0;  // mean count contributed by initial points outside the window
    std::uint64_t seed = 0;
};

/// Poisson(theta) initial points moved by independent stable increments;
/// counts in [0, L]. Points outside [-M, L + M] are added as the exact
/// Poisson count of those that reach [0, L].
inline PoissonInitialSample simulate_poisson_initial(double theta, const StableLaw& law, double L,
                                                     std::int64_t replications, std::uint64_t seed,
                                                     double far_fraction = 1e-2) {
    if (!(theta > 0.0)) usage_error("intensity must be positive");
    if (replications <= 0) usage_error("replications must be positive");
    PoissonInitialSample out;
    out.intensity = theta;
    out.L = L;
    out.seed = seed;
    out.counts.assign(static_cast<std::size_t>(replications), 0);
    double M = 0.0;
    if (law.t > 0.0 && L > 0.0) {
        // smallest padding (doubling from sigma) with far mass below far_fraction of theta L
        M = std::max(law.sigma, 1.0);
        while (2.0 * theta * sim_detail::strip_mass(law, 1.0, M, L) > far_fraction * theta * L) M *= 2.0;
        out.far_mass = 2.0 * theta * sim_detail::strip_mass(law, 1.0, M, L);
    }
    out.window_padding = M;
    const double width = L + 2.0 * M;
    for (std::int64_t r = 0; r < replications; ++r) {
        rng::Stream gen(seed, static_cast<std::uint64_t>(r), 0, rng::Purpose::direct);
        std::int64_t n = 0;
        const std::int64_t points = sim_detail::poisson_draw(theta * width, gen);
        for (std::int64_t i = 0; i < points; ++i) {
            const double x0 = -M + width * gen.uniform();
            const double x = law.t > 0.0 ? x0 + sample(law, gen) : x0;
            if (x >= 0.0 && x <= L) ++n;
        }
        n += sim_detail::poisson_draw(out.far_mass, gen);
        out.counts[static_cast<std::size_t>(r)] = static_cast<std::int32_t>(n);
    }
    return out;
}

}  // namespace nv
