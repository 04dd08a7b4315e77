#pragma once

// Symmetric alpha-stable laws with characteristic function exp(-c t |theta|^alpha).
//
// Densities and distribution functions of the standard law (c t = 1) come
// from Zolotarev's single-integral representation, tabulated per alpha as
// piecewise Chebyshev fits of log S(x) and log p(x) in log x, with the
// small-x and large-x series outside the table. The cost of a lookup is a
// binary search and one Clenshaw sum.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "numvar/error.hpp"
#include "numvar/quadrature.hpp"
#include "numvar/rng.hpp"

namespace nv {

struct StableParams {
    double alpha = 2.0;
    double c = 0.5;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 2.0)) usage_error("alpha must lie in (0, 2], got " + std::to_string(alpha));
        if (!(c > 0.0) || !std::isfinite(c)) usage_error("c must be positive and finite, got " + std::to_string(c));
    }
};

/// The law of X(t) for the process with parameters `params`. X(t) has the
/// law of sigma * S where S has characteristic function exp(-|theta|^alpha).
struct StableLaw {
    StableParams params;
    double t = 1.0;
    double sigma = 1.0;

    StableLaw() = default;
    StableLaw(StableParams p, double time) : params(p), t(time) {
        params.validate();
        if (!(time >= 0.0) || !std::isfinite(time)) usage_error("t must be nonnegative and finite");
        sigma = std::pow(params.c * t, 1.0 / params.alpha);
    }

    double alpha() const { return params.alpha; }
};

namespace stable_detail {

inline constexpr double kPi = std::numbers::pi;

// Zolotarev kernel for the standard law at x > 0, alpha != 1. The theta
// range (0, pi/2) is split at pi/4 and the upper half is integrated in
// phi = pi/2 - theta so that both endpoint regions keep full precision.
struct Kernel {
    double alpha;
    double zeta;
    double log_x;

    Kernel(double a, double x) : alpha(a), zeta(a / (a - 1.0)), log_x(std::log(x)) {}

    double assemble(double log_cos, double log_sin_a, double log_cos_am1) const {
        return zeta * (log_x + log_cos - log_sin_a) + log_cos_am1 - log_cos;
    }

    // theta in (0, pi/4]
    double log_g_theta(double th) const {
        return assemble(std::log(std::cos(th)), std::log(std::sin(alpha * th)), std::log(std::cos((alpha - 1.0) * th)));
    }

    // phi = pi/2 - theta in (0, pi/4]
    double log_g_phi(double phi) const {
        const double h = 0.5 * kPi;
        return assemble(std::log(std::sin(phi)), std::log(std::sin(alpha * h - alpha * phi)),
                        std::log(std::cos((alpha - 1.0) * h - (alpha - 1.0) * phi)));
    }

    template <class G>
    static void crossings(G&& log_g, std::vector<double>& br) {
        for (double level : {-6.0, -1.5, 0.0, 1.5, 4.0}) {
            double lo = 1e-300;
            double hi = 0.25 * kPi;
            double flo = log_g(lo) - level;
            const double fhi = log_g(hi) - level;
            if (!(flo * fhi < 0.0)) continue;
            // bisect in log scale first so tiny crossings are located
            for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
                const double mid = (hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
                const double fm = log_g(mid) - level;
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            br.push_back(0.5 * (lo + hi));
        }
    }

    // integral over (0, pi/2) of h(log g(theta)) dtheta
    template <class H>
    double integrate(H&& h) const {
        double total = 0.0;
        for (int half = 0; half < 2; ++half) {
            auto log_g = [&](double v) { return half == 0 ? log_g_theta(v) : log_g_phi(v); };
            std::vector<double> br = {0.0, 0.25 * kPi};
            crossings(log_g, br);
            std::sort(br.begin(), br.end());
            auto f = [&](double v) { return h(log_g(v)); };
            total += quad::adaptive(f, br, 0.0, 1e-13, 600).value;
        }
        return total;
    }
};

inline double nolan_survival(double alpha, double x) {
    const Kernel k(alpha, x);
    const bool below_one = alpha < 1.0;
    const double v = k.integrate([&](double lg) {
        if (lg > 700.0) return below_one ? 1.0 : 0.0;
        const double g = std::exp(lg);
        return below_one ? -std::expm1(-g) : std::exp(-g);
    });
    return v / kPi;
}

inline double nolan_density(double alpha, double x) {
    const Kernel k(alpha, x);
    const double v = k.integrate([](double lg) {
        if (lg > 700.0 || lg < -700.0) return 0.0;
        const double g = std::exp(lg);
        return g * std::exp(-g);
    });
    return alpha / (kPi * std::abs(alpha - 1.0) * x) * v;
}

inline constexpr int kChebNodes = 20;

struct Panel {
    double lo;
    double hi;
    std::array<double, kChebNodes> log_s;
    std::array<double, kChebNodes> log_p;
};

inline double clenshaw(const std::array<double, kChebNodes>& c, double y) {
    double b1 = 0.0;
    double b2 = 0.0;
    for (int k = kChebNodes - 1; k >= 1; --k) {
        const double b0 = 2.0 * y * b1 - b2 + c[static_cast<std::size_t>(k)];
        b2 = b1;
        b1 = b0;
    }
    return y * b1 - b2 + c[0];
}

template <class F>
std::array<double, kChebNodes> cheb_fit(F&& f, double lo, double hi) {
    constexpr int n = kChebNodes;
    std::array<double, n> vals{};
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int j = 0; j < n; ++j) vals[static_cast<std::size_t>(j)] = f(mid + half * std::cos(kPi * (j + 0.5) / n));
    std::array<double, n> c{};
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += vals[static_cast<std::size_t>(j)] * std::cos(kPi * k * (j + 0.5) / n);
        c[static_cast<std::size_t>(k)] = 2.0 * s / n;
    }
    c[0] *= 0.5;
    return c;
}

inline double cheb_tail(const std::array<double, kChebNodes>& c) {
    return std::abs(c[kChebNodes - 1]) + std::abs(c[kChebNodes - 2]);
}

/// Tabulated survival function and density of the standard symmetric law.
class Table {
public:
    explicit Table(double alpha) : alpha_(alpha) {
        build_small_series();
        build_tail_series();
        double u = std::log(x_lo_);
        const double u_end = std::log(x_hi_);
        while (u < u_end) {
            add_panels(u, std::min(u + 0.5, u_end), 0);
            u += 0.5;
        }
    }

    double alpha() const { return alpha_; }
    double x_lo() const { return x_lo_; }
    double x_hi() const { return x_hi_; }
    std::size_t panel_count() const { return panels_.size(); }

    double survival(double x) const {
        if (x <= 0.0) return 0.5;
        if (x < x_lo_) return 0.5 - x * (s1_ - x * x * (s3_ - x * x * s5_));
        if (x >= x_hi_) return tail_sum(x, tail_s_, 0.0);
        const Panel& p = find(std::log(x));
        return std::exp(clenshaw(p.log_s, local(p, std::log(x))));
    }

    double density(double x) const {
        x = std::abs(x);
        if (x < x_lo_) return p0_ - x * x * (p2_ - x * x * p4_);
        if (x >= x_hi_) return tail_sum(x, tail_p_, -1.0);
        const Panel& p = find(std::log(x));
        return std::exp(clenshaw(p.log_p, local(p, std::log(x))));
    }

private:
    static double local(const Panel& p, double u) { return (2.0 * u - p.lo - p.hi) / (p.hi - p.lo); }

    const Panel& find(double u) const {
        auto it = std::upper_bound(panels_.begin(), panels_.end(), u,
                                   [](double v, const Panel& p) { return v < p.hi; });
        if (it == panels_.end()) --it;
        return *it;
    }

    void add_panels(double lo, double hi, int depth) {
        Panel p;
        p.lo = lo;
        p.hi = hi;
        p.log_s = cheb_fit([&](double u) { return std::log(nolan_survival(alpha_, std::exp(u))); }, lo, hi);
        p.log_p = cheb_fit([&](double u) { return std::log(nolan_density(alpha_, std::exp(u))); }, lo, hi);
        if (depth < 5 && std::max(cheb_tail(p.log_s), cheb_tail(p.log_p)) > 1e-13) {
            const double mid = 0.5 * (lo + hi);
            add_panels(lo, mid, depth + 1);
            add_panels(mid, hi, depth + 1);
            return;
        }
        panels_.push_back(p);
    }

    // S(x) = 1/2 - s1 x + s3 x^3 - s5 x^5 and p(x) = p0 - p2 x^2 + p4 x^4 near 0
    void build_small_series() {
        const double a = alpha_;
        auto coef = [a](int k) { return std::exp(std::lgamma((2.0 * k + 1.0) / a) - std::lgamma(2.0 * k + 1.0)) / (kPi * a); };
        p0_ = coef(0);
        p2_ = coef(1);
        p4_ = coef(2);
        s1_ = p0_;
        s3_ = p2_ / 3.0;
        s5_ = p4_ / 5.0;
        // first omitted terms: x^6 in p, x^7 in S
        const double c3 = coef(3);
        const double x_p = std::pow(1e-17 * p0_ / c3, 1.0 / 6.0);
        const double x_s = std::pow(1e-17 * 0.5 * 7.0 / c3, 1.0 / 7.0);
        x_lo_ = std::min({x_p, x_s, 0.1});
    }

    // S(x) ~ sum_k a_k x^{-alpha k}, p(x) ~ sum_k alpha k a_k x^{-alpha k - 1}
    void build_tail_series() {
        const double a = alpha_;
        constexpr int kMaxTerms = 80;
        std::vector<double> env(kMaxTerms + 1);
        for (int k = 1; k <= kMaxTerms; ++k) {
            const double sign = (k % 2 == 1) ? 1.0 : -1.0;
            const double mag = std::exp(std::lgamma(a * k) - std::lgamma(k + 1.0)) / kPi;
            env[static_cast<std::size_t>(k)] = mag;
            tail_s_.push_back(sign * mag * std::sin(k * kPi * a / 2.0));
        }
        // x_hi is the first point of a half-unit log grid from which the
        // truncated series agrees with the integral representation
        const double lead = std::max(std::abs(tail_s_[0]), 1e-300);
        auto term_count = [&](double u) {
            double prev = std::numeric_limits<double>::infinity();
            int used = 1;
            for (int k = 1; k <= kMaxTerms; ++k) {
                const double term = env[static_cast<std::size_t>(k)] * std::exp(-a * k * u);
                if (term > prev && k > 2) break;
                prev = term;
                used = k;
                if (term < 1e-17 * lead * std::exp(-a * u)) break;
            }
            return used;
        };
        const std::vector<double> all_s = tail_s_;
        auto agrees = [&](double u) {
            const double x = std::exp(u);
            const double s = tail_sum(x, tail_s_, 0.0);
            const double ds = tail_sum(x, tail_p_, -1.0);
            return std::abs(s / nolan_survival(a, x) - 1.0) < 5e-14 && std::abs(ds / nolan_density(a, x) - 1.0) < 5e-14;
        };
        double u = std::ceil(2.0 * std::log(std::max(1.0, 2.0 * x_lo_))) / 2.0;
        for (; u < 60.0; u += 0.5) {
            terms_ = term_count(u);
            tail_s_.assign(all_s.begin(), all_s.begin() + terms_);
            tail_p_.resize(tail_s_.size());
            for (std::size_t k = 0; k < tail_s_.size(); ++k) tail_p_[k] = a * static_cast<double>(k + 1) * tail_s_[k];
            if (agrees(u) && agrees(u + 0.5) && agrees(u + 1.0)) break;
        }
        x_hi_ = std::exp(u);
    }

    double tail_sum(double x, const std::vector<double>& coef, double extra_power) const {
        const double r = std::pow(x, -alpha_);
        double sum = 0.0;
        for (std::size_t k = coef.size(); k-- > 0;) sum = (sum + coef[k]) * r;
        return sum * std::pow(x, extra_power);
    }

    double alpha_;
    double x_lo_ = 0.0;
    double x_hi_ = 0.0;
    double p0_ = 0.0, p2_ = 0.0, p4_ = 0.0;
    double s1_ = 0.0, s3_ = 0.0, s5_ = 0.0;
    int terms_ = 0;
    std::vector<double> tail_s_;
    std::vector<double> tail_p_;
    std::vector<Panel> panels_;
};

inline const Table& table_for(double alpha) {
    static std::mutex mutex;
    static std::map<double, std::unique_ptr<Table>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[alpha];
    if (!slot) slot = std::make_unique<Table>(alpha);
    return *slot;
}

inline bool is_cauchy(double alpha) { return alpha == 1.0; }
inline bool is_gauss(double alpha) { return alpha == 2.0; }

}  // namespace stable_detail

/// P(S > x) for the standard law with characteristic function exp(-|theta|^alpha).
inline double standard_survival(double alpha, double x) {
    if (x < 0.0) return 1.0 - standard_survival(alpha, -x);
    if (stable_detail::is_gauss(alpha)) return 0.5 * std::erfc(0.5 * x);
    if (stable_detail::is_cauchy(alpha)) return std::atan2(1.0, x) / std::numbers::pi;
    return stable_detail::table_for(alpha).survival(x);
}

inline double standard_density(double alpha, double x) {
    x = std::abs(x);
    if (stable_detail::is_gauss(alpha)) return std::exp(-0.25 * x * x) / (2.0 * std::sqrt(std::numbers::pi));
    if (stable_detail::is_cauchy(alpha)) return 1.0 / (std::numbers::pi * (1.0 + x * x));
    return stable_detail::table_for(alpha).density(x);
}

inline double char_fn(const StableLaw& law, double theta) {
    return std::exp(-law.t * law.params.c * std::pow(std::abs(theta), law.alpha()));
}

inline void require_nondegenerate(const StableLaw& law) {
    if (!(law.t > 0.0)) usage_error("degenerate law: t = 0 is a point mass at 0");
}

inline double density(const StableLaw& law, double z) {
    require_nondegenerate(law);
    return standard_density(law.alpha(), z / law.sigma) / law.sigma;
}

/// Density by direct Fourier inversion, (1/pi) int_0^inf cos(z theta) exp(-c t theta^alpha).
inline quad::Result density_fourier(const StableLaw& law, double z, double abs_tol = 1e-13) {
    require_nondegenerate(law);
    const double alpha = law.alpha();
    const double y = std::abs(z) / law.sigma;
    const double theta_max = std::pow(37.0, 1.0 / alpha);
    std::vector<double> br = {0.0};
    if (theta_max > 1.0) br.push_back(1.0);
    if (y > 0.0) {
        const double step = std::max(std::numbers::pi / y, theta_max / 20000.0);
        for (double th = step; th < theta_max; th += step)
            if (th > br.back()) br.push_back(th);
    }
    br.push_back(theta_max);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    auto f = [&](double th) { return std::cos(y * th) * std::exp(-std::pow(th, alpha)); };
    quad::Result r = quad::adaptive(f, br, abs_tol * std::numbers::pi * law.sigma, 0.0, 200000);
    r.value /= std::numbers::pi * law.sigma;
    r.error /= std::numbers::pi * law.sigma;
    return r;
}

inline double cdf(const StableLaw& law, double z) {
    if (!std::isfinite(z)) usage_error("cdf argument must be finite");
    require_nondegenerate(law);
    const double y = z / law.sigma;
    return y >= 0.0 ? 1.0 - standard_survival(law.alpha(), y) : standard_survival(law.alpha(), -y);
}

/// P(X > z), accurate in the upper tail.
inline double survival(const StableLaw& law, double z) {
    if (!std::isfinite(z)) usage_error("survival argument must be finite");
    require_nondegenerate(law);
    return standard_survival(law.alpha(), z / law.sigma);
}

/// P(lo <= X <= hi) without cancellation in either tail.
inline double interval_prob(const StableLaw& law, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    const double alpha = law.alpha();
    const double a = lo / law.sigma;
    const double b = hi / law.sigma;
    if (a >= 0.0) return standard_survival(alpha, a) - standard_survival(alpha, b);
    if (b <= 0.0) return standard_survival(alpha, -b) - standard_survival(alpha, -a);
    return 1.0 - standard_survival(alpha, -a) - standard_survival(alpha, b);
}

/// P(|X| > x).
inline double tail_prob(const StableLaw& law, double x) {
    if (!(x > 0.0)) usage_error("tail_prob requires x > 0");
    require_nondegenerate(law);
    return std::min(1.0, 2.0 * standard_survival(law.alpha(), x / law.sigma));
}

/// k_alpha = (int_0^inf x^{-alpha} sin x dx)^{-1} = 2 Gamma(alpha) sin(pi alpha / 2) / pi.
inline double k_alpha(double alpha) {
    return 2.0 * std::tgamma(alpha) * std::sin(0.5 * std::numbers::pi * alpha) / std::numbers::pi;
}

/// Large-x surrogate k_alpha c t x^{-alpha} for P(|X| > x); zero for alpha = 2.
inline double tail_prob_asymptotic(const StableLaw& law, double x) {
    if (!(x > 0.0)) usage_error("tail_prob requires x > 0");
    if (stable_detail::is_gauss(law.alpha())) return 0.0;
    return k_alpha(law.alpha()) * law.params.c * law.t * std::pow(x, -law.alpha());
}

/// E|X|^delta with scale parameter sigma = c t in the sense X = sigma^{1/alpha} S.
inline double abs_moment(const StableLaw& law, double delta) {
    const double alpha = law.alpha();
    if (!(delta > -1.0 && delta < alpha)) usage_error("moment does not exist: need -1 < delta < alpha");
    if (delta == 0.0) return 1.0;
    require_nondegenerate(law);
    const double s = law.params.c * law.t;
    return std::pow(s, delta / alpha) * std::pow(2.0, delta) * std::tgamma(0.5 * (1.0 + delta)) *
           std::tgamma(1.0 - delta / alpha) / (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - 0.5 * delta));
}

/// Chambers-Mallows-Stuck transform of two open-interval uniforms into a
/// standard symmetric stable variate.
inline double sample_standard(double alpha, double u1, double u2) {
    const double v = std::numbers::pi * (u1 - 0.5);
    const double w = -std::log(u2);
    if (stable_detail::is_gauss(alpha)) return 2.0 * std::sqrt(w) * std::sin(v);
    if (stable_detail::is_cauchy(alpha)) return std::tan(v);
    const double log_mag = -std::log(std::cos(v)) / alpha +
                           (1.0 - alpha) / alpha * (std::log(std::cos((1.0 - alpha) * v)) - std::log(w));
    return std::sin(alpha * v) * std::exp(log_mag);
}

inline double sample(const StableLaw& law, rng::Stream& stream) {
    require_nondegenerate(law);
    const double u1 = stream.uniform();
    const double u2 = stream.uniform();
    return law.sigma * sample_standard(law.alpha(), u1, u2);
}

}  // namespace nv
