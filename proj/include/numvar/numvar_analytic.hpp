#pragma once

// Number variance of the lattice-started stable particle system, its closed
// forms, saturation levels, regimes and the limit variance f.
//
// Both Fourier-side integrals reduce to K[h] = int_0^inf (1 - cos w)/w^2 h(w) dw
// after the substitution w = L theta / a, with lambda = 2 c t / L^alpha:
//   V = (L/a) (1 - (2/pi) K[exp(-lambda w^alpha)])
//   f = (2 s / (a pi)) K[1 - exp(-2 c (w/s)^alpha)]

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "numvar/error.hpp"
#include "numvar/quadrature.hpp"
#include "numvar/stable_core.hpp"

namespace nv {

struct SystemConfig {
    StableParams stable;
    double a = 1.0;
    double t = 1.0;

    double alpha() const { return stable.alpha; }
    double c() const { return stable.c; }

    void validate() const {
        stable.validate();
        if (!(a > 0.0) || !std::isfinite(a)) usage_error("a must be positive and finite, got " + std::to_string(a));
        if (!(t >= 0.0) || !std::isfinite(t)) usage_error("t must be nonnegative and finite, got " + std::to_string(t));
    }

    SystemConfig with_t(double time) const {
        SystemConfig out = *this;
        out.t = time;
        return out;
    }

    /// Law of X(2t / a^alpha), the displacement difference measured in lattice units.
    StableLaw pair_law() const { return StableLaw(stable, 2.0 * t / std::pow(a, stable.alpha)); }
};

enum class CurveMethod { quadrature, closed_brownian, closed_cauchy, monte_carlo, sine_kernel };

inline std::string to_string(CurveMethod m) {
    switch (m) {
        case CurveMethod::quadrature: return "quadrature";
        case CurveMethod::closed_brownian: return "closed_brownian";
        case CurveMethod::closed_cauchy: return "closed_cauchy";
        case CurveMethod::monte_carlo: return "monte_carlo";
        case CurveMethod::sine_kernel: return "sine_kernel";
    }
    return "unknown";
}

struct CurvePoint {
    double L = 0.0;
    double V = 0.0;
    double err = 0.0;
};

struct NumVarCurve {
    SystemConfig config;
    std::vector<CurvePoint> points;
    CurveMethod method = CurveMethod::quadrature;
};

struct NumVarValue {
    double V = 0.0;
    double err = 0.0;
    double raw = 0.0;  // before clamping to [0, L/a]
    std::string note;
};

inline constexpr double kDefaultTol = 1e-9;

namespace analytic_detail {

inline constexpr double kPi = std::numbers::pi;

// (1 - cos w) / w^2 without cancellation near 0
inline double one_minus_cos_over_sq(double w) {
    if (w == 0.0) return 0.5;
    const double s = std::sin(0.5 * w) / w;
    return 2.0 * s * s;
}

/// K[h] = int_0^inf (1 - cos w) / w^2 h(w) dw for a bounded smooth h.
/// `scale` marks where h changes (added as breakpoints).
template <class H>
quad::Result cosine_kernel(H&& h, double abs_tol, double scale) {
    constexpr double w0 = 8.0 * kPi;
    const double part_tol = abs_tol / 3.0;

    std::vector<double> br;
    for (int k = 0; k <= 4; ++k) br.push_back(2.0 * kPi * k);
    for (double m : {1e-3, 1e-2, 1e-1, 1.0, 10.0})
        if (m * scale > 0.0 && m * scale < w0) br.push_back(m * scale);
    std::sort(br.begin(), br.end());
    quad::Result total = quad::adaptive([&](double w) { return one_minus_cos_over_sq(w) * h(w); }, br, part_tol, 0.0, 20000);

    // int_{w0}^inf h(w) / w^2 dw with w = w0 / v
    std::vector<double> vb = {0.0, 1.0};
    for (double m : {1e-2, 1e-1, 1.0, 10.0, 100.0, 1e3, 1e4}) {
        const double v = w0 / (m * scale);
        if (v > 0.0 && v < 1.0) vb.push_back(v);
    }
    std::sort(vb.begin(), vb.end());
    quad::Result smooth = quad::adaptive([&](double v) { return v <= 0.0 ? 0.0 : h(w0 / v); }, vb, part_tol * w0, 0.0, 20000);
    smooth.value /= w0;
    smooth.error /= w0;
    total += smooth;

    // -int_{w0}^inf cos(w) h(w) / w^2 dw; zeros of cos at w0 + pi/2 + k pi
    const quad::Result osc = quad::oscillatory_tail([&](double w) { return -std::cos(w) * h(w) / (w * w); }, w0,
                                                    w0 + 0.5 * kPi, kPi, part_tol, 2000);
    total += osc;
    return total;
}

}  // namespace analytic_detail

/// Number variance V_t[L] from the Fourier-side integral.
inline NumVarValue numvar(const SystemConfig& cfg, double L, double tol = kDefaultTol) {
    cfg.validate();
    if (!(L >= 0.0) || !std::isfinite(L)) usage_error("L must be nonnegative and finite");
    NumVarValue out;
    if (L == 0.0) return out;
    if (cfg.t == 0.0) {
        // Var(N | eps) = 0; the lattice count still varies with eps unless L/a is an integer
        const double frac = L / cfg.a - std::floor(L / cfg.a);
        out.note = "t = 0: conditional variance is 0; unconditional lattice variance frac(L/a)(1 - frac(L/a)) = " +
                   std::to_string(frac * (1.0 - frac));
        return out;
    }
    const double alpha = cfg.alpha();
    const double ell = L / cfg.a;
    const double lambda = 2.0 * cfg.c() * cfg.t / std::pow(L, alpha);
    const double prefactor = 2.0 * ell / std::numbers::pi;
    const double k_tol = std::max(tol / prefactor, 1e-16);
    const double scale = std::pow(1.0 / lambda, 1.0 / alpha);
    const quad::Result k = analytic_detail::cosine_kernel(
        [&](double w) { return std::exp(-lambda * std::pow(w, alpha)); }, k_tol, scale);
    out.raw = ell - prefactor * k.value;
    out.err = prefactor * k.error + 4.0 * std::numeric_limits<double>::epsilon() * ell;
    out.V = std::clamp(out.raw, 0.0, ell);
    if (!k.converged) out.note = "quadrature did not reach the requested tolerance";
    return out;
}

/// V = int_0^{L/a} P(|X| > x) dx with X = X(2t/a^alpha): the real-space route.
inline NumVarValue numvar_via_tail(const SystemConfig& cfg, double L, double tol = kDefaultTol) {
    cfg.validate();
    NumVarValue out;
    if (L == 0.0 || cfg.t == 0.0) return out;
    const StableLaw law = cfg.pair_law();
    const double alpha = cfg.alpha();
    const double y_max = L / cfg.a / law.sigma;
    std::vector<double> br = {0.0};
    for (double y = 1e-3; y < y_max; y *= 4.0) br.push_back(y);
    br.push_back(y_max);
    const quad::Result r = quad::adaptive([&](double y) { return 2.0 * standard_survival(alpha, y); }, br,
                                          tol / law.sigma, 1e-14, 20000);
    out.raw = law.sigma * r.value;
    out.err = law.sigma * r.error;
    out.V = std::clamp(out.raw, 0.0, L / cfg.a);
    return out;
}

/// (2/a)[L Phi(-L/sqrt(2t)) + sqrt(t/pi)(1 - exp(-L^2/4t))] for alpha = 2, c = 1/2.
/// Other c enter through the time change t -> 2 c t.
inline double numvar_brownian_closed(double a, double t, double L, double c = 0.5) {
    if (!(t > 0.0)) usage_error("closed forms require t > 0");
    const double te = 2.0 * c * t;
    const double y = L / std::sqrt(2.0 * te);
    const double phi_minus = 0.5 * std::erfc(y / std::sqrt(2.0));
    return (2.0 / a) * (L * phi_minus + std::sqrt(te / std::numbers::pi) * -std::expm1(-L * L / (4.0 * te)));
}

/// (L/a)[1 - (2/pi) arctan(L/2t)] + (2t/(a pi)) log(1 + (L/2t)^2) for alpha = 1, c = 1.
/// Other c enter through the time change t -> c t.
inline double numvar_cauchy_closed(double a, double t, double L, double c = 1.0) {
    if (!(t > 0.0)) usage_error("closed forms require t > 0");
    const double te = c * t;
    const double y = L / (2.0 * te);
    const double pi = std::numbers::pi;
    return (L / a) * (2.0 / pi) * std::atan2(1.0, y) + (2.0 * te / (a * pi)) * std::log1p(y * y);
}

/// (2/(a pi)) (2 t c)^{1/alpha} Gamma(1 - 1/alpha), alpha in (1, 2].
inline double saturation_level(const SystemConfig& cfg) {
    cfg.validate();
    const double alpha = cfg.alpha();
    if (!(alpha > 1.0)) usage_error("number variance diverges for alpha <= 1; no saturation level");
    if (!(cfg.t > 0.0)) usage_error("saturation level requires t > 0");
    return 2.0 / (cfg.a * std::numbers::pi) * std::pow(2.0 * cfg.t * cfg.c(), 1.0 / alpha) *
           std::tgamma(1.0 - 1.0 / alpha);
}

/// The same level as E|X(2t/a^alpha)| = 2 int_0^inf x p(x) dx, by quadrature of the
/// density with the power-law tail beyond x_max integrated term by term.
inline quad::Result saturation_level_integral(const SystemConfig& cfg, double tol = 1e-10) {
    cfg.validate();
    const double alpha = cfg.alpha();
    if (!(alpha > 1.0)) usage_error("number variance diverges for alpha <= 1; no saturation level");
    if (!(cfg.t > 0.0)) usage_error("saturation level requires t > 0");
    const StableLaw law = cfg.pair_law();
    const double pi = std::numbers::pi;
    const double x_max = alpha == 2.0 ? 40.0 : 1e6;
    std::vector<double> br = {0.0};
    for (double x = 1e-2; x < x_max; x *= 4.0) br.push_back(x);
    br.push_back(x_max);
    quad::Result r = quad::adaptive([&](double x) { return 2.0 * x * standard_density(alpha, x); }, br, tol, 1e-13, 20000);
    if (alpha < 2.0) {
        // p(x) ~ sum_k (-1)^{k+1} Gamma(alpha k + 1) sin(k pi alpha / 2) / (pi k!) x^{-alpha k - 1}
        double tail = 0.0;
        for (int k = 1; k <= 8; ++k) {
            const double b = ((k % 2 == 1) ? 1.0 : -1.0) * std::tgamma(alpha * k + 1.0) *
                             std::sin(k * pi * alpha / 2.0) / (pi * std::tgamma(k + 1.0));
            tail += 2.0 * b * std::pow(x_max, 1.0 - alpha * k) / (alpha * k - 1.0);
        }
        r.value += tail;
    }
    r.value *= law.sigma;
    r.error *= law.sigma;
    return r;
}

enum class Regime { divergent_power, divergent_log, saturating_power, saturating_gaussian };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::divergent_power: return "divergent_power";
        case Regime::divergent_log: return "divergent_log";
        case Regime::saturating_power: return "saturating_power";
        case Regime::saturating_gaussian: return "saturating_gaussian";
    }
    return "unknown";
}

struct RegimeReport {
    Regime regime = Regime::saturating_gaussian;
    std::optional<double> saturation_level;
    // k_alpha 2 c t / a: large-L slope constant of dV/dL ~ leading_constant L^{-alpha}
    std::optional<double> leading_constant;

    /// Leading large-L behaviour of V implied by the report.
    double asymptotic(double L, double alpha) const {
        const double k = leading_constant.value_or(0.0);
        switch (regime) {
            case Regime::divergent_power: return k * std::pow(L, 1.0 - alpha) / (1.0 - alpha);
            case Regime::divergent_log: return k * std::log(L);
            case Regime::saturating_power: return *saturation_level - k * std::pow(L, 1.0 - alpha) / (alpha - 1.0);
            case Regime::saturating_gaussian: return *saturation_level;
        }
        return 0.0;
    }
};

inline RegimeReport classify_regime(const SystemConfig& cfg) {
    cfg.validate();
    if (!(cfg.t > 0.0)) usage_error("classify_regime requires t > 0");
    const double alpha = cfg.alpha();
    RegimeReport r;
    if (alpha < 1.0) r.regime = Regime::divergent_power;
    else if (alpha == 1.0) r.regime = Regime::divergent_log;
    else if (alpha < 2.0) r.regime = Regime::saturating_power;
    else r.regime = Regime::saturating_gaussian;
    if (alpha > 1.0) r.saturation_level = saturation_level(cfg);
    if (alpha < 2.0) r.leading_constant = k_alpha(alpha) * 2.0 * cfg.c() * cfg.t / cfg.a;
    return r;
}

/// (L/a)(1 - exp(-2 c t)), the alpha -> 0 limit.
inline double numvar_alpha_zero_limit(double a, double c, double t, double L) {
    return (L / a) * -std::expm1(-2.0 * c * t);
}

/// f(s) = (4 s / (a pi)) int_0^inf sin^2(u/2)/u^2 (1 - exp(-2 c (u/s)^alpha)) du.
inline NumVarValue f_limit_variance(const SystemConfig& cfg, double s, double tol = kDefaultTol) {
    cfg.validate();
    if (!(s >= 0.0) || !std::isfinite(s)) usage_error("s must be nonnegative and finite");
    NumVarValue out;
    if (s == 0.0) return out;
    const double alpha = cfg.alpha();
    const double mu = 2.0 * cfg.c() / std::pow(s, alpha);
    const double prefactor = 2.0 * s / (cfg.a * std::numbers::pi);
    const double scale = std::pow(1.0 / mu, 1.0 / alpha);
    const quad::Result k = analytic_detail::cosine_kernel(
        [&](double w) { return -std::expm1(-mu * std::pow(w, alpha)); }, std::max(tol / prefactor, 1e-17), scale);
    out.raw = prefactor * k.value;
    out.err = prefactor * k.error;
    out.V = std::clamp(out.raw, 0.0, s / cfg.a);
    if (!k.converged) out.note = "quadrature did not reach the requested tolerance";
    return out;
}

struct TvBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Barbour-Hall bounds on the total-variation distance between the counting
/// law on [0, L] and Poisson(L/a), given the number variance V.
inline TvBounds poisson_tv_bounds(double L, double a, double V) {
    if (!(L >= 1.0)) usage_error("poisson_tv_bounds requires L >= 1");
    if (!(a > 0.0)) usage_error("a must be positive");
    const double lambda = L / a;
    if (V > lambda * (1.0 + 1e-12) || V < 0.0) usage_error("inconsistent inputs: need 0 <= V <= L/a");
    const double deficit = std::max(0.0, L - V * a) / L;
    TvBounds b;
    b.lower = deficit / 32.0;
    b.upper = -std::expm1(-lambda) * deficit;
    return b;
}

/// Number variance of the sine-kernel process with density 1/a:
/// (2L/a) int_{L/a}^inf k(z) dz + 2 int_0^{L/a} z k(z) dz, k(z) = sin^2(pi z)/(pi^2 z^2).
inline NumVarValue sine_kernel_numvar(double a, double L, double tol = kDefaultTol) {
    if (!(a > 0.0)) usage_error("a must be positive");
    if (!(L >= 0.0)) usage_error("L must be nonnegative");
    NumVarValue out;
    if (L == 0.0) return out;
    const double pi = std::numbers::pi;
    const double ell = L / a;
    // 2 int_0^ell z k(z) dz = (1/pi^2) int_0^{2 pi ell} (1 - cos y)/y dy
    const double y_max = 2.0 * pi * ell;
    std::vector<double> br = {0.0};
    for (double y = 2.0 * pi; y < y_max; y += 2.0 * pi) br.push_back(y);
    br.push_back(y_max);
    auto cin = [](double y) {
        if (y == 0.0) return 0.0;
        const double s = std::sin(0.5 * y);
        return 2.0 * s * s / y;
    };
    const quad::Result near = quad::adaptive(cin, br, tol * pi * pi / 2.0, 0.0, 4 * static_cast<int>(br.size()) + 4000);
    // (2 ell) int_ell^inf k(z) dz = (ell / pi^2) [1/ell - int_ell^inf cos(2 pi z)/z^2 dz]
    const double first_zero = std::ceil((ell - 0.25) / 0.5) * 0.5 + 0.25;
    const quad::Result far = quad::oscillatory_tail([](double z) { return std::cos(2.0 * std::numbers::pi * z) / (z * z); },
                                                    ell, first_zero, 0.5, tol * pi * pi / (2.0 * ell));
    out.raw = near.value / (pi * pi) + (ell / (pi * pi)) * (1.0 / ell - far.value);
    out.err = near.error / (pi * pi) + ell * far.error / (pi * pi);
    out.V = std::clamp(out.raw, 0.0, ell);
    return out;
}

inline NumVarCurve numvar_curve(const SystemConfig& cfg, const std::vector<double>& Ls, double tol = kDefaultTol) {
    NumVarCurve curve;
    curve.config = cfg;
    curve.method = CurveMethod::quadrature;
    for (double L : Ls) {
        const NumVarValue v = numvar(cfg, L, tol);
        curve.points.push_back({L, v.V, v.err});
    }
    return curve;
}

/// Closed-form curve for alpha in {1, 2}; empty optional otherwise.
inline std::optional<NumVarCurve> closed_curve(const SystemConfig& cfg, const std::vector<double>& Ls) {
    cfg.validate();
    if (cfg.alpha() != 1.0 && cfg.alpha() != 2.0) return std::nullopt;
    if (!(cfg.t > 0.0)) return std::nullopt;
    NumVarCurve curve;
    curve.config = cfg;
    const bool gauss = cfg.alpha() == 2.0;
    curve.method = gauss ? CurveMethod::closed_brownian : CurveMethod::closed_cauchy;
    for (double L : Ls) {
        const double v = gauss ? numvar_brownian_closed(cfg.a, cfg.t, L, cfg.c()) : numvar_cauchy_closed(cfg.a, cfg.t, L, cfg.c());
        curve.points.push_back({L, v, 1e-14 * std::max(1.0, v)});
    }
    return curve;
}

inline NumVarCurve sine_kernel_curve(double a, const std::vector<double>& Ls, double tol = kDefaultTol) {
    NumVarCurve curve;
    curve.config.a = a;
    curve.method = CurveMethod::sine_kernel;
    for (double L : Ls) {
        const NumVarValue v = sine_kernel_numvar(a, L, tol);
        curve.points.push_back({L, v.V, v.err});
    }
    return curve;
}

}  // namespace nv
