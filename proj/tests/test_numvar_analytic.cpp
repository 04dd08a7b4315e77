#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "numvar/numvar_analytic.hpp"

#ifdef NUMVAR_HAVE_GSL
#include <gsl/gsl_sf_expint.h>
#endif

using namespace nv;

namespace {

SystemConfig make(double alpha, double c, double t, double a = 1.0) {
    SystemConfig cfg;
    cfg.stable = {alpha, c};
    cfg.t = t;
    cfg.a = a;
    return cfg;
}

// L/a - (1/a) int q(u)^2 du with q(u) = P(u + X(t) in [0, L]), in real space.
double brute_force_numvar(const SystemConfig& cfg, double L) {
    const StableLaw law(cfg.stable, cfg.t);
    auto q = [&](double u) { return interval_prob(law, -u, L - u); };
    auto q2 = [&](double u) { return q(u) * q(u); };
    const std::vector<double> br = {-2e4, -100.0, -10.0, 0.0, L, L + 10.0, L + 100.0, L + 2e4};
    const double inner = quad::adaptive(q2, br, 1e-11, 0.0, 20000).value;
    return L / cfg.a - inner / cfg.a;
}

}  // namespace

TEST(NumVar, ClosedFormsAgainstQuadrature) {
    for (double L : {0.05, 0.7, 3.0, 25.0}) {
        for (double t : {0.1, 1.0, 4.0}) {
            const auto b = make(2.0, 0.5, t, 1.3);
            EXPECT_NEAR(numvar(b, L, 1e-12).V, numvar_brownian_closed(1.3, t, L), 1e-10);
            const auto c = make(1.0, 1.0, t, 0.8);
            EXPECT_NEAR(numvar(c, L, 1e-12).V, numvar_cauchy_closed(0.8, t, L), 1e-10);
        }
    }
    // other c by time change
    EXPECT_NEAR(numvar(make(2.0, 2.0, 1.0), 4.0, 1e-12).V, numvar_brownian_closed(1.0, 4.0, 4.0), 1e-10);
    EXPECT_NEAR(numvar_cauchy_closed(1.0, 1.0, 3.0, 2.0), numvar_cauchy_closed(1.0, 2.0, 3.0), 1e-14);
}

TEST(NumVar, BrownianClosedFormHandValues) {
    // small-L limit: V ~ L/a, large-L limit: V -> (2/a) sqrt(t/pi)
    EXPECT_NEAR(numvar_brownian_closed(1.0, 1.0, 1e-6) / 1e-6, 1.0, 1e-3);
    EXPECT_NEAR(numvar_brownian_closed(1.0, 1.0, 1e3), 2.0 / std::sqrt(std::numbers::pi), 1e-12);
}

TEST(NumVar, RealSpaceOracle) {
    for (double alpha : {0.7, 1.5}) {
        const auto cfg = make(alpha, 1.0, 1.0);
        for (double L : {0.5, 2.0, 8.0}) {
            SCOPED_TRACE(testing::Message() << "alpha=" << alpha << " L=" << L);
            const double ref = brute_force_numvar(cfg, L);
            const double tail_cut = alpha < 1.0 ? 2e-3 : 1e-6;  // omitted |u| > 2e4 mass
            EXPECT_NEAR(numvar(cfg, L).V, ref, tail_cut);
        }
    }
}

TEST(NumVar, TwoRoutesAgree) {
    for (double alpha : {0.3, 0.8, 1.0, 1.25, 1.75, 2.0}) {
        const auto cfg = make(alpha, 0.9, 0.6, 1.1);
        for (double L : {0.2, 3.0, 40.0, 700.0}) {
            EXPECT_NEAR(numvar(cfg, L, 1e-11).V, numvar_via_tail(cfg, L, 1e-11).V, 1e-9)
                << "alpha=" << alpha << " L=" << L;
        }
    }
}

TEST(NumVar, BoundsAndMonotonicity) {
    for (double alpha : {0.5, 1.5}) {
        const auto cfg = make(alpha, 1.0, 1.0);
        double prev = 0.0;
        for (double L = 0.5; L < 60.0; L *= 1.5) {
            const double v = numvar(cfg, L).V;
            EXPECT_GE(v, prev - 1e-9);
            EXPECT_LE(v, L);
            prev = v;
        }
    }
    EXPECT_EQ(numvar(make(1.5, 1.0, 1.0), 0.0).V, 0.0);
}

TEST(NumVar, FrozenTimeGivesNoFluctuation) {
    EXPECT_NEAR(numvar(make(1.5, 1.0, 0.0), 7.0).V, 0.0, 1e-12);
    const auto v = numvar(make(1.5, 1.0, 0.0), 2.5);
    EXPECT_EQ(v.V, 0.0);
    EXPECT_NE(v.note.find("0.25"), std::string::npos);
    // continuity as t -> 0
    EXPECT_LT(numvar(make(1.5, 1.0, 1e-8), 2.5).V, 1e-4);
}

TEST(NumVar, Saturation) {
    for (double alpha : {1.2, 1.6, 2.0}) {
        const auto cfg = make(alpha, 0.7, 1.3, 0.9);
        EXPECT_NEAR(saturation_level_integral(cfg).value / saturation_level(cfg), 1.0, 1e-8) << alpha;
    }
    // Brownian: (2/a) sqrt(t/pi) at c = 1/2
    EXPECT_NEAR(saturation_level(make(2.0, 0.5, 2.0)), 2.0 * std::sqrt(2.0 / std::numbers::pi), 1e-14);
    EXPECT_THROW(saturation_level(make(1.0, 1.0, 1.0)), Error);
    const auto cfg = make(1.5, 1.0, 1.0);
    const auto rep = classify_regime(cfg);
    const double L = 1e5;
    EXPECT_NEAR(numvar(cfg, L).V, rep.asymptotic(L, 1.5), 1e-4);
}

TEST(NumVar, RegimeClassification) {
    EXPECT_EQ(classify_regime(make(0.5, 1, 1)).regime, Regime::divergent_power);
    EXPECT_EQ(classify_regime(make(1.0, 1, 1)).regime, Regime::divergent_log);
    EXPECT_EQ(classify_regime(make(1.5, 1, 1)).regime, Regime::saturating_power);
    const auto g = classify_regime(make(2.0, 1, 1));
    EXPECT_EQ(g.regime, Regime::saturating_gaussian);
    EXPECT_FALSE(g.leading_constant.has_value());
    // alpha = 1: V ~ (2 * 2/pi * c t / a) log L
    const auto c = make(1.0, 1.0, 1.0);
    const auto rep = classify_regime(c);
    EXPECT_NEAR(*rep.leading_constant, 4.0 / std::numbers::pi, 1e-14);
    const double d = numvar(c, 2e4).V - numvar(c, 1e4).V;
    EXPECT_NEAR(d, *rep.leading_constant * std::log(2.0), 1e-3);
}

TEST(NumVar, AlphaZeroLimit) {
    const auto cfg = make(0.02, 1.0, 1.0);
    const double L = 5.0;
    EXPECT_NEAR(numvar(cfg, L).V / numvar_alpha_zero_limit(1.0, 1.0, 1.0, L), 1.0, 0.05);
}

TEST(NumVar, PoissonTvBounds) {
    const auto b = poisson_tv_bounds(10.0, 1.0, 4.0);
    EXPECT_DOUBLE_EQ(b.lower, 0.6 / 32.0);
    EXPECT_NEAR(b.upper, (1.0 - std::exp(-10.0)) * 0.6, 1e-15);
    EXPECT_THROW(poisson_tv_bounds(0.5, 1.0, 0.1), Error);
    EXPECT_THROW(poisson_tv_bounds(10.0, 1.0, 11.0), Error);
}

TEST(NumVar, LimitVarianceFunction) {
    const auto cfg = make(0.6, 1.0, 1.0);
    EXPECT_EQ(f_limit_variance(cfg, 0.0).V, 0.0);
    double prev = 0.0;
    for (double s : {0.1, 1.0, 10.0}) {
        const double f = f_limit_variance(cfg, s).V;
        EXPECT_GT(f, prev);
        EXPECT_LE(f, s);
        prev = f;
    }
}

#ifdef NUMVAR_HAVE_GSL
TEST(NumVar, SineKernelAgainstSiCi) {
    const double pi = std::numbers::pi;
    for (double ell : {0.3, 1.0, 2.5, 17.0, 400.0}) {
        const double y = 2.0 * pi * ell;
        const double ref = (std::log(y) + std::numbers::egamma + 1.0 - std::cos(y) - gsl_sf_Ci(y)) / (pi * pi) +
                           ell * (1.0 - (2.0 / pi) * gsl_sf_Si(y));
        EXPECT_NEAR(sine_kernel_numvar(1.0, ell, 1e-12).V, ref, 1e-9) << ell;
        EXPECT_NEAR(sine_kernel_numvar(2.0, 2.0 * ell, 1e-12).V, ref, 1e-9) << ell;
    }
}
#endif

TEST(NumVar, InvalidInputs) {
    EXPECT_THROW(numvar(make(1.5, 1.0, 1.0), -1.0), Error);
    EXPECT_THROW(numvar(make(1.5, 1.0, 1.0, 0.0), 1.0), Error);
    EXPECT_THROW(numvar_brownian_closed(1.0, 0.0, 1.0), Error);
}

TEST(NumVar, DerivativeIsTailProbability) {
    for (double alpha : {0.6, 1.0, 1.7}) {
        const auto cfg = make(alpha, 1.0, 0.8, 1.2);
        const StableLaw z = cfg.pair_law();
        const double h = 1e-3;
        for (double L : {0.5, 4.0, 30.0}) {
            const double d = (numvar(cfg, L + h, 1e-12).V - numvar(cfg, L - h, 1e-12).V) / (2 * h);
            EXPECT_NEAR(d, tail_prob(z, L / cfg.a) / cfg.a, 1e-6) << alpha << " " << L;
        }
    }
}

TEST(NumVar, ConcaveInL) {
    const auto cfg = make(1.2, 1.0, 1.0);
    std::vector<double> v;
    for (double L = 0.25; L <= 20.0; L += 0.25) v.push_back(numvar(cfg, L, 1e-11).V);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) EXPECT_LE(v[i + 1] - 2 * v[i] + v[i - 1], 1e-9);
}

TEST(NumVar, SaturationGapDecay) {
    const auto cfg = make(1.5, 1.0, 1.0);
    const double s = saturation_level(cfg);
    const double g1 = s - numvar(cfg, 1e2, 1e-12).V;
    const double g2 = s - numvar(cfg, 1e4, 1e-12).V;
    const double slope = std::log(g2 / g1) / std::log(1e2);
    EXPECT_GE(slope, -0.55);
    EXPECT_LE(slope, -0.45);
}

TEST(NumVar, LargeTimePoissonLimit) {
    const double L = 3.0;
    double prev = 0.0;
    for (double t : {0.1, 1.0, 10.0, 100.0, 1e4}) {
        const double v = numvar(make(1.5, 1.0, t), L).V;
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_NEAR(prev, L, 1e-2);
}
