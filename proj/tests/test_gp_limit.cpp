#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "numvar/gp_limit.hpp"

using namespace nv;

namespace {

SystemConfig make(double alpha, double c = 1.0, double a = 1.0) {
    SystemConfig cfg;
    cfg.stable = {alpha, c};
    cfg.t = 1.0;
    cfg.a = a;
    return cfg;
}

}  // namespace

TEST(Covariance, LimitCovarianceFromF) {
    const auto cfg = make(1.5);
    const std::vector<double> grid = {0.5, 1.0, 2.0};
    const auto cov = cov_G(cfg, grid);
    FCache f(cfg, 1e-12);
    EXPECT_NEAR(cov.matrix(0, 0), f(0.5), 1e-11);
    EXPECT_NEAR(cov.matrix(1, 2), 0.5 * (f(1.0) + f(2.0) - f(1.0)), 1e-11);
    EXPECT_NEAR(cov.matrix(2, 1), cov.matrix(1, 2), 0.0);
    EXPECT_NEAR(f(2.0), f_limit_variance(cfg, 2.0, 1e-12).V, 1e-14);
}

TEST(Covariance, ZeroGridPoint) {
    const auto cov = cov_G(make(0.7), {0.0});
    ASSERT_EQ(cov.matrix.rows(), 1);
    EXPECT_EQ(cov.matrix(0, 0), 0.0);
    EXPECT_THROW(cov_G(make(0.7), {}), Error);
    EXPECT_THROW(cov_G(make(0.7), {2.0, 1.0}), Error);
}

TEST(Covariance, FbmHalfIsBrownian) {
    const std::vector<double> grid = {0.1, 0.4, 1.0, 3.0};
    const auto f = cov_fbm(0.5, 1.0, grid);
    const auto b = cov_brownian(grid);
    EXPECT_LT((f.matrix - b.matrix).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(b.matrix(1, 3), 0.4, 0.0);
}

TEST(Covariance, FbmIsPositiveSemidefinite) {
    const auto grid = geometric_grid(0.01, 10.0, 200);
    for (double H = 0.1; H < 0.95; H += 0.1) {
        const auto cov = cov_fbm(H, 1.0, grid);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.matrix);
        EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff()) << H;
        EXPECT_LE(cov.jitter, 1e-10 * cov.matrix.diagonal().maxCoeff());
    }
}

TEST(Covariance, BridgeEndpoints) {
    const auto cov = cov_brownian_bridge(2.0, {0.0, 1.0, 2.0});
    EXPECT_EQ(cov.matrix(0, 0), 0.0);
    EXPECT_NEAR(cov.matrix(1, 1), 0.5, 1e-15);
    EXPECT_NEAR(cov.matrix(2, 2), 0.0, 1e-15);
    EXPECT_THROW(cov_brownian_bridge(1.0, {0.5, 2.0}), Error);
}

TEST(Paths, EmpiricalCovarianceMatches) {
    const std::vector<double> grid = {0.5, 1.0, 2.0};
    const auto cov = cov_G(make(1.2), grid);
    const int R = 20000;
    const auto p = sample_paths(cov, R, 17);
    ASSERT_EQ(p.paths.rows(), R);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double emp = (p.paths.col(i).array() * p.paths.col(j).array()).mean();
            const double se = std::sqrt((cov.matrix(i, i) * cov.matrix(j, j) + cov.matrix(i, j) * cov.matrix(i, j)) / R);
            EXPECT_NEAR(emp, cov.matrix(i, j), 4.0 * se);
        }
    const auto again = sample_paths(cov, 10, 17);
    EXPECT_EQ(again.paths.row(3), p.paths.row(3));
}

TEST(Increments, RealSpaceAgreesWithF) {
    for (double alpha : {0.6, 1.4}) {
        const auto cfg = make(alpha);
        FCache f(cfg, 1e-13);
        for (double u : {0.0, 0.5, 3.0}) {
            const double direct = increment_cov(cfg, 1.0, 2.0, u);
            EXPECT_NEAR(direct, increment_cov_from_f(f, 1.0, 2.0, u), 1e-10) << alpha << " " << u;
            EXPECT_LT(direct, 0.0);
        }
    }
    EXPECT_EQ(increment_cov(make(1.0), 0.0, 1.0, 1.0), 0.0);
}

TEST(Increments, StationaryIncrements) {
    const auto cfg = make(0.9);
    const std::vector<double> grid = {1.0, 2.5, 4.0};
    const auto cov = cov_G(cfg, grid);
    FCache f(cfg, kCovTol);
    // Var(G(4) - G(2.5)) = f(1.5)
    const double v = cov.matrix(2, 2) + cov.matrix(1, 1) - 2.0 * cov.matrix(1, 2);
    EXPECT_NEAR(v, f(1.5), 1e-10);
}

TEST(Increments, LongMemoryDecay) {
    for (double alpha : {0.8, 1.3}) {
        const auto fit = longmem_slope(make(alpha), 1.0, 1.0, geometric_grid(1e2, 1e4, 12));
        EXPECT_NEAR(fit.slope, -1.0 - alpha, 0.03) << alpha;
    }
    EXPECT_THROW(longmem_slope(make(2.0), 1.0, 1.0, geometric_grid(1e2, 1e4, 5)), Error);
    EXPECT_THROW(longmem_slope(make(1.0), 1.0, 1.0, geometric_grid(1.0, 10.0, 5)), Error);
}

TEST(Limits, SelfSimilarScaling) {
    const std::vector<double> grid = {0.3, 1.0, 2.0};
    for (double b : {2.0, 10.0}) EXPECT_LT(scaling_check(make(0.7), b, grid), 1e-9) << b;
}

TEST(Limits, FbmConstant) {
    EXPECT_NEAR(fbm_constant(make(0.5)), 4.0 * std::sqrt(2.0 / std::numbers::pi), 1e-13);
    EXPECT_NEAR(fbm_constant(make(0.5, 2.0, 4.0)), 2.0 * std::sqrt(2.0 / std::numbers::pi), 1e-13);
    EXPECT_THROW(fbm_constant(make(1.0)), Error);
}

TEST(Limits, FbmRatiosApproachOne) {
    const auto rows = fbm_limit_check(make(0.5), {10.0, 100.0, 1000.0}, {1.0});
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_LT(std::abs(rows[1].ratio - 1.0), std::abs(rows[0].ratio - 1.0));
    EXPECT_LT(std::abs(rows[2].ratio - 1.0), std::abs(rows[1].ratio - 1.0));
}

TEST(Limits, SmallTimeIsBrownian) {
    for (double alpha : {0.5, 1.5}) {
        const auto rows = small_time_brownian_check(make(alpha), {1e-4}, {0.5, 2.0});
        for (const auto& r : rows) {
            EXPECT_GE(r.ratio, 0.99) << alpha;
            EXPECT_LE(r.ratio, 1.01) << alpha;
        }
    }
}

TEST(Limits, AlphaZero) {
    const auto row = alpha_zero_check(make(0.05), 2.0);
    EXPECT_NEAR(row.ratio, 1.0, 0.02);
}

TEST(Markov, WitnessExistsOnlyForNonMarkovLimits) {
    const auto w = markov_violation_witness(make(1.2));
    EXPECT_GT(w.gap, kMarkovTol);
    EXPECT_LT(w.s, w.r);
    EXPECT_LT(w.r, w.u);
    EXPECT_FALSE(find_markov_witness([](double s, double r) { return std::min(s, r); }).has_value());
}

TEST(Bridge, OverlapFormMatchesF) {
    for (double alpha : {0.7, 1.6}) {
        const auto cfg = make(alpha, 1.0, 1.3);
        const auto cov = cov_G(cfg, {0.8, 2.0});
        EXPECT_NEAR(cov_G_bridge_form(cfg, 0.8, 2.0), cov.matrix(0, 1), 1e-6) << alpha;
        EXPECT_NEAR(cov_G_bridge_form(cfg, 2.0, 2.0), cov.matrix(1, 1), 1e-6) << alpha;
    }
}

TEST(Bridge, ImpliedHurst) {
    const auto cfg = make(0.5);
    const double h = implied_hurst(cfg, 1e4, fbm_constant(cfg));
    EXPECT_NEAR(h, 0.25, 0.02);
    EXPECT_THROW(implied_hurst(cfg, 1.0, 1.0), Error);
}
