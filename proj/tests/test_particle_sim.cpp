#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "numvar/particle_sim.hpp"

using namespace nv;

namespace {

SystemConfig make(double alpha, double c, double t, double a = 1.0) {
    SystemConfig cfg;
    cfg.stable = {alpha, c};
    cfg.t = t;
    cfg.a = a;
    return cfg;
}

double sample_mean(const std::vector<std::int32_t>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

TEST(Plan, StrictPlanMeetsTolerance) {
    for (double alpha : {0.6, 1.5, 2.0}) {
        const auto cfg = make(alpha, 1.0, 1.0);
        const double tol = alpha < 1.0 ? 1e-2 : 1e-6;
        const auto p = plan_truncation(cfg, 4.0, tol);
        EXPECT_LE(p.boundary_mass, tol) << alpha;
        EXPECT_GE(p.padding, 0.0);
        EXPECT_LE(p.j_min, 0);
        EXPECT_GE(p.j_max, 4);
    }
}

TEST(Plan, TighterToleranceNestsWindows) {
    const auto cfg = make(1.2, 1.0, 1.0);
    const auto loose = plan_truncation(cfg, 3.0, 1e-3);
    const auto tight = plan_truncation(cfg, 3.0, 1e-6);
    EXPECT_LE(tight.j_min, loose.j_min);
    EXPECT_GE(tight.j_max, loose.j_max);
    const auto comp = plan_truncation(cfg, 3.0, 1e-6, PlanKind::compensated);
    EXPECT_LE(comp.size(), tight.size());
    EXPECT_LE(comp.edge_q * comp.boundary_mass, 1e-6);
}

TEST(Plan, BrownianPaddingIsAFewSigma) {
    const auto cfg = make(2.0, 0.5, 1.0);
    const auto p = plan_truncation(cfg, 1.0, 1e-8);
    const double sigma = 1.0;  // sd of X(1) with c = 1/2
    EXPECT_GT(p.padding, 4.0 * sigma);
    EXPECT_LT(p.padding, 8.0 * sigma);
}

TEST(Plan, BudgetExceeded) {
    const auto cfg = make(0.3, 1.0, 1.0);
    try {
        plan_truncation(cfg, 1.0, 1e-12, PlanKind::strict, 1000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical);
        EXPECT_NE(std::string(e.what()).find("truncation budget exceeded"), std::string::npos);
    }
    EXPECT_THROW(plan_truncation(make(1.0, 1.0, 0.0), 1.0, 1e-6), Error);
    EXPECT_THROW(plan_truncation(make(1.0, 1.0, 1.0), 1.0, 0.0), Error);
}

TEST(Simulate, ZeroLengthGivesZeroCounts) {
    const auto cfg = make(1.5, 1.0, 1.0);
    const auto s = simulate_counts(cfg, 0.0, plan_truncation(cfg, 0.0, 1e-6), 50, 1);
    for (auto c : s.counts) EXPECT_EQ(c, 0);
}

TEST(Simulate, FrozenLatticeCount) {
    const auto cfg = make(1.5, 1.0, 0.0);
    TruncationPlan p;
    const auto s = simulate_counts(cfg, 5.0, p, 1000, 3);
    for (auto c : s.counts) EXPECT_EQ(c, 5);
    const auto frac = simulate_counts(cfg, 2.5, p, 1000, 3);
    for (auto c : frac.counts) EXPECT_TRUE(c == 2 || c == 3);
    EXPECT_NEAR(sample_mean(frac.counts), 2.5, 0.1);
}

TEST(Simulate, MeanAndVarianceMatchTheory) {
    const auto cfg = make(1.5, 1.0, 1.0);
    const double L = 5.0;
    const auto plan = plan_truncation(cfg, L, 1e-8, PlanKind::compensated);
    const auto s = simulate_counts(cfg, L, plan, 40000, 11);
    const auto est = empirical_numvar(s);
    EXPECT_NEAR(est.mean, L, 4.0 * est.mean_se);
    const auto law = exact_law(cfg, L, plan);
    EXPECT_LT(est.ci_lo, est.V_hat);
    EXPECT_GT(est.ci_hi, est.V_hat);
    const double half = 0.5 * (est.ci_hi - est.ci_lo);
    EXPECT_NEAR(est.V_hat, law.c2(), 2.5 * half);
}

TEST(Simulate, WorkerCountDoesNotChangeCounts) {
    const auto cfg = make(0.8, 1.0, 1.0);
    const auto plan = plan_truncation(cfg, 3.0, 1e-6, PlanKind::compensated);
    const auto one = simulate_counts(cfg, 3.0, plan, 3000, 5, 1);
    const auto three = simulate_counts(cfg, 3.0, plan, 3000, 5, 3);
    EXPECT_EQ(one.counts, three.counts);
    const auto other = simulate_counts(cfg, 3.0, plan, 3000, 6, 1);
    EXPECT_NE(one.counts, other.counts);
}

TEST(Simulate, InsufficientReplications) {
    std::vector<std::int32_t> few(50, 1);
    EXPECT_THROW(empirical_numvar(few, 1), Error);
    std::vector<std::int32_t> constant(200, 4);
    const auto est = empirical_numvar(constant, 1);
    EXPECT_EQ(est.V_hat, 0.0);
    EXPECT_EQ(est.mean, 4.0);
}

TEST(ExactLaw, NormalizedWithCorrectMeanAndVariance) {
    for (double alpha : {0.7, 1.0, 1.6, 2.0}) {
        const auto cfg = make(alpha, 1.0, 1.0);
        const double L = 6.0;
        const auto plan = plan_truncation(cfg, L, 1e-9, PlanKind::compensated, 100'000);
        const auto law = exact_law(cfg, L, plan);
        const double total = std::accumulate(law.pmf.begin(), law.pmf.end(), 0.0);
        EXPECT_NEAR(total, 1.0, 1e-12) << alpha;
        EXPECT_NEAR(law.c1(), L, 1e-9) << alpha;
        EXPECT_NEAR(law.c2(), numvar(cfg, L, 1e-11).V, plan.variance_error_bound() + 1e-8) << alpha;
        double m = 0.0, v = 0.0;
        for (std::size_t k = 0; k < law.pmf.size(); ++k) m += k * law.pmf[k];
        for (std::size_t k = 0; k < law.pmf.size(); ++k) v += (k - m) * (k - m) * law.pmf[k];
        EXPECT_NEAR(m, law.c1(), 1e-9);
        EXPECT_NEAR(v, law.c2(), 1e-8);
    }
}

TEST(ExactLaw, TranslationInvariant) {
    struct Case {
        double alpha, tol, agree;
        PlanKind kind;
    };
    // heavy tails cannot reach a tight strict plan; there the agreement is at truncation level
    for (const Case c : {Case{2.0, 1e-13, 1e-10, PlanKind::strict}, Case{1.3, 1e-9, 1e-6, PlanKind::compensated}}) {
        const auto cfg = make(c.alpha, 1.0, 1.0);
        const double L = 4.0;
        const auto plan = plan_truncation(cfg, L, c.tol, c.kind, 100'000);
        const auto base = exact_law_interval(cfg, 0.0, L, plan);
        for (double lo : {0.37, 5.0, -12.81}) {
            const auto moved = exact_law_interval(cfg, lo, L, plan);
            EXPECT_NEAR(moved.c2(), base.c2(), c.agree) << c.alpha << " " << lo;
            for (std::size_t k = 0; k < std::min(base.pmf.size(), moved.pmf.size()); ++k)
                EXPECT_NEAR(moved.pmf[k], base.pmf[k], c.agree);
        }
    }
}

TEST(ExactLaw, PoissonDistanceWithinBounds) {
    for (double alpha : {0.5, 1.5}) {
        const auto cfg = make(alpha, 1.0, 1.0);
        for (double L : {1.0, 5.0}) {
            const auto plan = plan_truncation(cfg, L, 1e-8, PlanKind::compensated, 100'000);
            const auto law = exact_law(cfg, L, plan);
            const double tv = tv_to_poisson(law.pmf, L);
            const auto b = poisson_tv_bounds(L, 1.0, law.c2());
            EXPECT_GE(tv, b.lower);
            EXPECT_LE(tv, b.upper);
        }
    }
}

TEST(ExactLaw, TruncationErrorDominatesPlanChange) {
    const auto cfg = make(0.9, 1.0, 1.0);
    const double L = 3.0;
    const auto loose = plan_truncation(cfg, L, 1e-4, PlanKind::compensated, 100'000);
    const auto tight = plan_truncation(cfg, L, 1e-9, PlanKind::compensated, 100'000);
    const ExactLawOptions opt{.pmf = false};
    const double diff = std::abs(exact_law(cfg, L, loose, opt).c2() - exact_law(cfg, L, tight, opt).c2());
    EXPECT_LE(diff, loose.variance_error_bound() + tight.variance_error_bound());
}

TEST(ExactLaw, WindowCap) {
    const auto cfg = make(1.5, 1.0, 1.0);
    const auto plan = plan_truncation(cfg, 5.0, 1e-8);
    ExactLawOptions opt;
    opt.max_particles = 5;
    EXPECT_THROW(exact_law(cfg, 5.0, plan, opt), Error);
}

TEST(ExactLaw, AgreesWithSimulation) {
    const auto cfg = make(0.8, 1.0, 0.5);
    const double L = 3.0;
    const auto plan = plan_truncation(cfg, L, 1e-8, PlanKind::compensated, 100'000);
    const auto law = exact_law(cfg, L, plan);
    const auto s = simulate_counts(cfg, L, plan, 20000, 21);
    std::vector<double> freq(law.pmf.size() + 64, 0.0);
    for (auto c : s.counts) freq[static_cast<std::size_t>(c)] += 1.0 / 20000.0;
    double tv = 0.0;
    for (std::size_t k = 0; k < freq.size(); ++k) tv += std::abs(freq[k] - (k < law.pmf.size() ? law.pmf[k] : 0.0));
    EXPECT_LT(0.5 * tv, 0.02);
}

TEST(Clt, SkewShrinksWithLength) {
    const auto cfg = make(1.5, 1.0, 1.0);
    const ExactLawOptions opt{.pmf = false};
    const auto small = exact_law(cfg, 5.0, plan_truncation(cfg, 5.0, 1e-5, PlanKind::compensated, 100'000), opt);
    const auto large = exact_law(cfg, 200.0, plan_truncation(cfg, 200.0, 1e-5, PlanKind::compensated, 100'000), opt);
    EXPECT_LT(std::abs(clt_diagnostic(large).skew_ratio), std::abs(clt_diagnostic(small).skew_ratio));
}

TEST(Clt, LatticeKsOnPoissonSample) {
    std::mt19937_64 gen(5);
    std::poisson_distribution<int> pois(1000.0);
    std::vector<std::int32_t> counts(20000);
    for (auto& c : counts) c = pois(gen);
    EXPECT_LT(ks_lattice_normal(counts, 1000.0, 1000.0), 0.02);
    EXPECT_LT(ks_critical_1pct(10000), 0.0163);
    EXPECT_NEAR(kolmogorov_pvalue(1.628), 0.01, 5e-4);
}

TEST(PoissonInitial, InvariantLaw) {
    const StableLaw law({1.2, 1.0}, 1.0);
    const auto s = simulate_poisson_initial(1.0, law, 10.0, 20000, 4);
    std::vector<std::int32_t> counts = s.counts;
    const auto est = empirical_numvar(counts, 4, 500);
    EXPECT_NEAR(est.mean, 10.0, 4.0 * est.mean_se);
    EXPECT_GT(est.ci_hi, 10.0 * 0.97);
    EXPECT_LT(est.ci_lo, 10.0 * 1.03);
}

TEST(PoissonInitial, FrozenTime) {
    const StableLaw law({1.2, 1.0}, 0.0);
    const auto s = simulate_poisson_initial(2.0, law, 3.0, 20000, 8);
    EXPECT_EQ(s.window_padding, 0.0);
    const auto est = empirical_numvar(s.counts, 8, 200);
    EXPECT_NEAR(est.mean, 6.0, 4.0 * est.mean_se);
    EXPECT_NEAR(est.V_hat, 6.0, 0.3);
}
