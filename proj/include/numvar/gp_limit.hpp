#pragma once

// Gaussian limit of the rescaled counting function: covariance
// 1/2 (f(s) + f(r) - f(|s - r|)) with f = V_1, path sampling, and the
// structural diagnostics (increments, long memory, scaling, fBm limit).

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "numvar/error.hpp"
#include "numvar/numvar_analytic.hpp"
#include "numvar/quadrature.hpp"
#include "numvar/rng.hpp"
#include "numvar/stable_core.hpp"

namespace nv {

enum class CovKind { G_alpha, fbm, brownian, brownian_bridge };

inline std::string to_string(CovKind k) {
    switch (k) {
        case CovKind::G_alpha: return "G_alpha";
        case CovKind::fbm: return "fbm";
        case CovKind::brownian: return "brownian";
        case CovKind::brownian_bridge: return "brownian_bridge";
    }
    return "unknown";
}

struct CovSpec {
    std::vector<double> grid;
    Eigen::MatrixXd matrix;
    CovKind kind = CovKind::G_alpha;
    SystemConfig config;  // G_alpha
    double hurst = 0.5;   // fbm
    double scale = 1.0;   // fbm k, bridge length a
    Eigen::MatrixXd factor;  // lower-triangular, factor * factor^T = matrix + jitter
    double jitter = 0.0;
};

struct PathSample {
    std::vector<double> grid;
    Eigen::MatrixXd paths;  // replications x grid points
    std::uint64_t seed = 0;
};

inline constexpr double kCovTol = 1e-11;

/// Memoized f = V_1 for one configuration.
class FCache {
public:
    explicit FCache(SystemConfig cfg, double tol = kCovTol) : cfg_(cfg), tol_(tol) { cfg_.validate(); }

    double operator()(double s) {
        s = std::abs(s);
        if (s == 0.0) return 0.0;
        const auto it = values_.find(s);
        if (it != values_.end()) return it->second;
        const double v = f_limit_variance(cfg_, s, tol_).V;
        values_.emplace(s, v);
        return v;
    }

    std::size_t size() const { return values_.size(); }

private:
    SystemConfig cfg_;
    double tol_;
    std::map<double, double> values_;
};

namespace gp_detail {

inline void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) usage_error("grid must not be empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !std::isfinite(grid[i])) usage_error("grid values must be nonnegative and finite");
        if (i > 0 && !(grid[i] > grid[i - 1])) usage_error("grid must be strictly increasing");
    }
}

// Cholesky with escalating diagonal jitter; throws with the smallest eigenvalue on failure.
inline void certify(CovSpec& cov) {
    const auto n = cov.matrix.rows();
    const double max_diag = n > 0 ? cov.matrix.diagonal().maxCoeff() : 0.0;
    if (max_diag <= 0.0) {
        cov.factor = Eigen::MatrixXd::Zero(n, n);
        cov.jitter = 0.0;
        return;
    }
    for (double rel : {0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10}) {
        const double j = rel * max_diag;
        Eigen::MatrixXd m = cov.matrix;
        m.diagonal().array() += j;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() == Eigen::Success) {
            cov.factor = llt.matrixL();
            cov.jitter = j;
            return;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix, Eigen::EigenvaluesOnly);
    numerical_error("covariance is not positive semidefinite: smallest eigenvalue " +
                    std::to_string(eig.eigenvalues().minCoeff()));
}

}  // namespace gp_detail

/// Covariance of G on a grid.
inline CovSpec cov_G(const SystemConfig& cfg, const std::vector<double>& grid, FCache& f) {
    gp_detail::check_grid(grid);
    CovSpec cov;
    cov.grid = grid;
    cov.kind = CovKind::G_alpha;
    cov.config = cfg;
    const auto n = static_cast<Eigen::Index>(grid.size());
    cov.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double s = grid[static_cast<std::size_t>(i)];
            const double r = grid[static_cast<std::size_t>(j)];
            const double v = i == j ? f(s) : 0.5 * (f(s) + f(r) - f(s - r));
            cov.matrix(i, j) = v;
            cov.matrix(j, i) = v;
        }
    }
    gp_detail::certify(cov);
    return cov;
}

inline CovSpec cov_G(const SystemConfig& cfg, const std::vector<double>& grid, double tol = kCovTol) {
    FCache f(cfg, tol);
    return cov_G(cfg, grid, f);
}

/// k/2 (s^{2H} + r^{2H} - |s - r|^{2H}).
inline CovSpec cov_fbm(double H, double k, const std::vector<double>& grid) {
    if (!(H > 0.0 && H < 1.0)) usage_error("Hurst parameter must lie in (0, 1)");
    if (!(k > 0.0)) usage_error("fBm scale must be positive");
    gp_detail::check_grid(grid);
    CovSpec cov;
    cov.grid = grid;
    cov.kind = CovKind::fbm;
    cov.hurst = H;
    cov.scale = k;
    const auto n = static_cast<Eigen::Index>(grid.size());
    cov.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = grid[static_cast<std::size_t>(i)];
            const double r = grid[static_cast<std::size_t>(j)];
            cov.matrix(i, j) = 0.5 * k * (std::pow(s, 2 * H) + std::pow(r, 2 * H) - std::pow(std::abs(s - r), 2 * H));
        }
    gp_detail::certify(cov);
    return cov;
}

inline CovSpec cov_brownian(const std::vector<double>& grid) {
    gp_detail::check_grid(grid);
    CovSpec cov;
    cov.grid = grid;
    cov.kind = CovKind::brownian;
    const auto n = static_cast<Eigen::Index>(grid.size());
    cov.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cov.matrix(i, j) = std::min(grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)]);
    gp_detail::certify(cov);
    return cov;
}

/// Brownian bridge of length a: min(s, r) - s r / a.
inline CovSpec cov_brownian_bridge(double a, const std::vector<double>& grid) {
    if (!(a > 0.0)) usage_error("bridge length must be positive");
    gp_detail::check_grid(grid);
    if (grid.back() > a) usage_error("bridge grid must lie in [0, a]");
    CovSpec cov;
    cov.grid = grid;
    cov.kind = CovKind::brownian_bridge;
    cov.scale = a;
    const auto n = static_cast<Eigen::Index>(grid.size());
    cov.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = grid[static_cast<std::size_t>(i)];
            const double r = grid[static_cast<std::size_t>(j)];
            cov.matrix(i, j) = std::min(s, r) - s * r / a;
        }
    gp_detail::certify(cov);
    return cov;
}

/// Gaussian paths as factor * N(0, I), one Philox stream per replication.
inline PathSample sample_paths(const CovSpec& cov, std::int64_t replications, std::uint64_t seed) {
    if (replications <= 0) usage_error("replications must be positive");
    const auto n = static_cast<Eigen::Index>(cov.grid.size());
    if (cov.factor.rows() != n) usage_error("covariance has no certified factor");
    PathSample out;
    out.grid = cov.grid;
    out.seed = seed;
    out.paths.resize(replications, n);
    Eigen::VectorXd z(n);
    for (std::int64_t r = 0; r < replications; ++r) {
        rng::Stream gen(seed, static_cast<std::uint64_t>(r), 0, rng::Purpose::gaussian_path);
        for (Eigen::Index i = 0; i < n; ++i) z(i) = gen.normal();
        out.paths.row(r) = (cov.factor.triangularView<Eigen::Lower>() * z).transpose();
    }
    return out;
}

/// Cov(G(u+s) - G(u), G(u+s+r) - G(u+s)) in the form
/// 1/2 (f(s+r+u) - f(r+u) - [f(s+u) - f(u)]), evaluated as
/// -(1/a^2) int tau(w) p_Z((u + w)/a) dw with Z = X(2/a^alpha),
/// which keeps full relative accuracy when the value is tiny.
inline double increment_cov(const SystemConfig& cfg, double s, double r, double u) {
    cfg.validate();
    if (!(s >= 0.0 && r >= 0.0 && u >= 0.0)) usage_error("increment_cov requires s, r, u >= 0");
    if (s == 0.0 || r == 0.0) return 0.0;
    const StableLaw z_law = cfg.with_t(1.0).pair_law();
    // after w -> w/a the trapezoid integral picks up a factor a; with 1/a^2 this leaves 1/a
    const double a = cfg.a;
    const double lo = std::min(s, r) / a;
    const double hi = std::max(s, r) / a;
    const double uu = u / a;
    auto tau = [&](double w) {
        if (w <= lo) return w;
        if (w <= hi) return lo;
        return lo + hi - w;
    };
    auto g = [&](double w) { return tau(w) * density(z_law, uu + w); };
    std::vector<double> br = {0.0, lo, hi, lo + hi};
    br.erase(std::unique(br.begin(), br.end()), br.end());
    return -quad::adaptive(g, br, 1e-300, 1e-12, 4000).value;
}

/// The same quantity from four f values; used as a cross-check at small u.
inline double increment_cov_from_f(FCache& f, double s, double r, double u) {
    return 0.5 * (f(s + r + u) - f(r + u) - (f(s + u) - f(u)));
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
    bool truncated = false;
};

/// Least-squares slope of log|increment_cov| against log u; points with
/// |cov| < 1e-14 are dropped.
inline SlopeFit longmem_slope(const SystemConfig& cfg, double s, double r, const std::vector<double>& u_grid) {
    if (!(cfg.alpha() < 2.0)) usage_error("longmem_slope requires alpha < 2");
    if (u_grid.size() < 2) usage_error("u grid needs at least two points");
    const auto [mn, mx] = std::minmax_element(u_grid.begin(), u_grid.end());
    if (!(*mn > 0.0) || *mx / *mn < 100.0 * (1.0 - 1e-12)) usage_error("u grid must be positive and span at least two decades");
    std::vector<double> xs, ys;
    SlopeFit fit;
    for (double u : u_grid) {
        const double v = std::abs(increment_cov(cfg, s, r, u));
        if (v < 1e-14) {
            fit.truncated = true;
            continue;
        }
        xs.push_back(std::log(u));
        ys.push_back(std::log(v));
    }
    if (xs.size() < 2) numerical_error("increment covariance underflows on the whole grid");
    const double n = static_cast<double>(xs.size());
    double mx_ = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx_ += xs[i];
        my += ys[i];
    }
    mx_ /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx_) * (xs[i] - mx_);
        sxy += (xs[i] - mx_) * (ys[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx_;
    fit.points = xs.size();
    return fit;
}

inline std::vector<double> geometric_grid(double lo, double hi, int points) {
    if (!(lo > 0.0 && hi > lo) || points < 2) usage_error("geometric grid needs 0 < lo < hi and >= 2 points");
    std::vector<double> g(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
    g.back() = hi;
    return g;
}

/// max |cov_G(c on b grid) - b cov_G(c / b^alpha on grid)|.
inline double scaling_check(const SystemConfig& cfg, double b, const std::vector<double>& grid) {
    if (!(b > 0.0)) usage_error("scaling factor b must be positive");
    gp_detail::check_grid(grid);
    std::vector<double> scaled(grid.size());
    std::transform(grid.begin(), grid.end(), scaled.begin(), [b](double s) { return b * s; });
    SystemConfig small = cfg;
    small.stable.c = cfg.c() / std::pow(b, cfg.alpha());
    FCache f_big(cfg, 1e-13);
    FCache f_small(small, 1e-13);
    double gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            const double lhs = 0.5 * (f_big(scaled[i]) + f_big(scaled[j]) - f_big(scaled[i] - scaled[j]));
            const double rhs = 0.5 * (f_small(grid[i]) + f_small(grid[j]) - f_small(grid[i] - grid[j]));
            gap = std::max(gap, std::abs(lhs - b * rhs));
        }
    return gap;
}

/// (4c / (a pi)) Gamma(alpha - 1) sin(-alpha pi / 2).
inline double fbm_constant(const SystemConfig& cfg) {
    const double alpha = cfg.alpha();
    if (!(alpha < 1.0)) usage_error("fBm limit requires alpha < 1");
    return 4.0 * cfg.c() / (cfg.a * std::numbers::pi) * std::tgamma(alpha - 1.0) * std::sin(-alpha * std::numbers::pi / 2.0);
}

struct LimitRow {
    double scale = 0.0;  // b or epsilon
    double s = 0.0;
    double value = 0.0;
    double target = 0.0;
    double ratio = 0.0;
};

/// f(b s) / b^{1 - alpha} against k s^{1 - alpha} for each (b, s).
inline std::vector<LimitRow> fbm_limit_check(const SystemConfig& cfg, const std::vector<double>& b_grid,
                                             const std::vector<double>& s_grid) {
    const double k = fbm_constant(cfg);
    const double h = 1.0 - cfg.alpha();
    FCache f(cfg, 1e-12);
    std::vector<LimitRow> rows;
    for (double s : s_grid)
        for (double b : b_grid) {
            if (!(b > 0.0) || !(s > 0.0)) usage_error("fbm_limit_check requires positive b and s");
            LimitRow row{b, s, f(b * s) / std::pow(b, h), k * std::pow(s, h), 0.0};
            row.ratio = row.value / row.target;
            rows.push_back(row);
        }
    return rows;
}

/// eps^{-1} f(eps s) against s / a for each (eps, s); the s = 0 row is 0 = 0.
inline std::vector<LimitRow> small_time_brownian_check(const SystemConfig& cfg, const std::vector<double>& eps_grid,
                                                       const std::vector<double>& s_grid) {
    FCache f(cfg, 1e-13);
    std::vector<LimitRow> rows;
    for (double s : s_grid)
        for (double e : eps_grid) {
            if (!(e > 0.0) || !(s >= 0.0)) usage_error("small_time_brownian_check requires eps > 0 and s >= 0");
            LimitRow row{e, s, f(e * s) / e, s / cfg.a, 0.0};
            row.ratio = s == 0.0 ? 1.0 : row.value / row.target;
            rows.push_back(row);
        }
    return rows;
}

/// f(s) / s against (1 - e^{-2c}) / a, the alpha -> 0 limit.
inline LimitRow alpha_zero_check(const SystemConfig& cfg, double s) {
    FCache f(cfg, 1e-13);
    LimitRow row{0.0, s, f(s) / s, -std::expm1(-2.0 * cfg.c()) / cfg.a, 0.0};
    row.ratio = row.value / row.target;
    return row;
}

struct MarkovWitness {
    double s = 0.0;
    double r = 0.0;
    double u = 0.0;
    double gap = 0.0;
};

inline constexpr double kMarkovTol = 1e-3;

/// Largest |rho(s,u) - rho(s,r) rho(r,u) / rho(r,r)| over s < r < u in {0.5, 1, ..., 5};
/// empty when no triple exceeds kMarkovTol.
inline std::optional<MarkovWitness> find_markov_witness(const std::function<double(double, double)>& rho) {
    std::optional<MarkovWitness> best;
    for (int i = 1; i <= 10; ++i)
        for (int j = i + 1; j <= 10; ++j)
            for (int k = j + 1; k <= 10; ++k) {
                const double s = 0.5 * i, r = 0.5 * j, u = 0.5 * k;
                const double gap = std::abs(rho(s, u) - rho(s, r) * rho(r, u) / rho(r, r));
                if (gap > kMarkovTol && (!best || gap > best->gap)) best = MarkovWitness{s, r, u, gap};
            }
    return best;
}

inline MarkovWitness markov_violation_witness(const SystemConfig& cfg) {
    cfg.validate();
    FCache f(cfg);
    auto rho = [&](double s, double r) { return 0.5 * (f(s) + f(r) - f(s - r)); };
    const auto w = find_markov_witness(rho);
    if (!w) numerical_error("no Markov-violation witness found on the search grid");
    return *w;
}

/// min(s, r)/a minus the integral of p_{2/a^alpha}(x, y) over [0, r/a] x [0, s/a],
/// computed from the density independently of f.
inline double cov_G_bridge_form(const SystemConfig& cfg, double s, double r) {
    cfg.validate();
    if (s == 0.0 || r == 0.0) return 0.0;
    const StableLaw z_law = cfg.with_t(1.0).pair_law();
    const double x = r / cfg.a;
    const double y = s / cfg.a;
    // int over w = y' - x' in [-x, y] of p(w) times the overlap length
    auto overlap = [&](double w) { return std::max(0.0, std::min(x, y - w) - std::max(0.0, -w)); };
    std::vector<double> br = {-x, std::min(0.0, y - x), std::max(0.0, y - x), y};
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    const double mass = quad::adaptive([&](double w) { return overlap(w) * density(z_law, w); }, br, 1e-14, 1e-13, 4000).value;
    return std::min(s, r) / cfg.a - mass;
}

/// H(s) = log(f(s) / kappa) / (2 log s); diagnostic only.
inline double implied_hurst(const SystemConfig& cfg, double s, double kappa) {
    if (!(s > 0.0) || s == 1.0) usage_error("implied_hurst requires s > 0 and s != 1");
    if (!(kappa > 0.0)) usage_error("kappa must be positive");
    return std::log(f_limit_variance(cfg, s).V / kappa) / (2.0 * std::log(s));
}

}  // namespace nv
