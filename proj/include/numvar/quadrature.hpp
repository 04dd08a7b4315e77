#pragma once

// Adaptive Gauss-Kronrod quadrature, Gauss-Legendre rules and an
// extrapolated integrator for slowly decaying oscillatory tails.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <utility>
#include <vector>

namespace nv::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = true;

    Result& operator+=(const Result& other) {
        value += other.value;
        error += other.error;
        evaluations += other.evaluations;
        converged = converged && other.converged;
        return *this;
    }
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Interval {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Interval& o) const { return error < o.error; }
};

}  // namespace detail

/// One 21-point Gauss-Kronrod panel with the QUADPACK error heuristic.
template <class F>
Result gk21(F&& f, double a, double b) {
    using namespace detail;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resg = 0.0;
    double resk = kWgk[10] * fc;
    double resabs = std::abs(resk);
    double fv1[10];
    double fv2[10];
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        const double f1 = f(center - dx);
        const double f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += kWgk[j] * (f1 + f2);
        resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    const double mean = 0.5 * resk;
    double resasc = kWgk[10] * std::abs(fc - mean);
    for (int j = 0; j < 10; ++j) resasc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));

    Result r;
    r.value = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    r.error = err;
    r.evaluations = 21;
    return r;
}

/// Globally adaptive bisection over the given breakpoints until the summed
/// error estimate drops below max(abs_tol, rel_tol * |value|).
template <class F>
Result adaptive(F&& f, std::span<const double> breaks, double abs_tol, double rel_tol = 0.0,
                int max_intervals = 4000) {
    Result total;
    if (breaks.size() < 2) return total;
    std::priority_queue<detail::Interval> heap;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (breaks[i] == breaks[i + 1]) continue;
        const Result r = gk21(f, breaks[i], breaks[i + 1]);
        heap.push({breaks[i], breaks[i + 1], r.value, r.error});
        total.value += r.value;
        total.error += r.error;
        total.evaluations += r.evaluations;
    }
    int count = static_cast<int>(heap.size());
    while (!heap.empty() && total.error > std::max(abs_tol, rel_tol * std::abs(total.value))) {
        if (count >= max_intervals) {
            total.converged = false;
            break;
        }
        const detail::Interval worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // interval at machine resolution; accept what is there
            total.converged = false;
            break;
        }
        heap.pop();
        const Result left = gk21(f, worst.a, mid);
        const Result right = gk21(f, mid, worst.b);
        total.value += left.value + right.value - worst.value;
        total.error += left.error + right.error - worst.error;
        total.evaluations += left.evaluations + right.evaluations;
        heap.push({worst.a, mid, left.value, left.error});
        heap.push({mid, worst.b, right.value, right.error});
        ++count;
    }
    // resum to shed accumulated cancellation from the running updates
    double value = 0.0;
    double error = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    total.value = value;
    total.error = error;
    return total;
}

template <class F>
Result adaptive(F&& f, double a, double b, double abs_tol, double rel_tol = 0.0, int max_intervals = 4000) {
    const double br[2] = {a, b};
    return adaptive(std::forward<F>(f), std::span<const double>(br, 2), abs_tol, rel_tol, max_intervals);
}

/// Integral over [a, inf) through the map x = a + (1 - u) / u.
template <class F>
Result adaptive_to_infinity(F&& f, double a, double abs_tol, double rel_tol = 0.0, int max_intervals = 4000) {
    auto g = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double x = a + (1.0 - u) / u;
        const double v = f(x);
        return v == 0.0 ? 0.0 : v / (u * u);
    };
    return adaptive(g, 0.0, 1.0, abs_tol, rel_tol, max_intervals);
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [lo, hi].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline Rule gauss_legendre(int n, double lo = -1.0, double hi = 1.0) {
    Rule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo_i = static_cast<std::size_t>(i);
        const auto hi_i = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo_i] = mid - half * x;
        rule.nodes[hi_i] = mid + half * x;
        rule.weights[lo_i] = half * w;
        rule.weights[hi_i] = half * w;
    }
    return rule;
}

/// Composite rule: `panels` equal panels on [lo, hi], each with an n-point
/// Gauss-Legendre rule.
inline Rule composite_gauss_legendre(int panels, int n, double lo, double hi) {
    Rule out;
    const double width = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
        const Rule r = gauss_legendre(n, lo + p * width, lo + (p + 1) * width);
        out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
        out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
    }
    return out;
}

/// Wynn epsilon extrapolation of a sequence of partial sums. Returns the
/// estimate and a heuristic error from the last two diagonal entries.
inline std::pair<double, double> wynn_epsilon(std::span<const double> sums) {
    const std::size_t n = sums.size();
    if (n == 0) return {0.0, std::numeric_limits<double>::infinity()};
    if (n < 3) return {sums[n - 1], n > 1 ? std::abs(sums[n - 1] - sums[n - 2]) : std::abs(sums[0])};
    std::vector<double> prev(n, 0.0);
    std::vector<double> cur(sums.begin(), sums.end());
    double best = sums[n - 1];
    double best_prev = sums[n - 2];
    for (std::size_t k = 1; k < n; ++k) {
        std::vector<double> next(n - k);
        for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
            const double diff = cur[i + 1] - cur[i];
            if (diff == 0.0) return {cur[i + 1], std::abs(best - best_prev)};
            next[i] = prev[i + 1] + 1.0 / diff;
        }
        prev = std::move(cur);
        cur = std::move(next);
        if (k % 2 == 0 && !cur.empty()) {
            if (!std::isfinite(cur.back())) break;
            best_prev = cur.size() > 1 ? cur[cur.size() - 2] : best;
            best = cur.back();
        }
    }
    return {best, std::abs(best - best_prev)};
}

/// Integral of f over [start, inf) where f oscillates with zeros at
/// first_zero + k * spacing and a smooth, eventually monotone envelope.
/// Panels between zeros form an alternating series summed by Wynn epsilon.
template <class F>
Result oscillatory_tail(F&& f, double start, double first_zero, double spacing, double abs_tol,
                        int max_panels = 400) {
    Result total;
    std::vector<double> sums;
    sums.reserve(static_cast<std::size_t>(max_panels) + 1);
    double running = 0.0;
    const double panel_tol = std::max(abs_tol * 1e-3, 1e-300);
    if (first_zero > start) {
        const Result head = adaptive(f, start, first_zero, panel_tol, 1e-15);
        running += head.value;
        total.evaluations += head.evaluations;
        total.error += head.error;
    }
    double lo = std::max(start, first_zero);
    double last_est = running;
    int settled = 0;
    constexpr std::size_t window = 40;
    for (int k = 0; k < max_panels; ++k) {
        const double hi = lo + spacing;
        const Result panel = adaptive(f, lo, hi, panel_tol, 1e-15);
        total.evaluations += panel.evaluations;
        total.error += panel.error;
        running += panel.value;
        sums.push_back(running);
        lo = hi;
        if (sums.size() < 6) continue;
        const std::size_t from = sums.size() > window ? sums.size() - window : 0;
        const auto [est, err] = wynn_epsilon(std::span<const double>(sums).subspan(from));
        const double change = std::abs(est - last_est);
        last_est = est;
        if (std::max(change, err) <= abs_tol) {
            if (++settled >= 2) {
                total.value = est;
                total.error += std::max(change, err);
                return total;
            }
        } else {
            settled = 0;
        }
    }
    total.value = last_est;
    total.error += std::abs(last_est - running);
    total.converged = false;
    return total;
}

}  // namespace nv::quad
