#pragma once

// Grid parsing and CSV/JSON emission. Every artifact starts with a comment
// line (CSV) or a "meta" object (JSON) holding the resolved run
// configuration and the code version.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "numvar/error.hpp"
#include "numvar/gp_limit.hpp"
#include "numvar/numvar_analytic.hpp"
#include "numvar/particle_sim.hpp"
#include "numvar/version.hpp"

namespace nv::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form of a double.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

/// Parses a real, also accepting the forms "10^k" and "m*10^k".
inline double parse_number(const std::string& text) {
    std::string s = text;
    double mult = 1.0;
    if (const auto star = s.find('*'); star != std::string::npos) {
        mult = parse_number(s.substr(0, star));
        s = s.substr(star + 1);
    }
    if (const auto caret = s.find('^'); caret != std::string::npos)
        return mult * std::pow(parse_number(s.substr(0, caret)), parse_number(s.substr(caret + 1)));
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end == s.c_str() || *end != '\0') usage_error("not a number: '" + text + "'");
    return mult * v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

/// Grid syntax:
///   start:stop:step          linear, stop included when hit
///   log:start:stop:points    geometric
///   start:stop               geometric with 10 points per decade
///   v1,v2,...                explicit list
inline std::vector<double> parse_grid(const std::string& text) {
    if (text.empty()) usage_error("empty grid");
    std::vector<double> g;
    const auto parts = split(text, ':');
    if (parts.size() == 1) {
        for (const auto& p : split(text, ',')) g.push_back(parse_number(p));
    } else if (parts[0] == "log") {
        if (parts.size() != 4) usage_error("log grid needs log:start:stop:points");
        const double lo = parse_number(parts[1]);
        const double hi = parse_number(parts[2]);
        const double pts = parse_number(parts[3]);
        if (pts < 2 || pts != std::floor(pts)) usage_error("log grid needs an integer number of points >= 2");
        g = geometric_grid(lo, hi, static_cast<int>(pts));
    } else if (parts.size() == 2) {
        const double lo = parse_number(parts[0]);
        const double hi = parse_number(parts[1]);
        if (!(lo > 0.0 && hi > lo)) usage_error("geometric grid needs 0 < start < stop");
        const int pts = static_cast<int>(std::ceil(10.0 * std::log10(hi / lo))) + 1;
        g = geometric_grid(lo, hi, pts);
    } else if (parts.size() == 3) {
        const double lo = parse_number(parts[0]);
        const double hi = parse_number(parts[1]);
        const double step = parse_number(parts[2]);
        if (!(step > 0.0) || hi < lo) usage_error("linear grid needs step > 0 and stop >= start");
        const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
        if (n > 10'000'000) usage_error("grid too large");
        for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
    } else {
        usage_error("unrecognized grid syntax: '" + text + "'");
    }
    if (g.empty()) usage_error("empty grid");
    return g;
}

inline json config_json(const SystemConfig& cfg) {
    return json{{"alpha", cfg.alpha()}, {"c", cfg.c()}, {"a", cfg.a}, {"t", cfg.t}};
}

inline json plan_json(const TruncationPlan& p) {
    return json{{"kind", to_string(p.kind)},
                {"j_min", p.j_min},
                {"j_max", p.j_max},
                {"particles", p.size()},
                {"padding", p.padding},
                {"boundary_mass", p.boundary_mass},
                {"edge_q", p.edge_q},
                {"variance_error_bound", p.variance_error_bound()}};
}

/// {"version": ..., "command": ..., "run": run}
inline json meta(const std::string& command, const json& run) {
    return json{{"version", kVersion}, {"command", command}, {"run", run}};
}

inline void write_meta_comment(std::ostream& os, const json& m) { os << "# " << m.dump() << '\n'; }

inline void write_curve_csv(std::ostream& os, const json& m, const NumVarCurve& curve,
                            const std::optional<NumVarCurve>& closed, std::optional<double> saturation,
                            const std::optional<NumVarCurve>& sine) {
    write_meta_comment(os, m);
    os << "L,V,err";
    if (closed) os << ",closed";
    if (saturation) os << ",saturation";
    if (sine) os << ",sine_kernel";
    os << '\n';
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        os << fmt(p.L) << ',' << fmt(p.V) << ',' << fmt(p.err);
        if (closed) os << ',' << fmt(closed->points[i].V);
        if (saturation) os << ',' << fmt(*saturation);
        if (sine) os << ',' << fmt(sine->points[i].V);
        os << '\n';
    }
}

inline json curve_json(const json& m, const NumVarCurve& curve, const std::optional<NumVarCurve>& closed,
                       std::optional<double> saturation, const std::optional<NumVarCurve>& sine) {
    json rows = json::array();
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        json r{{"L", p.L}, {"V", p.V}, {"err", p.err}};
        if (closed) r["closed"] = closed->points[i].V;
        if (sine) r["sine_kernel"] = sine->points[i].V;
        rows.push_back(r);
    }
    json out{{"meta", m}, {"method", to_string(curve.method)}, {"points", rows}};
    if (saturation) out["saturation_level"] = *saturation;
    return out;
}

inline void write_sample_csv(std::ostream& os, const json& m, std::span<const std::int32_t> counts) {
    write_meta_comment(os, m);
    os << "replication,count\n";
    for (std::size_t r = 0; r < counts.size(); ++r) os << r << ',' << counts[r] << '\n';
}

inline void write_law_csv(std::ostream& os, const json& m, const CountingLaw& law) {
    write_meta_comment(os, m);
    os << "k,prob\n";
    for (std::size_t k = 0; k < law.pmf.size(); ++k) os << k << ',' << fmt(law.pmf[k]) << '\n';
}

/// Covariance matrix with the grid as header row and first column.
inline void write_cov_csv(std::ostream& os, const json& m, const CovSpec& cov) {
    write_meta_comment(os, m);
    os << "s";
    for (double s : cov.grid) os << ',' << fmt(s);
    os << '\n';
    for (Eigen::Index i = 0; i < cov.matrix.rows(); ++i) {
        os << fmt(cov.grid[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < cov.matrix.cols(); ++j) os << ',' << fmt(cov.matrix(i, j));
        os << '\n';
    }
}

inline void write_paths_csv(std::ostream& os, const json& m, const PathSample& p) {
    write_meta_comment(os, m);
    os << "replication,s,value\n";
    for (Eigen::Index r = 0; r < p.paths.rows(); ++r)
        for (Eigen::Index i = 0; i < p.paths.cols(); ++i)
            os << r << ',' << fmt(p.grid[static_cast<std::size_t>(i)]) << ',' << fmt(p.paths(r, i)) << '\n';
}

/// Diagnostic rows {key, s, value, target, ratio}; key is "b", "u" or "eps".
inline json rows_json(const std::string& key, const std::vector<LimitRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back(json{{key, r.scale}, {"s", r.s}, {"value", r.value}, {"target", r.target}, {"ratio", r.ratio}});
    return out;
}

}  // namespace nv::io
