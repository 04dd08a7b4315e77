// numvar_cli: number variance, simulation, exact laws, Gaussian limit and
// the acceptance suite from the command line.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 acceptance failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "numvar/all.hpp"

namespace {

using nv::io::json;

struct Common {
    double alpha = 2.0;
    double c = 0.5;
    double a = 1.0;
    double t = 1.0;
    std::string out;
    std::string format = "csv";

    nv::SystemConfig config() const {
        nv::SystemConfig cfg;
        cfg.stable = {alpha, c};
        cfg.a = a;
        cfg.t = t;
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* app, Common& o, bool with_t = true) {
    app->add_option("--alpha", o.alpha, "stability index in (0, 2]")->capture_default_str();
    app->add_option("--c", o.c, "scale: E exp(i theta X(t)) = exp(-t c |theta|^alpha)")->capture_default_str();
    app->add_option("--a", o.a, "lattice spacing")->capture_default_str();
    if (with_t) app->add_option("--t", o.t, "time")->capture_default_str();
    app->add_option("--out", o.out, "output file (default: stdout)");
    app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

std::uint64_t default_seed() {
    if (const char* s = std::getenv("NUMVAR_SEED")) return std::strtoull(s, nullptr, 10);
    return 1;
}

// Writes to --out or stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) nv::usage_error("cannot open output file: " + path);
        }
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

nv::PlanKind parse_plan(const std::string& s) { return s == "strict" ? nv::PlanKind::strict : nv::PlanKind::compensated; }

int run_numvar(const Common& o, const std::string& grid_text, const std::string& tol_text, const std::string& method,
               bool sine) {
    const auto cfg = o.config();
    const auto Ls = nv::io::parse_grid(grid_text);
    const double tol = nv::io::parse_number(tol_text);
    nv::NumVarCurve curve;
    if (method == "tail") {
        curve.config = cfg;
        curve.method = nv::CurveMethod::quadrature;
        for (double L : Ls) {
            const auto v = nv::numvar_via_tail(cfg, L, tol);
            curve.points.push_back({L, v.V, v.err});
        }
    } else {
        curve = nv::numvar_curve(cfg, Ls, tol);
    }
    const auto closed = nv::closed_curve(cfg, Ls);
    std::optional<double> sat;
    if (cfg.alpha() > 1.0 && cfg.t > 0.0) sat = nv::saturation_level(cfg);
    std::optional<nv::NumVarCurve> sk;
    if (sine) sk = nv::sine_kernel_curve(cfg.a, Ls, tol);
    const json m = nv::io::meta("numvar", json{{"config", nv::io::config_json(cfg)}, {"L", grid_text}, {"tol", tol_text},
                                               {"method", method}, {"sine_kernel", sine}});
    Sink sink(o.out);
    if (o.format == "json") sink.stream() << nv::io::curve_json(m, curve, closed, sat, sk).dump(2) << '\n';
    else nv::io::write_curve_csv(sink.stream(), m, curve, closed, sat, sk);
    return 0;
}

int run_simulate(const Common& o, double L, std::int64_t reps, std::uint64_t seed, const std::string& tol_text,
                 const std::string& plan_kind, unsigned workers, const std::string& samples_path) {
    const auto cfg = o.config();
    if (reps < 100) nv::usage_error("insufficient replications: need at least 100");
    const double tol = nv::io::parse_number(tol_text);
    const auto plan = nv::plan_truncation(cfg, L, tol, parse_plan(plan_kind));
    const auto sample = nv::simulate_counts(cfg, L, plan, reps, seed, workers);
    const auto est = nv::empirical_numvar(sample);
    const json run{{"config", nv::io::config_json(cfg)}, {"L", L}, {"replications", reps}, {"seed", seed},
                   {"tol_trunc", tol_text}, {"plan_kind", plan_kind}};
    const json m = nv::io::meta("simulate", run);
    json summary{{"meta", m}, {"plan", nv::io::plan_json(plan)}};
    summary["estimate"] = json{{"mean", est.mean}, {"mean_se", est.mean_se}, {"V_hat", est.V_hat},
                               {"ci95", {est.ci_lo, est.ci_hi}}, {"bootstrap_resamples", est.resamples}};
    if (L > 0.0 && cfg.t > 0.0) {
        const double V = nv::numvar(cfg, L).V;
        summary["analytic_V"] = V;
        summary["analytic_V_in_ci"] = est.ci_lo <= V && V <= est.ci_hi;
        if (L >= 1.0) {
            const auto b = nv::poisson_tv_bounds(L, cfg.a, V);
            summary["tv_bounds"] = json{{"lower", b.lower}, {"upper", b.upper}};
        }
        if (V > 0.0) {
            const auto d = nv::clt_diagnostic(sample, V);
            summary["clt"] = json{{"ks_stat", d.ks_stat}, {"ks_pvalue", d.ks_pvalue}, {"sample_skewness", d.skew_ratio},
                                  {"ks_critical_1pct", nv::ks_critical_1pct(sample.counts.size())}};
        }
    }
    if (!samples_path.empty()) {
        Sink s(samples_path);
        nv::io::write_sample_csv(s.stream(), m, sample.counts);
    }
    Sink sink(o.out);
    sink.stream() << summary.dump(2) << '\n';
    return 0;
}

int run_law(const Common& o, double L, const std::string& tol_text, const std::string& plan_kind, bool no_pmf) {
    const auto cfg = o.config();
    const double tol = nv::io::parse_number(tol_text);
    const auto plan = nv::plan_truncation(cfg, L, tol, parse_plan(plan_kind), nv::ExactLawOptions{}.max_particles);
    nv::ExactLawOptions opt;
    opt.pmf = !no_pmf;
    const auto law = nv::exact_law(cfg, L, plan, opt);
    const json m = nv::io::meta("law", json{{"config", nv::io::config_json(cfg)}, {"L", L}, {"tol_trunc", tol_text},
                                            {"plan_kind", plan_kind}});
    Sink sink(o.out);
    if (o.format == "csv" && !no_pmf) {
        nv::io::write_law_csv(sink.stream(), m, law);
        return 0;
    }
    json out{{"meta", m}, {"plan", nv::io::plan_json(plan)},
             {"cumulants", {law.c1(), law.c2(), law.c3(), law.c4()}}, {"far_mass", law.far_mass},
             {"truncation_error", law.truncation_error}};
    if (cfg.t > 0.0 && L > 0.0) out["analytic_V"] = nv::numvar(cfg, L).V;
    if (!law.pmf.empty()) {
        out["pmf"] = law.pmf;
        out["tv_to_poisson"] = nv::tv_to_poisson(law.pmf, law.lambda);
        if (L >= 1.0) {
            const auto b = nv::poisson_tv_bounds(L, cfg.a, std::min(law.c2(), law.lambda));
            out["tv_bounds"] = json{{"lower", b.lower}, {"upper", b.upper}};
        }
    }
    if (law.c2() > 0.0) out["skew_ratio"] = nv::clt_diagnostic(law).skew_ratio;
    sink.stream() << out.dump(2) << '\n';
    return 0;
}

struct GpArgs {
    std::string grid = "0.5:5:0.5";
    bool cov = false;
    std::int64_t paths = 0;
    bool slope = false;
    bool fbm = false;
    bool scaling = false;
    bool small_time = false;
    bool witness = false;
    bool increment = false;
    double s = 1.0;
    double r = 1.0;
    double u = 0.0;
    double b = 2.0;
    std::string u_grid = "log:1e2:1e4:21";
    std::string b_grid = "10,100,1000,10000";
    std::string s_grid = "0.5,1,2";
    std::string eps_grid = "1e-2,1e-3,1e-4";
    std::uint64_t seed = 1;
};

int run_gp(const Common& o, const GpArgs& g) {
    auto cfg = o.config();
    const int modes = g.cov + (g.paths > 0) + g.slope + g.fbm + g.scaling + g.small_time + g.witness + g.increment;
    if (modes != 1) nv::usage_error("gp needs exactly one of --cov, --paths, --slope, --fbm-limit, --scaling, --small-time, --witness, --increment");
    json run{{"config", json{{"alpha", cfg.alpha()}, {"c", cfg.c()}, {"a", cfg.a}}}};
    Sink sink(o.out);
    auto& os = sink.stream();
    if (g.cov || g.paths > 0) {
        const auto grid = nv::io::parse_grid(g.grid);
        run["grid"] = g.grid;
        const auto cov = nv::cov_G(cfg, grid);
        if (g.cov) {
            const json m = nv::io::meta("gp --cov", run);
            if (o.format == "json") {
                std::vector<std::vector<double>> rows(grid.size());
                for (std::size_t i = 0; i < grid.size(); ++i)
                    for (std::size_t j = 0; j < grid.size(); ++j)
                        rows[i].push_back(cov.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                os << json{{"meta", m}, {"grid", grid}, {"matrix", rows}, {"jitter", cov.jitter}}.dump(2) << '\n';
            } else {
                nv::io::write_cov_csv(os, m, cov);
            }
        } else {
            run["replications"] = g.paths;
            run["seed"] = g.seed;
            const auto p = nv::sample_paths(cov, g.paths, g.seed);
            nv::io::write_paths_csv(os, nv::io::meta("gp --paths", run), p);
        }
        return 0;
    }
    json out;
    if (g.slope) {
        run["s"] = g.s;
        run["r"] = g.r;
        run["u_grid"] = g.u_grid;
        const auto ug = nv::io::parse_grid(g.u_grid);
        const auto fit = nv::longmem_slope(cfg, g.s, g.r, ug);
        json rows = json::array();
        for (double u : ug) rows.push_back(json{{"u", u}, {"s", g.s}, {"value", nv::increment_cov(cfg, g.s, g.r, u)}});
        out = json{{"meta", nv::io::meta("gp --slope", run)}, {"slope", fit.slope}, {"target", -(cfg.alpha() + 1.0)},
                   {"points", fit.points}, {"truncated", fit.truncated}, {"rows", rows}};
    } else if (g.fbm) {
        run["b_grid"] = g.b_grid;
        run["s_grid"] = g.s_grid;
        const auto rows = nv::fbm_limit_check(cfg, nv::io::parse_grid(g.b_grid), nv::io::parse_grid(g.s_grid));
        out = json{{"meta", nv::io::meta("gp --fbm-limit", run)}, {"k", nv::fbm_constant(cfg)},
                   {"hurst", (1.0 - cfg.alpha()) / 2.0}, {"rows", nv::io::rows_json("b", rows)}};
    } else if (g.scaling) {
        const auto grid = nv::io::parse_grid(g.grid);
        run["grid"] = g.grid;
        run["b"] = g.b;
        out = json{{"meta", nv::io::meta("gp --scaling", run)}, {"max_gap", nv::scaling_check(cfg, g.b, grid)}};
    } else if (g.small_time) {
        run["eps_grid"] = g.eps_grid;
        run["s_grid"] = g.s_grid;
        const auto rows = nv::small_time_brownian_check(cfg, nv::io::parse_grid(g.eps_grid), nv::io::parse_grid(g.s_grid));
        out = json{{"meta", nv::io::meta("gp --small-time", run)}, {"rows", nv::io::rows_json("eps", rows)}};
    } else if (g.witness) {
        const auto w = nv::markov_violation_witness(cfg);
        out = json{{"meta", nv::io::meta("gp --witness", run)}, {"s", w.s}, {"r", w.r}, {"u", w.u}, {"gap", w.gap}};
    } else {
        run["s"] = g.s;
        run["r"] = g.r;
        run["u"] = g.u;
        out = json{{"meta", nv::io::meta("gp --increment", run)}, {"value", nv::increment_cov(cfg, g.s, g.r, g.u)}};
    }
    os << out.dump(2) << '\n';
    return 0;
}

int run_accept(std::uint64_t seed, const std::string& report, const std::string& only, bool quiet) {
    nv::accept::Options opt;
    opt.seed = seed;
    if (!only.empty())
        for (const auto& p : nv::io::split(only, ',')) opt.only.push_back(static_cast<int>(nv::io::parse_number(p)));
    if (!quiet) opt.log = [](const std::string& s) { std::cerr << s << '\n'; };
    const auto results = nv::accept::run_all(opt);
    bool all = true;
    for (const auto& r : results) {
        std::cout << nv::accept::summary_line(r) << '\n';
        all = all && r.pass;
    }
    if (!report.empty()) {
        Sink s(report);
        s.stream() << nv::accept::report_json(opt, results).dump(2) << '\n';
    }
    return all ? 0 : nv::exit_code(nv::ErrorKind::acceptance);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Number variance of independent symmetric alpha-stable particle systems"};
    app.set_version_flag("--version", std::string(nv::kVersion));
    app.require_subcommand(1);

    Common nv_opt;
    std::string L_grid, tol = "1e-9", method = "quadrature";
    bool sine = false;
    auto* numvar = app.add_subcommand("numvar", "number variance curve over an L grid");
    add_common(numvar, nv_opt);
    numvar->add_option("--L", L_grid, "grid: start:stop:step | log:start:stop:points | start:stop | v1,v2,...")->required();
    numvar->add_option("--tol", tol, "absolute quadrature tolerance")->capture_default_str();
    numvar->add_option("--method", method, "quadrature or tail")->check(CLI::IsMember({"quadrature", "tail"}))->capture_default_str();
    numvar->add_flag("--sine-kernel", sine, "add the sine-kernel reference column");

    Common sim_opt;
    double sim_L = 1.0;
    std::int64_t reps = 10000;
    std::uint64_t seed = default_seed();
    std::string tol_trunc = "1e-8", plan_kind = "compensated", samples;
    unsigned workers = 1;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo counts and empirical number variance");
    add_common(simulate, sim_opt);
    simulate->add_option("--L", sim_L, "interval length")->required();
    simulate->add_option("--replications,-R", reps, "replications (>= 100)")->capture_default_str();
    simulate->add_option("--seed", seed, "seed (default: $NUMVAR_SEED or 1)");
    simulate->add_option("--tol-trunc", tol_trunc, "truncation tolerance")->capture_default_str();
    simulate->add_option("--plan", plan_kind, "strict or compensated")->check(CLI::IsMember({"strict", "compensated"}))->capture_default_str();
    simulate->add_option("--workers", workers, "threads; results do not depend on this")->capture_default_str();
    simulate->add_option("--samples", samples, "write replication,count CSV here");

    Common law_opt;
    double law_L = 1.0;
    std::string law_tol = "1e-8", law_plan = "compensated";
    bool no_pmf = false;
    auto* law = app.add_subcommand("law", "exact counting law: pmf and cumulants");
    add_common(law, law_opt);
    law->add_option("--L", law_L, "interval length")->required();
    law->add_option("--tol-trunc", law_tol, "truncation tolerance")->capture_default_str();
    law->add_option("--plan", law_plan, "strict or compensated")->check(CLI::IsMember({"strict", "compensated"}))->capture_default_str();
    law->add_flag("--no-pmf", no_pmf, "cumulants only (JSON)");

    Common gp_opt;
    GpArgs g;
    g.seed = default_seed();
    gp_opt.c = 1.0;
    auto* gp = app.add_subcommand("gp", "Gaussian limit process: covariance, paths, diagnostics");
    add_common(gp, gp_opt, false);
    gp->add_option("--grid", g.grid, "s grid for --cov, --paths, --scaling")->capture_default_str();
    gp->add_flag("--cov", g.cov, "covariance matrix");
    gp->add_option("--paths", g.paths, "sample this many paths");
    gp->add_flag("--slope", g.slope, "long-memory slope of the increment covariance");
    gp->add_flag("--fbm-limit", g.fbm, "fBm rescaling limit table (alpha < 1)");
    gp->add_flag("--scaling", g.scaling, "scaling relation gap");
    gp->add_flag("--small-time", g.small_time, "small-time Brownian limit table");
    gp->add_flag("--witness", g.witness, "search for a Markov-violation witness");
    gp->add_flag("--increment", g.increment, "increment covariance at (s, r, u)");
    gp->add_option("--s", g.s)->capture_default_str();
    gp->add_option("--r", g.r)->capture_default_str();
    gp->add_option("--u", g.u)->capture_default_str();
    gp->add_option("--b", g.b)->capture_default_str();
    gp->add_option("--u-grid", g.u_grid)->capture_default_str();
    gp->add_option("--b-grid", g.b_grid)->capture_default_str();
    gp->add_option("--s-grid", g.s_grid)->capture_default_str();
    gp->add_option("--eps-grid", g.eps_grid)->capture_default_str();
    gp->add_option("--seed", g.seed, "seed for --paths (default: $NUMVAR_SEED or 1)");

    std::uint64_t accept_seed = default_seed();
    std::string report, only;
    bool quiet = false;
    auto* accept = app.add_subcommand("accept", "run the acceptance suite");
    accept->add_option("--seed", accept_seed, "base seed (default: $NUMVAR_SEED or 1)");
    accept->add_option("--report", report, "write the JSON report here");
    accept->add_option("--only", only, "comma-separated criterion ids");
    accept->add_flag("--quiet", quiet, "no progress on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return nv::exit_code(nv::ErrorKind::usage);
    }

    try {
        if (*numvar) return run_numvar(nv_opt, L_grid, tol, method, sine);
        if (*simulate) return run_simulate(sim_opt, sim_L, reps, seed, tol_trunc, plan_kind, workers, samples);
        if (*law) return run_law(law_opt, law_L, law_tol, law_plan, no_pmf);
        if (*gp) return run_gp(gp_opt, g);
        if (*accept) return run_accept(accept_seed, report, only, quiet);
    } catch (const nv::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return nv::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return nv::exit_code(nv::ErrorKind::numerical);
    }
    return 0;
}
