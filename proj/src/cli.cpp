#include "sigma2/cli.hpp"

#include "sigma2/checks.hpp"
#include "sigma2/container.hpp"
#include "sigma2/errors.hpp"
#include "sigma2/solver.hpp"
#include "sigma2/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace sigma2 {

namespace fs = std::filesystem;
using nlohmann::json;

// name, help
#define SIGMA2_CONFIG_FIELDS(X)                                                              \
    X(model, "model family: cap, band, slab or perturbed")                                  \
    X(dim, "manifold dimension (radial cap charts: 3 or 4)")                                \
    X(rho1, "cap geodesic radius")                                                          \
    X(r0, "band inner radius")                                                              \
    X(r1, "band outer radius")                                                              \
    X(warp_a, "slab warp a(r) polynomial coefficients, increasing degree")                  \
    X(warp_b, "slab warp b(r) polynomial coefficients, increasing degree")                  \
    X(slab_r0, "slab lower end")                                                            \
    X(slab_r1, "slab upper end")                                                            \
    X(slab_period, "slab torus period")                                                     \
    X(base, "base model of a perturbed metric: cap or band")                                \
    X(amplitude, "perturbation amplitude (<= 0.25)")                                        \
    X(seed, "random seed (perturbations, property sampling)")                               \
    X(resolution, "node counts: one (radial) or three (band/slab)")                         \
    X(t, "modified Schouten parameter t <= 1")                                              \
    X(f, "right-hand side: a number, 'schouten' (f = sigma_2 of the background) or 'sphere'") \
    X(c, "boundary data c in u_n + h = c: a number or 'h'")                                 \
    X(form, "interior residual form: sqrt or squared")                                      \
    X(u0_amplitude, "amplitude of the smooth initial perturbation for solve")               \
    X(tol, "Newton tolerance (sup-norm residual)")                                          \
    X(max_iter, "Newton iteration cap")                                                     \
    X(backtrack, "line-search backtracking factor")                                         \
    X(theta, "cone-margin fraction for accepted steps")                                     \
    X(margin_floor, "absolute cone-margin floor for accepted steps")                        \
    X(linear, "linear solver: auto, direct or iterative")                                   \
    X(initial_step, "initial continuation step")                                            \
    X(min_step, "smallest continuation step before giving up")                              \
    X(eps_levels, "eigen: eps schedule 1, 1/2, ..., 2^-eps_levels")                         \
    X(cauchy_tol, "eigen: Cauchy tolerance on Lambda_eps (0 means 10 * tol)")               \
    X(samples, "check-algebra: number of random samples")                                   \
    X(coarse, "check-geometry: coarsest node count")                                        \
    X(refinements, "check-geometry: number of refinements")                                 \
    X(out, "output directory (SIGMA2_OUT_DIR overrides the config file value)")

namespace {

const std::vector<std::string> kCommands{"check-algebra", "check-geometry", "solve", "eigen", "yamabe3"};

bool is_number(const std::string& s, double& v) {
    try {
        std::size_t pos = 0;
        v = std::stod(s, &pos);
        return pos == s.size();
    } catch (const std::exception&) {
        return false;
    }
}

ModelSpec model_spec(const RunConfig& cfg) {
    ModelSpec s;
    s.id = catalog_from_string(cfg.model);
    s.dim = cfg.dim;
    s.cap_radius = cfg.rho1;
    s.band_r0 = cfg.r0;
    s.band_r1 = cfg.r1;
    s.warp_a = cfg.warp_a;
    s.warp_b = cfg.warp_b;
    s.slab_r0 = cfg.slab_r0;
    s.slab_r1 = cfg.slab_r1;
    s.slab_period = cfg.slab_period;
    s.base = catalog_from_string(cfg.base);
    s.amplitude = cfg.amplitude;
    s.seed = cfg.seed;
    s.validate();
    return s;
}

std::vector<int> resolution(const RunConfig& cfg, const ModelSpec& spec) {
    if (!cfg.resolution.empty()) return cfg.resolution;
    return spec.radial() ? std::vector<int>{129} : std::vector<int>{17, 16, 16};
}

NewtonConfig newton_config(const RunConfig& cfg) {
    NewtonConfig n;
    n.tolerance = cfg.tol;
    n.max_iterations = cfg.max_iter;
    n.backtrack = cfg.backtrack;
    n.margin_fraction = cfg.theta;
    n.margin_floor = cfg.margin_floor;
    n.linear.method = linear_method_from_string(cfg.linear);
    n.validate();
    return n;
}

ContinuationConfig continuation_config(const RunConfig& cfg) {
    ContinuationConfig c;
    c.initial_step = cfg.initial_step;
    c.min_step = cfg.min_step;
    return c;
}

/// Smooth start perturbation with vanishing normal derivative.
Field initial_guess(const RunConfig& cfg, const Model& model) {
    Field u(model.size(), 0.0);
    if (cfg.u0_amplitude == 0.0) return u;
    const auto& ax = model.grid.axes()[0];
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double r = (model.grid.coordinate(i, 0) - ax.origin) / ax.length();
        double v = std::cos(std::numbers::pi * r);
        if (!model.grid.radial()) v *= 1.0 + 0.5 * std::cos(2 * std::numbers::pi * model.grid.coordinate(i, 1) /
                                                             model.grid.axes()[1].length());
        u[i] = cfg.u0_amplitude * v;
    }
    return u;
}

ProblemSpec problem(const RunConfig& cfg, const Model& model) {
    ProblemSpec p;
    p.t = cfg.t;
    if (cfg.form == "sqrt")
        p.form = ResidualForm::SquareRoot;
    else if (cfg.form == "squared")
        p.form = ResidualForm::Squared;
    else
        throw Error(ErrorKind::InvalidArgument, "form must be sqrt or squared");
    double v = 0.0;
    if (is_number(cfg.f, v)) {
        p.f = ConstantRhs{v};
    } else if (cfg.f == "schouten") {
        const TensorField A = modified_schouten(model.curvature, model.metric, cfg.t);
        Field f(model.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double s2 = sigma2_mixed(model.metric.g_inv[i] * A[i]);
            f[i] = p.form == ResidualForm::SquareRoot ? sqrt_sigma2(s2) : s2;
        }
        p.f = FieldRhs{std::move(f)};
    } else if (cfg.f == "sphere") {
        p.f = SphereTargetRhs{};
    } else {
        throw Error(ErrorKind::InvalidArgument, "f must be a number, 'schouten' or 'sphere'");
    }
    if (is_number(cfg.c, v)) {
        if (v == 0.0)
            p.c = ZeroBc{};
        else
            p.c = FieldBc{Field(model.size(), v)};
    } else if (cfg.c == "h") {
        Field c(model.size(), 0.0);
        for (const auto& b : model.boundary.nodes) c[b.node] = b.h;
        p.c = FieldBc{std::move(c)};
    } else {
        throw Error(ErrorKind::InvalidArgument, "c must be a number or 'h'");
    }
    return p;
}

int report_properties(const std::vector<PropertyResult>& props, const fs::path& out, std::ostream& log) {
    std::ostringstream rep;
    long failed = 0;
    for (const auto& p : props) {
        rep << (p.passed() ? "PASS " : "FAIL ") << p.name << " samples=" << p.samples << " failures=" << p.failures
            << " worst=" << format_double(p.worst) << " (" << p.detail << ")\n";
        if (!p.passed()) ++failed;
    }
    log << rep.str();
    write_text(out / "report.txt", rep.str());
    Summary s{{"properties", std::to_string(props.size())},
              {"passed", std::to_string(static_cast<long>(props.size()) - failed)},
              {"failed", std::to_string(failed)}};
    for (const auto& p : props) s.emplace_back("property." + p.name, p.passed() ? "pass" : "fail");
    write_summary(s, out / "summary.txt");
    return failed == 0 ? 0 : 1;
}

void write_continuation(const ContinuationTrace& trace, const fs::path& out) {
    write_trace(trace, out / "trace.csv");
    if (!trace.accepted().empty()) emit_plot_data(trace, out / "plots");
}

int run_solve(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
    const ModelSpec spec = model_spec(cfg);
    const Model model = make_model(spec, resolution(cfg, spec));
    const ProblemSpec prob = problem(cfg, model);
    const Field u0 = initial_guess(cfg, model);
    Summary s{{"command", "solve"}, {"model", to_string(spec.id)}, {"nodes", std::to_string(model.size())}};
    try {
        const NewtonResult r = newton_solve(model, prob, u0, newton_config(cfg));
        const auto [lo, hi] = std::minmax_element(r.u.begin(), r.u.end());
        s.emplace_back("status", "converged");
        s.emplace_back("iterations", std::to_string(r.iterations));
        s.emplace_back("residual", format_double(r.residual));
        s.emplace_back("gauge_fixed", r.gauge_fixed ? "1" : "0");
        s.emplace_back("mean_u", format_double(mean_value(r.u, model.metric)));
        s.emplace_back("oscillation_u", format_double(*hi - *lo));
        append_monitor(s, "monitor.", r.report);
        ContinuationTrace trace;
        trace.parameter_name = "t";
        trace.records.push_back({cfg.t, r.iterations, r.residual, r.report, true, false, ""});
        write_trace(trace, out / "trace.csv");
        write_container(out / "state.s2c", export_model(model, &r.state));
        write_summary(s, out / "summary.txt");
        log << "solve: converged in " << r.iterations << " iterations, residual " << format_double(r.residual) << "\n";
        return 0;
    } catch (const NewtonError& e) {
        s.emplace_back("status", "failed");
        s.emplace_back("error", e.what());
        s.emplace_back("iterations", std::to_string(e.iterations()));
        s.emplace_back("residual", format_double(e.last_residual()));
        write_summary(s, out / "summary.txt");
        throw;
    }
}

int run_eigen(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
    const ModelSpec spec = model_spec(cfg);
    const Model model = make_model(spec, resolution(cfg, spec));
    EigenLimitConfig lc;
    for (int k = 0; k <= cfg.eps_levels; ++k) lc.schedule.push_back(std::ldexp(1.0, -k));
    lc.cauchy_tol = cfg.cauchy_tol;
    lc.continuation = continuation_config(cfg);
    try {
        const EigenResult r = eigen_limit(model, cfg.t, newton_config(cfg), lc);
        Summary s{{"command", "eigen"}, {"model", to_string(spec.id)}, {"t", format_double(cfg.t)}};
        for (auto& kv : summarize(r)) s.push_back(kv);
        write_summary(s, out / "summary.txt");
        write_continuation(r.trace, out);
        write_lambda_table(r, out / "lambda_eps.csv");
        log << "eigen: Lambda = " << format_double(r.lambda) << " after " << r.schedule.size() << " eps levels\n";
        return 0;
    } catch (const EigenLimitError& e) {
        write_lambda_table(e.partial(), out / "lambda_eps.csv");
        write_continuation(e.partial().trace, out);
        Summary s{{"command", "eigen"}, {"status", "failed"}, {"error", e.what()}};
        write_summary(s, out / "summary.txt");
        throw;
    }
}

int run_yamabe(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
    const ModelSpec spec = model_spec(cfg);
    const Model model = make_model(spec, resolution(cfg, spec));
    const ContinuationResult r = yamabe3_path(model, newton_config(cfg), continuation_config(cfg));
    const double mean = mean_value(r.u, model.metric);
    double dev = 0.0;
    for (double x : r.u) dev = std::max(dev, std::abs(x - mean));
    Summary s{{"command", "yamabe3"},
              {"model", to_string(spec.id)},
              {"status", "converged"},
              {"steps", std::to_string(r.trace.accepted().size())},
              {"residual", format_double(r.last.residual)},
              {"mean_u", format_double(mean)},
              {"oscillation_u", format_double(dev)},
              {"half_sphere_volume", format_double(0.5 * unit_sphere_volume(3))},
              {"warnings", std::to_string(r.trace.warnings.size())}};
    for (std::size_t k = 0; k < r.trace.warnings.size(); ++k)
        s.emplace_back("warning." + std::to_string(k), r.trace.warnings[k]);
    append_monitor(s, "monitor.", r.last.report);
    write_summary(s, out / "summary.txt");
    write_continuation(r.trace, out);
    for (const auto& w : r.trace.warnings) log << "warning: " << w << "\n";
    log << "yamabe3: reached t_path = 1, residual " << format_double(r.last.residual) << "\n";
    return 0;
}

}  // namespace

void RunConfig::validate() const {
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
        throw Error(ErrorKind::InvalidArgument, "unknown or missing command '" + command + "'");
    for (int r : resolution) {
        if (r < 4) throw Error(ErrorKind::InvalidArgument, "resolution entries must be >= 4");
        if (resolution.size() == 1 && r > 4097) throw Error(ErrorKind::InvalidArgument, "radial resolution is capped at 4097");
        if (resolution.size() == 3 && r > 97) throw Error(ErrorKind::InvalidArgument, "3D resolution is capped at 97 per axis");
    }
    if (!resolution.empty() && resolution.size() != 1 && resolution.size() != 3)
        throw Error(ErrorKind::InvalidArgument, "resolution takes one or three entries");
    if (samples <= 0 || coarse < 5 || refinements < 1 || eps_levels < 1)
        throw Error(ErrorKind::InvalidArgument, "samples, coarse, refinements and eps_levels must be positive");
    if (out.empty()) throw Error(ErrorKind::InvalidArgument, "output directory is empty");
    (void)model_spec(*this);
    if (command != "check-algebra" && command != "check-geometry") (void)newton_config(*this);
}

std::string RunConfig::to_json() const {
    json j;
    j["command"] = command;
#define X(name, help) j[#name] = name;
    SIGMA2_CONFIG_FIELDS(X)
#undef X
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
    RunConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        try {
            if (key == "command") {
                it->get_to(cfg.command);
                continue;
            }
#define X(name, help)          \
    if (key == #name) {        \
        it->get_to(cfg.name);  \
        continue;              \
    }
            SIGMA2_CONFIG_FIELDS(X)
#undef X
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InvalidArgument, "config key '" + key + "': " + e.what());
        }
        throw Error(ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
    }
    return cfg;
}

int run(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const fs::path out = cfg.out;
    fs::create_directories(out);
    write_text(out / "config.json", cfg.to_json());
    if (cfg.command == "check-algebra") return report_properties(algebra_suite(cfg.samples, cfg.seed), out, log);
    if (cfg.command == "check-geometry")
        return report_properties(geometry_suite(geometry_study(cfg.coarse, cfg.refinements)), out, log);
    if (cfg.command == "solve") return run_solve(cfg, out, log);
    if (cfg.command == "eigen") return run_eigen(cfg, out, log);
    return run_yamabe(cfg, out, log);
}

int cli_main(int argc, char** argv) {
    RunConfig cfg;
    // The config file supplies defaults; explicit flags override it.
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        std::string path;
        if (a == "--config" && i + 1 < argc)
            path = argv[i + 1];
        else if (a.rfind("--config=", 0) == 0)
            path = a.substr(9);
        if (path.empty()) continue;
        std::ifstream in(path);
        if (!in) {
            std::cerr << "error: cannot read config file " << path << "\n";
            return 2;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            cfg = RunConfig::from_json(ss.str());
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"Modified sigma_2 curvature problems on manifolds with boundary"};
    app.require_subcommand(0, 1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags given on the command line take precedence");
#define X(name, help) app.add_option("--" #name, cfg.name, help)->capture_default_str();
    SIGMA2_CONFIG_FIELDS(X)
#undef X
    app.get_option("--resolution")->expected(1, 3);
    app.get_option("--warp_a")->expected(1, 16);
    app.get_option("--warp_b")->expected(1, 16);
    for (const auto& name : kCommands) app.add_subcommand(name, "run " + name)->fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (!app.get_subcommands().empty()) cfg.command = app.get_subcommands().front()->get_name();
    if (app.count("--out") == 0)
        if (const char* env = std::getenv("SIGMA2_OUT_DIR"); env && *env) cfg.out = env;

    try {
        cfg.validate();
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    try {
        return run(cfg, std::cout);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::InvalidArgument ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace sigma2
