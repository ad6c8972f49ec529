#include "sigma2/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace sigma2 {

void NewtonConfig::validate() const {
    if (!(tolerance >= 1e-14)) throw Error(ErrorKind::InvalidArgument, "Newton tolerance must be >= 1e-14");
    if (max_iterations <= 0) throw Error(ErrorKind::InvalidArgument, "max_iterations must be positive");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw Error(ErrorKind::InvalidArgument, "backtrack factor must be in (0,1)");
    if (!(margin_fraction > 0.0 && margin_fraction < 1.0))
        throw Error(ErrorKind::InvalidArgument, "cone-margin fraction must be in (0,1)");
    if (!(margin_floor > 0.0) || !(min_step > 0.0))
        throw Error(ErrorKind::InvalidArgument, "margin floor and minimum step must be positive");
}

double mean_value(const Field& u, const MetricField& metric) {
    double s = 0.0;
    double w = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        s += metric.volume_weights[i] * u[i];
        w += metric.volume_weights[i];
    }
    return s / w;
}

std::vector<TraceRecord> ContinuationTrace::accepted() const {
    std::vector<TraceRecord> out;
    std::copy_if(records.begin(), records.end(), std::back_inserter(out), [](const auto& r) { return r.accepted; });
    return out;
}

MonitorReport monitor(const ConformalState& state, const Model& model, double path_t, double cc_tol) {
    const int n = model.dim();
    MonitorReport r;
    r.max_interior_hess = -std::numeric_limits<double>::infinity();
    r.max_unn = -std::numeric_limits<double>::infinity();
    r.min_sigma1 = std::numeric_limits<double>::infinity();
    r.min_sigma2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.size(); ++i) {
        const Matrix& ginv = model.metric.g_inv[i];
        const Vector& du = state.grad[i];
        r.sup_grad = std::max(r.sup_grad, std::sqrt(std::max(0.0, du.dot(ginv * du))));
        const Spectrum sp = spectrum(state.hess[i], model.metric.g[i]);
        const auto [lo, hi] = std::minmax_element(sp.values.begin(), sp.values.end());
        r.sup_hess = std::max({r.sup_hess, std::abs(*lo), std::abs(*hi)});
        if (model.boundary.at(i)) {
            const Vector gd = ginv * model.distance.grad[i];
            r.max_unn = std::max(r.max_unn, gd.dot(state.hess[i] * gd));
        } else {
            r.max_interior_hess = std::max(r.max_interior_hess, *hi);
        }
        r.min_sigma1 = std::min(r.min_sigma1, state.sigma1[i]);
        r.min_sigma2 = std::min(r.min_sigma2, state.sigma2[i]);
    }
    r.cone_margin = state.cone_margin;
    r.vol_conf = weighted_volume(state.u, n, model.metric);
    r.supervol = (1.0 - path_t) * std::sqrt(weighted_volume(state.u, 4.0, model.metric));

    // (CC): sigma_2^{1/2}(g_u^{-1} A_{g_u}) >= sigma_2^{1/2}(round sphere) and h_{g_u} >= 0.
    const ConformalState st1 = deform(modified_schouten(model.curvature, model.metric, 1.0), state.u, 1.0, model);
    const double target = sphere_sigma2_sqrt(n) - cc_tol;
    bool cc = true;
    for (std::size_t i = 0; i < model.size() && cc; ++i) {
        const double s2 = std::exp(4.0 * state.u[i]) * st1.sigma2[i];
        cc = st1.sigma1[i] > 0.0 && s2 > 0.0 && std::sqrt(s2) >= target;
    }
    if (cc)
        for (double h : conformal_mean_curvature(st1, model))
            if (h < -cc_tol) cc = false;
    r.cc_flag = cc;
    return r;
}

TensorField background_tensor(const ProblemSpec& prob, const Model& model) {
    TensorField A = modified_schouten(model.curvature, model.metric, prob.t);
    if (!prob.shift.empty())
        for (std::size_t i = 0; i < A.size(); ++i) A[i] += prob.shift[i];
    return A;
}

SafeguardResult cone_safeguard_step(const Model& model, const TensorField& A_t, const ConformalState& state,
                                    const Field& direction, const NewtonConfig& cfg) {
    if (direction.size() != state.u.size())
        throw Error(ErrorKind::InvalidArgument, "direction has wrong size");
    bool zero = true;
    for (double d : direction) {
        if (!std::isfinite(d)) throw Error(ErrorKind::InvalidArgument, "direction is not finite");
        zero = zero && d == 0.0;
    }
    if (zero) return {1.0, state, 0};
    const double m0 = state.cone_margin;
    SafeguardResult out;
    Field trial(state.u.size());
    for (double step = 1.0; step >= cfg.min_step; step *= cfg.backtrack) {
        for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = state.u[i] + step * direction[i];
        ConformalState st = deform(A_t, trial, state.t, model);
        const double m = st.cone_margin;
        if (m > 0.0 && (m >= cfg.margin_fraction * m0 || m >= cfg.margin_floor)) {
            out.step = step;
            out.state = std::move(st);
            return out;
        }
        ++out.reductions;
    }
    throw NewtonError(ErrorKind::Stall, "cone safeguard: no admissible step above " + std::to_string(cfg.min_step), 0,
                      std::numeric_limits<double>::quiet_NaN(), {});
}

namespace {

double sup_norm(const Field& r) {
    double m = 0.0;
    for (double v : r) m = std::max(m, std::abs(v));
    return m;
}

double two_norm(const Field& r) {
    double s = 0.0;
    for (double v : r) s += v * v;
    return std::sqrt(s);
}

NewtonResult newton_impl(const Model& model, ProblemSpec prob, const Field& u0, const NewtonConfig& cfg,
                         bool free_constant) {
    cfg.validate();
    const std::size_t count = model.size();
    prob.validate(count);
    if (u0.size() != count) throw Error(ErrorKind::InvalidArgument, "initial guess has wrong size");
    if (free_constant && (!std::holds_alternative<ConstantRhs>(prob.f) || !prob.translation_invariant()))
        throw Error(ErrorKind::InvalidArgument, "free-constant solve needs a constant, translation-invariant problem");

    const TensorField A = background_tensor(prob, model);
    const bool gauge = free_constant || (cfg.gauge == GaugeMode::Auto && prob.translation_invariant());

    NewtonResult res;
    res.gauge_fixed = gauge;
    ConformalState state = deform(A, u0, prob.t, model);
    Field r = equation_residual(state, prob, model);  // cone-exit if u0 is outside the cone

    Field interior_col(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) interior_col[i] = model.boundary.at(i) ? 0.0 : 1.0;
    Field mean_row = model.metric.volume_weights;
    double wsum = 0.0;
    for (double w : mean_row) wsum += w;
    for (double& w : mean_row) w /= wsum;

    for (int it = 0;; ++it) {
        const double res_sup = sup_norm(r);
        res.history.push_back(res_sup);
        res.margins.push_back(state.cone_margin);
        if (res_sup <= cfg.tolerance) {
            res.iterations = it;
            res.residual = res_sup;
            break;
        }
        if (it == cfg.max_iterations) {
            std::ostringstream os;
            os << "Newton reached " << it << " iterations, residual " << res_sup;
            throw NewtonError(ErrorKind::NonConvergence, os.str(), it, res_sup, res.history);
        }

        const LinearizedOperator op = linearize(state, prob, model);
        BorderedSystem sys;
        sys.J = op.local_matrix(model.grid);
        sys.rhs.resize(count);
        for (std::size_t i = 0; i < count; ++i) sys.rhs[i] = -r[i];
        std::vector<std::pair<double, double>> corner_diag;
        if (op.nonlocal) {
            sys.columns.push_back(op.nonlocal->row_scale);
            sys.rows.push_back(op.nonlocal->weights);
            sys.border_rhs.push_back(0.0);
            corner_diag.emplace_back(-1.0, 0.0);
        }
        if (gauge) {
            sys.columns.push_back(interior_col);
            sys.rows.push_back(mean_row);
            double mean = 0.0;
            for (std::size_t i = 0; i < count; ++i) mean += mean_row[i] * state.u[i];
            sys.border_rhs.push_back(-mean);
            corner_diag.emplace_back(0.0, 0.0);
        }
        const auto k = static_cast<Eigen::Index>(corner_diag.size());
        sys.corner = Eigen::MatrixXd::Zero(k, k);
        for (Eigen::Index b = 0; b < k; ++b) sys.corner(b, b) = corner_diag[static_cast<std::size_t>(b)].first;
        const LinearSolution sol = solve_bordered(sys, cfg.linear);
        const Field& dir = sol.x;
        // J du + mu 1 = -r; with residual sigma - Lambda the multiplier is -dLambda.
        const double dlambda = gauge && free_constant ? -sol.y.back() : 0.0;

        SafeguardResult sg = cone_safeguard_step(model, A, state, dir, cfg);
        const double merit0 = two_norm(r);
        const double lambda0 = free_constant ? std::get<ConstantRhs>(prob.f).value : 0.0;
        double step = sg.step;
        bool accepted = false;
        while (step >= cfg.min_step) {
            ConformalState trial;
            if (step == sg.step) {
                trial = std::move(sg.state);
            } else {
                Field u(count);
                for (std::size_t i = 0; i < count; ++i) u[i] = state.u[i] + step * dir[i];
                trial = deform(A, u, prob.t, model);
            }
            if (trial.cone_margin > 0.0 &&
                (trial.cone_margin >= cfg.margin_fraction * state.cone_margin ||
                 trial.cone_margin >= cfg.margin_floor)) {
                if (free_constant) std::get<ConstantRhs>(prob.f).value = lambda0 + step * dlambda;
                Field rt = equation_residual(trial, prob, model);
                if (two_norm(rt) <= (1.0 - 1e-4 * step) * merit0) {
                    state = std::move(trial);
                    r = std::move(rt);
                    accepted = true;
                    break;
                }
            }
            step *= cfg.backtrack;
        }
        if (!accepted) {
            if (free_constant) std::get<ConstantRhs>(prob.f).value = lambda0;
            std::ostringstream os;
            os << "line search stalled at iteration " << it << ", residual " << res_sup;
            throw NewtonError(ErrorKind::Stall, os.str(), it, res_sup, res.history);
        }
    }
    res.u = state.u;
    if (free_constant) res.free_constant = std::get<ConstantRhs>(prob.f).value;
    res.report = monitor(state, model);
    res.state = std::move(state);
    return res;
}

bool recoverable(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::ConeExit:
    case ErrorKind::Stall:
    case ErrorKind::NonConvergence:
    case ErrorKind::NumericFailure: return true;
    default: return false;
    }
}

Field boundary_field(const Model& model, double scale) {
    Field f(model.size(), 0.0);
    for (const auto& b : model.boundary.nodes) f[b.node] = scale * b.h;
    return f;
}

void require_hypotheses(const Model& model, const TensorField& A, const char* what) {
    for (std::size_t i = 0; i < model.size(); ++i) {
        const Matrix M = model.metric.g_inv[i] * A[i];
        if (!(M.trace() > 0.0 && sigma2_mixed(M) > 0.0))
            throw Error(ErrorKind::InvalidModel,
                        std::string(what) + ": background tensor leaves Gamma_2^+ at node " + std::to_string(i));
    }
    // h is a finite-difference quantity on non-catalog metrics; allow for its
    // truncation error when checking h >= 0.
    const double slack = model.metric.catalog ? 1e-12 : 1e-4;
    for (const auto& b : model.boundary.nodes)
        if (b.h < -slack)
            throw Error(ErrorKind::InvalidModel, std::string(what) + ": boundary mean curvature h = " +
                                                     std::to_string(b.h) + " < 0 at node " +
                                                     std::to_string(b.node));
}

/// Parameter sweep 0 -> 1 with step halving on failure and doubling after two
/// consecutive successes.
struct SweepHooks {
    std::function<ProblemSpec(double)> make_prob;
    std::function<MonitorReport(double, const NewtonResult&)> report;
    std::function<void(ContinuationTrace&, const TraceRecord&)> on_record = [](ContinuationTrace&, const TraceRecord&) {};
    /// May shift the accepted unknown (re-centering); runs after recording.
    std::function<void(Field&)> after_accept = [](Field&) {};
};

ContinuationResult sweep(const Model& model, const NewtonConfig& cfg, const ContinuationConfig& cc,
                         const std::string& name, const SweepHooks& hooks) {
    ContinuationResult out;
    out.trace.parameter_name = name;
    const auto& make_prob = hooks.make_prob;
    auto record = [&](double p, const NewtonResult& nr) {
        TraceRecord rec;
        rec.parameter = p;
        rec.iterations = nr.iterations;
        rec.residual = nr.residual;
        rec.report = hooks.report(p, nr);
        hooks.on_record(out.trace, rec);
        out.trace.records.push_back(std::move(rec));
    };

    double p = 0.0;
    Field u(model.size(), 0.0);
    try {
        out.last = newton_solve(model, make_prob(0.0), u, cfg);
    } catch (const Error& e) {
        TraceRecord rec;
        rec.accepted = false;
        rec.note = e.what();
        out.trace.records.push_back(rec);
        throw ContinuationError(std::string("start point failed: ") + e.what(), out.trace);
    }
    u = out.last.u;
    record(0.0, out.last);
    hooks.after_accept(u);

    double dp = cc.initial_step;
    int successes = 0;
    int steps = 0;
    while (p < 1.0) {
        if (++steps > cc.max_steps) throw ContinuationError("continuation step budget exhausted", out.trace);
        const double next = std::min(1.0, p + dp);
        try {
            NewtonResult nr = newton_solve(model, make_prob(next), u, cfg);
            p = next;
            u = nr.u;
            out.last = std::move(nr);
            record(p, out.last);
            hooks.after_accept(u);
            if (++successes >= 2) {
                dp *= 2.0;
                successes = 0;
            }
        } catch (const Error& e) {
            if (!recoverable(e)) throw;
            TraceRecord rec;
            rec.parameter = next;
            rec.accepted = false;
            rec.halved = true;
            rec.note = e.what();
            if (const auto* ne = dynamic_cast<const NewtonError*>(&e)) {
                rec.iterations = ne->iterations();
                rec.residual = ne->last_residual();
            }
            out.trace.records.push_back(std::move(rec));
            dp *= 0.5;
            successes = 0;
            if (dp < cc.min_step) {
                std::ostringstream os;
                os << name << "-step underflow at " << name << " = " << p << " (last error: " << e.what() << ")";
                throw ContinuationError(os.str(), out.trace);
            }
        }
    }
    out.u = u;
    return out;
}

}  // namespace

NewtonResult newton_solve(const Model& model, const ProblemSpec& prob, const Field& u0, const NewtonConfig& cfg) {
    return newton_impl(model, prob, u0, cfg, false);
}

NewtonResult newton_solve_free_constant(const Model& model, const ProblemSpec& prob, const Field& u0,
                                        const NewtonConfig& cfg) {
    return newton_impl(model, prob, u0, cfg, true);
}

namespace {

/// Monitor of offset + state.u (the monitor depends on u itself, not only on
/// its derivatives).
MonitorReport shifted_monitor(const ConformalState& state, double offset, const Model& model, double path_t = 1.0) {
    if (offset == 0.0) return monitor(state, model, path_t);
    ConformalState full = state;
    for (double& x : full.u) x += offset;
    return monitor(full, model, path_t);
}

Field schouten_sigma2(const Model& model, double t) {
    const TensorField A = modified_schouten(model.curvature, model.metric, t);
    Field f0(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) f0[i] = sigma2_mixed(model.metric.g_inv[i] * A[i]);
    return f0;
}

ProblemSpec eigen_problem(double t, double s, double eps, const Field& f0, double offset, const Field& h) {
    ProblemSpec p;
    p.t = t;
    p.f = EigenPathRhs{s, eps, f0, offset};
    if (s == 1.0) {
        p.c = ZeroBc{};
    } else {
        Field c = h;
        for (double& v : c) v *= 1.0 - s;
        p.c = FieldBc{std::move(c)};
    }
    p.form = ResidualForm::Squared;
    return p;
}

}  // namespace

ContinuationResult eigen_continuation(const Model& model, double t, double eps, const NewtonConfig& cfg,
                                      const ContinuationConfig& cc) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
    require_hypotheses(model, modified_schouten(model.curvature, model.metric, t), "eigen path");
    const Field f0 = schouten_sigma2(model, t);
    const Field h = boundary_field(model, 1.0);
    // The solution mean grows like 1/eps; it is carried in `offset` and the
    // discrete unknown is re-centered after every accepted step.
    double offset = 0.0;
    SweepHooks hooks;
    hooks.make_prob = [&](double s) { return eigen_problem(t, s, eps, f0, offset, h); };
    hooks.report = [&](double, const NewtonResult& nr) { return shifted_monitor(nr.state, offset, model); };
    hooks.after_accept = [&](Field& u) {
        const double m = mean_value(u, model.metric);
        offset += m;
        for (double& x : u) x -= m;
    };
    ContinuationResult out = sweep(model, cfg, cc, "s", hooks);
    // sweep() re-centered u after the last step; last.u is the pre-shift unknown.
    const double m = mean_value(out.last.u, model.metric);
    out.offset = offset - m;
    out.u = out.last.u;
    for (double& x : out.u) x += out.offset;
    return out;
}

std::vector<double> default_eps_schedule() {
    std::vector<double> s;
    for (int k = 0; k <= 10; ++k) s.push_back(std::ldexp(1.0, -k));
    return s;
}

EigenResult eigen_limit(const Model& model, double t, const NewtonConfig& cfg, const EigenLimitConfig& lc) {
    const std::vector<double> schedule = lc.schedule.empty() ? default_eps_schedule() : lc.schedule;
    for (std::size_t i = 0; i < schedule.size(); ++i)
        if (!(schedule[i] > 0.0) || (i > 0 && !(schedule[i] < schedule[i - 1])))
            throw Error(ErrorKind::InvalidArgument, "eps schedule must be positive and decreasing");
    const double cauchy = lc.cauchy_tol > 0.0 ? lc.cauchy_tol : 10.0 * cfg.tolerance;
    const Field f0 = schouten_sigma2(model, t);
    const Field h = boundary_field(model, 1.0);

    EigenResult result;
    Field v;  // mean-free part of the last solution
    double prev_eps = 0.0;
    double prev_mean = 0.0;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
        const double eps = schedule[k];
        NewtonResult nr;
        double offset = 0.0;
        bool solved = false;
        if (k > 0) {
            // Warm start at s = 1: the mean scales like 1/eps, the oscillation stays bounded.
            offset = prev_mean * prev_eps / eps;
            try {
                nr = newton_solve(model, eigen_problem(t, 1.0, eps, f0, offset, h), v, cfg);
                solved = true;
            } catch (const Error& e) {
                if (!recoverable(e)) throw;
            }
        }
        if (!solved) {
            ContinuationResult cr = eigen_continuation(model, t, eps, cfg, lc.continuation);
            if (k == 0) result.trace = cr.trace;
            offset = cr.offset;
            nr = std::move(cr.last);
        }
        const double local_mean = mean_value(nr.u, model.metric);
        const double mean = offset + local_mean;
        v = nr.u;
        for (double& x : v) x -= local_mean;
        LambdaRecord rec;
        rec.eps = eps;
        rec.mean_u = mean;
        rec.lambda = std::exp(eps * mean);
        rec.iterations = nr.iterations;
        rec.report = shifted_monitor(nr.state, offset, model);
        result.table.push_back(rec);
        result.schedule.push_back(eps);
        prev_eps = eps;
        prev_mean = mean;
        if (k > 0 && std::abs(rec.lambda - result.table[k - 1].lambda) <= cauchy) {
            result.converged = true;
            break;
        }
    }
    result.lambda_schedule = result.table.back().lambda;
    if (!result.converged) {
        std::ostringstream os;
        os << "eps schedule exhausted without |Lambda_eps - Lambda_eps/2| <= " << cauchy << " (last difference "
           << (result.table.size() > 1
                   ? std::abs(result.table.back().lambda - result.table[result.table.size() - 2].lambda)
                   : std::numeric_limits<double>::quiet_NaN())
           << ")";
        throw EigenLimitError(os.str(), result);
    }

    // Limit problem: sigma_2(A^t_{g_v}) = Lambda, v_n + h = 0, mean v = 0.
    ProblemSpec lim;
    lim.t = t;
    lim.f = ConstantRhs{result.lambda_schedule};
    lim.c = ZeroBc{};
    lim.form = ResidualForm::Squared;
    const NewtonResult nr = newton_solve_free_constant(model, lim, v, cfg);
    result.lambda = nr.free_constant;
    result.v = nr.u;
    result.report = nr.report;
    lim.f = ConstantRhs{result.lambda};
    const Field ri = interior_residual(nr.state, lim, model);
    for (std::size_t i = 0; i < model.size(); ++i)
        if (!model.boundary.at(i)) result.interior_residual = std::max(result.interior_residual, std::abs(ri[i]));
    for (double x : boundary_residual(nr.state, lim, model))
        result.boundary_residual = std::max(result.boundary_residual, std::abs(x));
    result.mean_v = mean_value(result.v, model.metric);
    if (!(result.lambda > 0.0))
        throw Error(ErrorKind::NumericFailure, "limit constant Lambda = " + std::to_string(result.lambda) + " is not positive");
    return result;
}

ContinuationResult yamabe3_path(const Model& model, const NewtonConfig& cfg, const ContinuationConfig& cc) {
    if (model.dim() != 3) throw Error(ErrorKind::InvalidArgument, "the Yamabe path needs n = 3");
    require_hypotheses(model, modified_schouten(model.curvature, model.metric, 1.0), "yamabe path");
    const Field h = boundary_field(model, 1.0);
    const double threshold = 0.5 * unit_sphere_volume(3);
    SweepHooks hooks;
    hooks.make_prob = [&](double tp) {
        ProblemSpec p;
        p.t = 1.0;
        p.f = YamabePathRhs{tp};
        p.c = FieldBc{h};  // u_n = 0
        p.form = ResidualForm::SquareRoot;
        p.shift = yamabe_shift(model, tp);
        return p;
    };
    hooks.report = [&](double tp, const NewtonResult& nr) { return monitor(nr.state, model, tp); };
    hooks.on_record = [threshold](ContinuationTrace& tr, const TraceRecord& rec) {
        if (rec.report.vol_conf >= threshold * (1.0 - 1e-9)) {
            std::ostringstream os;
            os << "t_path = " << rec.parameter << ": vol(e^{-2u}g) = " << rec.report.vol_conf
               << " >= vol(S^3)/2 = " << threshold;
            tr.warnings.push_back(os.str());
        }
    };
    ContinuationResult out = sweep(model, cfg, cc, "t_path", hooks);
    out.u = out.last.u;
    return out;
}

}  // namespace sigma2
