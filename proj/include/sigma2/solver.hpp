#pragma once

// Cone-safeguarded Newton iteration, the two continuation drivers and the
// estimate monitor.

#include "sigma2/conformal.hpp"
#include "sigma2/errors.hpp"
#include "sigma2/linear.hpp"

#include <string>
#include <vector>

namespace sigma2 {

enum class GaugeMode { Auto, Off };

struct NewtonConfig {
    double tolerance = 1e-8;  // sup-norm of the discrete residual
    int max_iterations = 30;
    double backtrack = 0.5;
    double margin_fraction = 0.1;  // theta
    double margin_floor = 1e-8;
    double min_step = 1e-12;
    GaugeMode gauge = GaugeMode::Auto;
    LinearOptions linear;

    void validate() const;
};

struct MonitorReport {
    double sup_grad = 0.0;      // max |du|_g
    double sup_hess = 0.0;      // max |eigenvalue| of the covariant Hessian
    double max_interior_hess = 0.0;  // max largest Hessian eigenvalue off the boundary
    double max_unn = 0.0;       // max over boundary nodes of Hess u(grad d, grad d)
    double min_sigma2 = 0.0;
    double min_sigma1 = 0.0;
    double cone_margin = 0.0;
    double vol_conf = 0.0;      // int e^{-n u}
    double supervol = 0.0;      // (1 - t_path) (int e^{-4u})^{1/2}
    bool cc_flag = false;
};

/// `path_t` only enters the supervolume scalar; `cc_tol` the (CC) flag.
[[nodiscard]] MonitorReport monitor(const ConformalState& state, const Model& model, double path_t = 1.0,
                                    double cc_tol = 1e-6);

struct NewtonResult {
    Field u;
    ConformalState state;
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;  // sup-norm residual per iterate
    std::vector<double> margins;  // cone margin per iterate
    bool gauge_fixed = false;
    double free_constant = 0.0;   // final right-hand constant (free-constant solves)
    MonitorReport report;
};

[[nodiscard]] TensorField background_tensor(const ProblemSpec& prob, const Model& model);

[[nodiscard]] NewtonResult newton_solve(const Model& model, const ProblemSpec& prob, const Field& u0,
                                        const NewtonConfig& cfg);

/// Solves sigma-equation = Lambda with Lambda unknown and mean-zero u.
/// prob.f must be a ConstantRhs (initial guess for Lambda) and the problem
/// must be translation invariant.
[[nodiscard]] NewtonResult newton_solve_free_constant(const Model& model, const ProblemSpec& prob, const Field& u0,
                                                      const NewtonConfig& cfg);

struct SafeguardResult {
    double step = 1.0;
    ConformalState state;
    int reductions = 0;
};

/// Largest step in {1, b, b^2, ...} keeping the post-step cone margin at or
/// above theta * (pre-step margin) or the absolute floor.
[[nodiscard]] SafeguardResult cone_safeguard_step(const Model& model, const TensorField& A_t,
                                                  const ConformalState& state, const Field& direction,
                                                  const NewtonConfig& cfg);

struct TraceRecord {
    double parameter = 0.0;
    int iterations = 0;
    double residual = 0.0;
    MonitorReport report;
    bool accepted = true;
    bool halved = false;
    std::string note;
};

struct ContinuationTrace {
    std::string parameter_name = "s";
    std::vector<TraceRecord> records;
    std::vector<std::string> warnings;

    [[nodiscard]] std::vector<TraceRecord> accepted() const;
};

class ContinuationError : public Error {
public:
    ContinuationError(const std::string& what, ContinuationTrace trace)
        : Error(ErrorKind::ContinuationFailure, what), trace_(std::move(trace)) {}
    [[nodiscard]] const ContinuationTrace& trace() const noexcept { return trace_; }

private:
    ContinuationTrace trace_;
};

struct ContinuationConfig {
    double initial_step = 0.1;
    double min_step = 1e-4;
    int max_steps = 10000;
};

struct ContinuationResult {
    Field u;              // full solution, offset + last.u
    double offset = 0.0;  // constant carried outside the discrete unknown (eigen path)
    ContinuationTrace trace;
    NewtonResult last;
};

/// sigma_2(A^t_{g_u}) = (s + (1-s) f0) e^{eps u},  u_n = -s h,  s: 0 -> 1.
[[nodiscard]] ContinuationResult eigen_continuation(const Model& model, double t, double eps,
                                                    const NewtonConfig& cfg, const ContinuationConfig& cc = {});

struct LambdaRecord {
    double eps = 0.0;
    double lambda = 0.0;  // e^{eps mean(u)}
    double mean_u = 0.0;
    int iterations = 0;
    MonitorReport report;
};

struct EigenResult {
    double lambda = 0.0;
    double lambda_schedule = 0.0;  // last Lambda_eps before the limit solve
    Field v;
    std::vector<double> schedule;  // eps values actually used
    std::vector<LambdaRecord> table;
    bool converged = false;
    double interior_residual = 0.0;
    double boundary_residual = 0.0;
    double mean_v = 0.0;
    ContinuationTrace trace;  // the first (eps = schedule[0]) sweep
    MonitorReport report;
};

struct EigenLimitConfig {
    std::vector<double> schedule;  // empty: 1, 1/2, ..., 2^-10
    double cauchy_tol = 0.0;       // 0: 10 * Newton tolerance
    ContinuationConfig continuation;
};

class EigenLimitError : public Error {
public:
    EigenLimitError(const std::string& what, EigenResult partial)
        : Error(ErrorKind::NonConvergence, what), partial_(std::move(partial)) {}
    [[nodiscard]] const EigenResult& partial() const noexcept { return partial_; }

private:
    EigenResult partial_;
};

[[nodiscard]] std::vector<double> default_eps_schedule();

[[nodiscard]] EigenResult eigen_limit(const Model& model, double t, const NewtonConfig& cfg,
                                      const EigenLimitConfig& lc = {});

/// sigma_2^{1/2}(g^{-1}(A_{g_u} + S(t))) = (1-t)(int e^{-4u})^{1/2} + psi(t) (sqrt3/2) e^{-2u}, u_n = 0.
[[nodiscard]] ContinuationResult yamabe3_path(const Model& model, const NewtonConfig& cfg,
                                              const ContinuationConfig& cc = {});

/// Volume-weighted mean.
[[nodiscard]] double mean_value(const Field& u, const MetricField& metric);

}  // namespace sigma2
