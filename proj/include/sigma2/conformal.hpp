#pragma once

// Conformal deformation of the modified Schouten tensor, residuals of the
// sigma_2 boundary-value problem and their linearization.
//
// For g_u = e^{-2u} g:
//   A^t_{g_u} = A^t_g + Hess u + (1-t)/(n-2) Lap u g + du (x) du - (2-t)/2 |du|^2 g
// Interior equation  sigma_2^{1/2}(g^{-1} W) = f(x,u)   (or sigma_2 = f, squared form)
// Boundary equation  u_n + h_g = c(x,u)                  (inward normal)

#include "sigma2/geometry.hpp"
#include "sigma2/symfunc.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace sigma2 {

using Field = std::vector<double>;
using TensorField = std::vector<Matrix>;

enum class Raising { Background, Deformed };
enum class ResidualForm { SquareRoot, Squared };

/// f(x, z) == value.
struct ConstantRhs {
    double value = 0.0;
};
/// f(x, z) == value[x], independent of z.
struct FieldRhs {
    Field value;
};
/// f(x, z) == sigma_2^{1/2}(round S^n) e^{-2z}.
struct SphereTargetRhs {};
/// f(x, z) == (s + (1-s) f0(x)) e^{eps (z + offset)}.
/// The offset carries a large constant part of u exactly, so the discrete
/// unknown stays O(1).
struct EigenPathRhs {
    double s = 0.0;
    double eps = 1.0;
    Field f0;
    double offset = 0.0;
};
/// f == (1-t)(int e^{-4u})^{1/2} + psi(t) sigma_2^{1/2}(S^3) e^{-2u}; nonlocal.
struct YamabePathRhs {
    double t_path = 0.0;
};
/// General f(x, z) returning (value, d/dz).
struct CallableRhs {
    std::function<std::pair<double, double>(std::size_t node, double z)> fn;
};

using RhsKind = std::variant<ConstantRhs, FieldRhs, SphereTargetRhs, EigenPathRhs, YamabePathRhs, CallableRhs>;

struct ZeroBc {};
/// c(x, z) == value[x] (read at boundary nodes).
struct FieldBc {
    Field value;
};
/// c(x, z) == value[x] e^{-z}.
struct ExpBc {
    Field value;
};
struct CallableBc {
    std::function<std::pair<double, double>(std::size_t node, double z)> fn;
};

using BcKind = std::variant<ZeroBc, FieldBc, ExpBc, CallableBc>;

/// In the squared form the right-hand side value is read at the sigma_2
/// level: the residual is sigma_2 - f.
struct ProblemSpec {
    double t = 1.0;
    RhsKind f = ConstantRhs{};
    BcKind c = ZeroBc{};
    Raising raising = Raising::Background;
    ResidualForm form = ResidualForm::SquareRoot;
    /// Optional tensor added to A^t_g before deformation (path equations).
    TensorField shift;

    void validate(std::size_t nodes) const;
    /// True when the discrete operator annihilates constants (no z-dependence).
    [[nodiscard]] bool translation_invariant() const;
};

struct ConformalState {
    double t = 1.0;
    Field u;
    std::vector<Vector> grad;  // partial derivatives u_i
    TensorField hess;          // covariant Hessian
    TensorField W;             // deformed tensor (covariant)
    std::vector<Spectrum> spectra;  // of g^{-1} W
    Field sigma1;
    Field sigma2;
    double cone_margin = 0.0;
    std::size_t worst_node = 0;
};

/// Rank-one part of the linearization: row_scale[i] * sum_j weights[j] v_j.
struct NonlocalTerm {
    Field row_scale;
    Field weights;
};

/// Row-wise description of the Jacobian of the discrete equation
/// (interior rows at interior nodes, Neumann rows at boundary nodes).
struct LinearizedOperator {
    std::vector<Matrix> second;  // coefficient of d_a d_b v
    std::vector<Vector> first;   // coefficient of d_k v
    Field zero;                  // coefficient of v at the row node
    std::vector<char> boundary_row;
    std::optional<NonlocalTerm> nonlocal;

    [[nodiscard]] std::size_t size() const noexcept { return zero.size(); }
    [[nodiscard]] Field apply(const Field& v, const ChartGrid& grid) const;
    /// Sparse local part (without the rank-one term).
    [[nodiscard]] Eigen::SparseMatrix<double> local_matrix(const ChartGrid& grid) const;
};

[[nodiscard]] TensorField modified_schouten(const CurvaturePack& pack, const MetricField& metric, double t);

/// Builds the deformed tensor W = A^t_{g_u} (A_t may already include a shift).
[[nodiscard]] ConformalState deform(const TensorField& A_t, const Field& u, double t, const Model& model);

/// sigma_2^{1/2}(S^n, round) = sqrt(n(n-1)/8).
[[nodiscard]] double sphere_sigma2_sqrt(int n);

/// Smoothstep ramp on [0, 1/2], identically 1 on [1/2, 1].
[[nodiscard]] double psi_ramp(double t);

/// S_g(t) = (1 - psi(t)) (V^{1/2}/sqrt(3) g - A_g).
[[nodiscard]] TensorField yamabe_shift(const Model& model, double t_path);

/// Raised sigma_2 at a node: background or e^{4u} times background.
[[nodiscard]] double raised_sigma2(const ConformalState& state, std::size_t node, Raising raising);

/// sigma_2^{1/2} - f (or sigma_2 - f) at every node; cone-exit if any node
/// leaves Gamma_2^+.
[[nodiscard]] Field interior_residual(const ConformalState& state, const ProblemSpec& prob, const Model& model);

/// u_n + h_g - c(x, u), ordered as model.boundary.nodes.
[[nodiscard]] Field boundary_residual(const ConformalState& state, const ProblemSpec& prob, const Model& model);

/// Discrete equation: interior residual at interior nodes, boundary residual
/// at boundary nodes.
[[nodiscard]] Field equation_residual(const ConformalState& state, const ProblemSpec& prob, const Model& model);

/// h_{g_u} = e^{u} (u_n + h_g) at boundary nodes.
[[nodiscard]] Field conformal_mean_curvature(const ConformalState& state, const Model& model);

/// Inward normal derivative u_n at each boundary node.
[[nodiscard]] Field normal_derivative(const Field& u, const Model& model);

[[nodiscard]] LinearizedOperator linearize(const ConformalState& state, const ProblemSpec& prob, const Model& model);

/// int_M e^{-p u} dmu_g by the chart's product quadrature.
[[nodiscard]] double weighted_volume(const Field& u, double p, const MetricField& metric);

}  // namespace sigma2
