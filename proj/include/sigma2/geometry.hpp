#pragma once

// Model manifolds with boundary on tensor-product charts: metric fields,
// curvature (closed form and finite differences), boundary shape operator
// and the boundary-distance field.

#include "sigma2/grid.hpp"
#include "sigma2/symfunc.hpp"

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace sigma2 {

enum class CatalogId { CapSpaceform, BandS3, WarpedSlab, Perturbed };

[[nodiscard]] const char* to_string(CatalogId id) noexcept;
[[nodiscard]] CatalogId catalog_from_string(const std::string& name);

/// Parameters of a catalog model.
///
/// - cap_spaceform: geodesic ball of radius cap_radius in the unit round
///   S^dim, radial chart g = drho^2 + sin^2(rho) g_{S^{dim-1}}.
/// - band_s3: g = dr^2 + cos^2 r dphi^2 + sin^2 r dpsi^2 on
///   [band_r0, band_r1] x T^2, both r-ends are boundary.
/// - warped_slab: g = dr^2 + a(r)^2 dx^2 + b(r)^2 dy^2 with polynomial a, b
///   (coefficients in increasing degree) on [slab_r0, slab_r1] x T^2.
/// - perturbed: e^{2 amplitude chi} g_base with a seeded smooth chi whose
///   normal derivative vanishes on the boundary.
struct ModelSpec {
    CatalogId id = CatalogId::CapSpaceform;
    int dim = 3;
    double cap_radius = std::numbers::pi / 2;
    double band_r0 = std::numbers::pi / 6;
    double band_r1 = std::numbers::pi / 3;
    std::vector<double> warp_a{1.0};
    std::vector<double> warp_b{1.0};
    double slab_r0 = 0.0;
    double slab_r1 = 1.0;
    double slab_period = 2 * std::numbers::pi;
    CatalogId base = CatalogId::CapSpaceform;
    double amplitude = 0.0;
    std::uint64_t seed = 0;

    [[nodiscard]] bool is_catalog() const noexcept { return id != CatalogId::Perturbed; }
    [[nodiscard]] bool radial() const noexcept {
        return id == CatalogId::CapSpaceform || (id == CatalogId::Perturbed && base == CatalogId::CapSpaceform);
    }
    void validate() const;
};

struct MetricField {
    std::vector<Matrix> g;
    std::vector<Matrix> g_inv;
    /// Quadrature weight per node: sqrt(det g) dx (radial charts include the
    /// |S^{n-1}| beta^{n-1} alpha sphere-factor volume).
    std::vector<double> volume_weights;
    /// Radial charts only: g = alpha(rho)^2 drho^2 + beta(rho)^2 g_{S^{n-1}}.
    std::vector<double> radial_alpha;
    std::vector<double> radial_beta;
    /// Set when the metric is a closed-form catalog metric.
    std::optional<ModelSpec> catalog;
    std::string source = "raw";

    [[nodiscard]] std::size_t size() const noexcept { return g.size(); }
};

/// Christoffel symbols Gamma^k_ij, Ricci and scalar curvature per node.
struct CurvaturePack {
    int n = 0;
    std::vector<double> christoffel;  // [node][k][i][j], n^3 per node
    std::vector<Matrix> ricci;
    std::vector<double> scalar;

    [[nodiscard]] double gamma(std::size_t node, int k, int i, int j) const {
        const auto nn = static_cast<std::size_t>(n);
        return christoffel[node * nn * nn * nn + (static_cast<std::size_t>(k) * nn + i) * nn + j];
    }
    double& gamma(std::size_t node, int k, int i, int j) {
        const auto nn = static_cast<std::size_t>(n);
        return christoffel[node * nn * nn * nn + (static_cast<std::size_t>(k) * nn + i) * nn + j];
    }
};

struct BoundaryNode {
    std::size_t node = 0;
    Face face;
    Vector normal;          // inward g-unit normal n^i
    Vector normal_covector; // n_i
    std::vector<int> tangent;  // coordinate indices spanning T(dM)
    Matrix induced;         // g restricted to tangent indices
    Matrix L;               // second fundamental form, L = -nabla n on T(dM)
    Matrix L_trace_free;
    double h = 0.0;         // mean curvature tr_{g~} L / (n-1)
    double h_divergence = 0.0;  // -tr_{g~}(nabla n) / (n-1), computed from the normal field
};

struct BoundaryGeometry {
    std::vector<BoundaryNode> nodes;
    std::vector<long> slot;  // node -> index into nodes, -1 for non-boundary

    [[nodiscard]] const BoundaryNode* at(std::size_t node) const {
        const long s = slot[node];
        return s < 0 ? nullptr : &nodes[static_cast<std::size_t>(s)];
    }
};

struct DistanceField {
    std::vector<double> d;
    std::vector<Vector> grad;  // partial derivatives d_i
    std::vector<Matrix> hess;  // covariant Hessian
};

struct FermiReport {
    double normal_christoffel = 0.0;  // max |Gamma^n_ab - L_ab|
    double mixed_christoffel = 0.0;   // max |Gamma^n_in|
    double normal_normal = 0.0;       // max |Gamma^i_nn|
    double distance_hessian = 0.0;    // max |Hess d(e_a, e_b) + L_ab|
};

[[nodiscard]] std::pair<ChartGrid, MetricField> build_model(const ModelSpec& spec,
                                                            const std::vector<int>& resolution);
[[nodiscard]] CurvaturePack curvature_exact(const ModelSpec& spec, const ChartGrid& grid);
[[nodiscard]] CurvaturePack curvature_fd(const MetricField& metric, const ChartGrid& grid);

/// Uses the closed-form Christoffel symbols for catalog metrics and the
/// finite-difference ones otherwise.
[[nodiscard]] BoundaryGeometry boundary_geometry(const MetricField& metric, const ChartGrid& grid);
[[nodiscard]] BoundaryGeometry boundary_geometry(const MetricField& metric, const ChartGrid& grid,
                                                 const CurvaturePack& pack);

[[nodiscard]] DistanceField boundary_distance(const MetricField& metric, const ChartGrid& grid);
[[nodiscard]] DistanceField boundary_distance(const MetricField& metric, const ChartGrid& grid,
                                              const CurvaturePack& pack);

/// Residuals of the Fermi-coordinate identities at boundary nodes, with
/// finite-difference Christoffel symbols against the boundary shape operator.
[[nodiscard]] FermiReport fermi_identity_report(const MetricField& metric, const ChartGrid& grid);

/// Everything a solver needs about a model, assembled once.
struct Model {
    ModelSpec spec;
    ChartGrid grid;
    MetricField metric;
    CurvaturePack curvature;
    BoundaryGeometry boundary;
    DistanceField distance;

    [[nodiscard]] int dim() const noexcept { return grid.dim(); }
    [[nodiscard]] std::size_t size() const noexcept { return grid.node_count(); }
};

/// Builds grid and metric, then curvature (exact for catalog metrics,
/// finite differences otherwise), boundary geometry and distance field.
[[nodiscard]] Model make_model(const ModelSpec& spec, const std::vector<int>& resolution);

/// Model from raw metric arrays (e.g. loaded from a container file).
[[nodiscard]] Model make_model(const ModelSpec& spec, ChartGrid grid, MetricField metric);

/// Volume of the unit sphere S^{m}.
[[nodiscard]] double unit_sphere_volume(int m);

}  // namespace sigma2
