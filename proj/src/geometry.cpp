#include "sigma2/geometry.hpp"

#include "sigma2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace sigma2 {

namespace {

constexpr double pi = std::numbers::pi;

double uniform01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

double polyval(const std::vector<double>& c, double x, int deriv) {
    double s = 0.0;
    double p = 1.0;
    for (std::size_t k = static_cast<std::size_t>(deriv); k < c.size(); ++k) {
        double f = 1.0;
        for (int d = 0; d < deriv; ++d) f *= static_cast<double>(k - static_cast<std::size_t>(d));
        s += c[k] * f * p;
        p *= x;
    }
    return s;
}

/// value, first and second derivative of a warp function
struct Warp {
    double v, d1, d2;
};

/// Smooth seeded perturbation chi with zero normal derivative at chart ends.
class Perturbation {
public:
    Perturbation(const ModelSpec& spec) {
        std::mt19937_64 eng(spec.seed);
        double total = 0.0;
        for (int m = 0; m < 3; ++m) {
            Mode mode;
            mode.k = m + 1;
            mode.coef = (2.0 * uniform01(eng) - 1.0) / ((m + 1.0) * (m + 1.0));
            mode.p = static_cast<int>(uniform01(eng) * 3.0);
            mode.q = static_cast<int>(uniform01(eng) * 3.0);
            mode.phase = 2.0 * pi * uniform01(eng);
            total += std::abs(mode.coef);
            modes_.push_back(mode);
        }
        if (total > 0)
            for (auto& m : modes_) m.coef /= total;
    }

    /// Radial profile on [0, rho1].
    [[nodiscard]] double radial(double rho, double rho1) const {
        double s = 0.0;
        for (const auto& m : modes_) s += m.coef * std::cos(m.k * pi * rho / rho1);
        return s;
    }

    /// Full chart: r in [r0, r1], periodic x, y with lengths lx, ly.
    [[nodiscard]] double full(double r, double x, double y, double r0, double r1, double lx,
                              double ly) const {
        double s = 0.0;
        for (const auto& m : modes_)
            s += m.coef * std::cos(m.k * pi * (r - r0) / (r1 - r0)) *
                 std::cos(2.0 * pi * (m.p * x / lx + m.q * y / ly) + m.phase);
        return s;
    }

private:
    struct Mode {
        int k = 1, p = 0, q = 0;
        double coef = 0.0, phase = 0.0;
    };
    std::vector<Mode> modes_;
};

std::pair<Warp, Warp> warps(const ModelSpec& spec, double r) {
    if (spec.id == CatalogId::BandS3)
        return {{std::cos(r), -std::sin(r), -std::cos(r)}, {std::sin(r), std::cos(r), -std::sin(r)}};
    return {{polyval(spec.warp_a, r, 0), polyval(spec.warp_a, r, 1), polyval(spec.warp_a, r, 2)},
            {polyval(spec.warp_b, r, 0), polyval(spec.warp_b, r, 1), polyval(spec.warp_b, r, 2)}};
}

/// r-interval and periodic lengths of a full (non-radial) catalog chart.
struct FullChartExtent {
    double r0, r1, lx, ly;
};

FullChartExtent full_extent(const ModelSpec& s) {
    if (s.id == CatalogId::BandS3) return {s.band_r0, s.band_r1, 2 * pi, 2 * pi};
    return {s.slab_r0, s.slab_r1, s.slab_period, s.slab_period};
}

ModelSpec base_of(const ModelSpec& spec) {
    ModelSpec b = spec;
    b.id = spec.base;
    b.amplitude = 0.0;
    return b;
}

/// First and second derivative of a radial profile by 4th-order central
/// differences (ghost reflection at the center with the given parity),
/// falling back to second-order stencils near the outer end.
void profile_derivatives(const std::vector<double>& f, double parity, double h,
                         std::vector<double>& d1, std::vector<double>& d2) {
    const int n = static_cast<int>(f.size());
    auto at = [&](int i) { return i >= 0 ? f[i] : parity * f[-i]; };
    d1.assign(f.size(), 0.0);
    d2.assign(f.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        if (i + 2 <= n - 1) {
            d1[i] = (at(i - 2) - 8 * at(i - 1) + 8 * at(i + 1) - at(i + 2)) / (12 * h);
            d2[i] = (-at(i - 2) + 16 * at(i - 1) - 30 * at(i) + 16 * at(i + 1) - at(i + 2)) / (12 * h * h);
        } else if (i == n - 2) {
            d1[i] = (at(i + 1) - at(i - 1)) / (2 * h);
            d2[i] = (at(i + 1) - 2 * at(i) + at(i - 1)) / (h * h);
        } else {
            d1[i] = (3 * at(i) - 4 * at(i - 1) + at(i - 2)) / (2 * h);
            d2[i] = (2 * at(i) - 5 * at(i - 1) + 4 * at(i - 2) - at(i - 3)) / (h * h);
        }
    }
}

/// Fill a radial pack from profile values and derivatives (nodes >= 1);
/// the center is extrapolated.
CurvaturePack radial_pack(int n, const std::vector<double>& a, const std::vector<double>& a1,
                          const std::vector<double>& b,
                          const std::vector<double>& b1, const std::vector<double>& b2,
                          bool extrapolate_center) {
    const std::size_t count = a.size();
    CurvaturePack pack;
    pack.n = n;
    pack.christoffel.assign(count * n * n * n, 0.0);
    pack.ricci.assign(count, Matrix::Zero(n, n));
    pack.scalar.assign(count, 0.0);
    std::vector<double> krad(count), ktan(count);
    for (std::size_t i = 1; i < count; ++i) {
        const double bs = b1[i] / a[i];
        const double bss = (b2[i] * a[i] - b1[i] * a1[i]) / (a[i] * a[i] * a[i]);
        krad[i] = -bss / b[i];
        ktan[i] = (1.0 - bs * bs) / (b[i] * b[i]);
        pack.gamma(i, 0, 0, 0) = a1[i] / a[i];
        for (int k = 1; k < n; ++k) {
            pack.gamma(i, 0, k, k) = -b[i] * b1[i] / (a[i] * a[i]);
            pack.gamma(i, k, 0, k) = pack.gamma(i, k, k, 0) = b1[i] / b[i];
        }
        Matrix ric = Matrix::Zero(n, n);
        ric(0, 0) = a[i] * a[i] * (n - 1) * krad[i];
        for (int k = 1; k < n; ++k) ric(k, k) = b[i] * b[i] * (krad[i] + (n - 2) * ktan[i]);
        pack.ricci[i] = ric;
        pack.scalar[i] = (n - 1) * (2 * krad[i] + (n - 2) * ktan[i]);
    }
    double kappa;
    if (extrapolate_center) {
        auto ext = [](const std::vector<double>& v) { return 3 * v[1] - 3 * v[2] + v[3]; };
        kappa = 0.5 * (ext(krad) + ext(ktan));
    } else {
        kappa = krad[1];
    }
    pack.ricci[0] = a[0] * a[0] * (n - 1) * kappa * Matrix::Identity(n, n);
    pack.scalar[0] = n * (n - 1) * kappa;
    return pack;
}

CurvaturePack warped_pack(const ModelSpec& spec, const ChartGrid& grid) {
    const int n = 3;
    CurvaturePack pack;
    pack.n = n;
    const std::size_t count = grid.node_count();
    pack.christoffel.assign(count * n * n * n, 0.0);
    pack.ricci.assign(count, Matrix::Zero(n, n));
    pack.scalar.assign(count, 0.0);
    for (std::size_t node = 0; node < count; ++node) {
        const double r = grid.coordinate(node, 0);
        const auto [A, B] = warps(spec, r);
        pack.gamma(node, 0, 1, 1) = -A.v * A.d1;
        pack.gamma(node, 1, 0, 1) = pack.gamma(node, 1, 1, 0) = A.d1 / A.v;
        pack.gamma(node, 0, 2, 2) = -B.v * B.d1;
        pack.gamma(node, 2, 0, 2) = pack.gamma(node, 2, 2, 0) = B.d1 / B.v;
        // Sectional curvatures of the (r,x), (r,y) and (x,y) planes.
        const double krx = -A.d2 / A.v;
        const double kry = -B.d2 / B.v;
        const double kxy = -A.d1 * B.d1 / (A.v * B.v);
        Matrix ric = Matrix::Zero(n, n);
        ric(0, 0) = krx + kry;
        ric(1, 1) = A.v * A.v * (krx + kxy);
        ric(2, 2) = B.v * B.v * (kry + kxy);
        pack.ricci[node] = ric;
        pack.scalar[node] = 2.0 * (krx + kry + kxy);
    }
    return pack;
}

Matrix schouten(const Matrix& ric, double scalar, const Matrix& g) {
    const int n = static_cast<int>(g.rows());
    return (ric - scalar / (2.0 * (n - 1)) * g) / (n - 2);
}

void fill_inverse_and_check(MetricField& m) {
    m.g_inv.resize(m.g.size());
    for (std::size_t i = 0; i < m.g.size(); ++i) {
        const Spectrum s = symmetric_eigenvalues(m.g[i]);
        if (!(s.back() > 0.0))
            throw Error(ErrorKind::InvalidMetric, "metric not SPD at node " + std::to_string(i));
        m.g_inv[i] = m.g[i].inverse();
    }
}

}  // namespace

const char* to_string(CatalogId id) noexcept {
    switch (id) {
        case CatalogId::CapSpaceform: return "cap_spaceform";
        case CatalogId::BandS3: return "band_s3";
        case CatalogId::WarpedSlab: return "warped_slab";
        case CatalogId::Perturbed: return "perturbed";
    }
    return "unknown";
}

CatalogId catalog_from_string(const std::string& name) {
    if (name == "cap_spaceform" || name == "cap") return CatalogId::CapSpaceform;
    if (name == "band_s3" || name == "band") return CatalogId::BandS3;
    if (name == "warped_slab" || name == "slab") return CatalogId::WarpedSlab;
    if (name == "perturbed") return CatalogId::Perturbed;
    throw Error(ErrorKind::InvalidArgument, "unknown catalog id '" + name + "'");
}

double unit_sphere_volume(int m) {
    const double k = (m + 1) / 2.0;
    return 2.0 * std::pow(pi, k) / std::tgamma(k);
}

void ModelSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    const CatalogId kind = id == CatalogId::Perturbed ? base : id;
    if (id == CatalogId::Perturbed) {
        if (base != CatalogId::CapSpaceform && base != CatalogId::BandS3)
            fail("perturbed models need a cap_spaceform or band_s3 base");
        if (!(amplitude >= 0.0 && amplitude <= 0.25)) fail("perturbation amplitude outside [0, 0.25]");
    }
    switch (kind) {
        case CatalogId::CapSpaceform:
            if (dim < 3) fail("cap_spaceform needs dim >= 3");
            if (!(cap_radius > 0.0 && cap_radius <= pi / 2 + 1e-12)) fail("cap radius outside (0, pi/2]");
            break;
        case CatalogId::BandS3:
            if (dim != 3) fail("band_s3 is three-dimensional");
            if (!(band_r0 > 0.0 && band_r0 < band_r1 && band_r1 < pi / 2)) fail("band interval outside (0, pi/2)");
            break;
        case CatalogId::WarpedSlab: {
            if (dim != 3) fail("warped_slab is three-dimensional");
            if (!(slab_r0 < slab_r1) || !(slab_period > 0.0)) fail("bad slab extent");
            if (warp_a.empty() || warp_b.empty()) fail("warp coefficient tables must be nonempty");
            for (int k = 0; k <= 64; ++k) {
                const double r = slab_r0 + (slab_r1 - slab_r0) * k / 64.0;
                if (!(polyval(warp_a, r, 0) > 0.0) || !(polyval(warp_b, r, 0) > 0.0))
                    fail("warp functions must stay positive on the slab");
            }
            break;
        }
        case CatalogId::Perturbed: fail("nested perturbation"); break;
    }
}

std::pair<ChartGrid, MetricField> build_model(const ModelSpec& spec, const std::vector<int>& resolution) {
    spec.validate();
    MetricField metric;
    metric.source = to_string(spec.id);
    const double eps = spec.id == CatalogId::Perturbed ? spec.amplitude : 0.0;
    const Perturbation chi(spec);

    if (spec.radial()) {
        if (resolution.size() != 1)
            throw Error(ErrorKind::InvalidArgument, "radial models take one resolution count");
        const int N = resolution[0];
        if (N < 4) throw Error(ErrorKind::InvalidArgument, "node count must be >= 4 per axis");
        const int n = spec.dim;
        const double h = spec.cap_radius / (N - 1);
        ChartGrid grid(n, {Axis{N, 0.0, h, false}}, {Face{0, 1}}, Symmetry::Radial);
        const double sphere = unit_sphere_volume(n - 1);
        for (int i = 0; i < N; ++i) {
            const double rho = i * h;
            const double conf = std::exp(eps * chi.radial(rho, spec.cap_radius));
            const double alpha = conf;
            const double beta = conf * std::sin(rho);
            metric.radial_alpha.push_back(alpha);
            metric.radial_beta.push_back(beta);
            Matrix g = Matrix::Identity(n, n) * alpha * alpha;
            if (i > 0)
                for (int k = 1; k < n; ++k) g(k, k) = beta * beta;
            metric.g.push_back(g);
            metric.volume_weights.push_back(sphere * alpha * std::pow(beta, n - 1) * grid.coordinate_weight(i));
        }
        fill_inverse_and_check(metric);
        if (spec.is_catalog()) metric.catalog = spec;
        return {std::move(grid), std::move(metric)};
    }

    if (resolution.size() != 3)
        throw Error(ErrorKind::InvalidArgument, "three-dimensional models take three resolution counts");
    for (int c : resolution)
        if (c < 4) throw Error(ErrorKind::InvalidArgument, "node count must be >= 4 per axis");
    const ModelSpec shape = spec.id == CatalogId::Perturbed ? base_of(spec) : spec;
    const auto ext = full_extent(shape);
    std::vector<Axis> axes{
        Axis{resolution[0], ext.r0, (ext.r1 - ext.r0) / (resolution[0] - 1), false},
        Axis{resolution[1], 0.0, ext.lx / resolution[1], true},
        Axis{resolution[2], 0.0, ext.ly / resolution[2], true},
    };
    ChartGrid grid(3, axes, {Face{0, 0}, Face{0, 1}}, Symmetry::None);
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        const double r = grid.coordinate(node, 0);
        const auto [A, B] = warps(shape, r);
        Matrix g = Matrix::Zero(3, 3);
        g(0, 0) = 1.0;
        g(1, 1) = A.v * A.v;
        g(2, 2) = B.v * B.v;
        if (eps != 0.0) {
            const double c = chi.full(r, grid.coordinate(node, 1), grid.coordinate(node, 2), ext.r0,
                                      ext.r1, ext.lx, ext.ly);
            g *= std::exp(2.0 * eps * c);
        }
        metric.volume_weights.push_back(std::sqrt(g.determinant()) * grid.coordinate_weight(node));
        metric.g.push_back(g);
    }
    fill_inverse_and_check(metric);
    if (spec.is_catalog()) metric.catalog = spec;
    return {std::move(grid), std::move(metric)};
}

CurvaturePack curvature_exact(const ModelSpec& spec, const ChartGrid& grid) {
    if (!spec.is_catalog())
        throw Error(ErrorKind::Unsupported, "closed-form curvature needs a catalog metric");
    if (spec.id == CatalogId::CapSpaceform) {
        const std::size_t count = grid.node_count();
        std::vector<double> a(count, 1.0), a1(count, 0.0), b(count), b1(count), b2(count);
        for (std::size_t i = 0; i < count; ++i) {
            const double rho = grid.coordinate(i, 0);
            b[i] = std::sin(rho);
            b1[i] = std::cos(rho);
            b2[i] = -std::sin(rho);
        }
        return radial_pack(grid.dim(), a, a1, b, b1, b2, false);
    }
    return warped_pack(spec, grid);
}

CurvaturePack curvature_fd(const MetricField& metric, const ChartGrid& grid) {
    const int n = grid.dim();
    const std::size_t count = grid.node_count();
    if (metric.size() != count) throw Error(ErrorKind::InvalidArgument, "metric/grid size mismatch");
    for (std::size_t i = 0; i < count; ++i) {
        if (!(symmetric_eigenvalues(metric.g[i]).back() > 0.0))
            throw Error(ErrorKind::InvalidMetric, "metric not SPD at node " + std::to_string(i));
    }
    if (grid.radial()) {
        const double h = grid.axes()[0].spacing;
        std::vector<double> a1, a2, b1, b2;
        profile_derivatives(metric.radial_alpha, 1.0, h, a1, a2);
        profile_derivatives(metric.radial_beta, -1.0, h, b1, b2);
        return radial_pack(n, metric.radial_alpha, a1, metric.radial_beta, b1, b2, true);
    }
    for (const auto& ax : grid.axes())
        if (ax.periodic && ax.count < 8)
            throw Error(ErrorKind::InvalidArgument, "finite-difference curvature needs >= 8 nodes per periodic axis");

    // Component fields g_ij.
    std::vector<std::vector<double>> comp(static_cast<std::size_t>(n * n), std::vector<double>(count));
    for (std::size_t node = 0; node < count; ++node)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) comp[i * n + j][node] = metric.g[node](i, j);

    CurvaturePack pack;
    pack.n = n;
    pack.christoffel.assign(count * n * n * n, 0.0);
    pack.ricci.assign(count, Matrix::Zero(n, n));
    pack.scalar.assign(count, 0.0);

    std::vector<Matrix> dg(n, Matrix(n, n));                       // dg[l](i,j) = d_l g_ij
    std::vector<Matrix> ddg(static_cast<std::size_t>(n * n), Matrix(n, n));  // ddg[l*n+m]
    std::vector<double> gam1(static_cast<std::size_t>(n * n * n));  // Gamma_{m,ij}
    std::vector<double> gam2(static_cast<std::size_t>(n * n * n));  // Gamma^k_ij
    std::vector<double> dgam(static_cast<std::size_t>(n * n * n * n));  // d_l Gamma^k_ij
    auto I3 = [n](int a, int b, int c) { return static_cast<std::size_t>((a * n + b) * n + c); };
    auto I4 = [n](int l, int a, int b, int c) { return static_cast<std::size_t>(((l * n + a) * n + b) * n + c); };

    for (std::size_t node = 0; node < count; ++node) {
        const Matrix& ginv = metric.g_inv[node];
        for (int l = 0; l < n; ++l) {
            const Stencil s = grid.grad_stencil(node, l);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) dg[l](i, j) = s.apply(comp[i * n + j]);
        }
        for (int l = 0; l < n; ++l) {
            for (int m = l; m < n; ++m) {
                const Stencil s = grid.hess_stencil(node, l, m);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) ddg[l * n + m](i, j) = s.apply(comp[i * n + j]);
                ddg[m * n + l] = ddg[l * n + m];
            }
        }
        for (int m = 0; m < n; ++m)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    gam1[I3(m, i, j)] = 0.5 * (dg[i](j, m) + dg[j](i, m) - dg[m](i, j));
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (int m = 0; m < n; ++m) s += ginv(k, m) * gam1[I3(m, i, j)];
                    gam2[I3(k, i, j)] = s;
                    pack.gamma(node, k, i, j) = s;
                }
        // d_l Gamma^k_ij = g^{km} (d_l Gamma_{m,ij} - d_l g_{mq} Gamma^q_ij)
        for (int l = 0; l < n; ++l)
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (int m = 0; m < n; ++m) {
                            double t = 0.5 * (ddg[l * n + i](j, m) + ddg[l * n + j](i, m) - ddg[l * n + m](i, j));
                            for (int q = 0; q < n; ++q) t -= dg[l](m, q) * gam2[I3(q, i, j)];
                            s += ginv(k, m) * t;
                        }
                        dgam[I4(l, k, i, j)] = s;
                    }
        Matrix ric = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) {
                    s += dgam[I4(k, k, i, j)] - dgam[I4(j, k, i, k)];
                    for (int l = 0; l < n; ++l)
                        s += gam2[I3(k, k, l)] * gam2[I3(l, i, j)] - gam2[I3(k, j, l)] * gam2[I3(l, i, k)];
                }
                ric(i, j) = s;
            }
        ric = 0.5 * (ric + ric.transpose()).eval();
        pack.ricci[node] = ric;
        pack.scalar[node] = (ginv.cwiseProduct(ric)).sum();
    }
    return pack;
}

BoundaryGeometry boundary_geometry(const MetricField& metric, const ChartGrid& grid) {
    if (metric.catalog) return boundary_geometry(metric, grid, curvature_exact(*metric.catalog, grid));
    return boundary_geometry(metric, grid, curvature_fd(metric, grid));
}

BoundaryGeometry boundary_geometry(const MetricField& metric, const ChartGrid& grid,
                                   const CurvaturePack& pack) {
    if (grid.boundary_faces().empty())
        throw Error(ErrorKind::InvalidArgument, "chart has no boundary faces");
    const int n = grid.dim();
    const std::size_t count = grid.node_count();
    BoundaryGeometry bg;
    bg.slot.assign(count, -1);

    // Extended unit normal covector field per face: n_i = s delta_ia / sqrt(g^aa).
    std::vector<std::vector<std::vector<double>>> covector_field;
    for (const auto& f : grid.boundary_faces()) {
        const double sign = f.side == 0 ? 1.0 : -1.0;
        std::vector<std::vector<double>> comp(static_cast<std::size_t>(n), std::vector<double>(count, 0.0));
        for (std::size_t node = 0; node < count; ++node)
            comp[f.axis][node] = sign / std::sqrt(metric.g_inv[node](f.axis, f.axis));
        covector_field.push_back(std::move(comp));
    }

    for (std::size_t node : grid.boundary_nodes()) {
        const Face face = *grid.face_of(node);
        const auto fidx = static_cast<std::size_t>(
            std::find(grid.boundary_faces().begin(), grid.boundary_faces().end(), face) -
            grid.boundary_faces().begin());
        const int a = face.axis;  // metric index of the transverse coordinate
        const Matrix& g = metric.g[node];
        const Matrix& ginv = metric.g_inv[node];
        BoundaryNode b;
        b.node = node;
        b.face = face;
        b.normal_covector = Vector::Zero(n);
        b.normal_covector(a) = covector_field[fidx][a][node];
        b.normal = ginv * b.normal_covector;
        for (int i = 0; i < n; ++i)
            if (i != a) b.tangent.push_back(i);
        const int m = n - 1;
        b.induced.resize(m, m);
        b.L.resize(m, m);
        Matrix grad_n(m, m);
        for (int p = 0; p < m; ++p) {
            for (int q = 0; q < m; ++q) {
                const int al = b.tangent[p], be = b.tangent[q];
                b.induced(p, q) = g(al, be);
                double gn = 0.0;
                for (int k = 0; k < n; ++k) gn += pack.gamma(node, k, al, be) * b.normal_covector(k);
                b.L(p, q) = gn;
                // (nabla n)_{al be} = d_al n_be - Gamma^k_{al be} n_k
                const double dn = grid.grad_stencil(node, al).apply(covector_field[fidx][be]);
                grad_n(p, q) = dn - gn;
            }
        }
        b.L = 0.5 * (b.L + b.L.transpose()).eval();
        const Matrix induced_inv = b.induced.inverse();
        b.h = (induced_inv * b.L).trace() / m;
        b.h_divergence = -(induced_inv * grad_n).trace() / m;
        b.L_trace_free = b.L - b.h * b.induced;
        bg.slot[node] = static_cast<long>(bg.nodes.size());
        bg.nodes.push_back(std::move(b));
    }
    return bg;
}

DistanceField boundary_distance(const MetricField& metric, const ChartGrid& grid) {
    if (metric.catalog) return boundary_distance(metric, grid, curvature_exact(*metric.catalog, grid));
    return boundary_distance(metric, grid, curvature_fd(metric, grid));
}

DistanceField boundary_distance(const MetricField& metric, const ChartGrid& grid,
                                const CurvaturePack& pack) {
    if (grid.boundary_faces().empty())
        throw Error(ErrorKind::Unsupported, "distance field needs boundary faces");
    const std::size_t count = grid.node_count();
    const int n = grid.dim();
    DistanceField df;
    df.d.assign(count, std::numeric_limits<double>::infinity());
    // Arclength along the transverse coordinate line from each face.
    for (const auto& f : grid.boundary_faces()) {
        const auto& ax = grid.axes()[f.axis];
        for (std::size_t node = 0; node < count; ++node) {
            auto idx = grid.multi_index(node);
            if (idx[f.axis] != (f.side == 0 ? 0 : ax.count - 1)) continue;
            double acc = 0.0;
            const int step = f.side == 0 ? 1 : -1;
            std::size_t prev = node;
            df.d[node] = std::min(df.d[node], 0.0);
            for (int k = 1; k < ax.count; ++k) {
                idx[f.axis] += step;
                const std::size_t cur = grid.index(std::span<const int>(idx.data(), grid.axes().size()));
                acc += 0.5 * ax.spacing *
                       (std::sqrt(metric.g[prev](f.axis, f.axis)) + std::sqrt(metric.g[cur](f.axis, f.axis)));
                df.d[cur] = std::min(df.d[cur], acc);
                prev = cur;
            }
        }
    }
    df.grad.resize(count);
    df.hess.resize(count);
    for (std::size_t node = 0; node < count; ++node) {
        df.grad[node] = grid.gradient(df.d, node);
        Matrix H = grid.partials(df.d, node);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) H(i, j) -= pack.gamma(node, k, i, j) * df.grad[node](k);
        df.hess[node] = H;
    }
    return df;
}

FermiReport fermi_identity_report(const MetricField& metric, const ChartGrid& grid) {
    const CurvaturePack fd = curvature_fd(metric, grid);
    const BoundaryGeometry bg = boundary_geometry(metric, grid);
    const DistanceField dist = boundary_distance(metric, grid, fd);
    const int n = grid.dim();
    FermiReport rep;
    for (const auto& b : bg.nodes) {
        const std::size_t node = b.node;
        const Matrix& g = metric.g[node];
        const int a = b.face.axis;
        const double na = b.normal_covector(a);
        const int m = n - 1;
        for (int p = 0; p < m; ++p)
            for (int q = 0; q < m; ++q) {
                const int al = b.tangent[p], be = b.tangent[q];
                const double scale = std::sqrt(g(al, al) * g(be, be));
                const double gn = na * fd.gamma(node, a, al, be);
                rep.normal_christoffel = std::max(rep.normal_christoffel, std::abs(gn - b.L(p, q)) / scale);
                rep.distance_hessian =
                    std::max(rep.distance_hessian, std::abs(dist.hess[node](al, be) + b.L(p, q)) / scale);
            }
        for (int i = 0; i < n; ++i) {
            rep.mixed_christoffel =
                std::max(rep.mixed_christoffel, std::abs(fd.gamma(node, a, i, a)) / std::sqrt(g(i, i)));
            rep.normal_normal = std::max(rep.normal_normal,
                                         std::abs(fd.gamma(node, i, a, a)) * std::sqrt(g(i, i)) / g(a, a));
        }
    }
    return rep;
}

Model make_model(const ModelSpec& spec, ChartGrid grid, MetricField metric) {
    Model m;
    m.spec = spec;
    m.grid = std::move(grid);
    m.metric = std::move(metric);
    m.curvature = m.metric.catalog ? curvature_exact(*m.metric.catalog, m.grid) : curvature_fd(m.metric, m.grid);
    m.boundary = boundary_geometry(m.metric, m.grid, m.curvature);
    m.distance = boundary_distance(m.metric, m.grid, m.curvature);
    if (spec.id == CatalogId::Perturbed) {
        // The perturbation must keep the Schouten tensor inside Gamma_2^+.
        for (std::size_t node = 0; node < m.size(); ++node) {
            const Matrix A = schouten(m.curvature.ricci[node], m.curvature.scalar[node], m.metric.g[node]);
            const auto cone = cone_membership(spectrum(A, m.metric.g[node]), 2);
            if (!cone.member)
                throw Error(ErrorKind::InvalidArgument,
                            "perturbation amplitude too large: Schouten tensor leaves Gamma_2^+ at node " +
                                std::to_string(node));
        }
    }
    return m;
}

Model make_model(const ModelSpec& spec, const std::vector<int>& resolution) {
    auto [grid, metric] = build_model(spec, resolution);
    return make_model(spec, std::move(grid), std::move(metric));
}

}  // namespace sigma2
