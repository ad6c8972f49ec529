#include "sigma2/checks.hpp"

#include "sigma2/geometry.hpp"
#include "sigma2/symfunc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace sigma2 {

namespace {

struct Sampler {
    std::mt19937_64 eng;
    std::normal_distribution<double> normal{0.0, 1.0};

    explicit Sampler(std::uint64_t seed) : eng(seed) {}

    double gauss() { return normal(eng); }

    Matrix orthogonal(int n) {
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = gauss();
        Eigen::HouseholderQR<Matrix> qr(a);
        return qr.householderQ() * Matrix::Identity(n, n);
    }

    Matrix spd(int n) {
        Matrix b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = gauss();
        return b * b.transpose() / n + 0.5 * Matrix::Identity(n, n);
    }

    Matrix symmetric(int n, double scale) {
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = scale * gauss();
        return 0.5 * (a + a.transpose());
    }

    /// Eigenvalues inside Gamma_2^+ with sigma_2 bounded away from 0.
    std::vector<double> cone_eigenvalues(int n) {
        for (;;) {
            std::vector<double> l(static_cast<std::size_t>(n));
            for (auto& x : l) x = 1.0 + gauss();
            const double s1 = elementary_symmetric(l, 1);
            const double s2 = elementary_symmetric(l, 2);
            if (s1 > 0.0 && s2 > 1e-3 * s1 * s1) return l;
        }
    }

    std::vector<double> any_eigenvalues(int n) {
        std::vector<double> l(static_cast<std::size_t>(n));
        for (auto& x : l) x = 2.0 * gauss();
        return l;
    }
};

/// W with generalized eigenvalues lambda relative to g = L L^T.
Matrix assemble(const Matrix& g, const Matrix& Q, const std::vector<double>& lambda) {
    const int n = static_cast<int>(g.rows());
    const Matrix L = g.llt().matrixL();
    Vector d(n);
    for (int i = 0; i < n; ++i) d(i) = lambda[static_cast<std::size_t>(i)];
    Matrix W = L * Q * d.asDiagonal() * Q.transpose() * L.transpose();
    return 0.5 * (W + W.transpose());
}

double oracle_sigma2(const Matrix& W, const Matrix& g) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(W, g);
    const Vector ev = es.eigenvalues();
    return 0.5 * (ev.sum() * ev.sum() - ev.squaredNorm());
}

double sqrt_s2(const Matrix& W, const Matrix& g) { return std::sqrt(sigma2_from_trace(W, g)); }

void record(PropertyResult& p, bool ok, double value, bool track_min) {
    ++p.samples;
    if (!ok) ++p.failures;
    if (p.samples == 1)
        p.worst = value;
    else
        p.worst = track_min ? std::min(p.worst, value) : std::max(p.worst, value);
}

double max_abs_diff(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

std::vector<PropertyResult> algebra_suite(long samples, std::uint64_t seed) {
    PropertyResult trace{"trace_vs_eigen_sigma2"}, grad{"gradient_fd_order"}, posdef{"F_positive_definite"},
        trF{"trace_F_identity"}, concave{"sqrt_sigma2_concavity"}, maclaurin{"maclaurin_margin"},
        partition{"partition_identities"};
    trace.detail = "max |trace - eigen| / (1 + |g^-1 W|^2), tol 1e-10";
    grad.detail = "min observed central-difference order along a quadratic curve, need >= 1.9";
    posdef.detail = "min eigenvalue of F g^-1 on Gamma_2^+ samples, need > 0";
    trF.detail = "max |tr F - (n-1) sigma_1| / (1 + |sigma_1|), tol 1e-12";
    concave.detail = "min midpoint slack of sigma_2^{1/2} on Gamma_2^+, need >= -1e-10";
    maclaurin.detail = "min MacLaurin margin, need >= -1e-12";
    partition.detail = "max partition-identity defect / (1 + |W|), tol 1e-13";

    Sampler rng(seed);
    for (long s = 0; s < samples; ++s) {
        const int n = 3 + static_cast<int>(s % 4);
        const Matrix g = (s / 4) % 2 == 0 ? Matrix(Matrix::Identity(n, n)) : rng.spd(n);
        const Matrix ginv = g.inverse();
        const bool in_cone = s % 2 == 0;
        const Matrix W = assemble(g, rng.orthogonal(n), in_cone ? rng.cone_eigenvalues(n) : rng.any_eigenvalues(n));
        const Matrix M = ginv * W;
        const double scale = 1.0 + M.squaredNorm();

        // 1. trace formula against eigenvalues (ours and the reference solver).
        const double s2 = sigma2_from_trace(W, g);
        const double e1 = std::abs(s2 - elementary_symmetric(spectrum(W, g), 2)) / scale;
        const double e2 = std::abs(s2 - oracle_sigma2(W, g)) / scale;
        record(trace, std::max(e1, e2) <= 1e-10, std::max(e1, e2), false);

        // 2. Directional derivative tr(F D) against central differences along
        //    M + hD + h^2 E, whose quotient error is exactly O(h^2).
        {
            const Matrix D = rng.symmetric(n, 1.0);
            const Matrix E = rng.symmetric(n, 1.0);
            const double exact = (sigma2_gradient(M) * D).trace();
            auto quotient = [&](double h) {
                return (sigma2_mixed(M + h * D + h * h * E) - sigma2_mixed(M - h * D + h * h * E)) / (2 * h);
            };
            const double ea = std::abs(quotient(0.1) - exact);
            const double eb = std::abs(quotient(0.05) - exact);
            // An O(h^2) coefficient below roundoff carries no order information.
            const double order = ea < 1e-9 ? 2.0 : std::log2(ea / eb);
            record(grad, order >= 1.9, order, true);
        }

        // 6. MacLaurin holds for every real spectrum.
        {
            const double m = maclaurin_margin(spectrum(W, g));
            record(maclaurin, m >= -1e-12, m, true);
        }

        // 7. Partition identities in an orthonormal frame (g = I).
        {
            const Matrix S = rng.symmetric(n, 2.0);
            const Matrix F = sigma2_gradient(S);
            const double sub = sigma1_mixed(S.topLeftCorner(n - 1, n - 1));
            double defect = std::abs(F(n - 1, n - 1) - sub);
            for (int a = 0; a < n - 1; ++a) defect = std::max(defect, std::abs(F(n - 1, a) + S(n - 1, a)));
            defect /= 1.0 + S.cwiseAbs().maxCoeff();
            record(partition, defect <= 1e-13, defect, false);
        }

        if (!in_cone) continue;

        // 3-4. F on Gamma_2^+.
        {
            const Matrix F = sigma2_gradient(M);
            Matrix Ft = F * ginv;
            Ft = 0.5 * (Ft + Ft.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<Matrix> es(Ft, Eigen::EigenvaluesOnly);
            const double lo = es.eigenvalues().minCoeff();
            record(posdef, lo > 0.0, lo, true);
            const double s1 = M.trace();
            const double d = std::abs(F.trace() - (n - 1) * s1) / (1.0 + std::abs(s1));
            record(trF, d <= 1e-12, d, false);
        }

        // 5. Midpoint concavity against a second cone sample with the same g.
        {
            const Matrix V = assemble(g, rng.orthogonal(n), rng.cone_eigenvalues(n));
            const Matrix mid = 0.5 * (W + V);
            const double slack = sqrt_s2(mid, g) - 0.5 * (sqrt_s2(W, g) + sqrt_s2(V, g));
            record(concave, slack >= -1e-10, slack, true);
        }
    }
    return {trace, grad, posdef, trF, concave, maclaurin, partition};
}

std::vector<double> observed_orders(const std::vector<double>& errors) {
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) out.push_back(std::log2(errors[k] / errors[k + 1]));
    return out;
}

GeometryStudy geometry_study(int coarse, int refinements, int band_tangential) {
    GeometryStudy st;
    ModelSpec cap;
    cap.id = CatalogId::CapSpaceform;
    cap.cap_radius = std::numbers::pi / 3;
    ModelSpec band;
    band.id = CatalogId::BandS3;

    for (int k = 0; k <= refinements; ++k) {
        const int count = (coarse - 1) * (1 << k) + 1;
        st.levels.push_back(count);
        {
            auto [grid, metric] = build_model(cap, {count});
            const CurvaturePack fd = curvature_fd(metric, grid);
            const CurvaturePack ex = curvature_exact(cap, grid);
            st.cap_ricci.push_back(max_abs_diff(fd.ricci, ex.ricci));
            if (k == refinements) {
                const BoundaryGeometry bg = boundary_geometry(metric, grid);
                for (const auto& b : bg.nodes)
                    st.cap_h_error = std::max(st.cap_h_error, std::abs(b.h - 1.0 / std::tan(cap.cap_radius)));
            }
        }
        {
            auto [grid, metric] = build_model(band, {count, band_tangential, band_tangential});
            const CurvaturePack fd = curvature_fd(metric, grid);
            const CurvaturePack ex = curvature_exact(band, grid);
            st.band_ricci.push_back(max_abs_diff(fd.ricci, ex.ricci));
            const FermiReport rep = fermi_identity_report(metric, grid);
            st.fermi_normal.push_back(rep.normal_christoffel);
            st.fermi_hess.push_back(rep.distance_hessian);
            if (k == refinements) {
                const BoundaryGeometry bg = boundary_geometry(metric, grid);
                const double r0 = band.band_r0, r1 = band.band_r1;
                for (const auto& b : bg.nodes) {
                    const double expect = b.face.side == 0 ? 0.5 * (std::tan(r0) - 1.0 / std::tan(r0))
                                                           : 0.5 * (1.0 / std::tan(r1) - std::tan(r1));
                    st.band_h_error = std::max(st.band_h_error, std::abs(b.h - expect));
                }
            }
        }
    }
    return st;
}

std::vector<PropertyResult> geometry_suite(const GeometryStudy& st) {
    auto order_check = [](const std::string& name, const std::vector<double>& errors, double need) {
        PropertyResult p{name};
        std::ostringstream os;
        os << "errors";
        for (double e : errors) os << ' ' << e;
        os << "; orders";
        p.worst = std::numeric_limits<double>::infinity();
        for (double o : observed_orders(errors)) {
            os << ' ' << o;
            record(p, o >= need, o, true);
        }
        os << "; need >= " << need;
        p.detail = os.str();
        return p;
    };
    std::vector<PropertyResult> out;
    out.push_back(order_check("cap_ricci_fd_order", st.cap_ricci, 1.9));
    out.push_back(order_check("band_ricci_fd_order", st.band_ricci, 1.9));
    PropertyResult hc{"cap_mean_curvature"};
    record(hc, st.cap_h_error <= 1e-8, st.cap_h_error, false);
    hc.detail = "max |h - cot rho_1|, tol 1e-8";
    out.push_back(hc);
    PropertyResult hb{"band_mean_curvature"};
    record(hb, st.band_h_error <= 1e-8, st.band_h_error, false);
    hb.detail = "max |h - (tan r0 - cot r0)/2| (and the mirrored r1 face), tol 1e-8";
    out.push_back(hb);
    out.push_back(order_check("fermi_christoffel_order", st.fermi_normal, 0.9));
    out.push_back(order_check("fermi_distance_hessian_order", st.fermi_hess, 0.9));
    return out;
}

}  // namespace sigma2
