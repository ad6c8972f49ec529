#include "sigma2/symfunc.hpp"

#include "sigma2/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace sigma2 {

namespace {

std::string dump(const Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << (i ? "; " : "");
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    }
    os << "]";
    return os.str();
}

Eigen::LLT<Matrix> checked_cholesky(const Matrix& g) {
    if (g.rows() != g.cols() || g.rows() == 0)
        throw Error(ErrorKind::InvalidMetric, "metric must be a nonempty square matrix");
    if (!g.allFinite()) throw Error(ErrorKind::InvalidMetric, "metric has non-finite entries");
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(ErrorKind::InvalidMetric, "metric not symmetric: " + dump(g));
    Eigen::LLT<Matrix> llt(g);
    if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0))
        throw Error(ErrorKind::InvalidMetric, "metric not positive definite: " + dump(g));
    return llt;
}

}  // namespace

Spectrum make_spectrum(std::vector<double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "spectrum entry not finite");
    std::sort(values.begin(), values.end(), std::greater<>());
    return Spectrum{std::move(values)};
}

double elementary_symmetric(std::span<const double> lambda, int k) {
    const int n = static_cast<int>(lambda.size());
    if (k < 1 || k > n)
        throw Error(ErrorKind::InvalidArgument,
                    "order k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    // e[j] holds sigma_j of the entries consumed so far.
    std::vector<double> e(static_cast<std::size_t>(k) + 1, 0.0);
    e[0] = 1.0;
    for (double x : lambda)
        for (int j = k; j >= 1; --j) e[j] += x * e[j - 1];
    return e[k];
}

double elementary_symmetric(const Spectrum& lambda, int k) {
    return elementary_symmetric(std::span<const double>(lambda.values), k);
}

void require_symmetric(const Matrix& W, const char* what, double tol) {
    if (W.rows() != W.cols())
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " is not square");
    const double scale = 1.0 + (W.size() ? W.cwiseAbs().maxCoeff() : 0.0);
    if (W.size() && (W - W.transpose()).cwiseAbs().maxCoeff() > tol * scale)
        throw Error(ErrorKind::InvalidArgument, std::string(what) + " is not symmetric: " + dump(W));
}

Matrix raise_index(const Matrix& W, const Matrix& g) {
    auto llt = checked_cholesky(g);
    if (W.rows() != g.rows() || W.cols() != g.cols())
        throw Error(ErrorKind::InvalidArgument, "tensor and metric dimensions differ");
    return llt.solve(W);
}

double sigma1_mixed(const Matrix& mixed) { return mixed.trace(); }

double sigma2_mixed(const Matrix& mixed) {
    const double tr = mixed.trace();
    return 0.5 * (tr * tr - (mixed * mixed).trace());
}

double sigma2_from_trace(const Matrix& W, const Matrix& g) {
    require_symmetric(W, "W");
    return sigma2_mixed(raise_index(W, g));
}

Spectrum symmetric_eigenvalues(const Matrix& S) {
    require_symmetric(S, "matrix");
    const Eigen::Index n = S.rows();
    Matrix a = 0.5 * (S + S.transpose());
    const double norm = a.norm();
    constexpr int max_sweeps = 100;
    auto off_norm = [&] {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };
    int sweep = 0;
    while (off_norm() > std::numeric_limits<double>::epsilon() * norm) {
        if (++sweep > max_sweeps)
            throw Error(ErrorKind::NumericFailure, "Jacobi iteration did not converge for " + dump(S));
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                a(p, q) = a(q, p) = 0.0;
            }
        }
    }
    std::vector<double> values(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = a(i, i);
    return make_spectrum(std::move(values));
}

Spectrum spectrum(const Matrix& W, const Matrix& g) {
    require_symmetric(W, "W");
    auto llt = checked_cholesky(g);
    if (W.rows() != g.rows())
        throw Error(ErrorKind::InvalidArgument, "tensor and metric dimensions differ");
    const Matrix L = llt.matrixL();
    // C = L^{-1} W L^{-T} is congruent-similar to g^{-1} W.
    Matrix tmp = L.triangularView<Eigen::Lower>().solve(W);
    Matrix c = L.triangularView<Eigen::Lower>().solve(tmp.transpose());
    c = 0.5 * (c + c.transpose());
    return symmetric_eigenvalues(c);
}

ConeDiagnostic cone_membership(const Spectrum& lambda, int k) {
    ConeDiagnostic d;
    d.k = k;
    d.margin = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= k; ++j) {
        const double s = elementary_symmetric(lambda, j);
        d.sigmas.push_back(s);
        d.margin = std::min(d.margin, s);
    }
    d.member = d.margin > 0.0;
    return d;
}

Matrix sigma2_gradient(const Matrix& mixed) {
    if (mixed.rows() != mixed.cols())
        throw Error(ErrorKind::InvalidArgument, "mixed matrix must be square");
    return mixed.trace() * Matrix::Identity(mixed.rows(), mixed.cols()) - mixed;
}

Matrix ptilde(const Matrix& F, double t, int n) {
    if (n < 3) throw Error(ErrorKind::InvalidArgument, "ptilde requires n >= 3");
    if (F.rows() != n || F.cols() != n)
        throw Error(ErrorKind::InvalidArgument, "ptilde: matrix size does not match n");
    return F + (1.0 - t) / (n - 2) * F.trace() * Matrix::Identity(n, n);
}

double maclaurin_margin(const Spectrum& lambda) {
    const double m = static_cast<double>(lambda.size());
    const double s1 = elementary_symmetric(lambda, 1);
    const double s2 = lambda.size() >= 2 ? elementary_symmetric(lambda, 2) : 0.0;
    return (m - 1.0) * s1 * s1 / (2.0 * m) - s2;
}

double sqrt_sigma2(double sigma2_value) {
    if (!(sigma2_value > 0.0))
        throw ConeExitError("sigma_2^{1/2} requested at sigma_2 = " + std::to_string(sigma2_value),
                            {});
    return std::sqrt(sigma2_value);
}

}  // namespace sigma2
