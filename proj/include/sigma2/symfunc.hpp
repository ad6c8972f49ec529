#pragma once

// Elementary symmetric functions of curvature-type spectra, Garding cone
// diagnostics and the first-derivative algebra of sigma_2.
//
// Conventions: a "symmetric" matrix W carries covariant indices W_ij; a
// "mixed" matrix carries W^i_j = g^{ik} W_kj. Spectra are the eigenvalues of
// g^{-1}W, i.e. the generalized eigenvalues of the pair (W, g).

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace sigma2 {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues sorted in descending order.
struct Spectrum {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double front() const { return values.front(); }
    [[nodiscard]] double back() const { return values.back(); }
};

/// Sorts descending and validates finiteness (invalid-argument otherwise).
[[nodiscard]] Spectrum make_spectrum(std::vector<double> values);

struct ConeDiagnostic {
    int k = 0;
    std::vector<double> sigmas;  // sigma_1 .. sigma_k
    bool member = false;
    double margin = 0.0;         // min_j sigma_j, signed
};

/// sigma_k(lambda) by the product recurrence; exact on integers in range.
[[nodiscard]] double elementary_symmetric(std::span<const double> lambda, int k);
[[nodiscard]] double elementary_symmetric(const Spectrum& lambda, int k);

/// 1/2 ((tr_g W)^2 - |W|_g^2).
[[nodiscard]] double sigma2_from_trace(const Matrix& W, const Matrix& g);

/// Generalized eigenvalues of (W, g) via Cholesky reduction and cyclic Jacobi.
[[nodiscard]] Spectrum spectrum(const Matrix& W, const Matrix& g);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
[[nodiscard]] Spectrum symmetric_eigenvalues(const Matrix& S);

[[nodiscard]] ConeDiagnostic cone_membership(const Spectrum& lambda, int k);

/// F^i_j = sigma_1(W) delta^i_j - W^i_j for a mixed matrix W.
[[nodiscard]] Matrix sigma2_gradient(const Matrix& mixed);

/// P^i_j = F^i_j + (1-t)/(n-2) (sum_k F^k_k) delta^i_j; requires n >= 3.
[[nodiscard]] Matrix ptilde(const Matrix& F, double t, int n);

/// (m-1) sigma_1^2 / (2m) - sigma_2 over the m entries of lambda.
[[nodiscard]] double maclaurin_margin(const Spectrum& lambda);

[[nodiscard]] double sigma1_mixed(const Matrix& mixed);
[[nodiscard]] double sigma2_mixed(const Matrix& mixed);

/// g^{-1} W, checked for SPD g.
[[nodiscard]] Matrix raise_index(const Matrix& W, const Matrix& g);

/// sigma_2^{1/2}; only defined for sigma_2 > 0 (cone-exit otherwise).
[[nodiscard]] double sqrt_sigma2(double sigma2_value);

/// Symmetry check: |W_ij - W_ji| <= tol * (1 + max|W|); invalid-argument otherwise.
void require_symmetric(const Matrix& W, const char* what, double tol = 1e-12);

}  // namespace sigma2
