#pragma once

// Sparse linear solves with dense borders:
//
//   [ J    C ] [x]   [r]
//   [ R^T  D ] [y] = [s]
//
// Border columns/rows carry the rank-one volume term, gauge constraints and
// scalar unknowns (multipliers).

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace sigma2 {

enum class LinearMethod { Auto, Direct, Iterative };

[[nodiscard]] const char* to_string(LinearMethod m) noexcept;
[[nodiscard]] LinearMethod linear_method_from_string(const std::string& name);

struct LinearOptions {
    LinearMethod method = LinearMethod::Auto;
    double tolerance = 1e-13;  // relative residual for the Krylov solve
    int max_iterations = 2000;
    double ilut_drop = 1e-4;
    int ilut_fill = 20;
    /// Auto picks the direct solver at or below this many unknowns.
    long direct_limit = 8000;
};

struct BorderedSystem {
    Eigen::SparseMatrix<double> J;
    std::vector<std::vector<double>> columns;  // each of size N
    std::vector<std::vector<double>> rows;     // each of size N
    Eigen::MatrixXd corner;                    // k x k
    std::vector<double> rhs;                   // size N
    std::vector<double> border_rhs;            // size k
};

struct LinearSolution {
    std::vector<double> x;
    std::vector<double> y;
    int iterations = 0;
    double relative_residual = 0.0;
    LinearMethod used = LinearMethod::Direct;
};

/// Throws Error(NumericFailure) when the factorization or Krylov solve fails.
[[nodiscard]] LinearSolution solve_bordered(const BorderedSystem& sys, const LinearOptions& opt);

}  // namespace sigma2
