#include "sigma2/linear.hpp"

#include "sigma2/errors.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>

namespace sigma2 {

const char* to_string(LinearMethod m) noexcept {
    switch (m) {
    case LinearMethod::Auto: return "auto";
    case LinearMethod::Direct: return "direct";
    case LinearMethod::Iterative: return "iterative";
    }
    return "?";
}

LinearMethod linear_method_from_string(const std::string& name) {
    if (name == "auto") return LinearMethod::Auto;
    if (name == "direct") return LinearMethod::Direct;
    if (name == "iterative") return LinearMethod::Iterative;
    throw Error(ErrorKind::InvalidArgument, "unknown linear method '" + name + "'");
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;

SpMat augment(const BorderedSystem& sys) {
    const auto n = sys.J.rows();
    const auto k = static_cast<Eigen::Index>(sys.columns.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(sys.J.nonZeros() + 2 * n * k + k * k));
    for (Eigen::Index c = 0; c < sys.J.outerSize(); ++c)
        for (SpMat::InnerIterator it(sys.J, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (Eigen::Index b = 0; b < k; ++b) {
        const auto& col = sys.columns[static_cast<std::size_t>(b)];
        const auto& row = sys.rows[static_cast<std::size_t>(b)];
        for (Eigen::Index i = 0; i < n; ++i) {
            if (col[static_cast<std::size_t>(i)] != 0.0) trip.emplace_back(i, n + b, col[static_cast<std::size_t>(i)]);
            if (row[static_cast<std::size_t>(i)] != 0.0) trip.emplace_back(n + b, i, row[static_cast<std::size_t>(i)]);
        }
        for (Eigen::Index c = 0; c < k; ++c)
            if (sys.corner(b, c) != 0.0) trip.emplace_back(n + b, n + c, sys.corner(b, c));
    }
    SpMat A(n + k, n + k);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    return A;
}

}  // namespace

LinearSolution solve_bordered(const BorderedSystem& sys, const LinearOptions& opt) {
    const auto n = sys.J.rows();
    const auto k = static_cast<Eigen::Index>(sys.columns.size());
    if (sys.J.cols() != n || static_cast<Eigen::Index>(sys.rhs.size()) != n ||
        static_cast<Eigen::Index>(sys.rows.size()) != k || static_cast<Eigen::Index>(sys.border_rhs.size()) != k ||
        (k > 0 && (sys.corner.rows() != k || sys.corner.cols() != k)))
        throw Error(ErrorKind::InvalidArgument, "inconsistent bordered system");

    const SpMat A = augment(sys);
    Eigen::VectorXd b(n + k);
    for (Eigen::Index i = 0; i < n; ++i) b(i) = sys.rhs[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < k; ++i) b(n + i) = sys.border_rhs[static_cast<std::size_t>(i)];

    LinearMethod method = opt.method;
    if (method == LinearMethod::Auto) method = n + k <= opt.direct_limit ? LinearMethod::Direct : LinearMethod::Iterative;

    LinearSolution out;
    out.used = method;
    Eigen::VectorXd x;
    if (method == LinearMethod::Direct) {
        Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success)
            throw Error(ErrorKind::NumericFailure, "sparse LU factorization failed: " + lu.lastErrorMessage());
        x = lu.solve(b);
        out.iterations = 1;
    } else {
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> solver;
        solver.preconditioner().setDroptol(opt.ilut_drop);
        solver.preconditioner().setFillfactor(opt.ilut_fill);
        solver.setTolerance(opt.tolerance);
        solver.setMaxIterations(opt.max_iterations);
        solver.compute(A);
        if (solver.info() != Eigen::Success)
            throw Error(ErrorKind::NumericFailure, "incomplete LU preconditioner failed");
        x = solver.solve(b);
        out.iterations = static_cast<int>(solver.iterations());
        if (solver.info() != Eigen::Success || !x.allFinite())
            throw Error(ErrorKind::NumericFailure,
                        "BiCGSTAB did not converge (" + std::to_string(solver.iterations()) + " iterations, error " +
                            std::to_string(solver.error()) + ")");
    }
    if (!x.allFinite()) throw Error(ErrorKind::NumericFailure, "linear solve produced non-finite values");
    const double bn = b.norm();
    out.relative_residual = (A * x - b).norm() / (bn > 0.0 ? bn : 1.0);
    out.x.assign(x.data(), x.data() + n);
    out.y.assign(x.data() + n, x.data() + n + k);
    return out;
}

}  // namespace sigma2
