#pragma once

// Tensor-product coordinate charts and their finite-difference stencils.
//
// A chart is either a full grid (one axis per manifold coordinate) or a
// radial reduction: a single axis rho in [0, rho_1] whose left end is a
// regular center and whose remaining n-1 coordinates are normal coordinates
// on the round S^{n-1} factor, evaluated at the point where their
// Christoffel symbols vanish. At the center the frame is Cartesian.

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace sigma2 {

enum class Symmetry { None, Radial };

struct Axis {
    int count = 0;
    double origin = 0.0;
    double spacing = 0.0;
    bool periodic = false;

    [[nodiscard]] double coord(int i) const { return origin + i * spacing; }
    [[nodiscard]] double length() const { return periodic ? count * spacing : (count - 1) * spacing; }
};

/// A chart end that represents the manifold boundary. side 0 = low end.
struct Face {
    int axis = 0;
    int side = 0;

    friend bool operator==(const Face&, const Face&) = default;
};

/// Fixed-capacity linear stencil: sum of weight * u[node].
struct Stencil {
    static constexpr int capacity = 16;
    std::array<std::pair<std::size_t, double>, capacity> terms{};
    int size = 0;

    void add(std::size_t node, double weight);
    [[nodiscard]] double apply(std::span<const double> field) const;
    [[nodiscard]] bool empty() const noexcept { return size == 0; }
};

class ChartGrid {
public:
    ChartGrid() = default;
    ChartGrid(int dim, std::vector<Axis> axes, std::vector<Face> boundary_faces, Symmetry symmetry);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] const std::vector<Axis>& axes() const noexcept { return axes_; }
    [[nodiscard]] const std::vector<Face>& boundary_faces() const noexcept { return faces_; }
    [[nodiscard]] Symmetry symmetry() const noexcept { return symmetry_; }
    [[nodiscard]] bool radial() const noexcept { return symmetry_ == Symmetry::Radial; }
    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_; }

    /// Axis 0 varies fastest.
    [[nodiscard]] std::array<int, 3> multi_index(std::size_t node) const;
    [[nodiscard]] std::size_t index(std::span<const int> idx) const;
    [[nodiscard]] double coordinate(std::size_t node, int axis) const;

    [[nodiscard]] std::optional<Face> face_of(std::size_t node) const;
    [[nodiscard]] bool on_boundary(std::size_t node) const { return face_of(node).has_value(); }
    [[nodiscard]] bool is_center(std::size_t node) const { return radial() && node == 0; }
    [[nodiscard]] const std::vector<std::size_t>& boundary_nodes() const noexcept { return boundary_nodes_; }

    /// Product quadrature weights of the coordinate box (no metric factor):
    /// trapezoid on non-periodic axes, rectangle on periodic axes.
    [[nodiscard]] double coordinate_weight(std::size_t node) const;

    /// First partial d/dx^i u at a node, i over metric coordinate indices.
    /// Central in the interior, second-order one-sided at non-periodic ends.
    [[nodiscard]] Stencil grad_stencil(std::size_t node, int i) const;
    /// Second partial d^2 u / dx^i dx^j.
    [[nodiscard]] Stencil hess_stencil(std::size_t node, int i, int j) const;

    [[nodiscard]] Eigen::VectorXd gradient(std::span<const double> field, std::size_t node) const;
    [[nodiscard]] Eigen::MatrixXd partials(std::span<const double> field, std::size_t node) const;

private:
    [[nodiscard]] Stencil first_1d(std::size_t node, int axis) const;
    [[nodiscard]] Stencil second_1d(std::size_t node, int axis) const;
    [[nodiscard]] std::size_t shift(std::size_t node, int axis, int offset) const;

    int dim_ = 0;
    std::vector<Axis> axes_;
    std::vector<Face> faces_;
    Symmetry symmetry_ = Symmetry::None;
    std::size_t nodes_ = 0;
    std::array<std::size_t, 3> strides_{};
    std::vector<std::size_t> boundary_nodes_;
};

}  // namespace sigma2
