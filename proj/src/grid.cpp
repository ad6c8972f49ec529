#include "sigma2/grid.hpp"

#include "sigma2/errors.hpp"

#include <algorithm>
#include <string>

namespace sigma2 {

void Stencil::add(std::size_t node, double weight) {
    for (int k = 0; k < size; ++k) {
        if (terms[k].first == node) {
            terms[k].second += weight;
            return;
        }
    }
    if (size == capacity) throw Error(ErrorKind::NumericFailure, "stencil capacity exceeded");
    terms[size++] = {node, weight};
}

double Stencil::apply(std::span<const double> field) const {
    double s = 0.0;
    for (int k = 0; k < size; ++k) s += terms[k].second * field[terms[k].first];
    return s;
}

ChartGrid::ChartGrid(int dim, std::vector<Axis> axes, std::vector<Face> boundary_faces,
                     Symmetry symmetry)
    : dim_(dim), axes_(std::move(axes)), faces_(std::move(boundary_faces)), symmetry_(symmetry) {
    if (dim_ < 2) throw Error(ErrorKind::InvalidArgument, "chart dimension must be >= 2");
    if (radial()) {
        if (axes_.size() != 1)
            throw Error(ErrorKind::InvalidArgument, "radial chart takes exactly one axis");
        if (axes_[0].periodic || axes_[0].origin != 0.0)
            throw Error(ErrorKind::InvalidArgument, "radial axis must start at the center 0");
        for (const auto& f : faces_)
            if (f.axis != 0 || f.side != 1)
                throw Error(ErrorKind::InvalidArgument, "radial center cannot be a boundary face");
    } else {
        if (static_cast<int>(axes_.size()) != dim_ || axes_.size() > 3)
            throw Error(ErrorKind::InvalidArgument, "full charts need one axis per dimension (n <= 3)");
    }
    for (const auto& a : axes_) {
        if (a.count < 4) throw Error(ErrorKind::InvalidArgument, "node count must be >= 4 per axis");
        if (!(a.spacing > 0.0)) throw Error(ErrorKind::InvalidArgument, "axis spacing must be positive");
    }
    for (const auto& f : faces_) {
        if (f.axis < 0 || f.axis >= static_cast<int>(axes_.size()) || f.side < 0 || f.side > 1)
            throw Error(ErrorKind::InvalidArgument, "boundary face out of range");
        if (axes_[f.axis].periodic)
            throw Error(ErrorKind::InvalidArgument, "periodic axis cannot carry a boundary face");
    }
    // Every non-periodic end (except a radial center) must be a boundary face.
    for (int a = 0; a < static_cast<int>(axes_.size()); ++a) {
        if (axes_[a].periodic) continue;
        for (int side = 0; side < 2; ++side) {
            if (radial() && side == 0) continue;
            if (std::find(faces_.begin(), faces_.end(), Face{a, side}) == faces_.end())
                throw Error(ErrorKind::InvalidArgument,
                            "non-periodic end of axis " + std::to_string(a) + " is not a boundary face");
        }
    }
    nodes_ = 1;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        strides_[a] = nodes_;
        nodes_ *= static_cast<std::size_t>(axes_[a].count);
    }
    for (std::size_t n = 0; n < nodes_; ++n)
        if (face_of(n)) boundary_nodes_.push_back(n);
}

std::array<int, 3> ChartGrid::multi_index(std::size_t node) const {
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        idx[a] = static_cast<int>(node % static_cast<std::size_t>(axes_[a].count));
        node /= static_cast<std::size_t>(axes_[a].count);
    }
    return idx;
}

std::size_t ChartGrid::index(std::span<const int> idx) const {
    std::size_t node = 0;
    for (std::size_t a = 0; a < axes_.size(); ++a) node += static_cast<std::size_t>(idx[a]) * strides_[a];
    return node;
}

double ChartGrid::coordinate(std::size_t node, int axis) const {
    return axes_[axis].coord(multi_index(node)[axis]);
}

std::optional<Face> ChartGrid::face_of(std::size_t node) const {
    const auto idx = multi_index(node);
    for (const auto& f : faces_) {
        const int end = f.side == 0 ? 0 : axes_[f.axis].count - 1;
        if (idx[f.axis] == end) return f;
    }
    return std::nullopt;
}

double ChartGrid::coordinate_weight(std::size_t node) const {
    const auto idx = multi_index(node);
    double w = 1.0;
    for (std::size_t a = 0; a < axes_.size(); ++a) {
        const auto& ax = axes_[a];
        double wa = ax.spacing;
        if (!ax.periodic && (idx[a] == 0 || idx[a] == ax.count - 1)) wa *= 0.5;
        w *= wa;
    }
    return w;
}

std::size_t ChartGrid::shift(std::size_t node, int axis, int offset) const {
    const auto& ax = axes_[axis];
    const int i = multi_index(node)[axis];
    int j = i + offset;
    if (ax.periodic) j = ((j % ax.count) + ax.count) % ax.count;
    return node + strides_[axis] * static_cast<std::size_t>(j) - strides_[axis] * static_cast<std::size_t>(i);
}

Stencil ChartGrid::first_1d(std::size_t node, int axis) const {
    const auto& ax = axes_[axis];
    const int i = multi_index(node)[axis];
    const double h = ax.spacing;
    Stencil s;
    if (ax.periodic || (i > 0 && i < ax.count - 1)) {
        s.add(shift(node, axis, -1), -0.5 / h);
        s.add(shift(node, axis, +1), 0.5 / h);
    } else if (i == 0) {
        s.add(node, -1.5 / h);
        s.add(shift(node, axis, 1), 2.0 / h);
        s.add(shift(node, axis, 2), -0.5 / h);
    } else {
        s.add(node, 1.5 / h);
        s.add(shift(node, axis, -1), -2.0 / h);
        s.add(shift(node, axis, -2), 0.5 / h);
    }
    return s;
}

Stencil ChartGrid::second_1d(std::size_t node, int axis) const {
    const auto& ax = axes_[axis];
    const int i = multi_index(node)[axis];
    const double h2 = ax.spacing * ax.spacing;
    Stencil s;
    if (ax.periodic || (i > 0 && i < ax.count - 1)) {
        s.add(shift(node, axis, -1), 1.0 / h2);
        s.add(node, -2.0 / h2);
        s.add(shift(node, axis, 1), 1.0 / h2);
    } else {
        const int dir = i == 0 ? 1 : -1;
        s.add(node, 2.0 / h2);
        s.add(shift(node, axis, dir), -5.0 / h2);
        s.add(shift(node, axis, 2 * dir), 4.0 / h2);
        s.add(shift(node, axis, 3 * dir), -1.0 / h2);
    }
    return s;
}

Stencil ChartGrid::grad_stencil(std::size_t node, int i) const {
    if (radial()) {
        // Tangential derivatives of radial fields vanish; at the center the
        // gradient vanishes by reflection symmetry.
        if (i != 0 || node == 0) return {};
        return first_1d(node, 0);
    }
    return first_1d(node, i);
}

Stencil ChartGrid::hess_stencil(std::size_t node, int i, int j) const {
    if (radial()) {
        if (node == 0) {
            if (i != j) return {};
            // Ghost reflection u(-h) = u(h): u''(0) = 2 (u_1 - u_0) / h^2.
            const double h2 = axes_[0].spacing * axes_[0].spacing;
            Stencil s;
            s.add(0, -2.0 / h2);
            s.add(1, 2.0 / h2);
            return s;
        }
        if (i != 0 || j != 0) return {};
        return second_1d(node, 0);
    }
    if (i == j) return second_1d(node, i);
    Stencil s;
    const Stencil outer = first_1d(node, i);
    for (int k = 0; k < outer.size; ++k) {
        const Stencil inner = first_1d(outer.terms[k].first, j);
        for (int m = 0; m < inner.size; ++m)
            s.add(inner.terms[m].first, outer.terms[k].second * inner.terms[m].second);
    }
    return s;
}

Eigen::VectorXd ChartGrid::gradient(std::span<const double> field, std::size_t node) const {
    Eigen::VectorXd g(dim_);
    for (int i = 0; i < dim_; ++i) g(i) = grad_stencil(node, i).apply(field);
    return g;
}

Eigen::MatrixXd ChartGrid::partials(std::span<const double> field, std::size_t node) const {
    Eigen::MatrixXd h(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j) h(i, j) = h(j, i) = hess_stencil(node, i, j).apply(field);
    return h;
}

}  // namespace sigma2
