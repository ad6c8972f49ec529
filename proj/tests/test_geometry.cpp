#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sigma2/errors.hpp"
#include "sigma2/geometry.hpp"
#include "sigma2/grid.hpp"

#include <cmath>
#include <numbers>

using namespace sigma2;
using std::numbers::pi;

namespace {

ModelSpec cap(double radius, int dim = 3) {
    ModelSpec s;
    s.id = CatalogId::CapSpaceform;
    s.cap_radius = radius;
    s.dim = dim;
    return s;
}

ModelSpec band() {
    ModelSpec s;
    s.id = CatalogId::BandS3;
    return s;
}

double total(const std::vector<double>& w) {
    double s = 0.0;
    for (double x : w) s += x;
    return s;
}

}  // namespace

TEST_CASE("unit sphere volumes") {
    CHECK(unit_sphere_volume(1) == doctest::Approx(2 * pi));
    CHECK(unit_sphere_volume(2) == doctest::Approx(4 * pi));
    CHECK(unit_sphere_volume(3) == doctest::Approx(2 * pi * pi));
}

TEST_CASE("full grid stencils are exact on quadratics") {
    ChartGrid grid(3, {Axis{9, 0.0, 0.125, false}, Axis{8, 0.0, 0.25, true}, Axis{6, 0.0, 0.5, true}},
                   {Face{0, 0}, Face{0, 1}}, Symmetry::None);
    REQUIRE(grid.node_count() == 9u * 8u * 6u);
    CHECK(grid.boundary_nodes().size() == 2u * 8u * 6u);
    std::vector<double> u(grid.node_count());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double x = grid.coordinate(i, 0);
        u[i] = 1.0 + 2.0 * x - 3.0 * x * x;
    }
    for (std::size_t node : {std::size_t{0}, std::size_t{4}, std::size_t{8}, std::size_t{100}}) {
        const double x = grid.coordinate(node, 0);
        const Eigen::VectorXd d = grid.gradient(u, node);
        CHECK(d(0) == doctest::Approx(2.0 - 6.0 * x).epsilon(1e-12));
        CHECK(std::abs(d(1)) < 1e-12);
        const Eigen::MatrixXd H = grid.partials(u, node);
        CHECK(H(0, 0) == doctest::Approx(-6.0).epsilon(1e-10));
        CHECK(std::abs(H(0, 1)) < 1e-12);
    }
    // coordinate box [0, 1] x [0, 2) x [0, 3)
    double vol = 0.0;
    for (std::size_t i = 0; i < grid.node_count(); ++i) vol += grid.coordinate_weight(i);
    CHECK(vol == doctest::Approx(6.0));
}

TEST_CASE("periodic axes differentiate trigonometric data to second order") {
    const int m = 32;
    ChartGrid grid(3, {Axis{5, 0.0, 0.25, false}, Axis{m, 0.0, 2 * pi / m, true}, Axis{4, 0.0, 0.5, true}},
                   {Face{0, 0}, Face{0, 1}}, Symmetry::None);
    std::vector<double> u(grid.node_count());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(grid.coordinate(i, 1));
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        err = std::max(err, std::abs(grid.gradient(u, i)(1) - std::cos(grid.coordinate(i, 1))));
    const double h = 2 * pi / m;
    CHECK(err < h * h / 6 * 1.01);
    CHECK(err > h * h / 6 * 0.9);
}

TEST_CASE("hemisphere quadrature volume") {
    auto [grid, metric] = build_model(cap(pi / 2), {513});
    CHECK(std::abs(total(metric.volume_weights) - pi * pi) < 1e-6);
}

TEST_CASE("cap of radius pi/3: volume, boundary mean curvature and distance") {
    const double r1 = pi / 3;
    const Model m = make_model(cap(r1), {257});
    // |S^2| int_0^r1 sin^2 = 4 pi (r1/2 - sin(2 r1)/4); trapezoid error O(h^2) at the rim
    CHECK(total(m.metric.volume_weights) == doctest::Approx(4 * pi * (r1 / 2 - std::sin(2 * r1) / 4)).epsilon(1e-4));
    REQUIRE(m.boundary.nodes.size() == 1);
    CHECK(m.boundary.nodes[0].h == doctest::Approx(1.0 / std::tan(r1)).epsilon(1e-12));
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK(m.distance.d[i] == doctest::Approx(r1 - m.grid.coordinate(i, 0)).epsilon(1e-12));
}

TEST_CASE("hemisphere boundary is totally geodesic") {
    const Model m = make_model(cap(pi / 2), {65});
    for (const auto& b : m.boundary.nodes) {
        CHECK(std::abs(b.h) < 1e-14);
        CHECK(b.L.cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("round caps are Einstein with Ric = (n-1) g") {
    for (int n : {3, 4}) {
        const ModelSpec s = cap(1.2, n);
        auto [grid, metric] = build_model(s, {129});
        const CurvaturePack ex = curvature_exact(s, grid);
        const CurvaturePack fd = curvature_fd(metric, grid);
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            CHECK((ex.ricci[i] - (n - 1) * metric.g[i]).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(ex.scalar[i] == doctest::Approx(n * (n - 1.0)));
            CHECK((fd.ricci[i] - (n - 1) * metric.g[i]).cwiseAbs().maxCoeff() < 1e-3);
        }
    }
}

TEST_CASE("band in S^3: Ricci and boundary mean curvatures") {
    const ModelSpec s = band();
    const Model m = make_model(s, {33, 8, 8});
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((m.curvature.ricci[i] - 2.0 * m.metric.g[i]).cwiseAbs().maxCoeff() < 1e-12);
    const auto fd = curvature_fd(m.metric, m.grid);
    for (std::size_t i = 0; i < m.size(); ++i)
        CHECK((fd.ricci[i] - 2.0 * m.metric.g[i]).cwiseAbs().maxCoeff() < 5e-3);
    const double r0 = s.band_r0, r1 = s.band_r1;
    for (const auto& b : m.boundary.nodes) {
        // Inward normal: +d_r at r0, -d_r at r1. The two torus directions have
        // principal curvatures tan r and -cot r (times the normal sign).
        const double expect = b.face.side == 0 ? 0.5 * (std::tan(r0) - 1.0 / std::tan(r0))
                                               : 0.5 * (1.0 / std::tan(r1) - std::tan(r1));
        CHECK(b.h == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("flat slab has zero curvature and totally geodesic faces") {
    ModelSpec s;
    s.id = CatalogId::WarpedSlab;
    const Model m = make_model(s, {9, 6, 6});
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m.curvature.ricci[i].cwiseAbs().maxCoeff() < 1e-14);
    for (const auto& b : m.boundary.nodes) CHECK(std::abs(b.h) < 1e-14);
}

TEST_CASE("zero-amplitude perturbation reproduces the base metric") {
    ModelSpec p;
    p.id = CatalogId::Perturbed;
    p.base = CatalogId::CapSpaceform;
    p.cap_radius = 1.0;
    p.amplitude = 0.0;
    auto [g1, m1] = build_model(p, {33});
    auto [g2, m2] = build_model(cap(1.0), {33});
    for (std::size_t i = 0; i < m1.size(); ++i) CHECK((m1.g[i] - m2.g[i]).norm() == 0.0);
    CHECK_FALSE(m1.catalog.has_value());
    CHECK(m2.catalog.has_value());
}

TEST_CASE("perturbed metrics are seed-deterministic") {
    ModelSpec p;
    p.id = CatalogId::Perturbed;
    p.base = CatalogId::BandS3;
    p.amplitude = 0.1;
    p.seed = 7;
    auto [ga, a] = build_model(p, {9, 6, 6});
    auto [gb, b] = build_model(p, {9, 6, 6});
    p.seed = 8;
    auto [gc, c] = build_model(p, {9, 6, 6});
    double same = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same = std::max(same, (a.g[i] - b.g[i]).cwiseAbs().maxCoeff());
        diff = std::max(diff, (a.g[i] - c.g[i]).cwiseAbs().maxCoeff());
    }
    CHECK(same == 0.0);
    CHECK(diff > 0.0);
}

TEST_CASE("invalid model parameters are rejected") {
    CHECK_THROWS_AS((void)build_model(cap(2.0), {33}), Error);
    ModelSpec b = band();
    b.band_r0 = 1.2;
    CHECK_THROWS_AS((void)build_model(b, {9, 6, 6}), Error);
    CHECK_THROWS_AS((void)build_model(cap(1.0), {9, 6, 6}), Error);
    CHECK_THROWS_AS((void)build_model(band(), {9}), Error);
    ModelSpec p;
    p.id = CatalogId::Perturbed;
    p.amplitude = 0.5;
    CHECK_THROWS_AS((void)build_model(p, {33}), Error);
    CHECK_THROWS_AS((void)catalog_from_string("torus"), Error);
}
