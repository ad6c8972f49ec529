#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sigma2/errors.hpp"
#include "sigma2/solver.hpp"

#include <cmath>
#include <numbers>

using namespace sigma2;
using std::numbers::pi;

namespace {

Model cap_model(double radius, int nodes) {
    ModelSpec s;
    s.cap_radius = radius;
    return make_model(s, {nodes});
}

Field bump(const Model& m, double amp) {
    Field u(m.size());
    const double r1 = m.grid.axes()[0].length();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = amp * std::cos(pi * m.grid.coordinate(i, 0) / r1);
    return u;
}

double sup_abs(const Field& u, double shift = 0.0) {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::abs(x - shift));
    return m;
}

}  // namespace

TEST_CASE("bordered solves: direct and iterative agree with a dense reference") {
    const int n = 40;
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 4.0 + 0.1 * i);
        if (i > 0) trip.emplace_back(i, i - 1, -1.0);
        if (i + 1 < n) trip.emplace_back(i, i + 1, -1.3);
    }
    BorderedSystem sys;
    sys.J.resize(n, n);
    sys.J.setFromTriplets(trip.begin(), trip.end());
    sys.columns.push_back(std::vector<double>(n, 1.0));
    std::vector<double> row(n);
    for (int i = 0; i < n; ++i) row[static_cast<std::size_t>(i)] = 1.0 / n;
    sys.rows.push_back(row);
    sys.corner = Eigen::MatrixXd::Zero(1, 1);
    sys.rhs.resize(n);
    for (int i = 0; i < n; ++i) sys.rhs[static_cast<std::size_t>(i)] = std::sin(0.3 * i);
    sys.border_rhs = {0.25};

    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n + 1, n + 1);
    dense.topLeftCorner(n, n) = Eigen::MatrixXd(sys.J);
    Eigen::VectorXd b(n + 1);
    for (int i = 0; i < n; ++i) {
        dense(i, n) = 1.0;
        dense(n, i) = 1.0 / n;
        b(i) = sys.rhs[static_cast<std::size_t>(i)];
    }
    b(n) = 0.25;
    const Eigen::VectorXd ref = dense.fullPivLu().solve(b);

    for (LinearMethod method : {LinearMethod::Direct, LinearMethod::Iterative}) {
        LinearOptions opt;
        opt.method = method;
        const LinearSolution sol = solve_bordered(sys, opt);
        CHECK(sol.used == method);
        for (int i = 0; i < n; ++i) CHECK(sol.x[static_cast<std::size_t>(i)] == doctest::Approx(ref(i)).epsilon(1e-10));
        CHECK(sol.y[0] == doctest::Approx(ref(n)).epsilon(1e-10));
    }
    CHECK(linear_method_from_string("iterative") == LinearMethod::Iterative);
    CHECK_THROWS_AS((void)linear_method_from_string("cg"), Error);
}

TEST_CASE("Newton recovers the round hemisphere from a perturbation") {
    const Model m = cap_model(pi / 2, 129);
    ProblemSpec p;
    p.f = ConstantRhs{std::sqrt(3.0) / 2};
    NewtonConfig cfg;
    cfg.tolerance = 1e-10;
    const NewtonResult r = newton_solve(m, p, bump(m, 0.05), cfg);
    CHECK(r.gauge_fixed);
    CHECK(r.iterations <= 10);
    CHECK(r.residual <= 1e-10);
    CHECK(sup_abs(r.u) < 1e-8);
    REQUIRE(r.margins.size() == r.history.size());
    for (double margin : r.margins) CHECK(margin > 0.0);
    // quadratic convergence at the tail
    const auto& h = r.history;
    REQUIRE(h.size() >= 3);
    CHECK(h[h.size() - 2] < 1e-3 * h[h.size() - 3]);
}

TEST_CASE("Newton with sphere target has no gauge") {
    const Model m = cap_model(pi / 2, 129);
    ProblemSpec p;
    p.f = SphereTargetRhs{};
    NewtonConfig cfg;
    const NewtonResult r = newton_solve(m, p, bump(m, 0.02), cfg);
    CHECK_FALSE(r.gauge_fixed);
    CHECK(r.residual <= cfg.tolerance);
}

TEST_CASE("free-constant solve finds the constant") {
    const Model m = cap_model(pi / 2, 129);
    ProblemSpec p;
    p.f = ConstantRhs{1.2};
    NewtonConfig cfg;
    cfg.tolerance = 1e-11;
    const NewtonResult r = newton_solve_free_constant(m, p, bump(m, 0.03), cfg);
    CHECK(r.free_constant == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-9));
    CHECK(std::abs(mean_value(r.u, m.metric)) < 1e-12);
    CHECK(sup_abs(r.u) < 1e-8);

    p.f = SphereTargetRhs{};
    CHECK_THROWS_AS((void)newton_solve_free_constant(m, p, bump(m, 0.03), cfg), Error);
}

TEST_CASE("Newton failures are reported with their history") {
    const Model m = cap_model(pi / 3, 65);
    ProblemSpec p;
    p.f = ConstantRhs{1.5};
    Field c(m.size(), 0.0);
    for (const auto& b : m.boundary.nodes) c[b.node] = b.h;
    p.c = FieldBc{c};
    NewtonConfig cfg;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-14;
    try {
        (void)newton_solve(m, p, bump(m, 0.02), cfg);
        FAIL("expected non-convergence");
    } catch (const NewtonError& e) {
        CHECK(e.kind() == ErrorKind::NonConvergence);
        CHECK(e.history().size() == 2);
        CHECK(e.last_residual() == e.history().back());
    }
    cfg.max_iterations = 30;
    CHECK_THROWS_AS((void)newton_solve(m, p, Field(3, 0.0), cfg), Error);
    NewtonConfig bad;
    bad.backtrack = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("cone safeguard shortens steps that leave the cone") {
    const Model m = cap_model(pi / 2, 65);
    const TensorField A = modified_schouten(m.curvature, m.metric, 1.0);
    const ConformalState st = deform(A, Field(m.size(), 0.0), 1.0, m);
    Field dir(m.size());
    for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -2.0 * std::pow(m.grid.coordinate(i, 0), 2);
    NewtonConfig cfg;
    const SafeguardResult sg = cone_safeguard_step(m, A, st, dir, cfg);
    CHECK(sg.step < 1.0);
    CHECK(sg.reductions > 0);
    CHECK(sg.step == doctest::Approx(std::pow(cfg.backtrack, sg.reductions)));
    CHECK(sg.state.cone_margin >= cfg.margin_fraction * st.cone_margin);
    // a short enough direction is admissible at full length
    for (double& d : dir) d *= 1e-3;
    CHECK(cone_safeguard_step(m, A, st, dir, cfg).step == 1.0);
}

TEST_CASE("eigen path at eps = 1 gives the closed form ln(3/4)") {
    const Model m = cap_model(pi / 2, 129);
    NewtonConfig cfg;
    cfg.tolerance = 1e-10;
    const ContinuationResult r = eigen_continuation(m, 1.0, 1.0, cfg);
    CHECK(sup_abs(r.u, std::log(0.75)) < 1e-6);
    const auto acc = r.trace.accepted();
    REQUIRE_FALSE(acc.empty());
    CHECK(acc.front().parameter == 0.0);
    CHECK(acc.back().parameter == 1.0);
    for (std::size_t k = 1; k < acc.size(); ++k) CHECK(acc[k].parameter > acc[k - 1].parameter);
}

TEST_CASE("eigen limit on the hemisphere") {
    const Model m = cap_model(pi / 2, 129);
    NewtonConfig cfg;
    cfg.tolerance = 1e-10;
    EigenLimitConfig lc;
    lc.cauchy_tol = 1e-4;
    const EigenResult r = eigen_limit(m, 1.0, cfg, lc);
    CHECK(r.converged);
    CHECK(r.lambda == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(sup_abs(r.v) < 1e-6);
    CHECK(std::abs(r.mean_v) < 1e-10);
    REQUIRE(r.table.size() >= 2);
    for (const auto& row : r.table) CHECK(row.lambda == doctest::Approx(0.75).epsilon(1e-6));
    CHECK(default_eps_schedule().size() == 11);
}

TEST_CASE("eigen limit is deterministic") {
    const Model m = cap_model(pi / 3, 65);
    NewtonConfig cfg;
    EigenLimitConfig lc;
    lc.cauchy_tol = 1e-3;
    const EigenResult a = eigen_limit(m, 1.0, cfg, lc);
    const EigenResult b = eigen_limit(m, 1.0, cfg, lc);
    CHECK(a.lambda == b.lambda);
    REQUIRE(a.table.size() == b.table.size());
    for (std::size_t k = 0; k < a.table.size(); ++k) CHECK(a.table[k].lambda == b.table[k].lambda);
    CHECK(a.v == b.v);
    CHECK(a.lambda > 0.0);
}

TEST_CASE("eigen limit rejects backgrounds outside the cone") {
    ModelSpec s;
    s.id = CatalogId::WarpedSlab;  // flat: A = 0
    const Model m = make_model(s, {9, 6, 6});
    try {
        (void)eigen_limit(m, 1.0, NewtonConfig{});
        FAIL("expected invalid-model");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidModel);
    }
}

TEST_CASE("continuation failure carries the trace") {
    const Model m = cap_model(pi / 3, 65);
    NewtonConfig cfg;
    cfg.max_iterations = 1;
    cfg.tolerance = 1e-13;
    ContinuationConfig cc;
    cc.initial_step = 0.5;
    cc.min_step = 0.4;
    try {
        (void)eigen_continuation(m, 1.0, 0.5, cfg, cc);
        FAIL("expected continuation failure");
    } catch (const ContinuationError& e) {
        CHECK(e.kind() == ErrorKind::ContinuationFailure);
        CHECK_FALSE(e.trace().records.empty());
        bool rejected = false;
        for (const auto& r : e.trace().records) rejected = rejected || !r.accepted;
        CHECK(rejected);
    }
}

TEST_CASE("Yamabe path on the hemisphere") {
    const Model m = cap_model(pi / 2, 129);
    NewtonConfig cfg;
    const ContinuationResult r = yamabe3_path(m, cfg);
    const auto acc = r.trace.accepted();
    REQUIRE_FALSE(acc.empty());
    CHECK(acc.front().residual <= 1e-10);
    CHECK(acc.back().parameter == 1.0);
    CHECK(r.last.residual <= 1e-6);
    CHECK(sup_abs(r.u) < 1e-4);
    for (const auto& rec : acc) {
        CHECK(std::isfinite(rec.report.supervol));
        CHECK(rec.report.vol_conf > 0.0);
    }
    CHECK(acc.back().report.supervol == 0.0);
    CHECK_FALSE(r.trace.warnings.empty());
}

TEST_CASE("monitor on the round hemisphere") {
    const Model m = cap_model(pi / 2, 129);
    const ConformalState st = deform(modified_schouten(m.curvature, m.metric, 1.0), Field(m.size(), 0.0), 1.0, m);
    const MonitorReport r = monitor(st, m);
    CHECK(r.sup_grad == 0.0);
    CHECK(r.sup_hess == 0.0);
    CHECK(r.min_sigma2 == doctest::Approx(0.75));
    CHECK(r.min_sigma1 == doctest::Approx(1.5));
    CHECK(r.vol_conf == doctest::Approx(pi * pi).epsilon(1e-6));
    CHECK(r.cc_flag);
    CHECK(mean_value(Field(m.size(), 2.5), m.metric) == doctest::Approx(2.5));
}

TEST_CASE("perturbed hemispheres: Lambda moves continuously with the amplitude") {
    // Unperturbed value at t = 0.5: sigma_2 of (5/4) g, i.e. 3 (5/4)^2.
    const double round = 3.0 * 1.25 * 1.25;
    NewtonConfig cfg;
    cfg.tolerance = 1e-10;
    EigenLimitConfig lc;
    lc.cauchy_tol = 1e-4;
    std::vector<double> gaps;
    for (double amp : {0.0, 0.01, 0.02}) {
        ModelSpec s;
        s.id = CatalogId::Perturbed;
        s.base = CatalogId::CapSpaceform;
        s.amplitude = amp;
        s.seed = 1;
        const EigenResult r = eigen_limit(make_model(s, {129}), 0.5, cfg, lc);
        gaps.push_back(std::abs(r.lambda - round));
    }
    CHECK(gaps[0] < 1e-5);
    CHECK(gaps[1] > gaps[0]);
    CHECK(gaps[2] > gaps[1]);
    CHECK(gaps[2] < 0.2 * round);
}

TEST_CASE("Yamabe path on a perturbed hemisphere completes") {
    ModelSpec s;
    s.id = CatalogId::Perturbed;
    s.base = CatalogId::CapSpaceform;
    s.amplitude = 0.02;
    s.seed = 1;
    const ContinuationResult r = yamabe3_path(make_model(s, {129}), NewtonConfig{});
    const auto acc = r.trace.accepted();
    CHECK(acc.back().parameter == 1.0);
    for (const auto& rec : acc) {
        CHECK(std::isfinite(rec.report.supervol));
        CHECK(std::isfinite(rec.report.vol_conf));
    }
}
