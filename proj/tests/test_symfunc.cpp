#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sigma2/errors.hpp"
#include "sigma2/symfunc.hpp"

#include <cmath>
#include <vector>

using namespace sigma2;

TEST_CASE("elementary symmetric functions of small integer spectra") {
    const std::vector<double> l{1.0, 2.0, 3.0};
    CHECK(elementary_symmetric(l, 1) == 6.0);
    CHECK(elementary_symmetric(l, 2) == 11.0);
    CHECK(elementary_symmetric(l, 3) == 6.0);
    CHECK_THROWS_AS((void)elementary_symmetric(l, 0), Error);
    CHECK_THROWS_AS((void)elementary_symmetric(l, 4), Error);

    const std::vector<double> m{2.0, -1.0, 4.0, 0.5};
    // sigma_2 by explicit pair sum
    double s2 = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) s2 += m[i] * m[j];
    CHECK(elementary_symmetric(m, 2) == doctest::Approx(s2).epsilon(1e-15));
}

TEST_CASE("trace formula on a diagonal pair") {
    Matrix W = Matrix::Zero(3, 3);
    W.diagonal() << 2.0, 6.0, 12.0;
    Matrix g = Matrix::Zero(3, 3);
    g.diagonal() << 1.0, 2.0, 4.0;
    // g^{-1} W = diag(2, 3, 3): sigma_2 = 6 + 6 + 9
    CHECK(sigma2_from_trace(W, g) == doctest::Approx(21.0).epsilon(1e-14));
    const Spectrum s = spectrum(W, g);
    REQUIRE(s.size() == 3);
    CHECK(s.front() == doctest::Approx(3.0));
    CHECK(s.back() == doctest::Approx(2.0));
}

TEST_CASE("spectrum of a non-diagonal pair is descending and matches sigma_2") {
    Matrix g(3, 3);
    g << 2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0;
    Matrix W(3, 3);
    W << 1.0, 0.4, -0.5, 0.4, -2.0, 0.7, -0.5, 0.7, 3.0;
    const Spectrum s = spectrum(W, g);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s.values[i] >= s.values[i + 1]);
    CHECK(elementary_symmetric(s, 2) == doctest::Approx(sigma2_from_trace(W, g)).epsilon(1e-12));
    CHECK(elementary_symmetric(s, 1) == doctest::Approx((g.inverse() * W).trace()).epsilon(1e-12));
}

TEST_CASE("cone membership") {
    const auto in = cone_membership(make_spectrum({3.0, 1.0, -0.5}), 2);
    CHECK(in.member);
    CHECK(in.sigmas[0] == doctest::Approx(3.5));
    CHECK(in.sigmas[1] == doctest::Approx(3.0 - 1.5 - 0.5));
    CHECK(in.margin == doctest::Approx(1.0));

    const auto out = cone_membership(make_spectrum({1.0, -2.0, -2.0}), 2);
    CHECK_FALSE(out.member);
    CHECK(out.margin < 0.0);
}

TEST_CASE("make_spectrum rejects non-finite input and sorts") {
    CHECK_THROWS_AS((void)make_spectrum({1.0, NAN}), Error);
    const Spectrum s = make_spectrum({-1.0, 4.0, 2.0});
    CHECK(s.values == std::vector<double>{4.0, 2.0, -1.0});
}

TEST_CASE("gradient, P-tilde and the trace identity") {
    Matrix M(3, 3);
    M << 2.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 1.0;
    const Matrix F = sigma2_gradient(M);
    const Matrix expect = 6.0 * Matrix::Identity(3, 3) - M;
    CHECK((F - expect).norm() < 1e-15);
    CHECK(F.trace() == doctest::Approx(2.0 * M.trace()));

    // P = F + (1-t)/(n-2) trF I
    const Matrix P = ptilde(F, 0.5, 3);
    CHECK((P - (F + 0.5 * F.trace() * Matrix::Identity(3, 3))).norm() < 1e-14);
    CHECK((ptilde(F, 1.0, 3) - F).norm() == 0.0);
    CHECK_THROWS_AS((void)ptilde(Matrix::Identity(2, 2), 0.5, 2), Error);
}

TEST_CASE("MacLaurin margin vanishes on constant spectra") {
    CHECK(std::abs(maclaurin_margin(make_spectrum({2.0, 2.0, 2.0, 2.0}))) < 1e-14);
    CHECK(maclaurin_margin(make_spectrum({3.0, 0.0, 0.0})) == doctest::Approx(3.0));
}

TEST_CASE("sqrt_sigma2 and symmetry guard") {
    CHECK(sqrt_sigma2(0.75) == doctest::Approx(std::sqrt(0.75)));
    CHECK_THROWS_AS((void)sqrt_sigma2(-1e-3), ConeExitError);
    Matrix A = Matrix::Identity(3, 3);
    A(0, 1) = 1e-3;
    CHECK_THROWS_AS(require_symmetric(A, "A"), Error);
    A(1, 0) = 1e-3;
    CHECK_NOTHROW(require_symmetric(A, "A"));
}

TEST_CASE("raise_index rejects an indefinite metric") {
    Matrix g = Matrix::Identity(3, 3);
    g(2, 2) = -1.0;
    CHECK_THROWS_AS((void)raise_index(Matrix::Identity(3, 3), g), Error);
}
