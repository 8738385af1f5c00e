#include <doctest.h>

#include <cmath>

#include "cforms/geometry.hpp"

using namespace cforms;

namespace {
ManifoldPtr torus(int n, int N) {
    return std::make_shared<GridManifold>(n, std::vector<int>(n, N));
}
}  // namespace

TEST_CASE("integrate constants and trigonometric fields") {
    auto m = torus(2, 16);
    std::vector<double> one(m->num_points(), 1.0);
    CHECK(m->integrate(one) == doctest::Approx(4 * M_PI * M_PI).epsilon(1e-12));

    std::vector<double> s(m->num_points());
    for (long long p = 0; p < m->num_points(); ++p) s[p] = std::sin(m->coordinate(p, 0));
    CHECK(std::abs(m->integrate(s)) < 1e-12);

    auto line = torus(1, 64);
    std::vector<double> s2(line->num_points());
    for (long long p = 0; p < line->num_points(); ++p) {
        double v = std::sin(line->coordinate(p, 0));
        s2[p] = v * v;
    }
    CHECK(line->integrate(s2) == doctest::Approx(M_PI).epsilon(1e-10));
}

TEST_CASE("integrate rejects non-finite values with the point index") {
    auto m = torus(1, 8);
    std::vector<double> f(m->num_points(), 0.0);
    f[5] = std::nan("");
    CHECK_THROWS_WITH_AS(m->integrate(f), doctest::Contains("5"), std::invalid_argument);
}

TEST_CASE("central differences: constants, sine, wrong axis") {
    auto m = torus(2, 64);
    const long long np = m->num_points();
    std::vector<double> c(np, 3.5);
    for (double v : m->partial_derivative(c, 0)) CHECK(v == 0.0);

    std::vector<double> f(np);
    for (long long p = 0; p < np; ++p) f[p] = std::sin(m->coordinate(p, 0));
    auto d0 = m->partial_derivative(f, 0);
    double worst = 0;
    for (long long p = 0; p < np; ++p)
        worst = std::max(worst, std::abs(d0[p] - std::cos(m->coordinate(p, 0))));
    CHECK(worst < 3.3e-3);

    for (double v : m->partial_derivative(f, 1)) CHECK(v == 0.0);
    CHECK_THROWS(m->partial_derivative(f, 2));
}

TEST_CASE("summation by parts: integral of a derivative vanishes exactly") {
    auto m = torus(2, 12);
    std::vector<double> f(m->num_points());
    for (long long p = 0; p < m->num_points(); ++p)
        f[p] = std::exp(std::sin(m->coordinate(p, 0)) + std::cos(m->coordinate(p, 1)));
    CHECK(std::abs(m->integrate(m->partial_derivative(f, 0))) < 1e-12);
    CHECK(std::abs(m->integrate(m->partial_derivative(f, 1))) < 1e-12);
}

TEST_CASE("derivative converges at second order") {
    double errs[2];
    int idx = 0;
    for (int N : {32, 64}) {
        auto m = torus(1, N);
        std::vector<double> f(m->num_points());
        for (long long p = 0; p < m->num_points(); ++p)
            f[p] = std::sin(2 * m->coordinate(p, 0));
        auto d = m->partial_derivative(f, 0);
        double worst = 0;
        for (long long p = 0; p < m->num_points(); ++p)
            worst = std::max(worst, std::abs(d[p] - 2 * std::cos(2 * m->coordinate(p, 0))));
        errs[idx++] = worst;
    }
    CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("metric must be symmetric positive definite") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 0, 0, -1;
    CHECK_THROWS(GridManifold(2, {8, 8}, {}, bad));
    Eigen::MatrixXd asym(2, 2);
    asym << 1, 0.5, 0.0, 1;
    CHECK_THROWS(GridManifold(2, {8, 8}, {}, asym));
}

TEST_CASE("cell volume scales with the metric determinant") {
    Eigen::MatrixXd g(2, 2);
    g << 4, 0, 0, 1;
    GridManifold m(2, {8, 8}, {}, g);
    CHECK(m.volume_density() == doctest::Approx(2.0));
    std::vector<double> one(m.num_points(), 1.0);
    CHECK(m.integrate(one) == doctest::Approx(2 * 4 * M_PI * M_PI));
}
