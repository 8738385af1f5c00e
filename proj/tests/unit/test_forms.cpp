#include <doctest.h>

#include <cmath>
#include <random>

#include "cforms/forms.hpp"

using namespace cforms;

namespace {

ManifoldPtr torus(int n, int N) {
    return std::make_shared<GridManifold>(n, std::vector<int>(n, N));
}

BVForm random_form(const BundlePtr& b, int degree, std::mt19937_64& rng) {
    BVForm f(b, degree);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : f.coeff()) v = dist(rng);
    return f;
}

BilinearMap random_map(const BundlePtr& src, const BundlePtr& dst, std::mt19937_64& rng) {
    BilinearMap map;
    map.source = src;
    map.target = dst;
    map.tensor.resize(static_cast<std::size_t>(src->rank()) * src->rank() * dst->rank());
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : map.tensor) v = dist(rng);
    return map;
}

}  // namespace

TEST_CASE("projection and homogeneous decomposition") {
    auto m = torus(2, 4);
    auto b = std::make_shared<BundleSpec>(m, 2);
    std::mt19937_64 rng(7);
    BVForm p1 = random_form(b, 1, rng);
    MixedForm mix(p1);
    CHECK(l2_norm(mix.project(1, b) - p1) == 0.0);
    CHECK(mix.project(2, b).is_zero());

    BVForm p0 = random_form(b, 0, rng);
    mix.set(p0);
    MixedForm resum;
    for (int k = 0; k <= 2; ++k) resum.add(mix.project(k, b));
    CHECK(l2_norm(resum - mix) == 0.0);
}

TEST_CASE("wedge: degree-0 product and repeated-index annihilation") {
    auto m = torus(2, 4);
    auto b = std::make_shared<BundleSpec>(m, 1);
    std::mt19937_64 rng(3);
    BilinearMap map = random_map(b, b, rng);

    BVForm f = random_form(b, 0, rng), g = random_form(b, 0, rng);
    BVForm w = wedge_bilinear(f, g, map);
    for (long long p = 0; p < m->num_points(); ++p)
        CHECK(w.at(p, 0, 0) ==
              doctest::Approx(map.coeff(0, 0, 0) * f.at(p, 0, 0) * g.at(p, 0, 0)));

    BVForm dx1a(b, 1), dx1b(b, 1);
    for (long long p = 0; p < m->num_points(); ++p) {
        dx1a.at(p, 0, 0) = 1.3;
        dx1b.at(p, 0, 0) = -0.4;
    }
    CHECK(wedge_bilinear(dx1a, dx1b, map).is_zero(1e-15));
}

TEST_CASE("shuffle wedge equals permutation-sum reference") {
    auto m = torus(4, 4);
    auto b = std::make_shared<BundleSpec>(m, 2);
    std::mt19937_64 rng(11);
    BilinearMap map = random_map(b, b, rng);
    BVForm a = random_form(b, 1, rng);
    BVForm c = random_form(b, 2, rng);
    BVForm fast = wedge_bilinear(a, c, map);
    BVForm slow = wedge_bilinear_reference(a, c, map);
    CHECK(l2_norm(fast - slow) < 1e-12);
}

TEST_CASE("wedge bilinearity") {
    auto m = torus(3, 4);
    auto b = std::make_shared<BundleSpec>(m, 2);
    std::mt19937_64 rng(5);
    BilinearMap map = random_map(b, b, rng);
    BVForm a1 = random_form(b, 1, rng), a2 = random_form(b, 1, rng), c = random_form(b, 1, rng);
    BVForm lhs = wedge_bilinear(a1 + a2 * 2.5, c, map);
    BVForm rhs = wedge_bilinear(a1, c, map) + wedge_bilinear(a2, c, map) * 2.5;
    CHECK(l2_norm(lhs - rhs) < 1e-13);
}

TEST_CASE("degree overflow yields the zero form, not an error") {
    auto m = torus(2, 4);
    auto b = std::make_shared<BundleSpec>(m, 1);
    std::mt19937_64 rng(9);
    BilinearMap map = random_map(b, b, rng);
    BVForm a = random_form(b, 1, rng), c = random_form(b, 2, rng);
    CHECK(wedge_bilinear(a, c, map).empty());
}

TEST_CASE("insertion action: degree bookkeeping and s < j annihilation") {
    auto m = torus(2, 6);
    auto tangent = tangent_bundle(m);
    BilinearMap psi = polyvector_wedge(m);
    ActionSpec ins{ActionKind::Insertion, psi.target, tangent, {}};
    std::mt19937_64 rng(13);

    BVForm J = random_form(tangent, 1, rng);
    BVForm pair = wedge_bilinear(J, J, psi);  // degree 2, grade 2
    // s = 1 < j = 2: the action of the pair on J itself vanishes
    MixedForm low = act(J, pair, ins, Side::Right);
    CHECK(low.is_zero(0.0));
    // s = 2: output degree 2 - 2 + 2 = 2
    BVForm two = random_form(tangent, 2, rng);
    MixedForm out = act(two, pair, ins, Side::Right);
    for (const auto& [deg, part] : out.parts()) CHECK(deg == 2);
    CHECK(!out.is_zero(1e-14));
}

TEST_CASE("fiberwise identity action is the identity") {
    auto m = torus(2, 4);
    auto b = std::make_shared<BundleSpec>(m, 2);
    auto acting = std::make_shared<BundleSpec>(m, 1);
    ActionSpec fw{ActionKind::FiberwiseBilinear, acting, b,
                  {1, 0, 0, 1}};  // t[0][b][c] = delta_bc
    BVForm gamma(acting, 0);
    for (long long p = 0; p < m->num_points(); ++p) gamma.at(p, 0, 0) = 1.0;
    std::mt19937_64 rng(17);
    BVForm rho = random_form(b, 1, rng);
    MixedForm out = act(rho, gamma, fw, Side::Right);
    CHECK(l2_norm(out.project(1, b) - rho) < 1e-14);
}

TEST_CASE("hodge star basics") {
    auto m = torus(2, 4);
    auto b = std::make_shared<BundleSpec>(m, 1);
    BVForm one(b, 0);
    for (long long p = 0; p < m->num_points(); ++p) one.at(p, 0, 0) = 1.0;
    BVForm vol = hodge_star(one);
    CHECK(vol.degree() == 2);
    for (long long p = 0; p < m->num_points(); ++p) CHECK(vol.at(p, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("star involution across dimensions and degrees") {
    std::mt19937_64 rng(19);
    for (int n : {2, 3, 4}) {
        auto m = torus(n, 4);
        auto b = std::make_shared<BundleSpec>(m, 2);
        for (int k = 0; k <= n; ++k) {
            BVForm a = random_form(b, k, rng);
            double sign = (k * (n - k)) % 2 == 0 ? 1.0 : -1.0;
            CHECK(l2_norm(hodge_star(hodge_star(a)) - a * sign) < 1e-12 * l2_norm(a));
        }
    }
}

TEST_CASE("star defining property pointwise") {
    std::mt19937_64 rng(23);
    for (int n : {2, 3}) {
        auto m = torus(n, 4);
        auto b = std::make_shared<BundleSpec>(m, 2);
        for (int k = 0; k <= n; ++k) {
            BVForm a = random_form(b, k, rng), c = random_form(b, k, rng);
            BVForm top = wedge_hE(a, hodge_star(c));
            std::vector<double> inner = pointwise_inner(a, c);
            double worst = 0;
            for (long long p = 0; p < m->num_points(); ++p)
                worst = std::max(worst,
                                 std::abs(top.at(p, 0, 0) - inner[p] * m->volume_density()));
            CHECK(worst < 1e-12);
        }
    }
}

TEST_CASE("wedge_hE orthogonality, annihilation, graded symmetry") {
    auto m = torus(2, 4);
    auto b = std::make_shared<BundleSpec>(m, 2);  // identity fiber metric
    std::mt19937_64 rng(29);

    BVForm a(b, 1), c(b, 1);
    for (long long p = 0; p < m->num_points(); ++p) {
        a.at(p, 0, 0) = 0.8;  // dx1 (x) e1
        c.at(p, 0, 1) = 1.7;  // dx1 (x) e2
    }
    CHECK(wedge_hE(a, c).is_zero(0.0));  // orthogonal fibers
    CHECK(wedge_hE(a, a).is_zero(0.0));  // repeated dx1

    for (int k = 0; k <= 1; ++k)
        for (int l = 0; k + l <= 2 && l <= 1; ++l) {
            BVForm x = random_form(b, k, rng), y = random_form(b, l, rng);
            double sign = (k * l) % 2 == 0 ? 1.0 : -1.0;
            CHECK(l2_norm(wedge_hE(x, y) - wedge_hE(y, x) * sign) < 1e-13);
        }
}

TEST_CASE("l2 inner product: positivity, degree orthogonality, wedge-star equality") {
    auto m = torus(2, 6);
    auto b = std::make_shared<BundleSpec>(m, 2);
    std::mt19937_64 rng(31);
    MixedForm A(random_form(b, 1, rng));
    MixedForm B(random_form(b, 2, rng));
    CHECK(l2_inner(A, A) > 0);
    CHECK(l2_inner(A, B) == 0.0);

    // <a,c> via integral of the top coefficient of a ^_{h_E} *c
    for (int k = 0; k <= 2; ++k) {
        BVForm a = random_form(b, k, rng), c = random_form(b, k, rng);
        BVForm top = wedge_hE(a, hodge_star(c));
        std::vector<double> coeff(m->num_points());
        for (long long p = 0; p < m->num_points(); ++p) coeff[p] = top.at(p, 0, 0);
        double via_wedge = m->integrate(coeff) / m->volume_density();
        CHECK(l2_inner(a, c) == doctest::Approx(via_wedge).epsilon(1e-12));
    }

    // Cauchy-Schwarz on random samples
    BVForm x = random_form(b, 1, rng), y = random_form(b, 1, rng);
    CHECK(std::abs(l2_inner(x, y)) <= l2_norm(x) * l2_norm(y) * (1 + 1e-12));
}
