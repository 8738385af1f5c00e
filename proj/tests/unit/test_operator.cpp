#include <doctest.h>

#include <cmath>
#include <random>

#include "cforms/accomplex.hpp"

using namespace cforms;

namespace {

ManifoldPtr torus(int n, int N) {
    return std::make_shared<GridManifold>(n, std::vector<int>(n, N));
}

BVForm random_form(const BundlePtr& b, int degree, std::mt19937_64& rng, double scale = 1.0) {
    BVForm f(b, degree);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (double& v : f.coeff()) v = dist(rng);
    return f;
}

// degree-additive spec with all four coefficients active, valid at k = 0
OperatorSpec fiberwise_spec(const ManifoldPtr& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.6, 0.6);
    auto E = std::make_shared<BundleSpec>(m, 2);
    auto Ep = std::make_shared<BundleSpec>(m, 2);
    auto Epp = std::make_shared<BundleSpec>(m, 2);
    auto rand_tensor = [&](std::size_t sz) {
        std::vector<double> t(sz);
        for (double& v : t) v = dist(rng);
        return t;
    };
    OperatorSpec spec;
    spec.bundle = E;
    spec.a = {0.8, -0.5, 0.7, 1.0};
    spec.phi = BilinearMap{E, Ep, rand_tensor(2 * 2 * 2)};
    spec.psi = BilinearMap{E, Epp, rand_tensor(2 * 2 * 2)};
    spec.left_action = ActionSpec{ActionKind::FiberwiseBilinear, Ep, E, rand_tensor(2 * 2 * 2)};
    spec.right_action = ActionSpec{ActionKind::FiberwiseBilinear, Epp, E, rand_tensor(2 * 2 * 2)};
    spec.k = 0;
    spec.trunc = TruncationList{0};
    return spec;
}

}  // namespace

TEST_CASE("degree bookkeeping of the integrability spec") {
    auto m = torus(4, 4);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    QDegrees q1 = q_degrees(spec, 1);
    REQUIRE(q1.q(3).size() == 1);
    CHECK(q1.q(3)[0] == 2);  // k + 1
    CHECK(q_degrees(spec, 0).q(3).empty());  // d rho_0 has one slot, grade needs two
    CHECK(validate(spec).valid());
}

TEST_CASE("degree-additive q formulas") {
    auto m = torus(4, 4);
    OperatorSpec spec = fiberwise_spec(m, 2);
    for (int l = 0; l <= 4; ++l) {
        QDegrees q = q_degrees(spec, l);
        int expect2 = 3 * l + 1;
        if (l + 1 <= 4 && 2 * l <= 4 && expect2 <= 4) {
            REQUIRE(q.q(2).size() == 1);
            CHECK(q.q(2)[0] == expect2);
            CHECK(q.q(3) == q.q(2));
        } else {
            CHECK(q.q(2).empty());
        }
        int expect1 = 5 * l + 1;
        if (l + 1 <= 4 && 2 * l <= 4 && expect2 <= 4 && expect1 <= 4) {
            REQUIRE(q.q(1).size() == 1);
            CHECK(q.q(1)[0] == expect1);
        }
    }
    CHECK(validate(spec).valid());
}

TEST_CASE("validator rejects a q-degree clash with its location") {
    // fiberwise spec with k = 4 on T^4: q_3(1) = 4 = k
    auto m = torus(4, 4);
    OperatorSpec spec = fiberwise_spec(m, 3);
    spec.k = 4;
    spec.trunc = TruncationList{4};
    ValidationReport rep = validate(spec);
    CHECK(!rep.valid());
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.constraint == "q_clash" && v.i == 3 && v.l == 1) found = true;
    CHECK(found);
}

TEST_CASE("validator enforces the degree-one requirement") {
    auto m = torus(4, 4);
    OperatorSpec spec = fiberwise_spec(m, 4);
    spec.k = 1;  // q(1) = 4 != 2
    spec.trunc = TruncationList{1};
    ValidationReport rep = validate(spec);
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.constraint == "degree_one") found = true;
    CHECK(found);
}

TEST_CASE("apply_P: constant input, flat connection, any coefficients") {
    auto m = torus(2, 6);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    BVForm c(spec.bundle, 1);
    for (long long p = 0; p < m->num_points(); ++p) {
        c.at(p, 0, 1) = 0.4;
        c.at(p, 1, 0) = -0.9;
    }
    CHECK(apply_P(spec, c).is_zero(0.0));
}

TEST_CASE("apply_P is homogeneous of degree k+1 on degree-k input") {
    auto m = torus(2, 6);
    OperatorSpec ac = ac_operator_spec(tangent_bundle(m));
    std::mt19937_64 rng(5);
    MixedForm out = apply_P(ac, random_form(ac.bundle, 1, rng));
    for (const auto& [deg, part] : out.parts()) {
        (void)part;
        CHECK(deg == 2);
    }
    OperatorSpec fw = fiberwise_spec(m, 6);
    MixedForm out0 = apply_P(fw, random_form(fw.bundle, 0, rng));
    for (const auto& [deg, part] : out0.parts()) {
        (void)part;
        CHECK(deg == 1);
    }
}

TEST_CASE("alpha variant wedges alpha against P") {
    auto m = torus(4, 4);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    auto scalars = scalar_bundle(m);
    BVForm alpha(scalars, 1);
    for (long long p = 0; p < m->num_points(); ++p) alpha.at(p, 0, 0) = 1.0;  // dx1
    spec.alpha = alpha;
    CHECK(validate(spec).valid());
    std::mt19937_64 rng(7);
    BVForm rho = random_form(spec.bundle, 1, rng);
    MixedForm lhs = apply_P_alpha(spec, rho);
    MixedForm base = apply_P(spec, rho);
    for (const auto& [deg, part] : base.parts()) {
        BVForm w = wedge_scalar(alpha, part);
        CHECK(l2_norm(lhs.project(deg + 1, spec.bundle) - w) < 1e-12);
        CHECK(deg + 1 == 3);  // k=1, p=1 -> output degree 3
    }
    spec.alpha = BVForm(scalars, 1);  // alpha = 0 is forbidden
    CHECK(!validate(spec).valid());
}

TEST_CASE("alpha validation: closedness and the p = k - q clash") {
    auto m = torus(4, 6);
    auto scalars = scalar_bundle(m);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    BVForm bad(scalars, 1);
    for (long long p = 0; p < m->num_points(); ++p)
        bad.at(p, 0, 0) = std::sin(m->coordinate(p, 1));  // d(bad) != 0
    spec.alpha = bad;
    ValidationReport rep = validate(spec);
    bool closed_fail = false;
    for (const auto& v : rep.violations)
        if (v.constraint == "alpha_closed") closed_fail = true;
    CHECK(closed_fail);

    // psi also hitting polyvector grade 1 makes q_3(0) = {0}: at l = 0 the
    // single slot of d rho_0 absorbs the grade-1 insertion and the degree
    // drops to 0, so p = 1 = k - 0 must fire at (i=3, l=0)
    OperatorSpec mixed = ac_operator_spec(tangent_bundle(m));
    BilinearMap psi = *mixed.psi;
    const auto& pv = psi.target;
    int off1 = pv->grade_offset(1);
    psi.tensor[(0 * 4 + 0) * pv->rank() + off1] = 1.0;
    mixed.psi = psi;
    BVForm alpha(scalars, 1);
    for (long long p = 0; p < m->num_points(); ++p) alpha.at(p, 0, 0) = 1.0;
    mixed.alpha = alpha;
    ValidationReport rep2 = validate(mixed);
    bool clash = false;
    for (const auto& v : rep2.violations)
        if (v.constraint == "alpha_q_clash" && v.i == 3 && v.l == 0) clash = true;
    CHECK(clash);
}

TEST_CASE("functional: zero input and degree orthogonality") {
    auto m = torus(2, 6);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    CHECK(functional(spec, MixedForm()) == 0.0);
    std::mt19937_64 rng(11);
    MixedForm gamma(random_form(spec.bundle, 1, rng));
    // P(gamma_1) has degree 2 and gamma_2 = 0
    CHECK(functional(spec, gamma) == 0.0);
    TruncationList saved = spec.trunc;
    spec.trunc = TruncationList{};
    CHECK_THROWS(functional(spec, gamma));  // k must be in the truncation list
    spec.trunc = saved;
}

TEST_CASE("gradient: zero at zero, matches finite differences") {
    auto m = torus(2, 8);
    std::mt19937_64 rng(13);
    for (int which = 0; which < 2; ++which) {
        OperatorSpec spec =
            which == 0 ? ac_operator_spec(tangent_bundle(m)) : fiberwise_spec(m, 17);
        REQUIRE(validate(spec).valid());
        CHECK(gradient(spec, MixedForm()).is_zero(0.0));
        std::vector<int> degs;
        for (int d : {spec.k, spec.k + 1, spec.k + 2})
            if (d <= m->dim()) degs.push_back(d);
        for (int pair = 0; pair < 4; ++pair) {
            MixedForm gamma, beta;
            for (int d : degs) {
                gamma.set(random_form(spec.bundle, d, rng, 0.5));
                beta.set(random_form(spec.bundle, d, rng, 0.5));
            }
            double lhs = l2_inner(gradient(spec, gamma), beta);
            const double t = 1e-4;
            double fd = (functional(spec, gamma + beta * t) -
                         functional(spec, gamma - beta * t)) /
                        (2 * t);
            CHECK(std::abs(lhs - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("gradient with alpha matches finite differences") {
    auto m = torus(4, 4);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    auto scalars = scalar_bundle(m);
    BVForm alpha(scalars, 1);
    for (long long p = 0; p < m->num_points(); ++p) alpha.at(p, 0, 0) = 1.0;
    spec.alpha = alpha;
    REQUIRE(validate(spec).valid());
    std::mt19937_64 rng(19);
    MixedForm gamma, beta;
    for (int d : {1, 2, 3}) {
        gamma.set(random_form(spec.bundle, d, rng, 0.4));
        beta.set(random_form(spec.bundle, d, rng, 0.4));
    }
    double lhs = l2_inner(gradient(spec, gamma), beta);
    const double t = 1e-4;
    double fd =
        (functional(spec, gamma + beta * t) - functional(spec, gamma - beta * t)) / (2 * t);
    CHECK(std::abs(lhs - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
}

TEST_CASE("criticality at a parallel structure") {
    auto m = torus(2, 8);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    SubdomainSpec sub = make_relaxed_subdomain(spec);
    CHECK(sub.zero_degrees.count(1) == 0);
    MixedForm gamma(standard_J(m).J);
    MixedForm grad = gradient(spec, gamma);
    CHECK(l2_norm(subdomain_tangent(grad, sub)) < 1e-10);
    CHECK(l2_norm(grad) < 1e-10);  // P(J0) = 0 exactly, so even the full gradient dies
}

TEST_CASE("project_subdomain: zeroing, idempotence, coclosedness, retraction") {
    auto m = torus(4, 6);
    auto tangent = tangent_bundle(m);
    OperatorSpec spec = ac_operator_spec(tangent);
    std::mt19937_64 rng(23);

    SubdomainSpec sub = make_relaxed_subdomain(spec);
    MixedForm gamma;
    for (int d = 0; d <= 4; ++d) gamma.set(random_form(tangent, d, rng));
    MixedForm proj = project_subdomain(gamma, sub, tangent, spec.trunc);
    for (int d : sub.zero_degrees) CHECK(proj.project(d, tangent).is_zero(0.0));
    MixedForm twice = project_subdomain(proj, sub, tangent, spec.trunc);
    CHECK(l2_norm(twice - proj) < 1e-12);

    // coclosed constraint with a truncation that leaves delta alive at 3
    SubdomainSpec co;
    co.coclosed_degrees = {3};
    TruncationList tr{1};
    MixedForm g3(random_form(tangent, 3, rng));
    MixedForm pg3 = project_subdomain(g3, co, tangent, tr);
    BVForm part = pg3.project(3, tangent);
    CHECK(l2_norm(delta_truncated(part, tr)) <= 1e-9 * l2_norm(part));
    MixedForm pg3b = project_subdomain(pg3, co, tangent, tr);
    CHECK(l2_norm(pg3b - pg3) < 1e-9 * l2_norm(pg3));

    // almost-complex retraction restores J^2 = -Id
    SubdomainSpec ac;
    ac.predicate = SubdomainSpec::Predicate::AlmostComplex;
    ac.structure_degree = 1;
    BVForm J = standard_J(m).J;
    BVForm noise = random_form(tangent, 1, rng, 0.05);
    MixedForm perturbed(J + noise);
    MixedForm retracted = project_subdomain(perturbed, ac, tangent, tr);
    ACStructure back{retracted.project(1, tangent)};
    CHECK(back.defect() < 1e-12);
}

TEST_CASE("flow: fixed point, zero step, first-order descent") {
    auto m = torus(2, 8);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    SubdomainSpec none;

    FlowState state;
    state.gamma = MixedForm(standard_J(m).J);
    state.step_size = 1e-3;
    flow_step(state, spec, none);
    CHECK(l2_norm(state.gamma - MixedForm(standard_J(m).J)) < 1e-10);
    CHECK(state.history.size() == 1);

    FlowState frozen;
    frozen.gamma = MixedForm(random_J(m, 3, 0.3).J);
    frozen.step_size = 0.0;
    MixedForm before = frozen.gamma;
    flow_step(frozen, spec, none);
    CHECK(l2_norm(frozen.gamma - before) == 0.0);
    CHECK(frozen.history.size() == 1);

    FlowState moving;
    // off the almost-complex locus: exactly retracted surface fields have
    // P(J) = 0 identically and no measurable descent
    std::mt19937_64 rng(31);
    moving.gamma = MixedForm(standard_J(m).J + random_form(tangent_bundle(m), 1, rng) * 0.1);
    moving.step_size = 1e-4;
    double e0 = functional(spec, moving.gamma);
    MixedForm g = gradient(spec, moving.gamma);
    double gn2 = l2_inner(g, g);
    flow_step(moving, spec, none);
    double e1 = moving.history.back().energy;
    CHECK(std::abs((e1 - e0) - (-moving.step_size * gn2)) <=
          0.05 * moving.step_size * gn2);
}

TEST_CASE("left insertion action is rejected") {
    auto m = torus(2, 4);
    OperatorSpec spec = ac_operator_spec(tangent_bundle(m));
    spec.a = {1, 0, 1, -1};
    spec.phi = *spec.psi;
    spec.left_action = *spec.right_action;  // insertion on the left: invalid
    ValidationReport rep = validate(spec);
    bool found = false;
    for (const auto& v : rep.violations)
        if (v.constraint == "left_insertion") found = true;
    CHECK(found);
}

TEST_CASE("truncation [k] kills delta on degree-k forms") {
    auto m = torus(2, 6);
    auto b = std::make_shared<BundleSpec>(m, 2);
    std::mt19937_64 rng(29);
    BVForm gk = random_form(b, 1, rng);
    CHECK(delta_truncated(gk, TruncationList{1}).is_zero(0.0));
}
