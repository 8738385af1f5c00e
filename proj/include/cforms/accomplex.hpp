#pragma once

#include <cstdint>
#include <utility>

#include "cforms/operator.hpp"

namespace cforms {

// Almost-complex structure: tangent-valued 1-form J with J(x)^2 = -Id
// pointwise. Stored so that J.at(p, i, a) = J^a_i(x_p), i.e. J(d_i) = J^a_i d_a.
struct ACStructure {
    BVForm J;

    const ManifoldPtr& manifold() const { return J.manifold(); }
    // max over points of the Frobenius norm of J^2 + Id
    double defect() const;
};

// constant block-diagonal J0 with 2x2 blocks [[0,-1],[1,0]]
ACStructure standard_J(const ManifoldPtr& manifold);

// J(x) = Q(x) J0 Q(x)^{-1}, Q = exp(amplitude * S(x)) with S a seeded
// low-frequency trigonometric matrix field; resolution-independent, so
// refinement studies sample one smooth structure.
ACStructure random_J(const ManifoldPtr& manifold, std::uint64_t seed, double amplitude);

// On T^4: block-diagonal product of two surface structures, the first
// depending on (x1,x2) only and the second on (x3,x4) only. Integrable but
// non-constant; used to calibrate the discretization-error floor.
ACStructure product_J(const ManifoldPtr& manifold, std::uint64_t seed, double amplitude);

// Nijenhuis tensor field, layout ((p*n + a)*n + b)*n + c for N^c_{ab}.
std::vector<double> nijenhuis(const ACStructure& J);
double nijenhuis_l2(const ACStructure& J);

// The integrability operator's spec: a = (0,0,1,-1), psi = polyvector
// wedge, insertion right action, k = 1; truncation [1] on surfaces and
// [1,3] in dimension >= 4.
OperatorSpec ac_operator_spec(const BundlePtr& tangent);

// (|P(J)|_L2, |N_J|_L2) for the spec above over the given tangent bundle
// (must be torsion-free).
std::pair<double, double> integrability_residual(const ACStructure& J, const BundlePtr& tangent);

// |alpha ^ P(J)|_L2 for a closed nonzero scalar form alpha.
double alpha_residual(const ACStructure& J, const BVForm& alpha);

}  // namespace cforms
