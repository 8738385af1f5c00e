#pragma once

#include <functional>
#include <optional>

#include "cforms/forms.hpp"

namespace cforms {

// Strictly increasing list of degrees where the derivative is switched off.
// d[m1,...,ms] vanishes on input degrees m_j - 1; its adjoint delta
// vanishes on input degrees m_j.
struct TruncationList {
    std::vector<int> degrees;

    TruncationList() = default;
    TruncationList(std::initializer_list<int> d) : degrees(d) { validate(-1); }

    void validate(int n) const;
    bool kills_d_input(int degree) const;      // degree == m_j - 1 for some j
    bool kills_delta_input(int degree) const;  // degree == m_j for some j
    bool contains(int degree) const;
};

// Exterior covariant derivative in coordinates:
//   d alpha = sum_i dx^i wedge (partial_i alpha + Gamma_i alpha)
BVForm d_nabla(const BVForm& alpha);

BVForm d_truncated(const BVForm& alpha, const TruncationList& trunc);

// Exact discrete adjoint of d_truncated w.r.t. the L2 inner product.
BVForm delta_nabla(const BVForm& beta);
BVForm delta_truncated(const BVForm& beta, const TruncationList& trunc);

// A linear map between homogeneous form spaces that acts independently at
// every grid point, stored as one dense matrix per point over the
// (multi-index, fiber) coefficient block.
class PointwiseLinearOp {
public:
    PointwiseLinearOp(BundlePtr in_bundle, int in_degree, BundlePtr out_bundle, int out_degree);

    int in_degree() const { return in_degree_; }
    int out_degree() const { return out_degree_; }
    const BundlePtr& in_bundle() const { return in_bundle_; }
    const BundlePtr& out_bundle() const { return out_bundle_; }
    Eigen::MatrixXd& matrix(long long p) { return mats_[p]; }
    const Eigen::MatrixXd& matrix(long long p) const { return mats_[p]; }

    BVForm apply(const BVForm& x) const;

    // Adjoint w.r.t. the weighted inner products on domain and codomain:
    // per point W_in^{-1} Q^T W_out with W_k = Gram_k (x) h_E.
    PointwiseLinearOp adjoint() const;

private:
    BundlePtr in_bundle_, out_bundle_;
    int in_degree_, out_degree_;
    std::vector<Eigen::MatrixXd> mats_;
};

// Materialize a pointwise linear map by probing with constant basis
// sections; f may return several homogeneous degrees (keyed below).
std::map<int, PointwiseLinearOp> materialize_pointwise(
    const std::function<MixedForm(const BVForm&)>& f, const BundlePtr& in_bundle, int in_degree,
    const BundlePtr& out_bundle);

// Black-box adjoint of a linear map between homogeneous form spaces,
// satisfying <<L x, y>> = <<x, L* y>> for all x, y. Production paths use
// the pointwise route; assemble_dense_* are the test oracle.
std::function<BVForm(const BVForm&)> linear_adjoint(
    const std::function<BVForm(const BVForm&)>& L, const BundlePtr& in_bundle, int in_degree,
    const BundlePtr& out_bundle, int out_degree);

// Dense matrix of L over all (point, multi-index, fiber) coefficients.
Eigen::MatrixXd assemble_dense(const std::function<BVForm(const BVForm&)>& L,
                               const BundlePtr& in_bundle, int in_degree,
                               const BundlePtr& out_bundle, int out_degree);

// Dense weight (inner product) matrix of the L2 product on a homogeneous
// form space; small instances only.
Eigen::MatrixXd assemble_weight(const BundlePtr& bundle, int degree);

}  // namespace cforms
