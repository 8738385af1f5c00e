#pragma once

#include <map>
#include <vector>

#include "cforms/bundle.hpp"

namespace cforms {

// Homogeneous bundle-valued k-form. Coefficients are stored only on
// increasing multi-indices, point-major:
//   coeff[(point * C(n,k) + multi_index) * rank + fiber]
class BVForm {
public:
    BVForm() = default;
    BVForm(BundlePtr bundle, int degree);

    const BundlePtr& bundle() const { return bundle_; }
    const ManifoldPtr& manifold() const { return bundle_->manifold(); }
    int degree() const { return degree_; }
    int n() const { return manifold()->dim(); }
    int rank() const { return bundle_->rank(); }
    int num_indices() const { return num_indices_; }
    bool empty() const { return coeff_.empty(); }
    bool is_zero(double tol = 0.0) const;

    std::vector<double>& coeff() { return coeff_; }
    const std::vector<double>& coeff() const { return coeff_; }

    double& at(long long point, int index_pos, int fiber) {
        return coeff_[(point * num_indices_ + index_pos) * rank() + fiber];
    }
    double at(long long point, int index_pos, int fiber) const {
        return coeff_[(point * num_indices_ + index_pos) * rank() + fiber];
    }

    // evaluation on an arbitrary axis tuple (sign-extended, 0 on repeats)
    double evaluate(long long point, const std::vector<int>& axes, int fiber) const;

    BVForm& operator+=(const BVForm& other);
    BVForm& operator-=(const BVForm& other);
    BVForm& operator*=(double s);
    BVForm operator*(double s) const;
    BVForm operator+(const BVForm& o) const;
    BVForm operator-(const BVForm& o) const;

private:
    BundlePtr bundle_;
    int degree_ = 0;
    int num_indices_ = 0;
    std::vector<double> coeff_;
};

// convenience aliases matching usage sites
BVForm zero_form(const BundlePtr& bundle, int degree);

// Graded sum of homogeneous parts keyed by degree.
class MixedForm {
public:
    MixedForm() = default;
    explicit MixedForm(BVForm part);

    const std::map<int, BVForm>& parts() const { return parts_; }
    bool has(int degree) const { return parts_.count(degree) > 0; }
    bool is_zero(double tol = 0.0) const;

    void set(BVForm part);
    void add(const BVForm& part);
    void add(const MixedForm& other);
    MixedForm& operator+=(const MixedForm& o) { add(o); return *this; }
    MixedForm& operator-=(const MixedForm& o);
    MixedForm& operator*=(double s);
    MixedForm operator*(double s) const;
    MixedForm operator+(const MixedForm& o) const;
    MixedForm operator-(const MixedForm& o) const;

    // the paper's p_k; requires the bundle to know the zero form's shape
    BVForm project(int k, const BundlePtr& bundle) const;
    // when nonempty, uses the stored bundle
    BVForm project(int k) const;

private:
    std::map<int, BVForm> parts_;
};

// alpha wedge_phi beta via shuffle splits over increasing multi-indices;
// equals the 1/(k! l!) permutation-sum definition. Returns the zero
// top-degree-overflow form when k + l > n.
BVForm wedge_bilinear(const BVForm& alpha, const BVForm& beta, const BilinearMap& map);

// Reference implementation of the same product via the full 1/(k! l!)
// permutation sum; O((k+l)!) per entry, for cross-checks only.
BVForm wedge_bilinear_reference(const BVForm& alpha, const BVForm& beta, const BilinearMap& map);

// scalar p-form wedge bundle-valued form (scalar forms = rank-1 trivial bundle)
BVForm wedge_scalar(const BVForm& scalar, const BVForm& alpha);

enum class Side { Left, Right };

// Graded action of `gamma` (over the acting bundle) on `rho` (over E).
MixedForm act(const BVForm& rho, const BVForm& gamma, const ActionSpec& action, Side side);
MixedForm act(const MixedForm& rho, const BVForm& gamma, const ActionSpec& action, Side side);

// Pointwise algebraic Hodge star (indices raised with g, fiber untouched).
BVForm hodge_star(const BVForm& alpha);

// Scalar-valued wedge pairing fiber components through h_E.
BVForm wedge_hE(const BVForm& alpha, const BVForm& beta);

// Trivial rank-1 bundle for scalar-valued forms.
BundlePtr scalar_bundle(const ManifoldPtr& manifold);

// pointwise <alpha,beta>_{h_E} as a grid function
std::vector<double> pointwise_inner(const BVForm& alpha, const BVForm& beta);

double l2_inner(const BVForm& a, const BVForm& b);
double l2_inner(const MixedForm& a, const MixedForm& b);
double l2_norm(const BVForm& a);
double l2_norm(const MixedForm& a);

}  // namespace cforms
