#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "cforms/geometry.hpp"

namespace cforms {

// Vector bundle data over the grid: rank, fiber metric, connection
// coefficients, optional grading (e.g. the exterior algebra of T_M).
class BundleSpec {
public:
    BundleSpec(ManifoldPtr manifold, int rank,
               std::vector<Eigen::MatrixXd> fiber_metric = {},  // size 1 (constant) or num_points
               std::vector<std::vector<Eigen::MatrixXd>> connection = {},  // [axis][point or 0]
               std::vector<int> grading = {});

    const ManifoldPtr& manifold() const { return manifold_; }
    int rank() const { return rank_; }
    bool has_grading() const { return !grading_.empty(); }
    const std::vector<int>& grading() const { return grading_; }
    int grade_offset(int j) const;
    int grade_of_fiber(int a) const;

    const Eigen::MatrixXd& fiber_metric(long long point) const;
    const Eigen::MatrixXd& fiber_metric_inverse(long long point) const;
    bool constant_fiber_metric() const { return fiber_metric_.size() == 1; }

    bool flat() const { return connection_.empty(); }
    // Gamma_i at a point; zero matrix when flat
    const Eigen::MatrixXd& gamma(int axis, long long point) const;

private:
    ManifoldPtr manifold_;
    int rank_;
    std::vector<Eigen::MatrixXd> fiber_metric_, fiber_metric_inv_;
    std::vector<std::vector<Eigen::MatrixXd>> connection_;
    std::vector<int> grading_;
    std::vector<int> grade_offsets_;
    Eigen::MatrixXd zero_;
};

using BundlePtr = std::shared_ptr<const BundleSpec>;

// Bilinear bundle homomorphism E (+) E -> F as a constant coefficient
// tensor c[a][b][c']: (zeta . eta)_{c'} = sum c[a][b][c'] zeta_a eta_b.
struct BilinearMap {
    BundlePtr source;
    BundlePtr target;
    std::vector<double> tensor;  // ((a * src_rank + b) * dst_rank + cp)

    double coeff(int a, int b, int cp) const {
        return tensor[(static_cast<std::size_t>(a) * source->rank() + b) * target->rank() + cp];
    }
    void check() const;
};

enum class ActionKind { FiberwiseBilinear, Insertion };

// Graded left/right action of forms valued in an acting bundle on E-valued
// forms. FiberwiseBilinear contracts fibers through `tensor`
// (t[acting][in][out], degree-additive). Insertion plugs polyvector slots
// of a graded Lambda*(T_M) value into form arguments of a T_M-valued form
// (degree s - j + i per grade j, zero when s < j).
struct ActionSpec {
    ActionKind kind = ActionKind::FiberwiseBilinear;
    BundlePtr acting;  // E' or E''
    BundlePtr target;  // E
    std::vector<double> tensor;  // fiberwise only: ((a*target_rank + b)*target_rank + c)

    double coeff(int a, int b, int c) const {
        return tensor[(static_cast<std::size_t>(a) * target->rank() + b) * target->rank() + c];
    }
};

// Default flat connection (all Gamma zero).
BundlePtr flat_connection(const BundlePtr& bundle);

// Tangent bundle of the flat torus: rank n, fiber metric g, flat connection.
BundlePtr tangent_bundle(const ManifoldPtr& manifold);

// Graded bundle Lambda* T_M with sub-ranks C(n,0),...,C(n,n) and the
// fiber metric induced from g on each grade.
BundlePtr polyvector_bundle(const ManifoldPtr& manifold);

// The polyvector wedge product map T_M (+) T_M -> Lambda^2 T_M viewed
// inside Lambda* T_M.
BilinearMap polyvector_wedge(const ManifoldPtr& manifold);

// Max deviation of Gamma[i][a][b] from symmetry under (i <-> b); 0 means
// torsion-free. Only meaningful for the tangent bundle.
double torsion_check(const BundlePtr& bundle);

}  // namespace cforms
