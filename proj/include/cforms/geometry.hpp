#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "cforms/multiindex.hpp"

namespace cforms {

// Flat n-torus with a constant Riemannian metric on a periodic grid.
class GridManifold {
public:
    GridManifold(int dim, std::vector<int> resolution,
                 std::vector<double> side_lengths = {},
                 Eigen::MatrixXd metric = Eigen::MatrixXd());

    int dim() const { return dim_; }
    const std::vector<int>& resolution() const { return resolution_; }
    const std::vector<double>& side_lengths() const { return side_lengths_; }
    const Eigen::MatrixXd& metric() const { return metric_; }
    const Eigen::MatrixXd& metric_inverse() const { return metric_inv_; }
    double volume_density() const { return volume_density_; }
    double cell_volume() const { return cell_volume_; }
    long long num_points() const { return num_points_; }
    double spacing(int axis) const { return side_lengths_[axis] / resolution_[axis]; }

    // row-major flattening, axis 0 slowest
    long long point_index(const std::vector<int>& coords) const;
    std::vector<int> point_coords(long long idx) const;
    double coordinate(long long idx, int axis) const;
    long long neighbor(long long idx, int axis, int shift) const;

    // Gram matrix of <.,.> on scalar k-forms induced by g (Gram-determinant
    // extension of g^{-1} to increasing multi-indices).
    const Eigen::MatrixXd& form_gram(int k) const;

    double integrate(const std::vector<double>& field) const;

    // second-order periodic central difference along `axis`;
    // `fiber` components per point, laid out point-major
    std::vector<double> partial_derivative(const std::vector<double>& field,
                                           int axis, int fiber = 1) const;

private:
    int dim_;
    std::vector<int> resolution_;
    std::vector<double> side_lengths_;
    Eigen::MatrixXd metric_, metric_inv_;
    double volume_density_, cell_volume_;
    long long num_points_;
    std::vector<long long> strides_;
    mutable std::vector<Eigen::MatrixXd> gram_;  // per degree, lazily filled
};

using ManifoldPtr = std::shared_ptr<const GridManifold>;

}  // namespace cforms
