#include "cforms/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cforms {

GridManifold::GridManifold(int dim, std::vector<int> resolution,
                           std::vector<double> side_lengths, Eigen::MatrixXd metric)
    : dim_(dim), resolution_(std::move(resolution)), side_lengths_(std::move(side_lengths)),
      metric_(std::move(metric)) {
    if (dim_ < 1 || dim_ > 6) throw std::invalid_argument("GridManifold: dim must be in 1..6");
    if (static_cast<int>(resolution_.size()) != dim_)
        throw std::invalid_argument("GridManifold: resolution size mismatch");
    for (int N : resolution_)
        if (N < 1) throw std::invalid_argument("GridManifold: resolution entries must be positive");
    if (side_lengths_.empty()) side_lengths_.assign(dim_, 2.0 * M_PI);
    if (static_cast<int>(side_lengths_.size()) != dim_)
        throw std::invalid_argument("GridManifold: side_lengths size mismatch");
    for (double L : side_lengths_)
        if (!(L > 0)) throw std::invalid_argument("GridManifold: side lengths must be positive");
    if (metric_.size() == 0) metric_ = Eigen::MatrixXd::Identity(dim_, dim_);
    if (metric_.rows() != dim_ || metric_.cols() != dim_)
        throw std::invalid_argument("GridManifold: metric dimension mismatch");
    if ((metric_ - metric_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("GridManifold: metric must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(metric_);
    if (es.eigenvalues().minCoeff() <= 0)
        throw std::invalid_argument("GridManifold: metric must be positive definite");
    metric_inv_ = metric_.inverse();
    volume_density_ = std::sqrt(metric_.determinant());
    num_points_ = 1;
    double cell = volume_density_;
    strides_.assign(dim_, 1);
    for (int i = dim_ - 1; i >= 0; --i) {
        strides_[i] = num_points_;
        num_points_ *= resolution_[i];
        cell *= side_lengths_[i] / resolution_[i];
    }
    cell_volume_ = cell;
    gram_.resize(dim_ + 1);
}

long long GridManifold::point_index(const std::vector<int>& coords) const {
    long long idx = 0;
    for (int i = 0; i < dim_; ++i) {
        int c = coords[i] % resolution_[i];
        if (c < 0) c += resolution_[i];
        idx += c * strides_[i];
    }
    return idx;
}

std::vector<int> GridManifold::point_coords(long long idx) const {
    std::vector<int> c(dim_);
    for (int i = 0; i < dim_; ++i) {
        c[i] = static_cast<int>((idx / strides_[i]) % resolution_[i]);
    }
    return c;
}

double GridManifold::coordinate(long long idx, int axis) const {
    long long c = (idx / strides_[axis]) % resolution_[axis];
    return c * spacing(axis);
}

long long GridManifold::neighbor(long long idx, int axis, int shift) const {
    long long c = (idx / strides_[axis]) % resolution_[axis];
    long long nc = (c + shift) % resolution_[axis];
    if (nc < 0) nc += resolution_[axis];
    return idx + (nc - c) * strides_[axis];
}

const Eigen::MatrixXd& GridManifold::form_gram(int k) const {
    if (k < 0 || k > dim_) throw std::invalid_argument("form_gram: degree out of range");
    if (gram_[k].size() == 0) {
        const DegreeTable& tab = DegreeTable::get(dim_, k);
        int C = tab.count();
        Eigen::MatrixXd G(C, C);
        for (int a = 0; a < C; ++a) {
            for (int b = 0; b < C; ++b) {
                const auto& I = tab.axes(a);
                const auto& J = tab.axes(b);
                Eigen::MatrixXd sub(k, k);
                for (int r = 0; r < k; ++r)
                    for (int c = 0; c < k; ++c) sub(r, c) = metric_inv_(I[r], J[c]);
                G(a, b) = (k == 0) ? 1.0 : sub.determinant();
            }
        }
        gram_[k] = G;
    }
    return gram_[k];
}

double GridManifold::integrate(const std::vector<double>& field) const {
    if (static_cast<long long>(field.size()) != num_points_)
        throw std::invalid_argument("integrate: field size mismatch");
    double sum = 0.0;
    for (long long p = 0; p < num_points_; ++p) {
        if (!std::isfinite(field[p]))
            throw std::invalid_argument("integrate: non-finite value at point " + std::to_string(p));
        sum += field[p];
    }
    return cell_volume_ * sum;
}

std::vector<double> GridManifold::partial_derivative(const std::vector<double>& field,
                                                     int axis, int fiber) const {
    if (axis < 0 || axis >= dim_) throw std::invalid_argument("partial_derivative: axis out of range");
    if (resolution_[axis] < 4)
        throw std::invalid_argument("partial_derivative: resolution along axis must be >= 4");
    if (static_cast<long long>(field.size()) != num_points_ * fiber)
        throw std::invalid_argument("partial_derivative: field size mismatch");
    std::vector<double> out(field.size());
    double inv2h = 1.0 / (2.0 * spacing(axis));
    for (long long p = 0; p < num_points_; ++p) {
        long long pp = neighbor(p, axis, 1);
        long long pm = neighbor(p, axis, -1);
        for (int f = 0; f < fiber; ++f)
            out[p * fiber + f] = (field[pp * fiber + f] - field[pm * fiber + f]) * inv2h;
    }
    return out;
}

}  // namespace cforms
