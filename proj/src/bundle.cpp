#include "cforms/bundle.hpp"

#include <cmath>
#include <stdexcept>

namespace cforms {

BundleSpec::BundleSpec(ManifoldPtr manifold, int rank,
                       std::vector<Eigen::MatrixXd> fiber_metric,
                       std::vector<std::vector<Eigen::MatrixXd>> connection,
                       std::vector<int> grading)
    : manifold_(std::move(manifold)), rank_(rank), fiber_metric_(std::move(fiber_metric)),
      connection_(std::move(connection)), grading_(std::move(grading)) {
    if (!manifold_) throw std::invalid_argument("BundleSpec: null manifold");
    if (rank_ < 1) throw std::invalid_argument("BundleSpec: rank must be >= 1");
    if (fiber_metric_.empty()) fiber_metric_.push_back(Eigen::MatrixXd::Identity(rank_, rank_));
    if (fiber_metric_.size() != 1 &&
        static_cast<long long>(fiber_metric_.size()) != manifold_->num_points())
        throw std::invalid_argument("BundleSpec: fiber metric must be constant or per-point");
    fiber_metric_inv_.reserve(fiber_metric_.size());
    for (const auto& h : fiber_metric_) {
        if (h.rows() != rank_ || h.cols() != rank_)
            throw std::invalid_argument("BundleSpec: fiber metric dimension mismatch");
        if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12)
            throw std::invalid_argument("BundleSpec: fiber metric must be symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.eigenvalues().minCoeff() <= 0)
            throw std::invalid_argument("BundleSpec: fiber metric must be positive definite");
        fiber_metric_inv_.push_back(h.inverse());
    }
    if (!connection_.empty()) {
        if (static_cast<int>(connection_.size()) != manifold_->dim())
            throw std::invalid_argument("BundleSpec: connection must have one block per axis");
        for (auto& axis_block : connection_) {
            if (axis_block.size() != 1 &&
                static_cast<long long>(axis_block.size()) != manifold_->num_points())
                throw std::invalid_argument("BundleSpec: connection must be constant or per-point");
            for (auto& G : axis_block)
                if (G.rows() != rank_ || G.cols() != rank_)
                    throw std::invalid_argument("BundleSpec: connection dimension mismatch");
        }
    }
    if (!grading_.empty()) {
        int sum = 0;
        grade_offsets_.push_back(0);
        for (int r : grading_) {
            if (r < 0) throw std::invalid_argument("BundleSpec: negative sub-rank");
            sum += r;
            grade_offsets_.push_back(sum);
        }
        if (sum != rank_) throw std::invalid_argument("BundleSpec: grading sub-ranks must sum to rank");
    }
    zero_ = Eigen::MatrixXd::Zero(rank_, rank_);
}

int BundleSpec::grade_offset(int j) const {
    if (j < 0 || j >= static_cast<int>(grade_offsets_.size()))
        throw std::invalid_argument("BundleSpec: grade out of range");
    return grade_offsets_[j];
}

int BundleSpec::grade_of_fiber(int a) const {
    for (std::size_t j = 0; j + 1 < grade_offsets_.size(); ++j)
        if (a < grade_offsets_[j + 1]) return static_cast<int>(j);
    throw std::invalid_argument("BundleSpec: fiber index out of range");
}

const Eigen::MatrixXd& BundleSpec::fiber_metric(long long point) const {
    return fiber_metric_.size() == 1 ? fiber_metric_[0] : fiber_metric_[point];
}

const Eigen::MatrixXd& BundleSpec::fiber_metric_inverse(long long point) const {
    return fiber_metric_inv_.size() == 1 ? fiber_metric_inv_[0] : fiber_metric_inv_[point];
}

const Eigen::MatrixXd& BundleSpec::gamma(int axis, long long point) const {
    if (connection_.empty()) return zero_;
    const auto& block = connection_[axis];
    return block.size() == 1 ? block[0] : block[point];
}

void BilinearMap::check() const {
    if (!source || !target) throw std::invalid_argument("BilinearMap: null bundle");
    std::size_t expect = static_cast<std::size_t>(source->rank()) * source->rank() * target->rank();
    if (tensor.size() != expect)
        throw std::invalid_argument("BilinearMap: tensor size mismatch");
}

BundlePtr flat_connection(const BundlePtr& bundle) {
    return std::make_shared<BundleSpec>(bundle->manifold(), bundle->rank(),
                                        std::vector<Eigen::MatrixXd>{bundle->fiber_metric(0)},
                                        std::vector<std::vector<Eigen::MatrixXd>>{},
                                        bundle->grading());
}

BundlePtr tangent_bundle(const ManifoldPtr& manifold) {
    return std::make_shared<BundleSpec>(manifold, manifold->dim(),
                                        std::vector<Eigen::MatrixXd>{manifold->metric()});
}

BundlePtr polyvector_bundle(const ManifoldPtr& manifold) {
    int n = manifold->dim();
    std::vector<int> grading;
    int rank = 0;
    for (int j = 0; j <= n; ++j) {
        int c = DegreeTable::get(n, j).count();
        grading.push_back(c);
        rank += c;
    }
    // block-diagonal fiber metric: Gram-determinant extension of g per grade
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rank, rank);
    int off = 0;
    Eigen::MatrixXd g = manifold->metric();
    for (int j = 0; j <= n; ++j) {
        const DegreeTable& tab = DegreeTable::get(n, j);
        int C = tab.count();
        for (int a = 0; a < C; ++a)
            for (int b = 0; b < C; ++b) {
                const auto& I = tab.axes(a);
                const auto& J = tab.axes(b);
                Eigen::MatrixXd sub(j, j);
                for (int r = 0; r < j; ++r)
                    for (int c = 0; c < j; ++c) sub(r, c) = g(I[r], J[c]);
                h(off + a, off + b) = (j == 0) ? 1.0 : sub.determinant();
            }
        off += C;
    }
    return std::make_shared<BundleSpec>(manifold, rank, std::vector<Eigen::MatrixXd>{h},
                                        std::vector<std::vector<Eigen::MatrixXd>>{}, grading);
}

BilinearMap polyvector_wedge(const ManifoldPtr& manifold) {
    int n = manifold->dim();
    BilinearMap map;
    map.source = tangent_bundle(manifold);
    map.target = polyvector_bundle(manifold);
    int m = n, M = map.target->rank();
    map.tensor.assign(static_cast<std::size_t>(m) * m * M, 0.0);
    const DegreeTable& tab2 = DegreeTable::get(n, 2);
    int off2 = map.target->grade_offset(2);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            int pos = tab2.position((1u << a) | (1u << b));
            double s = (a < b) ? 1.0 : -1.0;
            map.tensor[(static_cast<std::size_t>(a) * m + b) * M + off2 + pos] = s;
        }
    return map;
}

double torsion_check(const BundlePtr& bundle) {
    const auto& M = bundle->manifold();
    int n = M->dim();
    if (bundle->rank() != n)
        throw std::invalid_argument("torsion_check: bundle is not the tangent bundle");
    double worst = 0.0;
    long long pts = bundle->flat() ? 1 : M->num_points();
    for (long long p = 0; p < pts; ++p)
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    double d = std::abs(bundle->gamma(i, p)(a, b) - bundle->gamma(b, p)(a, i));
                    if (d > worst) worst = d;
                }
    return worst;
}

}  // namespace cforms
