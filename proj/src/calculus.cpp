#include "cforms/calculus.hpp"

#include <algorithm>
#include <stdexcept>

namespace cforms {

void TruncationList::validate(int n) const {
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        if (degrees[i] < 0) throw std::invalid_argument("TruncationList: negative degree");
        if (i > 0 && degrees[i] <= degrees[i - 1])
            throw std::invalid_argument("TruncationList: degrees must be strictly increasing");
        if (n >= 0 && degrees[i] > n)
            throw std::invalid_argument("TruncationList: degree exceeds manifold dimension");
    }
}

bool TruncationList::kills_d_input(int degree) const {
    return std::find(degrees.begin(), degrees.end(), degree + 1) != degrees.end();
}

bool TruncationList::kills_delta_input(int degree) const {
    return contains(degree);
}

bool TruncationList::contains(int degree) const {
    return std::find(degrees.begin(), degrees.end(), degree) != degrees.end();
}

namespace {

// dx^i wedge: Lambda^k -> Lambda^{k+1} as a constant matrix
Eigen::MatrixXd wedge_axis_matrix(int n, int k, int axis) {
    const DegreeTable& tab_in = DegreeTable::get(n, k);
    const DegreeTable& tab_out = DegreeTable::get(n, k + 1);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(tab_out.count(), tab_in.count());
    std::uint32_t bit = 1u << axis;
    for (int I = 0; I < tab_in.count(); ++I) {
        std::uint32_t m = tab_in.mask(I);
        if (m & bit) continue;
        E(tab_out.position(m | bit), I) = merge_sign(bit, m);
    }
    return E;
}

}  // namespace

BVForm d_nabla(const BVForm& alpha) {
    int n = alpha.n(), k = alpha.degree();
    BVForm out(alpha.bundle(), k + 1);
    if (alpha.empty() || out.empty()) return out;
    const auto& M = alpha.manifold();
    const auto& bundle = alpha.bundle();
    int C = alpha.num_indices(), m = alpha.rank();
    int Cout = out.num_indices();
    long long P = M->num_points();
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd E = wedge_axis_matrix(n, k, i);
        std::vector<double> der = M->partial_derivative(alpha.coeff(), i, C * m);
        bool flat = bundle->flat();
        for (long long p = 0; p < P; ++p) {
            const Eigen::MatrixXd* G = flat ? nullptr : &bundle->gamma(i, p);
            for (int I = 0; I < C; ++I) {
                for (int Ko = 0; Ko < Cout; ++Ko) {
                    double e = E(Ko, I);
                    if (e == 0.0) continue;
                    for (int a = 0; a < m; ++a) {
                        double v = der[(p * C + I) * m + a];
                        if (G)
                            for (int b = 0; b < m; ++b) v += (*G)(a, b) * alpha.at(p, I, b);
                        out.at(p, Ko, a) += e * v;
                    }
                }
            }
        }
    }
    return out;
}

BVForm d_truncated(const BVForm& alpha, const TruncationList& trunc) {
    if (trunc.kills_d_input(alpha.degree())) return BVForm(alpha.bundle(), alpha.degree() + 1);
    return d_nabla(alpha);
}

BVForm delta_nabla(const BVForm& beta) {
    int n = beta.n(), k = beta.degree();
    BVForm out(beta.bundle(), k - 1);
    if (beta.empty() || out.empty()) return out;
    const auto& M = beta.manifold();
    const auto& bundle = beta.bundle();
    int C = beta.num_indices(), m = beta.rank();
    int Cout = out.num_indices();
    long long P = M->num_points();
    const Eigen::MatrixXd& Gk = M->form_gram(k);
    const Eigen::MatrixXd& Gk1 = M->form_gram(k - 1);
    Eigen::MatrixXd Gk1_inv = Gk1.inverse();
    for (int i = 0; i < n; ++i) {
        // adjoint of (dx^i wedge) on the Lambda factor
        Eigen::MatrixXd A = Gk1_inv * wedge_axis_matrix(n, k - 1, i).transpose() * Gk;
        // u = A beta (per point), then v = -h^{-1} d_i(h u) + h^{-1} Gamma_i^T h u
        std::vector<double> hu(static_cast<std::size_t>(P) * Cout * m);
        for (long long p = 0; p < P; ++p) {
            const Eigen::MatrixXd& h = bundle->fiber_metric(p);
            for (int Ko = 0; Ko < Cout; ++Ko) {
                Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
                for (int I = 0; I < C; ++I) {
                    double a = A(Ko, I);
                    if (a == 0.0) continue;
                    for (int b = 0; b < m; ++b) u[b] += a * beta.at(p, I, b);
                }
                Eigen::VectorXd w = h * u;
                for (int b = 0; b < m; ++b) hu[(p * Cout + Ko) * m + b] = w[b];
            }
        }
        std::vector<double> dhu = M->partial_derivative(hu, i, Cout * m);
        bool flat = bundle->flat();
        for (long long p = 0; p < P; ++p) {
            const Eigen::MatrixXd& hinv = bundle->fiber_metric_inverse(p);
            for (int Ko = 0; Ko < Cout; ++Ko) {
                Eigen::VectorXd rhs(m);
                for (int b = 0; b < m; ++b) rhs[b] = -dhu[(p * Cout + Ko) * m + b];
                if (!flat) {
                    Eigen::VectorXd u(m);
                    for (int b = 0; b < m; ++b) u[b] = hu[(p * Cout + Ko) * m + b];
                    rhs += bundle->gamma(i, p).transpose() * u;  // Gamma^T (h u)
                }
                Eigen::VectorXd v = hinv * rhs;
                for (int b = 0; b < m; ++b) out.at(p, Ko, b) += v[b];
            }
        }
    }
    return out;
}

BVForm delta_truncated(const BVForm& beta, const TruncationList& trunc) {
    if (trunc.kills_delta_input(beta.degree())) return BVForm(beta.bundle(), beta.degree() - 1);
    return delta_nabla(beta);
}

PointwiseLinearOp::PointwiseLinearOp(BundlePtr in_bundle, int in_degree, BundlePtr out_bundle,
                                     int out_degree)
    : in_bundle_(std::move(in_bundle)), out_bundle_(std::move(out_bundle)),
      in_degree_(in_degree), out_degree_(out_degree) {
    long long P = in_bundle_->manifold()->num_points();
    int n = in_bundle_->manifold()->dim();
    int din = DegreeTable::get(n, in_degree_).count() * in_bundle_->rank();
    int dout = DegreeTable::get(n, out_degree_).count() * out_bundle_->rank();
    mats_.assign(P, Eigen::MatrixXd::Zero(dout, din));
}

BVForm PointwiseLinearOp::apply(const BVForm& x) const {
    if (x.degree() != in_degree_) throw std::invalid_argument("PointwiseLinearOp: degree mismatch");
    BVForm out(out_bundle_, out_degree_);
    if (x.empty()) return out;
    long long P = in_bundle_->manifold()->num_points();
    int din = static_cast<int>(mats_[0].cols());
    int dout = static_cast<int>(mats_[0].rows());
    for (long long p = 0; p < P; ++p) {
        Eigen::Map<const Eigen::VectorXd> xin(x.coeff().data() + p * din, din);
        Eigen::Map<Eigen::VectorXd> yout(out.coeff().data() + p * dout, dout);
        yout = mats_[p] * xin;
    }
    return out;
}

namespace {
Eigen::MatrixXd point_weight(const BundlePtr& bundle, int degree, long long p) {
    const auto& M = bundle->manifold();
    const Eigen::MatrixXd& G = M->form_gram(degree);
    const Eigen::MatrixXd& h = bundle->fiber_metric(p);
    int C = static_cast<int>(G.rows()), m = bundle->rank();
    Eigen::MatrixXd W(C * m, C * m);
    for (int I = 0; I < C; ++I)
        for (int J = 0; J < C; ++J) W.block(I * m, J * m, m, m) = G(I, J) * h;
    return W;
}
}  // namespace

PointwiseLinearOp PointwiseLinearOp::adjoint() const {
    PointwiseLinearOp adj(out_bundle_, out_degree_, in_bundle_, in_degree_);
    long long P = in_bundle_->manifold()->num_points();
    bool const_w = in_bundle_->constant_fiber_metric() && out_bundle_->constant_fiber_metric();
    Eigen::MatrixXd Win, Wout;
    Eigen::LDLT<Eigen::MatrixXd> solver;
    if (const_w) {
        Win = point_weight(in_bundle_, in_degree_, 0);
        Wout = point_weight(out_bundle_, out_degree_, 0);
        solver.compute(Win);
    }
    for (long long p = 0; p < P; ++p) {
        if (!const_w) {
            Win = point_weight(in_bundle_, in_degree_, p);
            Wout = point_weight(out_bundle_, out_degree_, p);
            solver.compute(Win);
        }
        adj.matrix(p) = solver.solve(mats_[p].transpose() * Wout);
    }
    return adj;
}

std::map<int, PointwiseLinearOp> materialize_pointwise(
    const std::function<MixedForm(const BVForm&)>& f, const BundlePtr& in_bundle, int in_degree,
    const BundlePtr& out_bundle) {
    const auto& M = in_bundle->manifold();
    int n = M->dim();
    int C = DegreeTable::get(n, in_degree).count();
    int m = in_bundle->rank();
    int din = C * m;
    long long P = M->num_points();
    std::vector<MixedForm> probes(din);
    for (int col = 0; col < din; ++col) {
        BVForm basis(in_bundle, in_degree);
        for (long long p = 0; p < P; ++p) basis.coeff()[p * din + col] = 1.0;
        probes[col] = f(basis);
    }
    std::map<int, PointwiseLinearOp> ops;
    for (int col = 0; col < din; ++col)
        for (const auto& [q, part] : probes[col].parts()) {
            auto it = ops.find(q);
            if (it == ops.end())
                it = ops.emplace(q, PointwiseLinearOp(in_bundle, in_degree, out_bundle, q)).first;
            int dout = part.num_indices() * part.rank();
            for (long long p = 0; p < P; ++p)
                for (int row = 0; row < dout; ++row)
                    it->second.matrix(p)(row, col) = part.coeff()[p * dout + row];
        }
    return ops;
}

Eigen::MatrixXd assemble_dense(const std::function<BVForm(const BVForm&)>& L,
                               const BundlePtr& in_bundle, int in_degree,
                               const BundlePtr& out_bundle, int out_degree) {
    const auto& M = in_bundle->manifold();
    int n = M->dim();
    long long P = M->num_points();
    long long din = P * DegreeTable::get(n, in_degree).count() * in_bundle->rank();
    long long dout = P * DegreeTable::get(n, out_degree).count() * out_bundle->rank();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dout, din);
    for (long long col = 0; col < din; ++col) {
        BVForm basis(in_bundle, in_degree);
        basis.coeff()[col] = 1.0;
        BVForm y = L(basis);
        if (y.empty()) continue;
        for (long long row = 0; row < dout; ++row) A(row, col) = y.coeff()[row];
    }
    return A;
}

Eigen::MatrixXd assemble_weight(const BundlePtr& bundle, int degree) {
    const auto& M = bundle->manifold();
    long long P = M->num_points();
    int block = DegreeTable::get(M->dim(), degree).count() * bundle->rank();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(P * block, P * block);
    for (long long p = 0; p < P; ++p)
        W.block(p * block, p * block, block, block) = M->cell_volume() * point_weight(bundle, degree, p);
    return W;
}

std::function<BVForm(const BVForm&)> linear_adjoint(
    const std::function<BVForm(const BVForm&)>& L, const BundlePtr& in_bundle, int in_degree,
    const BundlePtr& out_bundle, int out_degree) {
    Eigen::MatrixXd A = assemble_dense(L, in_bundle, in_degree, out_bundle, out_degree);
    Eigen::MatrixXd Win = assemble_weight(in_bundle, in_degree);
    Eigen::MatrixXd Wout = assemble_weight(out_bundle, out_degree);
    Eigen::MatrixXd Adj = Win.ldlt().solve(A.transpose() * Wout);
    return [Adj, in_bundle, in_degree](const BVForm& y) {
        BVForm x(in_bundle, in_degree);
        if (y.empty()) return x;
        Eigen::Map<const Eigen::VectorXd> yv(y.coeff().data(), y.coeff().size());
        Eigen::Map<Eigen::VectorXd> xv(x.coeff().data(), x.coeff().size());
        xv = Adj * yv;
        return x;
    };
}

}  // namespace cforms
