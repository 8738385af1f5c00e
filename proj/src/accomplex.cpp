#include "cforms/accomplex.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace cforms {

namespace {

Eigen::MatrixXd block_J0(int n) {
    Eigen::MatrixXd J0 = Eigen::MatrixXd::Zero(n, n);
    for (int t = 0; t + 1 < n; t += 2) {
        J0(t, t + 1) = -1.0;
        J0(t + 1, t) = 1.0;
    }
    return J0;
}

struct TrigMode {
    Eigen::MatrixXd amp;
    std::vector<int> freq;  // one integer per participating axis
    double phase;
};

// Smooth periodic matrix field from a handful of seeded low-frequency
// modes over the listed axes; independent of the grid resolution.
std::vector<TrigMode> seeded_modes(std::mt19937_64& rng, int size, const std::vector<int>& axes,
                                   int count) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<int> freq(-2, 2);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::vector<TrigMode> modes;
    for (int m = 0; m < count; ++m) {
        TrigMode mode;
        mode.amp = Eigen::MatrixXd(size, size);
        for (int a = 0; a < size; ++a)
            for (int b = 0; b < size; ++b) mode.amp(a, b) = coeff(rng);
        mode.freq.resize(axes.size());
        bool nonzero = false;
        do {
            for (std::size_t i = 0; i < axes.size(); ++i) {
                mode.freq[i] = freq(rng);
                if (mode.freq[i] != 0) nonzero = true;
            }
        } while (!nonzero);
        mode.phase = phase(rng);
        modes.push_back(std::move(mode));
    }
    return modes;
}

Eigen::MatrixXd eval_modes(const std::vector<TrigMode>& modes, const GridManifold& m,
                           long long point, const std::vector<int>& axes, int size) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(size, size);
    for (const auto& mode : modes) {
        double arg = mode.phase;
        for (std::size_t i = 0; i < axes.size(); ++i)
            arg += mode.freq[i] * 2.0 * M_PI * m.coordinate(point, axes[i]) /
                   m.side_lengths()[axes[i]];
        S += std::cos(arg) * mode.amp;
    }
    return S;
}

void store_matrix(BVForm& J, long long point, const Eigen::MatrixXd& M) {
    const int n = J.n();
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) J.at(point, i, a) = M(a, i);
}

}  // namespace

double ACStructure::defect() const {
    const int n = J.n();
    const long long np = manifold()->num_points();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    double worst = 0.0;
    for (long long p = 0; p < np; ++p) {
        Eigen::MatrixXd M(n, n);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a) M(a, i) = J.at(p, i, a);
        worst = std::max(worst, (M * M + id).norm());
    }
    return worst;
}

ACStructure standard_J(const ManifoldPtr& manifold) {
    const int n = manifold->dim();
    if (n % 2 != 0) throw std::invalid_argument("standard_J: dimension must be even");
    ACStructure out{BVForm(tangent_bundle(manifold), 1)};
    const Eigen::MatrixXd J0 = block_J0(n);
    const long long np = manifold->num_points();
    for (long long p = 0; p < np; ++p) store_matrix(out.J, p, J0);
    return out;
}

ACStructure random_J(const ManifoldPtr& manifold, std::uint64_t seed, double amplitude) {
    const int n = manifold->dim();
    if (n % 2 != 0) throw std::invalid_argument("random_J: dimension must be even");
    if (amplitude < 0) throw std::invalid_argument("random_J: amplitude must be >= 0");
    std::mt19937_64 rng(seed);
    std::vector<int> axes(n);
    for (int i = 0; i < n; ++i) axes[i] = i;
    const auto modes = seeded_modes(rng, n, axes, 3);
    const Eigen::MatrixXd J0 = block_J0(n);
    ACStructure out{BVForm(tangent_bundle(manifold), 1)};
    const long long np = manifold->num_points();
    for (long long p = 0; p < np; ++p) {
        Eigen::MatrixXd S = amplitude * eval_modes(modes, *manifold, p, axes, n);
        Eigen::MatrixXd Q = S.exp();
        store_matrix(out.J, p, Q * J0 * Q.inverse());
    }
    return out;
}

ACStructure product_J(const ManifoldPtr& manifold, std::uint64_t seed, double amplitude) {
    const int n = manifold->dim();
    if (n % 2 != 0) throw std::invalid_argument("product_J: dimension must be even");
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd J0 = block_J0(2);
    struct Factor {
        std::vector<int> axes;
        std::vector<TrigMode> modes;
    };
    std::vector<Factor> factors;
    for (int t = 0; t + 1 < n; t += 2)
        factors.push_back({{t, t + 1}, seeded_modes(rng, 2, {t, t + 1}, 3)});
    ACStructure out{BVForm(tangent_bundle(manifold), 1)};
    const long long np = manifold->num_points();
    for (long long p = 0; p < np; ++p) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t f = 0; f < factors.size(); ++f) {
            Eigen::MatrixXd S =
                amplitude * eval_modes(factors[f].modes, *manifold, p, factors[f].axes, 2);
            Eigen::MatrixXd Q = S.exp();
            M.block<2, 2>(2 * f, 2 * f) = Q * J0 * Q.inverse();
        }
        store_matrix(out.J, p, M);
    }
    return out;
}

std::vector<double> nijenhuis(const ACStructure& J) {
    const auto& m = *J.manifold();
    const int n = m.dim();
    const long long np = m.num_points();
    // d_d of every coefficient of J at once: fiber stride n*n
    std::vector<std::vector<double>> dJ(n);
    for (int d = 0; d < n; ++d) dJ[d] = m.partial_derivative(J.J.coeff(), d, n * n);

    std::vector<double> N(static_cast<std::size_t>(np) * n * n * n, 0.0);
    auto Jc = [&](long long p, int a, int i) { return J.J.at(p, i, a); };
    auto dJc = [&](int d, long long p, int a, int i) {
        return dJ[d][(p * n + i) * n + a];
    };
    for (long long p = 0; p < np; ++p)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                for (int c = 0; c < n; ++c) {
                    double v = 0.0;
                    for (int d = 0; d < n; ++d)
                        v += Jc(p, d, a) * dJc(d, p, c, b) - Jc(p, d, b) * dJc(d, p, c, a) +
                             Jc(p, c, d) * (dJc(b, p, d, a) - dJc(a, p, d, b));
                    N[((static_cast<std::size_t>(p) * n + a) * n + b) * n + c] = v;
                }
            }
    return N;
}

double nijenhuis_l2(const ACStructure& J) {
    const auto& m = *J.manifold();
    std::vector<double> N = nijenhuis(J);
    double s = 0.0;
    for (double v : N) s += v * v;
    return std::sqrt(m.cell_volume() * s);
}

OperatorSpec ac_operator_spec(const BundlePtr& tangent) {
    const auto& m = tangent->manifold();
    OperatorSpec spec;
    spec.bundle = tangent;
    spec.a = {0.0, 0.0, 1.0, -1.0};
    spec.psi = polyvector_wedge(m);
    ActionSpec ins;
    ins.kind = ActionKind::Insertion;
    ins.acting = spec.psi->target;
    ins.target = tangent;
    spec.right_action = ins;
    spec.k = 1;
    spec.trunc = m->dim() >= 4 ? TruncationList{1, 3} : TruncationList{1};
    return spec;
}

std::pair<double, double> integrability_residual(const ACStructure& J, const BundlePtr& tangent) {
    if (torsion_check(tangent) > 1e-12)
        throw std::invalid_argument("integrability_residual: connection has torsion");
    OperatorSpec spec = ac_operator_spec(tangent);
    require_valid(spec);
    return {l2_norm(apply_P(spec, J.J)), nijenhuis_l2(J)};
}

double alpha_residual(const ACStructure& J, const BVForm& alpha) {
    OperatorSpec spec = ac_operator_spec(tangent_bundle(J.manifold()));
    spec.alpha = alpha;
    require_valid(spec);
    return l2_norm(apply_P_alpha(spec, J.J));
}

}  // namespace cforms
