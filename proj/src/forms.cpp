#include "cforms/forms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cforms {

namespace {
double factorial(int j) {
    double f = 1.0;
    for (int i = 2; i <= j; ++i) f *= i;
    return f;
}

int permutation_sign(const std::vector<int>& perm) {
    int inversions = 0;
    for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = i + 1; j < perm.size(); ++j)
            if (perm[i] > perm[j]) ++inversions;
    return inversions % 2 == 0 ? 1 : -1;
}

// structural comparison: equal bundles may live behind distinct pointers
void check_same_shape(const BVForm& a, const BVForm& b) {
    if (a.manifold() != b.manifold() || a.degree() != b.degree() || a.rank() != b.rank() ||
        a.coeff().size() != b.coeff().size())
        throw std::invalid_argument("form shape mismatch");
}
}  // namespace

BVForm::BVForm(BundlePtr bundle, int degree) : bundle_(std::move(bundle)), degree_(degree) {
    if (!bundle_) throw std::invalid_argument("BVForm: null bundle");
    int n = bundle_->manifold()->dim();
    if (degree_ < 0 || degree_ > n) {
        num_indices_ = 0;  // structural zero (degree overflow)
        return;
    }
    num_indices_ = DegreeTable::get(n, degree_).count();
    coeff_.assign(static_cast<std::size_t>(bundle_->manifold()->num_points()) * num_indices_ *
                      bundle_->rank(),
                  0.0);
}

bool BVForm::is_zero(double tol) const {
    for (double v : coeff_)
        if (std::abs(v) > tol) return false;
    return true;
}

double BVForm::evaluate(long long point, const std::vector<int>& axes, int fiber) const {
    if (static_cast<int>(axes.size()) != degree_)
        throw std::invalid_argument("evaluate: wrong number of axes");
    if (empty()) return 0.0;
    TupleEval t = sort_tuple(axes);
    if (t.sign == 0) return 0.0;
    const DegreeTable& tab = DegreeTable::get(n(), degree_);
    return t.sign * at(point, tab.position(t.mask), fiber);
}

BVForm& BVForm::operator+=(const BVForm& other) {
    if (other.empty()) return *this;
    if (empty()) { *this = other; return *this; }
    check_same_shape(*this, other);
    for (std::size_t i = 0; i < coeff_.size(); ++i) coeff_[i] += other.coeff_[i];
    return *this;
}

BVForm& BVForm::operator-=(const BVForm& other) {
    if (other.empty()) return *this;
    if (empty()) { *this = other * -1.0; return *this; }
    check_same_shape(*this, other);
    for (std::size_t i = 0; i < coeff_.size(); ++i) coeff_[i] -= other.coeff_[i];
    return *this;
}

BVForm& BVForm::operator*=(double s) {
    for (double& v : coeff_) v *= s;
    return *this;
}

BVForm BVForm::operator*(double s) const { BVForm r = *this; r *= s; return r; }
BVForm BVForm::operator+(const BVForm& o) const { BVForm r = *this; r += o; return r; }
BVForm BVForm::operator-(const BVForm& o) const { BVForm r = *this; r -= o; return r; }

BVForm zero_form(const BundlePtr& bundle, int degree) { return BVForm(bundle, degree); }

MixedForm::MixedForm(BVForm part) { set(std::move(part)); }

bool MixedForm::is_zero(double tol) const {
    for (const auto& [k, part] : parts_)
        if (!part.is_zero(tol)) return false;
    return true;
}

void MixedForm::set(BVForm part) {
    if (part.empty()) return;
    parts_[part.degree()] = std::move(part);
}

void MixedForm::add(const BVForm& part) {
    if (part.empty()) return;
    auto it = parts_.find(part.degree());
    if (it == parts_.end())
        parts_.emplace(part.degree(), part);
    else
        it->second += part;
}

void MixedForm::add(const MixedForm& other) {
    for (const auto& [k, part] : other.parts_) add(part);
}

MixedForm& MixedForm::operator-=(const MixedForm& o) {
    for (const auto& [k, part] : o.parts()) add(part * -1.0);
    return *this;
}

MixedForm& MixedForm::operator*=(double s) {
    for (auto& [k, part] : parts_) part *= s;
    return *this;
}

MixedForm MixedForm::operator*(double s) const { MixedForm r = *this; r *= s; return r; }
MixedForm MixedForm::operator+(const MixedForm& o) const { MixedForm r = *this; r += o; return r; }
MixedForm MixedForm::operator-(const MixedForm& o) const { MixedForm r = *this; r -= o; return r; }

BVForm MixedForm::project(int k, const BundlePtr& bundle) const {
    if (k < 0 || k > bundle->manifold()->dim())
        throw std::invalid_argument("project: degree out of range");
    auto it = parts_.find(k);
    if (it != parts_.end()) return it->second;
    return BVForm(bundle, k);
}

BVForm MixedForm::project(int k) const {
    if (parts_.empty()) throw std::invalid_argument("project: empty mixed form has no bundle");
    return project(k, parts_.begin()->second.bundle());
}

BVForm wedge_bilinear(const BVForm& alpha, const BVForm& beta, const BilinearMap& map) {
    map.check();
    if (alpha.bundle()->manifold() != beta.bundle()->manifold())
        throw std::invalid_argument("wedge_bilinear: manifold mismatch");
    if (alpha.bundle()->rank() != map.source->rank() || beta.bundle()->rank() != map.source->rank())
        throw std::invalid_argument("wedge_bilinear: bundle rank mismatch with map source");
    int n = alpha.n(), k = alpha.degree(), l = beta.degree();
    BVForm out(map.target, k + l);
    if (out.empty() || alpha.empty() || beta.empty()) return out;
    const DegreeTable& tab_out = DegreeTable::get(n, k + l);
    const DegreeTable& tab_a = DegreeTable::get(n, k);
    const DegreeTable& tab_b = DegreeTable::get(n, l);
    int ms = map.source->rank(), mt = map.target->rank();
    long long P = alpha.manifold()->num_points();
    // precompute split lists per output index
    std::vector<std::vector<Shuffle>> splits(tab_out.count());
    for (int K = 0; K < tab_out.count(); ++K) splits[K] = shuffles(tab_out.mask(K), k);
    for (long long p = 0; p < P; ++p) {
        for (int K = 0; K < tab_out.count(); ++K) {
            for (const Shuffle& sh : splits[K]) {
                int ia = tab_a.position(sh.first);
                int ib = tab_b.position(sh.second);
                for (int a = 0; a < ms; ++a) {
                    double va = alpha.at(p, ia, a);
                    if (va == 0.0) continue;
                    for (int b = 0; b < ms; ++b) {
                        double vb = beta.at(p, ib, b);
                        if (vb == 0.0) continue;
                        double f = sh.sign * va * vb;
                        for (int cp = 0; cp < mt; ++cp) {
                            double c = map.coeff(a, b, cp);
                            if (c != 0.0) out.at(p, K, cp) += f * c;
                        }
                    }
                }
            }
        }
    }
    return out;
}

BVForm wedge_bilinear_reference(const BVForm& alpha, const BVForm& beta, const BilinearMap& map) {
    map.check();
    int n = alpha.n(), k = alpha.degree(), l = beta.degree();
    BVForm out(map.target, k + l);
    if (out.empty() || alpha.empty() || beta.empty()) return out;
    const DegreeTable& tab_out = DegreeTable::get(n, k + l);
    int ms = map.source->rank(), mt = map.target->rank();
    long long P = alpha.manifold()->num_points();
    double norm = 1.0 / (factorial(k) * factorial(l));
    for (long long p = 0; p < P; ++p) {
        for (int K = 0; K < tab_out.count(); ++K) {
            std::vector<int> axes = tab_out.axes(K);
            std::vector<int> perm(axes.size());
            for (std::size_t i = 0; i < axes.size(); ++i) perm[i] = static_cast<int>(i);
            // iterate all (k+l)! permutations with explicit sign tracking
            std::sort(perm.begin(), perm.end());
            do {
                int sign = permutation_sign(perm);
                std::vector<int> first(perm.begin(), perm.begin() + k);
                std::vector<int> second(perm.begin() + k, perm.end());
                for (auto& v : first) v = axes[v];
                for (auto& v : second) v = axes[v];
                for (int a = 0; a < ms; ++a) {
                    double va = alpha.evaluate(p, first, a);
                    if (va == 0.0) continue;
                    for (int b = 0; b < ms; ++b) {
                        double vb = beta.evaluate(p, second, b);
                        if (vb == 0.0) continue;
                        for (int cp = 0; cp < mt; ++cp) {
                            double c = map.coeff(a, b, cp);
                            if (c != 0.0) out.at(p, K, cp) += norm * sign * va * vb * c;
                        }
                    }
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
        }
    }
    return out;
}

BVForm wedge_scalar(const BVForm& scalar, const BVForm& alpha) {
    if (scalar.rank() != 1) throw std::invalid_argument("wedge_scalar: scalar form must have rank 1");
    if (scalar.manifold() != alpha.manifold())
        throw std::invalid_argument("wedge_scalar: manifold mismatch");
    int n = alpha.n(), pdeg = scalar.degree(), k = alpha.degree();
    BVForm out(alpha.bundle(), pdeg + k);
    if (out.empty() || scalar.empty() || alpha.empty()) return out;
    const DegreeTable& tab_out = DegreeTable::get(n, pdeg + k);
    const DegreeTable& tab_s = DegreeTable::get(n, pdeg);
    const DegreeTable& tab_a = DegreeTable::get(n, k);
    int m = alpha.rank();
    long long P = alpha.manifold()->num_points();
    std::vector<std::vector<Shuffle>> splits(tab_out.count());
    for (int K = 0; K < tab_out.count(); ++K) splits[K] = shuffles(tab_out.mask(K), pdeg);
    for (long long p = 0; p < P; ++p)
        for (int K = 0; K < tab_out.count(); ++K)
            for (const Shuffle& sh : splits[K]) {
                double vs = scalar.at(p, tab_s.position(sh.first), 0);
                if (vs == 0.0) continue;
                int ia = tab_a.position(sh.second);
                for (int a = 0; a < m; ++a) out.at(p, K, a) += sh.sign * vs * alpha.at(p, ia, a);
            }
    return out;
}

namespace {

MixedForm act_fiberwise(const BVForm& rho, const BVForm& gamma, const ActionSpec& action,
                        Side side) {
    int n = rho.n(), s = rho.degree(), i = gamma.degree();
    BVForm out(rho.bundle(), s + i);
    if (out.empty() || rho.empty() || gamma.empty()) return MixedForm(std::move(out));
    const DegreeTable& tab_out = DegreeTable::get(n, s + i);
    const DegreeTable& tab_r = DegreeTable::get(n, s);
    const DegreeTable& tab_g = DegreeTable::get(n, i);
    int ma = action.acting->rank(), me = rho.rank();
    long long P = rho.manifold()->num_points();
    // left: gamma slots first; right: rho slots first
    int first_deg = (side == Side::Left) ? i : s;
    for (long long p = 0; p < P; ++p)
        for (int K = 0; K < tab_out.count(); ++K)
            for (const Shuffle& sh : shuffles(tab_out.mask(K), first_deg)) {
                std::uint32_t mg = (side == Side::Left) ? sh.first : sh.second;
                std::uint32_t mr = (side == Side::Left) ? sh.second : sh.first;
                int ig = tab_g.position(mg);
                int ir = tab_r.position(mr);
                for (int a = 0; a < ma; ++a) {
                    double vg = gamma.at(p, ig, a);
                    if (vg == 0.0) continue;
                    for (int b = 0; b < me; ++b) {
                        double vr = rho.at(p, ir, b);
                        if (vr == 0.0) continue;
                        double f = sh.sign * vg * vr;
                        for (int c = 0; c < me; ++c) {
                            double t = action.coeff(a, b, c);
                            if (t != 0.0) out.at(p, K, c) += f * t;
                        }
                    }
                }
            }
    return MixedForm(std::move(out));
}

MixedForm act_insertion(const BVForm& rho, const BVForm& gamma, const ActionSpec& action) {
    int n = rho.n(), s = rho.degree(), i = gamma.degree();
    if (rho.rank() != n)
        throw std::invalid_argument("act: insertion requires a tangent-valued form");
    if (!gamma.bundle()->has_grading())
        throw std::invalid_argument("act: insertion requires a graded acting bundle");
    MixedForm result;
    long long P = rho.manifold()->num_points();
    const DegreeTable& tab_r = DegreeTable::get(n, s);
    const DegreeTable& tab_g = DegreeTable::get(n, i);
    int grades = static_cast<int>(gamma.bundle()->grading().size());
    for (int j = 0; j < grades; ++j) {
        int t = s - j + i;
        if (s < j || t < 0 || t > n) continue;  // case split / degree overflow
        // skip grade blocks the acting value never touches, so the output
        // carries only the degrees that can actually be hit
        if (!gamma.empty()) {
            const int off = gamma.bundle()->grade_offset(j);
            const int gj = gamma.bundle()->grading()[j];
            const int gr = gamma.rank();
            bool hit = false;
            for (long long p = 0; p < P && !hit; ++p)
                for (int ig = 0; ig < gamma.num_indices() && !hit; ++ig)
                    for (int A = 0; A < gj; ++A)
                        if (gamma.coeff()[(p * gamma.num_indices() + ig) * gr + off + A] != 0.0) {
                            hit = true;
                            break;
                        }
            if (!hit) continue;
        }
        BVForm out(rho.bundle(), t);
        if (!rho.empty() && !gamma.empty()) {
            const DegreeTable& tab_out = DegreeTable::get(n, t);
            const DegreeTable& tab_j = DegreeTable::get(n, j);
            int off = gamma.bundle()->grade_offset(j);
            double inv_jfact = 1.0 / factorial(j);
            std::vector<std::vector<Shuffle>> splits(tab_out.count());
            for (int K = 0; K < tab_out.count(); ++K) splits[K] = shuffles(tab_out.mask(K), s - j);
            for (long long p = 0; p < P; ++p)
                for (int K = 0; K < tab_out.count(); ++K)
                    for (const Shuffle& sh : splits[K]) {
                        int ig = tab_g.position(sh.second);
                        for (int A = 0; A < tab_j.count(); ++A) {
                            double vg = gamma.at(p, ig, off + A);
                            if (vg == 0.0) continue;
                            std::uint32_t am = tab_j.mask(A);
                            if (am & sh.first) continue;  // repeated argument
                            int sgn2 = merge_sign(sh.first, am);
                            int ir = tab_r.position(sh.first | am);
                            double f = sh.sign * sgn2 * inv_jfact * vg;
                            for (int c = 0; c < n; ++c)
                                out.at(p, K, c) += f * rho.at(p, ir, c);
                        }
                    }
        }
        result.add(out);
    }
    return result;
}

}  // namespace

MixedForm act(const BVForm& rho, const BVForm& gamma, const ActionSpec& action, Side side) {
    if (!action.acting || !action.target) throw std::invalid_argument("act: incomplete action spec");
    if (gamma.bundle()->rank() != action.acting->rank())
        throw std::invalid_argument("act: acting bundle mismatch");
    if (rho.bundle()->rank() != action.target->rank())
        throw std::invalid_argument("act: target bundle mismatch");
    if (rho.manifold() != gamma.manifold()) throw std::invalid_argument("act: manifold mismatch");
    if (action.kind == ActionKind::Insertion) {
        if (side != Side::Right)
            throw std::invalid_argument("act: insertion is a right action");
        return act_insertion(rho, gamma, action);
    }
    return act_fiberwise(rho, gamma, action, side);
}

MixedForm act(const MixedForm& rho, const BVForm& gamma, const ActionSpec& action, Side side) {
    MixedForm result;
    for (const auto& [k, part] : rho.parts()) result.add(act(part, gamma, action, side));
    return result;
}

BVForm hodge_star(const BVForm& alpha) {
    int n = alpha.n(), k = alpha.degree();
    BVForm out(alpha.bundle(), n - k);
    if (alpha.empty() || out.empty()) return out;
    const auto& M = alpha.manifold();
    const DegreeTable& tab_k = DegreeTable::get(n, k);
    const DegreeTable& tab_c = DegreeTable::get(n, n - k);
    const Eigen::MatrixXd& G = M->form_gram(k);
    double sq = M->volume_density();
    std::uint32_t full = (1u << n) - 1;
    int C = tab_k.count(), m = alpha.rank();
    long long P = M->num_points();
    // positions and signs of complements
    std::vector<int> comp_pos(C);
    std::vector<int> comp_sign(C);
    for (int I = 0; I < C; ++I) {
        std::uint32_t cm = full & ~tab_k.mask(I);
        comp_pos[I] = tab_c.position(cm);
        comp_sign[I] = merge_sign(tab_k.mask(I), cm);
    }
    for (long long p = 0; p < P; ++p)
        for (int I = 0; I < C; ++I) {
            for (int a = 0; a < m; ++a) {
                double raised = 0.0;
                for (int J = 0; J < C; ++J) raised += G(I, J) * alpha.at(p, J, a);
                out.at(p, comp_pos[I], a) = sq * comp_sign[I] * raised;
            }
        }
    return out;
}

BundlePtr scalar_bundle(const ManifoldPtr& manifold) {
    return std::make_shared<BundleSpec>(manifold, 1);
}

BVForm wedge_hE(const BVForm& alpha, const BVForm& beta) {
    if (alpha.bundle()->rank() != beta.bundle()->rank() || alpha.manifold() != beta.manifold())
        throw std::invalid_argument("wedge_hE: bundle mismatch");
    int n = alpha.n(), k = alpha.degree(), l = beta.degree();
    BVForm out(scalar_bundle(alpha.manifold()), k + l);
    if (out.empty() || alpha.empty() || beta.empty()) return out;
    const DegreeTable& tab_out = DegreeTable::get(n, k + l);
    const DegreeTable& tab_a = DegreeTable::get(n, k);
    const DegreeTable& tab_b = DegreeTable::get(n, l);
    int m = alpha.rank();
    long long P = alpha.manifold()->num_points();
    for (long long p = 0; p < P; ++p) {
        const Eigen::MatrixXd& h = alpha.bundle()->fiber_metric(p);
        for (int K = 0; K < tab_out.count(); ++K)
            for (const Shuffle& sh : shuffles(tab_out.mask(K), k)) {
                int ia = tab_a.position(sh.first);
                int ib = tab_b.position(sh.second);
                double acc = 0.0;
                for (int a = 0; a < m; ++a) {
                    double va = alpha.at(p, ia, a);
                    if (va == 0.0) continue;
                    for (int b = 0; b < m; ++b) acc += va * h(a, b) * beta.at(p, ib, b);
                }
                out.at(p, K, 0) += sh.sign * acc;
            }
    }
    return out;
}

std::vector<double> pointwise_inner(const BVForm& alpha, const BVForm& beta) {
    if (alpha.degree() != beta.degree() || alpha.bundle()->rank() != beta.bundle()->rank() ||
        alpha.manifold() != beta.manifold())
        throw std::invalid_argument("pointwise_inner: shape mismatch");
    long long P = alpha.manifold()->num_points();
    std::vector<double> out(P, 0.0);
    if (alpha.empty() || beta.empty()) return out;
    const Eigen::MatrixXd& G = alpha.manifold()->form_gram(alpha.degree());
    int C = alpha.num_indices(), m = alpha.rank();
    for (long long p = 0; p < P; ++p) {
        const Eigen::MatrixXd& h = alpha.bundle()->fiber_metric(p);
        double acc = 0.0;
        for (int I = 0; I < C; ++I)
            for (int J = 0; J < C; ++J) {
                double g = G(I, J);
                if (g == 0.0) continue;
                for (int a = 0; a < m; ++a) {
                    double va = alpha.at(p, I, a);
                    if (va == 0.0) continue;
                    for (int b = 0; b < m; ++b) acc += g * va * h(a, b) * beta.at(p, J, b);
                }
            }
        out[p] = acc;
    }
    return out;
}

double l2_inner(const BVForm& a, const BVForm& b) {
    if (a.empty() || b.empty()) return 0.0;
    return a.manifold()->integrate(pointwise_inner(a, b));
}

double l2_inner(const MixedForm& a, const MixedForm& b) {
    double sum = 0.0;
    for (const auto& [k, part] : a.parts()) {
        auto it = b.parts().find(k);
        if (it != b.parts().end()) sum += l2_inner(part, it->second);
    }
    return sum;
}

double l2_norm(const BVForm& a) { return std::sqrt(std::max(0.0, l2_inner(a, a))); }
double l2_norm(const MixedForm& a) { return std::sqrt(std::max(0.0, l2_inner(a, a))); }

}  // namespace cforms
