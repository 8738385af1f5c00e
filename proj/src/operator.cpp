#include "cforms/operator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

namespace cforms {

namespace {

// fiber grades of the target bundle actually hit by the map's tensor;
// -1 stands for "ungraded"
std::set<int> map_grades(const BilinearMap& m) {
    std::set<int> out;
    const int sr = m.source->rank();
    const int tr = m.target->rank();
    for (int a = 0; a < sr; ++a)
        for (int b = 0; b < sr; ++b)
            for (int cp = 0; cp < tr; ++cp)
                if (m.coeff(a, b, cp) != 0.0)
                    out.insert(m.target->has_grading() ? m.target->grade_of_fiber(cp) : -1);
    return out;
}

std::vector<int> action_out_degrees(const ActionSpec& action, int acting_deg, int target_deg,
                                    const std::set<int>& grades, int n) {
    std::vector<int> out;
    if (acting_deg < 0 || acting_deg > n || target_deg < 0 || target_deg > n) return out;
    if (action.kind == ActionKind::FiberwiseBilinear) {
        if (acting_deg + target_deg <= n) out.push_back(acting_deg + target_deg);
        return out;
    }
    std::set<int> degs;
    for (int j : grades) {
        if (j < 0) continue;           // ungraded value cannot insert
        if (target_deg < j) continue;  // fewer form slots than insertion slots
        int t = target_deg - j + acting_deg;
        if (t >= 0 && t <= n) degs.insert(t);
    }
    out.assign(degs.begin(), degs.end());
    return out;
}

double sup_norm(const BVForm& f) {
    double m = 0.0;
    for (double v : f.coeff()) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const MixedForm& m) {
    for (const auto& [deg, part] : m.parts()) {
        (void)deg;
        for (double v : part.coeff())
            if (!std::isfinite(v)) return false;
    }
    return true;
}

BVForm safe_wedge(const BVForm& x, const BVForm& y, const BilinearMap& m) {
    if (x.empty() || y.empty()) return BVForm();
    if (x.degree() + y.degree() > x.n()) return BVForm();
    return wedge_bilinear(x, y, m);
}

MixedForm safe_act(const BVForm& rho, const BVForm& gamma, const ActionSpec& action, Side side) {
    if (rho.empty() || gamma.empty()) return MixedForm();
    return act(rho, gamma, action, side);
}

MixedForm safe_act(const MixedForm& rho, const BVForm& gamma, const ActionSpec& action, Side side) {
    if (rho.parts().empty() || gamma.empty()) return MixedForm();
    return act(rho, gamma, action, side);
}

MixedForm alpha_wrap(const OperatorSpec& spec, const MixedForm& m) {
    if (!spec.alpha) return m;
    MixedForm out;
    const int n = spec.bundle->manifold()->dim();
    for (const auto& [deg, part] : m.parts()) {
        if (deg + spec.alpha->degree() > n) continue;
        BVForm w = wedge_scalar(*spec.alpha, part);
        if (!w.empty()) out.add(w);
    }
    return out;
}

}  // namespace

QDegrees q_degrees(const OperatorSpec& spec, int l) {
    QDegrees out;
    const int n = spec.bundle->manifold()->dim();
    if (l < 0 || l > n) return out;
    const int dD = l + 1;  // degree of d rho_l; every term carries it
    if (dD > n) return out;
    const int dPair = 2 * l;  // degree of rho_l ^ rho_l

    std::vector<int> q3;
    if (spec.psi && spec.right_action && dPair <= n)
        q3 = action_out_degrees(*spec.right_action, dPair, dD, map_grades(*spec.psi), n);

    std::vector<int> q2;
    if (spec.phi && spec.left_action && dPair <= n)
        q2 = action_out_degrees(*spec.left_action, dPair, dD, map_grades(*spec.phi), n);

    std::vector<int> q1;
    if (spec.phi && spec.left_action && dPair <= n) {
        std::set<int> degs;
        for (int t : q3)
            for (int u : action_out_degrees(*spec.left_action, dPair, t, map_grades(*spec.phi), n))
                degs.insert(u);
        q1.assign(degs.begin(), degs.end());
    }
    out.degrees = {q1, q2, q3};
    return out;
}

std::string ValidationReport::to_string() const {
    if (violations.empty()) return "valid";
    std::ostringstream os;
    for (const auto& v : violations)
        os << v.constraint << " (i=" << v.i << ", l=" << v.l << "): " << v.message << "\n";
    return os.str();
}

ValidationReport validate(const OperatorSpec& spec) {
    ValidationReport rep;
    auto bad = [&](const std::string& c, int i, int l, const std::string& m) {
        rep.violations.push_back({c, i, l, m});
    };
    if (!spec.bundle) {
        bad("bundle", 0, -1, "no bundle configured");
        return rep;
    }
    const int n = spec.bundle->manifold()->dim();
    const auto& a = spec.a;
    if (spec.k < 0 || spec.k > n) bad("k_range", 0, spec.k, "structure degree outside [0, n]");
    try {
        spec.trunc.validate(n);
    } catch (const std::exception& e) {
        bad("truncation", 0, -1, e.what());
    }
    if ((a[0] != 0 || a[1] != 0) && (!spec.phi || !spec.left_action))
        bad("missing_phi", a[0] != 0 ? 1 : 2, -1, "a1/a2 nonzero but phi or the left action is missing");
    if ((a[0] != 0 || a[2] != 0) && (!spec.psi || !spec.right_action))
        bad("missing_psi", a[0] != 0 ? 1 : 3, -1, "a1/a3 nonzero but psi or the right action is missing");
    if (spec.left_action && spec.left_action->kind == ActionKind::Insertion)
        bad("left_insertion", 0, -1, "insertion is only available as a right action");
    if (!rep.valid()) return rep;  // degree bookkeeping needs a structurally complete spec

    for (int l = 0; l <= n; ++l) {
        QDegrees q = q_degrees(spec, l);
        for (int i = 1; i <= 3; ++i) {
            if (a[i - 1] == 0) continue;
            for (int t : q.q(i))
                if (t == spec.k)
                    bad("q_clash", i, l,
                        "q_a" + std::to_string(i) + "(" + std::to_string(l) + ") = k");
        }
    }
    {
        QDegrees qk = q_degrees(spec, spec.k);
        for (int i = 1; i <= 3; ++i) {
            if (a[i - 1] == 0) continue;
            const auto& s = qk.q(i);
            if (s.size() != 1 || s[0] != spec.k + 1)
                bad("degree_one", i, spec.k,
                    "q_a" + std::to_string(i) + "(k) must equal k+1");
        }
        if (a[3] != 0 && spec.k + 1 > n)
            bad("degree_one", 4, spec.k, "d of a degree-k form exceeds the top degree");
    }
    if (spec.alpha) {
        const int p = spec.alpha->degree();
        if (spec.alpha->empty() || p < 1 || p > n - spec.k - 1)
            bad("alpha_degree", 0, p, "alpha degree outside [1, n-k-1]");
        else if (spec.alpha->is_zero())
            bad("alpha_zero", 0, -1, "alpha vanishes identically");
        else {
            double closure = sup_norm(d_nabla(*spec.alpha));
            if (closure > 1e-10)
                bad("alpha_closed", 0, -1,
                    "d alpha has sup norm " + std::to_string(closure));
        }
        for (int l = 0; l <= n; ++l) {
            QDegrees q = q_degrees(spec, l);
            for (int i = 1; i <= 3; ++i) {
                if (a[i - 1] == 0) continue;
                for (int t : q.q(i))
                    if (p == spec.k - t)
                        bad("alpha_q_clash", i, l,
                            "p = k - q_a" + std::to_string(i) + "(" + std::to_string(l) + ")");
            }
        }
    }
    return rep;
}

void require_valid(const OperatorSpec& spec) {
    ValidationReport rep = validate(spec);
    if (!rep.valid()) throw std::invalid_argument("invalid operator spec:\n" + rep.to_string());
}

MixedForm apply_P(const OperatorSpec& spec, const BVForm& rho) {
    MixedForm out;
    if (rho.empty()) return out;
    const auto& a = spec.a;
    BVForm D = d_truncated(rho, spec.trunc);
    if (D.empty()) return out;

    BVForm Phi, Psi;
    if ((a[0] != 0 || a[1] != 0) && spec.phi) Phi = safe_wedge(rho, rho, *spec.phi);
    if ((a[0] != 0 || a[2] != 0) && spec.psi) Psi = safe_wedge(rho, rho, *spec.psi);

    MixedForm R;
    if ((a[0] != 0 || a[2] != 0) && spec.right_action)
        R = safe_act(D, Psi, *spec.right_action, Side::Right);

    if (a[0] != 0 && spec.left_action) out += safe_act(R, Phi, *spec.left_action, Side::Left) * a[0];
    if (a[1] != 0 && spec.left_action)
        out += safe_act(MixedForm(D), Phi, *spec.left_action, Side::Left) * a[1];
    if (a[2] != 0) out += R * a[2];
    if (a[3] != 0) out.add(D * a[3]);
    return out;
}

MixedForm apply_P_alpha(const OperatorSpec& spec, const BVForm& rho) {
    if (!spec.alpha) throw std::invalid_argument("apply_P_alpha: spec has no alpha");
    return alpha_wrap(spec, apply_P(spec, rho));
}

MixedForm apply_P_total(const OperatorSpec& spec, const MixedForm& gamma) {
    MixedForm out;
    for (const auto& [deg, part] : gamma.parts()) {
        (void)deg;
        out += spec.alpha ? apply_P_alpha(spec, part) : apply_P(spec, part);
    }
    return out;
}

double functional(const OperatorSpec& spec, const MixedForm& gamma) {
    if (!spec.trunc.contains(spec.k))
        throw std::invalid_argument("functional: truncation list must contain the structure degree");
    return l2_inner(apply_P_total(spec, gamma), gamma);
}

MixedForm gradient(const OperatorSpec& spec, const MixedForm& gamma) {
    if (!spec.trunc.contains(spec.k))
        throw std::invalid_argument("gradient: truncation list must contain the structure degree");
    const auto& a = spec.a;
    const BundlePtr& E = spec.bundle;
    const int n = E->manifold()->dim();
    MixedForm grad;

    for (int r = 0; r <= n; ++r) {
        BVForm gr = gamma.project(r, E);
        const bool rho_zero = gr.is_zero(0.0);

        // the P-summand term: <P(gamma_r), beta> pairs against beta directly
        if (!rho_zero) grad += spec.alpha ? apply_P_alpha(spec, gr) : apply_P(spec, gr);

        BVForm D, Phi, Psi;
        MixedForm R;
        if (!rho_zero) {
            D = d_truncated(gr, spec.trunc);
            if ((a[0] != 0 || a[1] != 0) && spec.phi) Phi = safe_wedge(gr, gr, *spec.phi);
            if ((a[0] != 0 || a[2] != 0) && spec.psi) Psi = safe_wedge(gr, gr, *spec.psi);
            if ((a[0] != 0 || a[2] != 0) && spec.right_action)
                R = safe_act(D, Psi, *spec.right_action, Side::Right);
        }

        // derivative through the d-slot: B_r applied to d beta_r, so the
        // adjoint contributes delta[trunc] B_r^* gamma at degree r
        if (r + 1 <= n) {
            if (rho_zero && !spec.alpha) {
                if (a[3] != 0) {
                    BVForm g_next = gamma.project(r + 1, E);
                    if (!g_next.is_zero(0.0))
                        grad.add(delta_truncated(g_next * a[3], spec.trunc));
                }
            } else {
                auto Bfun = [&](const BVForm& X) -> MixedForm {
                    MixedForm out;
                    if (!rho_zero) {
                        MixedForm RX;
                        if ((a[0] != 0 || a[2] != 0) && spec.right_action)
                            RX = safe_act(X, Psi, *spec.right_action, Side::Right);
                        if (a[0] != 0 && spec.left_action)
                            out += safe_act(RX, Phi, *spec.left_action, Side::Left) * a[0];
                        if (a[1] != 0 && spec.left_action)
                            out += safe_act(MixedForm(X), Phi, *spec.left_action, Side::Left) * a[1];
                        if (a[2] != 0) out += RX * a[2];
                    }
                    if (a[3] != 0) out.add(X * a[3]);
                    return alpha_wrap(spec, out);
                };
                auto ops = materialize_pointwise(Bfun, E, r + 1, E);
                BVForm acc(E, r + 1);
                bool any = false;
                for (const auto& [q, op] : ops) {
                    BVForm gq = gamma.project(q, E);
                    if (gq.is_zero(0.0)) continue;
                    acc += op.adjoint().apply(gq);
                    any = true;
                }
                if (any) grad.add(delta_truncated(acc, spec.trunc));
            }
        }

        // derivative through the phi/psi slots: pointwise-algebraic in beta_r
        if (!rho_zero && (a[0] != 0 || a[1] != 0 || a[2] != 0)) {
            auto Afun = [&](const BVForm& b) -> MixedForm {
                MixedForm out;
                BVForm phib, psib;
                if ((a[0] != 0 || a[1] != 0) && spec.phi)
                    phib = safe_wedge(b, gr, *spec.phi) + safe_wedge(gr, b, *spec.phi);
                if ((a[0] != 0 || a[2] != 0) && spec.psi)
                    psib = safe_wedge(b, gr, *spec.psi) + safe_wedge(gr, b, *spec.psi);
                if (a[0] != 0 && spec.left_action) {
                    out += safe_act(R, phib, *spec.left_action, Side::Left) * a[0];
                    if (spec.right_action)
                        out += safe_act(safe_act(D, psib, *spec.right_action, Side::Right), Phi,
                                        *spec.left_action, Side::Left) *
                               a[0];
                }
                if (a[1] != 0 && spec.left_action)
                    out += safe_act(MixedForm(D), phib, *spec.left_action, Side::Left) * a[1];
                if (a[2] != 0 && spec.right_action)
                    out += safe_act(D, psib, *spec.right_action, Side::Right) * a[2];
                return alpha_wrap(spec, out);
            };
            auto ops = materialize_pointwise(Afun, E, r, E);
            for (const auto& [q, op] : ops) {
                BVForm gq = gamma.project(q, E);
                if (gq.is_zero(0.0)) continue;
                grad.add(op.adjoint().apply(gq));
            }
        }
    }
    return grad;
}

SubdomainSpec make_relaxed_subdomain(const OperatorSpec& spec) {
    SubdomainSpec sub;
    sub.structure_degree = spec.k;
    const int n = spec.bundle->manifold()->dim();
    const int p = spec.alpha_degree();
    auto add = [&](int d) {
        if (d >= 0 && d <= n && d != spec.k) sub.zero_degrees.insert(d);
    };
    add(p + spec.k + 1);
    QDegrees q = q_degrees(spec, spec.k + 1 + p);
    for (int i = 1; i <= 3; ++i) {
        if (spec.a[i - 1] == 0) continue;
        for (int t : q.q(i)) add(p + t);
    }
    return sub;
}

SubdomainSpec make_intermediary_subdomain(const OperatorSpec& spec) {
    SubdomainSpec sub = make_relaxed_subdomain(spec);
    const int n = spec.bundle->manifold()->dim();
    const int p = spec.alpha_degree();
    int d = 2 * p + spec.k + 2;
    if (d >= 0 && d <= n) sub.coclosed_degrees.insert(d);
    return sub;
}

MixedForm subdomain_tangent(const MixedForm& form, const SubdomainSpec& sub) {
    MixedForm out;
    for (const auto& [deg, part] : form.parts()) {
        if (sub.zero_degrees.count(deg)) continue;
        out.set(part);
    }
    return out;
}

MixedForm project_subdomain(const MixedForm& gamma, const SubdomainSpec& sub,
                            const BundlePtr& bundle, const TruncationList& trunc) {
    if (sub.structure_degree >= 0 && sub.zero_degrees.count(sub.structure_degree))
        throw std::invalid_argument("sub-domain zeroes the structure degree itself");
    MixedForm out = subdomain_tangent(gamma, sub);

    for (int d : sub.coclosed_degrees) {
        BVForm gd = out.project(d, bundle);
        if (gd.empty() || gd.is_zero(0.0)) continue;
        // when the truncation already kills d into (or delta out of) this
        // degree the constraint is vacuous resp. unreachable by the image
        if (trunc.kills_d_input(d - 1) || trunc.kills_delta_input(d)) continue;
        BVForm b = delta_truncated(gd, trunc);
        const double bnorm = l2_norm(b);
        // already coclosed to tolerance: solving further only chases roundoff
        if (bnorm <= sub.cg_rel_tol * l2_norm(gd)) continue;
        BVForm x(bundle, d - 1);
        BVForm r = b;
        BVForm p = r;
        double rs = l2_inner(r, r);
        bool converged = false;
        for (int it = 0; it < sub.cg_max_iters; ++it) {
            if (std::sqrt(rs) <= sub.cg_rel_tol * bnorm) {
                converged = true;
                break;
            }
            BVForm Ap = delta_truncated(d_truncated(p, trunc), trunc);
            const double pAp = l2_inner(p, Ap);
            if (pAp <= 0.0) break;
            const double step = rs / pAp;
            x += p * step;
            r -= Ap * step;
            const double rs_new = l2_inner(r, r);
            p = r + p * (rs_new / rs);
            rs = rs_new;
        }
        if (!converged && std::sqrt(rs) > sub.cg_rel_tol * bnorm)
            throw std::runtime_error("project_subdomain: CG for the coclosed constraint at degree " +
                                     std::to_string(d) + " did not converge");
        gd -= d_truncated(x, trunc);
        out.set(gd);
    }

    if (sub.predicate == SubdomainSpec::Predicate::AlmostComplex && sub.structure_degree >= 0) {
        BVForm J = out.project(sub.structure_degree, bundle);
        if (!J.empty() && !J.is_zero(0.0)) {
            const int n = bundle->manifold()->dim();
            if (J.degree() != 1 || bundle->rank() != n)
                throw std::invalid_argument(
                    "almost-complex retraction needs a degree-1 tangent-valued form");
            const long long np = bundle->manifold()->num_points();
            for (long long pt = 0; pt < np; ++pt) {
                Eigen::MatrixXd M(n, n);
                for (int i = 0; i < n; ++i)
                    for (int fa = 0; fa < n; ++fa) M(fa, i) = J.at(pt, i, fa);
                Eigen::MatrixXd S = -(M * M);
                Eigen::MatrixXd Jn = M * Eigen::MatrixXd(S.sqrt()).inverse();
                for (int i = 0; i < n; ++i)
                    for (int fa = 0; fa < n; ++fa) J.at(pt, i, fa) = Jn(fa, i);
            }
            out.set(J);
        }
    }
    return out;
}

void append_flow_record(FlowState& state, const OperatorSpec& spec) {
    if (!state.cached_gradient) state.cached_gradient = gradient(spec, state.gamma);
    const double energy = functional(spec, state.gamma);
    const double grad_norm = l2_norm(*state.cached_gradient);
    BVForm gk = state.gamma.project(spec.k, spec.bundle);
    double p_res = 0.0;
    if (!gk.is_zero(0.0))
        p_res = l2_norm(spec.alpha ? apply_P_alpha(spec, gk) : apply_P(spec, gk));
    state.history.push_back({state.step_count, state.time, energy, grad_norm, p_res});
}

void flow_step(FlowState& state, const OperatorSpec& spec, const SubdomainSpec& sub) {
    if (!state.cached_gradient) state.cached_gradient = gradient(spec, state.gamma);
    MixedForm next = state.gamma - *state.cached_gradient * state.step_size;
    if (!sub.trivial()) next = project_subdomain(next, sub, spec.bundle, spec.trunc);
    if (!all_finite(next)) throw FlowBlowupError(state.step_count + 1);
    state.gamma = std::move(next);
    state.time += state.step_size;
    ++state.step_count;
    state.cached_gradient = gradient(spec, state.gamma);
    if (!all_finite(*state.cached_gradient)) throw FlowBlowupError(state.step_count);
    append_flow_record(state, spec);
}

}  // namespace cforms
