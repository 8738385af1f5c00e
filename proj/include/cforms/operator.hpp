#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>

#include "cforms/calculus.hpp"

namespace cforms {

// The compound-structure operator
//   P(rho) = a1 (rho ^_phi rho) ^ d rho ^ (rho ^_psi rho)
//          + a2 (rho ^_phi rho) ^ d rho
//          + a3 d rho ^ (rho ^_psi rho)
//          + a4 d rho
// with the truncated derivative, plus an optional closed scalar p-form
// wedged on the outside.
struct OperatorSpec {
    BundlePtr bundle;  // E
    std::array<double, 4> a{0, 0, 0, 0};
    std::optional<BilinearMap> phi;
    std::optional<BilinearMap> psi;
    std::optional<ActionSpec> left_action;
    std::optional<ActionSpec> right_action;
    int k = 0;
    TruncationList trunc;
    std::optional<BVForm> alpha;  // scalar p-form over the rank-1 trivial bundle

    int alpha_degree() const { return alpha ? alpha->degree() : 0; }
};

// Output degrees of the three composite terms for a homogeneous input of
// degree l. Empty vector = the term annihilates (degree arithmetic leaves
// [0,n] or an insertion grade exceeds the form degree).
struct QDegrees {
    std::array<std::vector<int>, 3> degrees;
    const std::vector<int>& q(int i) const { return degrees[i - 1]; }
};

QDegrees q_degrees(const OperatorSpec& spec, int l);

struct Violation {
    std::string constraint;  // "q_clash", "degree_one", "alpha_closed", ...
    int i = 0;               // term index 1..3 (0 when not term-specific)
    int l = 0;               // input degree (or -1)
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool valid() const { return violations.empty(); }
    std::string to_string() const;
};

ValidationReport validate(const OperatorSpec& spec);
void require_valid(const OperatorSpec& spec);

// P applied to a homogeneous form; a MixedForm in general, homogeneous of
// degree k+1 for inputs of degree k. Ignores spec.alpha.
MixedForm apply_P(const OperatorSpec& spec, const BVForm& rho);

// alpha ^ P(rho); requires spec.alpha.
MixedForm apply_P_alpha(const OperatorSpec& spec, const BVForm& rho);

// P (or its alpha-variant) summed over the homogeneous parts of gamma.
MixedForm apply_P_total(const OperatorSpec& spec, const MixedForm& gamma);

// <<P_total(gamma), gamma>>; requires k in spec.trunc.
double functional(const OperatorSpec& spec, const MixedForm& gamma);

// L2 gradient of the functional: <<gradient(gamma), beta>> equals the
// first variation of the functional at gamma in direction beta.
MixedForm gradient(const OperatorSpec& spec, const MixedForm& gamma);

struct SubdomainSpec {
    std::set<int> zero_degrees;
    std::set<int> coclosed_degrees;
    enum class Predicate { None, AlmostComplex } predicate = Predicate::None;
    int structure_degree = -1;  // degree the predicate applies to
    int cg_max_iters = 1000;
    double cg_rel_tol = 1e-10;

    bool trivial() const {
        return zero_degrees.empty() && coclosed_degrees.empty() && predicate == Predicate::None;
    }
};

// Relaxed sub-domain: zero constraints at k+1 and q_i(k+1) (shifted by p
// in the alpha case), no coclosedness.
SubdomainSpec make_relaxed_subdomain(const OperatorSpec& spec);
// Full intermediary sub-domain: additionally coclosedness at k+2
// (2p+k+2 in the alpha case).
SubdomainSpec make_intermediary_subdomain(const OperatorSpec& spec);

MixedForm project_subdomain(const MixedForm& gamma, const SubdomainSpec& sub,
                            const BundlePtr& bundle, const TruncationList& trunc);

// Gradient with the zero-degree components of the sub-domain removed (the
// directions tangent to the linear constraints).
MixedForm subdomain_tangent(const MixedForm& form, const SubdomainSpec& sub);

struct FlowRecord {
    long long step;
    double time;
    double energy;
    double grad_norm;
    double p_residual;
};

struct FlowState {
    MixedForm gamma;
    double step_size = 1e-3;
    double time = 0.0;
    long long step_count = 0;
    std::vector<FlowRecord> history;
    std::optional<MixedForm> cached_gradient;
};

class FlowBlowupError : public std::runtime_error {
public:
    FlowBlowupError(long long step)
        : std::runtime_error("flow blow-up at step " + std::to_string(step)), step(step) {}
    long long step;
};

// Explicit Euler step gamma <- project(gamma - h * gradient(gamma)),
// appending (step, time, energy, |grad|, |P(gamma_k)|) to the history.
void flow_step(FlowState& state, const OperatorSpec& spec, const SubdomainSpec& sub);

void append_flow_record(FlowState& state, const OperatorSpec& spec);

}  // namespace cforms
