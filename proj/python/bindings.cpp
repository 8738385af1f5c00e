#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cforms/config.hpp"

namespace py = pybind11;
using namespace cforms;

namespace {

// builtin name or a JSON document
RunConfig load(const std::string& text) {
    if (is_builtin_config(text)) return parse_config(builtin_config(text));
    return parse_config(Json::parse(text));
}

ACStructure structure_from_config(const RunConfig& cfg) {
    BVForm J = make_initial(cfg).project(1, cfg.bundle);
    if (J.empty() || cfg.bundle->rank() != cfg.manifold->dim())
        throw std::invalid_argument("residuals need tangent-valued degree-1 initial data");
    ACStructure out{BVForm(tangent_bundle(cfg.manifold), 1)};
    out.J.coeff() = J.coeff();
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "compound-structure operators on discretized flat tori";

    m.def("builtin_config_names", [] {
        return std::vector<std::string>{"almost-complex-T2", "almost-complex-T4", "alpha-T4"};
    });
    m.def(
        "builtin_config", [](const std::string& name) { return builtin_config(name).dump(2); },
        py::arg("name"));

    m.def(
        "validate",
        [](const std::string& config) {
            ValidationReport rep = cforms::validate(load(config).spec);
            std::vector<std::string> out;
            for (const auto& v : rep.violations)
                out.push_back(v.constraint + " (i=" + std::to_string(v.i) +
                              ", l=" + std::to_string(v.l) + "): " + v.message);
            return out;
        },
        py::arg("config"), "Constraint violations of the configured operator; empty means valid.");

    m.def(
        "residual",
        [](const std::string& config) {
            RunConfig cfg = load(config);
            return integrability_residual(structure_from_config(cfg),
                                          tangent_bundle(cfg.manifold));
        },
        py::arg("config"),
        "(|P(J)|_L2, |N_J|_L2) of the configured initial almost-complex structure.");

    m.def(
        "functional_value",
        [](const std::string& config) {
            RunConfig cfg = load(config);
            require_valid(cfg.spec);
            return functional(cfg.spec, make_initial(cfg));
        },
        py::arg("config"));

    m.def(
        "gradient_norm",
        [](const std::string& config) {
            RunConfig cfg = load(config);
            require_valid(cfg.spec);
            return l2_norm(gradient(cfg.spec, make_initial(cfg)));
        },
        py::arg("config"));

    m.def(
        "apply_operator_norms",
        [](const std::string& config) {
            RunConfig cfg = load(config);
            require_valid(cfg.spec);
            MixedForm out = apply_P_total(cfg.spec, make_initial(cfg));
            std::map<int, double> norms;
            for (const auto& [deg, part] : out.parts()) norms[deg] = l2_norm(part);
            return norms;
        },
        py::arg("config"), "L2 norm of each homogeneous component of P applied to the initial data.");

    m.def(
        "flow",
        [](const std::string& config, long long steps) {
            RunConfig cfg = load(config);
            require_valid(cfg.spec);
            if (steps >= 0) cfg.steps = steps;
            if (cfg.steps < 1) throw std::invalid_argument("flow needs steps >= 1");
            SubdomainSpec sub = cfg.subdomain();
            FlowState state;
            state.gamma = make_initial(cfg);
            state.step_size = cfg.step_size;
            append_flow_record(state, cfg.spec);
            for (long long s = 0; s < cfg.steps; ++s) flow_step(state, cfg.spec, sub);
            std::vector<std::tuple<long long, double, double, double, double>> out;
            for (const auto& r : state.history)
                out.emplace_back(r.step, r.time, r.energy, r.grad_norm, r.p_residual);
            return out;
        },
        py::arg("config"), py::arg("steps") = -1,
        "Explicit Euler descent; rows of (step, time, energy, grad_norm, P_residual_norm).");
}
