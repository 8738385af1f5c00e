#include "cforms/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace cforms {

namespace {

class ConfigError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

Eigen::MatrixXd matrix_from_flat(const Json& j, int rows, int cols, const std::string& what) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
        throw ConfigError(what + ": expected " + std::to_string(rows * cols) + " entries");
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = j[r * cols + c].get<double>();
    return m;
}

ManifoldPtr parse_manifold(const Json& j) {
    if (!j.is_object()) throw ConfigError("manifold: object expected");
    int dim = j.at("dim").get<int>();
    std::vector<int> resolution;
    const Json& res = j.at("resolution");
    if (res.is_number_integer())
        resolution.assign(dim, res.get<int>());
    else
        resolution = res.get<std::vector<int>>();
    std::vector<double> sides;
    if (j.contains("side_lengths")) sides = j.at("side_lengths").get<std::vector<double>>();
    Eigen::MatrixXd metric;
    if (j.contains("metric")) metric = matrix_from_flat(j.at("metric"), dim, dim, "manifold.metric");
    return std::make_shared<GridManifold>(dim, resolution, sides, metric);
}

BundlePtr parse_bundle(const Json& j, const ManifoldPtr& m) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "tangent") return tangent_bundle(m);
        if (s == "polyvector") return polyvector_bundle(m);
        if (s == "scalar") return scalar_bundle(m);
        throw ConfigError("bundle: unknown builtin '" + s + "'");
    }
    if (!j.is_object()) throw ConfigError("bundle: object or builtin name expected");
    if (j.contains("type")) return parse_bundle(j.at("type"), m);
    int rank = j.at("rank").get<int>();
    std::vector<Eigen::MatrixXd> fiber_metric;
    if (j.contains("fiber_metric"))
        fiber_metric.push_back(matrix_from_flat(j.at("fiber_metric"), rank, rank, "fiber_metric"));
    std::vector<std::vector<Eigen::MatrixXd>> connection;
    if (j.contains("connection") && !(j.at("connection").is_string())) {
        const Json& conn = j.at("connection");
        if (static_cast<int>(conn.size()) != m->dim())
            throw ConfigError("connection: one matrix per axis expected");
        for (const auto& axis : conn)
            connection.push_back({matrix_from_flat(axis, rank, rank, "connection")});
    }
    std::vector<int> grading;
    if (j.contains("grading")) grading = j.at("grading").get<std::vector<int>>();
    return std::make_shared<BundleSpec>(m, rank, fiber_metric, connection, grading);
}

BilinearMap parse_bilinear(const Json& j, const ManifoldPtr& m, const BundlePtr& source) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "polyvector_wedge") return polyvector_wedge(m);
        throw ConfigError("bilinear map: unknown builtin '" + s + "'");
    }
    BilinearMap map;
    map.source = source;
    map.target = parse_bundle(j.at("target"), m);
    map.tensor = j.at("tensor").get<std::vector<double>>();
    map.check();
    return map;
}

ActionSpec parse_action(const Json& j, const ManifoldPtr& m, const BundlePtr& acting,
                        const BundlePtr& target) {
    ActionSpec action;
    std::string kind = j.value("kind", "fiberwise");
    if (kind == "insertion")
        action.kind = ActionKind::Insertion;
    else if (kind == "fiberwise")
        action.kind = ActionKind::FiberwiseBilinear;
    else
        throw ConfigError("action: unknown kind '" + kind + "'");
    action.acting = acting;
    action.target = target;
    if (j.contains("tensor")) action.tensor = j.at("tensor").get<std::vector<double>>();
    if (action.kind == ActionKind::FiberwiseBilinear) {
        std::size_t want = static_cast<std::size_t>(acting->rank()) * target->rank() * target->rank();
        if (action.tensor.size() != want)
            throw ConfigError("fiberwise action: tensor size mismatch");
    }
    return action;
}

BVForm parse_alpha(const Json& j, const BundlePtr& scalars) {
    const auto& m = scalars->manifold();
    if (j.is_object() && j.contains("constant_covector")) {
        // constant dx^axis (1-based axis index in configs)
        int axis = j.at("constant_covector").get<int>() - 1;
        if (axis < 0 || axis >= m->dim()) throw ConfigError("alpha: axis out of range");
        BVForm a(scalars, 1);
        for (long long p = 0; p < m->num_points(); ++p) a.at(p, axis, 0) = 1.0;
        return a;
    }
    if (j.is_object() && j.contains("degree")) {
        BVForm a(scalars, j.at("degree").get<int>());
        const auto& coeff = j.at("coeff").get<std::vector<double>>();
        if (coeff.size() != a.coeff().size()) throw ConfigError("alpha: coefficient size mismatch");
        a.coeff() = coeff;
        return a;
    }
    throw ConfigError("alpha: expected constant_covector or explicit coefficients");
}

}  // namespace

SubdomainSpec RunConfig::subdomain() const {
    if (subdomain_mode == "none") return SubdomainSpec{};
    if (subdomain_mode == "relaxed") return make_relaxed_subdomain(spec);
    if (subdomain_mode == "intermediary") return make_intermediary_subdomain(spec);
    throw std::invalid_argument("unknown subdomain mode '" + subdomain_mode + "'");
}

bool is_builtin_config(const std::string& name) {
    return name == "almost-complex-T2" || name == "almost-complex-T4" || name == "alpha-T4";
}

Json builtin_config(const std::string& name) {
    if (name == "almost-complex-T2")
        return Json{{"name", name},
                    {"manifold", {{"dim", 2}, {"resolution", 16}}},
                    {"bundle", "tangent"},
                    {"operator",
                     {{"a", {0, 0, 1, -1}},
                      {"psi", "polyvector_wedge"},
                      {"right_action", {{"kind", "insertion"}}},
                      {"k", 1},
                      {"trunc", {1}}}},
                    {"initial", {{"kind", "random_J"}, {"seed", 1}, {"amplitude", 0.3}}},
                    {"flow", {{"steps", 50}, {"step_size", 1e-4}}}};
    if (name == "almost-complex-T4")
        return Json{{"name", name},
                    {"manifold", {{"dim", 4}, {"resolution", 8}}},
                    {"bundle", "tangent"},
                    {"operator",
                     {{"a", {0, 0, 1, -1}},
                      {"psi", "polyvector_wedge"},
                      {"right_action", {{"kind", "insertion"}}},
                      {"k", 1},
                      {"trunc", {1, 3}}}},
                    {"initial", {{"kind", "random_J"}, {"seed", 1}, {"amplitude", 0.3}}},
                    {"flow", {{"steps", 50}, {"step_size", 1e-4}}}};
    if (name == "alpha-T4") {
        Json j = builtin_config("almost-complex-T4");
        j["name"] = name;
        j["operator"]["alpha"] = Json{{"constant_covector", 1}};
        return j;
    }
    throw std::invalid_argument("unknown builtin config '" + name + "'");
}

RunConfig parse_config(const Json& j) {
    RunConfig cfg;
    cfg.name = j.value("name", "");
    cfg.manifold = parse_manifold(j.at("manifold"));
    cfg.bundle = parse_bundle(j.value("bundle", Json("tangent")), cfg.manifold);

    const Json& op = j.at("operator");
    cfg.spec.bundle = cfg.bundle;
    {
        const auto a = op.at("a").get<std::vector<double>>();
        if (a.size() != 4) throw ConfigError("operator.a: four coefficients expected");
        for (int i = 0; i < 4; ++i) cfg.spec.a[i] = a[i];
    }
    cfg.spec.k = op.at("k").get<int>();
    if (op.contains("trunc")) cfg.spec.trunc.degrees = op.at("trunc").get<std::vector<int>>();
    if (op.contains("phi")) cfg.spec.phi = parse_bilinear(op.at("phi"), cfg.manifold, cfg.bundle);
    if (op.contains("psi")) cfg.spec.psi = parse_bilinear(op.at("psi"), cfg.manifold, cfg.bundle);
    if (op.contains("left_action")) {
        if (!cfg.spec.phi) throw ConfigError("left_action without phi");
        cfg.spec.left_action =
            parse_action(op.at("left_action"), cfg.manifold, cfg.spec.phi->target, cfg.bundle);
    }
    if (op.contains("right_action")) {
        if (!cfg.spec.psi) throw ConfigError("right_action without psi");
        cfg.spec.right_action =
            parse_action(op.at("right_action"), cfg.manifold, cfg.spec.psi->target, cfg.bundle);
    }
    if (op.contains("alpha"))
        cfg.spec.alpha = parse_alpha(op.at("alpha"), scalar_bundle(cfg.manifold));

    if (j.contains("initial")) {
        const Json& init = j.at("initial");
        cfg.initial_kind = init.value("kind", cfg.initial_kind);
        cfg.seed = init.value("seed", cfg.seed);
        cfg.amplitude = init.value("amplitude", cfg.amplitude);
        cfg.initial_path = init.value("path", cfg.initial_path);
    }
    if (j.contains("flow")) {
        const Json& f = j.at("flow");
        cfg.steps = f.value("steps", cfg.steps);
        cfg.step_size = f.value("step_size", cfg.step_size);
    }
    cfg.tolerance = j.value("tolerance", cfg.tolerance);
    cfg.out_path = j.value("out", cfg.out_path);
    cfg.subdomain_mode = j.value("subdomain", cfg.subdomain_mode);
    if (cfg.subdomain_mode != "none" && cfg.subdomain_mode != "relaxed" &&
        cfg.subdomain_mode != "intermediary")
        throw ConfigError("unknown subdomain mode '" + cfg.subdomain_mode + "'");
    return cfg;
}

RunConfig load_config(const std::string& path_or_name) {
    if (is_builtin_config(path_or_name)) return parse_config(builtin_config(path_or_name));
    std::ifstream in(path_or_name);
    if (!in) throw std::invalid_argument("cannot open config '" + path_or_name + "'");
    Json j = Json::parse(in);  // throws nlohmann parse_error with location
    return parse_config(j);
}

MixedForm make_initial(const RunConfig& cfg) {
    MixedForm out;
    if (cfg.initial_kind == "zero") {
        out.set(BVForm(cfg.bundle, cfg.spec.k));
        return out;
    }
    if (cfg.initial_kind == "file") {
        std::ifstream in(cfg.initial_path);
        if (!in) throw std::invalid_argument("cannot open initial data '" + cfg.initial_path + "'");
        out.set(form_from_json(Json::parse(in), cfg.bundle));
        return out;
    }
    ACStructure J;
    if (cfg.initial_kind == "standard_J")
        J = standard_J(cfg.manifold);
    else if (cfg.initial_kind == "random_J")
        J = random_J(cfg.manifold, cfg.seed, cfg.amplitude);
    else if (cfg.initial_kind == "product_J")
        J = product_J(cfg.manifold, cfg.seed, cfg.amplitude);
    else
        throw std::invalid_argument("unknown initial kind '" + cfg.initial_kind + "'");
    BVForm f(cfg.bundle, 1);
    f.coeff() = J.J.coeff();
    out.set(f);
    return out;
}

Json form_to_json(const BVForm& form, const std::string& bundle_id) {
    return Json{{"degree", form.degree()},
                {"bundle", bundle_id},
                {"resolution", form.manifold()->resolution()},
                {"coeff", form.coeff()}};
}

BVForm form_from_json(const Json& j, const BundlePtr& bundle) {
    BVForm f(bundle, j.at("degree").get<int>());
    if (j.contains("resolution") &&
        j.at("resolution").get<std::vector<int>>() != bundle->manifold()->resolution())
        throw std::invalid_argument("form resolution does not match the manifold");
    const auto coeff = j.at("coeff").get<std::vector<double>>();
    if (coeff.size() != f.coeff().size())
        throw std::invalid_argument("form coefficient count mismatch");
    f.coeff() = coeff;
    return f;
}

int thread_cap() {
    if (const char* env = std::getenv("COMPOUND_FORMS_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

}  // namespace cforms
