#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cforms/config.hpp"

namespace {

using namespace cforms;

constexpr int EXIT_CHECK_FAILED = 1;
constexpr int EXIT_BAD_INPUT = 2;
constexpr int EXIT_BLOWUP = 3;

struct CliOptions {
    std::string config = "almost-complex-T2";
    std::string out;
    long long seed = -1;
    int resolution = 0;
    long long steps = -1;
    double step_size = 0;
    double tolerance = 0;
    bool inject_adjoint_fault = false;
};

RunConfig load_with_overrides(const CliOptions& opt) {
    Json j;
    if (is_builtin_config(opt.config)) {
        j = builtin_config(opt.config);
    } else {
        std::ifstream in(opt.config);
        if (!in) throw std::invalid_argument("cannot open config '" + opt.config + "'");
        j = Json::parse(in);
    }
    if (opt.resolution > 0) j["manifold"]["resolution"] = opt.resolution;
    if (opt.seed >= 0) j["initial"]["seed"] = opt.seed;
    if (opt.steps >= 0) j["flow"]["steps"] = opt.steps;
    if (opt.step_size > 0) j["flow"]["step_size"] = opt.step_size;
    if (opt.tolerance > 0) j["tolerance"] = opt.tolerance;
    RunConfig cfg = parse_config(j);
    if (!opt.out.empty()) cfg.out_path = opt.out;
    return cfg;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

MixedForm random_mixed(const BundlePtr& bundle, const std::vector<int>& degrees,
                       std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    MixedForm out;
    for (int d : degrees) {
        BVForm f(bundle, d);
        if (f.empty()) continue;
        for (double& v : f.coeff()) v = dist(rng);
        out.set(f);
    }
    return out;
}

ACStructure structure_from_initial(const RunConfig& cfg) {
    MixedForm init = make_initial(cfg);
    BVForm J = init.project(1, cfg.bundle);
    if (J.empty() || cfg.bundle->rank() != cfg.manifold->dim())
        throw std::invalid_argument("this command needs tangent-valued degree-1 initial data");
    ACStructure out{BVForm(tangent_bundle(cfg.manifold), 1)};
    out.J.coeff() = J.coeff();
    return out;
}

int cmd_validate(const CliOptions& opt) {
    RunConfig cfg = load_with_overrides(opt);
    ValidationReport rep = validate(cfg.spec);
    if (rep.valid()) {
        std::cout << "PASS all operator constraints (config '"
                  << (cfg.name.empty() ? opt.config : cfg.name) << "')\n";
        return 0;
    }
    for (const auto& v : rep.violations)
        std::cout << "FAIL " << v.constraint << " (i=" << v.i << ", l=" << v.l
                  << "): " << v.message << "\n";
    return EXIT_CHECK_FAILED;
}

int cmd_check(const CliOptions& opt) {
    RunConfig cfg = load_with_overrides(opt);
    const auto& m = cfg.manifold;
    for (int r : m->resolution())
        if (r < 4) {
            std::cerr << "resolution below the stencil minimum of 4\n";
            return EXIT_BAD_INPUT;
        }
    const BundlePtr& E = cfg.bundle;
    const int n = m->dim();
    std::mt19937_64 rng(cfg.seed);
    bool ok = true;
    auto report = [&](const std::string& name, double err, double tol) {
        bool pass = err <= tol;
        ok = ok && pass;
        std::cout << (pass ? "PASS " : "FAIL ") << name << ": error " << fmt(err)
                  << " vs tolerance " << fmt(tol) << "\n";
    };

    {
        double worst = 0;
        for (int k = 0; k < n; ++k) {
            BVForm a = random_mixed(E, {k}, rng, 1.0).project(k, E);
            BVForm b = random_mixed(E, {k + 1}, rng, 1.0).project(k + 1, E);
            for (const TruncationList& tr :
                 std::vector<TruncationList>{TruncationList{}, cfg.spec.trunc}) {
                BVForm da = d_truncated(a, tr);
                BVForm db = delta_truncated(b, tr);
                if (opt.inject_adjoint_fault && !db.coeff().empty()) db.coeff()[0] += 1e-3;
                double lhs = l2_inner(da, b), rhs = l2_inner(a, db);
                double denom = std::max(1e-300, l2_norm(a) * l2_norm(b));
                worst = std::max(worst, std::abs(lhs - rhs) / denom);
            }
        }
        report("adjointness <<d a, b>> = <<a, delta b>>", worst, 1e-12);
    }

    {
        double worst = 0;
        for (int k = 0; k <= n; ++k) {
            BVForm a = random_mixed(E, {k}, rng, 1.0).project(k, E);
            BVForm ss = hodge_star(hodge_star(a));
            double sign = ((k * (n - k)) % 2 == 0) ? 1.0 : -1.0;
            BVForm diff = ss - a * sign;
            worst = std::max(worst, l2_norm(diff) / std::max(1e-300, l2_norm(a)));
        }
        report("Hodge star involution", worst, 1e-12);
    }

    {
        BilinearMap psi = cfg.spec.psi ? *cfg.spec.psi : polyvector_wedge(m);
        const BundlePtr& S = psi.source;
        double worst = 0;
        for (int k = 0; k <= 2 && k <= n; ++k)
            for (int l = 0; l + k <= n && l <= 2; ++l) {
                BVForm a = random_mixed(S, {k}, rng, 1.0).project(k, S);
                BVForm b = random_mixed(S, {l}, rng, 1.0).project(l, S);
                BVForm fast = wedge_bilinear(a, b, psi);
                BVForm slow = wedge_bilinear_reference(a, b, psi);
                worst = std::max(worst, l2_norm(fast - slow));
            }
        report("wedge vs permutation-sum reference", worst, 1e-12);
    }

    {
        ValidationReport rep = validate(cfg.spec);
        if (!rep.valid()) {
            std::cout << "FAIL operator validation:\n" << rep.to_string();
            ok = false;
        } else {
            std::vector<int> degs;
            for (int d : {cfg.spec.k, cfg.spec.k + 1, cfg.spec.k + 2})
                if (d >= 0 && d <= n) degs.push_back(d);
            double worst = 0;
            for (int pair = 0; pair < 3; ++pair) {
                MixedForm gamma = random_mixed(E, degs, rng, 0.5);
                MixedForm beta = random_mixed(E, degs, rng, 0.5);
                double lhs = l2_inner(gradient(cfg.spec, gamma), beta);
                const double t = 1e-4;
                double fd = (functional(cfg.spec, gamma + beta * t) -
                             functional(cfg.spec, gamma - beta * t)) /
                            (2 * t);
                worst = std::max(worst, std::abs(lhs - fd) / std::max(1e-300, std::abs(fd)));
            }
            report("gradient vs finite difference", worst, 1e-5);
        }
    }

    if (n % 2 == 0) {
        BundlePtr tangent = tangent_bundle(m);
        auto [p0, n0] = integrability_residual(standard_J(m), tangent);
        report("standard structure residuals (P, Nijenhuis)", std::max(p0, n0), 1e-12);
        if (n == 2) {
            // every surface structure is integrable and det J = 1 makes the
            // discrete P residual an exact algebraic zero (roundoff only)
            double fine = integrability_residual(random_J(m, cfg.seed, cfg.amplitude), tangent).first;
            report("surface integrability residual at the algebraic floor", fine, 1e-12);
        } else {
            double floor =
                10.0 * integrability_residual(product_J(m, 7777, cfg.amplitude), tangent).first;
            auto [pn, nn] = integrability_residual(random_J(m, cfg.seed, cfg.amplitude), tangent);
            bool above = pn > floor && nn > 10.0 * nijenhuis_l2(product_J(m, 7777, cfg.amplitude));
            ok = ok && above;
            std::cout << (above ? "PASS " : "FAIL ")
                      << "non-integrable residuals above calibrated floor: P " << fmt(pn)
                      << ", N " << fmt(nn) << ", floor " << fmt(floor) << "\n";
        }
    }

    return ok ? 0 : EXIT_CHECK_FAILED;
}

int cmd_residual(const CliOptions& opt) {
    RunConfig cfg = load_with_overrides(opt);
    ACStructure J = structure_from_initial(cfg);
    BundlePtr tangent = tangent_bundle(cfg.manifold);
    auto [pnorm, nnorm] = integrability_residual(J, tangent);
    std::string verdict;
    if (cfg.manifold->dim() == 2) {
        verdict = "integrable";
    } else {
        double floor =
            10.0 * integrability_residual(product_J(cfg.manifold, 7777, cfg.amplitude), tangent)
                       .first;
        verdict = pnorm <= floor ? "integrable" : "non-integrable";
    }
    std::ostringstream csv;
    csv << "seed,resolution,P_norm,N_norm,verdict\n"
        << cfg.seed << "," << cfg.manifold->resolution()[0] << "," << fmt(pnorm) << ","
        << fmt(nnorm) << "," << verdict << "\n";
    write_atomic(cfg.out_path, csv.str());
    return 0;
}

int cmd_grad_check(const CliOptions& opt) {
    RunConfig cfg = load_with_overrides(opt);
    require_valid(cfg.spec);
    const int n = cfg.manifold->dim();
    std::vector<int> degs;
    for (int d : {cfg.spec.k, cfg.spec.k + 1, cfg.spec.k + 2})
        if (d >= 0 && d <= n) degs.push_back(d);
    std::mt19937_64 rng(cfg.seed);
    double tol = opt.tolerance > 0 ? opt.tolerance : 1e-5;
    double worst = 0;
    const int pairs = 20;
    for (int pair = 0; pair < pairs; ++pair) {
        MixedForm gamma = random_mixed(cfg.bundle, degs, rng, 0.5);
        MixedForm beta = random_mixed(cfg.bundle, degs, rng, 0.5);
        double lhs = l2_inner(gradient(cfg.spec, gamma), beta);
        const double t = 1e-4;
        double fd =
            (functional(cfg.spec, gamma + beta * t) - functional(cfg.spec, gamma - beta * t)) /
            (2 * t);
        double rel = std::abs(lhs - fd) / std::max(1e-300, std::abs(fd));
        worst = std::max(worst, rel);
        std::cout << "pair " << pair << ": <<grad,beta>> " << fmt(lhs) << " fd " << fmt(fd)
                  << " rel " << fmt(rel) << "\n";
    }
    std::cout << (worst <= tol ? "PASS" : "FAIL") << " max relative error " << fmt(worst)
              << " vs tolerance " << fmt(tol) << " over " << pairs << " pairs\n";
    return worst <= tol ? 0 : EXIT_CHECK_FAILED;
}

std::string history_csv(const FlowState& state) {
    std::ostringstream csv;
    csv << "step,time,energy,grad_norm,P_residual_norm\n";
    for (const auto& rec : state.history)
        csv << rec.step << "," << fmt(rec.time) << "," << fmt(rec.energy) << ","
            << fmt(rec.grad_norm) << "," << fmt(rec.p_residual) << "\n";
    return csv.str();
}

int cmd_flow(const CliOptions& opt) {
    RunConfig cfg = load_with_overrides(opt);
    if (cfg.steps < 1) {
        std::cerr << "flow needs steps >= 1\n";
        return EXIT_BAD_INPUT;
    }
    ValidationReport rep = validate(cfg.spec);
    if (!rep.valid()) {
        std::cerr << "invalid operator spec:\n" << rep.to_string();
        return EXIT_BAD_INPUT;
    }
    SubdomainSpec sub = cfg.subdomain();
    FlowState state;
    state.gamma = make_initial(cfg);
    state.step_size = cfg.step_size;
    append_flow_record(state, cfg.spec);
    try {
        for (long long s = 0; s < cfg.steps; ++s) flow_step(state, cfg.spec, sub);
    } catch (const FlowBlowupError& e) {
        write_atomic(cfg.out_path, history_csv(state));
        std::cerr << e.what() << "; last good step " << state.step_count << " recorded\n";
        return EXIT_BLOWUP;
    }
    write_atomic(cfg.out_path, history_csv(state));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"compound-structure operators on discretized tori"};
    app.require_subcommand(1);
    CliOptions opt;
    app.add_option("--config", opt.config, "config file path or builtin name");
    app.add_option("--out", opt.out, "output path ('-' = stdout)");
    app.add_option("--seed", opt.seed, "override the initial-data seed");
    app.add_option("--resolution", opt.resolution, "override the grid resolution");
    app.add_option("--steps", opt.steps, "override the flow step count");
    app.add_option("--step-size", opt.step_size, "override the flow step size");
    app.add_option("--tolerance", opt.tolerance, "override the check tolerance");
    app.add_flag("--inject-adjoint-fault", opt.inject_adjoint_fault)->group("");  // test hook
    app.fallthrough();

    auto* validate_cmd = app.add_subcommand("validate", "run the operator-spec validator");
    auto* check_cmd = app.add_subcommand("check", "run the module invariant suites");
    auto* residual_cmd = app.add_subcommand("residual", "integrability residual report");
    auto* grad_cmd = app.add_subcommand("grad-check", "gradient vs finite-difference check");
    auto* flow_cmd = app.add_subcommand("flow", "run the gradient flow, emit CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : EXIT_BAD_INPUT;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(opt);
        if (check_cmd->parsed()) return cmd_check(opt);
        if (residual_cmd->parsed()) return cmd_residual(opt);
        if (grad_cmd->parsed()) return cmd_grad_check(opt);
        if (flow_cmd->parsed()) return cmd_flow(opt);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return EXIT_BAD_INPUT;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_BAD_INPUT;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_CHECK_FAILED;
    }
    return EXIT_BAD_INPUT;
}
