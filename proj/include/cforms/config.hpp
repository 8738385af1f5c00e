#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "cforms/accomplex.hpp"

namespace cforms {

using Json = nlohmann::json;

// Everything a CLI command needs, decoded from a JSON config (or one of
// the named builtin configs).
struct RunConfig {
    std::string name;
    ManifoldPtr manifold;
    BundlePtr bundle;
    OperatorSpec spec;

    std::string initial_kind = "random_J";  // standard_J | random_J | product_J | zero | file
    std::uint64_t seed = 1;
    double amplitude = 0.3;
    std::string initial_path;

    long long steps = 50;
    double step_size = 1e-4;
    double tolerance = 1e-10;
    std::string out_path;

    std::string subdomain_mode = "none";  // none | relaxed | intermediary

    SubdomainSpec subdomain() const;
};

// "almost-complex-T2", "almost-complex-T4", "alpha-T4"
Json builtin_config(const std::string& name);
bool is_builtin_config(const std::string& name);

RunConfig parse_config(const Json& j);
// file path, or a builtin name
RunConfig load_config(const std::string& path_or_name);

MixedForm make_initial(const RunConfig& cfg);

Json form_to_json(const BVForm& form, const std::string& bundle_id);
BVForm form_from_json(const Json& j, const BundlePtr& bundle);

// COMPOUND_FORMS_THREADS cap (>= 1); hardware concurrency when unset
int thread_cap();

}  // namespace cforms
