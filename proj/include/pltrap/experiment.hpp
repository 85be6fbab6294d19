#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pltrap {

// Flat key-value experiment description. Values are JSON scalars or lists
// encoded as strings at the CLI boundary; the schema resolves types.
struct ExperimentConfig {
    std::string kind;
    std::map<std::string, std::string> params;  // dotted keys, raw values
    uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 1;
};

// Validates against the experiment schema, runs the sweep, writes CSV data,
// manifest.json and a gnuplot script. Throws std::invalid_argument on config
// errors and std::runtime_error on numerical failures.
void run_experiment(const ExperimentConfig& cfg);

std::vector<std::string> known_experiment_kinds();

// The scale r(t) solving r^{d+theta} * delta_c(r)^theta = t * r^{-2}.
// Closed form for d >= 3; Newton iteration on log r for d = 2.
double scale_for_t(int d, double theta, double t);

// schema introspection used by the CLI help and by tests
struct FieldSpec {
    std::string key;
    std::string type;  // "double", "int", "string", "list"
    std::string default_value;
};
std::vector<FieldSpec> experiment_schema(const std::string& kind);

} // namespace pltrap
