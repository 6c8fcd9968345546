#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "distortlab/maps.hpp"
#include "distortlab/report.hpp"

namespace distortlab {

/// Flat experiment configuration. Keys in a config file or override list
/// map one-to-one onto the fields below; see config_keys().
struct ExperimentConfig {
    int dim = 2;
    std::string map = "slow-twist";   // identity | rotation | slow-twist
    std::string profile = "arctan";   // arctan | log
    double eps = 0.1;
    double clamp = 0.1;
    std::string blocks;               // e.g. "R,I"; empty = standard layout
    std::uint64_t theta_seed = 0;     // 0 = identity frame
    std::uint64_t rotation_seed = 1;  // map = rotation
    std::vector<double> center;       // empty = origin
    double radius = 1.0;
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    std::vector<double> lambdas = {1.0, 1.5, 2.0, 3.0, 4.0};
    std::optional<double> calibration_c;
    std::vector<double> eps_grid = {1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
    std::optional<double> max_ratio;
    std::string format = "json";
    std::string output = "-";
    unsigned threads = 0;

    std::string field = "log-radius";  // jn: log-radius | coordinate

    std::string pde_field = "trig";  // antisymmetric | linear | trig
    int grid_points = 0;             // 0 = 33 for D <= 2, 17 for D = 3, sampled for D >= 4
    double grid_half_width = 5.0;
    int trig_degree = 3;
    std::optional<double> c_emp;
    std::string grid_file;
    std::string grid_export;

    std::string source;
    std::string target;
    std::string require_proper = "auto";  // auto | true | false
    double align_tol = 1e-2;
    int k = 4;
    std::vector<double> delta_grid = {0.0, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2};
    std::size_t trials = 100;
};

/// Every accepted key, in echo order.
const std::vector<std::string>& config_keys();

/// Applies "key = value" (or "key=value"). Throws InvalidInput naming the
/// key on unknown keys, unparsable values or out-of-range values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Reads a flat config file: one "key = value" per line, '#' starts a
/// comment. Errors carry "<source>:<line>: <key>: ..." diagnostics.
void load_config(ExperimentConfig& cfg, std::istream& in, const std::string& source_name = "config");

/// Cross-field validation (center dimension, grid sizes, ...).
void validate(const ExperimentConfig& cfg);

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg);

/// Map described by the config (map, profile, eps, clamp, blocks, theta_seed).
MapPtr build_map(const ExperimentConfig& cfg);

inline constexpr const char* kSubcommands[] = {"distortion", "bmo1", "bmo2", "tail", "sharpness",
                                               "claims", "jn", "pde", "align", "sweep"};

/// Runs a subcommand and returns its report (wall time filled in). Throws
/// InvalidInput for unknown subcommands and bad configs.
Report run_subcommand(const std::string& name, const ExperimentConfig& cfg);

/// 0 when every check passed, 2 otherwise.
int exit_code(const Report& report);

}  // namespace distortlab
