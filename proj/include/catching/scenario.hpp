#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "catching/control_sim.hpp"
#include "catching/lfd.hpp"
#include "catching/metrics.hpp"
#include "catching/stiffness.hpp"

namespace catching {

struct LearningConfig {
    int gmm_components = 5;
    int reference_points = 61;
    int hvs_components = 5;
    int hvs_grid_points = 101;
    double cap = 750.0;
    std::string trajectory_model;  //!< optional GMM file replacing the in-process fit
    std::string hvs_profile;       //!< optional profile CSV replacing the in-process fit
};

/// Everything needed to reproduce one experiment.
struct ScenarioConfig {
    SimConfig sim;
    DemoGenConfig demos;
    std::uint64_t seed = 7;
    LearningConfig learning;
    std::string output_dir = "out";
    std::string name = "scenario";
};

/// Parses the sectioned key = value format on top of `base`.  Unknown
/// sections/keys and malformed values raise ConfigError naming the line.
ScenarioConfig parse_config(std::istream& is, const std::string& source = "<config>",
                            ScenarioConfig base = {});
ScenarioConfig load_config(const std::string& path);

/// Canonical text of every setting; parse_config(print_config(c)) == c.
std::string print_config(const ScenarioConfig& config);

/// FNV-1a 64 of the canonical text (output_dir excluded), as 16 hex digits.
std::string config_hash(const ScenarioConfig& config);
std::uint64_t fnv1a64(const std::string& text);

/// Synthetic demonstrations -> GMR reference + HVS profile (or loads them).
PocModels learn_models(const ScenarioConfig& config);

struct ExperimentResult {
    SimResult sim;
    MetricsReport metrics;
    std::string hash;
};

ExperimentResult run_experiment(const ScenarioConfig& config, const PocModels* models = nullptr);

struct CompareEntry {
    ControlMode mode;
    double drop_height;
};

/// Runs each (mode, height) pair with shared learned models and returns the table CSV.
std::string compare_table(const ScenarioConfig& config, const std::vector<CompareEntry>& entries,
                          std::vector<ExperimentResult>* results = nullptr);

}  // namespace catching
