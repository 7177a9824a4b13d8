// Config-driven scenario runner behind the command-line tool.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bhd/model.hpp"

namespace bhd {

// Configuration problem; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class ScenarioKind {
    steady_sweep,
    gap_sweep,
    g2,
    qfunction,
    gp_sweep,
    limit_cycle,
    trajectories,
    robustness,
    conserved_check,
};

std::string to_string(ScenarioKind kind);

struct SweepSpec {
    std::string parameter; // any ModelParams field name
    std::vector<double> values;
};

struct Numerics {
    int cutoff{0};             // 0: default table keyed by n_scale
    std::vector<int> cutoffs;  // conserved_check
    int eigenvalues{6};        // gap_sweep: eigenvalues requested
    int gaps{5};
    std::string strategy{"auto"};
    double shift{0.05};
    double rtol{1e-8};
    double atol{1e-10};
    double t_end{50.0};
    double reference_t_end{0.0}; // robustness: horizon of the perfect run (0: t_end)
    double dt{0.5};
    double transient_fraction{0.9};
    double drift_tol{1e-3};
    double drift_window{1000.0};
    int n_traj{100};
    std::uint64_t master_seed{12345};
    std::string initial_state{"vacuum"}; // vacuum | coherent
    cplx alpha1{0.0};
    cplx alpha2{0.1};
    int mode{1};
    double q_extent{2.0};
    int q_points{61};
    double envelope_width{20.0};
    bool asymmetric_search{false};
};

struct ScenarioConfig {
    ScenarioKind scenario{ScenarioKind::steady_sweep};
    ModelParams params{};
    std::optional<SweepSpec> sweep;
    Numerics numerics{};
    std::filesystem::path output_dir{"output"};
    std::vector<std::string> formats{"csv"};
    int threads{1};
    nlohmann::json resolved; // fully resolved config as written to the sidecar
};

// Parse a TOML (.toml) or JSON (.json) file. Throws ConfigError with location/field.
nlohmann::json load_config_tree(const std::filesystem::path& path);
ScenarioConfig parse_config(const nlohmann::json& tree);

struct RunSummary {
    std::vector<std::filesystem::path> files;
    nlohmann::json metadata;
};

// Runs the scenario, writes data files and the metadata sidecar run.json.
RunSummary run_scenario(const ScenarioConfig& config);

// Apply `value` to the ModelParams field named `name`.
void set_param(ModelParams& p, const std::string& name, double value);

std::string software_version();

} // namespace bhd
