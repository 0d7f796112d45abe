#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "divs/sync.hpp"
#include "divs/tensor.hpp"
#include "divs/topology.hpp"

namespace divs {

struct FieldError {
    std::string path;
    std::string message;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<FieldError> errors)
        : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

    const std::vector<FieldError>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<FieldError>& errors);
    std::vector<FieldError> errors_;
};

struct LevelConfig {
    int count = 1;
    std::vector<double> capacities{0.001};  // one shared value, or one per node
};

struct TopologyConfig {
    int terminals = 8;
    std::vector<LevelConfig> levels{{2, {0.001}}};
    // Empty: round-robin. Otherwise per-level-1-node terminal counts.
    std::vector<int> assignment;
};

struct StreamConfig {
    int alpha = 4;
    int batches = 2;
    TensorShape frame{1, 10, 10};
};

struct FilterConfig {
    int height = 3;
    int width = 3;
    int padding = 0;
    int stride = 1;
};

struct CnnConfig {
    FilterConfig filter1{3, 3, 0, 1};
    FilterConfig filter2{3, 3, 1, 1};
    int pool_window = 2;
    int pool_stride = 2;
    std::vector<int> fc_sizes{8, 6, 2};
};

struct LstmConfig {
    int hidden_size = 6;
    int window = 2;
    int output_size = 2;
    bool output_gate_bias = false;
};

struct ModelsConfig {
    double learning_rate = 0.05;
    // Analysis tasks sharing one ingested stream, in order: cnn, lstm, cnn2.
    int task_count = 2;
    std::vector<double> task_weights;  // defaults to 1.0 each
    CnnConfig cnn;
    LstmConfig lstm;
};

struct CostConfig {
    double ingest_seconds_per_frame = 0.0005;
    // Unset = infinite bandwidth (zero communication time).
    std::optional<double> bandwidth_bytes_per_sec;
    // Unset = derived from the frame shape (elements * 8).
    std::optional<std::uint64_t> frame_bytes;
};

struct SyncSettings {
    AggregationMode aggregation = AggregationMode::Normalized;
    double exponent_cap = 700.0;
    double convergence_tolerance = 1e-9;
};

struct MigrationConfig {
    bool enabled = true;
    long long xi = 1;
    double theta_balance = 0.0;
    int assessment_period_rounds = 2;
};

struct RunConfig {
    int rounds = 6;
    std::uint64_t seed = 42;
    int workers = 1;
    int ingest_units = 1;
    // "simulated": Eq. 8 timings come from the cost model (deterministic).
    // "measured": real per-node kernel wall-clock feeds the migration
    // assessment instead; reports stay cost-model based.
    bool measured_timing = false;
};

struct SweepConfig {
    std::string axis;  // "nodes" | "terminals" | "tasks"
    std::vector<int> values;
};

struct ScenarioConfig {
    TopologyConfig topology;
    StreamConfig stream;
    ModelsConfig models;
    CostConfig cost;
    SyncSettings sync;
    MigrationConfig migration;
    RunConfig run;
    std::optional<SweepConfig> sweep;
};

// Parses and validates a scenario configuration document. Unknown keys,
// type mismatches and range violations throw ConfigError with one entry per
// offending field path.
ScenarioConfig parse_config(const std::string& text);

// Canonical form with every default materialized; parse(emit(parse(x)))
// equals parse(x).
nlohmann::ordered_json config_to_json(const ScenarioConfig& config);

TopologySpec topology_spec(const ScenarioConfig& config);

// Bundled presets: "tiny" and "paper-section5".
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);
ScenarioConfig preset_config(const std::string& name);

}  // namespace divs
