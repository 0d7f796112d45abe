#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "divs/config.hpp"
#include "divs/migration.hpp"
#include "divs/nnkernels.hpp"
#include "divs/stream.hpp"
#include "divs/sync.hpp"
#include "divs/topology.hpp"

namespace divs {

// Simulated-time cost model. A round's makespan composes as
//   max over level-1 nodes of (ingest + compute + weight uploads)
//   + one inter-level upload hop (when levels > 1)
//   + one broadcast hop per level
//   + migration transfer time in rounds where a plan is applied.
// Compute charges capacity * task-weight per frame per task; ingest is
// charged once per frame no matter how many tasks read it.
struct CostModel {
    double ingest_seconds_per_frame = 0.0;
    std::optional<double> bandwidth_bytes_per_sec;  // unset = infinite
    std::uint64_t frame_bytes = 0;

    double transfer_seconds(std::uint64_t bytes) const {
        if (!bandwidth_bytes_per_sec) return 0.0;
        return static_cast<double>(bytes) / *bandwidth_bytes_per_sec;
    }
};

struct RoundRecord {
    int round = 0;
    double makespan = 0.0;
    std::vector<double> node_times;  // compute + upload per level-1 node, id order
    double balance = 0.0;            // post-migration epoch-time RMS deviation
    std::uint64_t bytes_weights = 0;
    std::uint64_t bytes_frames = 0;
    std::uint64_t bytes_ingest = 0;
    int migration_moves = 0;
};

struct MoveRecord {
    int round = 0;
    int src = 0;
    int dst = 0;
    long long frames = 0;
};

struct ScenarioReport {
    nlohmann::ordered_json config;  // canonical config echo
    std::string sweep_axis;         // empty outside sweeps
    int sweep_value = 0;
    std::vector<RoundRecord> rounds;
    std::vector<MoveRecord> migrations;
    double total_makespan = 0.0;
    double time_avg_balance = 0.0;
    std::uint64_t total_bytes_weights = 0;
    std::uint64_t total_bytes_frames = 0;
    std::uint64_t total_bytes_ingest = 0;
    std::uint64_t total_bytes() const {
        return total_bytes_weights + total_bytes_frames + total_bytes_ingest;
    }
    int convergence_round = -1;  // first round meeting the tolerance, -1 if none
};

// One analysis task: a model instance plus its synchronized weight state.
struct TaskState {
    TaskSpec spec;
    double weight = 1.0;  // compute-time multiplier
    CnnModel cnn;
    LstmModel lstm;
    WeightSet global;
    bool converged_seen = false;
};

struct SimState {
    ScenarioConfig config;
    Topology topology;
    CostModel cost;
    std::vector<TaskState> tasks;
    TaskRegistry registry;
    // Frame ownership per level-1 node, kept sorted by frame_order.
    std::map<int, std::vector<Frame>> pools;
    CommLedger ledger;
    int round = 0;
    int convergence_round = -1;
    std::vector<MoveRecord> migrations;
    // Wall-clock accumulators for measured timing, reset per assessment.
    std::map<int, double> measured_seconds;
    std::map<int, long long> measured_frames;
};

SimState init_state(const ScenarioConfig& config);

// Advances one batch round: ingest (round 0), per-node batch training of all
// tasks, hierarchical synchronization, migration assessment on its period,
// and metric collection.
RoundRecord step_round(SimState& state);

ScenarioReport run_scenario(const ScenarioConfig& config);

// One report per axis value, same seed everywhere. Axis "nodes" rewrites the
// level-1 count, "terminals" the terminal count, "tasks" the task count.
std::vector<ScenarioReport> scaling_sweep(const ScenarioConfig& base, const std::string& axis,
                                          const std::vector<int>& values);

// Deterministic pseudo-label in [0,1)^dim for a sample, keyed by frame
// identity so labels travel with migrated frames.
std::vector<double> pseudo_label(std::uint64_t seed, const std::string& task, int source_mt,
                                 int seq, std::size_t dim);

}  // namespace divs
