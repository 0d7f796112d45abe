#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace divs {

// Ordered named parameter vector. Key schemas are shared so that "identical
// key order" checks are cheap; all weight sets of one model reference the
// same schema instance.
struct WeightSet {
    std::string model_id;
    int version = 0;  // batch index i
    std::optional<int> origin;  // node id; nullopt = global
    std::shared_ptr<const std::vector<std::string>> keys;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    // Serialized size on the wire: 8 bytes per parameter.
    std::uint64_t byte_size() const { return static_cast<std::uint64_t>(values.size()) * 8; }
};

WeightSet make_weight_set(std::string model_id, int version, std::optional<int> origin,
                          std::shared_ptr<const std::vector<std::string>> keys,
                          std::vector<double> values);

struct Contribution {
    int node_id = 0;
    double k_j = 0.0;
    double k_bar = 0.0;
    double q = 1.0;  // e^(k_j - k_bar)
};

// Q_j = e^(k_j - k_bar). Throws when the exponent exceeds `exponent_cap`
// (pathological batch skew would overflow the double range near 709).
double contribution(double k_j, double k_bar, double exponent_cap = 700.0);

Contribution make_contribution(int node_id, double k_j, double k_bar,
                               double exponent_cap = 700.0);

enum class AggregationMode { Raw, Normalized };

AggregationMode aggregation_mode_from_string(const std::string& name);
std::string to_string(AggregationMode mode);

// Raw: w_k = sum_j w_{j,k} * Q_j (the update rule verbatim; diverges for
// equal contributions). Normalized (default): divides by sum_j Q_j.
// Summation runs in ascending node-id order. Locals must share model id,
// version and key order, with exactly one contribution per local.
WeightSet aggregate(const std::vector<WeightSet>& locals,
                    const std::vector<Contribution>& contribs, AggregationMode mode);

struct CommEvent {
    enum class Kind { WeightUpload, WeightBroadcast, FrameMigration, FrameIngest };
    Kind kind = Kind::WeightUpload;
    int round = 0;
    int src = 0;  // node id; kCloudId for the cloud
    int dst = 0;
    std::uint64_t bytes = 0;
};

class CommLedger {
public:
    void record(CommEvent e) {
        total_[static_cast<std::size_t>(e.kind)] += e.bytes;
        events_.push_back(e);
    }
    std::uint64_t total(CommEvent::Kind kind) const {
        return total_[static_cast<std::size_t>(kind)];
    }
    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto b : total_) t += b;
        return t;
    }
    const std::vector<CommEvent>& events() const { return events_; }

private:
    std::vector<CommEvent> events_;
    std::uint64_t total_[4] = {0, 0, 0, 0};
};

// One node's slice of a batch round: its id, realized batch width k_j, and
// an opaque sample count handed to the trainer.
struct NodeBatch {
    int node_id = 0;
    double k_j = 0.0;
    std::size_t sample_count = 0;
};

// Trains `global_in` through one node's batch and returns the local weight
// set (same keys, version = global_in.version + 1, origin = node id).
using NodeTrainer =
    std::function<WeightSet(const WeightSet& start, const NodeBatch& batch)>;

struct BatchRoundResult {
    std::vector<WeightSet> locals;
    WeightSet global;
    std::vector<int> empty_batch_nodes;  // warned, contributed their input weights
};

// One bulk-synchronous round at a single aggregation point: every node trains
// sequentially through its batch from global_in, locals aggregate into the
// next global, and the global is broadcast back (recorded in the ledger,
// parent id `parent` as src/dst).
BatchRoundResult batch_round(const std::vector<NodeBatch>& nodes, const WeightSet& global_in,
                             const NodeTrainer& trainer, AggregationMode mode,
                             double exponent_cap, CommLedger* ledger = nullptr, int parent = -1,
                             int round = 0);

// True iff the max-abs parameter delta between the last two globals is
// strictly below `tolerance`. Requires >= 2 versions.
bool converged(const std::vector<WeightSet>& history, double tolerance);

}  // namespace divs
