#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "divs/tensor.hpp"
#include "divs/topology.hpp"

namespace divs {

struct Frame {
    int source_mt = 0;
    int seq = 0;
    Tensor3 tensor;
};

// Global ordering used for batch slicing, LSTM chunking and migration picks.
inline bool frame_order(const Frame& a, const Frame& b) {
    if (a.seq != b.seq) return a.seq < b.seq;
    return a.source_mt < b.source_mt;
}

struct FrameBatchPlan {
    int node_id = 0;
    int terminal_count = 0;   // N_j
    int alpha = 0;
    int batches = 1;          // b
    double batch_size = 0.0;  // k_j = N_j * alpha / b (real-valued)
    double mean_batch_size = 0.0;  // k_bar = N * alpha / (M * b)
};

// Generates units * alpha frames for one terminal, seq 0..units*alpha-1.
// Tensor values are uniform [0,1), a pure function of (seed, mt id, seq).
std::vector<Frame> window_stream(const MonitoringTerminal& mt, int units,
                                 const TensorShape& frame_shape, std::uint64_t seed);

// One plan per level-1 node; M counts level-1 nodes only.
std::vector<FrameBatchPlan> make_batch_plan(const Topology& t, int alpha, int b);

// Splits `total` frames into `b` per-batch counts that sum exactly to total.
// Ideal quota total/b has equal remainders everywhere, so the leftover goes
// to the earliest batches (largest-remainder rule).
std::vector<int> split_batch_counts(int total, int b);

// Per-frame feature vector for sequence models: the mean of each depth slice.
std::vector<double> frame_features(const Frame& f);

enum class TaskKind { Cnn, Lstm };

struct TaskSpec {
    std::string name;
    TaskKind kind = TaskKind::Cnn;
    int window = 1;  // LSTM sequence length T
};

class TaskRegistry {
public:
    void add(TaskSpec spec) { tasks_[spec.name] = std::move(spec); }
    // Throws std::invalid_argument for unknown names.
    const TaskSpec& get(const std::string& name) const;
    bool contains(const std::string& name) const { return tasks_.count(name) > 0; }

private:
    std::map<std::string, TaskSpec> tasks_;
};

struct TaskInputs {
    // CNN: one entry per frame, in frame_order. Indices into the input span.
    std::vector<std::size_t> frame_indices;
    // LSTM: non-overlapping sequences of `window` feature vectors.
    std::vector<std::vector<std::vector<double>>> sequences;
    // Frames left over after chunking (LSTM only).
    int remainder = 0;
};

TaskInputs extract_task_inputs(const std::vector<Frame>& frames, const std::string& task,
                               const TaskRegistry& registry);

}  // namespace divs
