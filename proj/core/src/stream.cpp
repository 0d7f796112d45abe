#include "divs/stream.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "divs/rng.hpp"

namespace divs {

std::vector<Frame> window_stream(const MonitoringTerminal& mt, int units,
                                 const TensorShape& frame_shape, std::uint64_t seed) {
    if (units < 1) throw std::invalid_argument("window_stream: units must be >= 1");
    if (frame_shape.depth < 1 || frame_shape.height < 1 || frame_shape.width < 1) {
        throw std::invalid_argument("window_stream: invalid frame shape " +
                                    frame_shape.to_string());
    }

    const int count = units * mt.frames_per_unit_time;
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(count));
    const std::uint64_t mt_key =
        CounterRng::derive(seed, 0x4652414d45ull /* frame domain */ + static_cast<std::uint64_t>(mt.id));
    for (int seq = 0; seq < count; ++seq) {
        CounterRng rng(CounterRng::derive(mt_key, static_cast<std::uint64_t>(seq)));
        Frame f;
        f.source_mt = mt.id;
        f.seq = seq;
        f.tensor = Tensor3(frame_shape);
        auto& data = f.tensor.data();
        for (std::size_t e = 0; e < data.size(); ++e) {
            data[e] = rng.uniform(e);
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<FrameBatchPlan> make_batch_plan(const Topology& t, int alpha, int b) {
    if (b < 1) throw std::invalid_argument("make_batch_plan: batch count must be >= 1");

    const auto level1 = t.nodes_at_level(1);
    if (level1.empty()) throw std::invalid_argument("make_batch_plan: no level-1 nodes");

    const int n_total = static_cast<int>(t.terminals.size());
    const int m = static_cast<int>(level1.size());
    const double k_bar = static_cast<double>(n_total) * alpha / (static_cast<double>(m) * b);

    std::vector<FrameBatchPlan> plans;
    plans.reserve(level1.size());
    for (int id : level1) {
        const auto& node = t.node(id);
        FrameBatchPlan p;
        p.node_id = id;
        p.terminal_count = static_cast<int>(node.connected_terminals.size());
        p.alpha = alpha;
        p.batches = b;
        p.batch_size = static_cast<double>(p.terminal_count) * alpha / b;
        p.mean_batch_size = k_bar;
        plans.push_back(p);
    }
    return plans;
}

std::vector<int> split_batch_counts(int total, int b) {
    if (b < 1) throw std::invalid_argument("split_batch_counts: batch count must be >= 1");
    if (total < 0) throw std::invalid_argument("split_batch_counts: negative total");
    std::vector<int> counts(static_cast<std::size_t>(b), total / b);
    const int rem = total % b;
    for (int i = 0; i < rem; ++i) counts[static_cast<std::size_t>(i)] += 1;
    return counts;
}

std::vector<double> frame_features(const Frame& f) {
    const auto& s = f.tensor.shape();
    std::vector<double> features(static_cast<std::size_t>(s.depth), 0.0);
    const double slice = static_cast<double>(s.height) * s.width;
    for (int d = 0; d < s.depth; ++d) {
        double acc = 0.0;
        for (int r = 0; r < s.height; ++r) {
            for (int c = 0; c < s.width; ++c) acc += f.tensor.at(d, r, c);
        }
        features[static_cast<std::size_t>(d)] = acc / slice;
    }
    return features;
}

const TaskSpec& TaskRegistry::get(const std::string& name) const {
    auto it = tasks_.find(name);
    if (it == tasks_.end()) {
        throw std::invalid_argument("unknown task name: " + name);
    }
    return it->second;
}

TaskInputs extract_task_inputs(const std::vector<Frame>& frames, const std::string& task,
                               const TaskRegistry& registry) {
    const TaskSpec& spec = registry.get(task);

    std::vector<std::size_t> order(frames.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return frame_order(frames[a], frames[b]);
    });

    TaskInputs out;
    if (spec.kind == TaskKind::Cnn) {
        out.frame_indices = std::move(order);
        return out;
    }

    const int t_len = spec.window;
    if (t_len < 1) throw std::invalid_argument("extract_task_inputs: window must be >= 1");
    const std::size_t full = frames.size() / static_cast<std::size_t>(t_len);
    out.remainder = static_cast<int>(frames.size() - full * static_cast<std::size_t>(t_len));
    out.sequences.reserve(full);
    for (std::size_t s = 0; s < full; ++s) {
        std::vector<std::vector<double>> seq;
        seq.reserve(static_cast<std::size_t>(t_len));
        for (int k = 0; k < t_len; ++k) {
            seq.push_back(frame_features(frames[order[s * static_cast<std::size_t>(t_len) +
                                                      static_cast<std::size_t>(k)]]));
        }
        out.sequences.push_back(std::move(seq));
    }
    return out;
}

}  // namespace divs
