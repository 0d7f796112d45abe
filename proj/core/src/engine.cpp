#include "divs/engine.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "divs/rng.hpp"

namespace divs {

namespace {

constexpr std::uint64_t kLabelDomain = 0x4c4142454cull;
constexpr std::uint64_t kModelDomain = 0x4d4f44454cull;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::shared_ptr<const std::vector<std::string>> head_keys(const std::string& task,
                                                          const FcStack& stack) {
    return std::make_shared<const std::vector<std::string>>(fc_stack_param_names(stack, task));
}

}  // namespace

std::vector<double> pseudo_label(std::uint64_t seed, const std::string& task, int source_mt,
                                 int seq, std::size_t dim) {
    const std::uint64_t key = CounterRng::derive(
        CounterRng::derive(seed, kLabelDomain ^ fnv1a(task)),
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(source_mt)) << 32) ^
            static_cast<std::uint64_t>(static_cast<std::uint32_t>(seq)));
    CounterRng rng(key);
    std::vector<double> label(dim);
    for (std::size_t k = 0; k < dim; ++k) label[k] = rng.uniform(k);
    return label;
}

SimState init_state(const ScenarioConfig& config) {
    SimState state;
    state.config = config;
    state.topology = build_topology(topology_spec(config));

    state.cost.ingest_seconds_per_frame = config.cost.ingest_seconds_per_frame;
    state.cost.bandwidth_bytes_per_sec = config.cost.bandwidth_bytes_per_sec;
    state.cost.frame_bytes = config.cost.frame_bytes
                                 ? *config.cost.frame_bytes
                                 : static_cast<std::uint64_t>(config.stream.frame.elements()) * 8;

    // Tasks in fixed order: cnn, lstm, cnn2. Each gets its own seeded model.
    const char* task_names[3] = {"cnn", "lstm", "cnn2"};
    for (int t = 0; t < config.models.task_count; ++t) {
        TaskState task;
        task.spec.name = task_names[t];
        task.spec.kind = (t == 1) ? TaskKind::Lstm : TaskKind::Cnn;
        task.spec.window = config.models.lstm.window;
        task.weight = config.models.task_weights[static_cast<std::size_t>(t)];

        const std::uint64_t model_seed =
            CounterRng::derive(config.run.seed, kModelDomain ^ fnv1a(task.spec.name));
        if (task.spec.kind == TaskKind::Cnn) {
            const auto& m = config.models.cnn;
            task.cnn = make_cnn_model(
                config.stream.frame,
                TensorShape{config.stream.frame.depth, m.filter1.height, m.filter1.width},
                m.filter1.padding, m.filter1.stride,
                TensorShape{config.stream.frame.depth, m.filter2.height, m.filter2.width},
                m.filter2.padding, m.filter2.stride, PoolSpec{m.pool_window, m.pool_stride},
                m.fc_sizes, model_seed);
            task.global = make_weight_set(task.spec.name, 0, std::nullopt,
                                          head_keys(task.spec.name, task.cnn.head),
                                          fc_stack_get_params(task.cnn.head));
        } else {
            const auto& m = config.models.lstm;
            task.lstm = make_lstm_model(config.stream.frame.depth, m.hidden_size,
                                        m.output_size, m.output_gate_bias, model_seed);
            FcStack head{task.lstm.output};
            task.global = make_weight_set(task.spec.name, 0, std::nullopt,
                                          head_keys(task.spec.name, head),
                                          fc_stack_get_params(head));
        }
        state.registry.add(task.spec);
        state.tasks.push_back(std::move(task));
    }

    for (int id : state.topology.nodes_at_level(1)) {
        state.pools[id] = {};
    }
    return state;
}

namespace {

// Sorted batch slice [begin, end) of a node's pool for this round.
std::pair<std::size_t, std::size_t> batch_slice(std::size_t pool_size, int batches, int round) {
    const auto counts = split_batch_counts(static_cast<int>(pool_size), batches);
    const int idx = round % batches;
    std::size_t begin = 0;
    for (int i = 0; i < idx; ++i) begin += static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
    return {begin, begin + static_cast<std::size_t>(counts[static_cast<std::size_t>(idx)])};
}

// Trains one task's head through a node's batch, sequentially, starting from
// the round's global weights. Returns the node-local weight set.
WeightSet train_node_task(const SimState& state, const TaskState& task,
                          const std::vector<Frame>& batch, const WeightSet& global_in,
                          int node_id) {
    const int workers = state.config.run.workers;
    const double lr = state.config.models.learning_rate;

    FcStack head = (task.spec.kind == TaskKind::Cnn) ? task.cnn.head
                                                     : FcStack{task.lstm.output};
    fc_stack_set_params(head, global_in.values);
    const auto out_dim = static_cast<std::size_t>(head.back().out_size());

    const TaskInputs inputs = extract_task_inputs(batch, task.spec.name, state.registry);
    if (task.spec.kind == TaskKind::Cnn) {
        for (std::size_t idx : inputs.frame_indices) {
            const Frame& f = batch[idx];
            const auto features = task.cnn.features(f.tensor, workers);
            const auto target = pseudo_label(state.config.run.seed, task.spec.name,
                                             f.source_mt, f.seq, out_dim);
            fc_backprop_step(head, features, target, lr);
        }
    } else {
        // Leftover frames do not form a training sample this round.
        for (std::size_t s = 0; s < inputs.sequences.size(); ++s) {
            const auto& seq = inputs.sequences[s];
            const std::size_t hidden = static_cast<std::size_t>(task.lstm.params.hidden_size);
            std::vector<double> h_t(hidden, 0.0), c_t(hidden, 0.0);
            for (const auto& x : seq) {
                LstmStep step = lstm_cell(x, h_t, c_t, task.lstm.params);
                h_t = std::move(step.h);
                c_t = std::move(step.c);
            }
            const Frame& lead = batch[s * static_cast<std::size_t>(task.spec.window)];
            const auto target = pseudo_label(state.config.run.seed, task.spec.name,
                                             lead.source_mt, lead.seq, out_dim);
            fc_backprop_step(head, h_t, target, lr);
        }
    }

    return make_weight_set(global_in.model_id, global_in.version + 1, node_id, global_in.keys,
                           fc_stack_get_params(head));
}

}  // namespace

RoundRecord step_round(SimState& state) {
    const auto& config = state.config;
    const int round = state.round;
    const auto level1 = state.topology.nodes_at_level(1);
    const int batches = config.stream.batches;
    const double task_weight_sum = [&] {
        double s = 0.0;
        for (const auto& t : state.tasks) s += t.weight;
        return s;
    }();

    const std::uint64_t weights_before = state.ledger.total(CommEvent::Kind::WeightUpload) +
                                         state.ledger.total(CommEvent::Kind::WeightBroadcast);
    const std::uint64_t ingest_before = state.ledger.total(CommEvent::Kind::FrameIngest);
    const std::uint64_t frames_before = state.ledger.total(CommEvent::Kind::FrameMigration);

    RoundRecord rec;
    rec.round = round;

    // Ingest: the stream window arrives once, at round 0.
    std::map<int, std::size_t> ingested;
    if (round == 0) {
        for (const auto& mt : state.topology.terminals) {
            auto frames = window_stream(mt, config.run.ingest_units, config.stream.frame,
                                        config.run.seed);
            auto& pool = state.pools[mt.parent_en];
            ingested[mt.parent_en] += frames.size();
            state.ledger.record({CommEvent::Kind::FrameIngest, round, mt.id, mt.parent_en,
                                 static_cast<std::uint64_t>(frames.size()) *
                                     state.cost.frame_bytes});
            for (auto& f : frames) pool.push_back(std::move(f));
        }
        for (auto& [id, pool] : state.pools) {
            std::sort(pool.begin(), pool.end(), frame_order);
        }
    }

    // Per-node batch training of every task, then hierarchical aggregation.
    std::uint64_t params_bytes_total = 0;
    for (auto& task : state.tasks) params_bytes_total += task.global.byte_size();

    std::map<int, double> node_seconds;
    for (int id : level1) {
        const auto& pool = state.pools.at(id);
        const auto [begin, end] = batch_slice(pool.size(), batches, round);
        const double batch_frames = static_cast<double>(end - begin);
        double sec = batch_frames * state.topology.node(id).capacity * task_weight_sum;
        if (auto it = ingested.find(id); it != ingested.end()) {
            sec += static_cast<double>(it->second) * state.cost.ingest_seconds_per_frame;
        }
        sec += state.cost.transfer_seconds(params_bytes_total);  // uploads to the parent
        node_seconds[id] = sec;
        if (state.config.run.measured_timing) {
            state.measured_frames[id] += static_cast<long long>(end - begin);
        }
    }

    for (auto& task : state.tasks) {
        // Level-1 locals, trained from the current global.
        std::vector<WeightSet> locals;
        std::map<int, double> k_of_node;
        locals.reserve(level1.size());
        for (int id : level1) {
            const auto& pool = state.pools.at(id);
            const auto [begin, end] = batch_slice(pool.size(), batches, round);
            const std::vector<Frame> batch(pool.begin() + static_cast<std::ptrdiff_t>(begin),
                                           pool.begin() + static_cast<std::ptrdiff_t>(end));
            // Realized batch width from current ownership.
            k_of_node[id] = static_cast<double>(pool.size()) / static_cast<double>(batches);
            if (batch.empty()) {
                locals.push_back(make_weight_set(task.global.model_id, task.global.version + 1,
                                                 id, task.global.keys, task.global.values));
            } else if (state.config.run.measured_timing) {
                const auto t0 = std::chrono::steady_clock::now();
                locals.push_back(train_node_task(state, task, batch, task.global, id));
                state.measured_seconds[id] +=
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                        .count();
            } else {
                locals.push_back(train_node_task(state, task, batch, task.global, id));
            }
            state.ledger.record({CommEvent::Kind::WeightUpload, round, id,
                                 state.topology.node(id).parent, locals.back().byte_size()});
        }

        // Aggregate at each level-1 parent, then upward to the cloud. Every
        // hop recomputes contributions from its children's batch totals.
        std::vector<WeightSet> partials = std::move(locals);
        std::map<int, double> k_of_partial = std::move(k_of_node);
        while (true) {
            // Group partials by parent.
            std::map<int, std::vector<std::size_t>> by_parent;
            for (std::size_t i = 0; i < partials.size(); ++i) {
                by_parent[state.topology.node(*partials[i].origin).parent].push_back(i);
            }
            const bool at_cloud = by_parent.size() == 1 && by_parent.begin()->first == kCloudId;

            std::vector<WeightSet> next;
            std::map<int, double> next_k;
            for (const auto& [parent, members] : by_parent) {
                std::vector<WeightSet> group;
                std::vector<Contribution> contribs;
                double k_sum = 0.0;
                for (std::size_t i : members) k_sum += k_of_partial.at(*partials[i].origin);
                const double k_bar = k_sum / static_cast<double>(members.size());
                for (std::size_t i : members) {
                    const int origin = *partials[i].origin;
                    contribs.push_back(make_contribution(origin, k_of_partial.at(origin), k_bar,
                                                         config.sync.exponent_cap));
                    group.push_back(partials[i]);
                }
                WeightSet merged = aggregate(group, contribs, config.sync.aggregation);
                if (!at_cloud) {
                    merged.origin = parent;  // partial owned by the aggregating node
                    state.ledger.record({CommEvent::Kind::WeightUpload, round, parent,
                                         state.topology.node(parent).parent,
                                         merged.byte_size()});
                    next_k[parent] = k_sum;  // subtree batch total
                }
                next.push_back(std::move(merged));
            }
            partials = std::move(next);
            if (at_cloud) break;
            k_of_partial = std::move(next_k);
        }

        WeightSet new_global = std::move(partials.front());
        new_global.origin = std::nullopt;

        // Broadcast back down: one transfer per node per hop.
        for (const auto& n : state.topology.nodes) {
            state.ledger.record({CommEvent::Kind::WeightBroadcast, round, n.parent, n.id,
                                 new_global.byte_size()});
        }

        if (!task.converged_seen) {
            std::vector<WeightSet> pair{task.global, new_global};
            if (converged(pair, config.sync.convergence_tolerance)) {
                task.converged_seen = true;
            }
        }
        task.global = std::move(new_global);
    }

    if (state.convergence_round < 0 &&
        std::all_of(state.tasks.begin(), state.tasks.end(),
                    [](const TaskState& t) { return t.converged_seen; })) {
        state.convergence_round = round;
    }

    // Round makespan: slowest node, plus the inter-level hop, plus one
    // broadcast hop per level.
    double makespan = 0.0;
    rec.node_times.reserve(level1.size());
    for (int id : level1) {
        makespan = std::max(makespan, node_seconds.at(id));
        rec.node_times.push_back(node_seconds.at(id));
    }
    if (state.topology.levels > 1) {
        makespan += state.cost.transfer_seconds(params_bytes_total);
    }
    makespan += static_cast<double>(state.topology.levels) *
                state.cost.transfer_seconds(params_bytes_total);

    // Migration assessment at the end of its period.
    const double sum_weights = task_weight_sum;
    if (config.migration.enabled &&
        (round + 1) % config.migration.assessment_period_rounds == 0) {
        std::vector<NodeTiming> timings;
        timings.reserve(level1.size());
        double t_sum = 0.0;
        for (int id : level1) {
            NodeTiming nt;
            nt.node_id = id;
            nt.frames_held = static_cast<long long>(state.pools.at(id).size());
            nt.seconds_per_frame = state.topology.node(id).capacity * sum_weights;
            if (config.run.measured_timing && state.measured_frames[id] > 0) {
                // Mean realized seconds per frame over this assessment period.
                nt.seconds_per_frame = state.measured_seconds[id] /
                                       static_cast<double>(state.measured_frames[id]);
            }
            timings.push_back(nt);
            t_sum += nt.epoch_time();
        }
        state.measured_seconds.clear();
        state.measured_frames.clear();
        const double t_bar = t_sum / static_cast<double>(timings.size());
        std::vector<double> epoch_times;
        for (const auto& nt : timings) epoch_times.push_back(nt.epoch_time());
        const double balance_pre = balance_metric(epoch_times, t_bar);

        if (should_migrate(balance_pre, config.migration.theta_balance)) {
            std::map<int, long long> deltas;
            for (const auto& nt : timings) {
                deltas[nt.node_id] =
                    migration_amount(t_bar, nt.epoch_time(), nt.seconds_per_frame);
            }
            const auto lists = build_lists(deltas, config.migration.xi);
            const auto plan = match_migrations(lists, config.migration.xi);

            std::uint64_t moved_frames = 0;
            for (const auto& move : plan.moves) {
                auto& src_pool = state.pools.at(move.src);
                if (static_cast<long long>(src_pool.size()) < move.frames) {
                    throw std::logic_error("engine: migration plan exceeds pool");
                }
                auto& dst_pool = state.pools.at(move.dst);
                // Highest sequence numbers leave first; pools stay sorted.
                for (long long k = 0; k < move.frames; ++k) {
                    dst_pool.push_back(std::move(src_pool.back()));
                    src_pool.pop_back();
                }
                std::sort(dst_pool.begin(), dst_pool.end(), frame_order);
                moved_frames += static_cast<std::uint64_t>(move.frames);
                state.ledger.record({CommEvent::Kind::FrameMigration, round, move.src, move.dst,
                                     static_cast<std::uint64_t>(move.frames) *
                                         state.cost.frame_bytes});
                state.migrations.push_back({round, move.src, move.dst, move.frames});
                rec.migration_moves += 1;
            }
            makespan += state.cost.transfer_seconds(moved_frames * state.cost.frame_bytes);
        }
    }

    // Post-round balance from current ownership.
    {
        std::vector<double> epoch_times;
        double t_sum = 0.0;
        for (int id : level1) {
            const double t = state.topology.node(id).capacity * sum_weights *
                             static_cast<double>(state.pools.at(id).size());
            epoch_times.push_back(t);
            t_sum += t;
        }
        rec.balance = balance_metric(epoch_times, t_sum / static_cast<double>(epoch_times.size()));
    }

    rec.makespan = makespan;
    rec.bytes_weights = state.ledger.total(CommEvent::Kind::WeightUpload) +
                        state.ledger.total(CommEvent::Kind::WeightBroadcast) - weights_before;
    rec.bytes_ingest = state.ledger.total(CommEvent::Kind::FrameIngest) - ingest_before;
    rec.bytes_frames = state.ledger.total(CommEvent::Kind::FrameMigration) - frames_before;

    state.round += 1;
    return rec;
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
    SimState state = init_state(config);
    ScenarioReport report;
    report.config = config_to_json(config);
    for (int r = 0; r < config.run.rounds; ++r) {
        report.rounds.push_back(step_round(state));
    }
    for (const auto& rr : report.rounds) {
        report.total_makespan += rr.makespan;
        report.time_avg_balance += rr.balance;
        report.total_bytes_weights += rr.bytes_weights;
        report.total_bytes_frames += rr.bytes_frames;
        report.total_bytes_ingest += rr.bytes_ingest;
    }
    report.time_avg_balance /= static_cast<double>(report.rounds.size());
    report.migrations = state.migrations;
    report.convergence_round = state.convergence_round;
    return report;
}

std::vector<ScenarioReport> scaling_sweep(const ScenarioConfig& base, const std::string& axis,
                                          const std::vector<int>& values) {
    if (values.empty()) throw std::invalid_argument("scaling_sweep: no axis values");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] <= values[i - 1]) {
            throw std::invalid_argument("scaling_sweep: values must be ascending");
        }
    }

    std::vector<ScenarioReport> reports;
    reports.reserve(values.size());
    for (int v : values) {
        ScenarioConfig point = base;
        point.sweep.reset();
        if (axis == "nodes") {
            if (point.topology.levels.empty()) {
                throw std::invalid_argument("scaling_sweep: no levels configured");
            }
            if (point.topology.levels[0].capacities.size() != 1) {
                throw std::invalid_argument(
                    "scaling_sweep: node sweep needs a single shared level-1 capacity");
            }
            if (!point.topology.assignment.empty()) {
                throw std::invalid_argument(
                    "scaling_sweep: node sweep requires round-robin assignment");
            }
            point.topology.levels[0].count = v;
        } else if (axis == "terminals") {
            if (!point.topology.assignment.empty()) {
                throw std::invalid_argument(
                    "scaling_sweep: terminal sweep requires round-robin assignment");
            }
            point.topology.terminals = v;
        } else if (axis == "tasks") {
            if (v > 3) throw std::invalid_argument("scaling_sweep: at most 3 tasks");
            point.models.task_count = v;
            point.models.task_weights.assign(static_cast<std::size_t>(v), 1.0);
        } else {
            throw std::invalid_argument("scaling_sweep: unknown axis " + axis);
        }
        ScenarioReport report = run_scenario(point);
        report.sweep_axis = axis;
        report.sweep_value = v;
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace divs
