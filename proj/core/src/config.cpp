#include "divs/config.hpp"

#include <numeric>

#include "divs/nnkernels.hpp"

namespace divs {

using nlohmann::ordered_json;

std::string ConfigError::join(const std::vector<FieldError>& errors) {
    std::string msg = "configuration invalid:";
    for (const auto& e : errors) msg += "\n  " + e.path + ": " + e.message;
    return msg;
}

namespace {

// Cursor over one JSON object: typed reads with defaults, error collection
// with full field paths, and unknown-key detection.
class Reader {
public:
    Reader(const ordered_json& node, std::string path, std::vector<FieldError>& errors)
        : node_(node), path_(std::move(path)), errors_(errors) {}

    std::string at(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    bool has(const std::string& key) {
        seen_.push_back(key);
        return node_.contains(key);
    }

    const ordered_json* raw(const std::string& key) {
        return has(key) ? &node_.at(key) : nullptr;
    }

    void error(const std::string& key, const std::string& message) {
        errors_.push_back({at(key), message});
    }

    int integer(const std::string& key, int fallback, int lo, int hi) {
        const auto* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) {
            error(key, "expected an integer");
            return fallback;
        }
        const auto x = v->get<long long>();
        if (x < lo || x > hi) {
            error(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return fallback;
        }
        return static_cast<int>(x);
    }

    long long integer64(const std::string& key, long long fallback, long long lo) {
        const auto* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) {
            error(key, "expected an integer");
            return fallback;
        }
        const auto x = v->get<long long>();
        if (x < lo) {
            error(key, "must be >= " + std::to_string(lo));
            return fallback;
        }
        return x;
    }

    double number(const std::string& key, double fallback, double lo,
                  bool lo_exclusive = false) {
        const auto* v = raw(key);
        if (!v) return fallback;
        if (!v->is_number()) {
            error(key, "expected a number");
            return fallback;
        }
        const double x = v->get<double>();
        if (lo_exclusive ? !(x > lo) : !(x >= lo)) {
            error(key, std::string("must be ") + (lo_exclusive ? "> " : ">= ") +
                           std::to_string(lo));
            return fallback;
        }
        return x;
    }

    bool boolean(const std::string& key, bool fallback) {
        const auto* v = raw(key);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            error(key, "expected a boolean");
            return fallback;
        }
        return v->get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const auto* v = raw(key);
        if (!v) return fallback;
        if (!v->is_string()) {
            error(key, "expected a string");
            return fallback;
        }
        return v->get<std::string>();
    }

    // Child object reader; missing key yields an empty object.
    ordered_json child(const std::string& key) {
        const auto* v = raw(key);
        if (!v) return ordered_json::object();
        if (!v->is_object()) {
            error(key, "expected an object");
            return ordered_json::object();
        }
        return *v;
    }

    void finish() {
        if (!node_.is_object()) return;
        for (const auto& [key, value] : node_.items()) {
            (void)value;
            bool known = false;
            for (const auto& s : seen_) {
                if (s == key) {
                    known = true;
                    break;
                }
            }
            if (!known) error(key, "unknown key");
        }
    }

private:
    const ordered_json& node_;
    std::string path_;
    std::vector<FieldError>& errors_;
    std::vector<std::string> seen_;
};

TopologyConfig parse_topology(const ordered_json& node, std::vector<FieldError>& errors) {
    TopologyConfig out;
    Reader r(node, "topology", errors);
    out.terminals = r.integer("terminals", out.terminals, 1, 1000000);

    if (const auto* levels = r.raw("levels")) {
        if (!levels->is_array() || levels->empty()) {
            r.error("levels", "expected a non-empty array of level objects");
        } else {
            out.levels.clear();
            for (std::size_t li = 0; li < levels->size(); ++li) {
                const std::string lpath = "topology.levels[" + std::to_string(li) + "]";
                if (!(*levels)[li].is_object()) {
                    errors.push_back({lpath, "expected an object"});
                    continue;
                }
                Reader lr((*levels)[li], lpath, errors);
                LevelConfig lc;
                lc.count = lr.integer("count", 1, 1, 100000);
                lc.capacities.clear();
                if (const auto* caps = lr.raw("capacities")) {
                    if (!caps->is_array() || caps->empty()) {
                        lr.error("capacities", "expected a non-empty array of numbers");
                    } else {
                        for (const auto& c : *caps) {
                            if (!c.is_number() || !(c.get<double>() > 0.0)) {
                                lr.error("capacities", "every capacity must be > 0");
                                break;
                            }
                            lc.capacities.push_back(c.get<double>());
                        }
                        if (lc.capacities.size() != 1 &&
                            lc.capacities.size() != static_cast<std::size_t>(lc.count)) {
                            lr.error("capacities", "need 1 value or one per node (count=" +
                                                       std::to_string(lc.count) + ")");
                        }
                    }
                } else {
                    lc.capacities.push_back(lr.number("capacity", 0.001, 0.0, true));
                }
                lr.finish();
                out.levels.push_back(std::move(lc));
            }
        }
    }

    if (const auto* assignment = r.raw("assignment")) {
        if (assignment->is_string()) {
            if (assignment->get<std::string>() != "round_robin") {
                r.error("assignment", "expected \"round_robin\" or an array of counts");
            }
        } else if (assignment->is_array()) {
            for (const auto& c : *assignment) {
                if (!c.is_number_integer() || c.get<long long>() < 0) {
                    r.error("assignment", "expected non-negative integer counts");
                    out.assignment.clear();
                    break;
                }
                out.assignment.push_back(c.get<int>());
            }
            if (!out.assignment.empty() && !out.levels.empty()) {
                if (out.assignment.size() != static_cast<std::size_t>(out.levels[0].count)) {
                    r.error("assignment", "must list one count per level-1 node");
                } else if (std::accumulate(out.assignment.begin(), out.assignment.end(), 0) !=
                           out.terminals) {
                    r.error("assignment", "counts must sum to topology.terminals");
                }
            }
        } else {
            r.error("assignment", "expected \"round_robin\" or an array of counts");
        }
    }
    r.finish();
    return out;
}

StreamConfig parse_stream(const ordered_json& node, std::vector<FieldError>& errors) {
    StreamConfig out;
    Reader r(node, "stream", errors);
    out.alpha = r.integer("alpha", out.alpha, 1, 100000);
    out.batches = r.integer("batches", out.batches, 1, 100000);
    const auto frame = r.child("frame");
    Reader fr(frame, "stream.frame", errors);
    out.frame.depth = fr.integer("depth", out.frame.depth, 1, 4096);
    out.frame.height = fr.integer("height", out.frame.height, 1, 4096);
    out.frame.width = fr.integer("width", out.frame.width, 1, 4096);
    fr.finish();
    r.finish();
    return out;
}

FilterConfig parse_filter(const ordered_json& node, const std::string& path,
                          std::vector<FieldError>& errors, const FilterConfig& fallback) {
    FilterConfig out = fallback;
    Reader r(node, path, errors);
    out.height = r.integer("height", out.height, 1, 4096);
    out.width = r.integer("width", out.width, 1, 4096);
    out.padding = r.integer("padding", out.padding, 0, 4096);
    out.stride = r.integer("stride", out.stride, 1, 4096);
    r.finish();
    return out;
}

ModelsConfig parse_models(const ordered_json& node, std::vector<FieldError>& errors) {
    ModelsConfig out;
    Reader r(node, "models", errors);
    out.learning_rate = r.number("learning_rate", out.learning_rate, 0.0, true);
    out.task_count = r.integer("task_count", out.task_count, 1, 3);

    if (const auto* weights = r.raw("task_weights")) {
        if (!weights->is_array()) {
            r.error("task_weights", "expected an array of numbers");
        } else {
            for (const auto& w : *weights) {
                if (!w.is_number() || !(w.get<double>() > 0.0)) {
                    r.error("task_weights", "every weight must be > 0");
                    out.task_weights.clear();
                    break;
                }
                out.task_weights.push_back(w.get<double>());
            }
            if (!out.task_weights.empty() &&
                out.task_weights.size() != static_cast<std::size_t>(out.task_count)) {
                r.error("task_weights", "must list one weight per task (task_count=" +
                                            std::to_string(out.task_count) + ")");
            }
        }
    }
    if (out.task_weights.empty()) {
        out.task_weights.assign(static_cast<std::size_t>(out.task_count), 1.0);
    }

    const auto cnn = r.child("cnn");
    {
        Reader cr(cnn, "models.cnn", errors);
        out.cnn.filter1 = parse_filter(cr.child("filter1"), "models.cnn.filter1", errors,
                                       out.cnn.filter1);
        out.cnn.filter2 = parse_filter(cr.child("filter2"), "models.cnn.filter2", errors,
                                       out.cnn.filter2);
        const auto pool = cr.child("pool");
        Reader pr(pool, "models.cnn.pool", errors);
        out.cnn.pool_window = pr.integer("window", out.cnn.pool_window, 1, 4096);
        out.cnn.pool_stride = pr.integer("stride", out.cnn.pool_stride, 1, 4096);
        pr.finish();
        if (const auto* sizes = cr.raw("fc_sizes")) {
            if (!sizes->is_array() || sizes->size() != 3) {
                cr.error("fc_sizes", "expected exactly 3 layer sizes");
            } else {
                out.cnn.fc_sizes.clear();
                for (const auto& s : *sizes) {
                    if (!s.is_number_integer() || s.get<long long>() < 1) {
                        cr.error("fc_sizes", "every size must be an integer >= 1");
                        out.cnn.fc_sizes = {8, 6, 2};
                        break;
                    }
                    out.cnn.fc_sizes.push_back(s.get<int>());
                }
            }
        }
        cr.finish();
    }

    const auto lstm = r.child("lstm");
    {
        Reader lr(lstm, "models.lstm", errors);
        out.lstm.hidden_size = lr.integer("hidden_size", out.lstm.hidden_size, 1, 65536);
        out.lstm.window = lr.integer("window", out.lstm.window, 1, 65536);
        out.lstm.output_size = lr.integer("output_size", out.lstm.output_size, 1, 65536);
        out.lstm.output_gate_bias = lr.boolean("output_gate_bias", out.lstm.output_gate_bias);
        lr.finish();
    }
    r.finish();
    return out;
}

CostConfig parse_cost(const ordered_json& node, std::vector<FieldError>& errors) {
    CostConfig out;
    Reader r(node, "cost", errors);
    out.ingest_seconds_per_frame =
        r.number("ingest_seconds_per_frame", out.ingest_seconds_per_frame, 0.0);
    if (const auto* bw = r.raw("bandwidth_bytes_per_sec")) {
        if (bw->is_null()) {
            out.bandwidth_bytes_per_sec.reset();
        } else if (!bw->is_number() || !(bw->get<double>() > 0.0)) {
            r.error("bandwidth_bytes_per_sec", "expected a number > 0 or null (infinite)");
        } else {
            out.bandwidth_bytes_per_sec = bw->get<double>();
        }
    }
    if (const auto* fb = r.raw("frame_bytes")) {
        if (fb->is_null()) {
            out.frame_bytes.reset();
        } else if (!fb->is_number_integer() || fb->get<long long>() < 1) {
            r.error("frame_bytes", "expected an integer >= 1 or null (derived)");
        } else {
            out.frame_bytes = fb->get<std::uint64_t>();
        }
    }
    r.finish();
    return out;
}

SyncSettings parse_sync(const ordered_json& node, std::vector<FieldError>& errors) {
    SyncSettings out;
    Reader r(node, "sync", errors);
    const std::string mode = r.text("aggregation", to_string(out.aggregation));
    if (mode == "raw") {
        out.aggregation = AggregationMode::Raw;
    } else if (mode == "normalized") {
        out.aggregation = AggregationMode::Normalized;
    } else {
        r.error("aggregation", "expected \"raw\" or \"normalized\"");
    }
    out.exponent_cap = r.number("exponent_cap", out.exponent_cap, 0.0, true);
    out.convergence_tolerance =
        r.number("convergence_tolerance", out.convergence_tolerance, 0.0, true);
    r.finish();
    return out;
}

MigrationConfig parse_migration(const ordered_json& node, std::vector<FieldError>& errors) {
    MigrationConfig out;
    Reader r(node, "migration", errors);
    out.enabled = r.boolean("enabled", out.enabled);
    out.xi = r.integer64("xi", out.xi, 0);
    out.theta_balance = r.number("theta_balance", out.theta_balance, 0.0);
    out.assessment_period_rounds =
        r.integer("assessment_period_rounds", out.assessment_period_rounds, 1, 1000000);
    r.finish();
    return out;
}

RunConfig parse_run(const ordered_json& node, std::vector<FieldError>& errors) {
    RunConfig out;
    Reader r(node, "run", errors);
    out.rounds = r.integer("rounds", out.rounds, 1, 1000000);
    if (const auto* seed = r.raw("seed")) {
        if (!seed->is_number_integer() || seed->get<long long>() < 0) {
            r.error("seed", "expected a non-negative integer");
        } else {
            out.seed = seed->get<std::uint64_t>();
        }
    }
    out.workers = r.integer("workers", out.workers, 1, 4096);
    out.ingest_units = r.integer("ingest_units", out.ingest_units, 1, 1000000);
    const std::string timing = r.text("timing", out.measured_timing ? "measured" : "simulated");
    if (timing == "simulated") {
        out.measured_timing = false;
    } else if (timing == "measured") {
        out.measured_timing = true;
    } else {
        r.error("timing", "expected \"simulated\" or \"measured\"");
    }
    r.finish();
    return out;
}

std::optional<SweepConfig> parse_sweep(const ordered_json& node,
                                       std::vector<FieldError>& errors) {
    if (node.empty()) return std::nullopt;
    SweepConfig out;
    Reader r(node, "sweep", errors);
    out.axis = r.text("axis", "");
    if (out.axis != "nodes" && out.axis != "terminals" && out.axis != "tasks") {
        r.error("axis", "expected \"nodes\", \"terminals\" or \"tasks\"");
    }
    if (const auto* values = r.raw("values")) {
        if (!values->is_array() || values->empty()) {
            r.error("values", "expected a non-empty array of positive integers");
        } else {
            int prev = 0;
            for (const auto& v : *values) {
                if (!v.is_number_integer() || v.get<long long>() < 1) {
                    r.error("values", "every value must be an integer >= 1");
                    out.values.clear();
                    break;
                }
                const int x = v.get<int>();
                if (x <= prev) {
                    r.error("values", "values must be ascending");
                    out.values.clear();
                    break;
                }
                out.values.push_back(x);
                prev = x;
            }
        }
    } else {
        r.error("values", "required for a sweep");
    }
    r.finish();
    if (!out.values.empty() && out.axis == "tasks") {
        if (out.values.back() > 3) {
            errors.push_back({"sweep.values", "task sweep values must be <= 3"});
        }
    }
    return out;
}

// Cross-field checks that need the whole config: the conv/pool chain must be
// realizable on the configured frame shape.
void validate_model_chain(const ScenarioConfig& c, std::vector<FieldError>& errors) {
    try {
        const auto& m = c.models.cnn;
        make_cnn_model(c.stream.frame,
                       TensorShape{c.stream.frame.depth, m.filter1.height, m.filter1.width},
                       m.filter1.padding, m.filter1.stride,
                       TensorShape{c.stream.frame.depth, m.filter2.height, m.filter2.width},
                       m.filter2.padding, m.filter2.stride,
                       PoolSpec{m.pool_window, m.pool_stride}, m.fc_sizes, 0);
    } catch (const std::exception& e) {
        errors.push_back({"models.cnn", std::string("layer chain invalid: ") + e.what()});
    }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::vector<FieldError>{{"(document)", e.what()}});
    }
    if (!doc.is_object()) {
        throw ConfigError(
            std::vector<FieldError>{{"(document)", "top level must be an object"}});
    }

    std::vector<FieldError> errors;
    ScenarioConfig config;
    Reader root(doc, "", errors);
    config.topology = parse_topology(root.child("topology"), errors);
    config.stream = parse_stream(root.child("stream"), errors);
    config.models = parse_models(root.child("models"), errors);
    config.cost = parse_cost(root.child("cost"), errors);
    config.sync = parse_sync(root.child("sync"), errors);
    config.migration = parse_migration(root.child("migration"), errors);
    config.run = parse_run(root.child("run"), errors);
    config.sweep = parse_sweep(root.child("sweep"), errors);
    root.finish();

    if (errors.empty()) validate_model_chain(config, errors);
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return config;
}

nlohmann::ordered_json config_to_json(const ScenarioConfig& c) {
    ordered_json j;
    j["topology"]["terminals"] = c.topology.terminals;
    j["topology"]["levels"] = ordered_json::array();
    for (const auto& lv : c.topology.levels) {
        ordered_json lj;
        lj["count"] = lv.count;
        if (lv.capacities.size() == 1) {
            lj["capacity"] = lv.capacities[0];
        } else {
            lj["capacities"] = lv.capacities;
        }
        j["topology"]["levels"].push_back(lj);
    }
    if (c.topology.assignment.empty()) {
        j["topology"]["assignment"] = "round_robin";
    } else {
        j["topology"]["assignment"] = c.topology.assignment;
    }

    j["stream"]["alpha"] = c.stream.alpha;
    j["stream"]["batches"] = c.stream.batches;
    j["stream"]["frame"]["depth"] = c.stream.frame.depth;
    j["stream"]["frame"]["height"] = c.stream.frame.height;
    j["stream"]["frame"]["width"] = c.stream.frame.width;

    j["models"]["learning_rate"] = c.models.learning_rate;
    j["models"]["task_count"] = c.models.task_count;
    j["models"]["task_weights"] = c.models.task_weights;
    auto filter_json = [](const FilterConfig& f) {
        ordered_json fj;
        fj["height"] = f.height;
        fj["width"] = f.width;
        fj["padding"] = f.padding;
        fj["stride"] = f.stride;
        return fj;
    };
    j["models"]["cnn"]["filter1"] = filter_json(c.models.cnn.filter1);
    j["models"]["cnn"]["filter2"] = filter_json(c.models.cnn.filter2);
    j["models"]["cnn"]["pool"]["window"] = c.models.cnn.pool_window;
    j["models"]["cnn"]["pool"]["stride"] = c.models.cnn.pool_stride;
    j["models"]["cnn"]["fc_sizes"] = c.models.cnn.fc_sizes;
    j["models"]["lstm"]["hidden_size"] = c.models.lstm.hidden_size;
    j["models"]["lstm"]["window"] = c.models.lstm.window;
    j["models"]["lstm"]["output_size"] = c.models.lstm.output_size;
    j["models"]["lstm"]["output_gate_bias"] = c.models.lstm.output_gate_bias;

    j["cost"]["ingest_seconds_per_frame"] = c.cost.ingest_seconds_per_frame;
    j["cost"]["bandwidth_bytes_per_sec"] =
        c.cost.bandwidth_bytes_per_sec ? ordered_json(*c.cost.bandwidth_bytes_per_sec)
                                       : ordered_json(nullptr);
    j["cost"]["frame_bytes"] =
        c.cost.frame_bytes ? ordered_json(*c.cost.frame_bytes) : ordered_json(nullptr);

    j["sync"]["aggregation"] = to_string(c.sync.aggregation);
    j["sync"]["exponent_cap"] = c.sync.exponent_cap;
    j["sync"]["convergence_tolerance"] = c.sync.convergence_tolerance;

    j["migration"]["enabled"] = c.migration.enabled;
    j["migration"]["xi"] = c.migration.xi;
    j["migration"]["theta_balance"] = c.migration.theta_balance;
    j["migration"]["assessment_period_rounds"] = c.migration.assessment_period_rounds;

    j["run"]["rounds"] = c.run.rounds;
    j["run"]["seed"] = c.run.seed;
    j["run"]["workers"] = c.run.workers;
    j["run"]["ingest_units"] = c.run.ingest_units;
    j["run"]["timing"] = c.run.measured_timing ? "measured" : "simulated";

    if (c.sweep) {
        j["sweep"]["axis"] = c.sweep->axis;
        j["sweep"]["values"] = c.sweep->values;
    }
    return j;
}

TopologySpec topology_spec(const ScenarioConfig& config) {
    TopologySpec spec;
    spec.terminals = config.topology.terminals;
    spec.alpha = config.stream.alpha;
    for (const auto& lv : config.topology.levels) {
        spec.levels.push_back({lv.count, lv.capacities});
    }
    spec.explicit_assignment = config.topology.assignment;
    return spec;
}

std::vector<std::string> preset_names() { return {"tiny", "paper-section5"}; }

std::string preset_text(const std::string& name) {
    if (name == "tiny") {
        // Two heterogeneous level-1 nodes under one aggregator; unbalanced
        // terminal assignment so migration has work to do.
        return R"({
  "topology": {
    "terminals": 8,
    "levels": [
      {"count": 2, "capacities": [0.004, 0.002]},
      {"count": 1, "capacity": 0.001}
    ],
    "assignment": [5, 3]
  },
  "stream": {"alpha": 4, "batches": 2, "frame": {"depth": 1, "height": 10, "width": 10}},
  "models": {
    "learning_rate": 0.05,
    "task_count": 2,
    "cnn": {
      "filter1": {"height": 3, "width": 3, "padding": 0, "stride": 1},
      "filter2": {"height": 3, "width": 3, "padding": 1, "stride": 1},
      "pool": {"window": 2, "stride": 2},
      "fc_sizes": [8, 6, 2]
    },
    "lstm": {"hidden_size": 6, "window": 2, "output_size": 2}
  },
  "cost": {"ingest_seconds_per_frame": 0.001, "bandwidth_bytes_per_sec": null, "frame_bytes": null},
  "sync": {"aggregation": "normalized", "convergence_tolerance": 1e-9},
  "migration": {"enabled": true, "xi": 1, "theta_balance": 0.0, "assessment_period_rounds": 2},
  "run": {"rounds": 6, "seed": 42, "workers": 1, "ingest_units": 1}
})";
    }
    if (name == "paper-section5") {
        // 200 terminals over 30 street-level nodes in two hardware classes,
        // 5 district aggregators, gigabit links.
        return R"({
  "topology": {
    "terminals": 200,
    "levels": [
      {"count": 30, "capacities": [0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.002, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001, 0.001]},
      {"count": 5, "capacity": 0.001}
    ],
    "assignment": "round_robin"
  },
  "stream": {"alpha": 6, "batches": 3, "frame": {"depth": 3, "height": 14, "width": 14}},
  "models": {
    "learning_rate": 0.05,
    "task_count": 2,
    "cnn": {
      "filter1": {"height": 3, "width": 3, "padding": 0, "stride": 1},
      "filter2": {"height": 3, "width": 3, "padding": 1, "stride": 1},
      "pool": {"window": 2, "stride": 2},
      "fc_sizes": [16, 8, 4]
    },
    "lstm": {"hidden_size": 8, "window": 3, "output_size": 2}
  },
  "cost": {"ingest_seconds_per_frame": 0.0005, "bandwidth_bytes_per_sec": 125000000.0, "frame_bytes": null},
  "sync": {"aggregation": "normalized", "convergence_tolerance": 1e-9},
  "migration": {"enabled": true, "xi": 1, "theta_balance": 0.0, "assessment_period_rounds": 3},
  "run": {"rounds": 6, "seed": 7, "workers": 2, "ingest_units": 1}
})";
    }
    throw std::invalid_argument("unknown preset: " + name +
                                " (available: tiny, paper-section5)");
}

ScenarioConfig preset_config(const std::string& name) {
    return parse_config(preset_text(name));
}

}  // namespace divs
