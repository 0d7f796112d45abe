// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Needs the CLI binary path as argv[1] for the subprocess
// checks; fixture configs come from DIVS_FIXTURE_DIR.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "divs/config.hpp"
#include "divs/engine.hpp"
#include "divs/migration.hpp"
#include "divs/nnkernels.hpp"
#include "divs/report.hpp"
#include "divs/rng.hpp"
#include "divs/sync.hpp"

using namespace divs;
namespace fs = std::filesystem;

namespace {

struct Checker {
    int failures = 0;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            ++failures;
            notes.push_back(what);
        }
    }
};

std::string cli_path;
fs::path scratch;

Tensor3 random_tensor(const TensorShape& shape, std::uint64_t seed) {
    Tensor3 t(shape);
    CounterRng rng(seed);
    auto& data = t.data();
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = rng.uniform(k, -1.0, 1.0);
    return t;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::string& args) {
    const fs::path out_file = scratch / "cli_stdout.txt";
    const fs::path err_file = scratch / "cli_stderr.txt";
    const std::string cmd =
        cli_path + " " + args + " > " + out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    result.out = read_file(out_file);
    result.err = read_file(err_file);
    return result;
}

// --- criterion 1: parallel kernels bitwise equal to single-worker runs ------

void criterion_kernel_equivalence(Checker& c) {
    SeqRng rng(0xC0FFEE);
    const std::vector<int> worker_counts{1, 2, 4, 16};

    for (int trial = 0; trial < 200; ++trial) {
        const int d = static_cast<int>(rng.integer(1, 3));
        const int fh = static_cast<int>(rng.integer(1, 5));
        const int fw = static_cast<int>(rng.integer(1, 5));
        const int out_h = static_cast<int>(rng.integer(1, 8));
        const int out_w = static_cast<int>(rng.integer(1, 8));
        const int s = static_cast<int>(rng.integer(1, 3));
        const Tensor3 x = random_tensor({d, (out_h - 1) * s + fh, (out_w - 1) * s + fw},
                                        rng.bits());
        const ConvSpec spec{random_tensor({d, fh, fw}, rng.bits()), 0, s};
        const Tensor3 reference = conv_forward(x, spec, 1);
        for (int workers : worker_counts) {
            if (!bitwise_equal(reference.data(), conv_forward(x, spec, workers).data())) {
                c.require(false, "conv mismatch at trial " + std::to_string(trial) +
                                     " workers " + std::to_string(workers));
                return;
            }
        }
    }

    for (int trial = 0; trial < 200; ++trial) {
        FcLayer layer;
        layer.weights = random_matrix(static_cast<int>(rng.integer(1, 48)),
                                      static_cast<int>(rng.integer(1, 48)), rng.bits());
        layer.bias = rng.uniform(-1, 1);
        layer.activation = (trial % 2 == 0) ? Activation::Sigmoid : Activation::Relu;
        std::vector<double> input(static_cast<std::size_t>(layer.in_size()));
        for (auto& v : input) v = rng.uniform(-1, 1);
        const auto reference = fc_layer_forward(layer, input, 1);
        for (int workers : worker_counts) {
            if (!bitwise_equal(reference, fc_layer_forward(layer, input, workers))) {
                c.require(false, "fc mismatch at trial " + std::to_string(trial) +
                                     " workers " + std::to_string(workers));
                return;
            }
        }
    }
}

// --- criterion 2: shape math vs a brute-force position-counting oracle ------

void criterion_shape_math(Checker& c) {
    long long checked = 0;
    for (int hx = 1; hx <= 16; ++hx) {
        for (int wx = 1; wx <= 16; ++wx) {
            for (int hf = 1; hf <= 5; ++hf) {
                for (int wf = 1; wf <= 5; ++wf) {
                    for (int p = 0; p <= 2; ++p) {
                        for (int s = 1; s <= 3; ++s) {
                            // Oracle: enumerate the filter anchor positions.
                            int rows = 0, cols = 0;
                            for (int i = 0; i * s + hf <= hx + 2 * p; ++i) ++rows;
                            for (int j = 0; j * s + wf <= wx + 2 * p; ++j) ++cols;
                            const bool valid = hx + 2 * p >= hf && wx + 2 * p >= wf &&
                                               (hx + 2 * p - hf) % s == 0 &&
                                               (wx + 2 * p - wf) % s == 0;
                            ++checked;
                            try {
                                const auto shape =
                                    conv_output_shape({1, hx, wx}, {1, hf, wf}, p, s);
                                if (!valid || shape.height != rows || shape.width != cols) {
                                    c.require(false, "shape mismatch at " +
                                                         TensorShape{1, hx, wx}.to_string() +
                                                         " f=" +
                                                         TensorShape{1, hf, wf}.to_string());
                                    return;
                                }
                            } catch (const std::exception&) {
                                if (valid) {
                                    c.require(false, "valid combination rejected at hx=" +
                                                         std::to_string(hx));
                                    return;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    c.require(checked == 16LL * 16 * 5 * 5 * 3 * 3, "grid not exhaustive");
}

// --- criterion 3: analytic gradients vs central finite differences ----------

void criterion_gradients(Checker& c) {
    SeqRng rng(9090);
    const double h = 1e-3;
    for (int trial = 0; trial < 100; ++trial) {
        FcStack stack;
        FcLayer l1;
        l1.weights = random_matrix(static_cast<int>(rng.integer(2, 6)),
                                   static_cast<int>(rng.integer(2, 6)), rng.bits());
        l1.bias = rng.uniform(-0.5, 0.5);
        l1.activation = Activation::Sigmoid;
        FcLayer l2;
        l2.weights = random_matrix(static_cast<int>(rng.integer(1, 4)), l1.out_size(),
                                   rng.bits());
        l2.bias = rng.uniform(-0.5, 0.5);
        l2.activation = Activation::Sigmoid;
        stack.push_back(l1);
        stack.push_back(l2);

        std::vector<double> input(static_cast<std::size_t>(l1.in_size()));
        std::vector<double> target(static_cast<std::size_t>(l2.out_size()));
        for (auto& v : input) v = rng.uniform(-1, 1);
        for (auto& v : target) v = rng.uniform(0, 1);

        const auto analytic = fc_gradients(stack, input, target);
        std::vector<double> flat;
        for (std::size_t li = 0; li < stack.size(); ++li) {
            flat.insert(flat.end(), analytic.weight_grads[li].a.begin(),
                        analytic.weight_grads[li].a.end());
            flat.push_back(analytic.bias_grads[li]);
        }

        const auto params = fc_stack_get_params(stack);
        for (std::size_t k = 0; k < params.size(); ++k) {
            FcStack probe = stack;
            auto p = params;
            p[k] += h;
            fc_stack_set_params(probe, p);
            const double up = fc_loss(probe, input, target);
            p[k] -= 2 * h;
            fc_stack_set_params(probe, p);
            const double down = fc_loss(probe, input, target);
            const double fd = (up - down) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(flat[k]), 1e-8});
            if (std::abs(fd - flat[k]) / denom >= 1e-4) {
                c.require(false, "gradient mismatch at trial " + std::to_string(trial) +
                                     " param " + std::to_string(k));
                return;
            }
        }
    }
}

// --- criterion 4: synchronization identities ---------------------------------

void criterion_sync(Checker& c) {
    SeqRng rng(515);
    auto keys = std::make_shared<std::vector<std::string>>();
    const int dim = 24;
    for (int k = 0; k < dim; ++k) keys->push_back("p" + std::to_string(k));
    const std::shared_ptr<const std::vector<std::string>> schema = keys;

    for (int trial = 0; trial < 50; ++trial) {
        const int m = static_cast<int>(rng.integer(2, 12));
        std::vector<WeightSet> locals;
        std::vector<Contribution> equal, unit;
        for (int j = 0; j < m; ++j) {
            std::vector<double> values(dim);
            for (auto& v : values) v = rng.uniform(-10, 10);
            locals.push_back(make_weight_set("m", 1, j, schema, std::move(values)));
            equal.push_back(make_contribution(j, 20.0, 20.0));
            unit.push_back({j, 0.0, 0.0, 1.0});
        }

        const auto mean_g = aggregate(locals, equal, AggregationMode::Normalized);
        for (int k = 0; k < dim; ++k) {
            double s = 0.0;
            for (const auto& w : locals) s += w.values[static_cast<std::size_t>(k)];
            if (std::abs(mean_g.values[static_cast<std::size_t>(k)] - s / m) > 1e-12) {
                c.require(false, "normalized aggregation deviates from the mean");
                return;
            }
        }

        const auto raw = aggregate(locals, unit, AggregationMode::Raw);
        for (int k = 0; k < dim; ++k) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) {
                s += locals[static_cast<std::size_t>(j)].values[static_cast<std::size_t>(k)];
            }
            if (raw.values[static_cast<std::size_t>(k)] != s) {
                c.require(false, "raw aggregation is not the exact elementwise sum");
                return;
            }
        }
    }

    // Batch-size contribution example: k_j=26 vs k_bar=20 gives e^6.
    const double q = contribution(26.0, 20.0);
    c.require(q == std::exp(6.0), "contribution is not exp(k_j - k_bar)");
    c.require(std::abs(q - 403.428793) / 403.428793 < 1e-6,
              "e^6 contribution off at 6 significant digits: " + std::to_string(q));
}

// --- criterion 5: migration correctness --------------------------------------

void criterion_migration(Checker& c) {
    // Hand-traced matching example.
    MigrationLists lists;
    lists.out_list = {{0, -10}};
    lists.in_list = {{1, 7}, {2, 4}};
    const auto plan = match_migrations(lists, 1);
    const bool hand_ok = plan.moves.size() == 2 && plan.moves[0].src == 0 &&
                         plan.moves[0].dst == 1 && plan.moves[0].frames == 7 &&
                         plan.moves[1].src == 0 && plan.moves[1].dst == 2 &&
                         plan.moves[1].frames == 3 && plan.residuals.at(0) == 0;
    c.require(hand_ok, "hand-traced matching example failed");

    SeqRng rng(0xDD);
    int fired = 0, strict = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int m = static_cast<int>(rng.integer(2, 20));
        std::vector<double> spf(static_cast<std::size_t>(m));
        OwnershipCounts before;
        for (int j = 0; j < m; ++j) {
            spf[static_cast<std::size_t>(j)] = static_cast<double>(rng.integer(1, 10));
            before[j] = rng.integer(0, 100);
        }
        const long long xi = rng.integer(0, 3);

        std::vector<double> times;
        double t_sum = 0.0, max_spf = 0.0;
        for (int j = 0; j < m; ++j) {
            times.push_back(spf[static_cast<std::size_t>(j)] *
                            static_cast<double>(before.at(j)));
            t_sum += times.back();
            max_spf = std::max(max_spf, spf[static_cast<std::size_t>(j)]);
        }
        const double t_bar = t_sum / m;
        const double pre = balance_metric(times, t_bar);
        if (!should_migrate(pre, 0.0)) continue;
        ++fired;

        std::map<int, long long> deltas;
        for (int j = 0; j < m; ++j) {
            deltas[j] = migration_amount(t_bar, times[static_cast<std::size_t>(j)],
                                         spf[static_cast<std::size_t>(j)]);
        }
        const auto ls = build_lists(deltas, xi);
        const auto p = match_migrations(ls, xi);

        if (p.moves.size() > ls.out_list.size() + ls.in_list.size()) {
            c.require(false, "termination bound violated");
            return;
        }

        const auto after = apply_plan(before, p);
        long long total_before = 0, total_after = 0;
        for (const auto& [id, n] : before) total_before += n;
        for (const auto& [id, n] : after) total_after += n;
        if (total_before != total_after) {
            c.require(false, "frame conservation violated");
            return;
        }

        std::vector<double> post_times;
        double post_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            post_times.push_back(spf[static_cast<std::size_t>(j)] *
                                 static_cast<double>(after.at(j)));
            post_sum += post_times.back();
        }
        const double post = balance_metric(post_times, post_sum / m);
        if (post > pre + max_spf) {
            c.require(false, "balance bound violated: post " + std::to_string(post) +
                                 " pre " + std::to_string(pre));
            return;
        }
        if (post < pre) ++strict;
    }
    c.require(fired > 0, "no assessment fired");
    c.require(static_cast<double>(strict) >= 0.95 * static_cast<double>(fired),
              "strict improvement only " + std::to_string(strict) + "/" +
                  std::to_string(fired));
}

// --- criterion 6: qualitative scaling trends ---------------------------------

ScenarioConfig trend_base() {
    return parse_config(R"({
        "topology": {"terminals": 50, "levels": [{"count": 5, "capacity": 0.002}]},
        "stream": {"alpha": 4, "batches": 2, "frame": {"depth": 1, "height": 10, "width": 10}},
        "models": {"task_count": 2},
        "cost": {"ingest_seconds_per_frame": 0.0005, "bandwidth_bytes_per_sec": null},
        "migration": {"enabled": false},
        "run": {"rounds": 4, "seed": 21}
    })");
}

void criterion_trends(Checker& c) {
    const auto node_reports = scaling_sweep(trend_base(), "nodes", {5, 10, 20, 30});
    for (std::size_t i = 1; i < node_reports.size(); ++i) {
        if (node_reports[i].total_makespan > node_reports[i - 1].total_makespan) {
            c.require(false, "makespan increased from " +
                                 std::to_string(node_reports[i - 1].sweep_value) + " to " +
                                 std::to_string(node_reports[i].sweep_value) + " nodes");
            return;
        }
    }
    c.require(node_reports.back().total_makespan < node_reports.front().total_makespan,
              "no overall makespan decrease across the node sweep");

    const auto task_reports = scaling_sweep(trend_base(), "tasks", {1, 2, 3});
    const double one = task_reports[0].total_makespan;
    const double three = task_reports[2].total_makespan;
    c.require(three < 3.0 * one, "3-task total " + std::to_string(three) +
                                     " not below 3x the 1-task total " +
                                     std::to_string(3.0 * one));
}

// --- criterion 7: balance vs communication tradeoff --------------------------

void criterion_tradeoff(Checker& c) {
    const auto base = preset_config("tiny");
    const auto ddm_on = run_scenario(base);
    auto off_config = base;
    off_config.migration.enabled = false;
    const auto ddm_off = run_scenario(off_config);

    c.require(ddm_on.time_avg_balance < ddm_off.time_avg_balance,
              "DDM did not lower the time-averaged balance metric (" +
                  std::to_string(ddm_on.time_avg_balance) + " vs " +
                  std::to_string(ddm_off.time_avg_balance) + ")");
    c.require(ddm_on.total_bytes() > ddm_off.total_bytes(),
              "DDM did not increase communication bytes");
}

// --- criterion 8: determinism -------------------------------------------------

void criterion_determinism(Checker& c) {
    for (const auto& name : preset_names()) {
        const auto config = preset_config(name);
        const auto a = report_to_json(run_scenario(config)).dump(2);
        const auto b = report_to_json(run_scenario(config)).dump(2);
        c.require(a == b, "in-process reports differ for preset " + name);
    }

    // End-to-end through the CLI: identical bytes on disk.
    for (const auto& name : preset_names()) {
        const fs::path config_path = scratch / (name + ".json");
        std::ofstream(config_path) << preset_text(name);
        const fs::path dir_a = scratch / (name + "_a");
        const fs::path dir_b = scratch / (name + "_b");
        const auto ra = run_cli("run " + config_path.string() + " -o " + dir_a.string());
        const auto rb = run_cli("run " + config_path.string() + " -o " + dir_b.string());
        c.require(ra.exit_code == 0 && rb.exit_code == 0,
                  "CLI run failed for preset " + name + ": " + ra.err + rb.err);
        for (const char* file : {"report.json", "report.csv"}) {
            c.require(read_file(dir_a / file) == read_file(dir_b / file),
                      std::string("CLI ") + file + " differs between runs for " + name);
            c.require(!read_file(dir_a / file).empty(),
                      std::string("CLI ") + file + " is empty for " + name);
        }
    }
}

// --- criterion 9: config validation surface -----------------------------------

void criterion_config_validation(Checker& c) {
    const fs::path fixtures{DIVS_FIXTURE_DIR};
    const std::vector<std::pair<std::string, std::string>> cases{
        {"bad_unknown_key.json", "stream.batchez"},
        {"bad_range.json", "stream.batches"},
        {"bad_type.json", "stream.alpha"},
        {"bad_capacity.json", "topology.levels[0].capacity"},
        {"bad_assignment.json", "topology.assignment"},
        {"bad_sweep.json", "sweep.axis"},
        {"bad_chain.json", "models.cnn"},
        {"bad_document.json", "(document)"},
    };

    for (const auto& [file, expected_path] : cases) {
        const fs::path path = fixtures / file;
        const auto result = run_cli("run " + path.string() + " -o " + (scratch / "x").string());
        if (result.exit_code == 0) {
            c.require(false, file + ": expected nonzero exit");
            continue;
        }
        c.require(result.err.find(expected_path) != std::string::npos,
                  file + ": stderr does not name " + expected_path + ", got: " + result.err);
    }

    // Unreadable config: nonzero exit, message names the path.
    const auto missing = run_cli("run " + (scratch / "no_such_config.json").string());
    c.require(missing.exit_code != 0, "missing config accepted");
    c.require(missing.err.find("no_such_config.json") != std::string::npos,
              "missing-config error does not name the path");

    // Round-trip idempotence on the bundled presets.
    for (const auto& name : preset_names()) {
        const auto first = parse_config(preset_text(name));
        const auto emitted = config_to_json(first).dump(2);
        const auto second = parse_config(emitted);
        c.require(config_to_json(second).dump(2) == emitted,
                  "config round-trip not idempotent for " + name);
    }
}

struct Criterion {
    int id;
    std::string name;
    std::function<void(Checker&)> fn;
    double budget_seconds;
};

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: divs_acceptance <path-to-divs-cli>\n";
        return 2;
    }
    cli_path = argv[1];
    scratch = fs::temp_directory_path() /
              ("divs_acceptance_" + std::to_string(static_cast<unsigned>(::getpid())));
    fs::create_directories(scratch);

    const std::vector<Criterion> criteria{
        {1, "kernel oracle equivalence (parallel == single-worker, bitwise)",
         criterion_kernel_equivalence, 30.0},
        {2, "conv shape math vs brute-force oracle on the exhaustive grid",
         criterion_shape_math, 5.0},
        {3, "analytic gradients match central finite differences (1e-4)",
         criterion_gradients, 60.0},
        {4, "synchronization identities (mean, raw sum, e^6 contribution)",
         criterion_sync, 60.0},
        {5, "migration matching, conservation and balance improvement",
         criterion_migration, 60.0},
        {6, "scaling trends (node sweep, task sweep)", criterion_trends, 120.0},
        {7, "DDM balance vs communication tradeoff", criterion_tradeoff, 60.0},
        {8, "byte-identical reports for identical seeds", criterion_determinism, 120.0},
        {9, "config validation paths, exit codes and round-trip",
         criterion_config_validation, 60.0},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.fn(checker);
        } catch (const std::exception& e) {
            checker.require(false, std::string("exception: ") + e.what());
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        checker.require(elapsed < criterion.budget_seconds,
                        "runtime " + std::to_string(elapsed) + "s over budget");

        const bool passed = checker.failures == 0;
        failures += checker.failures;
        std::printf("[%s] criterion %d: %s (%.2fs)\n", passed ? "PASS" : "FAIL", criterion.id,
                    criterion.name.c_str(), elapsed);
        for (const auto& note : checker.notes) {
            std::printf("       %s\n", note.c_str());
        }
    }

    std::error_code ec;
    fs::remove_all(scratch, ec);

    if (failures > 0) {
        std::printf("acceptance: %d failure(s)\n", failures);
        return 1;
    }
    std::printf("acceptance: all criteria passed\n");
    return 0;
}
