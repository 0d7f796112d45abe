// divs: scenario runner for the edge video-surveillance training simulator.
//
// Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "divs/config.hpp"
#include "divs/engine.hpp"
#include "divs/report.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read config file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunOptions {
    std::string config_path;
    std::string output_dir = "out";
    std::string sweep;        // axis=v1,v2,...
    std::string aggregation;  // raw | normalized
    std::vector<std::string> formats{"json", "csv"};
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool no_ddm = false;
    int workers = 0;
};

std::pair<std::string, std::vector<int>> parse_sweep_flag(const std::string& flag) {
    const auto eq = flag.find('=');
    if (eq == std::string::npos) {
        throw std::runtime_error("--sweep expects axis=v1,v2,... got: " + flag);
    }
    const std::string axis = flag.substr(0, eq);
    std::vector<int> values;
    std::stringstream ss(flag.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        values.push_back(std::stoi(item));
    }
    if (values.empty()) {
        throw std::runtime_error("--sweep needs at least one value");
    }
    return {axis, values};
}

int run_command(const RunOptions& opt) {
    divs::ScenarioConfig config;
    try {
        config = divs::parse_config(read_file(opt.config_path));
    } catch (const divs::ConfigError& e) {
        std::cerr << "config error in " << opt.config_path << ":\n";
        for (const auto& fe : e.errors()) {
            std::cerr << "  " << fe.path << ": " << fe.message << "\n";
        }
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }

    if (opt.seed_set) config.run.seed = opt.seed;
    if (opt.no_ddm) config.migration.enabled = false;
    if (opt.workers > 0) config.run.workers = opt.workers;
    if (!opt.aggregation.empty()) {
        try {
            config.sync.aggregation = divs::aggregation_mode_from_string(opt.aggregation);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitConfigError;
        }
    }

    std::string sweep_axis;
    std::vector<int> sweep_values;
    if (!opt.sweep.empty()) {
        try {
            std::tie(sweep_axis, sweep_values) = parse_sweep_flag(opt.sweep);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kExitConfigError;
        }
    } else if (config.sweep) {
        sweep_axis = config.sweep->axis;
        sweep_values = config.sweep->values;
    }

    try {
        if (!sweep_axis.empty()) {
            const auto reports = divs::scaling_sweep(config, sweep_axis, sweep_values);
            for (const auto& report : reports) {
                const std::string stem =
                    "report_" + sweep_axis + "_" + std::to_string(report.sweep_value);
                divs::emit_report(report, opt.output_dir, stem, opt.formats);
            }
            const auto summary = divs::sweep_summary_csv(reports);
            const auto summary_path =
                std::filesystem::path(opt.output_dir) / "sweep_summary.csv";
            std::ofstream out(summary_path, std::ios::binary);
            if (!out) {
                throw std::runtime_error("cannot write " + summary_path.string());
            }
            out << summary;
            std::cout << summary;
        } else {
            const auto report = divs::run_scenario(config);
            divs::emit_report(report, opt.output_dir, "report", opt.formats);
            std::cout << divs::one_line_summary(report) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return 0;
}

int validate_command(const std::string& path) {
    try {
        (void)divs::parse_config(read_file(path));
    } catch (const divs::ConfigError& e) {
        std::cerr << "config error in " << path << ":\n";
        for (const auto& fe : e.errors()) {
            std::cerr << "  " << fe.path << ": " << fe.message << "\n";
        }
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    std::cout << "ok\n";
    return 0;
}

int preset_command(const std::string& name) {
    if (name.empty()) {
        for (const auto& n : divs::preset_names()) std::cout << n << "\n";
        return 0;
    }
    try {
        std::cout << divs::preset_text(name);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed edge video-surveillance training simulator"};
    app.require_subcommand(1);

    RunOptions opt;
    auto* run = app.add_subcommand("run", "Run a scenario (or sweep) and emit reports");
    run->add_option("config", opt.config_path, "Scenario configuration file")->required();
    run->add_option("-o,--output", opt.output_dir, "Output directory (default: out)");
    run->add_option("--sweep", opt.sweep, "Sweep axis=v1,v2,... (nodes|terminals|tasks)");
    run->add_option("--seed", opt.seed, "Seed override")->each([&](const std::string&) {
        opt.seed_set = true;
    });
    run->add_flag("--no-ddm", opt.no_ddm, "Disable dynamic data migration");
    run->add_option("--aggregation", opt.aggregation, "Aggregation mode: raw|normalized");
    run->add_option("--format", opt.formats, "Report formats (json, csv)")->delimiter(',');
    run->add_option("--workers", opt.workers, "Kernel worker threads override");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Validate a configuration file");
    validate->add_option("config", validate_path, "Scenario configuration file")->required();

    std::string preset_name;
    auto* preset = app.add_subcommand("preset", "Print a bundled preset (no name: list)");
    preset->add_option("name", preset_name, "Preset name");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return run_command(opt);
    if (validate->parsed()) return validate_command(validate_path);
    if (preset->parsed()) return preset_command(preset_name);
    return 1;
}
