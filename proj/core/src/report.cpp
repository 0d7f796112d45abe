#include "divs/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace divs {

using nlohmann::ordered_json;

namespace {

std::string full_precision(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

ordered_json report_to_json(const ScenarioReport& report) {
    ordered_json j;
    j["schema"] = "divs-report-v1";
    if (!report.sweep_axis.empty()) {
        j["sweep"]["axis"] = report.sweep_axis;
        j["sweep"]["value"] = report.sweep_value;
    }
    j["config"] = report.config;

    j["rounds"] = ordered_json::array();
    for (const auto& r : report.rounds) {
        ordered_json rj;
        rj["round"] = r.round;
        rj["makespan"] = r.makespan;
        rj["balance"] = r.balance;
        rj["node_times"] = r.node_times;
        rj["bytes_weights"] = r.bytes_weights;
        rj["bytes_frames"] = r.bytes_frames;
        rj["bytes_ingest"] = r.bytes_ingest;
        rj["migration_moves"] = r.migration_moves;
        j["rounds"].push_back(std::move(rj));
    }

    // Always present, empty when nothing migrated.
    j["migrations"] = ordered_json::array();
    for (const auto& m : report.migrations) {
        ordered_json mj;
        mj["round"] = m.round;
        mj["src"] = m.src;
        mj["dst"] = m.dst;
        mj["frames"] = m.frames;
        j["migrations"].push_back(std::move(mj));
    }

    j["totals"]["rounds"] = report.rounds.size();
    j["totals"]["makespan"] = report.total_makespan;
    j["totals"]["time_avg_balance"] = report.time_avg_balance;
    j["totals"]["bytes_weights"] = report.total_bytes_weights;
    j["totals"]["bytes_frames"] = report.total_bytes_frames;
    j["totals"]["bytes_ingest"] = report.total_bytes_ingest;
    j["totals"]["bytes_total"] = report.total_bytes();
    j["totals"]["convergence_round"] = report.convergence_round;
    return j;
}

ScenarioReport report_from_json(const ordered_json& doc) {
    if (!doc.is_object() || doc.value("schema", "") != "divs-report-v1") {
        throw std::invalid_argument("report: not a divs-report-v1 document");
    }
    ScenarioReport report;
    if (doc.contains("sweep")) {
        report.sweep_axis = doc["sweep"]["axis"].get<std::string>();
        report.sweep_value = doc["sweep"]["value"].get<int>();
    }
    report.config = doc.at("config");
    for (const auto& rj : doc.at("rounds")) {
        RoundRecord r;
        r.round = rj.at("round").get<int>();
        r.makespan = rj.at("makespan").get<double>();
        r.balance = rj.at("balance").get<double>();
        r.node_times = rj.at("node_times").get<std::vector<double>>();
        r.bytes_weights = rj.at("bytes_weights").get<std::uint64_t>();
        r.bytes_frames = rj.at("bytes_frames").get<std::uint64_t>();
        r.bytes_ingest = rj.at("bytes_ingest").get<std::uint64_t>();
        r.migration_moves = rj.at("migration_moves").get<int>();
        report.rounds.push_back(std::move(r));
    }
    for (const auto& mj : doc.at("migrations")) {
        MoveRecord m;
        m.round = mj.at("round").get<int>();
        m.src = mj.at("src").get<int>();
        m.dst = mj.at("dst").get<int>();
        m.frames = mj.at("frames").get<long long>();
        report.migrations.push_back(m);
    }
    const auto& totals = doc.at("totals");
    report.total_makespan = totals.at("makespan").get<double>();
    report.time_avg_balance = totals.at("time_avg_balance").get<double>();
    report.total_bytes_weights = totals.at("bytes_weights").get<std::uint64_t>();
    report.total_bytes_frames = totals.at("bytes_frames").get<std::uint64_t>();
    report.total_bytes_ingest = totals.at("bytes_ingest").get<std::uint64_t>();
    report.convergence_round = totals.at("convergence_round").get<int>();
    return report;
}

std::string report_to_csv(const ScenarioReport& report) {
    std::string out =
        "round,makespan,balance,bytes_weights,bytes_frames,bytes_ingest,migration_moves\n";
    for (const auto& r : report.rounds) {
        out += std::to_string(r.round) + "," + full_precision(r.makespan) + "," +
               full_precision(r.balance) + "," + std::to_string(r.bytes_weights) + "," +
               std::to_string(r.bytes_frames) + "," + std::to_string(r.bytes_ingest) + "," +
               std::to_string(r.migration_moves) + "\n";
    }
    return out;
}

std::vector<std::string> emit_report(const ScenarioReport& report, const std::string& dir,
                                     const std::string& stem,
                                     const std::vector<std::string>& formats) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    for (const auto& fmt : formats) {
        std::string path;
        std::string body;
        if (fmt == "json") {
            path = (std::filesystem::path(dir) / (stem + ".json")).string();
            body = report_to_json(report).dump(2) + "\n";
        } else if (fmt == "csv") {
            path = (std::filesystem::path(dir) / (stem + ".csv")).string();
            body = report_to_csv(report);
        } else {
            throw std::invalid_argument("emit_report: unknown format " + fmt);
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("emit_report: cannot write " + path);
        out << body;
        if (!out) throw std::runtime_error("emit_report: write failed for " + path);
        written.push_back(path);
    }
    return written;
}

std::string sweep_summary_csv(const std::vector<ScenarioReport>& reports) {
    std::string out =
        "axis,value,total_makespan,time_avg_balance,bytes_total,migrations,convergence_round\n";
    for (const auto& r : reports) {
        out += r.sweep_axis + "," + std::to_string(r.sweep_value) + "," +
               full_precision(r.total_makespan) + "," + full_precision(r.time_avg_balance) +
               "," + std::to_string(r.total_bytes()) + "," +
               std::to_string(r.migrations.size()) + "," +
               std::to_string(r.convergence_round) + "\n";
    }
    return out;
}

std::string one_line_summary(const ScenarioReport& report) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "rounds=%zu final_balance=%.6g total_bytes=%llu makespan_sum=%.6g",
                  report.rounds.size(),
                  report.rounds.empty() ? 0.0 : report.rounds.back().balance,
                  static_cast<unsigned long long>(report.total_bytes()),
                  report.total_makespan);
    return buf;
}

}  // namespace divs
