#pragma once

#include <string>
#include <vector>

#include "divs/engine.hpp"

namespace divs {

// Structured report document; numbers carry full double precision so golden
// comparisons can be exact.
nlohmann::ordered_json report_to_json(const ScenarioReport& report);
ScenarioReport report_from_json(const nlohmann::ordered_json& doc);

// Flat per-round series for plotting: one header line, one row per round.
std::string report_to_csv(const ScenarioReport& report);

// Writes report.json and/or series.csv (per `formats`) under `dir`, using
// `stem` as the file stem. Returns the written paths.
std::vector<std::string> emit_report(const ScenarioReport& report, const std::string& dir,
                                     const std::string& stem,
                                     const std::vector<std::string>& formats);

// Combined one-line-per-point summary table for sweeps.
std::string sweep_summary_csv(const std::vector<ScenarioReport>& reports);

std::string one_line_summary(const ScenarioReport& report);

}  // namespace divs
