#pragma once

// Report files. Every CSV and summary.txt is a deterministic function of the
// RunReport; wall-clock timings only go to run_meta.json.

#include <string>

#include "nlaid/harness.hpp"

namespace nlaid {

inline constexpr const char* kMetricsHeader = "run_id,model,acc,f1,dr,far,auc,ad_mttd,passed_far_filter";

/// Writes metrics.csv, per_node_accuracy.csv, lambda_path.csv,
/// lambda_path_runs.csv, timing.csv, splits.csv, summary.txt and run_meta.json
/// into `dir` (created if missing).
void emit_report(const RunReport& report, const std::string& dir);

/// Reads back the CSV parts of a report written by emit_report. Wall-clock
/// timings are not restored.
RunReport read_report(const std::string& dir);

std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Human-readable table of per-model means (also written to summary.txt).
std::string summary_text(const RunReport& report);

/// Median wall-clock milliseconds of the timing rows for `model`.
double median_wall_ms(const RunReport& report, const std::string& model);

}  // namespace nlaid
