#pragma once

// Incident-detection metrics. True positives and misses are counted per
// incident event; false alarms and true negatives per window.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nlaid/data_pipeline.hpp"

namespace nlaid {

struct Prediction {
  std::int64_t end_index = 0;
  double score = 0.0;  ///< anomaly score, higher = more incident-like
  bool flag = false;
};

struct PredictionSeries {
  NodeId node_id = 0;
  std::vector<Prediction> windows;
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

struct EventMatch {
  ConfusionCounts counts;
  /// Earliest flagged window end inside each incident, aligned with the input.
  std::vector<std::optional<std::int64_t>> detection_times;
};

/// `incidents` must all belong to preds.node_id.
EventMatch match_events(const PredictionSeries& preds, std::span<const IncidentRecord> incidents);

struct BasicMetrics {
  double acc = 0.0;
  double f1 = 0.0;
  double dr = 0.0;
  double far = 0.0;
  bool degenerate = false;  ///< some rate had a zero denominator and was set to 0
};

BasicMetrics basic_metrics(const ConfusionCounts& c);

struct AucResult {
  double value = 0.5;
  bool degenerate = false;  ///< no positives or no negatives
};

/// Mann-Whitney statistic: P(random incident window outscores a random normal
/// window), ties counted as one half.
AucResult auc(std::span<const std::pair<double, Label>> scored);

/// Mean over incidents of (detection - start) when detected, else the
/// incident's duration. In timesteps.
double adjusted_mttd(std::span<const std::optional<std::int64_t>> detections,
                     std::span<const IncidentRecord> incidents);

struct ThresholdResult {
  double threshold = 0.0;
  bool flag_nothing = false;  ///< no attainable threshold; every score is below it
};

/// Lowest threshold t such that flagging score >= t keeps FAR <= cap on the
/// normal windows provided.
ThresholdResult far_threshold(std::span<const std::pair<double, Label>> scored, double cap = 0.10);

struct F1Threshold {
  double threshold = 0.0;
  double f1 = 0.0;
  double far = 0.0;
  bool feasible = true;  ///< false when no threshold meets the cap (flag nothing)
};

/// Threshold maximising event-level F1 subject to FAR <= cap, flagging
/// score >= threshold. Ties go to the lowest threshold.
F1Threshold best_f1_threshold(std::span<const PredictionSeries> predictions,
                              std::span<const IncidentRecord> incidents, double cap = 0.10);

struct MetricsReport {
  double acc = 0.0;
  double f1 = 0.0;
  double dr = 0.0;
  double far = 0.0;
  double auc = 0.5;
  double ad_mttd = 0.0;
  bool passed_far_filter = false;

  bool operator==(const MetricsReport&) const = default;
};

struct Evaluation {
  MetricsReport report;
  ConfusionCounts counts;
  /// Per-node window-level accuracy: correct windows / windows.
  std::vector<std::pair<NodeId, double>> node_accuracy;
};

/// Scores every node's predictions against the incidents of the same split.
Evaluation evaluate(std::span<const PredictionSeries> predictions, std::span<const IncidentRecord> incidents,
                    double far_cap = 0.10);

}  // namespace nlaid
