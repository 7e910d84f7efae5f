#include "nlaid/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nlaid {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

EventMatch match_events(const PredictionSeries& preds, std::span<const IncidentRecord> incidents) {
  for (const auto& r : incidents) {
    if (r.node_id != preds.node_id) {
      throw InvalidInput("match_events: incident on node " + std::to_string(r.node_id) +
                         " matched against predictions for node " + std::to_string(preds.node_id));
    }
  }
  EventMatch out;
  out.detection_times.assign(incidents.size(), std::nullopt);
  for (const auto& p : preds.windows) {
    bool inside = false;
    for (std::size_t i = 0; i < incidents.size(); ++i) {
      if (!incidents[i].contains(p.end_index)) continue;
      inside = true;
      if (p.flag) {
        auto& t = out.detection_times[i];
        if (!t || p.end_index < *t) t = p.end_index;
      }
    }
    if (inside) continue;
    if (p.flag) {
      ++out.counts.fp;
    } else {
      ++out.counts.tn;
    }
  }
  for (const auto& t : out.detection_times) {
    if (t) {
      ++out.counts.tp;
    } else {
      ++out.counts.fn;
    }
  }
  return out;
}

BasicMetrics basic_metrics(const ConfusionCounts& c) {
  BasicMetrics m;
  auto ratio = [&](double num, double den) {
    if (den == 0.0) {
      m.degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  const auto tp = static_cast<double>(c.tp);
  const auto fp = static_cast<double>(c.fp);
  const auto tn = static_cast<double>(c.tn);
  const auto fn = static_cast<double>(c.fn);
  m.dr = ratio(tp, tp + fn);
  m.far = ratio(fp, fp + tn);
  m.f1 = ratio(2.0 * tp, 2.0 * tp + fp + fn);
  m.acc = ratio(tp + tn, tp + tn + fp + fn);
  return m;
}

AucResult auc(std::span<const std::pair<double, Label>> scored) {
  std::vector<std::pair<double, Label>> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Twice the Mann-Whitney U, accumulated in integers so ties stay exact.
  std::int64_t twice_u = 0;
  std::int64_t neg_below = 0;
  std::int64_t pos_total = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    std::int64_t pos = 0, neg = 0;
    while (j < sorted.size() && sorted[j].first == sorted[i].first) {
      if (sorted[j].second == Label::incident) {
        ++pos;
      } else {
        ++neg;
      }
      ++j;
    }
    twice_u += 2 * pos * neg_below + pos * neg;
    neg_below += neg;
    pos_total += pos;
    i = j;
  }
  if (pos_total == 0 || neg_below == 0) return {0.5, true};
  return {static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos_total) * static_cast<double>(neg_below)), false};
}

double adjusted_mttd(std::span<const std::optional<std::int64_t>> detections, std::span<const IncidentRecord> incidents) {
  if (incidents.empty()) throw InvalidInput("adjusted_mttd: undefined without incidents");
  if (detections.size() != incidents.size()) throw InvalidInput("adjusted_mttd: one detection slot per incident required");
  double total = 0.0;
  for (std::size_t i = 0; i < incidents.size(); ++i) {
    total += detections[i] ? static_cast<double>(*detections[i] - incidents[i].start)
                           : static_cast<double>(incidents[i].duration);
  }
  return total / static_cast<double>(incidents.size());
}

ThresholdResult far_threshold(std::span<const std::pair<double, Label>> scored, double cap) {
  if (!(cap >= 0.0)) throw InvalidInput("far_threshold: cap must be non-negative");
  if (scored.empty()) {
    spdlog::warn("far_threshold: no scores; flagging nothing");
    return {std::numeric_limits<double>::infinity(), true};
  }
  std::vector<double> normals;
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& [score, label] : scored) {
    lowest = std::min(lowest, score);
    if (label == Label::normal) normals.push_back(score);
  }
  const auto allowed = static_cast<std::size_t>(std::floor(cap * static_cast<double>(normals.size()) + 1e-9));
  if (allowed >= normals.size()) return {lowest, false};
  std::sort(normals.begin(), normals.end(), std::greater<>());
  // Everything at or below the (allowed+1)-th largest normal score must stay unflagged.
  return {std::nextafter(normals[allowed], std::numeric_limits<double>::infinity()), false};
}

F1Threshold best_f1_threshold(std::span<const PredictionSeries> predictions, std::span<const IncidentRecord> incidents,
                              double cap) {
  if (!(cap >= 0.0)) throw InvalidInput("best_f1_threshold: cap must be non-negative");
  std::map<NodeId, std::vector<std::size_t>> by_node;
  for (std::size_t i = 0; i < incidents.size(); ++i) by_node[incidents[i].node_id].push_back(i);

  // An incident is detected at threshold t iff its best window scores >= t; a
  // normal window is a false alarm iff its own score is >= t.
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> incident_best(incidents.size(), kNone);
  std::vector<double> normals;
  for (const auto& series : predictions) {
    const auto it = by_node.find(series.node_id);
    for (const auto& p : series.windows) {
      bool inside = false;
      if (it != by_node.end()) {
        for (std::size_t i : it->second) {
          if (!incidents[i].contains(p.end_index)) continue;
          inside = true;
          incident_best[i] = std::max(incident_best[i], p.score);
        }
      }
      if (!inside) normals.push_back(p.score);
    }
  }
  std::vector<double> candidates = normals;
  for (double s : incident_best) {
    if (s != kNone) candidates.push_back(s);
  }
  candidates.push_back(std::numeric_limits<double>::infinity());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::sort(normals.begin(), normals.end());
  std::vector<double> detected = incident_best;
  std::sort(detected.begin(), detected.end());

  const auto total_incidents = static_cast<double>(incidents.size());
  const auto total_normals = static_cast<double>(normals.size());
  F1Threshold best{std::numeric_limits<double>::infinity(), 0.0, 0.0, false};
  bool found = false;
  for (double t : candidates) {
    const auto at_or_above = [&](const std::vector<double>& v) {
      return static_cast<double>(v.end() - std::lower_bound(v.begin(), v.end(), t));
    };
    const double fp = at_or_above(normals);
    const double tp = at_or_above(detected);
    const double fn = total_incidents - tp;
    const double far = total_normals == 0.0 ? 0.0 : fp / total_normals;
    if (far > cap) continue;
    const double den = 2.0 * tp + fp + fn;
    const double f1 = den == 0.0 ? 0.0 : 2.0 * tp / den;
    if (!found || f1 > best.f1) {
      best = {t, f1, far, true};
      found = true;
    }
  }
  if (!found) spdlog::warn("best_f1_threshold: no threshold meets the FAR cap; flagging nothing");
  return best;
}

Evaluation evaluate(std::span<const PredictionSeries> predictions, std::span<const IncidentRecord> incidents,
                    double far_cap) {
  std::map<NodeId, std::vector<IncidentRecord>> by_node;
  for (const auto& r : incidents) by_node[r.node_id].push_back(r);

  Evaluation out;
  std::vector<std::pair<double, Label>> scored;
  std::vector<std::optional<std::int64_t>> detections;
  std::vector<IncidentRecord> ordered;
  for (const auto& series : predictions) {
    const auto& own = by_node[series.node_id];
    const auto match = match_events(series, own);
    out.counts += match.counts;
    detections.insert(detections.end(), match.detection_times.begin(), match.detection_times.end());
    ordered.insert(ordered.end(), own.begin(), own.end());

    std::size_t correct = 0;
    for (const auto& p : series.windows) {
      const bool truth = std::any_of(own.begin(), own.end(), [&](const IncidentRecord& r) { return r.contains(p.end_index); });
      scored.emplace_back(p.score, truth ? Label::incident : Label::normal);
      if (truth == p.flag) ++correct;
    }
    const double acc = series.windows.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(series.windows.size());
    out.node_accuracy.emplace_back(series.node_id, acc);
  }
  const auto basic = basic_metrics(out.counts);
  out.report.acc = basic.acc;
  out.report.f1 = basic.f1;
  out.report.dr = basic.dr;
  out.report.far = basic.far;
  out.report.auc = auc(scored).value;
  out.report.ad_mttd = ordered.empty() ? 0.0 : adjusted_mttd(detections, ordered);
  out.report.passed_far_filter = basic.far <= far_cap;
  return out;
}

}  // namespace nlaid
