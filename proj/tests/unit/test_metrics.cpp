#include <gtest/gtest.h>

#include <random>

#include "nlaid/metrics.hpp"
#include "oracles.hpp"

using namespace nlaid;

namespace {

PredictionSeries series(NodeId node, std::int64_t first, std::int64_t last, std::initializer_list<std::int64_t> flagged) {
  PredictionSeries s{node, {}};
  for (std::int64_t t = first; t <= last; ++t) {
    const bool f = std::find(flagged.begin(), flagged.end(), t) != flagged.end();
    s.windows.push_back({t, f ? 1.0 : 0.0, f});
  }
  return s;
}

std::vector<std::pair<double, bool>> as_bool(const std::vector<std::pair<double, Label>>& v) {
  std::vector<std::pair<double, bool>> out;
  for (const auto& [s, l] : v) out.emplace_back(s, l == Label::incident);
  return out;
}

}  // namespace

TEST(MatchEvents, NoFlagsNoIncidents) {
  const auto m = match_events(series(1, 0, 9, {}), {});
  EXPECT_EQ(m.counts, (ConfusionCounts{0, 0, 10, 0}));
}

TEST(MatchEvents, DetectionAndFalseAlarm) {
  const std::vector<IncidentRecord> inc{{1, 5, 3}};
  const auto m = match_events(series(1, 0, 12, {6, 9}), inc);
  EXPECT_EQ(m.counts.tp, 1);
  EXPECT_EQ(m.counts.fp, 1);
  EXPECT_EQ(m.counts.fn, 0);
  EXPECT_EQ(m.counts.tn, 13 - 3 - 1);
  ASSERT_TRUE(m.detection_times[0].has_value());
  EXPECT_EQ(*m.detection_times[0], 6);
}

TEST(MatchEvents, MissIsOneFalseNegative) {
  const std::vector<IncidentRecord> inc{{1, 5, 3}};
  const auto m = match_events(series(1, 0, 12, {}), inc);
  EXPECT_EQ(m.counts.fn, 1);
  EXPECT_EQ(m.counts.tp, 0);
  EXPECT_FALSE(m.detection_times[0].has_value());
}

TEST(MatchEvents, WrongNodeRejected) {
  const std::vector<IncidentRecord> inc{{2, 5, 3}};
  EXPECT_THROW(match_events(series(1, 0, 12, {}), inc), InvalidInput);
}

TEST(MatchEvents, AgreesWithRescanOnRandomCases) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<IncidentRecord> inc;
    std::vector<oracle::Interval> intervals;
    for (std::int64_t start = 2; start < 40; start += 6 + static_cast<std::int64_t>(u(rng) * 6)) {
      if (u(rng) < 0.5) continue;
      const auto dur = 1 + static_cast<std::int64_t>(u(rng) * 5);
      inc.push_back({1, start, dur});
      intervals.push_back({start, dur});
    }
    PredictionSeries s{1, {}};
    std::vector<oracle::Window> windows;
    const double thr = u(rng);
    for (std::int64_t t = 3; t < 45; ++t) {
      const double score = u(rng);
      s.windows.push_back({t, score, score >= thr});
      windows.push_back({t, score});
    }
    const auto got = match_events(s, inc).counts;
    const auto want = oracle::count_events(windows, intervals, thr);
    EXPECT_EQ(got.tp, want.tp);
    EXPECT_EQ(got.fp, want.fp);
    EXPECT_EQ(got.tn, want.tn);
    EXPECT_EQ(got.fn, want.fn);
    EXPECT_EQ(got.tp + got.fn, static_cast<std::int64_t>(inc.size()));
  }
}

TEST(BasicMetrics, Examples) {
  const auto m = basic_metrics({6, 0, 10, 4});
  EXPECT_DOUBLE_EQ(m.dr, 0.6);
  EXPECT_DOUBLE_EQ(m.far, 0.0);
  EXPECT_DOUBLE_EQ(m.f1, 12.0 / 16.0);
  EXPECT_DOUBLE_EQ(m.acc, 16.0 / 20.0);
  EXPECT_FALSE(m.degenerate);
  const auto z = basic_metrics({0, 0, 5, 0});
  EXPECT_EQ(z.f1, 0.0);
  EXPECT_TRUE(z.degenerate);
}

TEST(BasicMetrics, RatesStayInUnitInterval) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> c(0, 5);
  for (int i = 0; i < 1000; ++i) {
    const auto m = basic_metrics({c(rng), c(rng), c(rng), c(rng)});
    for (double r : {m.acc, m.f1, m.dr, m.far}) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
}

TEST(Auc, Examples) {
  const std::vector<std::pair<double, Label>> separated{{0.9, Label::incident}, {0.8, Label::incident}, {0.1, Label::normal}};
  EXPECT_EQ(auc(separated).value, 1.0);
  const std::vector<std::pair<double, Label>> tie{{0.5, Label::incident}, {0.5, Label::normal}};
  EXPECT_EQ(auc(tie).value, 0.5);
  const std::vector<std::pair<double, Label>> only{{0.5, Label::normal}};
  EXPECT_TRUE(auc(only).degenerate);
  EXPECT_EQ(auc(only).value, 0.5);
}

TEST(Auc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> levels(0, 6);
  std::uniform_int_distribution<int> size(2, 20);
  std::bernoulli_distribution pos(0.3);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::pair<double, Label>> v;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) v.emplace_back(levels(rng) * 0.1, pos(rng) ? Label::incident : Label::normal);
    const auto want = oracle::pairwise_auc(as_bool(v));
    const auto got = auc(v);
    EXPECT_EQ(got.degenerate, !want.has_value());
    if (want) {
      EXPECT_NEAR(got.value, *want, 1e-12);
    }
  }
}

TEST(Auc, IndependentLabelsNearHalf) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution pos(0.2);
  std::vector<std::pair<double, Label>> v;
  for (int i = 0; i < 20000; ++i) v.emplace_back(u(rng), pos(rng) ? Label::incident : Label::normal);
  EXPECT_NEAR(auc(v).value, 0.5, 0.02);
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution pos(0.4);
  std::vector<std::pair<double, Label>> v, w;
  for (int i = 0; i < 200; ++i) {
    const double s = std::round(g(rng) * 4) / 4;
    const Label l = pos(rng) ? Label::incident : Label::normal;
    v.emplace_back(s, l);
    w.emplace_back(std::exp(3 * s) - 7, l);
  }
  EXPECT_EQ(auc(v).value, auc(w).value);
}

TEST(AdjustedMttd, Examples) {
  const std::vector<IncidentRecord> two{{1, 10, 4}, {1, 30, 6}};
  const std::vector<std::optional<std::int64_t>> at_start{10, 30};
  EXPECT_EQ(adjusted_mttd(at_start, two), 0.0);
  const std::vector<std::optional<std::int64_t>> late_and_missed{12, std::nullopt};
  EXPECT_EQ(adjusted_mttd(late_and_missed, two), 4.0);
  const std::vector<IncidentRecord> missed{{1, 10, 3}, {1, 30, 5}};
  const std::vector<std::optional<std::int64_t>> none{std::nullopt, std::nullopt};
  EXPECT_EQ(adjusted_mttd(none, missed), 4.0);
  EXPECT_THROW(adjusted_mttd({}, {}), InvalidInput);
}

TEST(AdjustedMttd, EarlierDetectionNeverHurts) {
  std::mt19937_64 rng(53);
  std::uniform_int_distribution<int> d(1, 8);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<IncidentRecord> inc;
    std::vector<std::optional<std::int64_t>> det;
    for (int i = 0; i < 5; ++i) {
      const int dur = d(rng);
      inc.push_back({1, 100 * i, dur});
      if (d(rng) > 3) det.emplace_back(100 * i + (d(rng) % dur));
      else det.emplace_back(std::nullopt);
    }
    const double before = adjusted_mttd(det, inc);
    auto better = det;
    const std::size_t k = static_cast<std::size_t>(trial % 5);
    if (better[k] && *better[k] > inc[k].start) *better[k] -= 1;
    else if (!better[k]) better[k] = inc[k].end() - 1;
    EXPECT_LE(adjusted_mttd(better, inc), before);
  }
}

TEST(FarThreshold, Examples) {
  const std::vector<std::pair<double, Label>> v{{0.3, Label::normal}, {0.1, Label::normal}, {0.9, Label::incident},
                                                {0.6, Label::normal}};
  const auto all = far_threshold(v, 1.0);
  EXPECT_EQ(all.threshold, 0.1);
  EXPECT_FALSE(all.flag_nothing);
  EXPECT_GT(far_threshold(v, 0.0).threshold, 0.6);
  EXPECT_LE(far_threshold(v, 0.0).threshold, 0.9);
}

TEST(FarThreshold, TenPercentBoundaryAgreesWithScan) {
  // 20 normals: two above 0.7, one exactly at 0.7.
  std::vector<std::pair<double, Label>> v;
  for (int i = 0; i < 17; ++i) v.emplace_back(0.02 * i, Label::normal);
  v.emplace_back(0.7, Label::normal);
  v.emplace_back(0.8, Label::normal);
  v.emplace_back(0.9, Label::normal);
  v.emplace_back(0.75, Label::incident);
  const double got = far_threshold(v, 0.10).threshold;

  std::vector<double> scores, normals;
  for (const auto& [s, l] : v) {
    scores.push_back(s);
    if (l == Label::normal) normals.push_back(s);
  }
  const auto far_at = [&](double t) {
    return static_cast<double>(std::count_if(normals.begin(), normals.end(), [&](double s) { return s >= t; })) /
           static_cast<double>(normals.size());
  };
  double lowest = std::numeric_limits<double>::infinity();
  for (double t : oracle::candidate_thresholds(scores)) {
    if (far_at(t) <= 0.10) lowest = std::min(lowest, t);
  }
  EXPECT_EQ(lowest, 0.75);
  EXPECT_LE(far_at(got), 0.10);
  EXPECT_GT(got, 0.7);
  EXPECT_LE(got, lowest);
  for (double s : scores) EXPECT_EQ(s >= got, s >= lowest);
}

TEST(FarThreshold, RandomCasesAgreeWithScan) {
  std::mt19937_64 rng(59);
  std::uniform_int_distribution<int> levels(0, 9);
  std::bernoulli_distribution pos(0.2);
  std::uniform_real_distribution<double> caps(0.0, 0.4);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<double, Label>> v;
    std::vector<double> scores, normals;
    for (int i = 0; i < 15; ++i) {
      const double s = levels(rng) * 0.1;
      const Label l = pos(rng) ? Label::incident : Label::normal;
      v.emplace_back(s, l);
      scores.push_back(s);
      if (l == Label::normal) normals.push_back(s);
    }
    const double cap = caps(rng);
    const auto far_at = [&](double t) {
      if (normals.empty()) return 0.0;
      return static_cast<double>(std::count_if(normals.begin(), normals.end(), [&](double s) { return s >= t; })) /
             static_cast<double>(normals.size());
    };
    double lowest = std::numeric_limits<double>::infinity();
    for (double t : oracle::candidate_thresholds(scores)) {
      if (far_at(t) <= cap + 1e-12) lowest = std::min(lowest, t);
    }
    const double got = far_threshold(v, cap).threshold;
    EXPECT_LE(far_at(got), cap + 1e-12);
    for (double s : scores) EXPECT_EQ(s >= got, s >= lowest) << "trial " << trial;
  }
}

TEST(BestF1Threshold, AgreesWithExhaustiveScan) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<PredictionSeries> preds;
    std::vector<IncidentRecord> incidents;
    std::vector<double> all_scores;
    std::vector<std::vector<oracle::Window>> windows(3);
    std::vector<std::vector<oracle::Interval>> intervals(3);
    for (NodeId node = 1; node <= 3; ++node) {
      PredictionSeries s{node, {}};
      for (std::int64_t start = 5; start < 60; start += 15) {
        if (u(rng) < 0.4) continue;
        incidents.push_back({node, start, 3});
        intervals[static_cast<std::size_t>(node - 1)].push_back({start, 3});
      }
      for (std::int64_t t = 0; t < 60; ++t) {
        const double score = std::round(u(rng) * 20) / 20;
        s.windows.push_back({t, score, false});
        windows[static_cast<std::size_t>(node - 1)].push_back({t, score});
        all_scores.push_back(score);
      }
      preds.push_back(std::move(s));
    }
    const double cap = 0.1;
    const auto counts_at = [&](double t) {
      oracle::Counts c;
      for (std::size_t n = 0; n < 3; ++n) {
        const auto k = oracle::count_events(windows[n], intervals[n], t);
        c.tp += k.tp;
        c.fp += k.fp;
        c.tn += k.tn;
        c.fn += k.fn;
      }
      return c;
    };
    double best_f1 = -1.0;
    double best_t = 0.0;
    for (double t : oracle::candidate_thresholds(all_scores)) {
      const auto c = counts_at(t);
      if (oracle::far_of(c) > cap) continue;
      if (oracle::f1_of(c) > best_f1) {
        best_f1 = oracle::f1_of(c);
        best_t = t;
      }
    }
    const auto got = best_f1_threshold(preds, incidents, cap);
    EXPECT_NEAR(got.f1, best_f1, 1e-12);
    EXPECT_NEAR(oracle::f1_of(counts_at(got.threshold)), best_f1, 1e-12);
    EXPECT_LE(oracle::far_of(counts_at(got.threshold)), cap);
    // Lowest-threshold tie-break: nothing below the pick up to the scan's
    // first optimum changes the counts.
    const auto a = counts_at(got.threshold), b = counts_at(best_t);
    EXPECT_EQ(a.tp, b.tp);
    EXPECT_EQ(a.fp, b.fp);
  }
}

TEST(Evaluate, CombinesNodes) {
  const std::vector<PredictionSeries> preds{series(1, 0, 9, {6}), series(2, 0, 9, {1})};
  const std::vector<IncidentRecord> inc{{1, 5, 3}, {2, 7, 2}};
  const auto e = evaluate(preds, inc, 0.1);
  EXPECT_EQ(e.counts, (ConfusionCounts{1, 1, 14, 1}));
  EXPECT_DOUBLE_EQ(e.report.dr, 0.5);
  EXPECT_DOUBLE_EQ(e.report.ad_mttd, (1.0 + 2.0) / 2.0);
  ASSERT_EQ(e.node_accuracy.size(), 2u);
  EXPECT_DOUBLE_EQ(e.node_accuracy[0].second, 8.0 / 10.0);
}
