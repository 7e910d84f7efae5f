#include "nlaid/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "nlaid/csv.hpp"
#include "nlaid/errors.hpp"

namespace nlaid {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kMetricsColumns{"run_id", "model", "acc", "f1", "dr", "far", "auc", "ad_mttd",
                                               "passed_far_filter"};
const std::vector<std::string> kNodeColumns{"run_id", "model", "node_id", "acc"};
const std::vector<std::string> kPathRunColumns{"run_id", "nu",  "lambda", "clusters", "iterations", "converged",
                                               "selected", "validation_f1", "acc", "f1", "dr", "far", "auc",
                                               "ad_mttd", "passed_far_filter"};
const std::vector<std::string> kPathColumns{"nu",           "lambda",        "runs",          "mean_clusters",
                                            "mean_iterations", "converged_runs", "selected_runs", "mean_validation_f1",
                                            "acc",          "f1",            "dr",            "far",
                                            "auc",          "ad_mttd"};
const std::vector<std::string> kTimingColumns{"run_id", "model", "nodes", "nu", "lambda", "iterations", "converged"};
const std::vector<std::string> kSplitColumns{"run_id", "nodes", "train_hash", "validation_hash", "test_hash"};

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : path_(path), out_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
    row(header);
  }
  void row(const std::vector<std::string>& fields) { out_ << join_fields(fields) << '\n'; }
  ~CsvWriter() noexcept(false) {
    out_.flush();
    if (!out_ && std::uncaught_exceptions() == 0) throw IoError("failed writing " + path_.string());
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

std::string yes_no(bool b) { return b ? "true" : "false"; }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex(const std::string& s) {
  std::size_t used = 0;
  const auto v = std::stoull(s, &used, 16);
  if (used != s.size()) throw InvalidInput("bad hex digest '" + s + "'");
  return v;
}

std::vector<std::string> metric_fields(const MetricsReport& m) {
  return {format_real(m.acc), format_real(m.f1),  format_real(m.dr),
          format_real(m.far), format_real(m.auc), format_real(m.ad_mttd)};
}

MetricsReport parse_metrics(const std::vector<std::string>& f, std::size_t at) {
  MetricsReport m;
  m.acc = parse_real(f[at]);
  m.f1 = parse_real(f[at + 1]);
  m.dr = parse_real(f[at + 2]);
  m.far = parse_real(f[at + 3]);
  m.auc = parse_real(f[at + 4]);
  m.ad_mttd = parse_real(f[at + 5]);
  return m;
}

template <typename Fn>
void read_rows(const fs::path& path, const std::vector<std::string>& header, Fn&& fn) {
  CsvReader reader(path.string(), header);
  std::vector<std::string> f;
  while (reader.next(f)) {
    try {
      fn(f);
    } catch (const InvalidInput& e) {
      reader.fail(e.what());
    }
  }
}

struct PathAggregate {
  double nu = 0.0;
  double lambda = 0.0;
  int runs = 0;
  double clusters = 0.0;
  double iterations = 0.0;
  int converged = 0;
  int selected = 0;
  double validation_f1 = 0.0;
  std::vector<MetricsRow> test;
};

std::vector<PathAggregate> aggregate_path(const std::vector<LambdaRow>& rows) {
  std::vector<PathAggregate> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const PathAggregate& a) { return a.nu == r.nu && a.lambda == r.lambda; });
    if (it == out.end()) {
      out.push_back(PathAggregate{});
      out.back().nu = r.nu;
      out.back().lambda = r.lambda;
      it = out.end() - 1;
    }
    ++it->runs;
    it->clusters += r.clusters;
    it->iterations += r.iterations;
    it->converged += r.converged ? 1 : 0;
    it->selected += r.selected ? 1 : 0;
    it->validation_f1 += r.validation_f1;
    it->test.push_back({r.run_id, "path", r.test});
  }
  return out;
}

}  // namespace

std::string summary_text(const RunReport& report) {
  std::ostringstream out;
  out << "experiment: " << report.experiment << "\n";
  out << "runs: " << report.runs << "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %5s %7s %7s %7s %7s %7s %9s %9s %s\n", "model", "n", "ACC", "F1", "DR", "FAR",
                "AUC", "adMTTD", "adMTTD_min", "FAR<=cap");
  out << line;
  for (const auto& m : mean_by_model(report.metrics)) {
    const auto& r = m.mean;
    std::snprintf(line, sizeof line, "%-20s %5d %7.3f %7.3f %7.3f %7.3f %7.3f %9.3f %9.2f %s\n", m.model.c_str(),
                  m.count, r.acc, r.f1, r.dr, r.far, r.auc, r.ad_mttd, r.ad_mttd * report.timestep_minutes,
                  r.passed_far_filter ? "all" : "not all");
    out << line;
  }
  const auto path = aggregate_path(report.lambda_path);
  if (!path.empty()) {
    out << "\nlambda path (mean over runs)\n";
    std::snprintf(line, sizeof line, "%8s %12s %9s %9s %7s %8s\n", "nu", "lambda", "clusters", "val_F1", "F1", "selected");
    out << line;
    for (const auto& a : path) {
      const auto mean = mean_by_model(a.test).front().mean;
      std::snprintf(line, sizeof line, "%8.4g %12.6g %9.2f %9.3f %7.3f %8d\n", a.nu, a.lambda, a.clusters / a.runs,
                    a.validation_f1 / a.runs, mean.f1, a.selected);
      out << line;
    }
  }
  return out.str();
}

double median_wall_ms(const RunReport& report, const std::string& model) {
  std::vector<double> times;
  for (const auto& t : report.timing) {
    if (t.model == model) times.push_back(t.wall_ms);
  }
  if (times.empty()) throw InvalidInput("median_wall_ms: no timing rows for " + model);
  std::sort(times.begin(), times.end());
  const auto n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

void emit_report(const RunReport& report, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  const fs::path root(dir);

  {
    CsvWriter w(root / "metrics.csv", kMetricsColumns);
    for (const auto& r : report.metrics) {
      auto f = metric_fields(r.metrics);
      f.insert(f.begin(), {std::to_string(r.run_id), r.model});
      f.push_back(yes_no(r.metrics.passed_far_filter));
      w.row(f);
    }
  }
  {
    CsvWriter w(root / "per_node_accuracy.csv", kNodeColumns);
    for (const auto& r : report.node_accuracy) {
      w.row({std::to_string(r.run_id), r.model, std::to_string(r.node_id), format_real(r.acc)});
    }
  }
  {
    CsvWriter w(root / "lambda_path_runs.csv", kPathRunColumns);
    for (const auto& r : report.lambda_path) {
      std::vector<std::string> f{std::to_string(r.run_id),   format_real(r.nu),      format_real(r.lambda),
                                 std::to_string(r.clusters), std::to_string(r.iterations), yes_no(r.converged),
                                 yes_no(r.selected),         format_real(r.validation_f1)};
      const auto m = metric_fields(r.test);
      f.insert(f.end(), m.begin(), m.end());
      f.push_back(yes_no(r.test.passed_far_filter));
      w.row(f);
    }
  }
  {
    CsvWriter w(root / "lambda_path.csv", kPathColumns);
    for (const auto& a : aggregate_path(report.lambda_path)) {
      const double n = a.runs;
      std::vector<std::string> f{format_real(a.nu),           format_real(a.lambda),
                                 std::to_string(a.runs),      format_real(a.clusters / n),
                                 format_real(a.iterations / n), std::to_string(a.converged),
                                 std::to_string(a.selected),  format_real(a.validation_f1 / n)};
      const auto m = metric_fields(mean_by_model(a.test).front().mean);
      f.insert(f.end(), m.begin(), m.end());
      w.row(f);
    }
  }
  {
    CsvWriter w(root / "timing.csv", kTimingColumns);
    for (const auto& t : report.timing) {
      w.row({std::to_string(t.run_id), t.model, std::to_string(t.nodes), format_real(t.nu), format_real(t.lambda),
             std::to_string(t.iterations), yes_no(t.converged)});
    }
  }
  {
    CsvWriter w(root / "splits.csv", kSplitColumns);
    for (const auto& s : report.splits) {
      w.row({std::to_string(s.run_id), std::to_string(s.nodes), hex(s.train), hex(s.validation), hex(s.test)});
    }
  }
  {
    std::ofstream out(root / "summary.txt");
    if (!out) throw IoError("cannot open " + (root / "summary.txt").string() + " for writing");
    out << summary_text(report);
    if (!out) throw IoError("failed writing summary.txt");
  }
  {
    nlohmann::ordered_json meta{{"experiment", report.experiment},
                                {"runs", report.runs},
                                {"workers", report.workers},
                                {"timestep_minutes", report.timestep_minutes}};
    nlohmann::ordered_json timing = nlohmann::ordered_json::array();
    std::vector<std::string> models;
    for (const auto& t : report.timing) {
      timing.push_back({{"run_id", t.run_id}, {"model", t.model}, {"wall_ms", t.wall_ms}});
      if (std::find(models.begin(), models.end(), t.model) == models.end()) models.push_back(t.model);
    }
    nlohmann::ordered_json medians = nlohmann::ordered_json::object();
    for (const auto& m : models) medians[m] = median_wall_ms(report, m);
    meta["median_wall_ms"] = medians;
    meta["wall_clock"] = timing;
    std::ofstream out(root / "run_meta.json");
    if (!out) throw IoError("cannot open " + (root / "run_meta.json").string() + " for writing");
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("failed writing run_meta.json");
  }
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::vector<MetricsRow> rows;
  read_rows(path, kMetricsColumns, [&](const std::vector<std::string>& f) {
    MetricsRow r;
    r.run_id = static_cast<int>(parse_int(f[0]));
    r.model = f[1];
    r.metrics = parse_metrics(f, 2);
    r.metrics.passed_far_filter = parse_bool(f[8]);
    rows.push_back(std::move(r));
  });
  return rows;
}

RunReport read_report(const std::string& dir) {
  const fs::path root(dir);
  RunReport report;
  {
    std::ifstream in(root / "run_meta.json");
    if (!in) throw IoError("cannot read " + (root / "run_meta.json").string());
    try {
      const auto meta = nlohmann::json::parse(in);
      report.experiment = meta.at("experiment").get<std::string>();
      report.runs = meta.at("runs").get<int>();
      report.workers = meta.at("workers").get<int>();
      report.timestep_minutes = meta.at("timestep_minutes").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput("malformed run_meta.json: " + std::string(e.what()));
    }
  }
  report.metrics = read_metrics_csv((root / "metrics.csv").string());
  read_rows(root / "per_node_accuracy.csv", kNodeColumns, [&](const std::vector<std::string>& f) {
    report.node_accuracy.push_back({static_cast<int>(parse_int(f[0])), f[1], parse_int(f[2]), parse_real(f[3])});
  });
  read_rows(root / "lambda_path_runs.csv", kPathRunColumns, [&](const std::vector<std::string>& f) {
    LambdaRow r;
    r.run_id = static_cast<int>(parse_int(f[0]));
    r.nu = parse_real(f[1]);
    r.lambda = parse_real(f[2]);
    r.clusters = static_cast<int>(parse_int(f[3]));
    r.iterations = static_cast<int>(parse_int(f[4]));
    r.converged = parse_bool(f[5]);
    r.selected = parse_bool(f[6]);
    r.validation_f1 = parse_real(f[7]);
    r.test = parse_metrics(f, 8);
    r.test.passed_far_filter = parse_bool(f[14]);
    report.lambda_path.push_back(r);
  });
  read_rows(root / "timing.csv", kTimingColumns, [&](const std::vector<std::string>& f) {
    TimingRow t;
    t.run_id = static_cast<int>(parse_int(f[0]));
    t.model = f[1];
    t.nodes = static_cast<int>(parse_int(f[2]));
    t.nu = parse_real(f[3]);
    t.lambda = parse_real(f[4]);
    t.iterations = static_cast<int>(parse_int(f[5]));
    t.converged = parse_bool(f[6]);
    report.timing.push_back(t);
  });
  read_rows(root / "splits.csv", kSplitColumns, [&](const std::vector<std::string>& f) {
    report.splits.push_back({static_cast<int>(parse_int(f[0])), static_cast<int>(parse_int(f[1])), parse_hex(f[2]),
                             parse_hex(f[3]), parse_hex(f[4])});
  });
  return report;
}

}  // namespace nlaid
