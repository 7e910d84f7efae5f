#include "nlaid/data_pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace nlaid {

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

constexpr std::uint64_t kSeriesStream = 1;
constexpr std::uint64_t kProfileStream = 2;
constexpr std::uint64_t kSplitStream = 3;

double daily_profile(const ClusterArchetype& c, double tau) {
  auto bump = [&](double centre) {
    const double z = (tau - centre) / c.peak_width;
    return std::exp(-z * z);
  };
  return c.base_occupancy + (c.peak_occupancy - c.base_occupancy) * (bump(c.am_peak) + 0.8 * bump(c.pm_peak));
}

template <std::size_t N>
std::string pick_other(const std::string& current, const std::string_view (&vocab)[N], std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, N - 2);
  std::size_t idx = pick(rng);
  const auto cur = std::find(std::begin(vocab), std::end(vocab), current) - std::begin(vocab);
  if (static_cast<std::ptrdiff_t>(idx) >= cur) ++idx;
  return std::string(vocab[std::min(idx, N - 1)]);
}

}  // namespace

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::train: return "train";
    case Provenance::validation: return "validation";
    case Provenance::test: return "test";
  }
  return "train";
}

void TrafficSeries::validate() const {
  const auto id = std::to_string(node_id);
  if (timestep_minutes <= 0) throw InvalidInput("series " + id + ": timestep must be positive");
  if (occ_up.size() != occ_down.size()) throw InvalidInput("series " + id + ": upstream/downstream lengths differ");
  for (std::size_t t = 0; t < occ_up.size(); ++t) {
    if (!(occ_up[t] >= 0.0 && occ_up[t] <= 1.0) || !(occ_down[t] >= 0.0 && occ_down[t] <= 1.0)) {
      throw InvalidInput("series " + id + ": occupancy outside [0, 1] at index " + std::to_string(t));
    }
  }
}

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(windows.begin(), windows.end(), [&](const LabeledWindow& w) { return w.label == label; }));
}

SampleMatrix Dataset::matrix_for(NodeId node) const {
  std::vector<FeatureWindow> rows;
  for (const auto& w : windows) {
    if (w.node_id == node) rows.push_back(w.window);
  }
  return to_matrix(rows);
}

SampleMatrix Dataset::matrix() const {
  std::vector<FeatureWindow> rows;
  rows.reserve(windows.size());
  for (const auto& w : windows) rows.push_back(w.window);
  return to_matrix(rows);
}

void GeneratorConfig::validate() const {
  if (nodes < 1) throw ConfigError("generator: nodes must be positive");
  if (records_per_day < 1 || timestep_minutes < 1) throw ConfigError("generator: bad day layout");
  if (train_days < 1 || days < train_days) throw ConfigError("generator: need 1 <= train_days <= days");
  if (clusters.empty()) throw ConfigError("generator: at least one cluster archetype required");
  if (!cluster_of_node.empty()) {
    if (cluster_of_node.size() != static_cast<std::size_t>(nodes)) {
      throw ConfigError("generator: cluster_of_node must list every node");
    }
    for (int c : cluster_of_node) {
      if (c < 0 || c >= static_cast<int>(clusters.size())) throw ConfigError("generator: cluster index out of range");
    }
  }
  for (const auto& c : clusters) {
    c.profile.validate();
    if (!(c.peak_width > 0.0)) throw ConfigError("generator: peak_width must be positive");
  }
  if (!(gap_jitter >= 0.0)) throw ConfigError("generator: gap_jitter must be non-negative");
  if (!(noise_sd >= 0.0) || !(noise_ar >= 0.0 && noise_ar < 1.0)) throw ConfigError("generator: bad noise settings");
  for (double rate : {incident_rate, confounder_rate, profile_noise}) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("generator: rates must lie in [0, 1]");
  }
  if (!(delta > 0.0)) throw ConfigError("generator: incident magnitude delta must be positive");
  if (duration_min < 1 || duration_max < duration_min) throw ConfigError("generator: bad incident duration range");
  if (duration_max > records_per_day) {
    throw ConfigError("generator: incident duration " + std::to_string(duration_max) +
                      " exceeds the day length of " + std::to_string(records_per_day) + " records");
  }
  if (ramp_steps < 1) throw ConfigError("generator: ramp_steps must be positive");
  if (road_segments < 1 || road_segments > nodes) throw ConfigError("generator: road_segments must lie in [1, nodes]");
  parse_timestamp(start);
}

int GeneratorConfig::cluster_of(int node_index) const {
  if (!cluster_of_node.empty()) return cluster_of_node.at(static_cast<std::size_t>(node_index));
  return static_cast<int>(static_cast<long>(node_index) * static_cast<long>(clusters.size()) / nodes);
}

SyntheticData generate_synthetic(const GeneratorConfig& cfg) {
  cfg.validate();
  SyntheticData out;
  const TimePoint origin = parse_timestamp(cfg.start);
  const std::int64_t day_len = cfg.records_per_day;
  const std::int64_t total = static_cast<std::int64_t>(cfg.days) * day_len;

  auto profile_rng = make_rng(cfg.seed, kProfileStream, 0);
  for (int i = 0; i < cfg.nodes; ++i) {
    const int c = cfg.cluster_of(i);
    out.cluster_of_node.push_back(c);
    RegionProfile p = cfg.clusters[static_cast<std::size_t>(c)].profile;
    p.node_id = i + 1;
    p.latitude = 38.55 + 0.004 * i;
    p.longitude = -121.75 + 0.03 * i;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(profile_rng) < cfg.profile_noise) {
      p.location_class = pick_other(p.location_class, kLocationClasses, profile_rng);
      p.adjacent_config = pick_other(p.adjacent_config, kAdjacentConfigs, profile_rng);
      p.has_sub_streets = !p.has_sub_streets;
    }
    out.profiles.push_back(std::move(p));
    const auto segment = [&](int k) { return static_cast<long>(k) * cfg.road_segments / cfg.nodes; };
    if (i > 0 && segment(i - 1) == segment(i)) out.adjacency.emplace_back(i, i + 1);
  }

  for (int i = 0; i < cfg.nodes; ++i) {
    const auto& arch = cfg.clusters[static_cast<std::size_t>(out.cluster_of_node[static_cast<std::size_t>(i)])];
    auto rng = make_rng(cfg.seed, kSeriesStream, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    TrafficSeries s;
    s.node_id = i + 1;
    s.timestep_minutes = cfg.timestep_minutes;
    s.origin = origin;
    s.occ_up.resize(static_cast<std::size_t>(total));
    s.occ_down.resize(static_cast<std::size_t>(total));

    const double gap = arch.downstream_gap + cfg.gap_jitter * gauss(rng);
    const double innovation = cfg.noise_sd * std::sqrt(1.0 - cfg.noise_ar * cfg.noise_ar);
    double e_up = cfg.noise_sd * gauss(rng);
    double e_down = cfg.noise_sd * gauss(rng);
    for (std::int64_t t = 0; t < total; ++t) {
      const double tau = static_cast<double>(t % day_len) / static_cast<double>(day_len);
      const double level = daily_profile(arch, tau);
      if (t > 0) {
        e_up = cfg.noise_ar * e_up + innovation * gauss(rng);
        e_down = cfg.noise_ar * e_down + innovation * gauss(rng);
      }
      s.occ_up[static_cast<std::size_t>(t)] = level + e_up;
      s.occ_down[static_cast<std::size_t>(t)] = level * (1.0 + gap) + e_down;
    }

    std::vector<IncidentRecord> node_incidents;
    std::uniform_int_distribution<int> duration(cfg.duration_min, cfg.duration_max);
    for (int d = cfg.train_days; d < cfg.days; ++d) {
      if (unit(rng) >= cfg.incident_rate) continue;
      const int dur = duration(rng);
      std::uniform_int_distribution<std::int64_t> offset(0, day_len - dur);
      node_incidents.push_back({s.node_id, d * day_len + offset(rng), dur});
    }

    if (cfg.confounders) {
      // Compression wave: the downstream detector sees the pulse one step
      // before the upstream one.
      for (std::int64_t t = 0; t + 1 < total; ++t) {
        if (unit(rng) >= cfg.confounder_rate) continue;
        const bool clash = std::any_of(node_incidents.begin(), node_incidents.end(),
                                       [&](const IncidentRecord& r) { return r.overlaps(t, t + 1); });
        if (clash) continue;
        s.occ_down[static_cast<std::size_t>(t)] += cfg.confounder_magnitude;
        s.occ_up[static_cast<std::size_t>(t + 1)] += cfg.confounder_magnitude;
      }
    }

    for (const auto& r : node_incidents) {
      for (std::int64_t k = 0; k < r.duration; ++k) {
        const double ramp = std::min(1.0, static_cast<double>(k + 1) / cfg.ramp_steps);
        s.occ_up[static_cast<std::size_t>(r.start + k)] += cfg.delta * ramp;
        s.occ_down[static_cast<std::size_t>(r.start + k)] -= cfg.delta * ramp;
      }
    }
    for (std::int64_t t = 0; t < total; ++t) {
      auto& up = s.occ_up[static_cast<std::size_t>(t)];
      auto& down = s.occ_down[static_cast<std::size_t>(t)];
      up = std::clamp(up, 0.0, 1.0);
      down = std::clamp(down, 0.0, 1.0);
    }
    out.series.push_back(std::move(s));
    out.incidents.insert(out.incidents.end(), node_incidents.begin(), node_incidents.end());
  }
  return out;
}

std::vector<double> occupancy_difference(const TrafficSeries& s) {
  if (s.occ_up.size() != s.occ_down.size()) throw InvalidInput("occupancy_difference: length mismatch");
  std::vector<double> diff(s.occ_up.size());
  for (std::size_t t = 0; t < diff.size(); ++t) diff[t] = s.occ_up[t] - s.occ_down[t];
  return diff;
}

std::vector<WindowRecord> windowize(std::span<const double> diff, int width, std::span<const IncidentRecord> incidents) {
  if (width < 1) throw InvalidInput("windowize: width must be at least 1");
  if (diff.size() < static_cast<std::size_t>(width)) throw InvalidInput("windowize: series shorter than window");
  std::vector<WindowRecord> out;
  out.reserve(diff.size() - static_cast<std::size_t>(width) + 1);
  for (std::size_t end = static_cast<std::size_t>(width) - 1; end < diff.size(); ++end) {
    WindowRecord rec;
    rec.end_index = static_cast<std::int64_t>(end);
    rec.window.values = Eigen::Map<const Vector>(diff.data() + end + 1 - static_cast<std::size_t>(width), width);
    const bool inside = std::any_of(incidents.begin(), incidents.end(),
                                    [&](const IncidentRecord& r) { return r.contains(rec.end_index); });
    rec.label = inside ? Label::incident : Label::normal;
    out.push_back(std::move(rec));
  }
  return out;
}

NodeWindows node_windows(const TrafficSeries& s, int width, std::span<const IncidentRecord> incidents) {
  std::vector<IncidentRecord> own;
  for (const auto& r : incidents) {
    if (r.node_id == s.node_id) own.push_back(r);
  }
  const auto diff = occupancy_difference(s);
  return {s.node_id, windowize(diff, width, own)};
}

void SplitConfig::validate() const {
  if (window < 1 || records_per_day < 1 || train_days < 1) throw ConfigError("splits: bad window/day layout");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("splits: validation_fraction must lie in [0, 1)");
  }
  if (test_incident_windows < 0 || test_normal_windows < 0 || validation_incident_windows < 0 ||
      validation_normal_windows < 0) {
    throw ConfigError("splits: quotas must be non-negative");
  }
}

Splits make_splits(std::span<const NodeWindows> windows, std::span<const IncidentRecord> incidents,
                   const SplitConfig& cfg) {
  cfg.validate();
  const std::int64_t train_end = static_cast<std::int64_t>(cfg.train_days) * cfg.records_per_day;
  const std::int64_t width = cfg.window;
  Splits out;
  out.train.provenance = Provenance::train;
  out.validation.provenance = Provenance::validation;
  out.test.provenance = Provenance::test;

  std::map<NodeId, std::vector<IncidentRecord>> by_node;
  for (const auto& r : incidents) by_node[r.node_id].push_back(r);
  auto overlaps_incident = [&](NodeId node, std::int64_t end) {
    const auto it = by_node.find(node);
    if (it == by_node.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const IncidentRecord& r) { return r.overlaps(end - width + 1, end); });
  };

  // Incident windows available in the held-out span, per incident.
  struct Candidate {
    IncidentRecord incident;
    std::vector<const WindowRecord*> windows;
  };
  std::vector<std::vector<Candidate>> candidates(windows.size());
  std::vector<std::vector<const WindowRecord*>> held_out_normals(windows.size());
  std::vector<std::vector<const WindowRecord*>> carved(windows.size());

  auto rng = make_rng(cfg.seed, kSplitStream, 0);
  for (std::size_t n = 0; n < windows.size(); ++n) {
    const auto& nw = windows[n];
    std::vector<const WindowRecord*> train_pool;
    for (const auto& rec : nw.windows) {
      const std::int64_t first = rec.end_index - width + 1;
      if (rec.end_index < train_end) {
        if (!overlaps_incident(nw.node_id, rec.end_index) && rec.label == Label::normal) train_pool.push_back(&rec);
      } else if (first >= train_end && rec.label == Label::normal && !overlaps_incident(nw.node_id, rec.end_index)) {
        held_out_normals[n].push_back(&rec);
      }
    }
    const auto carve = static_cast<std::size_t>(std::ceil(cfg.validation_fraction * static_cast<double>(train_pool.size())));
    const std::size_t keep = train_pool.size() - std::min(carve, train_pool.size());
    for (std::size_t i = 0; i < keep; ++i) {
      const auto* rec = train_pool[i];
      out.train.windows.push_back({nw.node_id, rec->end_index, rec->window, Label::normal});
    }
    out.train_counts.emplace_back(nw.node_id, keep);
    carved[n].assign(train_pool.begin() + static_cast<std::ptrdiff_t>(keep), train_pool.end());

    if (const auto it = by_node.find(nw.node_id); it != by_node.end()) {
      for (const auto& r : it->second) {
        Candidate c{r, {}};
        for (const auto& rec : nw.windows) {
          if (r.contains(rec.end_index) && rec.end_index - width + 1 >= train_end) c.windows.push_back(&rec);
        }
        if (!c.windows.empty()) candidates[n].push_back(std::move(c));
      }
      std::shuffle(candidates[n].begin(), candidates[n].end(), rng);
    }
  }

  // Round-robin over nodes, one whole incident per turn, truncating the last
  // one to hit the quota exactly.
  std::vector<std::size_t> cursor(windows.size(), 0);
  auto fill_incidents = [&](int quota, Dataset& target, std::vector<IncidentRecord>& used) {
    int remaining = quota;
    bool progressed = true;
    while (remaining > 0 && progressed) {
      progressed = false;
      for (std::size_t n = 0; n < windows.size() && remaining > 0; ++n) {
        if (cursor[n] >= candidates[n].size()) continue;
        const auto& c = candidates[n][cursor[n]++];
        const std::size_t take = std::min<std::size_t>(c.windows.size(), static_cast<std::size_t>(remaining));
        for (std::size_t i = 0; i < take; ++i) {
          target.windows.push_back({windows[n].node_id, c.windows[i]->end_index, c.windows[i]->window, Label::incident});
        }
        used.push_back(c.incident);
        remaining -= static_cast<int>(take);
        progressed = true;
      }
    }
    return remaining;
  };

  const int test_short = fill_incidents(cfg.test_incident_windows, out.test, out.test_incidents);
  if (test_short > 0) {
    std::ostringstream msg;
    msg << "splits: incident quota infeasible, short by " << test_short << " of " << cfg.test_incident_windows
        << " test incident windows; available per node:";
    for (std::size_t n = 0; n < windows.size(); ++n) {
      std::size_t avail = 0;
      for (const auto& c : candidates[n]) avail += c.windows.size();
      msg << ' ' << windows[n].node_id << '=' << avail;
    }
    throw ConfigError(msg.str());
  }
  const int val_short = fill_incidents(cfg.validation_incident_windows, out.validation, out.validation_incidents);
  if (val_short > 0) {
    if (val_short == cfg.validation_incident_windows && cfg.validation_incident_windows > 0) {
      throw ConfigError("splits: no incidents left for the validation split");
    }
    spdlog::warn("splits: validation split short by {} incident windows", val_short);
  }

  const std::size_t nodes = windows.size();
  auto node_quota = [&](int total, std::size_t n) {
    return static_cast<std::size_t>(total) / nodes + (n < static_cast<std::size_t>(total) % nodes ? 1 : 0);
  };

  // Validation normals: per-node share of the configured count from the carved pool.
  std::size_t val_missing = 0;
  for (std::size_t n = 0; n < nodes; ++n) {
    auto pool = carved[n];
    if (cfg.validation_normal_windows > 0) {
      const auto quota = node_quota(cfg.validation_normal_windows, n);
      if (pool.size() < quota) {
        val_missing += quota - pool.size();
      } else {
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(quota);
      }
    }
    for (const auto* rec : pool) out.validation.windows.push_back({windows[n].node_id, rec->end_index, rec->window, Label::normal});
  }
  if (val_missing > 0) spdlog::warn("splits: validation split short by {} normal windows", val_missing);

  // Normal test windows: per-node quota, sampled without replacement.
  std::vector<std::string> deficits;
  for (std::size_t n = 0; n < nodes; ++n) {
    const auto quota = node_quota(cfg.test_normal_windows, n);
    auto pool = held_out_normals[n];
    if (pool.size() < quota) {
      deficits.push_back(std::to_string(windows[n].node_id) + " (need " + std::to_string(quota) + ", have " +
                         std::to_string(pool.size()) + ")");
      continue;
    }
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(quota);
    std::sort(pool.begin(), pool.end(), [](const auto* a, const auto* b) { return a->end_index < b->end_index; });
    for (const auto* rec : pool) out.test.windows.push_back({windows[n].node_id, rec->end_index, rec->window, Label::normal});
  }
  if (!deficits.empty()) {
    std::string msg = "splits: normal test quota infeasible for nodes:";
    for (const auto& d : deficits) msg += " " + d;
    throw ConfigError(msg);
  }

  auto by_key = [](const LabeledWindow& a, const LabeledWindow& b) {
    return std::tie(a.node_id, a.end_index) < std::tie(b.node_id, b.end_index);
  };
  std::stable_sort(out.test.windows.begin(), out.test.windows.end(), by_key);
  std::stable_sort(out.validation.windows.begin(), out.validation.windows.end(), by_key);
  auto by_incident = [](const IncidentRecord& a, const IncidentRecord& b) {
    return std::tie(a.node_id, a.start) < std::tie(b.node_id, b.start);
  };
  std::sort(out.test_incidents.begin(), out.test_incidents.end(), by_incident);
  std::sort(out.validation_incidents.begin(), out.validation_incidents.end(), by_incident);
  return out;
}

std::uint64_t split_hash(const Dataset& data) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::int64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& w : data.windows) {
    mix(w.node_id);
    mix(w.end_index);
  }
  return h;
}

LoadedData load_csv(const std::string& series_path, const std::string& incidents_path, int timestep_minutes) {
  if (timestep_minutes < 1) throw InvalidInput("load_csv: timestep must be positive");
  const std::chrono::seconds cadence(timestep_minutes * 60);
  LoadedData out;
  std::unordered_map<NodeId, std::size_t> index;
  {
    CsvReader reader(series_path, {"node_id", "timestamp", "occ_up", "occ_down"});
    std::vector<std::string> f;
    while (reader.next(f)) {
      NodeId id = 0;
      TimePoint ts{};
      double up = 0.0, down = 0.0;
      try {
        id = parse_int(f[0]);
        ts = parse_timestamp(f[1]);
        up = parse_real(f[2]);
        down = parse_real(f[3]);
      } catch (const InvalidInput& e) {
        reader.fail(e.what());
      }
      if (std::isnan(up) || std::isnan(down)) reader.fail("NaN occupancy");
      if (!(up >= 0.0 && up <= 1.0) || !(down >= 0.0 && down <= 1.0)) reader.fail("occupancy outside [0, 1]");
      auto [it, inserted] = index.emplace(id, out.series.size());
      if (inserted) {
        TrafficSeries s;
        s.node_id = id;
        s.timestep_minutes = timestep_minutes;
        s.origin = ts;
        out.series.push_back(std::move(s));
      }
      auto& s = out.series[it->second];
      const TimePoint expected = s.origin + cadence * static_cast<std::int64_t>(s.occ_up.size());
      if (ts != expected) reader.fail("timestamp " + f[1] + " breaks the " + std::to_string(timestep_minutes) + "-minute cadence");
      s.occ_up.push_back(up);
      s.occ_down.push_back(down);
    }
  }
  {
    CsvReader reader(incidents_path, {"node_id", "start_timestamp", "duration_steps"});
    std::vector<std::string> f;
    while (reader.next(f)) {
      IncidentRecord r;
      TimePoint ts{};
      try {
        r.node_id = parse_int(f[0]);
        ts = parse_timestamp(f[1]);
        r.duration = parse_int(f[2]);
      } catch (const InvalidInput& e) {
        reader.fail(e.what());
      }
      const auto it = index.find(r.node_id);
      if (it == index.end()) reader.fail("incident on unknown node " + f[0]);
      const auto& s = out.series[it->second];
      const auto offset = ts - s.origin;
      if (offset.count() < 0 || offset.count() % cadence.count() != 0) reader.fail("start timestamp not on the series grid");
      r.start = offset.count() / cadence.count();
      if (r.duration < 1 || r.end() > static_cast<std::int64_t>(s.length())) reader.fail("incident outside series bounds");
      for (const auto& other : out.incidents) {
        if (other.node_id == r.node_id && other.overlaps(r.start, r.end() - 1)) {
          reader.fail("incident overlaps another incident on node " + f[0]);
        }
      }
      out.incidents.push_back(r);
    }
  }
  return out;
}

void write_csv(const std::string& series_path, const std::string& incidents_path, std::span<const TrafficSeries> series,
               std::span<const IncidentRecord> incidents) {
  {
    std::ofstream out(series_path);
    if (!out) throw IoError("cannot open " + series_path + " for writing");
    out << "node_id,timestamp,occ_up,occ_down\n";
    for (const auto& s : series) {
      const std::chrono::seconds cadence(s.timestep_minutes * 60);
      for (std::size_t t = 0; t < s.length(); ++t) {
        out << s.node_id << ',' << format_timestamp(s.origin + cadence * static_cast<std::int64_t>(t)) << ','
            << format_real(s.occ_up[t]) << ',' << format_real(s.occ_down[t]) << '\n';
      }
    }
    if (!out) throw IoError("failed writing " + series_path);
  }
  std::unordered_map<NodeId, const TrafficSeries*> by_id;
  for (const auto& s : series) by_id.emplace(s.node_id, &s);
  std::ofstream out(incidents_path);
  if (!out) throw IoError("cannot open " + incidents_path + " for writing");
  out << "node_id,start_timestamp,duration_steps\n";
  for (const auto& r : incidents) {
    const auto it = by_id.find(r.node_id);
    if (it == by_id.end()) throw InvalidInput("write_csv: incident on unknown node " + std::to_string(r.node_id));
    const std::chrono::seconds cadence(it->second->timestep_minutes * 60);
    out << r.node_id << ',' << format_timestamp(it->second->origin + cadence * r.start) << ',' << r.duration << '\n';
  }
  if (!out) throw IoError("failed writing " + incidents_path);
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::size_t dim = data.windows.empty() ? 4 : data.windows.front().window.dim();
  out << "node_id,end_index";
  for (std::size_t i = 1; i <= dim; ++i) out << ",f" << i;
  out << ",label\n";
  for (const auto& w : data.windows) {
    out << w.node_id << ',' << w.end_index;
    for (Eigen::Index i = 0; i < w.window.values.size(); ++i) out << ',' << format_real(w.window.values[i]);
    out << ',' << to_string(w.label) << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace nlaid
