#include "nlaid/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <thread>

#include "nlaid/errors.hpp"

namespace nlaid {

using Json = nlohmann::ordered_json;

namespace {

const char* to_string(DataSourceKind k) { return k == DataSourceKind::csv ? "csv" : "synthetic"; }
const char* to_string(ThresholdMode m) {
  switch (m) {
    case ThresholdMode::best_f1: return "best_f1";
    case ThresholdMode::far_threshold: return "far_threshold";
    case ThresholdMode::sign: return "sign";
  }
  return "best_f1";
}
const char* to_string(ScaleOrder o) { return o == ScaleOrder::natural ? "natural" : "stratified"; }

DataSourceKind parse_source(const std::string& s) {
  if (s == "synthetic") return DataSourceKind::synthetic;
  if (s == "csv") return DataSourceKind::csv;
  throw ConfigError("data.source must be 'synthetic' or 'csv', got '" + s + "'");
}

ThresholdMode parse_threshold_mode(const std::string& s) {
  if (s == "best_f1") return ThresholdMode::best_f1;
  if (s == "far_threshold") return ThresholdMode::far_threshold;
  if (s == "sign") return ThresholdMode::sign;
  throw ConfigError("evaluation.threshold_mode must be 'best_f1', 'far_threshold' or 'sign', got '" + s + "'");
}

ScaleOrder parse_scale_order(const std::string& s) {
  if (s == "natural") return ScaleOrder::natural;
  if (s == "stratified") return ScaleOrder::stratified;
  throw ConfigError("sweep.order must be 'natural' or 'stratified', got '" + s + "'");
}

Json archetype_json(const ClusterArchetype& c) {
  return Json{{"base_occupancy", c.base_occupancy},
              {"peak_occupancy", c.peak_occupancy},
              {"downstream_gap", c.downstream_gap},
              {"am_peak", c.am_peak},
              {"pm_peak", c.pm_peak},
              {"peak_width", c.peak_width},
              {"location_class", c.profile.location_class},
              {"has_sub_streets", c.profile.has_sub_streets},
              {"adjacent_config", c.profile.adjacent_config},
              {"lane_count", c.profile.lane_count}};
}

Json to_json(const ExperimentConfig& cfg) {
  const auto& g = cfg.data.generator;
  Json clusters = Json::array();
  for (const auto& c : g.clusters) clusters.push_back(archetype_json(c));
  Json generator{{"nodes", g.nodes},
                 {"start", g.start},
                 {"clusters", clusters},
                 {"cluster_of_node", g.cluster_of_node},
                 {"gap_jitter", g.gap_jitter},
                 {"noise_sd", g.noise_sd},
                 {"noise_ar", g.noise_ar},
                 {"incident_rate", g.incident_rate},
                 {"delta", g.delta},
                 {"duration_min", g.duration_min},
                 {"duration_max", g.duration_max},
                 {"ramp_steps", g.ramp_steps},
                 {"confounders", g.confounders},
                 {"confounder_rate", g.confounder_rate},
                 {"confounder_magnitude", g.confounder_magnitude},
                 {"profile_noise", g.profile_noise},
                 {"road_segments", g.road_segments}};
  const auto& d = cfg.data;
  Json data{{"source", to_string(d.source)},
            {"days", d.days},
            {"train_days", d.train_days},
            {"records_per_day", d.records_per_day},
            {"timestep_minutes", d.timestep_minutes},
            {"series_csv", d.series_csv},
            {"incidents_csv", d.incidents_csv},
            {"profiles_csv", d.profiles_csv},
            {"adjacency_csv", d.adjacency_csv},
            {"generator", generator}};
  const auto& s = cfg.splits;
  Json splits{{"window", s.window},
              {"validation_fraction", s.validation_fraction},
              {"test_incident_windows", s.test_incident_windows},
              {"test_normal_windows", s.test_normal_windows},
              {"validation_incident_windows", s.validation_incident_windows},
              {"validation_normal_windows", s.validation_normal_windows}};
  const auto& w = cfg.graph.weights;
  Json graph{{"variant", to_string(cfg.graph_variant)},
             {"tau", cfg.graph.tau},
             {"road_weight", cfg.graph.road_weight},
             {"geo_weight", cfg.graph.geo_weight},
             {"max_distance_km", cfg.graph.max_distance_km},
             {"weights",
              {{"location_class", w.location_class},
               {"has_sub_streets", w.has_sub_streets},
               {"adjacent_config", w.adjacent_config},
               {"lane_count", w.lane_count}}}};
  const auto& sv = cfg.solver;
  Json solver{{"lambda", sv.lambda},       {"rho", sv.rho},           {"eps_primal", sv.eps_primal},
              {"eps_dual", sv.eps_dual},   {"max_iter", sv.max_iter}, {"inner_tol", sv.inner_tol}};
  return Json{{"seed", cfg.seed},
              {"runs", cfg.runs},
              {"workers", cfg.workers},
              {"data", data},
              {"splits", splits},
              {"graph", graph},
              {"solver", solver},
              {"model", {{"nu", cfg.nu}}},
              {"search",
               {{"nu_grid", cfg.search.nu_grid},
                {"lambda_grid", cfg.search.lambda_grid},
                {"cluster_tol", cfg.search.cluster_tol},
                {"path_eps", cfg.search.path_eps}}},
              {"evaluation", {{"far_cap", cfg.far_cap}, {"threshold_mode", to_string(cfg.threshold_mode)}}},
              {"sweep", {{"scales", cfg.scales}, {"order", to_string(cfg.scale_order)}}}};
}

void collect_keys(const Json& schema, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, value] : schema.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      collect_keys(value, path, out);
    } else {
      out.push_back(path);
    }
  }
}

std::string join_keys(const Json& schema, const std::string& prefix) {
  std::vector<std::string> keys;
  collect_keys(schema, prefix, keys);
  std::string out;
  for (const auto& k : keys) out += (out.empty() ? "" : ", ") + k;
  return out;
}

bool compatible(const Json& schema, const Json& value) {
  if (schema.is_number_float()) return value.is_number();
  if (schema.is_number_unsigned()) return value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
  if (schema.is_number_integer()) return value.is_number_integer();
  if (schema.is_boolean()) return value.is_boolean();
  if (schema.is_string()) return value.is_string();
  if (schema.is_array()) return value.is_array();
  if (schema.is_object()) return value.is_object();
  return false;
}

const char* type_name(const Json& j) {
  if (j.is_number_float()) return "number";
  if (j.is_number_unsigned()) return "non-negative integer";
  if (j.is_number_integer()) return "integer";
  return j.type_name();
}

// Element schema for array-valued keys.
Json array_element_schema(const std::string& path) {
  if (path == "data.generator.clusters") return archetype_json(ClusterArchetype{});
  if (path == "data.generator.cluster_of_node" || path == "sweep.scales") return Json(0);
  return Json(0.0);
}

// Overlays `user` on `schema`, rejecting unknown keys and type mismatches.
void overlay(Json& schema, const Json& user, const std::string& prefix);

void overlay_array(Json& target, const Json& user, const std::string& path, const Json& element_schema) {
  Json result = Json::array();
  for (std::size_t i = 0; i < user.size(); ++i) {
    const auto& item = user[i];
    const std::string item_path = path + "[" + std::to_string(i) + "]";
    if (element_schema.is_object()) {
      if (!item.is_object()) throw ConfigError(item_path + ": expected an object");
      Json base = element_schema;
      overlay(base, item, item_path);
      result.push_back(base);
    } else {
      if (!compatible(element_schema, item)) {
        throw ConfigError(item_path + ": expected " + std::string(type_name(element_schema)) + ", got " + item.dump());
      }
      result.push_back(item);
    }
  }
  target = result;
}

void overlay(Json& schema, const Json& user, const std::string& prefix) {
  if (!user.is_object()) throw ConfigError((prefix.empty() ? std::string("config") : prefix) + ": expected an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) {
      throw ConfigError("unknown config key '" + path + "'; valid keys: " + join_keys(schema, prefix));
    }
    auto& slot = schema[key];
    if (!compatible(slot, value)) {
      throw ConfigError("config key '" + path + "' expects " + type_name(slot) + ", got " + value.dump());
    }
    if (slot.is_object()) {
      overlay(slot, value, path);
    } else if (slot.is_array()) {
      overlay_array(slot, value, path, array_element_schema(path));
    } else {
      slot = value;
    }
  }
}

ClusterArchetype archetype_from(const Json& j) {
  ClusterArchetype c;
  c.base_occupancy = j.at("base_occupancy").get<double>();
  c.peak_occupancy = j.at("peak_occupancy").get<double>();
  c.downstream_gap = j.at("downstream_gap").get<double>();
  c.am_peak = j.at("am_peak").get<double>();
  c.pm_peak = j.at("pm_peak").get<double>();
  c.peak_width = j.at("peak_width").get<double>();
  c.profile.location_class = j.at("location_class").get<std::string>();
  c.profile.has_sub_streets = j.at("has_sub_streets").get<bool>();
  c.profile.adjacent_config = j.at("adjacent_config").get<std::string>();
  c.profile.lane_count = j.at("lane_count").get<int>();
  return c;
}

ExperimentConfig from_json(const Json& j) {
  ExperimentConfig cfg;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.runs = j.at("runs").get<int>();
  cfg.workers = j.at("workers").get<int>();

  const auto& d = j.at("data");
  cfg.data.source = parse_source(d.at("source").get<std::string>());
  cfg.data.days = d.at("days").get<int>();
  cfg.data.train_days = d.at("train_days").get<int>();
  cfg.data.records_per_day = d.at("records_per_day").get<int>();
  cfg.data.timestep_minutes = d.at("timestep_minutes").get<int>();
  cfg.data.series_csv = d.at("series_csv").get<std::string>();
  cfg.data.incidents_csv = d.at("incidents_csv").get<std::string>();
  cfg.data.profiles_csv = d.at("profiles_csv").get<std::string>();
  cfg.data.adjacency_csv = d.at("adjacency_csv").get<std::string>();
  const auto& g = d.at("generator");
  auto& gen = cfg.data.generator;
  gen.nodes = g.at("nodes").get<int>();
  gen.start = g.at("start").get<std::string>();
  gen.clusters.clear();
  for (const auto& c : g.at("clusters")) gen.clusters.push_back(archetype_from(c));
  gen.cluster_of_node = g.at("cluster_of_node").get<std::vector<int>>();
  gen.gap_jitter = g.at("gap_jitter").get<double>();
  gen.noise_sd = g.at("noise_sd").get<double>();
  gen.noise_ar = g.at("noise_ar").get<double>();
  gen.incident_rate = g.at("incident_rate").get<double>();
  gen.delta = g.at("delta").get<double>();
  gen.duration_min = g.at("duration_min").get<int>();
  gen.duration_max = g.at("duration_max").get<int>();
  gen.ramp_steps = g.at("ramp_steps").get<int>();
  gen.confounders = g.at("confounders").get<bool>();
  gen.confounder_rate = g.at("confounder_rate").get<double>();
  gen.confounder_magnitude = g.at("confounder_magnitude").get<double>();
  gen.profile_noise = g.at("profile_noise").get<double>();
  gen.road_segments = g.at("road_segments").get<int>();

  const auto& s = j.at("splits");
  cfg.splits.window = s.at("window").get<int>();
  cfg.splits.validation_fraction = s.at("validation_fraction").get<double>();
  cfg.splits.test_incident_windows = s.at("test_incident_windows").get<int>();
  cfg.splits.test_normal_windows = s.at("test_normal_windows").get<int>();
  cfg.splits.validation_incident_windows = s.at("validation_incident_windows").get<int>();
  cfg.splits.validation_normal_windows = s.at("validation_normal_windows").get<int>();

  const auto& gr = j.at("graph");
  cfg.graph_variant = parse_graph_variant(gr.at("variant").get<std::string>());
  cfg.graph.tau = gr.at("tau").get<double>();
  cfg.graph.road_weight = gr.at("road_weight").get<double>();
  cfg.graph.geo_weight = gr.at("geo_weight").get<double>();
  cfg.graph.max_distance_km = gr.at("max_distance_km").get<double>();
  const auto& w = gr.at("weights");
  cfg.graph.weights.location_class = w.at("location_class").get<double>();
  cfg.graph.weights.has_sub_streets = w.at("has_sub_streets").get<double>();
  cfg.graph.weights.adjacent_config = w.at("adjacent_config").get<double>();
  cfg.graph.weights.lane_count = w.at("lane_count").get<double>();

  const auto& sv = j.at("solver");
  cfg.solver.lambda = sv.at("lambda").get<double>();
  cfg.solver.rho = sv.at("rho").get<double>();
  cfg.solver.eps_primal = sv.at("eps_primal").get<double>();
  cfg.solver.eps_dual = sv.at("eps_dual").get<double>();
  cfg.solver.max_iter = sv.at("max_iter").get<int>();
  cfg.solver.inner_tol = sv.at("inner_tol").get<double>();

  cfg.nu = j.at("model").at("nu").get<double>();
  const auto& se = j.at("search");
  cfg.search.nu_grid = se.at("nu_grid").get<std::vector<double>>();
  cfg.search.lambda_grid = se.at("lambda_grid").get<std::vector<double>>();
  cfg.search.cluster_tol = se.at("cluster_tol").get<double>();
  cfg.search.path_eps = se.at("path_eps").get<double>();
  const auto& ev = j.at("evaluation");
  cfg.far_cap = ev.at("far_cap").get<double>();
  cfg.threshold_mode = parse_threshold_mode(ev.at("threshold_mode").get<std::string>());
  const auto& sw = j.at("sweep");
  cfg.scales = sw.at("scales").get<std::vector<int>>();
  cfg.scale_order = parse_scale_order(sw.at("order").get<std::string>());
  return cfg;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  if (data.train_days < 1 || data.days <= data.train_days) {
    throw ConfigError("data: need 1 <= train_days < days so a held-out span exists");
  }
  if (data.records_per_day < 1 || data.timestep_minutes < 1) throw ConfigError("data: bad day layout");
  if (data.source == DataSourceKind::csv && (data.series_csv.empty() || data.incidents_csv.empty())) {
    throw ConfigError("data: csv source needs series_csv and incidents_csv");
  }
  if (data.source == DataSourceKind::synthetic) generator_for(seed).validate();
  splits_for(seed).validate();
  solver.validate();
  if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("model.nu must lie in (0, 1]");
  if (search.nu_grid.empty()) throw ConfigError("search.nu_grid must not be empty");
  for (double v : search.nu_grid) {
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("search.nu_grid values must lie in (0, 1]");
  }
  if (search.lambda_grid.empty()) throw ConfigError("search.lambda_grid must not be empty");
  for (std::size_t i = 0; i < search.lambda_grid.size(); ++i) {
    if (!(search.lambda_grid[i] >= 0.0)) throw ConfigError("search.lambda_grid values must be non-negative");
    if (i > 0 && search.lambda_grid[i] <= search.lambda_grid[i - 1]) {
      throw ConfigError("search.lambda_grid must be strictly ascending");
    }
  }
  if (!(search.cluster_tol >= 0.0)) throw ConfigError("search.cluster_tol must be non-negative");
  if (!(search.path_eps > 0.0)) throw ConfigError("search.path_eps must be positive");
  if (!(far_cap >= 0.0 && far_cap <= 1.0)) throw ConfigError("evaluation.far_cap must lie in [0, 1]");
  if (scales.empty()) throw ConfigError("sweep.scales must not be empty");
  for (int s : scales) {
    if (s < 1) throw ConfigError("sweep.scales entries must be positive");
  }
  if (!(graph.tau >= 0.0 && graph.tau <= 1.0)) throw ConfigError("graph.tau must lie in [0, 1]");
  if (!(graph.road_weight > 0.0) || !(graph.geo_weight > 0.0)) throw ConfigError("graph edge weights must be positive");
}

GeneratorConfig ExperimentConfig::generator_for(std::uint64_t run_seed) const {
  GeneratorConfig g = data.generator;
  g.days = data.days;
  g.train_days = data.train_days;
  g.records_per_day = data.records_per_day;
  g.timestep_minutes = data.timestep_minutes;
  g.seed = run_seed;
  return g;
}

SplitConfig ExperimentConfig::splits_for(std::uint64_t run_seed) const {
  SplitConfig s = splits;
  s.records_per_day = data.records_per_day;
  s.train_days = data.train_days;
  s.seed = run_seed;
  return s;
}

int ExperimentConfig::effective_workers() const {
  if (workers > 0) return workers;
  return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  auto& g = cfg.data.generator;
  ClusterArchetype downtown;
  downtown.base_occupancy = 0.08;
  downtown.peak_occupancy = 0.30;
  downtown.downstream_gap = 0.30;
  downtown.profile.location_class = "cbd";
  downtown.profile.has_sub_streets = true;
  downtown.profile.adjacent_config = "merge";
  downtown.profile.lane_count = 4;

  ClusterArchetype urban;
  urban.base_occupancy = 0.06;
  urban.peak_occupancy = 0.22;
  urban.downstream_gap = 0.15;
  urban.am_peak = 0.30;
  urban.pm_peak = 0.74;
  urban.profile.location_class = "urban";
  urban.profile.has_sub_streets = false;
  urban.profile.adjacent_config = "diverge";
  urban.profile.lane_count = 3;

  ClusterArchetype suburban;
  suburban.base_occupancy = 0.04;
  suburban.peak_occupancy = 0.14;
  suburban.downstream_gap = 0.05;
  suburban.am_peak = 0.28;
  suburban.pm_peak = 0.68;
  suburban.profile.location_class = "suburban";
  suburban.profile.has_sub_streets = false;
  suburban.profile.adjacent_config = "plain";
  suburban.profile.lane_count = 2;

  g.clusters = {downtown, urban, suburban};
  // Regions inside a cluster are similar, not clones.
  g.gap_jitter = 0.02;
  g.delta = 0.05;
  // Two freeways whose split does not follow the cluster boundaries.
  g.road_segments = 2;
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

ExperimentConfig config_from_json(const std::string& text) {
  Json user;
  try {
    user = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Json merged = to_json(default_experiment_config());
  overlay(merged, user, "");
  ExperimentConfig cfg = from_json(merged);
  cfg.validate();
  return cfg;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  collect_keys(to_json(default_experiment_config()), "", keys);
  return keys;
}

ExperimentConfig apply_overrides(const ExperimentConfig& cfg, std::span<const Override> overrides) {
  if (overrides.empty()) return cfg;
  Json merged = to_json(cfg);
  for (const auto& [key, text] : overrides) {
    // Values are JSON literals; anything that does not parse is taken as a bare string.
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    Json* slot = &merged;
    std::string walked;
    std::size_t pos = 0;
    while (true) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
      const std::string parent = walked;
      walked += (walked.empty() ? "" : ".") + part;
      if (slot->is_array() && !part.empty() &&
          part.find_first_not_of("0123456789") == std::string::npos) {
        const auto index = std::stoul(part);
        if (index >= slot->size()) {
          throw ConfigError("override '" + key + "': index " + part + " out of range for " + parent);
        }
        slot = &(*slot)[index];
      } else if (slot->is_object() && slot->contains(part)) {
        slot = &(*slot)[part];
      } else {
        throw ConfigError("unknown config key '" + key + "'; valid keys: " + join_keys(merged, ""));
      }
      if (dot == std::string::npos) break;
      pos = dot + 1;
    }
    if (slot->is_object()) throw ConfigError("override '" + key + "' names a section, not a value");
    // A bare word such as 1e-3 parses as a number; a quoted JSON string also works.
    if (!compatible(*slot, value)) {
      throw ConfigError("config key '" + key + "' expects " + type_name(*slot) + ", got '" + text + "'");
    }
    if (slot->is_array()) {
      overlay_array(*slot, value, key, array_element_schema(key));
    } else {
      *slot = value;
    }
  }
  ExperimentConfig out = from_json(merged);
  out.validate();
  return out;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return config_from_json(text.str());
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (run + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace nlaid
