#include "avmig/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "avmig/errors.hpp"
#include "avmig/units.hpp"

namespace avmig {

namespace {

using nlohmann::json;

const std::map<std::string, double>& unit_table(Dimension dim) {
  static const std::map<Dimension, std::map<std::string, double>> tables = {
      {Dimension::kBits,
       {{"b", 1}, {"bit", 1}, {"bits", 1}, {"kb", 1e3}, {"Mb", 1e6}, {"Gb", 1e9},
        {"B", 8}, {"kB", 8e3}, {"MB", units::kMegabyte}, {"GB", 8e9}}},
      {Dimension::kRate,
       {{"bps", 1}, {"kbps", 1e3}, {"Mbps", units::kMbps}, {"Gbps", units::kGbps},
        {"MB/s", units::kMegabyte}, {"GB/s", 8e9}}},
      {Dimension::kFrequency,
       {{"Hz", 1}, {"kHz", 1e3}, {"MHz", units::kMHz}, {"GHz", units::kGHz},
        {"cycles/s", 1}, {"Gcycles/s", units::kGcycles}}},
      {Dimension::kCycles,
       {{"cycles", 1}, {"Mcycles", 1e6}, {"Gcycles", units::kGcycles}, {"Tcycles", 1e12}}},
      {Dimension::kCyclesPerBit,
       {{"cycles/bit", 1}, {"cycles/B", 1.0 / 8.0},
        {"Mcycles/MB", 1e6 / units::kMegabyte}, {"Gcycles/MB", units::kGcyclesPerMegabyte}}},
      {Dimension::kPower, {{"W", 1}, {"mW", 1e-3}}},
      {Dimension::kTime, {{"s", 1}, {"ms", 1e-3}, {"min", 60}}},
      {Dimension::kLength, {{"m", 1}, {"km", 1e3}}},
      {Dimension::kSpeed, {{"m/s", 1}, {"km/h", 1.0 / 3.6}}},
      {Dimension::kDimensionless, {}},
  };
  return tables.at(dim);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

double quantity_or(const json& obj, const char* key, Dimension dim, double fallback,
                   const std::string& where) {
  return obj.contains(key) ? parse_quantity(obj.at(key), dim, where + "." + key) : fallback;
}

Position point(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + ": expected [x, y]");
  return {parse_quantity(j[0], Dimension::kLength, what), parse_quantity(j[1], Dimension::kLength, what)};
}

MobilityMode parse_mode(const std::string& s) {
  if (s == "urban") return MobilityMode::kUrban;
  if (s == "remote") return MobilityMode::kRemote;
  throw ConfigError("unknown mobility mode '" + s + "'");
}

RouteEnd parse_end(const std::string& s) {
  if (s == "stop") return RouteEnd::kStop;
  if (s == "bounce") return RouteEnd::kBounce;
  if (s == "loop") return RouteEnd::kLoop;
  throw ConfigError("unknown route end '" + s + "'");
}

// Merges `over` on top of `base` (shallow).
json merged(const json& base, const json& over) {
  json out = base.is_object() ? base : json::object();
  for (auto it = over.begin(); it != over.end(); ++it) out[it.key()] = it.value();
  return out;
}

}  // namespace

double parse_quantity(const json& value, Dimension dim, const std::string& what) {
  if (value.is_number()) return value.get<double>();
  if (!value.is_string()) throw ConfigError(what + ": expected a number or a quantity string");
  const std::string s = value.get<std::string>();
  const char* begin = s.c_str();
  char* end = nullptr;
  const double x = std::strtod(begin, &end);
  if (end == begin || !std::isfinite(x)) throw ConfigError(what + ": cannot parse '" + s + "'");
  std::string unit(end);
  unit.erase(0, unit.find_first_not_of(' '));
  unit.erase(unit.find_last_not_of(' ') + 1);
  if (unit.empty()) return x;
  if (dim == Dimension::kPower && unit == "dBm") return std::pow(10.0, (x - 30.0) / 10.0);
  const auto& table = unit_table(dim);
  const auto it = table.find(unit);
  if (it == table.end()) throw ConfigError(what + ": unsupported unit '" + unit + "'");
  return x * it->second;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
  try {
    Scenario sc;
    WorldConfig& w = sc.world;
    const json map = doc.value("map", json::object());
    w.bounds.min_x = quantity_or(map, "min_x", Dimension::kLength, 0.0, "map");
    w.bounds.min_y = quantity_or(map, "min_y", Dimension::kLength, 0.0, "map");
    w.bounds.max_x = quantity_or(map, "max_x", Dimension::kLength, 1000.0, "map");
    w.bounds.max_y = quantity_or(map, "max_y", Dimension::kLength, 1000.0, "map");
    if (!(w.bounds.max_x > w.bounds.min_x && w.bounds.max_y > w.bounds.min_y)) {
      throw ConfigError("map bounds are empty");
    }
    w.slot_duration = quantity_or(doc, "slot_duration", Dimension::kTime, 1.0, "scenario");
    w.candidate_radius = quantity_or(doc, "candidate_radius", Dimension::kLength, 0.0, "scenario");
    w.t_dur_max = quantity_or(doc, "t_dur_max", Dimension::kTime, 60.0, "scenario");
    w.warmup_slots = get_or<int>(doc, "warmup_slots", 0);
    if (!(w.slot_duration > 0.0)) throw ConfigError("slot_duration must be positive");

    const json rsu_defaults = doc.value("rsu_defaults", json::object());
    if (!doc.contains("rsus") || doc.at("rsus").empty()) throw ConfigError("scenario lists no RSUs");
    std::vector<json> rsu_docs;
    for (const auto& r : doc.at("rsus")) rsu_docs.push_back(merged(rsu_defaults, r));
    for (const json& r : rsu_docs) {
      RsuSpec spec;
      spec.id = r.at("id").get<int>();
      const std::string where = "rsus[" + std::to_string(spec.id) + "]";
      spec.position = point(r.at("position"), where + ".position");
      spec.coverage_radius = parse_quantity(r.at("coverage_radius"), Dimension::kLength, where + ".coverage_radius");
      spec.uplink_bandwidth = parse_quantity(r.at("uplink_bandwidth"), Dimension::kFrequency, where + ".uplink_bandwidth");
      spec.downlink_bandwidth = parse_quantity(r.at("downlink_bandwidth"), Dimension::kFrequency, where + ".downlink_bandwidth");
      spec.gpu_capacity = parse_quantity(r.at("gpu_capacity"), Dimension::kFrequency, where + ".gpu_capacity");
      spec.max_workload = parse_quantity(r.at("max_workload"), Dimension::kCycles, where + ".max_workload");
      spec.cloud_uplink_bandwidth = parse_quantity(r.at("cloud_uplink_bandwidth"), Dimension::kRate, where + ".cloud_uplink_bandwidth");
      spec.noise_power = parse_quantity(r.at("noise_power"), Dimension::kPower, where + ".noise_power");
      if (!(spec.coverage_radius > 0 && spec.uplink_bandwidth > 0 && spec.downlink_bandwidth > 0 &&
            spec.gpu_capacity > 0 && spec.max_workload > 0 && spec.noise_power > 0)) {
        throw ConfigError(where + ": RSU parameters must be positive");
      }
      w.rsus.push_back(spec);
    }
    // Full symmetric mesh at the default bandwidth, then per-pair overrides.
    for (std::size_t a = 0; a < w.rsus.size(); ++a) {
      const json& r = rsu_docs[a];
      if (r.contains("migration_bandwidth")) {
        const double bw = parse_quantity(r.at("migration_bandwidth"), Dimension::kRate, "migration_bandwidth");
        for (std::size_t b = 0; b < w.rsus.size(); ++b) {
          if (a != b) w.rsus[a].migration_bandwidth_to[w.rsus[b].id] = bw;
        }
      }
    }
    for (std::size_t a = 0; a < w.rsus.size(); ++a) {
      const json& r = rsu_docs[a];
      if (!r.contains("migration_bandwidth_to")) continue;
      for (auto it = r.at("migration_bandwidth_to").begin(); it != r.at("migration_bandwidth_to").end(); ++it) {
        const int other = std::stoi(it.key());
        const double bw = parse_quantity(it.value(), Dimension::kRate, "migration_bandwidth_to");
        w.rsus[a].migration_bandwidth_to[other] = bw;
        for (auto& o : w.rsus) {
          if (o.id == other) o.migration_bandwidth_to[w.rsus[a].id] = bw;
        }
      }
    }

    const json veh_defaults = doc.value("vehicle_defaults", json::object());
    if (!doc.contains("vehicles") || doc.at("vehicles").empty()) throw ConfigError("scenario lists no vehicles");
    for (const auto& raw : doc.at("vehicles")) {
      const json v = merged(veh_defaults, raw);
      VehicleSpec spec;
      spec.id = v.at("id").get<int>();
      const std::string where = "vehicles[" + std::to_string(spec.id) + "]";
      spec.transmit_power = parse_quantity(v.at("transmit_power"), Dimension::kPower, where + ".transmit_power");
      spec.cycles_per_bit = parse_quantity(v.at("cycles_per_byte"), Dimension::kCyclesPerBit, where + ".cycles_per_byte");
      spec.mode = parse_mode(v.value("mode", "urban"));
      w.vehicles.push_back(spec);
      if (v.contains("route")) {
        const json& r = v.at("route");
        RouteConfig route;
        for (const auto& p : r.at("polyline")) route.polyline.push_back(point(p, where + ".route.polyline"));
        route.speed = parse_quantity(r.at("speed"), Dimension::kSpeed, where + ".route.speed");
        route.start_offset = quantity_or(r, "start_offset", Dimension::kLength, 0.0, where + ".route");
        route.start_jitter = quantity_or(r, "start_jitter", Dimension::kLength, 0.0, where + ".route");
        route.position_noise = quantity_or(r, "position_noise", Dimension::kLength, 0.0, where + ".route");
        route.end = parse_end(r.value("end", "stop"));
        sc.routes.push_back(route);
      }
    }

    const json mob = doc.value("mobility", json::object());
    sc.mobility_seed = get_or<std::uint64_t>(mob, "seed", 0);
    if (mob.contains("trace_csv")) {
      std::filesystem::path p = mob.at("trace_csv").get<std::string>();
      sc.trace_csv = p.is_relative() ? base_dir / p : p;
      const json ref = mob.value("reference", json::object());
      sc.geo.lat = get_or<double>(ref, "lat", 0.0);
      sc.geo.lon = get_or<double>(ref, "lon", 0.0);
    } else if (sc.routes.size() != w.vehicles.size()) {
      throw ConfigError("every vehicle needs a route when no trace_csv is given");
    }

    EnvConfig& e = sc.env;
    const json env = doc.value("env", json::object());
    e.horizon = get_or<int>(env, "horizon", e.horizon);
    e.start_offset_max = get_or<int>(env, "start_offset_max", 0);
    e.candidate_slots = get_or<int>(env, "candidate_slots", e.candidate_slots);
    e.t_clip = quantity_or(env, "t_clip", Dimension::kTime, e.t_clip, "env");
    e.result_compression = get_or<double>(env, "result_compression", 1.0);
    e.initial_workload_fraction = get_or<double>(env, "initial_workload_fraction", 0.0);
    if (env.contains("zeta")) e.zeta = parse_quantity(env.at("zeta"), Dimension::kCycles, "env.zeta");
    const json tasks = env.value("tasks", json::object());
    e.tasks.input_min = quantity_or(tasks, "input_min", Dimension::kBits, e.tasks.input_min, "env.tasks");
    e.tasks.input_max = quantity_or(tasks, "input_max", Dimension::kBits, e.tasks.input_max, "env.tasks");
    e.tasks.expansion_min = get_or<double>(tasks, "expansion_min", e.tasks.expansion_min);
    e.tasks.expansion_max = get_or<double>(tasks, "expansion_max", e.tasks.expansion_max);
    if (tasks.contains("fixed_task_size") && !tasks.at("fixed_task_size").is_null()) {
      e.tasks.fixed_task_size = parse_quantity(tasks.at("fixed_task_size"), Dimension::kBits, "env.tasks.fixed_task_size");
    }
    const json cloud = env.value("cloud", json::object());
    e.cloud.gpu_capacity = quantity_or(cloud, "gpu_capacity", Dimension::kFrequency, units::ghz(60), "env.cloud");
    e.cloud.vehicle_downlink_rate = quantity_or(cloud, "vehicle_downlink_rate", Dimension::kRate, units::mbps(100), "env.cloud");
    const json ch = env.value("channel", json::object());
    e.channel.gain_coefficient = get_or<double>(ch, "gain_coefficient", e.channel.gain_coefficient);
    e.channel.carrier_frequency = quantity_or(ch, "carrier_frequency", Dimension::kFrequency, e.channel.carrier_frequency, "env.channel");
    e.channel.min_distance = quantity_or(ch, "min_distance", Dimension::kLength, e.channel.min_distance, "env.channel");

    const json fc = doc.value("forecast", json::object());
    sc.forecast.hidden = get_or<int>(fc, "hidden", sc.forecast.hidden);
    sc.forecast.history = get_or<int>(fc, "history", sc.forecast.history);
    sc.forecast.horizon = get_or<int>(fc, "horizon", sc.forecast.horizon);
    sc.forecast.dropout = get_or<double>(fc, "dropout", sc.forecast.dropout);
    sc.forecast.epochs = get_or<int>(fc, "epochs", sc.forecast.epochs);
    sc.forecast.batch = get_or<int>(fc, "batch", sc.forecast.batch);
    sc.forecast.learning_rate = get_or<double>(fc, "learning_rate", sc.forecast.learning_rate);
    sc.forecast.seed = get_or<std::uint64_t>(fc, "seed", sc.forecast.seed);

    const json mp = doc.value("mappo", json::object());
    MappoConfig& m = sc.mappo;
    m.learning_rate = get_or<double>(mp, "learning_rate", m.learning_rate);
    m.gamma = get_or<double>(mp, "gamma", m.gamma);
    m.lambda = get_or<double>(mp, "lambda", m.lambda);
    m.clip = get_or<double>(mp, "clip", m.clip);
    m.entropy_coef = get_or<double>(mp, "entropy_coef", m.entropy_coef);
    m.epochs = get_or<int>(mp, "epochs", m.epochs);
    m.minibatch = get_or<int>(mp, "minibatch", m.minibatch);
    m.episodes = get_or<int>(mp, "episodes", m.episodes);
    m.episodes_per_round = get_or<int>(mp, "episodes_per_round", m.episodes_per_round);
    m.hidden = get_or<int>(mp, "hidden", m.hidden);
    m.buffer_capacity = get_or<std::size_t>(mp, "buffer_capacity", m.buffer_capacity);
    m.max_grad_norm = get_or<double>(mp, "max_grad_norm", m.max_grad_norm);
    if (mp.contains("reward_scale") && !mp.at("reward_scale").is_null()) {
      m.reward_scale = mp.at("reward_scale").get<double>();
    }
    m.shared_parameters = get_or<bool>(mp, "shared_parameters", false);
    m.counterfactual = get_or<bool>(mp, "counterfactual", false);

    sc.fraction_grid = doc.contains("fraction_grid") ? doc.at("fraction_grid").get<std::vector<double>>()
                                                     : std::vector<double>{0, .1, .2, .3, .4, .5, .6, .7, .8, .9, 1};
    sc.eval_episodes = doc.value("evaluation", json::object()).value("episodes", 10);
    if (sc.eval_episodes < 1) throw ConfigError("evaluation.episodes must be positive");
    return sc;
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("scenario: ") + ex.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

std::vector<MobilityTrace> build_traces(const Scenario& sc) {
  std::vector<MobilityTrace> out;
  if (sc.trace_csv) {
    std::ifstream in(*sc.trace_csv);
    if (!in) throw ConfigError("cannot open trace file " + sc.trace_csv->string());
    const auto all = load_traces(in, sc.geo);
    for (const auto& v : sc.world.vehicles) {
      auto it = std::find_if(all.begin(), all.end(), [&](const MobilityTrace& t) { return t.vehicle_id == v.id; });
      if (it == all.end()) throw ConfigError("trace file has no samples for vehicle " + std::to_string(v.id));
      out.push_back(*it);
    }
    return out;
  }
  for (std::size_t k = 0; k < sc.world.vehicles.size(); ++k) {
    RouteConfig r = sc.routes[k];
    r.slot_duration = sc.world.slot_duration;
    r.slots = sc.env.horizon + sc.env.start_offset_max + sc.world.warmup_slots + 1;
    out.push_back(synth_route(sc.world.vehicles[k].id, r, sc.mobility_seed * 1000003ULL + k));
  }
  return out;
}

namespace {

void apply_at(json& node, const std::vector<std::string>& parts, std::size_t k, const json& value,
              const std::string& path) {
  if (k == parts.size()) {
    node = value;
    return;
  }
  std::string key = parts[k];
  std::string index;
  const auto lb = key.find('[');
  if (lb != std::string::npos) {
    if (key.back() != ']') throw ConfigError("bad override path " + path);
    index = key.substr(lb + 1, key.size() - lb - 2);
    key = key.substr(0, lb);
  }
  json* target = &node;
  if (!key.empty()) {
    if (node.is_null()) node = json::object();
    if (!node.is_object()) throw ConfigError("override path " + path + " does not name an object");
    if (index.empty()) {
      apply_at(node[key], parts, k + 1, value, path);
      return;
    }
    if (!node.contains(key)) throw ConfigError("override path " + path + ": no key " + key);
    target = &node[key];
  }
  if (!target->is_array()) throw ConfigError("override path " + path + ": " + key + " is not an array");
  if (index == "*") {
    for (auto& el : *target) apply_at(el, parts, k + 1, value, path);
  } else {
    const auto i = static_cast<std::size_t>(std::stoul(index));
    if (i >= target->size()) throw ConfigError("override path " + path + ": index out of range");
    apply_at((*target)[i], parts, k + 1, value, path);
  }
}

}  // namespace

void apply_override(json& doc, const std::string& path, const json& value) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("bad override path " + path);
    parts.push_back(part);
  }
  if (parts.empty()) throw ConfigError("empty override path");
  apply_at(doc, parts, 0, value, path);
}

std::string fingerprint(const json& doc) {
  const std::string s = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace avmig
