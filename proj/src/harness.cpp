#include "avmig/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "avmig/errors.hpp"

namespace avmig {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json components_json(const ComponentMeans& c) {
  return {{"upload", c.upload}, {"processing", c.processing}, {"migration", c.migration},
          {"cloud", c.cloud}, {"download", c.download}};
}

std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "episode,mean_return,actor_loss_d,actor_loss_c,critic_loss_d,critic_loss_c,infeasibility_rate\n";
  for (const auto& p : curve) {
    os << p.episode << ',' << format_double(p.mean_return) << ',' << format_double(p.actor_loss_d) << ','
       << format_double(p.actor_loss_c) << ',' << format_double(p.critic_loss_d) << ','
       << format_double(p.critic_loss_c) << ',' << format_double(p.infeasibility_rate) << '\n';
  }
  return os.str();
}

// Parts of a scenario that determine the traces and the forecaster.
json mobility_key(const json& scenario) {
  json key = json::object();
  for (const char* k : {"map", "vehicles", "vehicle_defaults", "mobility", "forecast", "slot_duration",
                        "warmup_slots"}) {
    if (scenario.contains(k)) key[k] = scenario.at(k);
  }
  if (scenario.contains("env") && scenario.at("env").contains("horizon")) {
    key["horizon"] = scenario.at("env").at("horizon");
  }
  return key;
}

std::string sweep_text(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_double(v.get<double>());
  return v.dump();
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace

std::string policy_label(PolicyKind kind, bool prediction) {
  if (kind == PolicyKind::kHybridMappo) return prediction ? "hybrid-mappo+pred" : "hybrid-mappo-nopred";
  return to_string(kind);
}

json MetricsRecord::to_json() const {
  json j;
  j["fingerprint"] = fingerprint;
  j["base_fingerprint"] = base_fingerprint;
  j["policy"] = policy;
  j["prediction"] = prediction;
  j["seed"] = seed;
  j["sweep_value"] = sweep_value;
  j["mean_episode_reward"] = mean_episode_reward;
  j["mean_latency"] = mean_latency;
  j["components"] = components_json(components);
  j["infeasibility_rate"] = infeasibility_rate;
  j["max_load_ratio"] = max_load_ratio;
  j["eval_episodes"] = eval_episodes;
  if (!curve.empty()) {
    json c = json::array();
    for (const auto& p : curve) {
      c.push_back({p.episode, p.mean_return, p.actor_loss_d, p.actor_loss_c, p.critic_loss_d,
                   p.critic_loss_c, p.infeasibility_rate});
    }
    j["curve"] = c;
  }
  return j;
}

MetricsRecord MetricsRecord::from_json(const json& j) {
  try {
    MetricsRecord r;
    r.fingerprint = j.at("fingerprint").get<std::string>();
    r.base_fingerprint = j.at("base_fingerprint").get<std::string>();
    r.policy = j.at("policy").get<std::string>();
    r.prediction = j.at("prediction").get<bool>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.sweep_value = j.at("sweep_value");
    r.mean_episode_reward = j.at("mean_episode_reward").get<double>();
    r.mean_latency = j.at("mean_latency").get<double>();
    const json& c = j.at("components");
    r.components = {c.at("upload").get<double>(), c.at("processing").get<double>(),
                    c.at("migration").get<double>(), c.at("cloud").get<double>(),
                    c.at("download").get<double>()};
    r.infeasibility_rate = j.at("infeasibility_rate").get<double>();
    r.max_load_ratio = j.at("max_load_ratio").get<double>();
    r.eval_episodes = j.at("eval_episodes").get<int>();
    if (j.contains("curve")) {
      for (const auto& p : j.at("curve")) {
        r.curve.push_back({p.at(0).get<int>(), p.at(1).get<double>(), p.at(2).get<double>(),
                           p.at(3).get<double>(), p.at(4).get<double>(), p.at(5).get<double>(),
                           p.at(6).get<double>()});
      }
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("metrics record: ") + e.what());
  }
}

ExperimentConfig load_experiment(const fs::path& path) {
  const json doc = read_json(path);
  ExperimentConfig cfg;
  cfg.scenario_dir = path.parent_path();
  if (!doc.contains("scenario")) {
    cfg.scenario = doc;
    return cfg;
  }
  try {
    const json& s = doc.at("scenario");
    if (s.is_string()) {
      fs::path sp = s.get<std::string>();
      if (sp.is_relative()) sp = cfg.scenario_dir / sp;
      cfg.scenario = read_json(sp);
      cfg.scenario_dir = sp.parent_path();
    } else {
      cfg.scenario = s;
    }
    if (doc.contains("policy")) {
      const json& p = doc.at("policy");
      if (p.is_string()) {
        cfg.policies.push_back(parse_policy(p.get<std::string>()));
      } else {
        for (const auto& name : p) cfg.policies.push_back(parse_policy(name.get<std::string>()));
      }
    }
    if (doc.contains("prediction")) {
      const std::string pred = doc.at("prediction").get<std::string>();
      if (pred == "on") cfg.prediction = {true};
      else if (pred == "off") cfg.prediction = {false};
      else if (pred == "both") cfg.prediction = {true, false};
      else throw ConfigError("prediction must be on, off or both");
    }
    if (doc.contains("seeds")) cfg.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("sweep")) {
      Sweep sw;
      sw.path = doc.at("sweep").at("path").get<std::string>();
      for (const auto& v : doc.at("sweep").at("values")) sw.values.push_back(v);
      cfg.sweep = sw;
    }
    if (doc.contains("output_dir")) cfg.output_dir = doc.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cfg;
}

std::uint64_t eval_seed(std::uint64_t cell_seed, int k) {
  return mix(mix(cell_seed) + 0x1000ULL + static_cast<std::uint64_t>(k));
}

EpisodeStats run_episode(Environment& env, std::uint64_t seed, const JointPolicy& policy,
                         std::vector<json>* log) {
  std::vector<Eigen::VectorXd> obs = env.reset(seed);
  EpisodeStats st;
  std::size_t decisions = 0;
  std::size_t flagged = 0;
  double ret = 0.0;
  const auto rsus = env.world().rsus();
  auto load_ratio = [&](const Eigen::VectorXd& w) {
    for (std::size_t m = 0; m < rsus.size(); ++m) {
      st.max_load_ratio = std::max(st.max_load_ratio, w[m] / rsus[m].max_workload);
    }
  };
  load_ratio(env.state().rsu_workloads);
  while (!env.done()) {
    const int slot = env.slot();
    const StepResult r = env.step(policy(env, obs));
    for (std::size_t v = 0; v < r.rewards.size(); ++v) {
      const auto& b = r.breakdowns[v];
      ret += r.rewards[v];
      st.mean_latency += b.total;
      st.components.upload += b.upload;
      st.components.processing += std::max(b.local_processing, b.premigrated_processing);
      st.components.migration += b.migration;
      st.components.cloud += b.cloud;
      st.components.download += b.download;
      flagged += r.infeasible[v] ? 1 : 0;
      ++decisions;
    }
    load_ratio(r.arrival_workloads);
    load_ratio(env.state().rsu_workloads);
    if (log) {
      for (auto& rec : step_records(env, slot, r)) log->push_back(std::move(rec));
    }
    obs = r.observations;
  }
  const double n = static_cast<double>(std::max<std::size_t>(decisions, 1));
  st.mean_return = ret / static_cast<double>(env.num_agents());
  st.mean_latency /= n;
  st.components.upload /= n;
  st.components.processing /= n;
  st.components.migration /= n;
  st.components.cloud /= n;
  st.components.download /= n;
  st.infeasibility_rate = static_cast<double>(flagged) / n;
  return st;
}

std::shared_ptr<ForecastModel> train_scenario_forecaster(const Scenario& sc,
                                                         const std::vector<MobilityTrace>& traces) {
  const WindowSet set = window_dataset(traces, sc.forecast.history, sc.forecast.horizon);
  if (set.windows.empty()) throw ConfigError("traces are too short to train the forecaster");
  TrainResult tr = train_forecaster(set.windows, set.normalizer, sc.forecast);
  return std::make_shared<ForecastModel>(std::move(tr.model));
}

namespace {

struct CellContext {
  const ExperimentConfig& cfg;
  std::map<std::string, std::shared_ptr<ForecastModel>> forecasters;
};

MetricsRecord run_cell(CellContext& ctx, const json& scenario_doc, const std::string& base_fp,
                       const json& sweep_value, PolicyKind policy, bool prediction,
                       std::uint64_t seed, const fs::path& cell_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = parse_scenario(scenario_doc, ctx.cfg.scenario_dir);
  const auto traces = build_traces(sc);
  auto world = std::make_shared<const World>(sc.world, traces);

  std::shared_ptr<const PositionForecaster> forecaster;
  if (prediction) {
    const std::string key = fingerprint(mobility_key(scenario_doc));
    auto it = ctx.forecasters.find(key);
    if (it == ctx.forecasters.end()) {
      it = ctx.forecasters.emplace(key, train_scenario_forecaster(sc, traces)).first;
    }
    forecaster = std::make_shared<LstmForecaster>(it->second);
  }
  EnvConfig ec = sc.env;
  ec.prediction = prediction;
  ec.seed = seed;
  Environment env(world, ec, forecaster);

  MetricsRecord rec;
  rec.fingerprint = fingerprint(scenario_doc);
  rec.base_fingerprint = base_fp;
  rec.policy = policy_label(policy, prediction);
  rec.prediction = prediction;
  rec.seed = seed;
  rec.sweep_value = sweep_value;
  rec.eval_episodes = ctx.cfg.eval_episodes.value_or(sc.eval_episodes);

  std::optional<HybridMappo> mappo;
  if (policy == PolicyKind::kHybridMappo) {
    if (ctx.cfg.checkpoint) {
      std::ifstream in(*ctx.cfg.checkpoint);
      if (!in) throw ConfigError("cannot open checkpoint " + ctx.cfg.checkpoint->string());
      mappo.emplace(HybridMappo::load(in));
    } else {
      MappoConfig mc = sc.mappo;
      mc.seed = seed;
      mappo.emplace(static_cast<int>(env.num_agents()), env.obs_dim(), env.num_discrete(),
                    env.observation_scale(), mc);
      rec.curve = mappo->train(env);
      write_text(cell_dir / "curve.csv", curve_csv(rec.curve));
    }
    if (ctx.cfg.save_checkpoint) {
      std::ofstream out(cell_dir / "policy.json");
      mappo->save(out);
    }
  }

  std::mt19937_64 rng(mix(seed ^ 0xba5eULL));
  JointPolicy act;
  if (mappo) {
    act = [&](const Environment& e, const std::vector<Eigen::VectorXd>& obs) {
      std::vector<int> valid(e.num_agents());
      for (std::size_t v = 0; v < e.num_agents(); ++v) valid[v] = 1 + static_cast<int>(e.candidates(v).size());
      return mappo->act_deterministic(obs, valid);
    };
  } else {
    act = [&](const Environment& e, const std::vector<Eigen::VectorXd>&) {
      return baseline_actions(policy, e, rng, sc.fraction_grid);
    };
  }

  std::vector<json> log;
  std::vector<double> returns;
  for (int k = 0; k < rec.eval_episodes; ++k) {
    const EpisodeStats st = run_episode(env, eval_seed(seed, k), act, ctx.cfg.write_episode_log ? &log : nullptr);
    returns.push_back(st.mean_return);
    rec.mean_latency += st.mean_latency;
    rec.components.upload += st.components.upload;
    rec.components.processing += st.components.processing;
    rec.components.migration += st.components.migration;
    rec.components.cloud += st.components.cloud;
    rec.components.download += st.components.download;
    rec.infeasibility_rate += st.infeasibility_rate;
    rec.max_load_ratio = std::max(rec.max_load_ratio, st.max_load_ratio);
  }
  const double n = rec.eval_episodes;
  rec.mean_episode_reward = mean_of(returns);
  rec.mean_latency /= n;
  rec.components.upload /= n;
  rec.components.processing /= n;
  rec.components.migration /= n;
  rec.components.cloud /= n;
  rec.components.download /= n;
  rec.infeasibility_rate /= n;

  if (ctx.cfg.write_episode_log) {
    std::ostringstream os;
    for (const auto& l : log) os << l.dump() << '\n';
    write_text(cell_dir / "episodes.jsonl", os.str());
  }
  write_text(cell_dir / "metrics.json", rec.to_json().dump(2) + "\n");
  rec.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text(cell_dir / "timing.json", json{{"wall_clock_seconds", rec.wall_clock_seconds}}.dump() + "\n");
  return rec;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::ostringstream os;
  os << "policy,prediction,seed,sweep_value,mean_episode_reward,mean_latency,upload,processing,"
        "migration,cloud,download,infeasibility_rate,max_load_ratio,fingerprint\n";
  for (const auto& r : records) {
    os << r.policy << ',' << (r.prediction ? "on" : "off") << ',' << r.seed << ','
       << sweep_text(r.sweep_value) << ',' << format_double(r.mean_episode_reward) << ','
       << format_double(r.mean_latency) << ',' << format_double(r.components.upload) << ','
       << format_double(r.components.processing) << ',' << format_double(r.components.migration) << ','
       << format_double(r.components.cloud) << ',' << format_double(r.components.download) << ','
       << format_double(r.infeasibility_rate) << ',' << format_double(r.max_load_ratio) << ','
       << r.fingerprint << '\n';
  }
  return os.str();
}

}  // namespace

RunResult run(const ExperimentConfig& cfg) {
  if (cfg.policies.empty()) throw ConfigError("no policy selected");
  if (cfg.seeds.empty()) throw ConfigError("no seeds given");
  if (cfg.prediction.empty()) throw ConfigError("no prediction mode given");
  if (cfg.checkpoint && (cfg.policies.size() != 1 || cfg.policies[0] != PolicyKind::kHybridMappo)) {
    throw ConfigError("a checkpoint can only be evaluated with the hybrid-mappo policy");
  }
  std::vector<json> values{json()};
  if (cfg.sweep) {
    if (cfg.sweep->values.empty()) throw ConfigError("sweep has no values");
    values = cfg.sweep->values;
  }
  // Resolve and validate every scenario before doing any work.
  std::vector<json> docs;
  for (const auto& v : values) {
    json doc = cfg.scenario;
    if (cfg.sweep) apply_override(doc, cfg.sweep->path, v);
    const Scenario sc = parse_scenario(doc, cfg.scenario_dir);
    validate_grid(sc.fraction_grid);
    docs.push_back(std::move(doc));
  }
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  {
    const fs::path probe = cfg.output_dir / ".write-probe";
    std::ofstream out(probe);
    if (ec || !out) throw ConfigError("output directory " + cfg.output_dir.string() + " is not writable");
    out.close();
    fs::remove(probe, ec);
  }

  const std::string base_fp = fingerprint(cfg.scenario);
  CellContext ctx{cfg, {}};
  RunResult result;
  for (std::size_t x = 0; x < docs.size(); ++x) {
    for (PolicyKind policy : cfg.policies) {
      const std::vector<bool> modes =
          policy == PolicyKind::kHybridMappo ? cfg.prediction : std::vector<bool>{false};
      for (bool pred : modes) {
        for (std::uint64_t seed : cfg.seeds) {
          fs::path dir = cfg.output_dir / "cells" / policy_label(policy, pred) / ("seed-" + std::to_string(seed));
          if (cfg.sweep) dir /= "x-" + std::to_string(x);
          fs::create_directories(dir);
          try {
            result.records.push_back(run_cell(ctx, docs[x], base_fp, values[x], policy, pred, seed, dir));
          } catch (const std::exception& e) {
            result.failures.push_back(dir.string() + ": " + e.what());
          }
        }
      }
    }
  }
  std::ostringstream jl;
  for (const auto& r : result.records) jl << r.to_json().dump() << '\n';
  write_text(cfg.output_dir / "records.jsonl", jl.str());
  write_text(cfg.output_dir / "metrics.csv", metrics_csv(result.records));
  return result;
}

std::vector<MetricsRecord> load_records(const fs::path& dir) {
  std::ifstream in(dir / "records.jsonl");
  if (!in) throw ConfigError("no records.jsonl in " + dir.string());
  std::vector<MetricsRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(MetricsRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(e.what(), n);
    }
  }
  return out;
}

double improvement(double reward_a, double reward_b) {
  return (reward_a - reward_b) / std::abs(reward_b);
}

Comparison compare(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw ContractViolation("compare: no records");
  std::map<std::string, std::vector<double>> by_policy;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (r.fingerprint != records.front().fingerprint) {
      throw ContractViolation("compare: records come from different scenarios (" + r.fingerprint +
                              " vs " + records.front().fingerprint + ")");
    }
    if (!by_policy.count(r.policy)) order.push_back(r.policy);
    by_policy[r.policy].push_back(r.mean_episode_reward);
  }
  Comparison c;
  for (const auto& p : order) {
    const auto& xs = by_policy[p];
    c.ranking.push_back({p, mean_of(xs), sample_std(xs), static_cast<int>(xs.size())});
  }
  std::stable_sort(c.ranking.begin(), c.ranking.end(),
                   [](const RankingRow& a, const RankingRow& b) { return a.mean_reward > b.mean_reward; });
  for (const auto& a : c.ranking) {
    for (const auto& b : c.ranking) c.improvement[a.policy][b.policy] = improvement(a.mean_reward, b.mean_reward);
  }
  return c;
}

void write_comparison(const Comparison& c, const fs::path& dir) {
  fs::create_directories(dir);
  std::ostringstream rank;
  rank << "rank,policy,mean_reward,std_reward,seeds\n";
  int k = 1;
  for (const auto& r : c.ranking) {
    rank << k++ << ',' << r.policy << ',' << format_double(r.mean_reward) << ','
         << format_double(r.std_reward) << ',' << r.seeds << '\n';
  }
  write_text(dir / "ranking.csv", rank.str());
  std::ostringstream imp;
  imp << "policy";
  for (const auto& r : c.ranking) imp << ',' << r.policy;
  imp << '\n';
  for (const auto& a : c.ranking) {
    imp << a.policy;
    for (const auto& b : c.ranking) imp << ',' << format_double(c.improvement.at(a.policy).at(b.policy));
    imp << '\n';
  }
  write_text(dir / "improvement.csv", imp.str());
}

fs::path emit_plot_data(const std::vector<MetricsRecord>& records, const std::string& figure,
                        const fs::path& dir) {
  static const std::set<std::string> figures = {"reward-curve", "task-size", "wireless-bw",
                                                "migration-bw", "edge-compute", "cloud-compute"};
  if (!figures.count(figure)) throw ConfigError("unknown figure '" + figure + "'");
  std::vector<std::string> policies;
  for (const auto& r : records) {
    if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) policies.push_back(r.policy);
  }
  // (x label) -> policy -> per-seed values
  std::vector<std::string> xs;
  std::map<std::string, std::map<std::string, std::vector<double>>> cells;
  std::string x_name;
  if (figure == "reward-curve") {
    x_name = "episode";
    std::erase_if(policies, [&](const std::string& p) {
      return std::none_of(records.begin(), records.end(),
                          [&](const MetricsRecord& r) { return r.policy == p && !r.curve.empty(); });
    });
    for (const auto& r : records) {
      for (const auto& p : r.curve) {
        const std::string x = std::to_string(p.episode);
        if (!cells.count(x)) xs.push_back(x);
        cells[x][r.policy].push_back(p.mean_return);
      }
    }
    if (xs.empty()) throw ValidationError("no learning curves among the records");
  } else {
    x_name = "value";
    for (const auto& r : records) {
      if (r.sweep_value.is_null()) throw ValidationError("record " + r.policy + " is not part of a sweep");
      const std::string x = sweep_text(r.sweep_value);
      if (!cells.count(x)) xs.push_back(x);
      cells[x][r.policy].push_back(r.mean_latency);
    }
  }
  std::vector<std::string> missing;
  for (const auto& x : xs) {
    for (const auto& p : policies) {
      if (!cells[x].count(p)) missing.push_back("(" + p + ", " + x + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  std::ostringstream os;
  os << x_name;
  for (const auto& p : policies) os << ',' << p << ',' << p << "_std";
  os << '\n';
  for (const auto& x : xs) {
    os << x;
    for (const auto& p : policies) {
      const auto& v = cells[x][p];
      os << ',' << format_double(mean_of(v)) << ',' << format_double(sample_std(v));
    }
    os << '\n';
  }
  fs::create_directories(dir);
  const fs::path out = dir / (figure + ".csv");
  write_text(out, os.str());
  return out;
}

}  // namespace avmig
