// avmig: run, compare and export avatar pre-migration experiments.
//
//   avmig simulate   --config exp.json [--policy greedy] [--seed 1,2]
//   avmig train      --config exp.json [--prediction on|off|both]
//   avmig predict    --config scenario.json
//   avmig evaluate   --config exp.json --policy hybrid-mappo --checkpoint policy.json
//   avmig sweep      --config exp.json
//   avmig compare    --out <run dir>
//   avmig emit-plots --out <run dir> --figure task-size
//
// Output goes to --out, else the config's output_dir, else
// $AVMIG_OUTPUT_ROOT/<subcommand>, else ./runs/<subcommand>.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "avmig/errors.hpp"
#include "avmig/harness.hpp"

namespace fs = std::filesystem;
using namespace avmig;

namespace {

struct Options {
  std::string config;
  std::string seeds;
  std::string out;
  std::string prediction;
  std::vector<std::string> policies;
  std::string checkpoint;
  std::string figure;
  int episodes = 0;
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + item + "'");
    }
  }
  if (seeds.empty()) throw ConfigError("--seed needs at least one value");
  return seeds;
}

fs::path default_out(const std::string& sub) {
  const char* root = std::getenv("AVMIG_OUTPUT_ROOT");
  return fs::path(root && *root ? root : "runs") / sub;
}

ExperimentConfig experiment(const Options& o, const std::string& sub) {
  if (o.config.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = load_experiment(o.config);
  for (const auto& p : o.policies) {
    if (&p == &o.policies.front()) cfg.policies.clear();
    cfg.policies.push_back(parse_policy(p));
  }
  if (!o.seeds.empty()) cfg.seeds = parse_seeds(o.seeds);
  if (cfg.seeds.empty()) cfg.seeds = {0};
  if (!o.prediction.empty()) {
    if (o.prediction == "on") cfg.prediction = {true};
    else if (o.prediction == "off") cfg.prediction = {false};
    else if (o.prediction == "both") cfg.prediction = {true, false};
    else throw ConfigError("--prediction must be on, off or both");
  }
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (cfg.output_dir.empty()) cfg.output_dir = default_out(sub);
  if (o.episodes > 0) cfg.eval_episodes = o.episodes;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;
  return cfg;
}

int report(const RunResult& r, const fs::path& out) {
  for (const auto& rec : r.records) {
    std::cout << rec.policy << " seed=" << rec.seed;
    if (!rec.sweep_value.is_null()) std::cout << " x=" << rec.sweep_value.dump();
    std::cout << " reward=" << format_double(rec.mean_episode_reward)
              << " latency=" << format_double(rec.mean_latency) << '\n';
  }
  for (const auto& f : r.failures) std::cerr << "cell failed: " << f << '\n';
  std::cout << "wrote " << r.records.size() << " records to " << out.string() << '\n';
  return r.failures.empty() ? 0 : 1;
}

int cmd_run(const Options& o, const std::string& sub) {
  ExperimentConfig cfg = experiment(o, sub);
  if (sub == "simulate") {
    if (o.policies.empty() && cfg.policies.empty()) cfg.policies = {PolicyKind::kGreedy};
    cfg.write_episode_log = true;
  } else if (sub == "train") {
    cfg.policies = {PolicyKind::kHybridMappo};
    cfg.save_checkpoint = true;
  } else if (sub == "evaluate") {
    if (cfg.policies.empty()) cfg.policies = {PolicyKind::kHybridMappo};
  } else if (sub == "sweep") {
    if (!cfg.sweep) throw ConfigError("sweep needs a \"sweep\" entry in the experiment file");
  }
  if (cfg.policies.empty()) throw ConfigError("no policy selected (use --policy)");
  return report(run(cfg), cfg.output_dir);
}

int cmd_predict(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  const ExperimentConfig cfg = load_experiment(o.config);
  const Scenario sc = parse_scenario(cfg.scenario, cfg.scenario_dir);
  const fs::path out = !o.out.empty() ? fs::path(o.out)
                       : !cfg.output_dir.empty() ? cfg.output_dir : default_out("predict");
  fs::create_directories(out);

  const auto traces = build_traces(sc);
  const WindowSet set = window_dataset(traces, sc.forecast.history, sc.forecast.horizon);
  const WindowSplit split = split_windows(set.windows);
  if (split.train.empty() || split.test.size() < 1) throw ConfigError("traces too short for a train/test split");
  const TrainResult tr = train_forecaster(split.train, set.normalizer, sc.forecast);

  Eigen::MatrixXd targets(2, static_cast<Eigen::Index>(split.test.size()));
  for (std::size_t i = 0; i < split.test.size(); ++i) targets.col(static_cast<Eigen::Index>(i)) = split.test[i].target;
  const ForecastMetrics m = eval_metrics(tr.model.predict_batch(split.test), targets);

  {
    std::ofstream ck(out / "forecaster.json");
    tr.model.save(ck);
  }
  nlohmann::json mj{{"test_mse", m.mse}, {"test_mae", m.mae}, {"test_medae", m.medae},
                    {"test_r2", m.r2 ? nlohmann::json(*m.r2) : nlohmann::json()},
                    {"train_windows", split.train.size()}, {"test_windows", split.test.size()},
                    {"skipped_steps", tr.skipped_steps}, {"fingerprint", fingerprint(cfg.scenario)}};
  std::ofstream(out / "forecast_metrics.json") << mj.dump(2) << '\n';
  std::ofstream curve(out / "forecast_curve.csv");
  curve << "epoch,train_mse\n";
  for (std::size_t e = 0; e < tr.epoch_mse.size(); ++e) curve << e + 1 << ',' << format_double(tr.epoch_mse[e]) << '\n';
  std::cout << "test mse=" << format_double(m.mse) << " mae=" << format_double(m.mae)
            << " medae=" << format_double(m.medae) << '\n';
  return 0;
}

fs::path records_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (!o.config.empty()) {
    const ExperimentConfig cfg = load_experiment(o.config);
    if (!cfg.output_dir.empty()) return cfg.output_dir;
  }
  throw ConfigError("--out (a run directory) is required");
}

int cmd_compare(const Options& o) {
  const fs::path dir = records_dir(o);
  const Comparison c = compare(load_records(dir));
  write_comparison(c, dir);
  for (const auto& r : c.ranking) {
    std::cout << r.policy << " mean=" << format_double(r.mean_reward)
              << " std=" << format_double(r.std_reward) << " seeds=" << r.seeds << '\n';
  }
  const std::string& best = c.ranking.front().policy;
  for (const auto& r : c.ranking) {
    if (r.policy == best) continue;
    std::cout << best << " vs " << r.policy << ": " << format_double(100.0 * c.improvement.at(best).at(r.policy))
              << "%\n";
  }
  return 0;
}

int cmd_plots(const Options& o) {
  if (o.figure.empty()) throw ConfigError("--figure is required");
  const fs::path dir = records_dir(o);
  std::cout << "wrote " << emit_plot_data(load_records(dir), o.figure, dir / "plots").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Avatar task pre-migration simulator"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "Experiment or scenario JSON");
    s->add_option("--out", o.out, "Output directory");
  };
  auto add_run = [&](CLI::App* s) {
    add_common(s);
    s->add_option("--seed", o.seeds, "Comma-separated seeds");
    s->add_option("--prediction", o.prediction, "on|off|both");
    s->add_option("--policy", o.policies, "hybrid-mappo|greedy|random|fpm|npm|oracle")->delimiter(',');
    s->add_option("--episodes", o.episodes, "Evaluation episodes per cell");
  };

  for (const char* name : {"simulate", "train", "evaluate", "sweep"}) {
    auto* s = app.add_subcommand(name);
    add_run(s);
    if (std::string(name) == "evaluate") s->add_option("--checkpoint", o.checkpoint, "Trained policy");
  }
  add_common(app.add_subcommand("predict", "Train and score the trajectory forecaster"));
  add_common(app.add_subcommand("compare", "Rank policies of a run directory"));
  auto* plots = app.add_subcommand("emit-plots", "Write figure CSVs for a run directory");
  add_common(plots);
  plots->add_option("--figure", o.figure,
                    "reward-curve|task-size|wireless-bw|migration-bw|edge-compute|cloud-compute");

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (sub == "predict") return cmd_predict(o);
    if (sub == "compare") return cmd_compare(o);
    if (sub == "emit-plots") return cmd_plots(o);
    return cmd_run(o, sub);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
