// Command-line front end: demo generation, subsampling, offline reward
// annotation, exact Wasserstein evaluation, imitation training, and the
// greedy-bound audit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pwil/pwil.hpp"

namespace {

using namespace pwil;

RunConfig load_run_config(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return RunConfig::from_config(KeyValueConfig::parse_file(path));
}

EnvSpec load_env_spec(const std::string& path) {
  if (path.empty()) throw std::runtime_error("this command needs --config with an env section");
  return EnvSpec::from_config(KeyValueConfig::parse_file(path));
}

struct MetricOverrides {
  std::string variant;
  std::string metric;
  std::string normalizer;
  std::optional<double> alpha, beta;
  std::string embeddings;

  void apply(RunConfig& cfg) const {
    if (!variant.empty()) cfg.variant = parse_variant(variant);
    if (!metric.empty()) cfg.metric_kind = parse_metric_kind(metric);
    if (!normalizer.empty()) cfg.normalizer = parse_normalizer_kind(normalizer);
    if (alpha) cfg.alpha = *alpha;
    if (beta) cfg.beta = *beta;
    if (!embeddings.empty()) cfg.embeddings_path = embeddings;
    cfg.validate();
  }
};

void add_metric_flags(CLI::App* cmd, MetricOverrides& ov) {
  cmd->add_option("--variant", ov.variant, "full|state|support|nofill|l2 (comma-separable)");
  cmd->add_option("--metric", ov.metric, "standardized|l2|state|embedding");
  cmd->add_option("--normalizer", ov.normalizer, "dim|horizon");
  cmd->add_option("--alpha", ov.alpha, "reward scale");
  cmd->add_option("--beta", ov.beta, "reward decay");
  cmd->add_option("--embeddings", ov.embeddings, "embedding sidecar JSONL");
}

MetricSpec metric_for(const RunConfig& cfg, const std::vector<Trajectory>& reference) {
  std::shared_ptr<const EmbeddingTable> table;
  if (cfg.metric_kind == MetricKind::PrecomputedEmbedding) {
    if (cfg.embeddings_path.empty()) {
      throw std::runtime_error("embedding metric needs --embeddings or config key");
    }
    table = read_embeddings_file(cfg.embeddings_path);
  }
  return resolve_metric(cfg, reference, table);
}

int point_dims(const std::vector<Trajectory>& trajs, int& state_dim, int& action_dim) {
  const Point& p = trajs.at(0).points.at(0);
  state_dim = static_cast<int>(p.state.size());
  action_dim = p.action ? static_cast<int>(p.action->size()) : 0;
  return state_dim + action_dim;
}

int cmd_demo_gen(const std::string& config_path, int n, std::uint64_t seed,
                 const std::string& out) {
  EnvSpec spec = load_env_spec(config_path);
  std::mt19937_64 rng(seed);
  auto demos = generate_demos(spec, scripted_expert(spec), n, rng);
  write_trajectories_file(out, demos);
  std::cerr << "wrote " << demos.size() << " episodes to " << out << "\n";
  return 0;
}

int cmd_subsample(const std::string& in, int rate, std::uint64_t seed,
                  const std::string& out) {
  auto demos = read_trajectories_file(in);
  std::mt19937_64 rng(seed);
  write_trajectories_file(out, subsample(demos, rate, rng));
  return 0;
}

int cmd_reward(const std::string& demos_path, const std::string& traj_path,
               const std::string& config_path, const std::string& out_path,
               const MetricOverrides& ov, int horizon_flag) {
  RunConfig cfg = load_run_config(config_path);
  ov.apply(cfg);

  int horizon = horizon_flag;
  if (horizon == 0 && !config_path.empty()) {
    auto kv = KeyValueConfig::parse_file(config_path);
    horizon = kv.get_int("horizon", 0);
  }

  auto demos = read_trajectories_file(demos_path);
  std::mt19937_64 rng(cfg.seed);
  auto demos_sub = subsample(demos, cfg.subsample_rate, rng);
  MetricSpec metric = metric_for(cfg, demos_sub);
  EmpiricalMeasure measure = measure_from_demos(demos_sub);

  auto trajs = read_trajectories_file(traj_path, horizon);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);

  for (const auto& traj : trajs) {
    int T = horizon > 0 ? horizon : traj.length();
    if (traj.length() > T) {
      std::cerr << "episode " << traj.episode_id << " longer than horizon " << T << "\n";
      return 1;
    }
    int sdim = 0, adim = 0;
    point_dims(trajs, sdim, adim);
    int dim = metric_dimension(metric, sdim, adim);
    RewardParams params = cfg.normalizer == NormalizerKind::DimScaled
                              ? RewardParams::dim_scaled(cfg.alpha, cfg.beta, T, dim)
                              : RewardParams::horizon_only(cfg.alpha, cfg.beta, T);
    Rewarder rew(measure, T, metric, params, /*log_coupling=*/false);
    KahanSum total;
    for (const auto& p : traj.points) {
      StepResult sr;
      try {
        sr = cfg.variant.support ? rew.step_support(p) : rew.step(p);
      } catch (const std::runtime_error& e) {
        std::cerr << "episode " << traj.episode_id << " timestep " << p.t << ": "
                  << e.what() << "\n";
        return 1;
      }
      total.add(sr.cost);
      nlohmann::json line = point_to_json(p);
      line["c"] = sr.cost;
      line["r"] = sr.reward;
      out << line.dump() << '\n';
    }
    nlohmann::json totals;
    totals["episode"] = traj.episode_id;
    totals["c_total"] = total.value();
    out << totals.dump() << '\n';
  }
  return 0;
}

int cmd_wdist(const std::string& a_path, const std::string& b_path,
              const std::string& config_path, const MetricOverrides& ov,
              const std::string& coupling_out) {
  RunConfig cfg = load_run_config(config_path);
  ov.apply(cfg);

  auto a = read_trajectories_file(a_path);
  auto b = read_trajectories_file(b_path);
  // the second file is the reference side: standardizers fit on it
  MetricSpec metric = metric_for(cfg, b);

  EmpiricalMeasure mu = measure_from_demos(a);
  EmpiricalMeasure nu = measure_from_demos(b);
  W1Result res = solve_w1(mu, nu, metric);

  auto check = validate_coupling(res.coupling, mu.size(), nu.size());
  if (!check.pass()) {
    std::cerr << "optimal coupling failed feasibility check\n";
    return 2;
  }
  if (!coupling_out.empty()) {
    std::ofstream cout_file(coupling_out);
    if (!cout_file) throw std::runtime_error("cannot write " + coupling_out);
    write_coupling_csv(cout_file, res.coupling);
  }
  nlohmann::json j;
  j["w1"] = res.value;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& demos_path,
              const std::string& out_path, const MetricOverrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  ov.apply(cfg);
  EnvSpec spec = load_env_spec(config_path);
  auto kv = KeyValueConfig::parse_file(config_path);

  std::vector<Trajectory> demos;
  if (!demos_path.empty()) {
    demos = read_trajectories_file(demos_path, spec.horizon);
  } else {
    int n_demos = kv.get_int("n_demos", 1);
    std::mt19937_64 rng(cfg.seed);
    demos = generate_demos(spec, scripted_expert(spec), n_demos, rng);
  }

  for (int s = 0; s < cfg.num_seeds; ++s) {
    RunConfig seed_cfg = cfg;
    seed_cfg.seed = cfg.seed + static_cast<std::uint64_t>(s);
    RunReport report = run_imitation(seed_cfg, spec, demos);

    std::string path = out_path;
    if (cfg.num_seeds > 1) {
      auto dot = path.rfind('.');
      std::string suffix = ".seed" + std::to_string(s);
      path = dot == std::string::npos ? path + suffix
                                      : path.substr(0, dot) + suffix + path.substr(dot);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    report.write_csv(out);
    std::cerr << "seed " << seed_cfg.seed << ": final_return=" << report.final_return()
              << " w1 " << report.initial_w1() << " -> " << report.final_w1() << " ("
              << path << ")\n";
  }
  return 0;
}

int cmd_bound_check(int instances, int max_dim, int max_t, int max_d,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BoundReport rep = validate_bound(instances, max_dim, max_t, max_d, rng);
  std::cout << "instances: " << rep.instances << "\n"
            << "violations: " << rep.violations << "\n"
            << "coupling_failures: " << rep.coupling_failures << "\n"
            << "mean_gap: " << rep.mean_gap << "\n"
            << "mean_rel_gap: " << rep.mean_rel_gap << "\n"
            << "max_rel_gap: " << rep.max_rel_gap << "\n";
  return rep.pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein imitation toolkit"};
  app.require_subcommand(1);

  // demo-gen
  auto* demo_gen = app.add_subcommand("demo-gen", "roll scripted-expert demonstrations");
  std::string dg_config, dg_out;
  int dg_n = 1;
  std::uint64_t dg_seed = 0;
  demo_gen->add_option("--config", dg_config, "env config file")->required();
  demo_gen->add_option("--n", dg_n, "number of episodes");
  demo_gen->add_option("--seed", dg_seed, "rng seed");
  demo_gen->add_option("--out", dg_out, "output JSONL")->required();

  // subsample
  auto* sub = app.add_subcommand("subsample", "keep every rate-th point per episode");
  std::string sub_in, sub_out;
  int sub_rate = 20;
  std::uint64_t sub_seed = 0;
  sub->add_option("--in", sub_in, "input JSONL")->required();
  sub->add_option("--rate", sub_rate, "subsample rate");
  sub->add_option("--seed", sub_seed, "rng seed");
  sub->add_option("--out", sub_out, "output JSONL")->required();

  // reward
  auto* reward = app.add_subcommand("reward", "annotate a trajectory with costs and rewards");
  std::string rw_demos, rw_traj, rw_config, rw_out;
  int rw_horizon = 0;
  MetricOverrides rw_ov;
  reward->add_option("--demos", rw_demos, "demonstration JSONL")->required();
  reward->add_option("--traj", rw_traj, "trajectory JSONL")->required();
  reward->add_option("--config", rw_config, "run config file");
  reward->add_option("--out", rw_out, "annotated output JSONL")->required();
  reward->add_option("--horizon", rw_horizon, "nominal horizon (default: config or episode length)");
  add_metric_flags(reward, rw_ov);

  // wdist
  auto* wdist = app.add_subcommand("wdist", "exact W1 between two trajectory files");
  std::string wd_a, wd_b, wd_config, wd_coupling;
  MetricOverrides wd_ov;
  wdist->add_option("--a", wd_a, "first JSONL")->required();
  wdist->add_option("--b", wd_b, "second JSONL (reference for standardization)")->required();
  wdist->add_option("--config", wd_config, "run config file");
  wdist->add_option("--coupling-out", wd_coupling, "write the optimal coupling CSV here");
  add_metric_flags(wdist, wd_ov);

  // train
  auto* train = app.add_subcommand("train", "run the imitation loop, write report CSV");
  std::string tr_config, tr_demos, tr_out;
  MetricOverrides tr_ov;
  train->add_option("--config", tr_config, "run + env config file")->required();
  train->add_option("--demos", tr_demos, "demonstration JSONL (default: generate)");
  train->add_option("--out", tr_out, "report CSV path")->required();
  add_metric_flags(train, tr_ov);

  // bound-check
  auto* bound = app.add_subcommand("bound-check", "audit greedy >= exact on random instances");
  int bc_instances = 1000, bc_dim = 8, bc_t = 50, bc_d = 50;
  std::uint64_t bc_seed = 0;
  bound->add_option("--instances", bc_instances, "number of random instances");
  bound->add_option("--max-dim", bc_dim, "max point dimension");
  bound->add_option("--max-t", bc_t, "max trajectory length");
  bound->add_option("--max-d", bc_d, "max demo size");
  bound->add_option("--seed", bc_seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*demo_gen) return cmd_demo_gen(dg_config, dg_n, dg_seed, dg_out);
    if (*sub) return cmd_subsample(sub_in, sub_rate, sub_seed, sub_out);
    if (*reward) return cmd_reward(rw_demos, rw_traj, rw_config, rw_out, rw_ov, rw_horizon);
    if (*wdist) return cmd_wdist(wd_a, wd_b, wd_config, wd_ov, wd_coupling);
    if (*train) return cmd_train(tr_config, tr_demos, tr_out, tr_ov);
    if (*bound) return cmd_bound_check(bc_instances, bc_dim, bc_t, bc_d, bc_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
