// dsekit command-line tool: dataset generation, policy training, composed
// sampling, MMD-FK evaluation, compositional weight estimation and the
// canned experiment pipelines.

#include <CLI11.hpp>
#include <json.hpp>

#include "dsekit/experiments.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dsekit;

namespace {

// Exit codes: 0 ok, 2 usage / precondition, 3 data error, 4 numeric failure.
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Relative output paths land under $DSEKIT_OUT when it is set.
std::string resolve_out(const std::string& path) {
  if (path.empty()) return path;
  const char* root = std::getenv("DSEKIT_OUT");
  if (root == nullptr || *root == '\0' || fs::path(path).is_absolute()) {
    return path;
  }
  return (fs::path(root) / path).string();
}

json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json dse_result_to_json(const DseResult& result) {
  json j;
  j["weights"] = vector_to_json(result.weights.vec());
  j["objective"] = result.objective;
  j["corner_objectives"] = result.corner_objectives;
  if (std::isfinite(result.fewshot_objective)) {
    j["fewshot_objective"] = result.fewshot_objective;
  }
  j["best_base_corner"] = result.best_base_corner;
  if (result.vanilla_weights.size() > 0) {
    j["vanilla_objective"] = result.vanilla_objective;
    j["vanilla_weights"] = vector_to_json(result.vanilla_weights);
  }
  j["exhausted"] = result.exhausted;
  j["restarts"] = json::array();
  for (const RestartTrace& trace : result.restarts) {
    json t;
    t["initial_weights"] = vector_to_json(trace.initial_weights);
    t["best_weights"] = vector_to_json(trace.best_weights);
    t["best_objective"] = trace.best_objective;
    t["converged"] = trace.converged;
    t["evaluations"] = json::array();
    for (const auto& [w, f] : trace.evaluations) {
      t["evaluations"].push_back({{"weights", vector_to_json(w)}, {"objective", f}});
    }
    j["restarts"].push_back(std::move(t));
  }
  return j;
}

struct SkillFlags {
  std::string skill;
  double amplitude = 0.3;
  double speed = 0.25;
  double turns = 0.0;  // 0 = kind default
  int axis = 0;
  double jitter = 0.15;
  std::vector<double> dir_a, dir_b;

  SkillSpec to_spec() const {
    SkillSpec s;
    s.kind = skill_kind_from_name(skill);
    s.amplitude = amplitude;
    s.speed = speed;
    s.turns = turns > 0.0 ? turns : (s.kind == SkillKind::Spring ? 3.0 : 1.0);
    s.axis = axis;
    s.start_jitter = jitter;
    if (!dir_a.empty()) {
      if (dir_a.size() != 3) throw ContractViolation("--dir-a needs 3 numbers");
      s.dir_a = Vector3d(dir_a[0], dir_a[1], dir_a[2]);
    }
    if (!dir_b.empty()) {
      if (dir_b.size() != 3) throw ContractViolation("--dir-b needs 3 numbers");
      s.dir_b = Vector3d(dir_b[0], dir_b[1], dir_b[2]);
    }
    s.validate();
    return s;
  }
};

TrainConfig train_config_from(int epochs, int batch, double lr,
                              const std::string& optimizer,
                              const std::string& weighting,
                              std::uint64_t seed) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = batch;
  c.learning_rate = lr;
  c.seed = seed;
  if (optimizer == "adam") {
    c.optimizer = OptimizerKind::Adam;
  } else if (optimizer == "sgd") {
    c.optimizer = OptimizerKind::SgdMomentum;
  } else {
    throw ContractViolation("unknown optimizer: " + optimizer);
  }
  if (weighting == "uniform") {
    c.weighting = LossWeighting::Uniform;
  } else if (weighting == "snr") {
    c.weighting = LossWeighting::ScheduleSnr;
  } else {
    throw ContractViolation("unknown loss weighting: " + weighting);
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dsekit: diffusion-policy score composition toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 0;
  std::string chain_path;
  app.add_option("--seed", seed, "root seed; all randomness derives from it");
  app.add_option("--chain", chain_path, "kinematic chain config (JSON)");

  // ---- gen-data -----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "generate a skill dataset");
  SkillFlags gen_skill;
  int gen_count = 100, gen_len = 16;
  double gen_dt = 0.1;
  std::string gen_out;
  gen->add_option("--skill", gen_skill.skill, "skill name (line-x, circle-y, spiral, ...)")
      ->required();
  gen->add_option("--count", gen_count, "number of demos");
  gen->add_option("--length", gen_len, "trajectory length L");
  gen->add_option("--dt", gen_dt, "seconds per step");
  gen->add_option("--amplitude", gen_skill.amplitude, "skill amplitude / radius");
  gen->add_option("--speed", gen_skill.speed, "skill speed");
  gen->add_option("--turns", gen_skill.turns, "revolutions (spiral/spring)");
  gen->add_option("--axis", gen_skill.axis, "axis index 0..2");
  gen->add_option("--jitter", gen_skill.jitter, "start-configuration jitter [rad]");
  gen->add_option("--dir-a", gen_skill.dir_a, "mm-line direction A (3 numbers)")->expected(3);
  gen->add_option("--dir-b", gen_skill.dir_b, "mm-line direction B (3 numbers)")->expected(3);
  gen->add_option("--out", gen_out, "output dataset (JSON Lines)")->required();

  // ---- train --------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train a denoiser on a dataset");
  std::string train_data, train_out, train_label;
  std::vector<std::string> train_norm_data;
  int train_epochs = 400, train_batch = 32, train_T = 100;
  double train_lr = 1e-3, beta_start = 1e-4, beta_end = 0.2;
  std::string train_optimizer = "adam", train_weighting = "uniform";
  train->add_option("--data", train_data, "training dataset (JSON Lines)")->required();
  train->add_option("--out", train_out, "output model file")->required();
  train->add_option("--label", train_label, "model label");
  train->add_option("--epochs", train_epochs, "training epochs");
  train->add_option("--batch", train_batch, "batch size");
  train->add_option("--lr", train_lr, "learning rate");
  train->add_option("--optimizer", train_optimizer, "adam | sgd");
  train->add_option("--weighting", train_weighting, "uniform | snr");
  train->add_option("--steps", train_T, "diffusion steps T");
  train->add_option("--beta-start", beta_start, "linear schedule start");
  train->add_option("--beta-end", beta_end, "linear schedule end");
  train->add_option("--norm-data", train_norm_data,
                    "datasets defining the shared normalizer; pass the same "
                    "list to every policy that will be composed");

  // ---- sample / compose-sample -------------------------------------------
  auto* sample_cmd = app.add_subcommand("sample", "sample trajectories from a model or weighted ensemble");
  auto* compose_cmd = app.add_subcommand("compose-sample", "sample from a weighted score composition");
  struct SampleFlags {
    std::vector<std::string> models;
    std::string ensemble;
    std::string weights_csv;
    std::vector<double> obs;
    std::string obs_from;
    int count = 1;
    int steps = 0;
    std::string out;
  } sample_flags, compose_flags;
  for (auto [cmd, flags] : {std::pair{sample_cmd, &sample_flags},
                            std::pair{compose_cmd, &compose_flags}}) {
    cmd->add_option("--model", flags->models, "model file (repeatable)");
    cmd->add_option("--ensemble", flags->ensemble, "ensemble manifest (JSON)");
    cmd->add_option("--weights", flags->weights_csv, "comma-separated weights");
    cmd->add_option("--obs", flags->obs, "conditioning configuration (joint angles)");
    cmd->add_option("--obs-from", flags->obs_from, "dataset supplying observations round-robin");
    cmd->add_option("--count", flags->count, "number of samples");
    cmd->add_option("--steps", flags->steps, "reverse steps (0 = full schedule)");
    cmd->add_option("--out", flags->out, "output dataset file")->required();
  }

  // ---- mmdfk ----------------------------------------------------------------
  auto* mmd = app.add_subcommand("mmdfk", "MMD-FK between two trajectory datasets");
  std::string mmd_x, mmd_y;
  double mmd_gamma = 0.0;
  bool mmd_pooled = false;
  std::string mmd_link_weights;
  mmd->add_option("x", mmd_x, "first dataset")->required();
  mmd->add_option("y", mmd_y, "second dataset (same file = split halves)")->required();
  mmd->add_option("--gamma", mmd_gamma, "kernel width (0 = median heuristic)");
  mmd->add_flag("--pooled", mmd_pooled, "pool per-step configurations instead of averaging over timesteps");
  mmd->add_option("--link-weights", mmd_link_weights, "comma-separated control-point weights");

  // ---- dse / vanilla --------------------------------------------------------
  auto* dse_cmd = app.add_subcommand("dse", "estimate compositional weights from demos");
  auto* vanilla_cmd = app.add_subcommand("vanilla", "base-only compositional baseline");
  struct OptFlags {
    std::vector<std::string> models;
    std::string ensemble;
    std::string demos;
    double gamma = 0.0;
    int opt_iter = 60, num_samples = 0, restarts = 4, steps = 0;
    double tolerance = 1e-3;
    int epochs = 400, batch = 32;
    double lr = 1e-3;
    std::string optimizer = "adam";
    bool no_vanilla = false;
    std::string out, out_model;
  } dse_flags, vanilla_flags;
  for (auto [cmd, flags] : {std::pair{dse_cmd, &dse_flags},
                            std::pair{vanilla_cmd, &vanilla_flags}}) {
    cmd->add_option("--model", flags->models, "base-policy model file (repeatable)");
    cmd->add_option("--ensemble", flags->ensemble, "base-policy manifest");
    cmd->add_option("--demos", flags->demos, "demonstration dataset")->required();
    cmd->add_option("--gamma", flags->gamma, "kernel width (0 = median heuristic on demos)");
    cmd->add_option("--opt-iter", flags->opt_iter, "objective evaluations per restart");
    cmd->add_option("--num-samples", flags->num_samples, "composed samples per evaluation (0 = auto)");
    cmd->add_option("--restarts", flags->restarts, "optimizer restarts");
    cmd->add_option("--steps", flags->steps, "reverse steps per sample (0 = full)");
    cmd->add_option("--tolerance", flags->tolerance, "convergence tolerance");
    cmd->add_option("--out", flags->out, "write the result JSON here too");
  }
  dse_cmd->add_option("--epochs", dse_flags.epochs, "few-shot training epochs");
  dse_cmd->add_option("--batch", dse_flags.batch, "few-shot batch size");
  dse_cmd->add_option("--lr", dse_flags.lr, "few-shot learning rate");
  dse_cmd->add_option("--optimizer", dse_flags.optimizer, "few-shot optimizer (adam | sgd)");
  dse_cmd->add_flag("--no-vanilla", dse_flags.no_vanilla, "skip the base-only baseline");
  dse_cmd->add_option("--out-model", dse_flags.out_model, "save the trained few-shot model");

  // ---- experiment / toy2d ---------------------------------------------------
  auto* exp_cmd = app.add_subcommand("experiment", "run a full experiment spec");
  std::string exp_spec_path, exp_out_override;
  exp_cmd->add_option("spec", exp_spec_path, "experiment spec (JSON)")->required();
  exp_cmd->add_option("--out", exp_out_override, "override output directory");

  auto* toy_cmd = app.add_subcommand("toy2d", "two-Gaussian composition sweep");
  std::string toy_out = "toy2d";
  int toy_samples = 200, toy_train_count = 400, toy_epochs = 300;
  toy_cmd->add_option("--out", toy_out, "output directory");
  toy_cmd->add_option("--samples", toy_samples, "samples per weight setting");
  toy_cmd->add_option("--train-count", toy_train_count, "training points per Gaussian");
  toy_cmd->add_option("--epochs", toy_epochs, "training epochs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      if (chain_path.empty()) throw ContractViolation("gen-data needs --chain");
      const KinematicChain chain = load_chain(chain_path);
      const DemoSet set = generate_skill_dataset(
          chain, gen_skill.to_spec(), gen_count, gen_len, gen_dt, seed);
      const std::string out = resolve_out(gen_out);
      save_dataset(set, out);
      json j{{"file", out},
             {"count", set.size()},
             {"length", set.length()},
             {"dof", set.dof()}};
      std::cout << j.dump() << "\n";
    }

    if (train->parsed()) {
      const DemoSet data = load_dataset(train_data);
      const NoiseSchedule schedule =
          NoiseSchedule::linear(train_T, beta_start, beta_end);
      const TrainConfig cfg =
          train_config_from(train_epochs, train_batch, train_lr,
                            train_optimizer, train_weighting, seed);

      std::optional<Normalizer> traj_norm, obs_norm;
      if (!train_norm_data.empty()) {
        // Normalizer fitted over exactly the listed datasets, in the given
        // order. Pass the identical list when training every policy that
        // will be composed so their normalizers match bit for bit.
        std::vector<DemoSet> sets;
        for (const std::string& p : train_norm_data) sets.push_back(load_dataset(p));
        int total = 0;
        for (const DemoSet& s : sets) total += s.size();
        MatrixXd pooled(sets.front().length() * sets.front().dof(), total);
        MatrixXd pooled_obs(sets.front().dof(), total);
        int col = 0;
        for (const DemoSet& s : sets) {
          for (const Demo& d : s.demos) {
            pooled.col(col) = d.traj.flatten();
            pooled_obs.col(col) = d.obs;
            ++col;
          }
        }
        traj_norm = Normalizer::fit(pooled);
        obs_norm = Normalizer::fit(pooled_obs);
      }

      const DenoiserModel model = train_denoiser(
          data, cfg, schedule, train_label,
          traj_norm ? &*traj_norm : nullptr, obs_norm ? &*obs_norm : nullptr);
      const std::string out = resolve_out(train_out);
      save_model(model, out);
      json j{{"file", out},
             {"params", model.parameter_count()},
             {"first_loss", model.meta.first_loss},
             {"final_loss", model.meta.final_loss}};
      std::cout << j.dump() << "\n";
    }

    for (auto [cmd, flags] : {std::pair{sample_cmd, &sample_flags},
                              std::pair{compose_cmd, &compose_flags}}) {
      if (!cmd->parsed()) continue;
      std::vector<std::shared_ptr<const DenoiserModel>> models;
      if (!flags->ensemble.empty()) {
        models = load_manifest(flags->ensemble);
      }
      for (const std::string& p : flags->models) {
        models.push_back(std::make_shared<DenoiserModel>(load_model(p)));
      }
      if (models.empty()) {
        throw ContractViolation("need --model or --ensemble");
      }
      if (cmd == compose_cmd && flags->weights_csv.empty()) {
        throw ContractViolation("compose-sample needs --weights");
      }
      if (flags->weights_csv.empty() && models.size() > 1) {
        throw ContractViolation("multiple models need --weights");
      }
      const CompositionWeights weights =
          flags->weights_csv.empty()
              ? CompositionWeights::one_hot(static_cast<int>(models.size()), 0)
              : parse_weights(flags->weights_csv);
      const PolicyEnsemble ensemble(models);

      std::vector<VectorXd> obs;
      if (!flags->obs_from.empty()) {
        const DemoSet src = load_dataset(flags->obs_from);
        for (int i = 0; i < flags->count; ++i) {
          obs.push_back(src.demos[static_cast<std::size_t>(i) %
                                  src.demos.size()]
                            .obs);
        }
      } else if (!flags->obs.empty()) {
        VectorXd o(static_cast<int>(flags->obs.size()));
        for (std::size_t i = 0; i < flags->obs.size(); ++i) {
          o(static_cast<int>(i)) = flags->obs[i];
        }
        obs.assign(static_cast<std::size_t>(flags->count), o);
      } else {
        throw ContractViolation("need --obs or --obs-from");
      }

      const std::vector<Trajectory> samples =
          composed_sample_batch(ensemble, weights, obs, seed, flags->steps);
      DemoSet out_set;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        out_set.demos.push_back(Demo{obs[i], samples[i]});
      }
      const std::string out = resolve_out(flags->out);
      save_dataset(out_set, out);
      json j{{"file", out}, {"count", static_cast<int>(samples.size())}};
      std::cout << j.dump() << "\n";
    }

    if (mmd->parsed()) {
      if (chain_path.empty()) throw ContractViolation("mmdfk needs --chain");
      KernelParams params;
      params.chain = std::make_shared<const KinematicChain>(load_chain(chain_path));
      params.mode = mmd_pooled ? TrajKernelMode::PooledConfigs
                               : TrajKernelMode::TimestepAveraged;
      if (!mmd_link_weights.empty()) {
        params.link_weights = parse_weights(mmd_link_weights).vec();
      }

      std::vector<Trajectory> xs, ys;
      if (mmd_x == mmd_y) {
        // self-comparison: split one dataset into halves
        const auto halves = load_dataset(mmd_x).split_halves();
        xs = halves.first.trajectories();
        ys = halves.second.trajectories();
      } else {
        xs = load_dataset(mmd_x).trajectories();
        ys = load_dataset(mmd_y).trajectories();
      }
      params.gamma = mmd_gamma > 0.0
                         ? mmd_gamma
                         : median_heuristic_gamma(params, xs, ys);
      const double value = mmd_fk(params, xs, ys);
      json j{{"mmd_fk", value},
             {"m", static_cast<int>(xs.size())},
             {"n", static_cast<int>(ys.size())},
             {"gamma", params.gamma},
             {"mode", mmd_pooled ? "pooled" : "timestep-averaged"}};
      std::cout << j.dump() << "\n";
    }

    for (auto [cmd, flags] : {std::pair{dse_cmd, &dse_flags},
                              std::pair{vanilla_cmd, &vanilla_flags}}) {
      if (!cmd->parsed()) continue;
      if (chain_path.empty()) throw ContractViolation("needs --chain");
      std::vector<std::shared_ptr<const DenoiserModel>> bases;
      if (!flags->ensemble.empty()) bases = load_manifest(flags->ensemble);
      for (const std::string& p : flags->models) {
        bases.push_back(std::make_shared<DenoiserModel>(load_model(p)));
      }
      if (bases.empty()) throw ContractViolation("need --model or --ensemble");
      const DemoSet demos = load_dataset(flags->demos);

      KernelParams params;
      params.chain = std::make_shared<const KinematicChain>(load_chain(chain_path));
      params.gamma = flags->gamma;  // <= 0 requests the median heuristic

      DseConfig cfg;
      cfg.opt_iter = flags->opt_iter;
      cfg.num_samples = flags->num_samples;
      cfg.restarts = flags->restarts;
      cfg.sampler_steps = flags->steps;
      cfg.tolerance = flags->tolerance;
      cfg.seed = seed;
      cfg.fewshot_train = train_config_from(flags->epochs, flags->batch,
                                            flags->lr, flags->optimizer,
                                            "uniform", substream(seed, "fewshot"));
      cfg.vanilla_baseline = !flags->no_vanilla;

      const DseResult result =
          cmd == dse_cmd ? optimize_weights(bases, demos, params, cfg)
                         : vanilla_composition_baseline(bases, demos, params, cfg);
      json j = dse_result_to_json(result);
      if (cmd == dse_cmd && !dse_flags.out_model.empty() && result.fewshot_model) {
        const std::string mp = resolve_out(dse_flags.out_model);
        save_model(*result.fewshot_model, mp);
        j["fewshot_model_file"] = mp;
      }
      if (!flags->out.empty()) {
        const std::string rp = resolve_out(flags->out);
        std::ofstream out(rp);
        if (!out) throw DataError("cannot write " + rp);
        out << j.dump(2) << "\n";
        j["file"] = rp;
      }
      std::cout << j.dump() << "\n";
    }

    if (exp_cmd->parsed()) {
      ExperimentSpec spec = ExperimentSpec::from_json_file(exp_spec_path);
      spec.out_dir = resolve_out(exp_out_override.empty() ? spec.out_dir
                                                          : exp_out_override);
      if (seed != 0) spec.seed = seed;
      const std::vector<ExperimentRow> rows = run_experiment(spec);
      json j;
      j["csv"] = spec.out_dir + "/" + spec.name + "_results.csv";
      j["rows"] = json::array();
      for (const ExperimentRow& r : rows) {
        j["rows"].push_back({{"task", r.task},
                             {"demos", r.demos},
                             {"vanilla", r.vanilla},
                             {"fine_tuned", r.fine_tuned},
                             {"dse", r.dse}});
      }
      std::cout << j.dump() << "\n";
    }

    if (toy_cmd->parsed()) {
      Toy2dConfig cfg;
      cfg.sample_count = toy_samples;
      cfg.train_count = toy_train_count;
      cfg.train.epochs = toy_epochs;
      const Toy2dResult result = run_toy2d(resolve_out(toy_out), seed, cfg);
      json j;
      j["weights"] = result.weight_grid;
      j["mean_diag_projection"] = result.mean_diag_projection;
      j["mean_at_full_weight"] = {result.mean_at_full_weight.x(),
                                  result.mean_at_full_weight.y()};
      j["files"] = result.files;
      std::cout << j.dump() << "\n";
    }
  } catch (const ContractViolation& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
