#include "dsekit/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace dsekit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << text;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// SVG emission
// ---------------------------------------------------------------------------

void write_polyline_svg(const std::string& path,
                        const std::vector<std::vector<Eigen::Vector2d>>& gray,
                        const std::vector<std::vector<Eigen::Vector2d>>& color,
                        const std::string& title) {
  constexpr double W = 600, H = 450, margin = 40;
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (const auto* group : {&gray, &color}) {
    for (const auto& poly : *group) {
      for (const auto& p : poly) {
        lo_x = std::min(lo_x, p.x());
        hi_x = std::max(hi_x, p.x());
        lo_y = std::min(lo_y, p.y());
        hi_y = std::max(hi_y, p.y());
      }
    }
  }
  if (lo_x > hi_x) { lo_x = 0; hi_x = 1; lo_y = 0; hi_y = 1; }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});
  const double scale = (std::min(W, H) - 2 * margin) / span;
  const auto map_point = [&](const Eigen::Vector2d& p) {
    return Eigen::Vector2d(margin + (p.x() - lo_x) * scale,
                           H - margin - (p.y() - lo_y) * scale);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H
      << "\">\n";
  svg << "  <text x=\"" << margin << "\" y=\"24\" font-size=\"14\" "
      << "font-family=\"sans-serif\">" << title << "</text>\n";
  const auto emit_group = [&](const std::vector<std::vector<Eigen::Vector2d>>&
                                  polys,
                              const char* stroke) {
    for (const auto& poly : polys) {
      if (poly.size() < 2) continue;
      svg << "  <polyline fill=\"none\" stroke=\"" << stroke
          << "\" stroke-width=\"1.5\" points=\"";
      char buf[64];
      for (const auto& p : poly) {
        const Eigen::Vector2d m = map_point(p);
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", m.x(), m.y());
        svg << buf;
      }
      svg << "\"/>\n";
    }
  };
  emit_group(gray, "#999999");
  emit_group(color, "#d95f02");
  svg << "</svg>\n";
  write_text(path, svg.str());
}

// ---------------------------------------------------------------------------
// Toy 2D experiment
// ---------------------------------------------------------------------------

namespace {

// 2D points stored as 2-step 1-DoF trajectories with a fixed zero
// observation; the denoiser sees them as any other flattened trajectory.
DemoSet gaussian_point_dataset(const Eigen::Vector2d& mean, int count,
                               std::uint64_t seed) {
  DemoSet set;
  set.demos.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(substream(seed, "sample", static_cast<std::uint64_t>(i)));
    Demo d;
    d.obs = VectorXd::Zero(1);
    d.traj.dt = 1.0;
    d.traj.steps.resize(2, 1);
    d.traj.steps(0, 0) = mean.x() + rng.normal();
    d.traj.steps(1, 0) = mean.y() + rng.normal();
    set.demos.push_back(std::move(d));
  }
  return set;
}

}  // namespace

Toy2dResult run_toy2d(const std::string& out_dir, std::uint64_t seed,
                      const Toy2dConfig& config) {
  ensure_dir(out_dir);

  const DemoSet data_a =
      gaussian_point_dataset({5.0, 5.0}, config.train_count,
                             substream(seed, "data", 0));
  const DemoSet data_b =
      gaussian_point_dataset({-5.0, -5.0}, config.train_count,
                             substream(seed, "data", 1));

  // Shared normalizer over the union: composition needs one coordinate
  // system for both models.
  MatrixXd pooled(2, 2 * config.train_count);
  MatrixXd pooled_obs(1, 2 * config.train_count);
  for (int i = 0; i < config.train_count; ++i) {
    pooled.col(i) = data_a.demos[static_cast<std::size_t>(i)].traj.flatten();
    pooled.col(config.train_count + i) =
        data_b.demos[static_cast<std::size_t>(i)].traj.flatten();
    pooled_obs.col(i) = data_a.demos[static_cast<std::size_t>(i)].obs;
    pooled_obs.col(config.train_count + i) =
        data_b.demos[static_cast<std::size_t>(i)].obs;
  }
  const Normalizer traj_norm = Normalizer::fit(pooled);
  const Normalizer obs_norm = Normalizer::fit(pooled_obs);

  const NoiseSchedule schedule = NoiseSchedule::linear(config.schedule_steps);
  TrainConfig tc_a = config.train;
  tc_a.seed = substream(seed, "train", 0);
  TrainConfig tc_b = config.train;
  tc_b.seed = substream(seed, "train", 1);
  auto model_a = std::make_shared<DenoiserModel>(train_denoiser(
      data_a, tc_a, schedule, "gauss(5,5)", &traj_norm, &obs_norm));
  auto model_b = std::make_shared<DenoiserModel>(train_denoiser(
      data_b, tc_b, schedule, "gauss(-5,-5)", &traj_norm, &obs_norm));
  const PolicyEnsemble ensemble({model_a, model_b});

  const std::vector<VectorXd> obs(
      static_cast<std::size_t>(config.sample_count), VectorXd::Zero(1));

  Toy2dResult result;
  result.weight_grid = config.weight_grid;
  json summary;
  summary["weights"] = json::array();

  for (std::size_t g = 0; g < config.weight_grid.size(); ++g) {
    const double w1 = config.weight_grid[g];
    const CompositionWeights weights(
        (VectorXd(2) << w1, 1.0 - w1).finished());
    const std::vector<Trajectory> samples = composed_sample_batch(
        ensemble, weights, obs, substream(seed, "sample-grid", g));

    std::ostringstream csv;
    csv << "x,y\n";
    double proj_sum = 0.0;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    std::vector<std::vector<Eigen::Vector2d>> dots;
    for (const Trajectory& t : samples) {
      const double x = t.steps(0, 0), y = t.steps(1, 0);
      csv << format_double(x) << "," << format_double(y) << "\n";
      proj_sum += (x + y) / std::numbers::sqrt2;
      mean += Eigen::Vector2d(x, y);
      // tiny cross marks the sample in the scatter SVG
      dots.push_back({{x - 0.05, y}, {x + 0.05, y}});
      dots.push_back({{x, y - 0.05}, {x, y + 0.05}});
    }
    mean /= static_cast<double>(samples.size());
    const double proj = proj_sum / static_cast<double>(samples.size());
    result.mean_diag_projection.push_back(proj);
    if (w1 == 1.0) result.mean_at_full_weight = mean;

    const std::string tag = "w" + std::to_string(g);
    const std::string csv_path = out_dir + "/toy2d_" + tag + ".csv";
    write_text(csv_path, csv.str());
    result.files.push_back(csv_path);
    const std::string svg_path = out_dir + "/toy2d_" + tag + ".svg";
    write_polyline_svg(svg_path, {}, dots,
                       "200 composed samples, w1 = " + format_double(w1));
    result.files.push_back(svg_path);

    summary["weights"].push_back({{"w1", w1},
                                  {"mean_diag_projection", proj},
                                  {"mean_x", mean.x()},
                                  {"mean_y", mean.y()}});
  }
  summary["mean_at_full_weight"] = {result.mean_at_full_weight.x(),
                                    result.mean_at_full_weight.y()};
  const std::string summary_path = out_dir + "/toy2d_summary.json";
  write_text(summary_path, summary.dump(2) + "\n");
  result.files.push_back(summary_path);
  return result;
}

// ---------------------------------------------------------------------------
// Experiment spec JSON
// ---------------------------------------------------------------------------

namespace {

SkillSpec skill_from_json(const json& j) {
  SkillSpec s;
  s.kind = skill_kind_from_name(j.at("skill").get<std::string>());
  s.amplitude = j.value("amplitude", s.amplitude);
  s.speed = j.value("speed", s.speed);
  s.turns = j.value("turns", s.kind == SkillKind::Spring ? 3.0 : s.turns);
  s.axis = j.value("axis", s.axis);
  s.start_jitter = j.value("start_jitter", s.start_jitter);
  if (j.contains("dir_a")) {
    const auto& a = j.at("dir_a");
    s.dir_a = Vector3d(a.at(0).get<double>(), a.at(1).get<double>(),
                       a.at(2).get<double>());
  }
  if (j.contains("dir_b")) {
    const auto& b = j.at("dir_b");
    s.dir_b = Vector3d(b.at(0).get<double>(), b.at(1).get<double>(),
                       b.at(2).get<double>());
  }
  s.validate();
  return s;
}

json skill_to_json(const SkillSpec& s) {
  json j;
  j["skill"] = skill_kind_name(s.kind);
  j["amplitude"] = s.amplitude;
  j["speed"] = s.speed;
  j["turns"] = s.turns;
  j["axis"] = s.axis;
  j["start_jitter"] = s.start_jitter;
  j["dir_a"] = {s.dir_a.x(), s.dir_a.y(), s.dir_a.z()};
  j["dir_b"] = {s.dir_b.x(), s.dir_b.y(), s.dir_b.z()};
  return j;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch", c.batch_size);
  c.learning_rate = j.value("lr", c.learning_rate);
  const std::string opt = j.value("optimizer", "adam");
  if (opt == "adam") {
    c.optimizer = OptimizerKind::Adam;
  } else if (opt == "sgd") {
    c.optimizer = OptimizerKind::SgdMomentum;
  } else {
    throw DataError("unknown optimizer: " + opt);
  }
  const std::string weighting = j.value("weighting", "uniform");
  if (weighting == "uniform") {
    c.weighting = LossWeighting::Uniform;
  } else if (weighting == "snr") {
    c.weighting = LossWeighting::ScheduleSnr;
  } else {
    throw DataError("unknown loss weighting: " + weighting);
  }
  c.momentum = j.value("momentum", c.momentum);
  c.validate();
  return c;
}

json train_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch_size;
  j["lr"] = c.learning_rate;
  j["optimizer"] = c.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  j["weighting"] = c.weighting == LossWeighting::Uniform ? "uniform" : "snr";
  j["momentum"] = c.momentum;
  return j;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (name.empty()) throw ContractViolation("experiment needs a name");
  if (chain_file.empty()) throw ContractViolation("experiment needs a chain file");
  if (base_skills.empty()) throw ContractViolation("experiment needs base skills");
  for (const SkillSpec& s : base_skills) s.validate();
  demo_skill.validate();
  if (demo_counts.empty()) throw ContractViolation("experiment needs demo counts");
  for (int c : demo_counts) {
    if (c < 2) throw ContractViolation("demo counts must be >= 2");
  }
  if (traj_len < 2) throw ContractViolation("traj_len must be >= 2");
  if (!(dt > 0.0)) throw ContractViolation("dt must be > 0");
  if (schedule_steps < 1) throw ContractViolation("schedule_steps must be >= 1");
  if (base_train_count < 1) throw ContractViolation("base_train_count must be >= 1");
  if (rollout_count < 2) throw ContractViolation("rollout_count must be >= 2");
  base_train.validate();
  dse.validate();
}

ExperimentSpec ExperimentSpec::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open experiment spec: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("cannot parse experiment spec " + path + ": " + e.what());
  }

  ExperimentSpec spec;
  try {
    spec.name = j.value("name", spec.name);
    spec.chain_file = j.at("chain").get<std::string>();
    for (const auto& b : j.at("bases")) spec.base_skills.push_back(skill_from_json(b));
    spec.demo_skill = skill_from_json(j.at("demo_skill"));
    spec.demo_counts = j.value("demo_counts", spec.demo_counts);
    spec.seed = j.value("seed", spec.seed);
    spec.traj_len = j.value("traj_len", spec.traj_len);
    spec.dt = j.value("dt", spec.dt);
    spec.schedule_steps = j.value("schedule_steps", spec.schedule_steps);
    spec.base_train_count = j.value("base_train_count", spec.base_train_count);
    spec.rollout_count = j.value("rollout_count", spec.rollout_count);
    if (j.contains("train")) spec.base_train = train_from_json(j.at("train"));
    spec.dse.fewshot_train = spec.base_train;
    if (j.contains("dse")) {
      const json& d = j.at("dse");
      spec.dse.opt_iter = d.value("opt_iter", spec.dse.opt_iter);
      spec.dse.num_samples = d.value("num_samples", spec.dse.num_samples);
      spec.dse.restarts = d.value("restarts", spec.dse.restarts);
      spec.dse.sampler_steps = d.value("sampler_steps", spec.dse.sampler_steps);
      spec.dse.tolerance = d.value("tolerance", spec.dse.tolerance);
      if (d.contains("fewshot_train")) {
        spec.dse.fewshot_train = train_from_json(d.at("fewshot_train"));
      }
    }
    spec.out_dir = j.value("out_dir", spec.out_dir);
  } catch (const json::exception& e) {
    throw DataError("bad experiment spec " + path + ": " + e.what());
  }

  // Relative chain paths resolve against the directory of the loaded file.
  fs::path chain(spec.chain_file);
  if (chain.is_relative()) {
    const fs::path resolved = fs::path(path).parent_path() / chain;
    if (fs::exists(resolved)) spec.chain_file = resolved.string();
  }
  spec.validate();
  return spec;
}

void ExperimentSpec::save(const std::string& path) const {
  validate();
  json j;
  j["name"] = name;
  j["chain"] = chain_file;
  j["bases"] = json::array();
  for (const SkillSpec& s : base_skills) j["bases"].push_back(skill_to_json(s));
  j["demo_skill"] = skill_to_json(demo_skill);
  j["demo_counts"] = demo_counts;
  j["seed"] = seed;
  j["traj_len"] = traj_len;
  j["dt"] = dt;
  j["schedule_steps"] = schedule_steps;
  j["base_train_count"] = base_train_count;
  j["rollout_count"] = rollout_count;
  j["train"] = train_to_json(base_train);
  j["dse"] = {{"opt_iter", dse.opt_iter},
              {"num_samples", dse.num_samples},
              {"restarts", dse.restarts},
              {"sampler_steps", dse.sampler_steps},
              {"tolerance", dse.tolerance},
              {"fewshot_train", train_to_json(dse.fewshot_train)}};
  j["out_dir"] = out_dir;
  const fs::path p(path);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Experiment pipeline
// ---------------------------------------------------------------------------

namespace {

// End-effector path projected onto the two highest-variance axes of the
// reference cloud (deterministic tie-break toward lower axis index).
std::pair<int, int> dominant_axes(const KinematicChain& chain,
                                  const std::vector<Trajectory>& reference) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  long count = 0;
  std::vector<Vector3d> pts;
  for (const Trajectory& t : reference) {
    for (int k = 0; k < t.length(); ++k) {
      pts.push_back(chain.end_effector(t.steps.row(k).transpose()));
      mean += pts.back();
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const Vector3d& p : pts) var += (p - mean).cwiseAbs2();
  int first = 0, second = 1;
  for (int a = 1; a < 3; ++a) {
    if (var(a) > var(first)) first = a;
  }
  second = first == 0 ? 1 : 0;
  for (int a = 0; a < 3; ++a) {
    if (a != first && var(a) > var(second)) second = a;
  }
  if (first > second) std::swap(first, second);
  return {first, second};
}

std::vector<std::vector<Eigen::Vector2d>> ee_paths(
    const KinematicChain& chain, const std::vector<Trajectory>& trajs,
    std::pair<int, int> axes) {
  std::vector<std::vector<Eigen::Vector2d>> out;
  for (const Trajectory& t : trajs) {
    std::vector<Eigen::Vector2d> poly;
    poly.reserve(static_cast<std::size_t>(t.length()));
    for (int k = 0; k < t.length(); ++k) {
      const Vector3d p = chain.end_effector(t.steps.row(k).transpose());
      poly.emplace_back(p(axes.first), p(axes.second));
    }
    out.push_back(std::move(poly));
  }
  return out;
}

}  // namespace

namespace {

// Any failure inside an experiment stage aborts with the stage name.
template <typename Fn>
auto run_stage(const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const ContractViolation& e) {
    throw ContractViolation(std::string("stage '") + name + "': " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string("stage '") + name + "': " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace

std::string experiment_rows_to_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream csv;
  csv << "task,demos,vanilla,fine_tuned,dse\n";
  for (const ExperimentRow& r : rows) {
    csv << r.task << "," << r.demos << "," << format_double(r.vanilla) << ","
        << format_double(r.fine_tuned) << "," << format_double(r.dse) << "\n";
  }
  return csv.str();
}

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ensure_dir(spec.out_dir);
  auto chain = run_stage("load chain", [&] {
    return std::make_shared<const KinematicChain>(load_chain(spec.chain_file));
  });

  // Stage 1: base datasets.
  std::vector<DemoSet> base_data = run_stage("generate base data", [&] {
    std::vector<DemoSet> out;
    for (std::size_t i = 0; i < spec.base_skills.size(); ++i) {
      out.push_back(generate_skill_dataset(
          *chain, spec.base_skills[i], spec.base_train_count, spec.traj_len,
          spec.dt, substream(spec.seed, "data", i)));
    }
    return out;
  });

  // Shared normalizers over the pooled base data.
  const int traj_dim = spec.traj_len * chain->dof();
  const int total = spec.base_train_count * static_cast<int>(base_data.size());
  MatrixXd pooled(traj_dim, total);
  MatrixXd pooled_obs(chain->dof(), total);
  int col = 0;
  for (const DemoSet& ds : base_data) {
    for (const Demo& d : ds.demos) {
      pooled.col(col) = d.traj.flatten();
      pooled_obs.col(col) = d.obs;
      ++col;
    }
  }
  const Normalizer traj_norm = Normalizer::fit(pooled);
  const Normalizer obs_norm = Normalizer::fit(pooled_obs);

  // Stage 2: train base policies.
  const NoiseSchedule schedule = NoiseSchedule::linear(spec.schedule_steps);
  std::vector<std::shared_ptr<const DenoiserModel>> bases =
      run_stage("train base policies", [&] {
        std::vector<std::shared_ptr<const DenoiserModel>> out;
        for (std::size_t i = 0; i < base_data.size(); ++i) {
          TrainConfig tc = spec.base_train;
          tc.seed = substream(spec.seed, "train", i);
          out.push_back(std::make_shared<DenoiserModel>(train_denoiser(
              base_data[i], tc, schedule, spec.base_skills[i].label(),
              &traj_norm, &obs_norm)));
        }
        return out;
      });
  const PolicyEnsemble base_ensemble(bases);

  // Stage 3: demo pool and held-out reference set.
  const int max_demos = *std::max_element(spec.demo_counts.begin(),
                                          spec.demo_counts.end());
  const DemoSet demo_pool = run_stage("generate demos", [&] {
    return generate_skill_dataset(*chain, spec.demo_skill, max_demos,
                                  spec.traj_len, spec.dt,
                                  substream(spec.seed, "demos"));
  });
  const DemoSet reference = run_stage("generate reference set", [&] {
    return generate_skill_dataset(*chain, spec.demo_skill, spec.rollout_count,
                                  spec.traj_len, spec.dt,
                                  substream(spec.seed, "reference"));
  });
  const std::vector<Trajectory> reference_trajs = reference.trajectories();
  const std::vector<VectorXd> reference_obs = reference.observations();

  // One kernel width for every comparison in this experiment.
  KernelParams params;
  params.chain = chain;
  params.gamma = median_heuristic_gamma(params, reference_trajs, reference_trajs);

  const std::pair<int, int> axes = dominant_axes(*chain, reference_trajs);
  const auto axis_name = [](int a) { return a == 0 ? "x" : a == 1 ? "y" : "z"; };

  std::vector<ExperimentRow> rows;
  json details;
  details["name"] = spec.name;
  details["gamma"] = params.gamma;
  details["rows"] = json::array();

  for (std::size_t ci = 0; ci < spec.demo_counts.size(); ++ci) {
    const int count = spec.demo_counts[ci];
    const DemoSet demos = demo_pool.head(count);

    DseConfig cfg = spec.dse;
    cfg.seed = substream(spec.seed, "opt", static_cast<std::uint64_t>(count));
    cfg.fewshot_train.seed =
        substream(spec.seed, "fewshot", static_cast<std::uint64_t>(count));
    cfg.vanilla_baseline = true;

    const DseResult result = run_stage("optimize weights", [&] {
      return optimize_weights(bases, demos, params, cfg);
    });
    const PolicyEnsemble full = base_ensemble.with_model(result.fewshot_model);
    const PolicyEnsemble fewshot_only({result.fewshot_model});

    // Stage 4: rollout evaluation against the held-out reference set.
    const auto [dse_rollouts, fewshot_rollouts, vanilla_rollouts] =
        run_stage("evaluate rollouts", [&] {
          return std::tuple{
              composed_sample_batch(
                  full, result.weights, reference_obs,
                  substream(spec.seed, "rollout-dse",
                            static_cast<std::uint64_t>(count)),
                  cfg.sampler_steps),
              composed_sample_batch(
                  fewshot_only, CompositionWeights::one_hot(1, 0),
                  reference_obs,
                  substream(spec.seed, "rollout-fewshot",
                            static_cast<std::uint64_t>(count)),
                  cfg.sampler_steps),
              composed_sample_batch(
                  base_ensemble, CompositionWeights(result.vanilla_weights),
                  reference_obs,
                  substream(spec.seed, "rollout-vanilla",
                            static_cast<std::uint64_t>(count)),
                  cfg.sampler_steps)};
        });

    ExperimentRow row;
    row.task = spec.demo_skill.label();
    row.demos = count;
    row.dse = mmd_fk(params, dse_rollouts, reference_trajs);
    row.fine_tuned = mmd_fk(params, fewshot_rollouts, reference_trajs);
    row.vanilla = mmd_fk(params, vanilla_rollouts, reference_trajs);
    rows.push_back(row);

    json detail;
    detail["demos"] = count;
    detail["weights"] = std::vector<double>(
        result.weights.vec().data(),
        result.weights.vec().data() + result.weights.size());
    detail["objective"] = result.objective;
    detail["fewshot_objective"] = result.fewshot_objective;
    detail["best_base_corner"] = result.best_base_corner;
    detail["vanilla_objective"] = result.vanilla_objective;
    detail["vanilla_weights"] = std::vector<double>(
        result.vanilla_weights.data(),
        result.vanilla_weights.data() + result.vanilla_weights.size());
    detail["corner_objectives"] = result.corner_objectives;
    detail["mmdfk_vs_reference"] = {{"dse", row.dse},
                                    {"fine_tuned", row.fine_tuned},
                                    {"vanilla", row.vanilla}};
    detail["mse_vs_demos"] = {
        {"dse", mse_vs_demos(full, result.weights, demos,
                             substream(spec.seed, "mse-dse",
                                       static_cast<std::uint64_t>(count)),
                             cfg.sampler_steps)},
        {"fine_tuned",
         mse_vs_demos(fewshot_only, CompositionWeights::one_hot(1, 0), demos,
                      substream(spec.seed, "mse-fewshot",
                                static_cast<std::uint64_t>(count)),
                      cfg.sampler_steps)},
        {"vanilla",
         mse_vs_demos(base_ensemble, CompositionWeights(result.vanilla_weights),
                      demos,
                      substream(spec.seed, "mse-vanilla",
                                static_cast<std::uint64_t>(count)),
                      cfg.sampler_steps)}};
    details["rows"].push_back(detail);

    // Stage 5: end-effector overlays (reference gray, DSE rollouts color).
    const std::string svg_path = spec.out_dir + "/" + spec.name + "_demos" +
                                 std::to_string(count) + "_paths.svg";
    write_polyline_svg(
        svg_path, ee_paths(*chain, reference_trajs, axes),
        ee_paths(*chain, dse_rollouts, axes),
        spec.name + " (" + std::to_string(count) + " demos): reference vs DSE" +
            " rollouts, " + axis_name(axes.first) + "-" +
            axis_name(axes.second) + " plane");
  }

  write_text(spec.out_dir + "/" + spec.name + "_results.csv",
             experiment_rows_to_csv(rows));
  write_text(spec.out_dir + "/" + spec.name + "_details.json",
             details.dump(2) + "\n");
  return rows;
}

}  // namespace dsekit
