#pragma once

#include "dsekit/dse.hpp"
#include "dsekit/io.hpp"

#include <string>
#include <vector>

namespace dsekit {

// ---------------------------------------------------------------------------
// Toy 2D interpolation experiment
// ---------------------------------------------------------------------------

/// Two denoisers trained on 2D Gaussians with means (5,5) and (-5,-5),
/// composed over a weight grid. Written artifacts: per-weight sample CSVs,
/// scatter SVGs, and a summary JSON.
struct Toy2dConfig {
  int train_count = 400;
  int sample_count = 200;
  std::vector<double> weight_grid = {0.0, 1.0 / 3.0, 0.5, 2.0 / 3.0, 1.0};
  TrainConfig train;
  int schedule_steps = 100;

  Toy2dConfig() {
    train.epochs = 300;
    train.batch_size = 64;
    train.learning_rate = 2e-3;
  }
};

struct Toy2dResult {
  std::vector<double> weight_grid;
  /// Mean projection of 2D samples onto the (1,1)/sqrt(2) diagonal, one
  /// entry per grid weight w1.
  std::vector<double> mean_diag_projection;
  /// Sample mean at w = (1, 0), which should recover model 1's Gaussian.
  Eigen::Vector2d mean_at_full_weight;
  std::vector<std::string> files;
};

Toy2dResult run_toy2d(const std::string& out_dir, std::uint64_t seed,
                      const Toy2dConfig& config = Toy2dConfig());

// ---------------------------------------------------------------------------
// Skill-learning experiment pipeline
// ---------------------------------------------------------------------------

/// Full pipeline spec: generate base/demo data, train bases and few-shot
/// models, optimize composition weights, evaluate rollouts against a
/// held-out reference set per demo count.
struct ExperimentSpec {
  std::string name = "experiment";
  std::string chain_file;
  std::vector<SkillSpec> base_skills;
  SkillSpec demo_skill;
  std::vector<int> demo_counts = {5, 15};
  std::uint64_t seed = 0;
  int traj_len = 16;
  double dt = 0.1;
  int schedule_steps = 100;
  int base_train_count = 100;
  int rollout_count = 50;
  TrainConfig base_train;
  DseConfig dse;
  std::string out_dir = "out";

  void validate() const;
  static ExperimentSpec from_json_file(const std::string& path);
  void save(const std::string& path) const;
};

/// One CSV row, mirroring the results-table layout: MMD-FK of rollouts
/// against the held-out reference distribution for each method.
struct ExperimentRow {
  std::string task;
  int demos = 0;
  double vanilla = 0.0;
  double fine_tuned = 0.0;
  double dse = 0.0;
};

/// Runs the pipeline, writes <name>_results.csv, <name>_details.json and
/// per-demo-count end-effector SVG overlays into spec.out_dir.
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec);

/// Stable CSV rendering of experiment rows (header + %.12g values).
std::string experiment_rows_to_csv(const std::vector<ExperimentRow>& rows);

/// Minimal polyline plot: gray reference paths, colored rollout paths.
/// Each path is a sequence of 2D points.
void write_polyline_svg(const std::string& path,
                        const std::vector<std::vector<Eigen::Vector2d>>& gray,
                        const std::vector<std::vector<Eigen::Vector2d>>& color,
                        const std::string& title);

}  // namespace dsekit
