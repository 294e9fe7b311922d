#pragma once

#include "dsekit/common.hpp"
#include "dsekit/skills.hpp"

#include <functional>
#include <string>
#include <vector>

namespace dsekit {

// ---------------------------------------------------------------------------
// Noise schedule
// ---------------------------------------------------------------------------

/// DDPM forward-process schedule. Index convention: diffusion time t runs
/// 1..T; arrays are 0-based so beta(t) = betas[t-1]. alpha_bar(0) = 1 is the
/// identity boundary.
struct NoiseSchedule {
  VectorXd betas;
  VectorXd alphas;      // 1 - beta_t
  VectorXd alpha_bars;  // running product of alphas

  int steps() const { return static_cast<int>(betas.size()); }
  double beta(int t) const;
  double alpha(int t) const;
  double alpha_bar(int t) const;  // t in 0..T

  /// Linear beta ramp; defaults keep alpha_bar(T) < 1e-2 so q(a_T) is close
  /// to a standard normal.
  static NoiseSchedule linear(int steps = 100, double beta_start = 1e-4,
                              double beta_end = 0.2);
  /// Schedule from explicit per-step alphas (exact-value test fixtures).
  static NoiseSchedule from_alphas(const VectorXd& alphas);

  /// Basic shape checks: alphas in (0,1], alpha_bars strictly decreasing.
  void validate() const;
  /// True when alpha_bar(T) < 1e-2, i.e. the terminal marginal is close
  /// enough to N(0, I) for ancestral sampling to start from pure noise.
  bool terminal_is_gaussian() const;

  bool operator==(const NoiseSchedule& other) const;
};

/// Closed-form forward marginal a_t = sqrt(abar_t) a0 + sqrt(1-abar_t) noise.
/// t = 0 returns a0 (identity boundary convention).
VectorXd forward_diffuse(const NoiseSchedule& schedule, const VectorXd& a0,
                         int t, const VectorXd& noise);

/// Score estimate from a noise prediction: -eps_hat / sqrt(1 - abar_t).
/// Raises NumericError when alpha_bar(t) == 1 exactly.
VectorXd score_from_eps(const VectorXd& eps_hat, const NoiseSchedule& schedule,
                        int t);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-dimension affine map to roughly zero mean / unit variance. Stored in
/// the model and inverted at sampling. Policies that are composed must share
/// one normalizer so their scores live in the same coordinates.
struct Normalizer {
  VectorXd mean;
  VectorXd std;  // floored to keep the map invertible

  int dim() const { return static_cast<int>(mean.size()); }
  VectorXd normalize(const VectorXd& x) const;
  VectorXd denormalize(const VectorXd& z) const;

  static Normalizer fit(const MatrixXd& samples_cols, double std_floor = 1e-3);
  static Normalizer identity(int dim);

  bool operator==(const Normalizer& other) const;
};

// ---------------------------------------------------------------------------
// Denoiser
// ---------------------------------------------------------------------------

/// Sinusoidal embedding of an integer diffusion step.
VectorXd time_embedding(int t, int dim);

enum class LossWeighting {
  Uniform,       // lambda_t = 1 (simple loss)
  ScheduleSnr,   // variational weight beta^2 / (2 sigma_t^2 alpha (1-abar))
};

enum class OptimizerKind { SgdMomentum, Adam };

struct TrainConfig {
  int epochs = 400;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  LossWeighting weighting = LossWeighting::Uniform;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double momentum = 0.9;
  /// Reject a run whose final epoch loss is not below the first (signals a
  /// dead learning rate); disable for degenerate fixtures.
  bool require_improvement = true;

  void validate() const;
};

/// Conditional MLP noise predictor over flattened fixed-length trajectories.
/// Input: [normalized noisy trajectory; normalized observation; time
/// embedding]; output: predicted noise in normalized trajectory space.
class DenoiserModel {
 public:
  DenoiserModel(int traj_len, int dof, double dt, NoiseSchedule schedule,
                Normalizer traj_norm, Normalizer obs_norm,
                std::vector<int> hidden = {128, 128, 128},
                int time_embed_dim = 32, std::string label = "");

  int traj_len() const { return traj_len_; }
  int dof() const { return dof_; }
  double dt() const { return dt_; }
  int traj_dim() const { return traj_len_ * dof_; }
  int input_dim() const { return traj_dim() + dof_ + time_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  int time_embed_dim() const { return time_dim_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Normalizer& traj_normalizer() const { return traj_norm_; }
  const Normalizer& obs_normalizer() const { return obs_norm_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  /// He-initialized hidden layers; near-zero final layer so an untrained
  /// model predicts eps ~ 0.
  void init_parameters(std::uint64_t seed);

  /// Noise prediction for one normalized noisy trajectory.
  VectorXd eps(const VectorXd& z_t, const VectorXd& obs, int t) const;
  /// Batched prediction, one column per sample, shared diffusion step.
  MatrixXd eps_batch(const MatrixXd& z_t, const MatrixXd& obs, int t) const;
  /// Batched prediction with a per-column diffusion step.
  MatrixXd eps_batch(const MatrixXd& z_t, const MatrixXd& obs,
                     const std::vector<int>& ts) const;

  int parameter_count() const;
  VectorXd parameters() const;
  void set_parameters(const VectorXd& flat);

  int layer_count() const { return static_cast<int>(weights_.size()); }
  const MatrixXd& layer_weight(int i) const { return weights_[static_cast<std::size_t>(i)]; }
  const VectorXd& layer_bias(int i) const { return biases_[static_cast<std::size_t>(i)]; }

  struct Meta {
    std::uint64_t seed = 0;
    int epochs = 0;
    double first_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;
  };
  Meta meta;

 private:
  friend std::pair<double, VectorXd> loss_and_gradient(
      const DenoiserModel&, const MatrixXd&, const MatrixXd&,
      const std::vector<int>&, const MatrixXd&, LossWeighting);

  MatrixXd assemble_input(const MatrixXd& z_t, const MatrixXd& obs,
                          const std::vector<int>& ts) const;

  int traj_len_;
  int dof_;
  double dt_;
  NoiseSchedule schedule_;
  Normalizer traj_norm_;
  Normalizer obs_norm_;
  std::vector<int> hidden_;
  int time_dim_;
  std::string label_;
  std::vector<MatrixXd> weights_;
  std::vector<VectorXd> biases_;
};

/// Noise-regression training loss and its exact analytic gradient with
/// respect to the flat parameter vector.
///
/// z0: normalized clean trajectories (traj_dim x B); obs raw observations
/// (dof x B); ts per-column diffusion steps in 1..T; noise (traj_dim x B).
/// Loss = mean_b lambda_{t_b} * ||eps_b - eps_hat_b||^2 (squared norm summed
/// over dimensions, averaged over the batch).
std::pair<double, VectorXd> loss_and_gradient(const DenoiserModel& model,
                                              const MatrixXd& z0,
                                              const MatrixXd& obs,
                                              const std::vector<int>& ts,
                                              const MatrixXd& noise,
                                              LossWeighting weighting);

/// Trains a denoiser on the demo set. When shared normalizers are passed
/// (composition across policies) they override the per-dataset fit.
DenoiserModel train_denoiser(const DemoSet& dataset, const TrainConfig& config,
                             const NoiseSchedule& schedule,
                             const std::string& label = "",
                             const Normalizer* shared_traj_norm = nullptr,
                             const Normalizer* shared_obs_norm = nullptr);

// ---------------------------------------------------------------------------
// Ancestral sampling
// ---------------------------------------------------------------------------

/// Noise predictor callback for the reverse chain: (z_t, t) -> eps, one
/// column per chain.
using EpsFn = std::function<MatrixXd(const MatrixXd&, int)>;

/// Ancestral DDPM sampling of `batch` chains in normalized space. Chain j
/// draws all its noise from substream(seed, "chain", j), so results are
/// independent of batch composition. `steps` < T runs the reverse chain on
/// an evenly strided sub-schedule with exact marginal restriding (0 = full
/// schedule).
MatrixXd ancestral_sample_batch(const NoiseSchedule& schedule,
                                const EpsFn& eps_fn, int dim, int batch,
                                std::uint64_t seed, int steps = 0);

/// Samples one trajectory from a single model (observation-conditioned),
/// deterministic given seed.
Trajectory sample(const DenoiserModel& model, const VectorXd& obs,
                  std::uint64_t seed, int steps = 0);

}  // namespace dsekit
