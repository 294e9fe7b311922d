#pragma once

#include "dsekit/common.hpp"
#include "dsekit/composition.hpp"
#include "dsekit/diffusion.hpp"
#include "dsekit/mmdfk.hpp"
#include "dsekit/skills.hpp"

#include <memory>
#include <vector>

namespace dsekit {

struct DseConfig {
  /// Max objective evaluations per restart.
  int opt_iter = 60;
  /// Composed samples per objective evaluation; 0 = max(|demos|, 16)
  /// capped at 64.
  int num_samples = 0;
  /// Optimization runs: one similarity-initialized + (restarts-1) random.
  int restarts = 4;
  std::uint64_t seed = 0;
  /// Reverse-diffusion steps per sample; 0 = the full schedule.
  int sampler_steps = 0;
  /// Convergence tolerance on the objective spread of the search simplex.
  double tolerance = 1e-3;
  /// Training configuration for the few-shot model.
  TrainConfig fewshot_train;
  /// Also optimize over base policies only and record it as a baseline.
  bool vanilla_baseline = true;

  void validate() const;
  int resolved_num_samples(int demo_count) const;
};

struct RestartTrace {
  VectorXd initial_weights;
  /// Every (weights, objective) evaluation in order.
  std::vector<std::pair<VectorXd, double>> evaluations;
  VectorXd best_weights;
  double best_objective = 0.0;
  bool converged = false;
};

struct DseResult {
  CompositionWeights weights;
  double objective = 0.0;
  std::vector<RestartTrace> restarts;
  /// Objective at the one-hot corners, in model order (last = few-shot
  /// model when present).
  std::vector<double> corner_objectives;
  /// Corner objective of the few-shot model (NaN for base-only runs).
  double fewshot_objective = 0.0;
  /// Best one-hot objective among the base policies.
  double best_base_corner = 0.0;
  /// Optimized base-only composition (NaN / empty when disabled).
  double vanilla_objective = 0.0;
  VectorXd vanilla_weights;
  /// True when some restart exhausted opt_iter before converging.
  bool exhausted = false;
  /// Model trained on the demonstrations (null for base-only runs).
  std::shared_ptr<const DenoiserModel> fewshot_model;
};

/// MMD-FK between `num_samples` composed rollouts (observations drawn
/// round-robin from the demos) and the demonstration set. Deterministic
/// given seed; kernel width is taken from params as-is.
double dse_objective(const PolicyEnsemble& ensemble,
                     const CompositionWeights& weights, const DemoSet& demos,
                     const KernelParams& params, const DseConfig& config,
                     std::uint64_t seed);

/// Compositional weight estimation: trains the (N+1)th model on the demos,
/// then minimizes dse_objective over the simplex with Nelder-Mead on a
/// softmax reparameterization. One-hot corners are evaluated explicitly
/// before the search, so the result can never be worse than the few-shot or
/// any single base policy under the same evaluation seed. params.gamma <= 0
/// requests the median heuristic on the demo set (frozen for the whole run).
DseResult optimize_weights(
    const std::vector<std::shared_ptr<const DenoiserModel>>& base_policies,
    const DemoSet& demos, KernelParams params, const DseConfig& config);

/// Prior-work baseline: the same optimizer restricted to the base policies
/// (no few-shot model).
DseResult vanilla_composition_baseline(
    const std::vector<std::shared_ptr<const DenoiserModel>>& base_policies,
    const DemoSet& demos, KernelParams params, const DseConfig& config);

/// Per-element mean squared joint-space error between rollouts and demos
/// (mean over demos, steps and joints).
double trajectory_mse(const std::vector<Trajectory>& rollouts,
                      const DemoSet& demos);

/// Rolls out one composed sample from each demo's initial state and returns
/// trajectory_mse against the demos.
double mse_vs_demos(const PolicyEnsemble& ensemble,
                    const CompositionWeights& weights, const DemoSet& demos,
                    std::uint64_t seed, int sampler_steps = 0);

}  // namespace dsekit
