#include "dsekit/dse.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace dsekit {

void DseConfig::validate() const {
  if (opt_iter < 1) throw ContractViolation("opt_iter must be >= 1");
  if (restarts < 1) throw ContractViolation("restarts must be >= 1");
  if (num_samples != 0 && num_samples < 2) {
    throw ContractViolation("num_samples must be >= 2 (estimator precondition)");
  }
  if (sampler_steps < 0) throw ContractViolation("sampler_steps must be >= 0");
  if (!(tolerance > 0.0)) throw ContractViolation("tolerance must be > 0");
  fewshot_train.validate();
}

int DseConfig::resolved_num_samples(int demo_count) const {
  if (num_samples != 0) return num_samples;
  return std::min(std::max(demo_count, 16), 64);
}

double dse_objective(const PolicyEnsemble& ensemble,
                     const CompositionWeights& weights, const DemoSet& demos,
                     const KernelParams& params, const DseConfig& config,
                     std::uint64_t seed) {
  config.validate();
  demos.validate();
  if (demos.size() < 2) {
    throw ContractViolation("dse_objective needs at least 2 demos");
  }

  const int count = config.resolved_num_samples(demos.size());
  std::vector<VectorXd> obs;
  obs.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    obs.push_back(demos.demos[static_cast<std::size_t>(j) %
                              demos.demos.size()]
                      .obs);
  }
  const std::vector<Trajectory> samples = composed_sample_batch(
      ensemble, weights, obs, seed, config.sampler_steps);
  return mmd_fk(params, samples, demos.trajectories());
}

// ---------------------------------------------------------------------------
// Simplex search (Nelder-Mead on a softmax reparameterization)
// ---------------------------------------------------------------------------

namespace {

// w = softmax([u; 0]): interior of the simplex by construction, with the
// last logit pinned to remove the translation degree of freedom.
VectorXd softmax_point(const VectorXd& u) {
  const int n = static_cast<int>(u.size()) + 1;
  VectorXd logits(n);
  logits.head(n - 1) = u;
  logits(n - 1) = 0.0;
  const double mx = logits.maxCoeff();
  VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

VectorXd logits_from_weights(const VectorXd& w) {
  const int n = static_cast<int>(w.size());
  VectorXd u(n - 1);
  const double ref = std::log(w(n - 1) + 1e-6);
  for (int i = 0; i < n - 1; ++i) u(i) = std::log(w(i) + 1e-6) - ref;
  return u;
}

struct SearchOutcome {
  VectorXd best_weights;
  double best_objective = std::numeric_limits<double>::infinity();
  bool converged = false;
};

// Standard Nelder-Mead (reflect 1, expand 2, contract 0.5, shrink 0.5) with
// an evaluation budget. `evaluate` returns the objective and records traces.
SearchOutcome nelder_mead(const std::function<double(const VectorXd&)>& evaluate,
                          const VectorXd& u0, int max_evals, double tol) {
  const int d = static_cast<int>(u0.size());
  SearchOutcome out;
  int evals = 0;
  auto run = [&](const VectorXd& u) {
    const VectorXd w = softmax_point(u);
    const double f = evaluate(w);
    ++evals;
    if (f < out.best_objective) {
      out.best_objective = f;
      out.best_weights = w;
    }
    return f;
  };

  if (d == 0) {  // single-model search space: nothing to optimize
    run(u0);
    out.converged = true;
    return out;
  }

  std::vector<VectorXd> xs(static_cast<std::size_t>(d + 1), u0);
  std::vector<double> fs(static_cast<std::size_t>(d + 1));
  for (int i = 1; i <= d; ++i) xs[static_cast<std::size_t>(i)](i - 1) += 1.0;
  for (int i = 0; i <= d && evals < max_evals; ++i) {
    fs[static_cast<std::size_t>(i)] = run(xs[static_cast<std::size_t>(i)]);
  }

  while (evals < max_evals) {
    std::vector<int> order(static_cast<std::size_t>(d + 1));
    for (int i = 0; i <= d; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fs[static_cast<std::size_t>(a)] <
                                         fs[static_cast<std::size_t>(b)]; });
    const int best = order.front(), worst = order.back();
    const int second_worst = order[static_cast<std::size_t>(d - 1)];

    if (fs[static_cast<std::size_t>(worst)] -
            fs[static_cast<std::size_t>(best)] < tol) {
      out.converged = true;
      break;
    }

    VectorXd centroid = VectorXd::Zero(d);
    for (int i = 0; i <= d; ++i) {
      if (i != worst) centroid += xs[static_cast<std::size_t>(i)];
    }
    centroid /= d;

    const VectorXd reflected =
        centroid + (centroid - xs[static_cast<std::size_t>(worst)]);
    const double fr = run(reflected);
    if (fr < fs[static_cast<std::size_t>(best)] && evals < max_evals) {
      const VectorXd expanded =
          centroid + 2.0 * (centroid - xs[static_cast<std::size_t>(worst)]);
      const double fe = run(expanded);
      if (fe < fr) {
        xs[static_cast<std::size_t>(worst)] = expanded;
        fs[static_cast<std::size_t>(worst)] = fe;
      } else {
        xs[static_cast<std::size_t>(worst)] = reflected;
        fs[static_cast<std::size_t>(worst)] = fr;
      }
    } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
      xs[static_cast<std::size_t>(worst)] = reflected;
      fs[static_cast<std::size_t>(worst)] = fr;
    } else if (evals < max_evals) {
      const bool outside = fr < fs[static_cast<std::size_t>(worst)];
      const VectorXd contracted =
          outside ? centroid + 0.5 * (reflected - centroid)
                  : centroid +
                        0.5 * (xs[static_cast<std::size_t>(worst)] - centroid);
      const double fc = run(contracted);
      if (fc < std::min(fr, fs[static_cast<std::size_t>(worst)])) {
        xs[static_cast<std::size_t>(worst)] = contracted;
        fs[static_cast<std::size_t>(worst)] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 0; i <= d && evals < max_evals; ++i) {
          if (i == best) continue;
          xs[static_cast<std::size_t>(i)] =
              xs[static_cast<std::size_t>(best)] +
              0.5 * (xs[static_cast<std::size_t>(i)] -
                     xs[static_cast<std::size_t>(best)]);
          fs[static_cast<std::size_t>(i)] = run(xs[static_cast<std::size_t>(i)]);
        }
      }
    }
  }
  return out;
}

struct OptimizeOutcome {
  VectorXd weights;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<RestartTrace> traces;
  std::vector<double> corner_objectives;
  bool exhausted = false;
};

// Shared machinery for the full (bases + few-shot) and base-only searches.
OptimizeOutcome optimize_over(const PolicyEnsemble& ensemble,
                              const DemoSet& demos, const KernelParams& params,
                              const DseConfig& config,
                              std::string_view stream_label) {
  const int n = ensemble.size();
  const std::uint64_t root = substream(config.seed, stream_label);

  auto objective_at = [&](const VectorXd& w, std::uint64_t seed) {
    return dse_objective(ensemble, CompositionWeights(w), demos, params,
                         config, seed);
  };

  OptimizeOutcome out;

  // One-hot corners first, under restart 0's evaluation seed: the search
  // result can then never be worse than any single policy.
  const std::uint64_t corner_seed = substream(root, "objective", 0);
  for (int k = 0; k < n; ++k) {
    const VectorXd w = CompositionWeights::one_hot(n, k).vec();
    const double f = objective_at(w, corner_seed);
    out.corner_objectives.push_back(f);
    if (f < out.objective) {
      out.objective = f;
      out.weights = w;
    }
  }

  for (int r = 0; r < config.restarts; ++r) {
    RestartTrace trace;
    if (r == 0) {
      // Similarity initialization: inverse of the corner objectives
      // (closer policies start with more weight).
      VectorXd w(n);
      for (int k = 0; k < n; ++k) {
        w(k) = 1.0 /
               (std::max(out.corner_objectives[static_cast<std::size_t>(k)],
                         0.0) +
                1e-3);
      }
      trace.initial_weights = w / w.sum();
    } else {
      // Uniform Dirichlet draw.
      Rng rng(substream(root, "restart", static_cast<std::uint64_t>(r)));
      VectorXd g(n);
      for (int k = 0; k < n; ++k) g(k) = -std::log(1.0 - rng.uniform());
      trace.initial_weights = g / g.sum();
    }

    const std::uint64_t eval_seed =
        substream(root, "objective", static_cast<std::uint64_t>(r));
    const auto record_eval = [&](const VectorXd& w) {
      const double f = objective_at(w, eval_seed);
      trace.evaluations.emplace_back(w, f);
      return f;
    };

    const SearchOutcome search =
        nelder_mead(record_eval, logits_from_weights(trace.initial_weights),
                    config.opt_iter, config.tolerance);
    trace.best_weights = search.best_weights;
    trace.best_objective = search.best_objective;
    trace.converged = search.converged;
    if (!search.converged) out.exhausted = true;

    if (search.best_objective < out.objective) {
      out.objective = search.best_objective;
      out.weights = search.best_weights;
    }
    out.traces.push_back(std::move(trace));
  }
  return out;
}

KernelParams freeze_gamma(KernelParams params, const DemoSet& demos) {
  if (params.gamma <= 0.0) {
    KernelParams probe = params;
    probe.gamma = 1.0;
    params.gamma = median_heuristic_gamma(probe, demos.trajectories(),
                                          demos.trajectories());
  }
  params.validate();
  return params;
}

DseResult result_from(OptimizeOutcome&& main) {
  DseResult result{CompositionWeights(main.weights),
                   main.objective,
                   std::move(main.traces),
                   main.corner_objectives,
                   0.0,
                   0.0,
                   std::numeric_limits<double>::quiet_NaN(),
                   VectorXd(),
                   main.exhausted,
                   nullptr};
  return result;
}

}  // namespace

DseResult optimize_weights(
    const std::vector<std::shared_ptr<const DenoiserModel>>& base_policies,
    const DemoSet& demos, KernelParams params, const DseConfig& config) {
  config.validate();
  if (base_policies.empty()) {
    throw ContractViolation("optimize_weights needs at least one base policy");
  }
  demos.validate();
  if (demos.size() < 2) {
    throw ContractViolation("optimize_weights needs at least 2 demos");
  }

  PolicyEnsemble bases(base_policies);
  params = freeze_gamma(std::move(params), demos);

  // Algorithm initialization: train the (N+1)th policy on the demos, in the
  // bases' normalized coordinates so the scores compose.
  auto fewshot = std::make_shared<DenoiserModel>(train_denoiser(
      demos, config.fewshot_train, bases.schedule(), "few-shot",
      &bases.traj_normalizer(), &bases.model(0).obs_normalizer()));
  const PolicyEnsemble full = bases.with_model(fewshot);

  OptimizeOutcome main = optimize_over(full, demos, params, config, "dse");

  DseResult result = result_from(std::move(main));
  result.fewshot_objective = result.corner_objectives.back();
  result.best_base_corner =
      *std::min_element(result.corner_objectives.begin(),
                        result.corner_objectives.end() - 1);
  result.fewshot_model = fewshot;

  if (config.vanilla_baseline) {
    OptimizeOutcome vanilla =
        optimize_over(bases, demos, params, config, "vanilla");
    result.vanilla_objective = vanilla.objective;
    result.vanilla_weights = vanilla.weights;
  }
  return result;
}

DseResult vanilla_composition_baseline(
    const std::vector<std::shared_ptr<const DenoiserModel>>& base_policies,
    const DemoSet& demos, KernelParams params, const DseConfig& config) {
  config.validate();
  if (base_policies.empty()) {
    throw ContractViolation("baseline needs at least one base policy");
  }
  demos.validate();
  if (demos.size() < 2) {
    throw ContractViolation("baseline needs at least 2 demos");
  }

  PolicyEnsemble bases(base_policies);
  params = freeze_gamma(std::move(params), demos);
  OptimizeOutcome main = optimize_over(bases, demos, params, config, "vanilla");

  DseResult result = result_from(std::move(main));
  result.fewshot_objective = std::numeric_limits<double>::quiet_NaN();
  result.best_base_corner =
      *std::min_element(result.corner_objectives.begin(),
                        result.corner_objectives.end());
  result.vanilla_objective = result.objective;
  result.vanilla_weights = result.weights.vec();
  return result;
}

double trajectory_mse(const std::vector<Trajectory>& rollouts,
                      const DemoSet& demos) {
  if (rollouts.size() != demos.demos.size()) {
    throw ContractViolation("one rollout per demo required");
  }
  if (rollouts.empty()) throw ContractViolation("empty rollout set");
  double acc = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const MatrixXd& a = rollouts[i].steps;
    const MatrixXd& b = demos.demos[i].traj.steps;
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
      throw ContractViolation("rollout/demo shape mismatch");
    }
    acc += (a - b).squaredNorm();
    count += a.size();
  }
  return acc / static_cast<double>(count);
}

double mse_vs_demos(const PolicyEnsemble& ensemble,
                    const CompositionWeights& weights, const DemoSet& demos,
                    std::uint64_t seed, int sampler_steps) {
  demos.validate();
  const std::vector<Trajectory> rollouts = composed_sample_batch(
      ensemble, weights, demos.observations(), seed, sampler_steps);
  return trajectory_mse(rollouts, demos);
}

}  // namespace dsekit
