#include "dsekit/composition.hpp"

#include <cmath>
#include <sstream>

namespace dsekit {

namespace {
constexpr double kWeightSkipThreshold = 1e-12;
}

CompositionWeights::CompositionWeights(VectorXd w) : w_(std::move(w)) {
  if (w_.size() < 1) throw ContractViolation("weights must be non-empty");
  double sum = 0.0;
  for (int i = 0; i < w_.size(); ++i) {
    if (!(w_(i) >= 0.0)) {
      throw ContractViolation("composition weights must be non-negative");
    }
    sum += w_(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "composition weights must sum to 1 (got " << sum << ")";
    throw ContractViolation(msg.str());
  }
}

CompositionWeights CompositionWeights::uniform(int n) {
  if (n < 1) throw ContractViolation("weights must be non-empty");
  return CompositionWeights(VectorXd::Constant(n, 1.0 / n));
}

CompositionWeights CompositionWeights::one_hot(int n, int k) {
  if (n < 1 || k < 0 || k >= n) throw ContractViolation("one_hot index out of range");
  VectorXd w = VectorXd::Zero(n);
  w(k) = 1.0;
  return CompositionWeights(std::move(w));
}

PolicyEnsemble::PolicyEnsemble(
    std::vector<std::shared_ptr<const DenoiserModel>> models)
    : models_(std::move(models)) {
  if (models_.empty()) throw ContractViolation("ensemble must be non-empty");
  for (const auto& m : models_) {
    if (!m) throw ContractViolation("ensemble has a null model");
  }
  const DenoiserModel& first = *models_.front();
  for (std::size_t i = 1; i < models_.size(); ++i) {
    const DenoiserModel& m = *models_[i];
    if (m.traj_len() != first.traj_len() || m.dof() != first.dof()) {
      throw ContractViolation("ensemble models disagree on trajectory shape");
    }
    if (!(m.schedule() == first.schedule())) {
      throw ContractViolation("ensemble models must share one noise schedule");
    }
    if (!(m.traj_normalizer() == first.traj_normalizer()) ||
        !(m.obs_normalizer() == first.obs_normalizer())) {
      throw ContractViolation(
          "ensemble models must share normalizers; retrain with a shared "
          "normalizer to compose");
    }
  }
}

PolicyEnsemble PolicyEnsemble::with_model(
    std::shared_ptr<const DenoiserModel> model) const {
  std::vector<std::shared_ptr<const DenoiserModel>> models = models_;
  models.push_back(std::move(model));
  return PolicyEnsemble(std::move(models));
}

MatrixXd composed_eps(const PolicyEnsemble& ensemble,
                      const CompositionWeights& weights, const MatrixXd& z_t,
                      const MatrixXd& obs, int t) {
  if (weights.size() != ensemble.size()) {
    throw ContractViolation("one weight per ensemble model required");
  }
  MatrixXd acc;
  for (int i = 0; i < ensemble.size(); ++i) {
    const double w = weights[i];
    if (w < kWeightSkipThreshold) continue;
    const MatrixXd eps = ensemble.model(i).eps_batch(z_t, obs, t);
    if (acc.size() == 0) {
      acc = w * eps;
    } else {
      acc += w * eps;
    }
  }
  if (acc.size() == 0) {
    throw ContractViolation("all composition weights are zero");
  }
  return acc;
}

VectorXd composed_eps(const PolicyEnsemble& ensemble,
                      const CompositionWeights& weights, const VectorXd& z_t,
                      const VectorXd& obs, int t) {
  return composed_eps(ensemble, weights, MatrixXd(z_t), MatrixXd(obs), t)
      .col(0);
}

std::vector<Trajectory> composed_sample_batch(
    const PolicyEnsemble& ensemble, const CompositionWeights& weights,
    const std::vector<VectorXd>& obs, std::uint64_t seed, int steps) {
  if (obs.empty()) throw ContractViolation("need at least one observation");
  const int B = static_cast<int>(obs.size());
  MatrixXd obs_mat(ensemble.dof(), B);
  for (int j = 0; j < B; ++j) {
    if (obs[static_cast<std::size_t>(j)].size() != ensemble.dof()) {
      throw ContractViolation("observation dimension mismatch");
    }
    obs_mat.col(j) = obs[static_cast<std::size_t>(j)];
  }

  const EpsFn eps_fn = [&](const MatrixXd& z_t, int t) {
    return composed_eps(ensemble, weights, z_t, obs_mat, t);
  };
  const MatrixXd z0 = ancestral_sample_batch(
      ensemble.schedule(), eps_fn, ensemble.traj_dim(), B, seed, steps);

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(B));
  for (int j = 0; j < B; ++j) {
    out.push_back(Trajectory::unflatten(
        ensemble.traj_normalizer().denormalize(z0.col(j)), ensemble.traj_len(),
        ensemble.dof(), ensemble.dt()));
  }
  return out;
}

Trajectory composed_sample(const PolicyEnsemble& ensemble,
                           const CompositionWeights& weights,
                           const VectorXd& obs, std::uint64_t seed,
                           int steps) {
  return composed_sample_batch(ensemble, weights, {obs}, seed, steps).front();
}

std::vector<Trajectory> mode_filtering_check(
    std::shared_ptr<const DenoiserModel> policy_a,
    std::shared_ptr<const DenoiserModel> policy_b,
    const CompositionWeights& weights, const std::vector<VectorXd>& obs,
    int count, std::uint64_t seed) {
  if (count < 1) throw ContractViolation("sample count must be >= 1");
  if (obs.empty()) throw ContractViolation("need observations to condition on");
  PolicyEnsemble pair({std::move(policy_a), std::move(policy_b)});
  std::vector<VectorXd> obs_cycle;
  obs_cycle.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    obs_cycle.push_back(obs[static_cast<std::size_t>(j) % obs.size()]);
  }
  return composed_sample_batch(pair, weights, obs_cycle, seed);
}

}  // namespace dsekit
