#include "dsekit/diffusion.hpp"

#include <cmath>
#include <sstream>

namespace dsekit {

// ---------------------------------------------------------------------------
// NoiseSchedule
// ---------------------------------------------------------------------------

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps()) throw ContractViolation("diffusion step out of range");
  return betas(t - 1);
}

double NoiseSchedule::alpha(int t) const {
  if (t < 1 || t > steps()) throw ContractViolation("diffusion step out of range");
  return alphas(t - 1);
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps()) throw ContractViolation("diffusion step out of range");
  return alpha_bars(t - 1);
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta_start,
                                    double beta_end) {
  if (steps < 1) throw ContractViolation("schedule needs at least one step");
  VectorXd betas(steps);
  for (int i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    betas(i) = beta_start + f * (beta_end - beta_start);
  }
  return from_alphas(VectorXd::Ones(steps) - betas);
}

NoiseSchedule NoiseSchedule::from_alphas(const VectorXd& alphas) {
  NoiseSchedule s;
  s.alphas = alphas;
  s.betas = VectorXd::Ones(alphas.size()) - alphas;
  s.alpha_bars.resize(alphas.size());
  double prod = 1.0;
  for (int i = 0; i < alphas.size(); ++i) {
    prod *= alphas(i);
    s.alpha_bars(i) = prod;
  }
  s.validate();
  return s;
}

void NoiseSchedule::validate() const {
  if (betas.size() < 1) throw ContractViolation("empty noise schedule");
  if (alphas.size() != betas.size() || alpha_bars.size() != betas.size()) {
    throw ContractViolation("noise schedule arrays disagree in length");
  }
  double prev = 1.0;
  for (int i = 0; i < alphas.size(); ++i) {
    if (!(alphas(i) > 0.0 && alphas(i) < 1.0)) {
      throw ContractViolation("schedule alphas must lie in (0, 1)");
    }
    if (!(alpha_bars(i) < prev)) {
      throw ContractViolation("alpha_bars must be strictly decreasing");
    }
    prev = alpha_bars(i);
  }
}

bool NoiseSchedule::terminal_is_gaussian() const {
  return alpha_bars(alpha_bars.size() - 1) < 1e-2;
}

bool NoiseSchedule::operator==(const NoiseSchedule& other) const {
  return betas.size() == other.betas.size() && betas == other.betas;
}

VectorXd forward_diffuse(const NoiseSchedule& schedule, const VectorXd& a0,
                         int t, const VectorXd& noise) {
  if (t < 0 || t > schedule.steps()) {
    throw ContractViolation("forward_diffuse: step out of range");
  }
  if (noise.size() != a0.size()) {
    throw ContractViolation("forward_diffuse: noise dimension mismatch");
  }
  const double abar = schedule.alpha_bar(t);
  return std::sqrt(abar) * a0 + std::sqrt(1.0 - abar) * noise;
}

VectorXd score_from_eps(const VectorXd& eps_hat, const NoiseSchedule& schedule,
                        int t) {
  if (t < 0 || t > schedule.steps()) {
    throw ContractViolation("score_from_eps: step out of range");
  }
  const double abar = schedule.alpha_bar(t);
  if (abar == 1.0) {
    throw NumericError("score_from_eps: alpha_bar(t) == 1 (division by zero)");
  }
  return -eps_hat / std::sqrt(1.0 - abar);
}

// ---------------------------------------------------------------------------
// Normalizer
// ---------------------------------------------------------------------------

VectorXd Normalizer::normalize(const VectorXd& x) const {
  if (x.size() != dim()) throw ContractViolation("normalize: dimension mismatch");
  return (x - mean).cwiseQuotient(std);
}

VectorXd Normalizer::denormalize(const VectorXd& z) const {
  if (z.size() != dim()) throw ContractViolation("denormalize: dimension mismatch");
  return z.cwiseProduct(std) + mean;
}

Normalizer Normalizer::fit(const MatrixXd& samples_cols, double std_floor) {
  if (samples_cols.cols() < 1) throw ContractViolation("fit: no samples");
  Normalizer n;
  n.mean = samples_cols.rowwise().mean();
  MatrixXd centered = samples_cols.colwise() - n.mean;
  n.std = (centered.array().square().rowwise().mean()).sqrt().matrix();
  n.std = n.std.cwiseMax(std_floor);
  return n;
}

Normalizer Normalizer::identity(int dim) {
  Normalizer n;
  n.mean = VectorXd::Zero(dim);
  n.std = VectorXd::Ones(dim);
  return n;
}

bool Normalizer::operator==(const Normalizer& other) const {
  return mean.size() == other.mean.size() && mean == other.mean &&
         std == other.std;
}

// ---------------------------------------------------------------------------
// Denoiser model
// ---------------------------------------------------------------------------

VectorXd time_embedding(int t, int dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw ContractViolation("time embedding dim must be even and >= 2");
  }
  const int half = dim / 2;
  VectorXd emb(dim);
  for (int i = 0; i < half; ++i) {
    const double freq =
        half == 1 ? 1.0
                  : std::exp(-std::log(10000.0) * i / static_cast<double>(half - 1));
    emb(2 * i) = std::sin(t * freq);
    emb(2 * i + 1) = std::cos(t * freq);
  }
  return emb;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractViolation("epochs must be >= 1");
  if (batch_size < 1) throw ContractViolation("batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractViolation("learning rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ContractViolation("momentum must lie in [0, 1)");
  }
}

DenoiserModel::DenoiserModel(int traj_len, int dof, double dt,
                             NoiseSchedule schedule, Normalizer traj_norm,
                             Normalizer obs_norm, std::vector<int> hidden,
                             int time_embed_dim, std::string label)
    : traj_len_(traj_len),
      dof_(dof),
      dt_(dt),
      schedule_(std::move(schedule)),
      traj_norm_(std::move(traj_norm)),
      obs_norm_(std::move(obs_norm)),
      hidden_(std::move(hidden)),
      time_dim_(time_embed_dim),
      label_(std::move(label)) {
  if (traj_len_ < 2) throw ContractViolation("model trajectory length must be >= 2");
  if (dof_ < 1) throw ContractViolation("model DoF must be >= 1");
  if (!(dt_ > 0.0)) throw ContractViolation("model dt must be > 0");
  if (hidden_.empty()) throw ContractViolation("model needs hidden layers");
  for (int h : hidden_) {
    if (h < 1) throw ContractViolation("hidden layer sizes must be >= 1");
  }
  schedule_.validate();
  if (traj_norm_.dim() != traj_dim()) {
    throw ContractViolation("trajectory normalizer dimension mismatch");
  }
  if (obs_norm_.dim() != dof_) {
    throw ContractViolation("observation normalizer dimension mismatch");
  }

  std::vector<int> dims;
  dims.push_back(input_dim());
  for (int h : hidden_) dims.push_back(h);
  dims.push_back(traj_dim());
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    weights_.emplace_back(MatrixXd::Zero(dims[i + 1], dims[i]));
    biases_.emplace_back(VectorXd::Zero(dims[i + 1]));
  }
}

void DenoiserModel::init_parameters(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    MatrixXd& w = weights_[l];
    const double fan_in = static_cast<double>(w.cols());
    const bool last = l + 1 == weights_.size();
    // He init for hidden layers; near-zero last layer so eps_hat starts ~0.
    const double scale =
        last ? 1e-2 / std::sqrt(fan_in) : std::sqrt(2.0 / fan_in);
    for (int c = 0; c < w.cols(); ++c) {
      for (int r = 0; r < w.rows(); ++r) w(r, c) = scale * rng.normal();
    }
    biases_[l].setZero();
  }
}

namespace {

inline MatrixXd silu(const MatrixXd& a) {
  return a.array() / (1.0 + (-a.array()).exp());
}

inline MatrixXd silu_derivative(const MatrixXd& a) {
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-a.array()).exp());
  return (sig * (1.0 + a.array() * (1.0 - sig))).matrix();
}

}  // namespace

MatrixXd DenoiserModel::assemble_input(const MatrixXd& z_t, const MatrixXd& obs,
                                       const std::vector<int>& ts) const {
  const int B = static_cast<int>(z_t.cols());
  if (z_t.rows() != traj_dim()) {
    throw ContractViolation("eps: trajectory dimension mismatch");
  }
  if (obs.rows() != dof_ || obs.cols() != B) {
    throw ContractViolation("eps: observation dimension mismatch");
  }
  if (static_cast<int>(ts.size()) != B) {
    throw ContractViolation("eps: one diffusion step per column required");
  }
  MatrixXd input(input_dim(), B);
  input.topRows(traj_dim()) = z_t;
  for (int b = 0; b < B; ++b) {
    if (ts[static_cast<std::size_t>(b)] < 1 ||
        ts[static_cast<std::size_t>(b)] > schedule_.steps()) {
      throw ContractViolation("eps: diffusion step out of range");
    }
    input.block(traj_dim(), b, dof_, 1) =
        obs_norm_.normalize(obs.col(b));
    input.block(traj_dim() + dof_, b, time_dim_, 1) =
        time_embedding(ts[static_cast<std::size_t>(b)], time_dim_);
  }
  return input;
}

VectorXd DenoiserModel::eps(const VectorXd& z_t, const VectorXd& obs,
                            int t) const {
  return eps_batch(z_t, obs, t).col(0);
}

MatrixXd DenoiserModel::eps_batch(const MatrixXd& z_t, const MatrixXd& obs,
                                  int t) const {
  return eps_batch(z_t, obs,
                   std::vector<int>(static_cast<std::size_t>(z_t.cols()), t));
}

MatrixXd DenoiserModel::eps_batch(const MatrixXd& z_t, const MatrixXd& obs,
                                  const std::vector<int>& ts) const {
  MatrixXd h = assemble_input(z_t, obs, ts);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    MatrixXd a = (weights_[l] * h).colwise() + biases_[l];
    h = (l + 1 == weights_.size()) ? std::move(a) : silu(a);
  }
  return h;
}

int DenoiserModel::parameter_count() const {
  int n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<int>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

VectorXd DenoiserModel::parameters() const {
  VectorXd flat(parameter_count());
  int offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto wsize = static_cast<int>(weights_[l].size());
    flat.segment(offset, wsize) =
        Eigen::Map<const VectorXd>(weights_[l].data(), wsize);
    offset += wsize;
    flat.segment(offset, biases_[l].size()) = biases_[l];
    offset += static_cast<int>(biases_[l].size());
  }
  return flat;
}

void DenoiserModel::set_parameters(const VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw ContractViolation("set_parameters: wrong flat vector size");
  }
  if (!flat.allFinite()) {
    throw ContractViolation("set_parameters: non-finite parameters");
  }
  int offset = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto wsize = static_cast<int>(weights_[l].size());
    Eigen::Map<VectorXd>(weights_[l].data(), wsize) =
        flat.segment(offset, wsize);
    offset += wsize;
    biases_[l] = flat.segment(offset, biases_[l].size());
    offset += static_cast<int>(biases_[l].size());
  }
}

// ---------------------------------------------------------------------------
// Loss and gradient
// ---------------------------------------------------------------------------

namespace {

double loss_weight(const NoiseSchedule& s, int t, LossWeighting weighting) {
  if (weighting == LossWeighting::Uniform) return 1.0;
  // Variational weight beta^2 / (2 sigma_t^2 alpha_t (1 - abar_t)) with the
  // posterior variance sigma_t^2 = (1-abar_{t-1})/(1-abar_t) beta_t and the
  // t=1 convention sigma_1^2 = beta_1.
  const double beta = s.beta(t);
  const double abar = s.alpha_bar(t);
  const double abar_prev = s.alpha_bar(t - 1);
  const double sigma2 =
      t == 1 ? beta : (1.0 - abar_prev) / (1.0 - abar) * beta;
  return beta * beta / (2.0 * sigma2 * s.alpha(t) * (1.0 - abar));
}

}  // namespace

std::pair<double, VectorXd> loss_and_gradient(const DenoiserModel& model,
                                              const MatrixXd& z0,
                                              const MatrixXd& obs,
                                              const std::vector<int>& ts,
                                              const MatrixXd& noise,
                                              LossWeighting weighting) {
  const int B = static_cast<int>(z0.cols());
  if (B < 1) throw ContractViolation("loss_and_gradient: empty batch");
  if (noise.rows() != z0.rows() || noise.cols() != B) {
    throw ContractViolation("loss_and_gradient: noise shape mismatch");
  }

  // Noisy inputs via the closed-form marginal, one diffusion step per column.
  MatrixXd z_t(z0.rows(), B);
  VectorXd lambdas(B);
  for (int b = 0; b < B; ++b) {
    const int t = ts[static_cast<std::size_t>(b)];
    const double abar = model.schedule().alpha_bar(t);
    z_t.col(b) =
        std::sqrt(abar) * z0.col(b) + std::sqrt(1.0 - abar) * noise.col(b);
    lambdas(b) = loss_weight(model.schedule(), t, weighting);
  }

  // Forward pass with cached pre-activations.
  const int n_layers = model.layer_count();
  std::vector<MatrixXd> inputs;   // input to each layer
  std::vector<MatrixXd> preacts;  // W x + b per layer
  inputs.reserve(static_cast<std::size_t>(n_layers));
  preacts.reserve(static_cast<std::size_t>(n_layers));
  MatrixXd h = model.assemble_input(z_t, obs, ts);
  for (int l = 0; l < n_layers; ++l) {
    inputs.push_back(h);
    MatrixXd a = (model.layer_weight(l) * h).colwise() + model.layer_bias(l);
    preacts.push_back(a);
    h = (l + 1 == n_layers) ? std::move(a) : silu(a);
  }

  const MatrixXd residual = h - noise;  // eps_hat - eps
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    loss += lambdas(b) * residual.col(b).squaredNorm();
  }
  loss /= B;

  // Backward pass.
  MatrixXd delta = residual;  // becomes dLoss/dA for the current layer
  for (int b = 0; b < B; ++b) delta.col(b) *= 2.0 * lambdas(b) / B;

  std::vector<MatrixXd> grad_w(static_cast<std::size_t>(n_layers));
  std::vector<VectorXd> grad_b(static_cast<std::size_t>(n_layers));
  for (int l = n_layers - 1; l >= 0; --l) {
    grad_w[static_cast<std::size_t>(l)] =
        delta * inputs[static_cast<std::size_t>(l)].transpose();
    grad_b[static_cast<std::size_t>(l)] = delta.rowwise().sum();
    if (l > 0) {
      delta = model.layer_weight(l).transpose() * delta;
      delta = delta.cwiseProduct(
          silu_derivative(preacts[static_cast<std::size_t>(l - 1)]));
    }
  }

  VectorXd flat(model.parameter_count());
  int offset = 0;
  for (int l = 0; l < n_layers; ++l) {
    const auto& gw = grad_w[static_cast<std::size_t>(l)];
    flat.segment(offset, gw.size()) =
        Eigen::Map<const VectorXd>(gw.data(), gw.size());
    offset += static_cast<int>(gw.size());
    flat.segment(offset, grad_b[static_cast<std::size_t>(l)].size()) =
        grad_b[static_cast<std::size_t>(l)];
    offset += static_cast<int>(grad_b[static_cast<std::size_t>(l)].size());
  }
  return {loss, std::move(flat)};
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

DenoiserModel train_denoiser(const DemoSet& dataset, const TrainConfig& config,
                             const NoiseSchedule& schedule,
                             const std::string& label,
                             const Normalizer* shared_traj_norm,
                             const Normalizer* shared_obs_norm) {
  if (dataset.size() == 0) throw ContractViolation("train_denoiser: empty dataset");
  dataset.validate();
  config.validate();
  schedule.validate();
  if (!schedule.terminal_is_gaussian()) {
    throw ContractViolation(
        "train_denoiser: schedule alpha_bar(T) must be < 1e-2");
  }

  const int L = dataset.length();
  const int dof = dataset.dof();
  const int traj_dim = L * dof;
  const int N = dataset.size();

  MatrixXd z0_raw(traj_dim, N);
  MatrixXd obs_raw(dof, N);
  for (int i = 0; i < N; ++i) {
    z0_raw.col(i) = dataset.demos[static_cast<std::size_t>(i)].traj.flatten();
    obs_raw.col(i) = dataset.demos[static_cast<std::size_t>(i)].obs;
  }

  const Normalizer traj_norm =
      shared_traj_norm ? *shared_traj_norm : Normalizer::fit(z0_raw);
  const Normalizer obs_norm =
      shared_obs_norm ? *shared_obs_norm : Normalizer::fit(obs_raw);
  if (traj_norm.dim() != traj_dim || obs_norm.dim() != dof) {
    throw ContractViolation("train_denoiser: normalizer dimension mismatch");
  }

  MatrixXd z0(traj_dim, N);
  for (int i = 0; i < N; ++i) z0.col(i) = traj_norm.normalize(z0_raw.col(i));

  DenoiserModel model(L, dof, dataset.dt(), schedule, traj_norm, obs_norm,
                      {128, 128, 128}, 32, label);
  model.init_parameters(substream(config.seed, "init"));
  Rng rng(substream(config.seed, "train"));

  VectorXd params = model.parameters();
  VectorXd velocity = VectorXd::Zero(params.size());
  VectorXd adam_m = VectorXd::Zero(params.size());
  VectorXd adam_v = VectorXd::Zero(params.size());
  long adam_step = 0;

  model.meta.seed = config.seed;
  model.meta.epochs = config.epochs;
  model.meta.epoch_losses.reserve(static_cast<std::size_t>(config.epochs));

  const int T = schedule.steps();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<int> perm = rng.permutation(N);
    double epoch_loss = 0.0;
    for (int start = 0; start < N; start += config.batch_size) {
      const int B = std::min(config.batch_size, N - start);
      MatrixXd z0_b(traj_dim, B), obs_b(dof, B), noise(traj_dim, B);
      std::vector<int> ts(static_cast<std::size_t>(B));
      for (int b = 0; b < B; ++b) {
        const int idx = perm[static_cast<std::size_t>(start + b)];
        z0_b.col(b) = z0.col(idx);
        obs_b.col(b) = obs_raw.col(idx);
        ts[static_cast<std::size_t>(b)] =
            1 + static_cast<int>(rng.integer(static_cast<std::uint64_t>(T)));
        noise.col(b) = rng.normal_vector(traj_dim);
      }

      auto [loss, grad] =
          loss_and_gradient(model, z0_b, obs_b, ts, noise, config.weighting);
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch));
      }
      epoch_loss += loss * B;

      if (config.optimizer == OptimizerKind::SgdMomentum) {
        velocity = config.momentum * velocity - config.learning_rate * grad;
        params += velocity;
      } else {
        ++adam_step;
        adam_m = 0.9 * adam_m + 0.1 * grad;
        adam_v = 0.999 * adam_v + 0.001 * grad.cwiseProduct(grad).eval();
        const double mc = 1.0 - std::pow(0.9, static_cast<double>(adam_step));
        const double vc = 1.0 - std::pow(0.999, static_cast<double>(adam_step));
        params -= config.learning_rate *
                  (adam_m / mc)
                      .cwiseQuotient((adam_v / vc).cwiseSqrt().array().matrix() +
                                     VectorXd::Constant(params.size(), 1e-8));
      }
      if (!params.allFinite()) {
        throw NumericError("training diverged at epoch " +
                           std::to_string(epoch));
      }
      model.set_parameters(params);
    }
    model.meta.epoch_losses.push_back(epoch_loss / N);
  }

  model.meta.first_loss = model.meta.epoch_losses.front();
  model.meta.final_loss = model.meta.epoch_losses.back();
  if (config.require_improvement &&
      !(model.meta.final_loss < model.meta.first_loss)) {
    throw NumericError("training made no progress (final loss " +
                       std::to_string(model.meta.final_loss) +
                       " >= first loss " +
                       std::to_string(model.meta.first_loss) + ")");
  }
  return model;
}

// ---------------------------------------------------------------------------
// Ancestral sampling
// ---------------------------------------------------------------------------

MatrixXd ancestral_sample_batch(const NoiseSchedule& schedule,
                                const EpsFn& eps_fn, int dim, int batch,
                                std::uint64_t seed, int steps) {
  schedule.validate();
  if (dim < 1 || batch < 1) {
    throw ContractViolation("ancestral sampling needs dim >= 1, batch >= 1");
  }
  const int T = schedule.steps();
  if (steps == 0) steps = T;
  if (steps < 1 || steps > T) {
    throw ContractViolation("sampler step count must lie in 1..T");
  }

  // Evenly strided sub-schedule ending at T. steps == T yields 1..T and the
  // updates below reduce to the textbook DDPM recursion.
  std::vector<int> ts(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    ts[static_cast<std::size_t>(k)] = static_cast<int>(
        std::lround(static_cast<double>(k + 1) * T / steps));
  }
  for (int k = 1; k < steps; ++k) {
    if (ts[static_cast<std::size_t>(k)] <= ts[static_cast<std::size_t>(k - 1)]) {
      throw ContractViolation("sampler sub-schedule must be strictly increasing");
    }
  }

  // One noise stream per chain: batch composition never changes a chain.
  std::vector<Rng> rngs;
  rngs.reserve(static_cast<std::size_t>(batch));
  for (int j = 0; j < batch; ++j) {
    rngs.emplace_back(substream(seed, "chain", static_cast<std::uint64_t>(j)));
  }

  MatrixXd z(dim, batch);
  for (int j = 0; j < batch; ++j) z.col(j) = rngs[static_cast<std::size_t>(j)].normal_vector(dim);

  for (int k = steps - 1; k >= 0; --k) {
    const int t = ts[static_cast<std::size_t>(k)];
    const int t_prev = k > 0 ? ts[static_cast<std::size_t>(k - 1)] : 0;
    const double abar = schedule.alpha_bar(t);
    const double abar_prev = schedule.alpha_bar(t_prev);
    const double alpha_eff = abar / abar_prev;
    const double beta_eff = 1.0 - alpha_eff;

    const MatrixXd eps = eps_fn(z, t);
    if (eps.rows() != dim || eps.cols() != batch) {
      throw ContractViolation("eps callback returned wrong shape");
    }
    z = (z - (beta_eff / std::sqrt(1.0 - abar)) * eps) / std::sqrt(alpha_eff);
    if (!z.allFinite()) {
      throw NumericError("ancestral sampling produced non-finite values");
    }
    if (k > 0) {
      const double sigma =
          std::sqrt((1.0 - abar_prev) / (1.0 - abar) * beta_eff);
      for (int j = 0; j < batch; ++j) {
        z.col(j) += sigma * rngs[static_cast<std::size_t>(j)].normal_vector(dim);
      }
    }
  }
  return z;
}

Trajectory sample(const DenoiserModel& model, const VectorXd& obs,
                  std::uint64_t seed, int steps) {
  if (obs.size() != model.dof()) {
    throw ContractViolation("sample: observation dimension mismatch");
  }
  MatrixXd obs_mat = obs;
  const EpsFn eps_fn = [&](const MatrixXd& z_t, int t) {
    return model.eps_batch(z_t, obs_mat, t);
  };
  const MatrixXd z0 = ancestral_sample_batch(model.schedule(), eps_fn,
                                             model.traj_dim(), 1, seed, steps);
  return Trajectory::unflatten(model.traj_normalizer().denormalize(z0.col(0)),
                               model.traj_len(), model.dof(), model.dt());
}

}  // namespace dsekit
