#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dsekit/diffusion.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace dsekit;

namespace {

// Constant trajectory dataset: the degenerate distribution every sampler
// test can verify against.
DemoSet constant_dataset(const VectorXd& step_values, int length, int copies) {
  DemoSet set;
  for (int i = 0; i < copies; ++i) {
    Demo d;
    d.obs = step_values;
    d.traj.dt = 0.1;
    d.traj.steps = step_values.transpose().replicate(length, 1);
    set.demos.push_back(std::move(d));
  }
  return set;
}

// 2D points as 2-step 1-DoF trajectories (see the toy experiment).
DemoSet gaussian_2d_dataset(const Eigen::Vector2d& mean, int count,
                            std::uint64_t seed) {
  DemoSet set;
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

DenoiserModel small_model(int traj_len = 2, int dof = 1,
                          std::vector<int> hidden = {8, 8},
                          std::uint64_t seed = 5) {
  const NoiseSchedule schedule = NoiseSchedule::linear(20, 0.02, 0.3);
  DenoiserModel model(traj_len, dof, 0.1, schedule,
                      Normalizer::identity(traj_len * dof),
                      Normalizer::identity(dof), std::move(hidden), 4);
  model.init_parameters(seed);
  return model;
}

}  // namespace

TEST_CASE("linear schedule shape") {
  const NoiseSchedule s = NoiseSchedule::linear();
  CHECK(s.steps() == 100);
  CHECK(s.beta(1) == doctest::Approx(1e-4));
  CHECK(s.beta(100) == doctest::Approx(0.2));
  CHECK(s.terminal_is_gaussian());
  CHECK(s.alpha_bar(0) == 1.0);
  for (int t = 1; t <= s.steps(); ++t) {
    CHECK(s.alpha(t) > 0.0);
    CHECK(s.alpha(t) < 1.0);
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
}

TEST_CASE("schedule validation rejects flat or out-of-range alphas") {
  CHECK_THROWS_AS(NoiseSchedule::from_alphas(VectorXd::Ones(3)),
                  ContractViolation);
  VectorXd bad(2);
  bad << 0.5, 1.5;
  CHECK_THROWS_AS(NoiseSchedule::from_alphas(bad), ContractViolation);
  CHECK_THROWS_AS(NoiseSchedule::from_alphas(VectorXd()), ContractViolation);
}

TEST_CASE("forward diffuse marginal") {
  SUBCASE("t = 0 is the identity boundary") {
    const NoiseSchedule s = NoiseSchedule::linear(10, 0.05, 0.3);
    VectorXd a0(2), noise(2);
    a0 << 1.5, -2.0;
    noise << 0.3, 0.7;
    CHECK(forward_diffuse(s, a0, 0, noise) == a0);
  }
  SUBCASE("hand-evaluated marginal at alpha_bar = 0.25") {
    const NoiseSchedule s =
        NoiseSchedule::from_alphas(VectorXd::Constant(1, 0.25));
    VectorXd a0(2), noise(2);
    a0 << 2.0, 0.0;
    noise << 0.0, 1.0;
    const VectorXd at = forward_diffuse(s, a0, 1, noise);
    CHECK(at(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(at(1) == doctest::Approx(std::sqrt(0.75)).epsilon(1e-14));
  }
  SUBCASE("pure-noise limit") {
    // alpha_bar(5) = 1e-5
    const NoiseSchedule s =
        NoiseSchedule::from_alphas(VectorXd::Constant(5, 0.1));
    VectorXd a0(2), noise(2);
    a0 << 1.0, 1.0;
    noise << 0.3, -0.7;
    CHECK((forward_diffuse(s, a0, 5, noise) - noise).norm() < 1e-2);
  }
  SUBCASE("contract violations") {
    const NoiseSchedule s = NoiseSchedule::linear(10, 0.05, 0.3);
    VectorXd a0 = VectorXd::Zero(2), noise = VectorXd::Zero(2);
    CHECK_THROWS_AS(forward_diffuse(s, a0, 11, noise), ContractViolation);
    CHECK_THROWS_AS(forward_diffuse(s, a0, -1, noise), ContractViolation);
    CHECK_THROWS_AS(forward_diffuse(s, a0, 3, VectorXd::Zero(3)),
                    ContractViolation);
  }
}

TEST_CASE("composed per-step kernels match the closed-form marginal") {
  const NoiseSchedule s = NoiseSchedule::linear(100);
  const int t_star = 40;
  VectorXd a0(2);
  a0 << 0.7, -1.3;

  const int n = 10000;
  Rng rng(321);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Vector2d sq = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    VectorXd x = a0;
    for (int t = 1; t <= t_star; ++t) {
      x = std::sqrt(s.alpha(t)) * x +
          std::sqrt(1.0 - s.alpha(t)) * rng.normal_vector(2);
    }
    mean += x.head<2>();
    sq += x.cwiseAbs2().head<2>();
  }
  mean /= n;
  sq /= n;

  const double abar = s.alpha_bar(t_star);
  const double var_true = 1.0 - abar;
  for (int d = 0; d < 2; ++d) {
    const double mean_true = std::sqrt(abar) * a0(d);
    const double sigma_mean = std::sqrt(var_true / n);
    CHECK(std::abs(mean(d) - mean_true) < 3.0 * sigma_mean);
    const double var_est = sq(d) - mean(d) * mean(d);
    const double sigma_var = var_true * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::abs(var_est - var_true) < 3.0 * sigma_var);
  }
}

TEST_CASE("score from eps") {
  SUBCASE("zero prediction gives zero score") {
    const NoiseSchedule s = NoiseSchedule::linear(10, 0.05, 0.3);
    CHECK(score_from_eps(VectorXd::Zero(3), s, 5).norm() == 0.0);
  }
  SUBCASE("hand case at alpha_bar 0.75") {
    const NoiseSchedule s =
        NoiseSchedule::from_alphas(VectorXd::Constant(1, 0.75));
    VectorXd eps(2);
    eps << 1.0, 0.0;
    const VectorXd score = score_from_eps(eps, s, 1);
    CHECK(score(0) == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(score(1) == 0.0);
  }
  SUBCASE("alpha_bar == 1 is a division by zero") {
    const NoiseSchedule s = NoiseSchedule::linear(10, 0.05, 0.3);
    CHECK_THROWS_AS(score_from_eps(VectorXd::Zero(2), s, 0), NumericError);
  }
}

TEST_CASE("trained score points toward the data mean (1D Gaussian oracle)") {
  // data: both trajectory entries ~ N(3, 0.25)
  DemoSet data;
  Rng gen(17);
  for (int i = 0; i < 300; ++i) {
    Demo d;
    d.obs = VectorXd::Zero(1);
    d.traj.dt = 1.0;
    d.traj.steps.resize(2, 1);
    d.traj.steps(0, 0) = 3.0 + 0.5 * gen.normal();
    d.traj.steps(1, 0) = 3.0 + 0.5 * gen.normal();
    data.demos.push_back(std::move(d));
  }
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 64;
  cfg.learning_rate = 2e-3;
  cfg.seed = 3;
  const NoiseSchedule schedule = NoiseSchedule::linear(60, 1e-3, 0.25);
  const DenoiserModel model = train_denoiser(data, cfg, schedule);

  // In normalized coordinates the data is ~ N(0, 1); at diffusion step t the
  // marginal stays N(0, 1) and the analytic score at z is -z. Check sign and
  // rough magnitude at a few probe points.
  const VectorXd obs = VectorXd::Zero(1);
  for (const int t : {10, 30}) {
    for (const double z : {-1.2, -0.4, 0.8, 1.5}) {
      const VectorXd z_t = VectorXd::Constant(2, z);
      const VectorXd score =
          score_from_eps(model.eps(z_t, obs, t), model.schedule(), t);
      for (int d = 0; d < 2; ++d) {
        CHECK(score(d) * z < 0.0);  // points back toward the mean
        CHECK(std::abs(score(d) - (-z)) < 0.75);
      }
    }
  }
}

TEST_CASE("normalizer fit and round trip") {
  MatrixXd samples(2, 4);
  samples << 1.0, 3.0, 5.0, 7.0,
             2.0, 2.0, 2.0, 2.0;  // constant row hits the floor
  const Normalizer n = Normalizer::fit(samples);
  CHECK(n.mean(0) == doctest::Approx(4.0));
  CHECK(n.std(1) == doctest::Approx(1e-3));  // floored

  VectorXd x(2);
  x << 6.0, 2.0;
  CHECK(n.denormalize(n.normalize(x)).isApprox(x, 1e-12));
  CHECK_THROWS_AS(n.normalize(VectorXd::Zero(3)), ContractViolation);
}

TEST_CASE("loss gradient matches central finite differences") {
  DenoiserModel model = small_model();
  Rng rng(11);
  const int B = 3;
  MatrixXd z0(2, B), obs(1, B), noise(2, B);
  std::vector<int> ts = {3, 11, 19};
  for (int b = 0; b < B; ++b) {
    z0.col(b) = rng.normal_vector(2);
    obs.col(b) = rng.normal_vector(1);
    noise.col(b) = rng.normal_vector(2);
  }

  for (const LossWeighting weighting :
       {LossWeighting::Uniform, LossWeighting::ScheduleSnr}) {
    for (int point = 0; point < 2; ++point) {
      model.set_parameters(model.parameters() +
                           0.05 * rng.normal_vector(model.parameter_count()));
      const auto [loss, grad] =
          loss_and_gradient(model, z0, obs, ts, noise, weighting);
      CHECK(std::isfinite(loss));

      const auto loss_at = [&](const VectorXd& p) {
        DenoiserModel probe = model;
        probe.set_parameters(p);
        return loss_and_gradient(probe, z0, obs, ts, noise, weighting).first;
      };
      const VectorXd fd = oracles::fd_gradient(loss_at, model.parameters());
      CHECK((grad - fd).norm() / std::max(1.0, fd.norm()) < 1e-4);
    }
  }
}

TEST_CASE("identity fixture: exact prediction gives zero loss and gradient") {
  DenoiserModel model = small_model();
  // zero all parameters, then set the output bias: eps_hat == u everywhere
  VectorXd params = VectorXd::Zero(model.parameter_count());
  VectorXd u(2);
  u << 0.4, -0.9;
  params.tail(2) = u;
  model.set_parameters(params);

  MatrixXd z0 = MatrixXd::Zero(2, 2);
  MatrixXd obs = MatrixXd::Zero(1, 2);
  MatrixXd noise(2, 2);
  noise.col(0) = u;
  noise.col(1) = u;
  const auto [loss, grad] = loss_and_gradient(model, z0, obs, {4, 9}, noise,
                                              LossWeighting::Uniform);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(grad.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("uniform and schedule-weighted losses differ") {
  DenoiserModel model = small_model();
  Rng rng(23);
  MatrixXd z0(2, 4), obs(1, 4), noise(2, 4);
  for (int b = 0; b < 4; ++b) {
    z0.col(b) = rng.normal_vector(2);
    obs.col(b) = rng.normal_vector(1);
    noise.col(b) = rng.normal_vector(2);
  }
  const std::vector<int> ts = {2, 7, 13, 20};
  const double uniform =
      loss_and_gradient(model, z0, obs, ts, noise, LossWeighting::Uniform).first;
  const double weighted =
      loss_and_gradient(model, z0, obs, ts, noise, LossWeighting::ScheduleSnr)
          .first;
  CHECK(uniform != weighted);
}

TEST_CASE("initial loss approximates the trajectory dimension") {
  // With a near-zero output layer the expected squared residual per sample
  // is E||eps||^2 = dim.
  const NoiseSchedule schedule = NoiseSchedule::linear(50, 1e-3, 0.25);
  DenoiserModel model(4, 2, 0.1, schedule, Normalizer::identity(8),
                      Normalizer::identity(2), {32, 32}, 8);
  model.init_parameters(9);

  Rng rng(31);
  const int B = 256;
  MatrixXd z0(8, B), obs(2, B), noise(8, B);
  std::vector<int> ts(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    z0.col(b) = rng.normal_vector(8);
    obs.col(b) = rng.normal_vector(2);
    noise.col(b) = rng.normal_vector(8);
    ts[static_cast<std::size_t>(b)] = 1 + static_cast<int>(rng.integer(50));
  }
  const double loss =
      loss_and_gradient(model, z0, obs, ts, noise, LossWeighting::Uniform).first;
  CHECK(loss > 0.8 * 8);
  CHECK(loss < 1.2 * 8);
}

TEST_CASE("training contracts") {
  const NoiseSchedule schedule = NoiseSchedule::linear(50, 1e-3, 0.25);
  TrainConfig cfg;
  cfg.epochs = 2;

  SUBCASE("empty dataset") {
    DemoSet empty;
    CHECK_THROWS_AS(train_denoiser(empty, cfg, schedule), ContractViolation);
  }
  SUBCASE("schedule must end near pure noise") {
    const NoiseSchedule weak = NoiseSchedule::linear(5, 1e-4, 1e-3);
    const DemoSet data = constant_dataset(VectorXd::Zero(2), 4, 4);
    CHECK_THROWS_AS(train_denoiser(data, cfg, weak), ContractViolation);
  }
  SUBCASE("divergence names the epoch") {
    DemoSet data = gaussian_2d_dataset({2.0, 2.0}, 16, 1);
    TrainConfig diverge;
    diverge.epochs = 4;
    diverge.optimizer = OptimizerKind::SgdMomentum;
    diverge.learning_rate = 1e14;
    diverge.require_improvement = false;
    try {
      train_denoiser(data, diverge, schedule);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
  }
}

TEST_CASE("training on a constant trajectory reproduces it") {
  VectorXd values(2);
  values << 0.7, -0.4;
  const DemoSet data = constant_dataset(values, 6, 8);

  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.batch_size = 8;
  cfg.learning_rate = 2e-3;
  cfg.seed = 7;
  const NoiseSchedule schedule = NoiseSchedule::linear(60, 1e-3, 0.25);
  const DenoiserModel model = train_denoiser(data, cfg, schedule);

  CHECK(model.meta.final_loss < model.meta.first_loss);
  CHECK(static_cast<int>(model.meta.epoch_losses.size()) == cfg.epochs);

  const Trajectory traj = sample(model, values, 99);
  REQUIRE(traj.length() == 6);
  REQUIRE(traj.dof() == 2);
  const MatrixXd target = values.transpose().replicate(6, 1);
  const double rms = std::sqrt((traj.steps - target).squaredNorm() /
                               static_cast<double>(traj.steps.size()));
  CHECK(rms < 0.1);
}

TEST_CASE("sampling determinism and seed sensitivity") {
  const DemoSet data = gaussian_2d_dataset({1.0, -1.0}, 48, 13);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 16;
  cfg.learning_rate = 2e-3;
  cfg.seed = 5;
  const NoiseSchedule schedule = NoiseSchedule::linear(60, 1e-3, 0.25);
  const DenoiserModel model = train_denoiser(data, cfg, schedule);

  const VectorXd obs = VectorXd::Zero(1);
  const Trajectory a = sample(model, obs, 42);
  const Trajectory b = sample(model, obs, 42);
  CHECK(a.steps == b.steps);  // bit-identical

  const Trajectory c = sample(model, obs, 43);
  CHECK(a.steps != c.steps);

  // strided sub-schedule sampling stays in the data's range
  const Trajectory d = sample(model, obs, 44, 20);
  CHECK(d.steps.allFinite());
  CHECK(d.steps.cwiseAbs().maxCoeff() < 6.0);
}

TEST_CASE("training is deterministic given the seed") {
  const DemoSet data = gaussian_2d_dataset({0.5, 0.5}, 24, 2);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 8;
  cfg.seed = 31;
  const NoiseSchedule schedule = NoiseSchedule::linear(40, 2e-3, 0.3);
  const DenoiserModel a = train_denoiser(data, cfg, schedule);
  const DenoiserModel b = train_denoiser(data, cfg, schedule);
  CHECK(a.parameters() == b.parameters());
  CHECK(a.meta.epoch_losses == b.meta.epoch_losses);
}

TEST_CASE("model trained on a 2D Gaussian recovers its mean") {
  const DemoSet data = gaussian_2d_dataset({5.0, 5.0}, 300, 8);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 64;
  cfg.learning_rate = 2e-3;
  cfg.seed = 8;
  const DenoiserModel model =
      train_denoiser(data, cfg, NoiseSchedule::linear(100));

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const Trajectory t = sample(model, VectorXd::Zero(1),
                                substream(1234, "eval", static_cast<std::uint64_t>(i)));
    mean += Eigen::Vector2d(t.steps(0, 0), t.steps(1, 0));
  }
  mean /= n;
  CHECK((mean - Eigen::Vector2d(5.0, 5.0)).norm() < 1.0);
}

TEST_CASE("time embedding shape and range") {
  const VectorXd emb = time_embedding(17, 32);
  CHECK(emb.size() == 32);
  CHECK(emb.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  CHECK_THROWS_AS(time_embedding(1, 3), ContractViolation);
  // distinct steps embed differently
  CHECK((time_embedding(3, 16) - time_embedding(4, 16)).norm() > 1e-3);
}
