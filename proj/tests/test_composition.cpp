#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dsekit/composition.hpp"

#include <cmath>
#include <memory>
#include <numbers>

using namespace dsekit;

namespace {

const NoiseSchedule kSchedule = NoiseSchedule::linear(40, 2e-3, 0.3);

// Model whose eps prediction is the constant vector u (all weights zero,
// output bias u).
std::shared_ptr<DenoiserModel> constant_model(const VectorXd& u) {
  auto m = std::make_shared<DenoiserModel>(
      2, 1, 0.1, kSchedule, Normalizer::identity(2), Normalizer::identity(1),
      std::vector<int>{8, 8}, 4);
  VectorXd params = VectorXd::Zero(m->parameter_count());
  params.tail(u.size()) = u;
  m->set_parameters(params);
  return m;
}

std::shared_ptr<DenoiserModel> random_model(std::uint64_t seed) {
  auto m = std::make_shared<DenoiserModel>(
      2, 1, 0.1, kSchedule, Normalizer::identity(2), Normalizer::identity(1),
      std::vector<int>{8, 8}, 4);
  m->init_parameters(seed);
  Rng rng(substream(seed, "scale"));
  m->set_parameters(m->parameters() +
                    0.3 * rng.normal_vector(m->parameter_count()));
  return m;
}

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

}  // namespace

TEST_CASE("composition weights validate the simplex") {
  VectorXd ok(2);
  ok << 0.25, 0.75;
  CHECK_NOTHROW(CompositionWeights{ok});

  VectorXd negative(2);
  negative << -0.1, 1.1;
  CHECK_THROWS_AS(CompositionWeights{negative}, ContractViolation);

  VectorXd off_sum(2);
  off_sum << 0.5, 0.6;
  CHECK_THROWS_AS(CompositionWeights{off_sum}, ContractViolation);

  CHECK_THROWS_AS(CompositionWeights{VectorXd()}, ContractViolation);

  const CompositionWeights u = CompositionWeights::uniform(4);
  CHECK(u[2] == doctest::Approx(0.25));
  const CompositionWeights e = CompositionWeights::one_hot(3, 1);
  CHECK(e[1] == 1.0);
  CHECK(e[0] == 0.0);
}

TEST_CASE("ensembles demand shared schedule and normalizers") {
  auto a = random_model(1);
  auto b = random_model(2);
  CHECK_NOTHROW(PolicyEnsemble({a, b}));

  // different schedule
  auto other = std::make_shared<DenoiserModel>(
      2, 1, 0.1, NoiseSchedule::linear(50, 2e-3, 0.3), Normalizer::identity(2),
      Normalizer::identity(1), std::vector<int>{8, 8}, 4);
  other->init_parameters(3);
  CHECK_THROWS_AS(PolicyEnsemble({a, other}), ContractViolation);

  // different normalizer
  Normalizer shifted = Normalizer::identity(2);
  shifted.mean(0) = 1.0;
  auto shifted_model = std::make_shared<DenoiserModel>(
      2, 1, 0.1, kSchedule, shifted, Normalizer::identity(1),
      std::vector<int>{8, 8}, 4);
  shifted_model->init_parameters(4);
  CHECK_THROWS_AS(PolicyEnsemble({a, shifted_model}), ContractViolation);
}

TEST_CASE("composed eps blends fixed predictions") {
  VectorXd u(2), v(2);
  u << 1.0, -2.0;
  v << 3.0, 5.0;
  const PolicyEnsemble pair({constant_model(u), constant_model(v)});
  const VectorXd z = VectorXd::Zero(2);
  const VectorXd obs = VectorXd::Zero(1);

  SUBCASE("hand-weighted blend") {
    VectorXd w(2);
    w << 0.25, 0.75;
    const VectorXd out = composed_eps(pair, CompositionWeights(w), z, obs, 5);
    CHECK(out(0) == doctest::Approx(0.25 * 1.0 + 0.75 * 3.0).epsilon(1e-15));
    CHECK(out(1) == doctest::Approx(0.25 * -2.0 + 0.75 * 5.0).epsilon(1e-15));
  }
  SUBCASE("one-hot weights reproduce the model exactly") {
    const VectorXd out =
        composed_eps(pair, CompositionWeights::one_hot(2, 1), z, obs, 5);
    CHECK(out == v);  // bit-identical
  }
  SUBCASE("identical models are a fixed point of blending") {
    const PolicyEnsemble twins({constant_model(u), constant_model(u)});
    VectorXd w(2);
    w << 0.3, 0.7;
    const VectorXd out = composed_eps(twins, CompositionWeights(w), z, obs, 5);
    CHECK(out.isApprox(u, 1e-14));
  }
  SUBCASE("weight count must match") {
    CHECK_THROWS_AS(
        composed_eps(pair, CompositionWeights::one_hot(3, 0), z, obs, 5),
        ContractViolation);
  }
}

TEST_CASE("composed eps stays in the per-coordinate hull of the members") {
  auto m1 = random_model(11);
  auto m2 = random_model(12);
  auto m3 = random_model(13);
  const PolicyEnsemble trio({m1, m2, m3});
  VectorXd w(3);
  w << 0.2, 0.5, 0.3;

  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd z = rng.normal_vector(2);
    const VectorXd obs = rng.normal_vector(1);
    const int t = 1 + static_cast<int>(rng.integer(40));
    const VectorXd e1 = m1->eps(z, obs, t);
    const VectorXd e2 = m2->eps(z, obs, t);
    const VectorXd e3 = m3->eps(z, obs, t);
    const VectorXd out = composed_eps(trio, CompositionWeights(w), z, obs, t);
    for (int d = 0; d < 2; ++d) {
      const double lo = std::min({e1(d), e2(d), e3(d)});
      const double hi = std::max({e1(d), e2(d), e3(d)});
      CHECK(out(d) >= lo - 1e-12);
      CHECK(out(d) <= hi + 1e-12);
    }
  }
}

TEST_CASE("one-hot composed sampling is bit-identical to single-model sampling") {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 16;
  cfg.learning_rate = 2e-3;

  // three models over one shared normalizer
  const DemoSet d1 = gaussian_2d_dataset({2.0, 2.0}, 24, 1);
  const DemoSet d2 = gaussian_2d_dataset({-2.0, 1.0}, 24, 2);
  const DemoSet d3 = gaussian_2d_dataset({0.0, -2.0}, 24, 3);
  MatrixXd pooled(2, 72);
  MatrixXd pooled_obs(1, 72);
  int col = 0;
  for (const DemoSet* s : {&d1, &d2, &d3}) {
    for (const Demo& d : s->demos) {
      pooled.col(col) = d.traj.flatten();
      pooled_obs.col(col) = d.obs;
      ++col;
    }
  }
  const Normalizer tn = Normalizer::fit(pooled);
  const Normalizer on = Normalizer::fit(pooled_obs);

  std::vector<std::shared_ptr<const DenoiserModel>> models;
  int idx = 0;
  for (const DemoSet* s : {&d1, &d2, &d3}) {
    TrainConfig c = cfg;
    c.seed = static_cast<std::uint64_t>(100 + idx++);
    models.push_back(std::make_shared<DenoiserModel>(
        train_denoiser(*s, c, kSchedule, "m" + std::to_string(idx), &tn, &on)));
  }
  const PolicyEnsemble ensemble(models);
  const VectorXd obs = VectorXd::Zero(1);

  for (int k = 0; k < 3; ++k) {
    const Trajectory solo =
        sample(*models[static_cast<std::size_t>(k)], obs, 555);
    const Trajectory composed =
        composed_sample(ensemble, CompositionWeights::one_hot(3, k), obs, 555);
    CHECK(solo.steps == composed.steps);  // byte-for-byte
  }
}

TEST_CASE("joint permutation of models and weights leaves samples unchanged") {
  auto m1 = random_model(21);
  auto m2 = random_model(22);
  const VectorXd obs = VectorXd::Zero(1);

  VectorXd w12(2), w21(2);
  w12 << 0.3, 0.7;
  w21 << 0.7, 0.3;
  const Trajectory a = composed_sample(PolicyEnsemble({m1, m2}),
                                       CompositionWeights(w12), obs, 7);
  const Trajectory b = composed_sample(PolicyEnsemble({m2, m1}),
                                       CompositionWeights(w21), obs, 7);
  // two-term blends commute exactly in IEEE arithmetic
  CHECK(a.steps == b.steps);

  auto m3 = random_model(23);
  VectorXd w123(3), w312(3);
  w123 << 0.2, 0.5, 0.3;
  w312 << 0.3, 0.2, 0.5;
  const Trajectory c = composed_sample(PolicyEnsemble({m1, m2, m3}),
                                       CompositionWeights(w123), obs, 7);
  const Trajectory d = composed_sample(PolicyEnsemble({m3, m1, m2}),
                                       CompositionWeights(w312), obs, 7);
  CHECK((c.steps - d.steps).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("equal-weight blend of two Gaussians lands between the modes") {
  TrainConfig cfg;
  cfg.epochs = 120;
  cfg.batch_size = 32;
  cfg.learning_rate = 2e-3;

  const DemoSet d1 = gaussian_2d_dataset({3.0, 3.0}, 100, 5);
  const DemoSet d2 = gaussian_2d_dataset({-3.0, -3.0}, 100, 6);
  MatrixXd pooled(2, 200);
  MatrixXd pooled_obs(1, 200);
  int col = 0;
  for (const DemoSet* s : {&d1, &d2}) {
    for (const Demo& d : s->demos) {
      pooled.col(col) = d.traj.flatten();
      pooled_obs.col(col) = d.obs;
      ++col;
    }
  }
  const Normalizer tn = Normalizer::fit(pooled);
  const Normalizer on = Normalizer::fit(pooled_obs);

  TrainConfig c1 = cfg;
  c1.seed = 41;
  TrainConfig c2 = cfg;
  c2.seed = 42;
  auto m1 = std::make_shared<DenoiserModel>(
      train_denoiser(d1, c1, kSchedule, "g+", &tn, &on));
  auto m2 = std::make_shared<DenoiserModel>(
      train_denoiser(d2, c2, kSchedule, "g-", &tn, &on));
  const PolicyEnsemble pair({m1, m2});

  const std::vector<VectorXd> obs(64, VectorXd::Zero(1));
  const auto project = [](const std::vector<Trajectory>& ts) {
    double acc = 0.0;
    for (const Trajectory& t : ts) acc += (t.steps(0, 0) + t.steps(1, 0));
    return acc / (std::numbers::sqrt2 * static_cast<double>(ts.size()));
  };

  const double lo = project(composed_sample_batch(
      pair, CompositionWeights::one_hot(2, 1), obs, 91));
  const double mid = project(composed_sample_batch(
      pair, CompositionWeights::uniform(2), obs, 92));
  const double hi = project(composed_sample_batch(
      pair, CompositionWeights::one_hot(2, 0), obs, 93));
  CHECK(lo < mid);
  CHECK(mid < hi);
  CHECK(std::abs(mid) < 2.0);  // near the midpoint between the modes
}

TEST_CASE("composing a policy with itself is degenerate") {
  auto m = random_model(31);
  const std::vector<VectorXd> obs(6, VectorXd::Zero(1));

  const std::vector<Trajectory> composed = mode_filtering_check(
      m, m, CompositionWeights::uniform(2), obs, 6, 1212);
  const std::vector<Trajectory> solo = composed_sample_batch(
      PolicyEnsemble({m}), CompositionWeights::one_hot(1, 0), obs, 1212);
  REQUIRE(composed.size() == solo.size());
  for (std::size_t i = 0; i < composed.size(); ++i) {
    CHECK(composed[i].steps == solo[i].steps);  // 0.5 e + 0.5 e == e exactly
  }
}

TEST_CASE("zero-weight models are never evaluated") {
  // a model whose forward pass would overflow if it ran
  auto poison = std::make_shared<DenoiserModel>(
      2, 1, 0.1, kSchedule, Normalizer::identity(2), Normalizer::identity(1),
      std::vector<int>{8, 8}, 4);
  poison->set_parameters(
      VectorXd::Constant(poison->parameter_count(), 1e300));

  auto sane = constant_model(VectorXd::Zero(2));
  const PolicyEnsemble pair({sane, poison});
  VectorXd w(2);
  w << 1.0, 0.0;
  const VectorXd z = VectorXd::Zero(2);
  const VectorXd obs = VectorXd::Zero(1);
  const VectorXd out = composed_eps(pair, CompositionWeights(w), z, obs, 3);
  CHECK(out.allFinite());
}
