#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dsekit/kinematics.hpp"
#include "dsekit/skills.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace dsekit;
constexpr double kPi = std::numbers::pi;

namespace {

VectorXd vec(std::initializer_list<double> vals) {
  VectorXd v(static_cast<int>(vals.size()));
  int i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("planar 2-link forward kinematics, straight and rotated") {
  const KinematicChain chain = KinematicChain::planar(2);

  const auto pts = chain.forward_kinematics(vec({0.0, 0.0}));
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].isApprox(Vector3d(1, 0, 0), 1e-14));
  CHECK(pts[1].isApprox(Vector3d(2, 0, 0), 1e-14));

  const auto rot = chain.forward_kinematics(vec({kPi / 2, 0.0}));
  CHECK(rot[1].x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rot[1].y() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rot[1].z() == 0.0);
}

TEST_CASE("3-link FK matches the explicit transform-product oracle") {
  const KinematicChain chain = KinematicChain::planar(3);
  const VectorXd q = vec({0.3, -0.2, 0.5});
  const auto pts = chain.forward_kinematics(q);

  // frozen values from the independent matrix-chain computation
  CHECK(pts[0].x() == doctest::Approx(0.955336489125606).epsilon(1e-12));
  CHECK(pts[0].y() == doctest::Approx(0.29552020666133955).epsilon(1e-12));
  CHECK(pts[1].x() == doctest::Approx(1.9503406544036317).epsilon(1e-12));
  CHECK(pts[1].y() == doctest::Approx(0.3953536233081677).epsilon(1e-12));
  CHECK(pts[2].x() == doctest::Approx(2.77567626931331).epsilon(1e-12));
  CHECK(pts[2].y() == doctest::Approx(0.9599960967032031).epsilon(1e-12));

  const auto oracle = oracles::fk_points(chain, q);
  for (std::size_t m = 0; m < pts.size(); ++m) {
    CHECK((pts[m] - oracle[m]).norm() < 1e-12);
  }
}

TEST_CASE("FK agrees with the oracle on twisted chains at random configs") {
  std::vector<DhRow> rows = {{0.0, kPi / 2, 0.3, 0.1},
                             {1.0, -kPi / 4, 0.05, -0.2},
                             {0.7, kPi / 3, 0.0, 0.0},
                             {0.4, 0.0, 0.2, 0.3}};
  std::vector<std::array<double, 2>> limits(4, {-3.0, 3.0});
  std::vector<Vector3d> points = {{0, 0, 0}, {0.1, 0, 0}, {0, 0.2, 0}, {0, 0, 0}};
  const KinematicChain chain(rows, limits, points);

  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd q = rng.uniform_vector(4, -2.5, 2.5);
    const auto lib = chain.forward_kinematics(q);
    const auto ora = oracles::fk_points(chain, q);
    for (std::size_t m = 0; m < lib.size(); ++m) {
      CHECK((lib[m] - ora[m]).norm() < 1e-12);
    }
  }
}

TEST_CASE("FK rejects mismatched configuration length") {
  const KinematicChain chain = KinematicChain::planar(2);
  CHECK_THROWS_AS(chain.forward_kinematics(vec({0.0})), ContractViolation);
  CHECK_THROWS_AS(chain.forward_kinematics(vec({0.0, 0.0, 0.0})),
                  ContractViolation);
}

TEST_CASE("chain construction invariants") {
  CHECK_THROWS_AS(KinematicChain({}, {}), ContractViolation);
  // limits must satisfy lo < hi
  CHECK_THROWS_AS(KinematicChain({DhRow{1, 0, 0, 0}}, {{1.0, -1.0}}),
                  ContractViolation);
  // one control point per link
  CHECK_THROWS_AS(KinematicChain({DhRow{1, 0, 0, 0}}, {{-1.0, 1.0}},
                                 {Vector3d::Zero(), Vector3d::Zero()}),
                  ContractViolation);
}

TEST_CASE("Jacobian hand cases") {
  SUBCASE("planar 2-link end point at zero") {
    const KinematicChain chain = KinematicChain::planar(2);
    const MatrixXd jac = chain.jacobian(vec({0.0, 0.0}), 1);
    CHECK(jac(0, 0) == doctest::Approx(0.0));
    CHECK(jac(1, 0) == doctest::Approx(2.0));
    CHECK(jac(0, 1) == doctest::Approx(0.0));
    CHECK(jac(1, 1) == doctest::Approx(1.0));
    CHECK(jac.row(2).norm() == doctest::Approx(0.0));
  }
  SUBCASE("1-link unit tangential velocity") {
    const KinematicChain chain = KinematicChain::planar(1);
    const MatrixXd jac = chain.jacobian(vec({0.0}), 0);
    CHECK(jac(0, 0) == doctest::Approx(0.0));
    CHECK(jac(1, 0) == doctest::Approx(1.0));
    CHECK(jac(2, 0) == doctest::Approx(0.0));
  }
  SUBCASE("columns distal to the control point are zero") {
    const KinematicChain chain = KinematicChain::planar(3);
    const MatrixXd jac = chain.jacobian(vec({0.4, -0.3, 0.9}), 0);
    CHECK(jac.col(1).norm() == 0.0);
    CHECK(jac.col(2).norm() == 0.0);
  }
  SUBCASE("control point index out of range") {
    const KinematicChain chain = KinematicChain::planar(2);
    CHECK_THROWS_AS(chain.jacobian(vec({0.0, 0.0}), 2), ContractViolation);
    CHECK_THROWS_AS(chain.jacobian(vec({0.0, 0.0}), -1), ContractViolation);
  }
}

TEST_CASE("Jacobian matches finite differences at random configurations") {
  std::vector<DhRow> rows = {{0.0, kPi / 2, 0.3, 0.0},
                             {1.0, 0.0, 0.0, 0.0},
                             {0.8, -kPi / 6, 0.1, 0.2},
                             {0.5, kPi / 2, 0.0, 0.0}};
  std::vector<std::array<double, 2>> limits(4, {-3.0, 3.0});
  const KinematicChain chain(rows, limits);

  Rng rng(1234);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd q = rng.uniform_vector(4, -2.0, 2.0);
    for (int point = 0; point < chain.control_point_count(); ++point) {
      const MatrixXd jac = chain.jacobian(q, point);
      const MatrixXd fd = oracles::fd_jacobian(chain, q, point);
      const double scale = std::max(1.0, fd.norm());
      CHECK((jac - fd).norm() / scale < 1e-5);
    }
  }
}

TEST_CASE("damped least-squares solve") {
  const MatrixXd identity = MatrixXd::Identity(3, 3);
  const Vector3d v(1.0, 0.0, 0.0);

  SUBCASE("undamped identity passes the velocity through") {
    const VectorXd qdot = damped_ls_solve(identity, v, 0.0);
    CHECK(qdot.isApprox(v, 1e-14));
  }
  SUBCASE("unit damping on identity halves the velocity") {
    const VectorXd qdot = damped_ls_solve(identity, v, 1.0);
    CHECK(qdot(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(qdot(1) == doctest::Approx(0.0));
  }
  SUBCASE("singular Jacobian with zero damping raises") {
    MatrixXd singular = MatrixXd::Zero(3, 2);
    singular(0, 0) = 1.0;  // rank 1
    CHECK_THROWS_AS(damped_ls_solve(singular, v, 0.0), NumericError);
  }
  SUBCASE("damping keeps singular systems finite") {
    MatrixXd singular = MatrixXd::Zero(3, 2);
    singular(0, 0) = 1.0;
    const VectorXd qdot = damped_ls_solve(singular, v, 0.05);
    CHECK(qdot.allFinite());
  }
  SUBCASE("negative damping is a contract violation") {
    CHECK_THROWS_AS(damped_ls_solve(identity, v, -0.1), ContractViolation);
  }
}

TEST_CASE("damped-LS stays finite for random near-singular Jacobians") {
  Rng rng(777);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd jac(3, 4);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) jac(r, c) = rng.normal();
    }
    if (trial % 3 == 0) jac.row(2).setZero();           // rank deficient
    if (trial % 4 == 0) jac *= 1e-6;                    // near zero
    const Vector3d v(rng.normal(), rng.normal(), rng.normal());
    const VectorXd qdot = damped_ls_solve(jac, v, 0.05);
    CHECK(qdot.allFinite());
  }
}

TEST_CASE("IK integration tracks a reachable displacement") {
  const KinematicChain chain = KinematicChain::planar(2);
  VectorXd q = vec({0.4, 0.6});
  const Vector3d target = chain.end_effector(q) + Vector3d(0.1, -0.05, 0.0);

  const double h = 0.01;
  for (int step = 0; step < 100; ++step) {
    const Vector3d err = target - chain.end_effector(q);
    q += damped_ls_ik_step(chain, q, err / h, 0.05) * h;
  }
  CHECK((chain.end_effector(q) - target).norm() < 1e-3);
}

TEST_CASE("line dataset stays on the analytic line") {
  const KinematicChain chain = KinematicChain::planar(3);
  SkillSpec spec;
  spec.kind = SkillKind::LineX;
  spec.speed = 0.25;
  spec.start_jitter = 0.0;  // fixed start: all samples identical

  const DemoSet set = generate_skill_dataset(chain, spec, 3, 16, 0.1, 5);
  REQUIRE(set.size() == 3);
  for (int i = 1; i < set.size(); ++i) {
    CHECK(set.demos[static_cast<std::size_t>(i)].traj.steps ==
          set.demos[0].traj.steps);
  }
  const Vector3d p0 = chain.end_effector(set.demos[0].obs);
  for (int k = 0; k < 16; ++k) {
    const Vector3d expected = p0 + Vector3d(0.25 * 0.1 * k, 0.0, 0.0);
    const Vector3d actual = chain.end_effector(
        set.demos[0].traj.steps.row(k).transpose());
    CHECK((actual - expected).norm() < 1e-3);
  }
}

TEST_CASE("circle dataset stays on the ring") {
  std::vector<DhRow> rows = {{0.0, kPi / 2, 0.3, 0.0},
                             {1.0, 0.0, 0.0, 0.0},
                             {1.0, 0.0, 0.0, 0.0}};
  std::vector<std::array<double, 2>> limits(3, {-2.9, 2.9});
  const KinematicChain chain(rows, limits, {}, vec({0.0, 0.9, -1.8}), "rrr3");

  SkillSpec spec;
  spec.kind = SkillKind::CircleX;  // ring in the YZ plane
  spec.amplitude = 0.3;
  spec.speed = 0.4;
  spec.start_jitter = 0.1;

  const DemoSet set = generate_skill_dataset(chain, spec, 4, 16, 0.1, 11);
  for (const Demo& d : set.demos) {
    const Vector3d p0 = chain.end_effector(d.obs);
    const Vector3d center = p0 - 0.3 * Vector3d(0, 1, 0);
    for (int k = 0; k < d.traj.length(); ++k) {
      const Vector3d p = chain.end_effector(d.traj.steps.row(k).transpose());
      CHECK(std::abs((p - center).norm() - 0.3) < 1e-2);
      CHECK(std::abs(p.x() - p0.x()) < 1e-2);  // plane normal to x
    }
  }
}

TEST_CASE("dataset generation contracts") {
  const KinematicChain chain = KinematicChain::planar(3);
  SkillSpec spec;

  SUBCASE("zero count") {
    CHECK_THROWS_AS(generate_skill_dataset(chain, spec, 0, 16, 0.1, 1),
                    ContractViolation);
  }
  SUBCASE("invalid skill parameters") {
    spec.amplitude = -1.0;
    CHECK_THROWS_AS(generate_skill_dataset(chain, spec, 1, 16, 0.1, 1),
                    ContractViolation);
  }
  SUBCASE("unreachable path raises a generation error naming the sample") {
    spec.kind = SkillKind::LineZ;  // planar chain cannot leave the XY plane
    try {
      generate_skill_dataset(chain, spec, 1, 16, 0.1, 1);
      FAIL("expected GenerationError");
    } catch (const GenerationError& e) {
      CHECK(std::string(e.what()).find("sample 0") != std::string::npos);
    }
  }
}

TEST_CASE("dataset generation is deterministic and respects joint limits") {
  const KinematicChain chain = KinematicChain::planar(3);
  SkillSpec spec;
  spec.kind = SkillKind::MultiModalLine;
  spec.dir_a = Vector3d(1, 0, 0);
  spec.dir_b = Vector3d(0, 1, 0);

  const DemoSet a = generate_skill_dataset(chain, spec, 8, 12, 0.1, 42);
  const DemoSet b = generate_skill_dataset(chain, spec, 8, 12, 0.1, 42);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.demos[static_cast<std::size_t>(i)].traj.steps ==
          b.demos[static_cast<std::size_t>(i)].traj.steps);  // bit-identical
    for (int k = 0; k < a.length(); ++k) {
      CHECK(chain.within_limits(
          a.demos[static_cast<std::size_t>(i)].traj.steps.row(k).transpose()));
    }
  }

  // multi-modal: both directions appear
  int along_x = 0;
  for (const Demo& d : a.demos) {
    const Vector3d delta =
        chain.end_effector(d.traj.steps.row(11).transpose()) -
        chain.end_effector(d.obs);
    if (std::abs(delta.x()) > std::abs(delta.y())) ++along_x;
  }
  CHECK(along_x > 0);
  CHECK(along_x < 8);
}

TEST_CASE("oscillation holds the end-effector while a mid joint swings") {
  const KinematicChain chain = KinematicChain::planar(3);
  SkillSpec spec;
  spec.kind = SkillKind::OscZ;
  // moderate swing: large ones drive the two compensating joints of a
  // 3-link arm through near-singular postures
  spec.amplitude = 0.25;
  spec.speed = 2.5;

  const DemoSet set = generate_skill_dataset(chain, spec, 2, 16, 0.1, 3);
  for (const Demo& d : set.demos) {
    const Vector3d p0 = chain.end_effector(d.obs);
    double max_drift = 0.0;
    double joint_swing = 0.0;
    for (int k = 0; k < d.traj.length(); ++k) {
      const Vector3d p = chain.end_effector(d.traj.steps.row(k).transpose());
      max_drift = std::max(max_drift, (p - p0).norm());
      joint_swing = std::max(joint_swing,
                             std::abs(d.traj.steps(k, 1) - d.obs(1)));
    }
    CHECK(max_drift < 5e-2);
    CHECK(joint_swing > 0.2);  // the mid joint actually moves
  }
}
