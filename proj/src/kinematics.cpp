#include "dsekit/kinematics.hpp"

#include <cmath>
#include <sstream>

namespace dsekit {

KinematicChain::KinematicChain(std::vector<DhRow> links,
                               std::vector<std::array<double, 2>> joint_limits,
                               std::vector<Vector3d> control_points,
                               VectorXd home, std::string name)
    : links_(std::move(links)),
      limits_(std::move(joint_limits)),
      points_(std::move(control_points)),
      home_(std::move(home)),
      name_(std::move(name)) {
  if (links_.empty()) throw ContractViolation("chain needs at least one link");
  if (limits_.size() != links_.size()) {
    throw ContractViolation("chain needs one joint limit pair per link");
  }
  for (const auto& lim : limits_) {
    if (!(lim[0] < lim[1])) {
      throw ContractViolation("joint limits must satisfy lo < hi");
    }
  }
  if (points_.empty()) {
    points_.assign(links_.size(), Vector3d::Zero());
  }
  if (points_.size() != links_.size()) {
    throw ContractViolation("chain needs one control point per link");
  }
  if (home_.size() == 0) {
    home_.resize(static_cast<int>(links_.size()));
    for (int j = 0; j < home_.size(); ++j) {
      home_(j) = 0.5 * (limits_[j][0] + limits_[j][1]);
    }
  }
  if (home_.size() != static_cast<int>(links_.size())) {
    throw ContractViolation("home configuration length must equal DoF");
  }
  if (!within_limits(home_, 1e-9)) {
    throw ContractViolation("home configuration violates joint limits");
  }
}

void KinematicChain::check_dof(const VectorXd& q) const {
  if (q.size() != dof()) {
    std::ostringstream msg;
    msg << "configuration has " << q.size() << " joints, chain has " << dof();
    throw ContractViolation(msg.str());
  }
  if (!q.allFinite()) throw ContractViolation("configuration has non-finite values");
}

Eigen::Matrix4d KinematicChain::link_transform(int i, double q) const {
  const DhRow& row = links_[static_cast<std::size_t>(i)];
  const double theta = row.theta_offset + q;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Eigen::Matrix4d T;
  // RotZ(theta) * TransZ(d) * TransX(a) * RotX(alpha)
  T << ct, -st * ca, st * sa, row.a * ct,
       st, ct * ca, -ct * sa, row.a * st,
       0.0, sa, ca, row.d,
       0.0, 0.0, 0.0, 1.0;
  return T;
}

std::vector<Vector3d> KinematicChain::forward_kinematics(
    const VectorXd& q) const {
  check_dof(q);
  std::vector<Vector3d> out(points_.size());
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  for (int i = 0; i < dof(); ++i) {
    T = T * link_transform(i, q(i));
    out[static_cast<std::size_t>(i)] =
        T.topLeftCorner<3, 3>() * points_[static_cast<std::size_t>(i)] +
        T.topRightCorner<3, 1>();
  }
  return out;
}

Vector3d KinematicChain::end_effector(const VectorXd& q) const {
  return forward_kinematics(q).back();
}

MatrixXd KinematicChain::jacobian(const VectorXd& q, int point_index) const {
  check_dof(q);
  if (point_index < 0 || point_index >= control_point_count()) {
    throw ContractViolation("jacobian: control point index out of range");
  }

  // Joint axes and frame origins along the chain. Joint i rotates about the
  // z axis of frame i-1 (frame -1 = world).
  std::vector<Vector3d> axes(static_cast<std::size_t>(dof()));
  std::vector<Vector3d> origins(static_cast<std::size_t>(dof()));
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  Vector3d target = Vector3d::Zero();
  for (int i = 0; i < dof(); ++i) {
    axes[static_cast<std::size_t>(i)] = T.block<3, 1>(0, 2);
    origins[static_cast<std::size_t>(i)] = T.topRightCorner<3, 1>();
    T = T * link_transform(i, q(i));
    if (i == point_index) {
      target = T.topLeftCorner<3, 3>() *
                   points_[static_cast<std::size_t>(point_index)] +
               T.topRightCorner<3, 1>();
    }
  }

  MatrixXd jac = MatrixXd::Zero(3, dof());
  for (int j = 0; j <= point_index; ++j) {
    jac.col(j) = axes[static_cast<std::size_t>(j)].cross(
        target - origins[static_cast<std::size_t>(j)]);
  }
  return jac;
}

VectorXd KinematicChain::clamp_to_limits(const VectorXd& q) const {
  check_dof(q);
  VectorXd out = q;
  for (int j = 0; j < dof(); ++j) {
    out(j) = std::clamp(out(j), limits_[static_cast<std::size_t>(j)][0],
                        limits_[static_cast<std::size_t>(j)][1]);
  }
  return out;
}

bool KinematicChain::within_limits(const VectorXd& q, double tol) const {
  check_dof(q);
  for (int j = 0; j < dof(); ++j) {
    if (q(j) < limits_[static_cast<std::size_t>(j)][0] - tol ||
        q(j) > limits_[static_cast<std::size_t>(j)][1] + tol) {
      return false;
    }
  }
  return true;
}

KinematicChain KinematicChain::planar(int links, double link_length) {
  if (links < 1) throw ContractViolation("planar chain needs at least one link");
  std::vector<DhRow> rows(static_cast<std::size_t>(links),
                          DhRow{link_length, 0.0, 0.0, 0.0});
  std::vector<std::array<double, 2>> limits(static_cast<std::size_t>(links),
                                            std::array<double, 2>{-2.9, 2.9});
  // Elbow-bent home: the straight configuration is singular and sits on the
  // workspace boundary.
  VectorXd home(links);
  for (int j = 0; j < links; ++j) {
    home(j) = j == 0 ? 0.2 : (j % 2 == 1 ? 1.2 : -1.5);
  }
  return KinematicChain(std::move(rows), std::move(limits), {}, std::move(home),
                        "planar" + std::to_string(links));
}

VectorXd damped_ls_solve(const MatrixXd& jacobian, const Vector3d& task_velocity,
                         double lambda) {
  if (lambda < 0.0) throw ContractViolation("damping must be >= 0");
  if (!task_velocity.allFinite()) {
    throw ContractViolation("task velocity must be finite");
  }
  if (jacobian.rows() != 3) {
    throw ContractViolation("damped_ls_solve expects a 3 x DoF Jacobian");
  }

  Eigen::Matrix3d gram = jacobian * jacobian.transpose();
  gram.diagonal().array() += lambda * lambda;

  if (lambda == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(gram);
    if (eig.eigenvalues().minCoeff() < 1e-12) {
      throw NumericError(
          "damped_ls_solve: singular Jacobian with zero damping");
    }
  }
  return jacobian.transpose() * gram.ldlt().solve(task_velocity);
}

VectorXd damped_ls_ik_step(const KinematicChain& chain, const VectorXd& q,
                           const Vector3d& task_velocity, double lambda) {
  return damped_ls_solve(chain.jacobian(q, chain.control_point_count() - 1),
                         task_velocity, lambda);
}

}  // namespace dsekit
