#pragma once

#include "dsekit/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace dsekit {

/// One standard (distal) Denavit-Hartenberg row:
///   T(q) = RotZ(theta_offset + q) * TransZ(d) * TransX(a) * RotX(alpha).
/// All joints are revolute; q is the joint variable.
struct DhRow {
  double a = 0.0;             // link length
  double alpha = 0.0;         // link twist [rad]
  double d = 0.0;             // link offset
  double theta_offset = 0.0;  // constant joint angle offset [rad]
};

/// Serial revolute chain with one 3D control point per link. Control points
/// are expressed in the owning link's frame (default: link-frame origin) and
/// are the task-space probes used by the FK kernel and by data generation.
class KinematicChain {
 public:
  KinematicChain(std::vector<DhRow> links,
                 std::vector<std::array<double, 2>> joint_limits,
                 std::vector<Vector3d> control_points = {},
                 VectorXd home = VectorXd(), std::string name = "chain");

  int dof() const { return static_cast<int>(links_.size()); }
  int control_point_count() const { return dof(); }

  const std::vector<DhRow>& links() const { return links_; }
  const std::vector<std::array<double, 2>>& joint_limits() const {
    return limits_;
  }
  const std::vector<Vector3d>& control_points() const { return points_; }
  /// Nominal start configuration for skill generation (defaults to limit
  /// midpoints).
  const VectorXd& home() const { return home_; }
  const std::string& name() const { return name_; }

  /// World positions of all M control points at configuration q.
  std::vector<Vector3d> forward_kinematics(const VectorXd& q) const;
  /// World position of the last link's control point.
  Vector3d end_effector(const VectorXd& q) const;

  /// 3 x dof positional Jacobian of the selected control point. Columns of
  /// joints distal to the control point are zero.
  MatrixXd jacobian(const VectorXd& q, int point_index) const;

  VectorXd clamp_to_limits(const VectorXd& q) const;
  bool within_limits(const VectorXd& q, double tol = 1e-9) const;

  /// Planar arm: n unit-ish links rotating about z, limits +-2.9 rad.
  static KinematicChain planar(int links, double link_length = 1.0);

 private:
  void check_dof(const VectorXd& q) const;
  Eigen::Matrix4d link_transform(int i, double q) const;

  std::vector<DhRow> links_;
  std::vector<std::array<double, 2>> limits_;
  std::vector<Vector3d> points_;
  VectorXd home_;
  std::string name_;
};

/// Damped least-squares velocity solve: qdot = J^T (J J^T + lambda^2 I)^-1 v.
/// Well-defined for every J when lambda > 0; lambda = 0 with a singular J
/// raises NumericError instead of returning non-finite values.
VectorXd damped_ls_solve(const MatrixXd& jacobian, const Vector3d& task_velocity,
                         double lambda);

/// Damped least-squares step for the chain's end-effector control point.
VectorXd damped_ls_ik_step(const KinematicChain& chain, const VectorXd& q,
                           const Vector3d& task_velocity, double lambda);

}  // namespace dsekit
