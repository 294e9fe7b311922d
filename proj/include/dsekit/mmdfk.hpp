#pragma once

#include "dsekit/common.hpp"
#include "dsekit/kinematics.hpp"

#include <memory>
#include <vector>

namespace dsekit {

/// How a configuration kernel is lifted to fixed-length trajectories.
enum class TrajKernelMode {
  /// Mean of per-timestep kernel values over aligned steps (default; an
  /// average of positive-definite kernels stays positive definite).
  TimestepAveraged,
  /// Pool every step of every trajectory into one configuration set and run
  /// the estimator on configurations (sensitivity-check mode).
  PooledConfigs,
};

/// Parameters of the forward-kinematics kernel.
struct KernelParams {
  double gamma = 1.0;  // rational-quadratic width, > 0
  std::shared_ptr<const KinematicChain> chain;
  /// Optional per-control-point weights summing to 1; empty = uniform 1/M.
  VectorXd link_weights;
  TrajKernelMode mode = TrajKernelMode::TimestepAveraged;

  void validate() const;
  /// Effective weight vector (uniform when link_weights is empty).
  VectorXd effective_link_weights() const;
};

/// Second-order rational quadratic kernel (1 + gamma/2 ||x-y||^2)^-2,
/// in (0,1], equal to 1 iff x == y.
double k_rq(const Vector3d& x, const Vector3d& y, double gamma);

/// Forward-kinematics kernel: weighted mean of k_rq over control-point
/// positions of the two configurations.
double k_fk(const KernelParams& params, const VectorXd& q1, const VectorXd& q2);

/// Aligned-timestep average of k_fk over two equal-length trajectories.
double k_traj(const KernelParams& params, const Trajectory& t1,
              const Trajectory& t2);

/// Unbiased squared-MMD estimate between two trajectory sets under the FK
/// kernel (diagonal-excluded within-set sums). Symmetric in (X, Y); may be
/// slightly negative. Requires at least two elements per side. Control-point
/// positions are computed once per trajectory and reused across all kernel
/// evaluations.
double mmd_fk(const KernelParams& params, const std::vector<Trajectory>& X,
              const std::vector<Trajectory>& Y);

/// Median-heuristic kernel width: 1 / median of mean-over-control-points
/// squared FK distances over a deterministic subsample of cross pairs
/// (evenly strided trajectories and timesteps). Falls back to 1 when the
/// median distance is zero.
double median_heuristic_gamma(const KernelParams& params,
                              const std::vector<Trajectory>& X,
                              const std::vector<Trajectory>& Y);

}  // namespace dsekit
