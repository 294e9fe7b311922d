#pragma once

#include "dsekit/common.hpp"
#include "dsekit/kinematics.hpp"

#include <string>
#include <vector>

namespace dsekit {

enum class SkillKind {
  LineX,
  LineY,
  LineZ,
  CircleX,
  CircleY,
  CircleZ,
  OscX,
  OscY,
  OscZ,
  Spiral,
  Step,
  SMotion,
  Spring,
  MultiModalLine,
};

std::string skill_kind_name(SkillKind kind);
SkillKind skill_kind_from_name(const std::string& name);

/// Parametric task-space motion tracked by damped-LS differential IK.
///
/// Field use per kind:
///  - Line*:          constant velocity `speed` along the axis.
///  - Circle*:        ring of radius `amplitude` in the plane normal to the
///                    axis, tangential speed `speed`, starting at the initial
///                    end-effector point.
///  - Osc*:           end-effector held at its initial position by IK on the
///                    remaining joints while the middle joint swings
///                    sinusoidally, amplitude `amplitude` [rad], angular rate
///                    `speed` [rad/s].
///  - Spiral/Spring:  circle of radius `amplitude` normal to `axis` plus
///                    axial drift; `turns` revolutions over the trajectory,
///                    drift speed `speed` along the axis.
///  - Step:           XZ step profile: forward, up by `amplitude`, forward;
///                    horizontal speed `speed`.
///  - SMotion:        one sine period of lateral amplitude `amplitude` while
///                    advancing along the axis at `speed`.
///  - MultiModalLine: per-sample coin flip between straight lines along
///                    `dir_a` and `dir_b` at `speed`.
struct SkillSpec {
  SkillKind kind = SkillKind::LineX;
  double amplitude = 0.3;
  double speed = 0.25;
  double turns = 1.0;
  int axis = 0;  // 0=x 1=y 2=z, for Spiral/Spring/Step/SMotion
  Vector3d dir_a{1.0, 0.0, 0.0};
  Vector3d dir_b{0.0, 1.0, 0.0};
  /// Uniform per-joint start jitter around the chain home [rad]; 0 fixes
  /// the start configuration exactly.
  double start_jitter = 0.15;

  void validate() const;
  std::string label() const;
};

/// Observation + trajectory pair: the unit record of every dataset.
struct Demo {
  JointConfig obs;  // initial configuration, equals traj.steps.row(0)
  Trajectory traj;
};

/// Few-shot demonstration set D. All trajectories share length, DoF and dt.
struct DemoSet {
  std::vector<Demo> demos;

  int size() const { return static_cast<int>(demos.size()); }
  int length() const;
  int dof() const;
  double dt() const;
  void validate() const;

  std::vector<Trajectory> trajectories() const;
  std::vector<JointConfig> observations() const;

  /// First `count` records (for demo-count sweeps).
  DemoSet head(int count) const;
  /// Even split into halves (self-comparison baselines).
  std::pair<DemoSet, DemoSet> split_halves() const;
};

struct GenerationOptions {
  double lambda = 0.05;       // damped-LS damping
  int substeps = 8;           // IK integration substeps per trajectory step
  double tracking_tol = 5e-2; // max allowed task-space tracking error
};

/// Generates `count` demonstrations of the skill on the chain: the reference
/// path is tracked with damped-LS IK from a jittered home configuration.
/// Deterministic given (spec, seed, count); sample i depends only on
/// substream(seed, "sample", i).
DemoSet generate_skill_dataset(const KinematicChain& chain,
                               const SkillSpec& spec, int count, int L,
                               double dt, std::uint64_t seed,
                               const GenerationOptions& options = {});

}  // namespace dsekit
