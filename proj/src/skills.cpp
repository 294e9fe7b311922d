#include "dsekit/skills.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

namespace dsekit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector3d unit_axis(int axis) {
  Vector3d u = Vector3d::Zero();
  u(axis) = 1.0;
  return u;
}

// In-plane orthonormal pair for the plane normal to `axis`, chosen so the
// ring starts along the first axis after it (CircleX draws in the YZ plane).
std::pair<Vector3d, Vector3d> plane_basis(int axis) {
  switch (axis) {
    case 0: return {Vector3d(0, 1, 0), Vector3d(0, 0, 1)};
    case 1: return {Vector3d(0, 0, 1), Vector3d(1, 0, 0)};
    default: return {Vector3d(1, 0, 0), Vector3d(0, 1, 0)};
  }
}

}  // namespace

std::string skill_kind_name(SkillKind kind) {
  switch (kind) {
    case SkillKind::LineX: return "line-x";
    case SkillKind::LineY: return "line-y";
    case SkillKind::LineZ: return "line-z";
    case SkillKind::CircleX: return "circle-x";
    case SkillKind::CircleY: return "circle-y";
    case SkillKind::CircleZ: return "circle-z";
    case SkillKind::OscX: return "osc-x";
    case SkillKind::OscY: return "osc-y";
    case SkillKind::OscZ: return "osc-z";
    case SkillKind::Spiral: return "spiral";
    case SkillKind::Step: return "step";
    case SkillKind::SMotion: return "s-motion";
    case SkillKind::Spring: return "spring";
    case SkillKind::MultiModalLine: return "mm-line";
  }
  throw ContractViolation("unknown skill kind");
}

SkillKind skill_kind_from_name(const std::string& name) {
  static const std::pair<const char*, SkillKind> table[] = {
      {"line-x", SkillKind::LineX},     {"line-y", SkillKind::LineY},
      {"line-z", SkillKind::LineZ},     {"circle-x", SkillKind::CircleX},
      {"circle-y", SkillKind::CircleY}, {"circle-z", SkillKind::CircleZ},
      {"osc-x", SkillKind::OscX},       {"osc-y", SkillKind::OscY},
      {"osc-z", SkillKind::OscZ},       {"spiral", SkillKind::Spiral},
      {"step", SkillKind::Step},        {"s-motion", SkillKind::SMotion},
      {"spring", SkillKind::Spring},    {"mm-line", SkillKind::MultiModalLine},
  };
  for (const auto& [n, k] : table) {
    if (name == n) return k;
  }
  throw ContractViolation("unknown skill name: " + name);
}

void SkillSpec::validate() const {
  if (!(amplitude > 0.0)) throw ContractViolation("skill amplitude must be > 0");
  if (!(speed > 0.0)) throw ContractViolation("skill speed must be > 0");
  if (!(turns > 0.0)) throw ContractViolation("skill turns must be > 0");
  if (axis < 0 || axis > 2) throw ContractViolation("skill axis must be 0..2");
  if (start_jitter < 0.0) throw ContractViolation("start jitter must be >= 0");
  if (kind == SkillKind::MultiModalLine) {
    if (dir_a.norm() < 1e-12 || dir_b.norm() < 1e-12 || !dir_a.allFinite() ||
        !dir_b.allFinite()) {
      throw ContractViolation("mm-line directions must be finite and nonzero");
    }
  }
}

std::string SkillSpec::label() const { return skill_kind_name(kind); }

int DemoSet::length() const {
  if (demos.empty()) throw ContractViolation("empty demo set");
  return demos.front().traj.length();
}

int DemoSet::dof() const {
  if (demos.empty()) throw ContractViolation("empty demo set");
  return demos.front().traj.dof();
}

double DemoSet::dt() const {
  if (demos.empty()) throw ContractViolation("empty demo set");
  return demos.front().traj.dt;
}

void DemoSet::validate() const {
  if (demos.empty()) throw ContractViolation("empty demo set");
  const int L = demos.front().traj.length();
  const int n = demos.front().traj.dof();
  const double step_dt = demos.front().traj.dt;
  for (const Demo& d : demos) {
    d.traj.validate();
    if (d.traj.length() != L || d.traj.dof() != n) {
      throw ContractViolation("demo set mixes trajectory shapes");
    }
    if (d.traj.dt != step_dt) {
      throw ContractViolation("demo set mixes time steps");
    }
    if (d.obs.size() != n || !d.obs.allFinite()) {
      throw ContractViolation("demo observation has wrong shape");
    }
  }
}

std::vector<Trajectory> DemoSet::trajectories() const {
  std::vector<Trajectory> out;
  out.reserve(demos.size());
  for (const Demo& d : demos) out.push_back(d.traj);
  return out;
}

std::vector<JointConfig> DemoSet::observations() const {
  std::vector<JointConfig> out;
  out.reserve(demos.size());
  for (const Demo& d : demos) out.push_back(d.obs);
  return out;
}

DemoSet DemoSet::head(int count) const {
  if (count < 1 || count > size()) {
    throw ContractViolation("head count out of range");
  }
  DemoSet out;
  out.demos.assign(demos.begin(), demos.begin() + count);
  return out;
}

std::pair<DemoSet, DemoSet> DemoSet::split_halves() const {
  if (size() < 4) throw ContractViolation("need at least 4 demos to split");
  const int half = size() / 2;
  DemoSet a, b;
  a.demos.assign(demos.begin(), demos.begin() + half);
  b.demos.assign(demos.begin() + half, demos.begin() + 2 * half);
  return {std::move(a), std::move(b)};
}

namespace {

using PathFn = std::function<Vector3d(double)>;

// Task-space reference path starting at p0; t runs over [0, duration].
PathFn make_reference_path(const SkillSpec& spec, const Vector3d& p0,
                           double duration, const Vector3d& line_dir) {
  switch (spec.kind) {
    case SkillKind::LineX:
    case SkillKind::LineY:
    case SkillKind::LineZ:
    case SkillKind::MultiModalLine: {
      const Vector3d dir = line_dir.normalized();
      const double speed = spec.speed;
      return [p0, dir, speed](double t) { return Vector3d(p0 + dir * speed * t); };
    }
    case SkillKind::CircleX:
    case SkillKind::CircleY:
    case SkillKind::CircleZ: {
      const int axis = spec.kind == SkillKind::CircleX   ? 0
                       : spec.kind == SkillKind::CircleY ? 1
                                                         : 2;
      const auto [e1, e2] = plane_basis(axis);
      const double radius = spec.amplitude;
      const double rate = spec.speed / radius;  // tangential speed / radius
      const Vector3d center = p0 - radius * e1;
      return [center, e1, e2, radius, rate](double t) {
        return Vector3d(center + radius * (std::cos(rate * t) * e1 +
                                           std::sin(rate * t) * e2));
      };
    }
    case SkillKind::Spiral:
    case SkillKind::Spring: {
      const Vector3d u = unit_axis(spec.axis);
      const auto [e1, e2] = plane_basis(spec.axis);
      const double radius = spec.amplitude;
      const double rate = kTwoPi * spec.turns / duration;
      const double speed = spec.speed;
      return [p0, u, e1, e2, radius, rate, speed](double t) {
        return Vector3d(p0 + u * speed * t +
                        radius * ((std::cos(rate * t) - 1.0) * e1 +
                                  std::sin(rate * t) * e2));
      };
    }
    case SkillKind::Step: {
      const Vector3d u = unit_axis(spec.axis);
      const Vector3d w = unit_axis(spec.axis == 2 ? 0 : 2);  // rise direction
      const double h = spec.amplitude;
      const double speed = spec.speed;
      const double t1 = 0.4 * duration, t2 = 0.6 * duration;
      return [p0, u, w, h, speed, t1, t2](double t) {
        if (t < t1) return Vector3d(p0 + u * speed * t);
        if (t < t2) {
          return Vector3d(p0 + u * speed * t1 + w * h * (t - t1) / (t2 - t1));
        }
        return Vector3d(p0 + u * speed * (t1 + t - t2) + w * h);
      };
    }
    case SkillKind::SMotion: {
      const Vector3d u = unit_axis(spec.axis);
      const Vector3d v = unit_axis((spec.axis + 1) % 3);
      const double amp = spec.amplitude;
      const double speed = spec.speed;
      return [p0, u, v, amp, speed, duration](double t) {
        return Vector3d(p0 + u * speed * t +
                        v * amp * std::sin(kTwoPi * t / duration));
      };
    }
    default:
      throw ContractViolation("skill has no task-space reference path");
  }
}

Trajectory track_reference(const KinematicChain& chain, const VectorXd& q0,
                           const PathFn& path, int L, double dt,
                           const GenerationOptions& opt, int sample_index) {
  Trajectory traj;
  traj.steps.resize(L, chain.dof());
  traj.dt = dt;
  traj.steps.row(0) = q0.transpose();

  VectorXd q = q0;
  const double h = dt / opt.substeps;
  for (int k = 1; k < L; ++k) {
    for (int s = 1; s <= opt.substeps; ++s) {
      const double t_target = (k - 1 + static_cast<double>(s) / opt.substeps) * dt;
      const Vector3d err = path(t_target) - chain.end_effector(q);
      const VectorXd qdot = damped_ls_ik_step(chain, q, err / h, opt.lambda);
      q = chain.clamp_to_limits(q + qdot * h);
    }
    const double track_err = (chain.end_effector(q) - path(k * dt)).norm();
    if (!std::isfinite(track_err) || track_err > opt.tracking_tol) {
      std::ostringstream msg;
      msg << "sample " << sample_index << ": IK tracking error " << track_err
          << " at step " << k << " exceeds " << opt.tracking_tol
          << " (reference path unreachable?)";
      throw GenerationError(msg.str());
    }
    traj.steps.row(k) = q.transpose();
  }
  return traj;
}

// Oscillation skills hold the end-effector at its start position while one
// mid-chain joint swings; the remaining joints servo the position error.
Trajectory track_oscillation(const KinematicChain& chain, const VectorXd& q0,
                             const SkillSpec& spec, int L, double dt,
                             const GenerationOptions& opt, int sample_index) {
  const int dof = chain.dof();
  if (dof < 2) {
    throw GenerationError("oscillation skills need at least 2 joints");
  }
  const int axis = spec.kind == SkillKind::OscX   ? 0
                   : spec.kind == SkillKind::OscY ? 1
                                                  : 2;
  const int osc_joint = dof >= 4 ? 1 + axis : std::min(1, dof - 2);

  Trajectory traj;
  traj.steps.resize(L, dof);
  traj.dt = dt;
  traj.steps.row(0) = q0.transpose();

  const Vector3d p0 = chain.end_effector(q0);
  VectorXd q = q0;
  const double h = dt / opt.substeps;
  for (int k = 1; k < L; ++k) {
    for (int s = 1; s <= opt.substeps; ++s) {
      const double t = (k - 1 + static_cast<double>(s) / opt.substeps) * dt;
      const double target_angle =
          q0(osc_joint) + spec.amplitude * std::sin(spec.speed * t);
      const double osc_qdot = (target_angle - q(osc_joint)) / h;

      MatrixXd jac = chain.jacobian(q, chain.control_point_count() - 1);
      const Vector3d v_needed =
          (p0 - chain.end_effector(q)) / h - jac.col(osc_joint) * osc_qdot;
      MatrixXd jac_rest(3, dof - 1);
      int c = 0;
      for (int j = 0; j < dof; ++j) {
        if (j != osc_joint) jac_rest.col(c++) = jac.col(j);
      }
      const VectorXd qdot_rest = damped_ls_solve(jac_rest, v_needed, opt.lambda);

      VectorXd qdot(dof);
      c = 0;
      for (int j = 0; j < dof; ++j) {
        qdot(j) = (j == osc_joint) ? osc_qdot : qdot_rest(c++);
      }
      q = chain.clamp_to_limits(q + qdot * h);
    }
    const double drift = (chain.end_effector(q) - p0).norm();
    if (!std::isfinite(drift) || drift > opt.tracking_tol) {
      std::ostringstream msg;
      msg << "sample " << sample_index << ": oscillation end-effector drift "
          << drift << " at step " << k << " exceeds " << opt.tracking_tol;
      throw GenerationError(msg.str());
    }
    traj.steps.row(k) = q.transpose();
  }
  return traj;
}

}  // namespace

DemoSet generate_skill_dataset(const KinematicChain& chain,
                               const SkillSpec& spec, int count, int L,
                               double dt, std::uint64_t seed,
                               const GenerationOptions& options) {
  spec.validate();
  if (count < 1) throw ContractViolation("sample count must be >= 1");
  if (L < 2) throw ContractViolation("trajectory length must be >= 2");
  if (!(dt > 0.0)) throw ContractViolation("dt must be > 0");

  const double duration = (L - 1) * dt;
  DemoSet set;
  set.demos.reserve(static_cast<std::size_t>(count));

  for (int i = 0; i < count; ++i) {
    Rng rng(substream(seed, "sample", static_cast<std::uint64_t>(i)));

    Vector3d line_dir = spec.dir_a;
    if (spec.kind == SkillKind::MultiModalLine) {
      line_dir = (rng.integer(2) == 0) ? spec.dir_a : spec.dir_b;
    } else if (spec.kind == SkillKind::LineY) {
      line_dir = Vector3d(0, 1, 0);
    } else if (spec.kind == SkillKind::LineZ) {
      line_dir = Vector3d(0, 0, 1);
    } else if (spec.kind == SkillKind::LineX) {
      line_dir = Vector3d(1, 0, 0);
    }

    VectorXd q0 = chain.home();
    if (spec.start_jitter > 0.0) {
      q0 += rng.uniform_vector(chain.dof(), -spec.start_jitter,
                               spec.start_jitter);
    }
    q0 = chain.clamp_to_limits(q0);

    Trajectory traj;
    if (spec.kind == SkillKind::OscX || spec.kind == SkillKind::OscY ||
        spec.kind == SkillKind::OscZ) {
      traj = track_oscillation(chain, q0, spec, L, dt, options, i);
    } else {
      const PathFn path =
          make_reference_path(spec, chain.end_effector(q0), duration, line_dir);
      traj = track_reference(chain, q0, path, L, dt, options, i);
    }
    set.demos.push_back(Demo{q0, std::move(traj)});
  }
  return set;
}

}  // namespace dsekit
