#include "dsekit/mmdfk.hpp"

#include <algorithm>
#include <cmath>

namespace dsekit {

void KernelParams::validate() const {
  if (!(gamma > 0.0)) throw ContractViolation("kernel gamma must be > 0");
  if (!chain) throw ContractViolation("kernel params need a kinematic chain");
  if (link_weights.size() != 0) {
    if (link_weights.size() != chain->control_point_count()) {
      throw ContractViolation("one link weight per control point required");
    }
    double sum = 0.0;
    for (int i = 0; i < link_weights.size(); ++i) {
      if (!(link_weights(i) >= 0.0)) {
        throw ContractViolation("link weights must be non-negative");
      }
      sum += link_weights(i);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ContractViolation("link weights must sum to 1");
    }
  }
}

VectorXd KernelParams::effective_link_weights() const {
  if (link_weights.size() != 0) return link_weights;
  const int m = chain->control_point_count();
  return VectorXd::Constant(m, 1.0 / m);
}

double k_rq(const Vector3d& x, const Vector3d& y, double gamma) {
  if (!(gamma > 0.0)) throw ContractViolation("kernel gamma must be > 0");
  const double d2 = (x - y).squaredNorm();
  const double base = 1.0 + 0.5 * gamma * d2;
  return 1.0 / (base * base);
}

namespace {

// Control-point positions for every step of a trajectory, row-major
// [step][point].
using FkCache = std::vector<std::vector<Vector3d>>;

FkCache fk_cache(const KinematicChain& chain, const Trajectory& traj) {
  FkCache cache(static_cast<std::size_t>(traj.length()));
  for (int k = 0; k < traj.length(); ++k) {
    cache[static_cast<std::size_t>(k)] =
        chain.forward_kinematics(traj.steps.row(k).transpose());
  }
  return cache;
}

double k_fk_cached(const std::vector<Vector3d>& pts1,
                   const std::vector<Vector3d>& pts2, const VectorXd& weights,
                   double gamma) {
  double acc = 0.0;
  for (std::size_t m = 0; m < pts1.size(); ++m) {
    acc += weights(static_cast<int>(m)) * k_rq(pts1[m], pts2[m], gamma);
  }
  return acc;
}

double k_traj_cached(const FkCache& c1, const FkCache& c2,
                     const VectorXd& weights, double gamma) {
  double acc = 0.0;
  for (std::size_t k = 0; k < c1.size(); ++k) {
    acc += k_fk_cached(c1[k], c2[k], weights, gamma);
  }
  return acc / static_cast<double>(c1.size());
}

// Values are sorted before compensated summation: the result is independent
// of enumeration order, so mmd_fk(X, Y) == mmd_fk(Y, X) exactly.
double stable_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    const double y = v - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double estimator(const std::vector<FkCache>& xs, const std::vector<FkCache>& ys,
                 const VectorXd& weights, double gamma) {
  const std::size_t m = xs.size(), n = ys.size();
  std::vector<double> xx, yy, xy;
  xx.reserve(m * (m - 1));
  yy.reserve(n * (n - 1));
  xy.reserve(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i != j) xx.push_back(k_traj_cached(xs[i], xs[j], weights, gamma));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) yy.push_back(k_traj_cached(ys[i], ys[j], weights, gamma));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      xy.push_back(k_traj_cached(xs[i], ys[j], weights, gamma));
    }
  }
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  return stable_sum(xx) / (md * (md - 1.0)) + stable_sum(yy) / (nd * (nd - 1.0)) -
         2.0 * stable_sum(xy) / (md * nd);
}

// Pooled-configuration variant: each step of each trajectory becomes one
// sample; single-step FK caches reuse the same estimator.
std::vector<FkCache> pool_steps(const std::vector<FkCache>& trajs) {
  std::vector<FkCache> pooled;
  for (const FkCache& c : trajs) {
    for (const auto& step : c) pooled.push_back(FkCache{step});
  }
  return pooled;
}

void check_sets(const KernelParams& params, const std::vector<Trajectory>& X,
                const std::vector<Trajectory>& Y) {
  params.validate();
  if (X.size() < 2 || Y.size() < 2) {
    throw ContractViolation("mmd_fk needs at least 2 trajectories per side");
  }
  const int L = X.front().length();
  const int dof = params.chain->dof();
  for (const auto* set : {&X, &Y}) {
    for (const Trajectory& t : *set) {
      if (t.length() != L) {
        throw ContractViolation("mmd_fk trajectories must share one length");
      }
      if (t.dof() != dof) {
        throw ContractViolation("trajectory DoF does not match the chain");
      }
    }
  }
}

}  // namespace

double k_fk(const KernelParams& params, const VectorXd& q1,
            const VectorXd& q2) {
  params.validate();
  const auto pts1 = params.chain->forward_kinematics(q1);
  const auto pts2 = params.chain->forward_kinematics(q2);
  return k_fk_cached(pts1, pts2, params.effective_link_weights(), params.gamma);
}

double k_traj(const KernelParams& params, const Trajectory& t1,
              const Trajectory& t2) {
  params.validate();
  if (t1.length() != t2.length()) {
    throw ContractViolation("k_traj requires equal trajectory lengths");
  }
  return k_traj_cached(fk_cache(*params.chain, t1), fk_cache(*params.chain, t2),
                       params.effective_link_weights(), params.gamma);
}

double mmd_fk(const KernelParams& params, const std::vector<Trajectory>& X,
              const std::vector<Trajectory>& Y) {
  check_sets(params, X, Y);

  std::vector<FkCache> xs, ys;
  xs.reserve(X.size());
  ys.reserve(Y.size());
  for (const Trajectory& t : X) xs.push_back(fk_cache(*params.chain, t));
  for (const Trajectory& t : Y) ys.push_back(fk_cache(*params.chain, t));

  const VectorXd weights = params.effective_link_weights();
  if (params.mode == TrajKernelMode::PooledConfigs) {
    return estimator(pool_steps(xs), pool_steps(ys), weights, params.gamma);
  }
  return estimator(xs, ys, weights, params.gamma);
}

double median_heuristic_gamma(const KernelParams& params,
                              const std::vector<Trajectory>& X,
                              const std::vector<Trajectory>& Y) {
  if (!params.chain) throw ContractViolation("kernel params need a kinematic chain");
  if (X.empty() || Y.empty()) {
    throw ContractViolation("median heuristic needs non-empty sets");
  }
  const VectorXd weights = params.effective_link_weights();

  // Deterministic subsample: up to 8 trajectories and 8 timesteps per side,
  // evenly strided.
  auto pick = [](int available, int want) {
    std::vector<int> idx;
    const int count = std::min(available, want);
    for (int i = 0; i < count; ++i) {
      idx.push_back(static_cast<int>(
          static_cast<long>(i) * available / count));
    }
    return idx;
  };

  auto gather = [&](const std::vector<Trajectory>& set) {
    std::vector<std::vector<Vector3d>> configs;
    for (int ti : pick(static_cast<int>(set.size()), 8)) {
      const Trajectory& t = set[static_cast<std::size_t>(ti)];
      for (int k : pick(t.length(), 8)) {
        configs.push_back(
            params.chain->forward_kinematics(t.steps.row(k).transpose()));
      }
    }
    return configs;
  };

  const auto xs = gather(X);
  const auto ys = gather(Y);
  std::vector<double> d2;
  d2.reserve(xs.size() * ys.size());
  for (const auto& px : xs) {
    for (const auto& py : ys) {
      double acc = 0.0;
      for (std::size_t m = 0; m < px.size(); ++m) {
        acc += weights(static_cast<int>(m)) * (px[m] - py[m]).squaredNorm();
      }
      d2.push_back(acc);
    }
  }
  std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
  const double med = d2[d2.size() / 2];
  return med > 1e-12 ? 1.0 / med : 1.0;
}

}  // namespace dsekit
