#include "dsekit/common.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace dsekit {

VectorXd Trajectory::flatten() const {
  const int L = length();
  const int n = dof();
  VectorXd v(L * n);
  for (int k = 0; k < L; ++k) {
    v.segment(k * n, n) = steps.row(k).transpose();
  }
  return v;
}

Trajectory Trajectory::unflatten(const VectorXd& v, int length, int dof,
                                 double dt) {
  if (length < 1 || dof < 1 || v.size() != length * dof) {
    std::ostringstream msg;
    msg << "unflatten: vector size " << v.size() << " does not match " << length
        << "x" << dof;
    throw ContractViolation(msg.str());
  }
  Trajectory t;
  t.steps.resize(length, dof);
  for (int k = 0; k < length; ++k) {
    t.steps.row(k) = v.segment(k * dof, dof).transpose();
  }
  t.dt = dt;
  return t;
}

void Trajectory::validate() const {
  if (length() < 2) throw ContractViolation("trajectory needs at least 2 steps");
  if (!(dt > 0.0)) throw ContractViolation("trajectory dt must be positive");
  if (!steps.allFinite()) throw ContractViolation("trajectory has non-finite entries");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t substream(std::uint64_t root, std::string_view label,
                        std::uint64_t index) {
  return splitmix64(splitmix64(root ^ fnv1a(label)) ^ index);
}

double Rng::uniform() {
  // 53-bit mantissa, value in [0, 1)
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; u1 in (0,1] avoids log(0)
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

std::uint64_t Rng::integer(std::uint64_t bound) {
  if (bound == 0) throw ContractViolation("Rng::integer bound must be > 0");
  // rejection sampling for an unbiased draw
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v = gen_();
  while (v >= limit) v = gen_();
  return v % bound;
}

VectorXd Rng::normal_vector(int n) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal();
  return v;
}

VectorXd Rng::uniform_vector(int n, double lo, double hi) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace dsekit
