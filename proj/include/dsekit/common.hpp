#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsekit {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Joint configuration: one angle per joint, radians.
using JointConfig = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// A caller broke a documented precondition (dimension mismatch, parameter
/// out of range, invalid weights).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Missing files, unparsable JSON, inconsistent records inside a dataset.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runtime numeric failure: singular systems, diverged training, non-finite
/// intermediate values.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Data generation failed (for example IK tracking error above threshold);
/// the message names the offending sample.
class GenerationError : public NumericError {
 public:
  using NumericError::NumericError;
};

// ---------------------------------------------------------------------------
// Trajectory
// ---------------------------------------------------------------------------

/// Fixed-length sequence of joint configurations. Rows are time steps,
/// columns are joints.
struct Trajectory {
  MatrixXd steps;   // L x dof
  double dt = 0.1;  // seconds per step

  int length() const { return static_cast<int>(steps.rows()); }
  int dof() const { return static_cast<int>(steps.cols()); }

  /// Step-major flattening: [q(0); q(1); ...; q(L-1)].
  VectorXd flatten() const;
  static Trajectory unflatten(const VectorXd& v, int length, int dof,
                              double dt);

  /// Enforces L >= 2, dt > 0, finite entries.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Deterministic random streams
// ---------------------------------------------------------------------------

/// Derives a child seed from a root seed, a stream label, and an index.
/// All randomness in the library flows from one root seed through these
/// substreams, so per-sample work is order-independent: processing samples
/// serially or in parallel yields identical output.
std::uint64_t substream(std::uint64_t root, std::string_view label,
                        std::uint64_t index = 0);

/// Seeded pseudo-random stream with a portable normal generator
/// (Box-Muller over mt19937_64), so sequences depend only on the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal.
  double normal();

  /// Uniform integer in [0, bound).
  std::uint64_t integer(std::uint64_t bound);

  VectorXd normal_vector(int n);
  VectorXd uniform_vector(int n, double lo, double hi);

  /// Deterministic Fisher-Yates shuffle of 0..n-1.
  std::vector<int> permutation(int n);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dsekit
