#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace phaselab {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using VertexField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// A mesh or profile that cannot be built as requested (size caps, budget).
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A revolution profile that admits no isometric embedding (|psi'| > 1).
struct EmbeddabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operator assembly hit a degenerate element (non-finite cotangent).
struct AssemblyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A linear solve or function evaluation produced non-finite values.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An iteration stopped before reaching its requested tolerance.
/// Carries the residual history for diagnosis.
struct NonconvergenceError : std::runtime_error {
  std::vector<double> residual_trace;
  NonconvergenceError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), residual_trace(std::move(trace)) {}
};

/// A result that converged but cannot meet its accuracy contract.
struct AccuracyError : std::runtime_error {
  std::vector<double> residual_trace;
  explicit AccuracyError(const std::string& what, std::vector<double> trace = {})
      : std::runtime_error(what), residual_trace(std::move(trace)) {}
};

/// An experiment outcome that contradicts the phenomenon it verifies.
/// Never downgraded to a warning.
struct TheoremViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deterministic RNG with a platform-independent uniform mapping.
/// mt19937_64 output is fixed by the standard; the double mapping uses the
/// top 53 bits, so streams are reproducible across compilers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

/// SplitMix64 hash step; used to derive independent per-cell seeds from a
/// base seed without coupling cells to execution order.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace phaselab
