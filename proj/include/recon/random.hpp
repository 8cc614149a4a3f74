#pragma once

#include "recon/linalg.hpp"

#include <cstdint>
#include <random>

namespace recon {

/// Seeded generator with a platform-independent stream: mt19937_64 bits are
/// converted to doubles here rather than through <random> distributions,
/// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal, Marsaglia polar method.
  double normal();
  /// rows x cols standard normals, filled column by column.
  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace recon
