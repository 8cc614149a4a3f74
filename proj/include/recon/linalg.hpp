#pragma once

#include <Eigen/Dense>

#include <string>

namespace recon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest absolute entry; 0 for an empty matrix.
double max_abs(const Matrix& m);

bool is_symmetric(const Matrix& m, double tol);

bool all_finite(const Matrix& m);

/// Cholesky factor of a symmetric positive definite matrix. Throws
/// NotPositiveDefinite naming `what` when the factorization fails.
Eigen::LLT<Matrix> require_cholesky(const Matrix& m, const std::string& what);

/// Extreme eigenvalues of a symmetric matrix.
struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};
EigenRange symmetric_eigen_range(const Matrix& m);

/// Largest eigenvalue modulus of a general square matrix.
double spectral_radius(const Matrix& m);

/// Largest singular value.
double largest_singular_value(const Matrix& m);

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  void merge(const CompensatedSum& other) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace recon
