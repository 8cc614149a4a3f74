#include "recon/linalg.hpp"

#include "recon/error.hpp"

#include <cmath>

namespace recon {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return max_abs(m - m.transpose()) <= tol;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Eigen::LLT<Matrix> require_cholesky(const Matrix& m, const std::string& what) {
  if (m.rows() != m.cols()) fail(ErrorCode::DimensionMismatch, what + " is not square");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) fail(ErrorCode::NotPositiveDefinite, what);
  return llt;
}

EigenRange symmetric_eigen_range(const Matrix& m) {
  if (m.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

double spectral_radius(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double largest_singular_value(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other) noexcept {
  add(other.sum_);
  add(other.comp_);
}

}  // namespace recon
