#include "recon/covariance.hpp"

#include "recon/error.hpp"

#include <algorithm>
#include <cmath>

namespace recon {
namespace {

void require_rows(const Matrix& x, Eigen::Index min_rows, const char* what) {
  if (x.rows() < min_rows) {
    fail(ErrorCode::TooFewRows, std::string(what) + " needs at least " + std::to_string(min_rows) +
                                    " rows, got " + std::to_string(x.rows()));
  }
  if (x.cols() == 0) fail(ErrorCode::EmptyInput, std::string(what) + ": no columns");
  if (!x.allFinite()) fail(ErrorCode::NonFiniteInput, std::string(what) + ": non-finite residual");
}

Matrix centered(const Matrix& x) { return x.rowwise() - x.colwise().mean(); }

Vector column_variances(const Matrix& xc) {
  return xc.colwise().squaredNorm().transpose() / static_cast<double>(xc.rows() - 1);
}

void require_positive_diagonal(const Vector& d) {
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    if (!(d(j) > 0.0)) {
      fail(ErrorCode::DegenerateVariance, "column " + std::to_string(j) + " has zero variance");
    }
  }
}

}  // namespace

std::string_view cov_kind_name(CovKind kind) noexcept {
  switch (kind) {
    case CovKind::IdentityScaled: return "identity_scaled";
    case CovKind::Diagonal: return "diagonal";
    case CovKind::Sample: return "sample";
    case CovKind::Shrink: return "shrink";
    case CovKind::UserSupplied: return "user_supplied";
  }
  return "unknown";
}

CovarianceEstimate sample_covariance(const Matrix& residuals) {
  require_rows(residuals, 2, "sample_covariance");
  const Matrix xc = centered(residuals);
  Matrix w = (xc.transpose() * xc) / static_cast<double>(residuals.rows() - 1);
  w = 0.5 * (w + w.transpose());
  w.diagonal() = column_variances(xc);
  require_positive_diagonal(w.diagonal());
  return {std::move(w), CovKind::Sample, std::nullopt, 1};
}

double shrinkage_intensity(const Matrix& residuals) {
  require_rows(residuals, 3, "shrink_covariance");
  const double n = static_cast<double>(residuals.rows());
  const Matrix xc = centered(residuals);
  const Vector sd = (xc.colwise().squaredNorm().transpose() / (n - 1.0)).cwiseSqrt();
  require_positive_diagonal(sd);
  const Matrix xs = xc * sd.cwiseInverse().asDiagonal();

  // w_kij = xs_ki * xs_kj; r_ij = n/(n-1) * mean_k w_kij and
  // var(r_ij) = n/(n-1)^3 * sum_k (w_kij - mean_k w_kij)^2.
  const Matrix w_bar = (xs.transpose() * xs) / n;
  const Matrix sq = xs.cwiseAbs2();
  const Matrix sum_w2 = sq.transpose() * sq;
  const Matrix r = w_bar * (n / (n - 1.0));
  const Matrix var_r = (sum_w2 - n * w_bar.cwiseAbs2()) * (n / std::pow(n - 1.0, 3));

  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) {
      if (i == j) continue;
      num += var_r(i, j);
      den += r(i, j) * r(i, j);
    }
  }
  // No off-diagonal correlation at all: the target already equals the sample.
  if (den == 0.0) return 1.0;
  return num / den;
}

CovarianceEstimate shrink_covariance(const Matrix& residuals, std::optional<double> lambda_override) {
  require_rows(residuals, 3, "shrink_covariance");
  CovarianceEstimate sample = sample_covariance(residuals);
  double lambda = lambda_override ? *lambda_override : shrinkage_intensity(residuals);
  lambda = std::clamp(lambda, 0.0, 1.0);
  Matrix w = (1.0 - lambda) * sample.w;
  w.diagonal() = sample.w.diagonal();
  return {std::move(w), CovKind::Shrink, lambda, 1};
}

CovarianceEstimate diagonal_covariance(const Matrix& residuals) {
  require_rows(residuals, 2, "diagonal_covariance");
  const Matrix xc = centered(residuals);
  const Vector var = column_variances(xc);
  require_positive_diagonal(var);
  return {Matrix(var.asDiagonal()), CovKind::Diagonal, std::nullopt, 1};
}

CovarianceEstimate identity_scaled_covariance(int m, double k) {
  if (!(k > 0.0)) fail(ErrorCode::DegenerateVariance, "identity scale must be positive");
  return {k * Matrix::Identity(m, m), CovKind::IdentityScaled, std::nullopt, 1};
}

CovarianceEstimate user_covariance(const Matrix& w) {
  if (w.rows() != w.cols()) fail(ErrorCode::DimensionMismatch, "covariance must be square");
  if (!w.allFinite()) fail(ErrorCode::NonFiniteInput, "covariance has non-finite entries");
  if (!is_symmetric(w, 1e-12 * std::max(1.0, max_abs(w)))) fail(ErrorCode::NonSymmetric, "covariance");
  require_positive_diagonal(w.diagonal());
  return {0.5 * (w + w.transpose()), CovKind::UserSupplied, std::nullopt, 1};
}

Matrix pseudo_inverse(const Matrix& mat, double rank_tol) {
  if (mat.rows() != mat.cols()) fail(ErrorCode::DimensionMismatch, "pseudo_inverse needs a square matrix");
  if (mat.size() == 0) return mat;
  if (!is_symmetric(mat, 1e-9 * std::max(1.0, max_abs(mat)))) {
    fail(ErrorCode::NonSymmetric, "pseudo_inverse input");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (mat + mat.transpose()));
  const Vector& ev = es.eigenvalues();
  const double cutoff = rank_tol * ev.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) > cutoff) inv(i) = 1.0 / ev(i);
  }
  const Matrix& q = es.eigenvectors();
  return q * inv.asDiagonal() * q.transpose();
}

}  // namespace recon
