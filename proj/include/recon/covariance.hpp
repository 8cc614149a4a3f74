#pragma once

#include "recon/linalg.hpp"

#include <optional>
#include <string_view>

namespace recon {

enum class CovKind { IdentityScaled, Diagonal, Sample, Shrink, UserSupplied };

std::string_view cov_kind_name(CovKind kind) noexcept;

/// A symmetric m x m covariance with its provenance. Only one-step (h = 1)
/// estimates are produced; maps built from them are invariant to the
/// positive scale k_h relating W_h to W_1.
struct CovarianceEstimate {
  Matrix w;
  CovKind kind = CovKind::UserSupplied;
  std::optional<double> shrink_lambda;
  int h = 1;
};

/// Unbiased, mean-centred sample covariance of the rows of `residuals`.
CovarianceEstimate sample_covariance(const Matrix& residuals);

/// Shrinkage towards the diagonal of the sample covariance,
///   W = lambda * diag(S) + (1 - lambda) * S,
/// with lambda from the Schafer-Strimmer correlation-scale rule unless
/// `lambda_override` is given. The result's diagonal is the sample diagonal.
CovarianceEstimate shrink_covariance(const Matrix& residuals,
                                     std::optional<double> lambda_override = std::nullopt);

/// The analytic shrinkage intensity on its own (before clamping).
double shrinkage_intensity(const Matrix& residuals);

/// Per-column sample variances on the diagonal; used by WLS.
CovarianceEstimate diagonal_covariance(const Matrix& residuals);

/// k * I_m; used by OLS.
CovarianceEstimate identity_scaled_covariance(int m, double k = 1.0);

/// Wraps an externally supplied matrix after checking symmetry and a
/// strictly positive diagonal.
CovarianceEstimate user_covariance(const Matrix& w);

inline constexpr double kDefaultRankTol = 1e-10;

/// Moore-Penrose inverse of a symmetric matrix through its eigendecomposition.
/// Eigenvalues at or below rank_tol * (largest |eigenvalue|) are treated as zero.
Matrix pseudo_inverse(const Matrix& mat, double rank_tol = kDefaultRankTol);

}  // namespace recon
