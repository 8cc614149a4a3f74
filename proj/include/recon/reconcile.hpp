#pragma once

#include "recon/covariance.hpp"
#include "recon/hierarchy.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace recon {

enum class Method { BU, OLS, WLS, GLS, MinT, ERM, EMinT_U };

std::string_view method_name(Method m) noexcept;

/// The n x m matrix G mapping base forecasts to bottom-level forecasts;
/// reconciled forecasts are S * G * yhat.
struct ReconciliationMap {
  Matrix g;
  Method method = Method::BU;
  /// True when G S = I_n is guaranteed by construction.
  bool is_projection = true;
  int h = 1;
  /// Provenance of the covariance or regression inputs ("sample", "holdout", ...).
  std::string cov_kind;
};

enum class Alignment { Holdout, Insample };

/// Rows of bottom actuals, aligned base forecasts (or fitted values) and all
/// actuals. Holdout panels feed ERM, in-sample panels feed EMinT-U.
struct TrainingPanel {
  Matrix b_mat;     // N x n
  Matrix yhat_mat;  // N x m
  Matrix y_mat;     // N x m
  Alignment alignment = Alignment::Insample;
  /// Split index for holdout panels (number of rows used for model fitting).
  std::optional<Eigen::Index> t1;
  int h = 1;

  /// Builds a panel from actuals y (N x m, S row order) and aligned
  /// forecasts; checks y = b S' within tolerance.
  static TrainingPanel make(const Matrix& y, const Matrix& yhat, const SummingMatrix& s,
                            Alignment alignment, int h = 1,
                            std::optional<Eigen::Index> t1 = std::nullopt);
};

/// Gram matrices whose smallest/largest eigenvalue ratio is at or below this
/// are treated as singular.
inline constexpr double kGramConditionTol = 1e-10;

/// Tolerance for the agreement of MinT's two closed forms.
inline constexpr double kMintDualFormTol = 1e-7;

ReconciliationMap g_bottom_up(const SummingMatrix& s);

ReconciliationMap g_ols(const SummingMatrix& s);

ReconciliationMap g_wls(const SummingMatrix& s, const CovarianceEstimate& lam);

/// Both closed forms are evaluated:
///   G1 = (S' W^-1 S)^-1 S' W^-1   and   G2 = J - J W U (U' W U)^-1 U'.
/// They must agree to kMintDualFormTol; G2 is returned.
ReconciliationMap g_mint(const SummingMatrix& s, const CovarianceEstimate& w);

/// Generalized least squares with the coherence-error covariance Sigma.
/// With use_pinv the Moore-Penrose inverse replaces Sigma^-1.
ReconciliationMap g_gls(const SummingMatrix& s, const CovarianceEstimate& sigma, bool use_pinv = true);

/// Holdout empirical risk minimizer G = B' Yhat (Yhat' Yhat)^-1, falling
/// back to the thin SVD of Yhat when the Gram matrix is singular.
ReconciliationMap g_erm(const TrainingPanel& panel, const SummingMatrix& s);

enum class GramPolicy { Strict, SvdFallback };

/// In-sample unconstrained trace minimizer from fitted values. Strict
/// policy raises SingularGram when Yhat' Yhat is not numerically PD.
ReconciliationMap g_emint_u(const TrainingPanel& panel, const SummingMatrix& s,
                            GramPolicy policy = GramPolicy::Strict);

/// Reconciles rows of `base` (T x m): returns base * G' * S'.
Matrix apply(const ReconciliationMap& map, const SummingMatrix& s, const Matrix& base);
Vector apply(const ReconciliationMap& map, const SummingMatrix& s, const Vector& base);

/// Minimum-norm least-squares solution G of Yhat G' ~= B.
Matrix min_norm_regression(const Matrix& b_mat, const Matrix& yhat_mat);

}  // namespace recon
