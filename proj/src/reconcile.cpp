#include "recon/reconcile.hpp"

#include "recon/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace recon {
namespace {

void check_width(const Matrix& w, const SummingMatrix& s, const char* what) {
  if (w.rows() != s.m || w.cols() != s.m) {
    fail(ErrorCode::DimensionMismatch, std::string(what) + " must be " + std::to_string(s.m) + "x" +
                                           std::to_string(s.m));
  }
}

bool gram_is_pd(const Matrix& gram) {
  if (gram.size() == 0) return false;
  const EigenRange r = symmetric_eigen_range(gram);
  return r.max > 0.0 && r.min > kGramConditionTol * r.max;
}

// (S' A S)^-1 S' A for a symmetric weight A, through Cholesky of the reduced Gram.
Matrix weighted_projection_g(const SummingMatrix& s, const Matrix& weighted_s, ErrorCode on_singular,
                             const char* what) {
  const Matrix gram = s.s.transpose() * weighted_s;
  Eigen::LLT<Matrix> llt(0.5 * (gram + gram.transpose()));
  if (llt.info() != Eigen::Success) fail(on_singular, what);
  return llt.solve(weighted_s.transpose());
}

void check_panel(const TrainingPanel& p, const SummingMatrix& s) {
  if (p.yhat_mat.rows() == 0) fail(ErrorCode::EmptyPanel, "training panel has no rows");
  if (p.b_mat.rows() != p.yhat_mat.rows() || p.y_mat.rows() != p.yhat_mat.rows()) {
    fail(ErrorCode::MisalignedRows, "panel matrices have different row counts");
  }
  if (p.yhat_mat.cols() != s.m || p.y_mat.cols() != s.m || p.b_mat.cols() != s.n) {
    fail(ErrorCode::DimensionMismatch, "panel widths do not match the hierarchy");
  }
}

}  // namespace

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::BU: return "bu";
    case Method::OLS: return "ols";
    case Method::WLS: return "wls";
    case Method::GLS: return "gls";
    case Method::MinT: return "mint";
    case Method::ERM: return "erm";
    case Method::EMinT_U: return "emint_u";
  }
  return "unknown";
}

TrainingPanel TrainingPanel::make(const Matrix& y, const Matrix& yhat, const SummingMatrix& s,
                                  Alignment alignment, int h, std::optional<Eigen::Index> t1) {
  if (y.rows() != yhat.rows()) fail(ErrorCode::MisalignedRows, "actuals and forecasts differ in length");
  if (y.cols() != s.m || yhat.cols() != s.m) fail(ErrorCode::DimensionMismatch, "panel width != m");
  TrainingPanel p;
  p.y_mat = y;
  p.b_mat = y.rightCols(s.n);
  p.yhat_mat = yhat;
  p.alignment = alignment;
  p.h = h;
  p.t1 = t1;
  const double tol = kDefaultCoherenceTol * std::max(1.0, max_abs(y));
  if (y.rows() > 0 && max_abs(y - p.b_mat * s.s.transpose()) > tol) {
    fail(ErrorCode::IncoherentOutput, "training actuals are not coherent with S");
  }
  return p;
}

ReconciliationMap g_bottom_up(const SummingMatrix& s) { return {s.j, Method::BU, true, 1, "none"}; }

ReconciliationMap g_ols(const SummingMatrix& s) {
  return {weighted_projection_g(s, s.s, ErrorCode::SingularGram, "S'S is singular"), Method::OLS, true, 1,
          "identity_scaled"};
}

ReconciliationMap g_wls(const SummingMatrix& s, const CovarianceEstimate& lam) {
  check_width(lam.w, s, "WLS weight");
  Matrix off = lam.w;
  off.diagonal().setZero();
  if (max_abs(off) != 0.0) fail(ErrorCode::NotDiagonal, "WLS requires a diagonal covariance");
  const Vector d = lam.w.diagonal();
  if (!(d.minCoeff() > 0.0)) fail(ErrorCode::DegenerateVariance, "WLS weights must be positive");
  const Matrix weighted = d.cwiseInverse().asDiagonal() * s.s;
  return {weighted_projection_g(s, weighted, ErrorCode::SingularGram, "S' L^-1 S is singular"), Method::WLS,
          true, lam.h, std::string(cov_kind_name(lam.kind))};
}

ReconciliationMap g_mint(const SummingMatrix& s, const CovarianceEstimate& w) {
  check_width(w.w, s, "MinT covariance");
  const auto llt = require_cholesky(w.w, "MinT covariance W");
  const Matrix g1 = weighted_projection_g(s, llt.solve(s.s), ErrorCode::NotPositiveDefinite, "S' W^-1 S");

  Matrix g2 = s.j;
  if (s.m_star > 0) {
    const Matrix u = s.u();
    const Matrix reduced = s.u_t * w.w * u;
    const auto red = require_cholesky(0.5 * (reduced + reduced.transpose()), "U' W U");
    g2 -= (w.w.bottomRows(s.n) * u) * red.solve(s.u_t);
  }
  const double gap = max_abs(g1 - g2);
  if (!(gap < kMintDualFormTol)) {
    fail(ErrorCode::DualFormMismatch, "MinT closed forms differ by " + std::to_string(gap));
  }
  return {std::move(g2), Method::MinT, true, w.h, std::string(cov_kind_name(w.kind))};
}

ReconciliationMap g_gls(const SummingMatrix& s, const CovarianceEstimate& sigma, bool use_pinv) {
  check_width(sigma.w, s, "GLS covariance");
  Matrix g;
  if (use_pinv) {
    const Matrix pinv = pseudo_inverse(sigma.w);
    const Matrix weighted = pinv * s.s;
    const Matrix gram = s.s.transpose() * weighted;
    if (!gram_is_pd(0.5 * (gram + gram.transpose()))) {
      fail(ErrorCode::RankDeficientReducedGram, "S' Sigma^+ S is singular");
    }
    g = weighted_projection_g(s, weighted, ErrorCode::RankDeficientReducedGram, "S' Sigma^+ S");
  } else {
    const auto llt = require_cholesky(sigma.w, "GLS covariance Sigma");
    g = weighted_projection_g(s, llt.solve(s.s), ErrorCode::NotPositiveDefinite, "S' Sigma^-1 S");
  }
  return {std::move(g), Method::GLS, true, sigma.h, std::string(cov_kind_name(sigma.kind))};
}

Matrix min_norm_regression(const Matrix& b_mat, const Matrix& yhat_mat) {
  Eigen::BDCSVD<Matrix> svd(yhat_mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cutoff = smax * static_cast<double>(std::max(yhat_mat.rows(), yhat_mat.cols())) *
                        std::numeric_limits<double>::epsilon();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  if (rank == 0 || smax == 0.0) fail(ErrorCode::AllZeroForecasts, "forecast panel has no nonzero singular value");
  // G = B' U_r D_r^-1 V_r'
  const Matrix ur = svd.matrixU().leftCols(rank);
  const Matrix vr = svd.matrixV().leftCols(rank);
  const Vector dinv = sv.head(rank).cwiseInverse();
  return (b_mat.transpose() * ur) * dinv.asDiagonal() * vr.transpose();
}

ReconciliationMap g_erm(const TrainingPanel& panel, const SummingMatrix& s) {
  if (panel.alignment != Alignment::Holdout) fail(ErrorCode::MisalignedRows, "ERM needs a holdout panel");
  check_panel(panel, s);
  Matrix g;
  const Matrix gram = panel.yhat_mat.transpose() * panel.yhat_mat;
  if (gram_is_pd(gram)) {
    g = panel.yhat_mat.householderQr().solve(panel.b_mat).transpose();
  } else {
    g = min_norm_regression(panel.b_mat, panel.yhat_mat);
  }
  return {std::move(g), Method::ERM, false, panel.h, "holdout"};
}

ReconciliationMap g_emint_u(const TrainingPanel& panel, const SummingMatrix& s, GramPolicy policy) {
  if (panel.alignment != Alignment::Insample) fail(ErrorCode::MisalignedRows, "EMinT-U needs an in-sample panel");
  check_panel(panel, s);
  const Matrix gram = panel.yhat_mat.transpose() * panel.yhat_mat;
  Matrix g;
  if (gram_is_pd(gram)) {
    g = panel.yhat_mat.householderQr().solve(panel.b_mat).transpose();
  } else if (policy == GramPolicy::SvdFallback) {
    g = min_norm_regression(panel.b_mat, panel.yhat_mat);
  } else {
    fail(ErrorCode::SingularGram,
         "fitted-value Gram matrix is not numerically positive definite (" +
             std::to_string(panel.yhat_mat.rows()) + " rows for " + std::to_string(s.m) +
             " series); supply more data or use the ERM SVD path");
  }
  return {std::move(g), Method::EMinT_U, false, panel.h, "insample"};
}

Matrix apply(const ReconciliationMap& map, const SummingMatrix& s, const Matrix& base) {
  if (base.cols() != s.m || map.g.rows() != s.n || map.g.cols() != s.m) {
    fail(ErrorCode::DimensionMismatch, "base forecasts do not match the reconciliation map");
  }
  // Row at a time so each output row is bitwise independent of batch size.
  Matrix out(base.rows(), s.m);
  for (Eigen::Index t = 0; t < base.rows(); ++t) {
    const Vector bottom = map.g * base.row(t).transpose();
    out.row(t) = (s.s * bottom).transpose();
  }
  return out;
}

Vector apply(const ReconciliationMap& map, const SummingMatrix& s, const Vector& base) {
  if (base.size() != s.m || map.g.rows() != s.n || map.g.cols() != s.m) {
    fail(ErrorCode::DimensionMismatch, "base forecasts do not match the reconciliation map");
  }
  const Vector bottom = map.g * base;
  return s.s * bottom;
}

}  // namespace recon
