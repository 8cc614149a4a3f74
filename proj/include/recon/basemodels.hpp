#pragma once

#include "recon/linalg.hpp"

#include <string>
#include <vector>

namespace recon {

/// y_t = intercept + sum_i coefficients[i] * y_{t-1-i} + e_t
struct ARModel {
  int order_p = 0;
  double intercept = 0.0;
  Vector coefficients;
  double sigma2 = 0.0;
  double aicc = 0.0;
  std::string series_id;
};

inline constexpr int kDefaultMaxP = 5;

/// Conditional least-squares AR fit with AICc order selection over
/// p = 0..max_p. All candidate orders are scored on the common sample
/// t = max_p..T-1; the winning order is then re-estimated on its full
/// sample t = p..T-1. Orders whose companion matrix has spectral radius
/// >= 1 + 1e-6 are not admissible.
ARModel fit_ar(const Vector& series, int max_p = kDefaultMaxP, const std::string& series_id = {});

/// Iterated h-step plug-in forecasts from the end of `history`.
Vector forecast(const ARModel& model, const Vector& history, int h);

struct InsampleFit {
  /// fitted(k) predicts series(start + k) using data through start + k - h.
  Vector fitted;
  Vector residuals;
  Eigen::Index start = 0;
};

/// h-step in-sample predictions for t = p + h - 1 .. T - 1 (0-based).
InsampleFit insample_fitted(const ARModel& model, const Vector& series, int h);

/// Per-series models with aligned fitted values, residuals and forecasts.
struct ForecastPanel {
  /// Row k holds the (k+1)-step forecasts from the end of the sample.
  Matrix base;
  /// h-step fitted values on the common range t = fit_start .. T - 1.
  Matrix fitted;
  /// actual - fitted on the same range.
  Matrix residuals;
  Eigen::Index fit_start = 0;
  int h = 1;
  std::vector<ARModel> models;
};

/// Fits one AR model per column of `y` (T x m) and aligns every series on
/// the common range starting at max_p + h - 1.
ForecastPanel build_forecast_panel(const Matrix& y, int max_p, int h,
                                   const std::vector<std::string>& series_ids = {});

}  // namespace recon
