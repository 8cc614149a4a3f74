#include "recon/basemodels.hpp"

#include "recon/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace recon {
namespace {

struct LsFit {
  double intercept = 0.0;
  Vector coefficients;
  double rss = 0.0;
};

// Regress y_t on (1, y_{t-1}, ..., y_{t-p}) for t = first..T-1.
LsFit regress(const Vector& y, int p, Eigen::Index first) {
  const Eigen::Index rows = y.size() - first;
  Matrix x(rows, p + 1);
  Vector target = y.segment(first, rows);
  x.col(0).setOnes();
  for (int i = 1; i <= p; ++i) x.col(i) = y.segment(first - i, rows);
  const Vector beta = x.colPivHouseholderQr().solve(target);
  LsFit fit;
  fit.intercept = beta(0);
  fit.coefficients = beta.tail(p);
  fit.rss = (target - x * beta).squaredNorm();
  return fit;
}

double companion_radius(const Vector& phi) {
  const Eigen::Index p = phi.size();
  if (p == 0) return 0.0;
  Matrix comp = Matrix::Zero(p, p);
  comp.row(0) = phi.transpose();
  if (p > 1) comp.bottomLeftCorner(p - 1, p - 1).setIdentity();
  return spectral_radius(comp);
}

constexpr double kStationarityGuard = 1.0 + 1e-6;

}  // namespace

ARModel fit_ar(const Vector& y, int max_p, const std::string& series_id) {
  if (max_p < 0) fail(ErrorCode::ConfigError, "max_p must be non-negative");
  const Eigen::Index t_total = y.size();
  if (t_total < max_p + 10) {
    fail(ErrorCode::SeriesTooShort, "series '" + series_id + "' has " + std::to_string(t_total) +
                                        " observations; need at least max_p + 10");
  }
  if (!y.allFinite()) fail(ErrorCode::NonFiniteInput, "series '" + series_id + "'");
  const double mean = y.mean();
  if ((y.array() - mean).abs().maxCoeff() == 0.0) {
    fail(ErrorCode::DegenerateVariance, "series '" + series_id + "' is constant");
  }

  const Eigen::Index t_eff = t_total - max_p;
  std::optional<ARModel> best;
  for (int p = 0; p <= max_p; ++p) {
    const double k = p + 2.0;
    if (static_cast<double>(t_eff) - k - 1.0 <= 0.0) break;
    LsFit fit = regress(y, p, max_p);
    if (companion_radius(fit.coefficients) >= kStationarityGuard) continue;
    const double n = static_cast<double>(t_eff);
    const double sigma2 = std::max(fit.rss / n, std::numeric_limits<double>::min());
    const double loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
    const double aicc = -2.0 * loglik + 2.0 * k * n / (n - k - 1.0);
    if (!best || aicc < best->aicc) {
      best = ARModel{p, fit.intercept, fit.coefficients, sigma2, aicc, series_id};
    }
  }
  if (!best) fail(ErrorCode::SeriesTooShort, "no admissible AR order for '" + series_id + "'");

  // Re-estimate the winner on all rows its order allows.
  const int p = best->order_p;
  if (p < max_p) {
    LsFit full = regress(y, p, p);
    if (companion_radius(full.coefficients) < kStationarityGuard) {
      const double rows = static_cast<double>(t_total - p);
      best->intercept = full.intercept;
      best->coefficients = full.coefficients;
      best->sigma2 = std::max(full.rss / rows, std::numeric_limits<double>::min());
    }
  }
  return *best;
}

Vector forecast(const ARModel& model, const Vector& history, int h) {
  const int p = model.order_p;
  if (history.size() < p) {
    fail(ErrorCode::HistoryTooShort, "history of " + std::to_string(history.size()) +
                                         " values for an AR(" + std::to_string(p) + ") model");
  }
  if (h < 1) fail(ErrorCode::ConfigError, "horizon must be at least 1");
  // window holds the latest p values, most recent first.
  Vector window(p);
  for (int i = 0; i < p; ++i) window(i) = history(history.size() - 1 - i);
  Vector out(h);
  for (int j = 0; j < h; ++j) {
    double next = model.intercept;
    for (int i = 0; i < p; ++i) next += model.coefficients(i) * window(i);
    out(j) = next;
    for (int i = p - 1; i > 0; --i) window(i) = window(i - 1);
    if (p > 0) window(0) = next;
  }
  return out;
}

InsampleFit insample_fitted(const ARModel& model, const Vector& series, int h) {
  const int p = model.order_p;
  if (h < 1) fail(ErrorCode::ConfigError, "horizon must be at least 1");
  if (series.size() <= p + h - 1) {
    fail(ErrorCode::SeriesTooShort, "series too short for h-step fitted values");
  }
  InsampleFit out;
  out.start = p + h - 1;
  const Eigen::Index count = series.size() - out.start;
  out.fitted.resize(count);
  Vector window(p);
  for (Eigen::Index k = 0; k < count; ++k) {
    const Eigen::Index origin = out.start + k - h;  // last observed index
    for (int i = 0; i < p; ++i) window(i) = series(origin - i);
    double next = model.intercept;
    for (int j = 0; j < h; ++j) {
      next = model.intercept;
      for (int i = 0; i < p; ++i) next += model.coefficients(i) * window(i);
      for (int i = p - 1; i > 0; --i) window(i) = window(i - 1);
      if (p > 0) window(0) = next;
    }
    out.fitted(k) = next;
  }
  out.residuals = series.tail(count) - out.fitted;
  return out;
}

ForecastPanel build_forecast_panel(const Matrix& y, int max_p, int h, const std::vector<std::string>& series_ids) {
  if (h < 1) fail(ErrorCode::ConfigError, "horizon must be at least 1");
  ForecastPanel panel;
  panel.h = h;
  panel.fit_start = max_p + h - 1;
  const Eigen::Index t_total = y.rows();
  const Eigen::Index m = y.cols();
  if (t_total <= panel.fit_start) fail(ErrorCode::SeriesTooShort, "panel too short for h-step fitted values");
  const Eigen::Index rows = t_total - panel.fit_start;
  panel.base.resize(h, m);
  panel.fitted.resize(rows, m);
  panel.residuals.resize(rows, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    const std::string id = uj < series_ids.size() ? series_ids[uj] : "s" + std::to_string(j + 1);
    const Vector col = y.col(j);
    ARModel model = fit_ar(col, max_p, id);
    const InsampleFit fit = insample_fitted(model, col, h);
    panel.fitted.col(j) = fit.fitted.tail(rows);
    panel.residuals.col(j) = fit.residuals.tail(rows);
    panel.base.col(j) = forecast(model, col, h);
    panel.models.push_back(std::move(model));
  }
  return panel;
}

}  // namespace recon
