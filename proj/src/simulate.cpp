#include "recon/simulate.hpp"

#include "recon/basemodels.hpp"
#include "recon/covariance.hpp"
#include "recon/csv.hpp"
#include "recon/error.hpp"
#include "recon/reconcile.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>

namespace recon {

Matrix rotation_coefficient(double modulus, double angle) {
  if (!(modulus > 0.0 && modulus < 1.0)) {
    fail(ErrorCode::ModulusOutOfRange, "modulus must lie in (0, 1), got " + std::to_string(modulus));
  }
  Matrix a(2, 2);
  a << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return modulus * a;
}

Matrix small_design_coefficient() {
  Matrix a = Matrix::Zero(4, 4);
  a.topLeftCorner(2, 2) = rotation_coefficient(0.6, std::numbers::pi / 3.0);
  a.bottomRightCorner(2, 2) = rotation_coefficient(0.9, std::numbers::pi / 6.0);
  return a;
}

Matrix small_design_cov(double rho) {
  if (!(std::abs(rho) <= 0.8)) fail(ErrorCode::RhoOutOfRange, "|rho| must not exceed 0.8");
  Matrix block(2, 2);
  const double off = std::sqrt(6.0) * rho;
  block << 2.0, off, off, 3.0;
  Matrix sigma = Matrix::Zero(4, 4);
  sigma.topLeftCorner(2, 2) = block;
  sigma.bottomRightCorner(2, 2) = block;
  return sigma;
}

Matrix alternating_rotation_coefficient(int n) {
  if (n <= 0 || n % 2 != 0) fail(ErrorCode::DimensionMismatch, "rotation blocks need an even dimension");
  Matrix a = Matrix::Zero(n, n);
  for (int b = 0; b < n / 2; ++b) {
    a.block(2 * b, 2 * b, 2, 2) = b % 2 == 0 ? rotation_coefficient(0.6, std::numbers::pi / 3.0)
                                             : rotation_coefficient(0.9, std::numbers::pi / 6.0);
  }
  return a;
}

Matrix block_correlation(int n_blocks, int block_size, std::pair<double, double> within_range, double between_eps,
                         Rng& rng) {
  const auto [lo, hi] = within_range;
  if (n_blocks < 1 || block_size < 1) fail(ErrorCode::DimensionMismatch, "need at least one block of one series");
  if (!(lo >= 0.0 && lo < hi && hi < 1.0)) fail(ErrorCode::ConfigError, "within-block range must satisfy 0 <= lo < hi < 1");
  const int n = n_blocks * block_size;
  Matrix corr = Matrix::Zero(n, n);
  for (int b = 0; b < n_blocks; ++b) {
    const double rho = rng.uniform(lo, hi);
    auto blk = corr.block(b * block_size, b * block_size, block_size, block_size);
    blk.setConstant(rho);
    blk.diagonal().setOnes();
  }
  // Noise vectors live in R^n; |z| components keep every cross-block entry
  // non-negative.
  Matrix u = rng.normal_matrix(n, n).cwiseAbs();
  for (int i = 0; i < n; ++i) u.col(i).normalize();
  const Matrix gram = u.transpose() * u;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i / block_size != j / block_size) corr(i, j) = between_eps * gram(i, j);
    }
  }
  corr = 0.5 * (corr + corr.transpose());
  corr.diagonal().setOnes();
  require_cholesky(corr, "block correlation matrix (reduce between_eps)");
  return corr;
}

Matrix cov_from_correlation(const Matrix& corr, std::pair<double, double> sd_range, double negate_fraction, Rng& rng) {
  const Eigen::Index n = corr.rows();
  if (corr.cols() != n) fail(ErrorCode::DimensionMismatch, "correlation matrix must be square");
  if (!(negate_fraction >= 0.0 && negate_fraction <= 1.0)) fail(ErrorCode::ConfigError, "negate_fraction outside [0, 1]");
  Vector sd(n);
  for (Eigen::Index i = 0; i < n; ++i) sd(i) = rng.uniform(sd_range.first, sd_range.second);
  Vector sign = Vector::Ones(n);
  const auto flips = static_cast<Eigen::Index>(std::llround(negate_fraction * static_cast<double>(n)));
  // Partial Fisher-Yates picks which series flip sign.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index k = 0; k < flips; ++k) {
    const auto pick = k + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - k)));
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick)]);
    sign(idx[static_cast<std::size_t>(k)]) = -1.0;
  }
  const Vector d = sd.cwiseProduct(sign);
  Matrix sigma = d.asDiagonal() * corr * d.asDiagonal();
  sigma = 0.5 * (sigma + sigma.transpose());
  require_cholesky(sigma, "innovation covariance");
  return sigma;
}

ObservationPanel simulate_var1(const Var1Config& cfg, const SummingMatrix& s) {
  const Eigen::Index n = cfg.coeff.rows();
  if (cfg.coeff.cols() != n || cfg.innov_cov.rows() != n || cfg.innov_cov.cols() != n || n != s.n) {
    fail(ErrorCode::DimensionMismatch, "VAR(1) configuration does not match the hierarchy");
  }
  if (cfg.t_total < 1 || cfg.burn_in < 0) fail(ErrorCode::ConfigError, "sample length must be positive");
  if (!(spectral_radius(cfg.coeff) < 1.0)) fail(ErrorCode::UnstableCoefficient, "coefficient spectral radius >= 1");
  const auto llt = require_cholesky(cfg.innov_cov, "innovation covariance");
  const Matrix chol = llt.matrixL();

  Rng rng(cfg.seed);
  const Eigen::Index steps = cfg.burn_in + cfg.t_total;
  const Matrix z = rng.normal_matrix(n, steps);
  Matrix bottom(cfg.t_total, n);
  Vector b = Vector::Zero(n);
  for (Eigen::Index t = 0; t < steps; ++t) {
    b = cfg.coeff * b + chol * z.col(t);
    if (t >= cfg.burn_in) bottom.row(t - cfg.burn_in) = b.transpose();
  }
  return ObservationPanel::from_bottom(bottom, s);
}

McDesign small_design(std::vector<double> rho_grid, std::vector<Eigen::Index> sample_sizes, int replications,
                      std::uint64_t seed) {
  McDesign d;
  d.kind = DesignKind::Small;
  d.hierarchy = HierarchySpec::two_level({2, 2});
  d.var1.coeff = small_design_coefficient();
  d.var1.seed = seed;
  d.rho_grid = std::move(rho_grid);
  d.sample_sizes = std::move(sample_sizes);
  d.replications = replications;
  return d;
}

McDesign large_design(CorrelationMode mode, std::vector<Eigen::Index> sample_sizes, int replications,
                      std::uint64_t seed) {
  McDesign d;
  d.kind = DesignKind::Large;
  d.hierarchy = HierarchySpec::two_level(std::vector<int>(6, 6));
  d.var1.coeff = alternating_rotation_coefficient(36);
  d.var1.seed = seed;
  d.correlation_mode = mode;
  d.sample_sizes = std::move(sample_sizes);
  d.replications = replications;
  return d;
}

const std::vector<std::string>& mc_methods() {
  static const std::vector<std::string> names{"base", "bu", "ols", "wls", "mint_sample", "mint_shrink", "emint_u"};
  return names;
}

std::string_view sample_kind_name(SampleKind k) noexcept {
  return k == SampleKind::Insample ? "insample" : "outofsample";
}

McResult::McResult(SummingMatrix s, std::vector<McCell> cells, std::vector<int> horizons)
    : s_(std::move(s)), cells_(std::move(cells)), horizons_(std::move(horizons)) {
  const std::size_t slots = cells_.size() * horizons_.size() * 2;
  sums_.resize(slots * mc_methods().size() * static_cast<std::size_t>(s_.m));
  counts_.assign(slots, 0);
  completed.assign(cells_.size(), 0);
  skipped.assign(cells_.size(), 0);
  skip_reasons.resize(cells_.size());
}

std::size_t McResult::count_index(std::size_t cell, std::size_t h, SampleKind sample) const {
  return (cell * horizons_.size() + h) * 2 + (sample == SampleKind::Insample ? 0 : 1);
}

std::size_t McResult::index(std::size_t cell, std::size_t h, SampleKind sample, std::size_t method, int series) const {
  return (count_index(cell, h, sample) * mc_methods().size() + method) * static_cast<std::size_t>(s_.m) +
         static_cast<std::size_t>(series);
}

CompensatedSum& McResult::sum_sq(std::size_t cell, std::size_t h, SampleKind sample, std::size_t method, int series) {
  return sums_[index(cell, h, sample, method, series)];
}

const CompensatedSum& McResult::sum_sq(std::size_t cell, std::size_t h, SampleKind sample, std::size_t method,
                                       int series) const {
  return sums_[index(cell, h, sample, method, series)];
}

long long& McResult::count(std::size_t cell, std::size_t h, SampleKind sample) {
  return counts_[count_index(cell, h, sample)];
}

long long McResult::count(std::size_t cell, std::size_t h, SampleKind sample) const {
  return counts_[count_index(cell, h, sample)];
}

Matrix McResult::mse(std::size_t cell, std::size_t h, SampleKind sample) const {
  const auto methods = mc_methods().size();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(methods), s_.m);
  const long long c = count(cell, h, sample);
  if (c == 0) return out;
  for (std::size_t k = 0; k < methods; ++k) {
    for (int i = 0; i < s_.m; ++i) {
      out(static_cast<Eigen::Index>(k), i) = sum_sq(cell, h, sample, k, i).value() / static_cast<double>(c);
    }
  }
  return out;
}

std::string McResult::tidy_csv() const {
  std::string out = "design_cell,method,series,level,sample,sum_sq_err,count\n";
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (std::size_t h = 0; h < horizons_.size(); ++h) {
      const std::string cell_label = cells_[c].label + ";h=" + std::to_string(horizons_[h]);
      for (SampleKind sample : {SampleKind::Insample, SampleKind::Outofsample}) {
        for (std::size_t k = 0; k < mc_methods().size(); ++k) {
          for (int i = 0; i < s_.m; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            out += cell_label + "," + mc_methods()[k] + "," + s_.labels[ui] + "," +
                   s_.level_names[static_cast<std::size_t>(s_.levels[ui])] + "," +
                   std::string(sample_kind_name(sample)) + "," +
                   csv::format_number(sum_sq(c, h, sample, k, i).value()) + "," +
                   std::to_string(count(c, h, sample)) + "\n";
          }
        }
      }
    }
  }
  return out;
}

std::vector<McCell> design_cells(const McDesign& design) {
  if (design.replications < 1) fail(ErrorCode::ConfigError, "replications must be at least 1");
  if (design.sample_sizes.empty()) fail(ErrorCode::ConfigError, "no sample sizes");
  if (design.horizons.empty()) fail(ErrorCode::ConfigError, "no horizons");
  const int max_h = *std::max_element(design.horizons.begin(), design.horizons.end());
  if (*std::min_element(design.horizons.begin(), design.horizons.end()) < 1) {
    fail(ErrorCode::ConfigError, "horizons must be at least 1");
  }
  for (auto t : design.sample_sizes) {
    if (t - max_h < design.max_p + 10) {
      fail(ErrorCode::ConfigError, "T = " + std::to_string(t) + " leaves too few training observations");
    }
  }
  std::vector<McCell> cells;
  auto t_label = [](Eigen::Index t) { return "T=" + std::to_string(t); };
  switch (design.kind) {
    case DesignKind::Small:
      if (design.rho_grid.empty()) fail(ErrorCode::ConfigError, "small design needs a rho grid");
      for (double rho : design.rho_grid) {
        const Matrix cov = small_design_cov(rho);
        for (auto t : design.sample_sizes) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "rho=%g;", rho);
          cells.push_back({buf + t_label(t), rho, true, t, cov});
        }
      }
      break;
    case DesignKind::Large: {
      Rng rng(~design.var1.seed);
      const Matrix corr = block_correlation(6, 6, {0.2, 0.7}, design.between_eps, rng);
      const double flip = design.correlation_mode == CorrelationMode::Mixed ? design.negate_fraction : 0.0;
      const Matrix cov = cov_from_correlation(corr, {std::sqrt(2.0), std::sqrt(6.0)}, flip, rng);
      const std::string mode = design.correlation_mode == CorrelationMode::Mixed ? "mixed;" : "nonnegative;";
      for (auto t : design.sample_sizes) cells.push_back({mode + t_label(t), 0.0, false, t, cov});
      break;
    }
    case DesignKind::Custom:
      for (auto t : design.sample_sizes) cells.push_back({t_label(t), 0.0, false, t, design.var1.innov_cov});
      break;
  }
  return cells;
}

namespace {

void accumulate_rows(McResult& out, std::size_t h_idx, SampleKind sample, std::size_t method, const Matrix& err) {
  for (Eigen::Index i = 0; i < err.cols(); ++i) {
    auto& acc = out.sum_sq(0, h_idx, sample, method, static_cast<int>(i));
    for (Eigen::Index t = 0; t < err.rows(); ++t) acc.add(err(t, i) * err(t, i));
  }
}

}  // namespace

McResult run_replication(const McDesign& design, const McCell& cell, const SummingMatrix& s, std::uint64_t seed) {
  McResult out(s, {cell}, design.horizons);
  const int max_h = *std::max_element(design.horizons.begin(), design.horizons.end());

  Var1Config cfg = design.var1;
  cfg.innov_cov = cell.innov_cov;
  cfg.t_total = cell.t;
  cfg.seed = seed;
  const ObservationPanel panel = simulate_var1(cfg, s);
  const Eigen::Index t_train = cell.t - max_h;
  const Matrix train = panel.y.topRows(t_train);

  const ForecastPanel one_step = build_forecast_panel(train, design.max_p, 1, s.labels);
  const CovarianceEstimate w_sample = sample_covariance(one_step.residuals);
  const CovarianceEstimate w_shrink = shrink_covariance(one_step.residuals);
  const CovarianceEstimate lambda = diagonal_covariance(one_step.residuals);

  std::vector<std::optional<ReconciliationMap>> maps(mc_methods().size());
  maps[1] = g_bottom_up(s);
  maps[2] = g_ols(s);
  maps[3] = g_wls(s, lambda);
  maps[4] = g_mint(s, w_sample);
  maps[5] = g_mint(s, w_shrink);

  for (std::size_t hi = 0; hi < design.horizons.size(); ++hi) {
    const int h = design.horizons[hi];
    const ForecastPanel fp = h == 1 ? one_step : build_forecast_panel(train, design.max_p, h, s.labels);
    const Matrix actual = train.bottomRows(fp.fitted.rows());
    const TrainingPanel tp = TrainingPanel::make(actual, fp.fitted, s, Alignment::Insample, h);
    maps[6] = g_emint_u(tp, s);
    maps[6]->h = h;

    const Matrix test_actual = panel.y.row(t_train + h - 1);
    const Matrix test_base = fp.base.row(h - 1);
    for (std::size_t k = 0; k < mc_methods().size(); ++k) {
      const Matrix in_pred = k == 0 ? fp.fitted : apply(*maps[k], s, fp.fitted);
      const Matrix out_pred = k == 0 ? test_base : apply(*maps[k], s, test_base);
      accumulate_rows(out, hi, SampleKind::Insample, k, actual - in_pred);
      accumulate_rows(out, hi, SampleKind::Outofsample, k, test_actual - out_pred);
    }
    out.count(0, hi, SampleKind::Insample) += fp.fitted.rows();
    out.count(0, hi, SampleKind::Outofsample) += 1;
  }
  out.completed[0] = 1;
  return out;
}

namespace {

struct Slot {
  std::optional<McResult> result;
  std::string failure;
};

}  // namespace

McResult run_monte_carlo(const McDesign& design) {
  const SummingMatrix s = build_summing_matrix(design.hierarchy);
  std::vector<McCell> cells = design_cells(design);
  if (design.var1.coeff.rows() != s.n) fail(ErrorCode::ConfigError, "coefficient matrix does not match hierarchy");
  McResult total(s, cells, design.horizons);

  const std::size_t reps = static_cast<std::size_t>(design.replications);
  const std::size_t tasks = cells.size() * reps;
  std::vector<Slot> slots(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t c = task / reps;
      const std::uint64_t r = task % reps;
      try {
        slots[task].result = run_replication(design, cells[c], s, design.var1.seed ^ r);
      } catch (const Error& e) {
        slots[task].failure = std::string(error_code_name(e.code()));
      }
    }
  };
  const int threads = std::max(1, std::min<int>(design.threads, static_cast<int>(tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Merge in (cell, replication) order so the sums do not depend on scheduling.
  for (std::size_t task = 0; task < tasks; ++task) {
    const std::size_t c = task / reps;
    Slot& slot = slots[task];
    if (!slot.result) {
      ++total.skipped[c];
      ++total.skip_reasons[c][slot.failure];
      continue;
    }
    ++total.completed[c];
    for (std::size_t h = 0; h < design.horizons.size(); ++h) {
      for (SampleKind sample : {SampleKind::Insample, SampleKind::Outofsample}) {
        total.count(c, h, sample) += slot.result->count(0, h, sample);
        for (std::size_t k = 0; k < mc_methods().size(); ++k) {
          for (int i = 0; i < s.m; ++i) total.sum_sq(c, h, sample, k, i).merge(slot.result->sum_sq(0, h, sample, k, i));
        }
      }
    }
    slot.result.reset();
  }
  return total;
}

}  // namespace recon
