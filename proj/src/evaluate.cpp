#include "recon/evaluate.hpp"

#include "recon/basemodels.hpp"
#include "recon/covariance.hpp"
#include "recon/csv.hpp"
#include "recon/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

namespace recon {

Vector mse_table(const Matrix& actuals, const Matrix& predictions) {
  if (actuals.rows() != predictions.rows() || actuals.cols() != predictions.cols()) {
    fail(ErrorCode::DimensionMismatch, "actuals and predictions differ in shape");
  }
  if (actuals.rows() == 0) fail(ErrorCode::EmptyInput, "no rows to score");
  return (actuals - predictions).array().square().colwise().mean().transpose();
}

Vector percent_relative_improvement(const Vector& method_mse, const Vector& reference_mse) {
  if (method_mse.size() != reference_mse.size()) fail(ErrorCode::DimensionMismatch, "MSE vectors differ in length");
  if (!(reference_mse.array() > 0.0).all()) fail(ErrorCode::ZeroReference, "reference MSE must be positive");
  return 100.0 * (method_mse.array() / reference_mse.array() - 1.0).matrix();
}

EvaluationReport make_report(const SummingMatrix& s, const Matrix& per_series_mse, std::vector<std::string> methods,
                             const std::string& reference, SampleKind sample, std::string cell_label, int h) {
  if (per_series_mse.cols() != s.m || per_series_mse.rows() != static_cast<Eigen::Index>(methods.size())) {
    fail(ErrorCode::DimensionMismatch, "MSE table does not match methods x series");
  }
  const auto ref_it = std::find(methods.begin(), methods.end(), reference);
  if (ref_it == methods.end()) fail(ErrorCode::ConfigError, "reference method '" + reference + "' not evaluated");
  const auto ref = static_cast<Eigen::Index>(ref_it - methods.begin());

  EvaluationReport r;
  r.cell_label = std::move(cell_label);
  r.h = h;
  r.sample_kind = sample;
  r.reference = reference;
  r.methods = std::move(methods);
  r.series = s.labels;
  r.levels = s.level_names;
  r.per_series_mse = per_series_mse;

  const auto levels = static_cast<Eigen::Index>(s.level_names.size());
  const auto rows = per_series_mse.rows();
  r.per_level = Matrix::Zero(rows, levels);
  Vector members = Vector::Zero(levels);
  for (int i = 0; i < s.m; ++i) {
    const auto l = static_cast<Eigen::Index>(s.levels[static_cast<std::size_t>(i)]);
    r.per_level.col(l) += per_series_mse.col(i);
    members(l) += 1.0;
  }
  for (Eigen::Index l = 0; l < levels; ++l) r.per_level.col(l) /= members(l);
  r.overall = per_series_mse.rowwise().mean();

  r.pri_series.resize(rows, s.m);
  r.pri_level.resize(rows, levels);
  r.pri_overall.resize(rows);
  const Vector ref_series = per_series_mse.row(ref).transpose();
  const Vector ref_level = r.per_level.row(ref).transpose();
  for (Eigen::Index k = 0; k < rows; ++k) {
    r.pri_series.row(k) = percent_relative_improvement(per_series_mse.row(k).transpose(), ref_series).transpose();
    r.pri_level.row(k) = percent_relative_improvement(r.per_level.row(k).transpose(), ref_level).transpose();
    r.pri_overall(k) = 100.0 * (r.overall(k) / r.overall(ref) - 1.0);
  }
  return r;
}

std::vector<EvaluationReport> reports_from(const McResult& result) {
  std::vector<EvaluationReport> out;
  for (std::size_t c = 0; c < result.cells().size(); ++c) {
    for (std::size_t h = 0; h < result.horizons().size(); ++h) {
      for (SampleKind sample : {SampleKind::Insample, SampleKind::Outofsample}) {
        if (result.count(c, h, sample) == 0) continue;
        out.push_back(make_report(result.hierarchy(), result.mse(c, h, sample), mc_methods(), "base", sample,
                                  result.cells()[c].label, result.horizons()[h]));
      }
    }
  }
  return out;
}

std::string reports_csv(const std::vector<EvaluationReport>& reports) {
  std::string out = "cell,h,sample,method,level,mse,pri\n";
  for (const auto& r : reports) {
    const std::string prefix =
        r.cell_label + "," + std::to_string(r.h) + "," + std::string(sample_kind_name(r.sample_kind)) + ",";
    for (std::size_t k = 0; k < r.methods.size(); ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      for (std::size_t l = 0; l < r.levels.size(); ++l) {
        const auto li = static_cast<Eigen::Index>(l);
        out += prefix + r.methods[k] + "," + r.levels[l] + "," + csv::format_number(r.per_level(ki, li)) + "," +
               csv::format_number(r.pri_level(ki, li)) + "\n";
      }
      out += prefix + r.methods[k] + ",Overall," + csv::format_number(r.overall(ki)) + "," +
             csv::format_number(r.pri_overall(ki)) + "\n";
    }
  }
  return out;
}

std::string reports_text(const std::vector<EvaluationReport>& reports) {
  std::string out;
  char buf[64];
  for (const auto& r : reports) {
    out += r.cell_label + "  h=" + std::to_string(r.h) + "  " + std::string(sample_kind_name(r.sample_kind)) +
           "  (% change in MSE vs " + r.reference + "; level = unweighted mean over member series)\n";
    std::snprintf(buf, sizeof buf, "%-12s", "method");
    out += buf;
    for (const auto& l : r.levels) {
      std::snprintf(buf, sizeof buf, "%10s", l.c_str());
      out += buf;
    }
    out += "   Overall\n";
    for (std::size_t k = 0; k < r.methods.size(); ++k) {
      const auto ki = static_cast<Eigen::Index>(k);
      std::snprintf(buf, sizeof buf, "%-12s", r.methods[k].c_str());
      out += buf;
      for (Eigen::Index l = 0; l < r.pri_level.cols(); ++l) {
        std::snprintf(buf, sizeof buf, "%10.1f", r.pri_level(ki, l));
        out += buf;
      }
      std::snprintf(buf, sizeof buf, "%10.1f\n", r.pri_overall(ki));
      out += buf;
    }
    out += "\n";
  }
  return out;
}

bool TheoremReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const TheoremCheck& c) { return c.passed; });
}

CheckTolerances CheckTolerances::uniform(double t) { return {t, t, t, t, t}; }

namespace {

TheoremCheck at_most(std::string name, double value, double bound) {
  return {std::move(name), value <= bound, bound - value};
}

TheoremCheck strictly_below(std::string name, double value, double bound) {
  return {std::move(name), value < bound, bound - value};
}

std::pair<std::string, std::string> dims(const SummingMatrix& s) {
  return {"hierarchy", "m=" + std::to_string(s.m) + ",n=" + std::to_string(s.n)};
}

Matrix reconciled_cov(const SummingMatrix& s, const Matrix& g, const Matrix& w) {
  const Matrix sg = s.s * g;
  return sg * w * sg.transpose();
}

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

TheoremReport check_gls_mint_equivalence(const SummingMatrix& s, const Matrix& omega, const Matrix& sigma,
                                         const CheckTolerances& tol) {
  if (omega.rows() != s.n || omega.cols() != s.n || sigma.rows() != s.m || sigma.cols() != s.m) {
    fail(ErrorCode::DimensionMismatch, "omega must be n x n and sigma m x m");
  }
  require_cholesky(sigma, "sigma");
  if (symmetric_eigen_range(sym(omega)).min < -1e-9 * std::max(1.0, max_abs(omega))) {
    fail(ErrorCode::NotPositiveDefinite, "omega is not positive semi-definite");
  }
  const Matrix w = sym(s.s * omega * s.s.transpose() + sigma);
  const Matrix g_mint_w = g_mint(s, user_covariance(w)).g;
  const Matrix g_gls_sigma = g_gls(s, user_covariance(sigma)).g;
  const Matrix u = s.u();
  const Matrix ju = s.j * sigma * u;
  const Matrix g_ju = s.j - ju * (u.transpose() * sigma * u).llt().solve(u.transpose());
  const Matrix g_gls_id = g_gls(s, identity_scaled_covariance(s.m)).g;

  TheoremReport r;
  r.name = "gls_mint_equivalence";
  r.descriptors.push_back(dims(s));
  const double gap = max_abs(g_mint_w - g_gls_sigma);
  r.diagnostics.emplace_back("max_abs_gap", gap);
  r.checks.push_back(strictly_below("mint_equals_gls", gap, tol.equivalence));
  r.checks.push_back(strictly_below("ju_form_equals_mint", max_abs(g_ju - g_mint_w), tol.equivalence));
  r.checks.push_back(strictly_below("ju_form_equals_gls", max_abs(g_ju - g_gls_sigma), tol.equivalence));
  r.checks.push_back(strictly_below("gls_identity_equals_ols", max_abs(g_gls_id - g_ols(s).g), tol.equivalence));
  return r;
}

TheoremReport check_mint_ordering(const SummingMatrix& s, const Matrix& w_in, const CheckTolerances& tol) {
  if (w_in.rows() != s.m || w_in.cols() != s.m) fail(ErrorCode::DimensionMismatch, "W must be m x m");
  const Matrix w = sym(w_in);
  const auto llt = require_cholesky(w, "W");
  const double scale = symmetric_eigen_range(w).max;
  const double slack = tol.relative * scale;

  const Matrix v_ols = reconciled_cov(s, g_ols(s).g, w);
  const Matrix v_mint = reconciled_cov(s, g_mint(s, user_covariance(w)).g, w);
  const double tr_w = w.trace();
  const double tr_ols = v_ols.trace();
  const double tr_mint = v_mint.trace();

  const Matrix winv_s = llt.solve(s.s);
  const Matrix d = s.s * (s.s.transpose() * s.s).inverse() - winv_s * (s.s.transpose() * winv_s).inverse();
  const Matrix gap_form = s.s * d.transpose() * w * d * s.s.transpose();
  const Matrix gap = sym(v_ols - v_mint);

  TheoremReport r;
  r.name = "mint_ordering";
  r.descriptors.push_back(dims(s));
  r.diagnostics.emplace_back("trace_base", tr_w);
  r.diagnostics.emplace_back("trace_ols", tr_ols);
  r.diagnostics.emplace_back("trace_mint", tr_mint);
  const double min_eig = symmetric_eigen_range(gap).min;
  r.diagnostics.emplace_back("min_eig_ols_minus_mint", min_eig);

  r.checks.push_back(at_most("trace_mint_le_ols", tr_mint, tr_ols + tol.relative * tr_w));
  if (s.m > s.n) {
    r.checks.push_back(strictly_below("trace_ols_lt_base", tr_ols, tr_w));
  } else {
    r.checks.push_back(at_most("trace_ols_eq_base", std::abs(tr_ols - tr_w), tol.relative * tr_w));
  }
  const Vector diag_mint = v_mint.diagonal();
  r.checks.push_back(at_most("diag_mint_le_ols", (diag_mint - v_ols.diagonal()).maxCoeff(), slack));
  r.checks.push_back(at_most("diag_mint_le_base", (diag_mint - w.diagonal()).maxCoeff(), slack));
  r.checks.push_back(at_most("gap_equals_dh_form", max_abs(gap - gap_form), slack));
  r.checks.push_back(at_most("gap_psd", -min_eig, slack));
  return r;
}

TheoremReport check_coherence_cost(const SummingMatrix& s, const Matrix& v_in, const Matrix& cross,
                             const CheckTolerances& tol) {
  if (v_in.rows() != s.m || v_in.cols() != s.m || cross.rows() != s.n || cross.cols() != s.m) {
    fail(ErrorCode::DimensionMismatch, "V must be m x m and cross n x m");
  }
  const Matrix v = sym(v_in);
  const auto v_llt = require_cholesky(v, "V");
  const Matrix u = s.u();
  const Matrix vinv = v_llt.solve(Matrix::Identity(s.m, s.m));
  Matrix k = -vinv;
  if (u.cols() > 0) {
    const auto uvu = require_cholesky(u.transpose() * v * u, "U'VU");
    k += u * uvu.solve(u.transpose());
  }
  k = sym(k);
  const Matrix sc = s.s * cross;
  const Matrix delta = sym(sc * k * sc.transpose());

  // Direct route: MSE(G) = E[bb'] - G C' - C G' + G V G' with C = J V + cross;
  // E[bb'] cancels in the difference.
  const Matrix c = s.j * v + cross;
  auto mse_part = [&](const Matrix& g) -> Matrix { return -g * c.transpose() - c * g.transpose() + g * v * g.transpose(); };
  const Matrix g_unc = s.j + cross * vinv;
  const Matrix g_con = s.j + cross * (k + vinv);
  const Matrix part_unc = s.s * mse_part(g_unc) * s.s.transpose();
  const Matrix part_con = s.s * mse_part(g_con) * s.s.transpose();
  const Matrix delta_direct = sym(part_unc - part_con);

  const double scale_delta = std::max(symmetric_eigen_range(sym(sc * vinv * sc.transpose())).max,
                                      std::numeric_limits<double>::min());
  const double scale_k = symmetric_eigen_range(vinv).max;
  const double scale_direct = std::max({scale_delta, max_abs(part_unc), max_abs(part_con)});

  TheoremReport r;
  r.name = "coherence_cost";
  r.descriptors.push_back(dims(s));
  const double max_eig_delta = symmetric_eigen_range(delta).max;
  const double max_eig_k = symmetric_eigen_range(k).max;
  r.diagnostics.emplace_back("max_eig_delta", max_eig_delta);
  r.diagnostics.emplace_back("max_eig_delta_star", max_eig_k);
  r.diagnostics.emplace_back("trace_delta", delta.trace());
  r.checks.push_back(at_most("delta_nsd", max_eig_delta, tol.relative * scale_delta));
  r.checks.push_back(at_most("delta_diag_nonpositive", delta.diagonal().maxCoeff(), tol.relative * scale_delta));
  r.checks.push_back(at_most("delta_star_nsd", max_eig_k, tol.relative * scale_k));
  r.checks.push_back(
      at_most("delta_matches_direct_mse", max_abs(delta - delta_direct), tol.relative * scale_direct));
  return r;
}

TheoremReport check_emint_insample_fit(const TrainingPanel& panel, const SummingMatrix& s, const CheckTolerances& tol) {
  if (panel.alignment != Alignment::Insample || panel.h != 1) {
    fail(ErrorCode::ConfigError, "the in-sample fit check needs an in-sample panel with h = 1");
  }
  TheoremReport r;
  r.name = "emint_insample_fit";
  r.descriptors.push_back(dims(s));
  r.descriptors.emplace_back("rows", std::to_string(panel.y_mat.rows()));

  bool gram_pd = true;
  ReconciliationMap emint;
  try {
    emint = g_emint_u(panel, s, GramPolicy::Strict);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularGram) throw;
    gram_pd = false;
    emint = g_emint_u(panel, s, GramPolicy::SvdFallback);
  }
  const Matrix residuals = panel.y_mat - panel.yhat_mat;
  ReconciliationMap mint;
  if (residuals.cwiseAbs().maxCoeff() == 0.0) {
    mint = g_ols(s);
  } else {
    mint = g_mint(s, sample_covariance(residuals));
  }
  const double sse_emint = (panel.y_mat - apply(emint, s, panel.yhat_mat)).squaredNorm();
  const double sse_mint = (panel.y_mat - apply(mint, s, panel.yhat_mat)).squaredNorm();
  r.diagnostics.emplace_back("gram_pd", gram_pd ? 1.0 : 0.0);
  r.diagnostics.emplace_back("sse_emint_u", sse_emint);
  r.diagnostics.emplace_back("sse_mint_sample", sse_mint);
  // Rounding floor for panels that both maps reproduce exactly.
  const double floor = std::pow(tol.relative * panel.y_mat.norm(), 2);
  r.checks.push_back(at_most("emint_u_sse_le_mint_sample", sse_emint, sse_mint * (1.0 + tol.relative) + floor));
  return r;
}

TheoremCheck check_ols_distance(const SummingMatrix& s, const Vector& base_row, const Vector& actual_row,
                                const CheckTolerances& tol) {
  if (base_row.size() != s.m || actual_row.size() != s.m) {
    fail(ErrorCode::DimensionMismatch, "base and actual rows must have m entries");
  }
  const Vector reconciled = apply(g_ols(s), s, base_row);
  return at_most("ols_euclidean_dominance", (actual_row - reconciled).norm(),
                 (actual_row - base_row).norm() + tol.euclidean * actual_row.norm());
}

TheoremReport check_projection_norms(const SummingMatrix& s, const Matrix& w, const CheckTolerances& tol) {
  const Matrix g_o = g_ols(s).g;
  const std::vector<std::pair<std::string, Matrix>> maps{
      {"bu", g_bottom_up(s).g},
      {"ols", g_o},
      {"wls", g_wls(s, user_covariance(Matrix(w.diagonal().asDiagonal()))).g},
      {"mint", g_mint(s, user_covariance(w)).g},
  };
  const Matrix p_ols = s.s * g_o;
  TheoremReport r;
  r.name = "projection_norms";
  r.descriptors.push_back(dims(s));
  for (const auto& [name, g] : maps) {
    const Matrix p = s.s * g;
    const double sigma = largest_singular_value(p);
    r.diagnostics.emplace_back("sigma_max_" + name, sigma);
    r.checks.push_back(at_most(name + "_sigma_ge_1", 1.0 - sigma, tol.unit_norm));
    if (name == "ols") {
      r.checks.push_back(at_most("ols_sigma_eq_1", std::abs(sigma - 1.0), tol.unit_norm));
    } else if (max_abs(p - p_ols) > 1e-6) {
      r.checks.push_back(strictly_below(name + "_sigma_gt_1", 1.0 + tol.unit_norm, sigma));
    }
  }
  return r;
}

TheoremReport check_special_cases(const SummingMatrix& s, const Vector& diag, const CheckTolerances& tol) {
  if (diag.size() != s.m) fail(ErrorCode::DimensionMismatch, "diagonal must have m entries");
  const auto lam = user_covariance(Matrix(diag.asDiagonal()));
  TheoremReport r;
  r.name = "special_cases";
  r.descriptors.push_back(dims(s));
  r.checks.push_back(
      at_most("mint_identity_equals_ols", max_abs(g_mint(s, identity_scaled_covariance(s.m)).g - g_ols(s).g),
              tol.collapse));
  r.checks.push_back(at_most("mint_diag_equals_wls", max_abs(g_mint(s, lam).g - g_wls(s, lam).g), tol.collapse));
  return r;
}

Matrix random_pd(int k, Rng& rng) {
  const Matrix z = rng.normal_matrix(k, k);
  return sym(z * z.transpose() / k + 0.1 * Matrix::Identity(k, k));
}

Matrix random_psd(int k, int rank, Rng& rng) {
  const Matrix z = rng.normal_matrix(k, rank);
  return sym(z * z.transpose());
}

std::vector<std::pair<std::string, SummingMatrix>> test_hierarchies() {
  return {
      {"three_node", build_summing_matrix(HierarchySpec::parse("Total = A + B"))},
      {"figure_one", build_summing_matrix(HierarchySpec::two_level({3, 2}))},
      {"forty_three", build_summing_matrix(HierarchySpec::two_level(std::vector<int>(6, 6)))},
  };
}

namespace {

class SuiteTally {
 public:
  void add(const std::string& prefix, const TheoremCheck& c) {
    auto [it, fresh] = index_.try_emplace(prefix + c.name, lines_.size());
    if (fresh) lines_.push_back({prefix + c.name, 0, 0, std::numeric_limits<double>::infinity()});
    SuiteLine& line = lines_[it->second];
    ++line.instances;
    if (!c.passed) ++line.failures;
    line.worst_margin = std::min(line.worst_margin, c.margin);
  }
  void add(const std::string& prefix, const TheoremReport& r) {
    for (const auto& c : r.checks) add(prefix, c);
  }
  void add_error(const std::string& name) { add(name + ":", TheoremCheck{"error", false, -1.0}); }
  std::vector<SuiteLine> lines() const { return lines_; }

 private:
  std::vector<SuiteLine> lines_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace

std::vector<SuiteLine> run_verification_suite(std::uint64_t seed, int instances, const CheckTolerances& tol) {
  if (instances < 1) fail(ErrorCode::ConfigError, "instances must be at least 1");
  SuiteTally tally;
  Rng rng(seed);
  const auto shapes = test_hierarchies();
  for (const auto& [name, s] : shapes) {
    const std::string prefix = name + ":";
    for (int i = 0; i < instances; ++i) {
      try {
        const Matrix omega = random_psd(s.n, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(s.n))), rng);
        const Matrix sigma = random_pd(s.m, rng);
        tally.add(prefix, check_gls_mint_equivalence(s, omega, sigma, tol));
        const Matrix w = random_pd(s.m, rng);
        tally.add(prefix, check_mint_ordering(s, w, tol));
        tally.add(prefix, check_projection_norms(s, w, tol));
        Vector diag(s.m);
        for (int j = 0; j < s.m; ++j) diag(j) = rng.uniform(0.5, 5.0);
        tally.add(prefix, check_special_cases(s, diag, tol));
        const Matrix v = random_pd(s.m, rng);
        const Matrix cross = rng.normal_matrix(s.n, s.m);
        tally.add(prefix, check_coherence_cost(s, v, cross, tol));
        const Vector actual = s.s * rng.normal_matrix(s.n, 1);
        const Vector base = actual + rng.normal_matrix(s.m, 1);
        tally.add(prefix, check_ols_distance(s, base, actual, tol));
      } catch (const Error&) {
        tally.add_error(name);
      }
    }
  }

  const SummingMatrix small = build_summing_matrix(HierarchySpec::two_level({2, 2}));
  const double rhos[] = {-0.8, 0.0, 0.8};
  for (int i = 0; i < instances; ++i) {
    try {
      Var1Config cfg;
      cfg.coeff = small_design_coefficient();
      cfg.innov_cov = small_design_cov(rhos[i % 3]);
      cfg.t_total = 101;
      cfg.seed = seed ^ static_cast<std::uint64_t>(i);
      const ObservationPanel panel = simulate_var1(cfg, small);
      const ForecastPanel fp = build_forecast_panel(panel.y, kDefaultMaxP, 1, small.labels);
      const TrainingPanel tp =
          TrainingPanel::make(panel.y.bottomRows(fp.fitted.rows()), fp.fitted, small, Alignment::Insample, 1);
      tally.add("small_design:", check_emint_insample_fit(tp, small, tol));
    } catch (const Error&) {
      tally.add_error("small_design");
    }
  }
  return tally.lines();
}

std::string format_suite(const std::vector<SuiteLine>& lines) {
  std::string out;
  char buf[256];
  for (const auto& l : lines) {
    std::snprintf(buf, sizeof buf, "%-4s %-45s instances=%d failures=%d worst_margin=%.6e\n",
                  l.failures == 0 ? "PASS" : "FAIL", l.check.c_str(), l.instances, l.failures, l.worst_margin);
    out += buf;
  }
  return out;
}

}  // namespace recon
