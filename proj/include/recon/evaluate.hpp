#pragma once

#include "recon/hierarchy.hpp"
#include "recon/random.hpp"
#include "recon/reconcile.hpp"
#include "recon/simulate.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace recon {

/// Column means of squared errors.
Vector mse_table(const Matrix& actuals, const Matrix& predictions);

/// 100 * (method / reference - 1); negative is an improvement.
Vector percent_relative_improvement(const Vector& method_mse, const Vector& reference_mse);

struct EvaluationReport {
  std::string cell_label;
  int h = 1;
  SampleKind sample_kind = SampleKind::Outofsample;
  std::string reference;
  std::vector<std::string> methods;
  std::vector<std::string> series;
  std::vector<std::string> levels;
  Matrix per_series_mse;  // methods x m
  Matrix per_level;       // methods x levels, unweighted mean over member series
  Vector overall;         // mean over all m series
  Matrix pri_series;
  Matrix pri_level;
  Vector pri_overall;
};

/// Throws ConfigError if the reference is not among the methods.
EvaluationReport make_report(const SummingMatrix& s, const Matrix& per_series_mse, std::vector<std::string> methods,
                             const std::string& reference, SampleKind sample, std::string cell_label = {}, int h = 1);

/// One report per (cell, horizon, sample) of a Monte Carlo result, referenced to "base".
std::vector<EvaluationReport> reports_from(const McResult& result);

/// cell,h,sample,method,level,mse,pri  (level "Overall" is the all-series mean)
std::string reports_csv(const std::vector<EvaluationReport>& reports);
/// Aligned text tables with Top / Level k / Bottom / Overall columns.
std::string reports_text(const std::vector<EvaluationReport>& reports);

struct TheoremCheck {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // distance from the tolerance boundary; negative on failure
};

struct TheoremReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> descriptors;
  std::vector<std::pair<std::string, double>> diagnostics;
  std::vector<TheoremCheck> checks;

  bool passed() const;
};

struct CheckTolerances {
  double equivalence = 1e-7;
  double relative = 1e-9;
  double euclidean = 1e-10;
  double unit_norm = 1e-8;
  double collapse = 1e-10;

  /// Every tolerance set to the same value (0 turns slack off).
  static CheckTolerances uniform(double tol);
};

TheoremReport check_gls_mint_equivalence(const SummingMatrix& s, const Matrix& omega, const Matrix& sigma,
                                         const CheckTolerances& tol = {});
TheoremReport check_mint_ordering(const SummingMatrix& s, const Matrix& w, const CheckTolerances& tol = {});
TheoremReport check_coherence_cost(const SummingMatrix& s, const Matrix& v, const Matrix& cross,
                             const CheckTolerances& tol = {});
/// Falls back to the minimum-norm map when the Gram matrix is singular and
/// records gram_pd = 0 in the diagnostics.
TheoremReport check_emint_insample_fit(const TrainingPanel& panel, const SummingMatrix& s, const CheckTolerances& tol = {});
TheoremCheck check_ols_distance(const SummingMatrix& s, const Vector& base_row, const Vector& actual_row,
                                const CheckTolerances& tol = {});
/// sigma_max(SG) for BU, OLS, WLS(diag w), MinT(w): >= 1 for all, = 1 for OLS,
/// > 1 for any map that differs from OLS.
TheoremReport check_projection_norms(const SummingMatrix& s, const Matrix& w, const CheckTolerances& tol = {});
/// g_mint(I) = g_ols and g_mint(diag) = g_wls(diag).
TheoremReport check_special_cases(const SummingMatrix& s, const Vector& diag, const CheckTolerances& tol = {});

/// Z Z' / k + 0.1 I for a k x k standard normal Z.
Matrix random_pd(int k, Rng& rng);
/// Rank-r PSD matrix.
Matrix random_psd(int k, int rank, Rng& rng);

/// The three test shapes: Total -> {A, B}; Total -> {A(3), B(2)}; Total -> 6 x 6.
std::vector<std::pair<std::string, SummingMatrix>> test_hierarchies();

struct SuiteLine {
  std::string check;
  int instances = 0;
  int failures = 0;
  double worst_margin = 0.0;
};

/// Random-instance sweep over every check. Deterministic given the seed.
std::vector<SuiteLine> run_verification_suite(std::uint64_t seed, int instances, const CheckTolerances& tol = {});
std::string format_suite(const std::vector<SuiteLine>& lines);

}  // namespace recon
