#include "recon/basemodels.hpp"
#include "recon/covariance.hpp"
#include "recon/csv.hpp"
#include "recon/error.hpp"
#include "recon/evaluate.hpp"
#include "recon/hierarchy.hpp"
#include "recon/reconcile.hpp"
#include "recon/simulate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace recon;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kVerifyFailed = 1, kConfig = 2, kIo = 3 };

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create directory " + dir.string() + ": " + ec.message());
}

int worker_count(std::optional<int> requested) {
  int n = requested.value_or(static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
  if (const char* env = std::getenv("RECON_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(1, n);
}

// Columns of `table` rearranged into hierarchy order.
Matrix columns_in_order(const csv::LabeledMatrix& table, const SummingMatrix& s, const std::string& flag) {
  Matrix out(table.values.rows(), s.m);
  for (int i = 0; i < s.m; ++i) {
    const auto& label = s.labels[static_cast<std::size_t>(i)];
    const auto it = std::find(table.col_labels.begin(), table.col_labels.end(), label);
    if (it == table.col_labels.end()) fail(ErrorCode::ConfigError, flag + ": missing column '" + label + "'");
    out.col(i) = table.values.col(it - table.col_labels.begin());
  }
  return out;
}

Matrix square_in_order(const csv::LabeledMatrix& table, const SummingMatrix& s, const std::string& flag) {
  const Matrix cols = columns_in_order(table, s, flag);
  if (table.row_labels.size() != table.col_labels.size()) fail(ErrorCode::ConfigError, flag + ": matrix is not square");
  Matrix out(s.m, s.m);
  for (int i = 0; i < s.m; ++i) {
    const auto& label = s.labels[static_cast<std::size_t>(i)];
    const auto it = std::find(table.row_labels.begin(), table.row_labels.end(), label);
    if (it == table.row_labels.end()) fail(ErrorCode::ConfigError, flag + ": missing row '" + label + "'");
    out.row(i) = cols.row(it - table.row_labels.begin());
  }
  return out;
}

std::vector<std::string> index_labels(Eigen::Index rows, const std::string& prefix) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < rows; ++i) out.push_back(prefix + std::to_string(i + 1));
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string design = "small";
  std::vector<double> rho;
  std::vector<long> t{101};
  std::vector<int> horizons{1};
  int reps = 0;
  std::optional<std::uint64_t> seed;
  std::string correlation = "nonnegative";
  int max_p = kDefaultMaxP;
  double eps = 0.1;
  std::optional<int> threads;
  std::string out;
};

int cmd_simulate(const SimulateOpts& o) {
  if (!o.seed) fail(ErrorCode::ConfigError, "--seed is required");
  if (o.reps < 1) fail(ErrorCode::ConfigError, "--reps must be at least 1");
  std::vector<Eigen::Index> sizes(o.t.begin(), o.t.end());
  McDesign design;
  if (o.design == "small") {
    design = small_design(o.rho.empty() ? std::vector<double>{-0.8, 0.0, 0.8} : o.rho, sizes, o.reps, *o.seed);
  } else if (o.design == "large") {
    const auto mode = o.correlation == "mixed" ? CorrelationMode::Mixed : CorrelationMode::Nonnegative;
    design = large_design(mode, sizes, o.reps, *o.seed);
  } else {
    fail(ErrorCode::ConfigError, "--design must be small or large");
  }
  design.horizons = o.horizons;
  design.max_p = o.max_p;
  design.between_eps = o.eps;
  design.threads = worker_count(o.threads);

  std::string canonical = "design=" + o.design + ";reps=" + std::to_string(o.reps) + ";seed=" +
                          std::to_string(*o.seed) + ";max_p=" + std::to_string(o.max_p) + ";t=";
  for (auto t : o.t) canonical += std::to_string(t) + ",";
  canonical += ";h=";
  for (auto h : o.horizons) canonical += std::to_string(h) + ",";
  if (o.design == "small") {
    canonical += ";rho=";
    for (double r : design.rho_grid) canonical += csv::format_number(r) + ",";
  } else {
    canonical += ";correlation=" + o.correlation + ";eps=" + csv::format_number(o.eps);
  }

  const McResult result = run_monte_carlo(design);
  const auto reports = reports_from(result);

  const fs::path out(o.out);
  ensure_dir(out);
  csv::write_atomic(out / "results.csv", result.tidy_csv());
  csv::write_atomic(out / "report.csv", reports_csv(reports));
  csv::write_atomic(out / "report.txt", reports_text(reports));

  std::string manifest = "tool_version = " + std::string(kVersion) + "\n";
  manifest += "seed = " + std::to_string(*o.seed) + "\n";
  manifest += "design = " + canonical + "\n";
  manifest += "design_hash = " + hex(fnv1a(canonical)) + "\n";
  for (std::size_t c = 0; c < result.cells().size(); ++c) {
    manifest += "cell " + result.cells()[c].label + ": completed = " + std::to_string(result.completed[c]) +
                ", skipped = " + std::to_string(result.skipped[c]);
    for (const auto& [reason, n] : result.skip_reasons[c]) manifest += ", " + reason + " = " + std::to_string(n);
    manifest += "\n";
  }
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest += "timestamp = " + std::string(stamp) + "\n";
  csv::write_atomic(out / "manifest.txt", manifest);

  std::cout << reports_text(reports);
  return kOk;
}

// --------------------------------------------------------------- reconcile

struct ReconcileOpts {
  std::string hierarchy;
  std::string base;
  std::string history;
  std::string method;
  std::string residuals;
  std::string cov_file;
  std::string actuals;
  std::string fitted;
  int h = 1;
  int max_p = kDefaultMaxP;
  std::string out;
};

int cmd_reconcile(const ReconcileOpts& o) {
  static const std::vector<std::string> methods{"bu", "ols", "wls", "mint_sample", "mint_shrink", "gls", "erm", "emint_u"};
  if (std::find(methods.begin(), methods.end(), o.method) == methods.end()) {
    fail(ErrorCode::ConfigError, "--method must be one of bu, ols, wls, mint_sample, mint_shrink, gls, erm, emint_u");
  }
  if (o.base.empty() == o.history.empty()) fail(ErrorCode::MissingInput, "exactly one of --base or --history is required");
  const SummingMatrix s = build_summing_matrix(HierarchySpec::parse(csv::read_text(o.hierarchy)));
  const fs::path out(o.out);

  Matrix base;
  std::vector<std::string> base_rows;
  std::optional<Matrix> residuals;
  std::optional<Matrix> insample_actual;
  std::optional<Matrix> insample_fitted;
  std::optional<csv::LabeledMatrix> models_table;
  std::vector<std::string> comments;
  if (!o.base.empty()) {
    const auto table = csv::read(o.base);
    base = columns_in_order(table, s, "--base");
    base_rows = table.row_labels.empty() ? index_labels(base.rows(), "") : table.row_labels;
  } else {
    const auto table = csv::read(o.history);
    const Matrix y = columns_in_order(table, s, "--history");
    const ForecastPanel fp = build_forecast_panel(y, o.max_p, o.h, s.labels);
    base = fp.base;
    base_rows = index_labels(base.rows(), "h");
    const ForecastPanel one = o.h == 1 ? fp : build_forecast_panel(y, o.max_p, 1, s.labels);
    residuals = one.residuals;
    insample_actual = y.bottomRows(fp.fitted.rows());
    insample_fitted = fp.fitted;
    csv::LabeledMatrix models;
    models.corner = "series";
    models.col_labels = {"p", "intercept", "sigma2", "aicc"};
    for (int i = 1; i <= o.max_p; ++i) models.col_labels.push_back("phi" + std::to_string(i));
    models.values = Matrix::Zero(s.m, 4 + o.max_p);
    for (int i = 0; i < s.m; ++i) {
      const ARModel& mdl = fp.models[static_cast<std::size_t>(i)];
      models.row_labels.push_back(mdl.series_id);
      models.values(i, 0) = mdl.order_p;
      models.values(i, 1) = mdl.intercept;
      models.values(i, 2) = mdl.sigma2;
      models.values(i, 3) = mdl.aicc;
      for (int k = 0; k < mdl.order_p; ++k) models.values(i, 4 + k) = mdl.coefficients(k);
    }
    models_table = models;
    comments.push_back("base = AR forecasts from " + o.history);
  }
  if (!o.residuals.empty()) residuals = columns_in_order(csv::read(o.residuals), s, "--residuals");
  if (!o.actuals.empty()) insample_actual = columns_in_order(csv::read(o.actuals), s, "--actuals");
  if (!o.fitted.empty()) insample_fitted = columns_in_order(csv::read(o.fitted), s, "--fitted");
  std::optional<Matrix> cov;
  if (!o.cov_file.empty()) cov = square_in_order(csv::read(o.cov_file), s, "--cov-file");

  auto need_cov = [&](const std::string& what) -> CovarianceEstimate {
    if (cov) return user_covariance(*cov);
    if (!residuals) fail(ErrorCode::MissingInput, o.method + " needs --residuals or --cov-file (" + what + ")");
    if (o.method == "wls") return diagonal_covariance(*residuals);
    if (o.method == "mint_shrink") return shrink_covariance(*residuals);
    return sample_covariance(*residuals);
  };
  auto need_panel = [&](Alignment alignment) {
    if (!insample_actual) fail(ErrorCode::MissingInput, o.method + " needs --actuals");
    if (!insample_fitted) fail(ErrorCode::MissingInput, o.method + " needs --fitted");
    return TrainingPanel::make(*insample_actual, *insample_fitted, s, alignment, o.h);
  };

  ReconciliationMap map;
  std::string provenance = "none";
  if (o.method == "bu") {
    map = g_bottom_up(s);
  } else if (o.method == "ols") {
    map = g_ols(s);
  } else if (o.method == "wls" || o.method == "mint_sample" || o.method == "mint_shrink" || o.method == "gls") {
    const CovarianceEstimate w = need_cov("covariance");
    provenance = std::string(cov_kind_name(w.kind));
    if (w.shrink_lambda) provenance += " lambda=" + csv::format_number(*w.shrink_lambda);
    if (o.method == "wls") {
      map = g_wls(s, cov ? user_covariance(Matrix(cov->diagonal().asDiagonal())) : w);
    } else if (o.method == "gls") {
      map = g_gls(s, w);
    } else {
      map = g_mint(s, w);
    }
  } else if (o.method == "erm") {
    map = g_erm(need_panel(Alignment::Holdout), s);
    provenance = "holdout panel";
  } else {
    map = g_emint_u(need_panel(Alignment::Insample), s);
    provenance = "in-sample panel";
  }

  const Matrix reconciled = apply(map, s, base);
  const ObservationPanel check = ObservationPanel::from_all(reconciled, s, base_rows);
  const CoherenceReport coherence = validate_coherence(check, s);
  if (!coherence.coherent()) {
    fail(ErrorCode::IncoherentOutput, "max violation " + csv::format_number(coherence.max_violation));
  }

  comments.insert(comments.begin(), "method = " + o.method);
  comments.insert(comments.begin() + 1, "covariance = " + provenance);
  ensure_dir(out);
  csv::LabeledMatrix rec{"t", base_rows, s.labels, reconciled};
  std::vector<std::string> bottom_labels(s.labels.end() - s.n, s.labels.end());
  csv::LabeledMatrix gm{"bottom", bottom_labels, s.labels, map.g};
  csv::write_atomic(out / "reconciled.csv", csv::format(rec, comments));
  csv::write_atomic(out / "g.csv", csv::format(gm, comments));
  if (models_table) csv::write_atomic(out / "models.csv", csv::format(*models_table));
  return kOk;
}

// ------------------------------------------------------------------ verify

struct VerifyOpts {
  std::optional<std::uint64_t> seed;
  int instances = 100;
  std::optional<double> break_tolerance;
  std::string out;
};

int cmd_verify(const VerifyOpts& o) {
  if (!o.seed) fail(ErrorCode::ConfigError, "--seed is required");
  const CheckTolerances tol = o.break_tolerance ? CheckTolerances::uniform(*o.break_tolerance) : CheckTolerances{};
  const auto lines = run_verification_suite(*o.seed, o.instances, tol);
  const std::string report = format_suite(lines);
  std::cout << report;
  if (!o.out.empty()) csv::write_atomic(o.out, report);
  const bool ok = std::all_of(lines.begin(), lines.end(), [](const SuiteLine& l) { return l.failures == 0; });
  return ok ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
  std::string hierarchy;
  std::string actuals;
  std::vector<std::string> predictions;
  std::string reference = "base";
  std::string sample = "outofsample";
  std::string out;
};

int cmd_evaluate(const EvaluateOpts& o) {
  const SummingMatrix s = build_summing_matrix(HierarchySpec::parse(csv::read_text(o.hierarchy)));
  const Matrix actual = columns_in_order(csv::read(o.actuals), s, "--actuals");
  if (o.predictions.empty()) fail(ErrorCode::MissingInput, "--pred name=path is required");
  if (o.sample != "insample" && o.sample != "outofsample") fail(ErrorCode::ConfigError, "--sample must be insample or outofsample");
  std::vector<std::string> names;
  Matrix mse(static_cast<Eigen::Index>(o.predictions.size()), s.m);
  for (std::size_t k = 0; k < o.predictions.size(); ++k) {
    const auto eq = o.predictions[k].find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorCode::ConfigError, "--pred expects name=path");
    names.push_back(o.predictions[k].substr(0, eq));
    const Matrix pred = columns_in_order(csv::read(o.predictions[k].substr(eq + 1)), s, "--pred " + names.back());
    mse.row(static_cast<Eigen::Index>(k)) = mse_table(actual, pred).transpose();
  }
  const auto sample = o.sample == "insample" ? SampleKind::Insample : SampleKind::Outofsample;
  const std::vector<EvaluationReport> reports{make_report(s, mse, names, o.reference, sample, "evaluation")};
  const fs::path out(o.out);
  ensure_dir(out);
  csv::write_atomic(out / "report.csv", reports_csv(reports));
  csv::write_atomic(out / "report.txt", reports_text(reports));
  std::cout << reports_text(reports);
  return kOk;
}

int exit_code_for(ErrorCode code) { return code == ErrorCode::IoError ? kIo : kConfig; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forecast reconciliation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo comparison of reconciliation methods");
  simulate->add_option("--design", sim.design, "small or large")->check(CLI::IsMember({"small", "large"}));
  simulate->add_option("--rho", sim.rho, "innovation correlation grid (small design)");
  simulate->add_option("--t", sim.t, "sample sizes");
  simulate->add_option("--horizons", sim.horizons, "forecast horizons");
  simulate->add_option("--reps", sim.reps, "replications per cell")->required();
  simulate->add_option("--seed", sim.seed, "base seed")->required();
  simulate->add_option("--correlation", sim.correlation, "nonnegative or mixed (large design)")
      ->check(CLI::IsMember({"nonnegative", "mixed"}));
  simulate->add_option("--max-p", sim.max_p, "largest AR order considered");
  simulate->add_option("--eps", sim.eps, "between-block noise level (large design)");
  simulate->add_option("--threads", sim.threads, "worker threads (capped by RECON_THREADS)");
  simulate->add_option("--out", sim.out, "output directory")->required();

  ReconcileOpts rec;
  auto* reconcile = app.add_subcommand("reconcile", "Reconcile base forecasts");
  reconcile->add_option("--hierarchy", rec.hierarchy, "hierarchy file (PARENT = A + B lines)")->required();
  reconcile->add_option("--base", rec.base, "base forecasts CSV");
  reconcile->add_option("--history", rec.history, "history CSV; AR base forecasts are fitted from it");
  reconcile->add_option("--method", rec.method, "bu, ols, wls, mint_sample, mint_shrink, gls, erm, emint_u")->required();
  reconcile->add_option("--residuals", rec.residuals, "base-forecast residuals CSV");
  reconcile->add_option("--cov-file", rec.cov_file, "covariance matrix CSV");
  reconcile->add_option("--actuals", rec.actuals, "actuals aligned with --fitted (erm, emint_u)");
  reconcile->add_option("--fitted", rec.fitted, "fitted or holdout forecasts (erm, emint_u)");
  reconcile->add_option("--horizon", rec.h, "forecast horizon when using --history");
  reconcile->add_option("--max-p", rec.max_p, "largest AR order when using --history");
  reconcile->add_option("--out", rec.out, "output directory")->required();

  VerifyOpts ver;
  auto* verify = app.add_subcommand("verify", "Numerical checks of the reconciliation results");
  verify->add_option("--seed", ver.seed, "seed for random instances")->required();
  verify->add_option("--instances", ver.instances, "instances per check and hierarchy");
  verify->add_option("--break-tolerance", ver.break_tolerance, "override every tolerance (negative control)");
  verify->add_option("--out", ver.out, "also write the report to this file");

  EvaluateOpts ev;
  auto* evaluate = app.add_subcommand("evaluate", "MSE and percentage relative improvement tables");
  evaluate->add_option("--hierarchy", ev.hierarchy, "hierarchy file")->required();
  evaluate->add_option("--actuals", ev.actuals, "actuals CSV")->required();
  evaluate->add_option("--pred", ev.predictions, "name=path, repeatable")->required();
  evaluate->add_option("--reference", ev.reference, "reference method name");
  evaluate->add_option("--sample", ev.sample, "insample or outofsample");
  evaluate->add_option("--out", ev.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*reconcile) return cmd_reconcile(rec);
    if (*verify) return cmd_verify(ver);
    if (*evaluate) return cmd_evaluate(ev);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
