#pragma once

#include "recon/hierarchy.hpp"
#include "recon/linalg.hpp"
#include "recon/random.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace recon {

/// r * [[cos a, -sin a], [sin a, cos a]]: the real 2x2 matrix with
/// eigenvalues r * exp(+-i a).
Matrix rotation_coefficient(double modulus, double angle);

/// Block-diagonal VAR(1) coefficient for the seven-series design: blocks with
/// eigenvalues 0.6 exp(+-i pi/3) and 0.9 exp(+-i pi/6).
Matrix small_design_coefficient();

/// Innovation covariance blockdiag(S1, S1), S1 = [[2, sqrt(6) rho], [sqrt(6) rho, 3]].
/// |rho| must not exceed 0.8.
Matrix small_design_cov(double rho);

/// n x n block-diagonal coefficient alternating the two rotation blocks of
/// the small design (n must be even).
Matrix alternating_rotation_coefficient(int n);

/// Compound-symmetric diagonal blocks with rho_b ~ U(lo, hi); entries across
/// blocks are between_eps * u_i'u_j for random unit vectors u_i with
/// non-negative components. Throws NotPositiveDefinite when the result is
/// not PD.
Matrix block_correlation(int n_blocks, int block_size, std::pair<double, double> within_range,
                         double between_eps, Rng& rng);

/// D * corr * D with sd_i ~ U(lo, hi). With negate_fraction > 0, that
/// fraction of series has its sign flipped (Q D corr D Q, Q = diag(+-1)),
/// which negates their covariances with unflipped series and keeps PD.
Matrix cov_from_correlation(const Matrix& corr, std::pair<double, double> sd_range, double negate_fraction,
                            Rng& rng);

struct Var1Config {
  Matrix coeff;
  Matrix innov_cov;
  Eigen::Index t_total = 0;
  Eigen::Index burn_in = 100;
  std::uint64_t seed = 0;
};

/// b_t = A b_{t-1} + e_t with e_t = L z_t, L the Cholesky factor of the
/// innovation covariance and z_t drawn column by column. Starts from b_0 = 0
/// and discards burn_in steps.
ObservationPanel simulate_var1(const Var1Config& cfg, const SummingMatrix& s);

enum class CorrelationMode { Nonnegative, Mixed };

enum class DesignKind { Small, Large, Custom };

struct McDesign {
  DesignKind kind = DesignKind::Small;
  HierarchySpec hierarchy;
  /// Coefficient, burn-in and base seed; innov_cov is used only by Custom.
  Var1Config var1;
  int replications = 1;
  std::vector<int> horizons{1};
  std::vector<double> rho_grid;
  CorrelationMode correlation_mode = CorrelationMode::Nonnegative;
  std::vector<Eigen::Index> sample_sizes;
  int max_p = 5;
  double between_eps = 0.1;
  double negate_fraction = 0.3;
  int threads = 1;
};

/// Seven-series design (4 bottom series in two pairs).
McDesign small_design(std::vector<double> rho_grid, std::vector<Eigen::Index> sample_sizes, int replications,
                      std::uint64_t seed);

/// 43-series design (6 groups of 6 bottom series).
McDesign large_design(CorrelationMode mode, std::vector<Eigen::Index> sample_sizes, int replications,
                      std::uint64_t seed);

/// Methods evaluated by the Monte Carlo harness, in output order. "base" is
/// the unreconciled fitted values (in-sample) or forecasts (out-of-sample).
const std::vector<std::string>& mc_methods();

enum class SampleKind { Insample, Outofsample };
std::string_view sample_kind_name(SampleKind k) noexcept;

struct McCell {
  std::string label;
  double rho = 0.0;
  bool has_rho = false;
  Eigen::Index t = 0;
  Matrix innov_cov;
};

/// Squared-error sums per (cell, horizon, sample, method, series).
class McResult {
 public:
  McResult() = default;
  McResult(SummingMatrix s, std::vector<McCell> cells, std::vector<int> horizons);

  const SummingMatrix& hierarchy() const { return s_; }
  const std::vector<McCell>& cells() const { return cells_; }
  const std::vector<int>& horizons() const { return horizons_; }

  CompensatedSum& sum_sq(std::size_t cell, std::size_t h, SampleKind sample, std::size_t method, int series);
  const CompensatedSum& sum_sq(std::size_t cell, std::size_t h, SampleKind sample, std::size_t method,
                               int series) const;
  long long& count(std::size_t cell, std::size_t h, SampleKind sample);
  long long count(std::size_t cell, std::size_t h, SampleKind sample) const;

  /// Per-series MSE, methods x m.
  Matrix mse(std::size_t cell, std::size_t h, SampleKind sample) const;

  std::vector<int> completed;  // per cell
  std::vector<int> skipped;    // per cell
  std::vector<std::map<std::string, int>> skip_reasons;  // per cell

  /// design_cell,method,series,level,sample,sum_sq_err,count
  std::string tidy_csv() const;

 private:
  std::size_t index(std::size_t cell, std::size_t h, SampleKind sample, std::size_t method, int series) const;
  std::size_t count_index(std::size_t cell, std::size_t h, SampleKind sample) const;

  SummingMatrix s_;
  std::vector<McCell> cells_;
  std::vector<int> horizons_;
  std::vector<CompensatedSum> sums_;
  std::vector<long long> counts_;
};

/// Expands a design into its cells (rho x T for Small, T for Large/Custom).
std::vector<McCell> design_cells(const McDesign& design);

/// One replication of one cell, accumulated into a fresh result holding
/// only that cell. Exposed for pipeline tests.
McResult run_replication(const McDesign& design, const McCell& cell, const SummingMatrix& s, std::uint64_t seed);

/// Replication r of every cell uses seed var1.seed ^ r. Per-replication
/// failures are counted as skips. The result is bitwise independent of the
/// thread count.
McResult run_monte_carlo(const McDesign& design);

}  // namespace recon
