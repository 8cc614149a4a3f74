#include "recon/evaluate.hpp"
#include "recon/reconcile.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace recon;

namespace {

double gs_gap(const SummingMatrix& s, const Matrix& g) { return (g * s.s - Matrix::Identity(s.n, s.n)).cwiseAbs().maxCoeff(); }

Matrix random_coherent(const SummingMatrix& s, Eigen::Index rows, Rng& rng) {
  return (s.s * rng.normal_matrix(s.n, rows)).transpose();
}

}  // namespace

TEST_SUITE("reconcile") {
  TEST_CASE("bottom up selects the bottom block") {
    const SummingMatrix s = testing::figure_one();
    Matrix expected = Matrix::Zero(5, 8);
    expected.rightCols(5).setIdentity();
    const auto map = g_bottom_up(s);
    CHECK(map.g == expected);
    CHECK(map.is_projection);
    CHECK(g_bottom_up(build_summing_matrix(HierarchySpec::single("x"))).g == Matrix::Identity(1, 1));

    Vector base(8);
    base << 9, 8, 7, 1, 2, 3, 4, 5;
    const Vector out = apply(map, s, base);
    CHECK(out.tail(5) == base.tail(5));
    base.tail(5).setZero();
    CHECK(apply(map, s, base).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("ols closed form on three nodes") {
    Matrix expected(2, 3);
    expected << 1, 2, -1, 1, -1, 2;
    expected /= 3.0;
    CHECK((g_ols(testing::three_node()).g - expected).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("ols is an orthogonal projection") {
    for (const auto& s : {testing::three_node(), testing::figure_one(), testing::forty_three()}) {
      const Matrix p = s.s * g_ols(s).g;
      CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(gs_gap(s, g_ols(s).g) < 1e-12);
    }
    CHECK(g_ols(build_summing_matrix(HierarchySpec::single("x"))).g.isApprox(Matrix::Identity(1, 1)));
  }

  TEST_CASE("ols on a vector of ones") {
    const SummingMatrix s = testing::figure_one();
    const Vector out = apply(g_ols(s), s, Vector(Vector::Ones(8)));
    CHECK(out(0) == doctest::Approx(out.tail(5).sum()).epsilon(1e-14));
    CHECK((s.u_t * out).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("wls against the constrained quadratic program") {
    const SummingMatrix s = testing::three_node();
    const Vector lam_diag = (Vector(3) << 1, 1, 4).finished();
    const auto lam = user_covariance(Matrix(lam_diag.asDiagonal()));
    const Matrix g = g_wls(s, lam).g;
    CHECK((g - oracle::kkt_trace_min(s.s, lam.w)).cwiseAbs().maxCoeff() < 1e-10);
    for (double k : {1e-3, 1.0, 1e3}) {
      CHECK((g_wls(s, user_covariance(k * lam.w)).g - g).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((g_wls(s, identity_scaled_covariance(3, k)).g - g_ols(s).g).cwiseAbs().maxCoeff() < 1e-10);
    }
    Matrix full = Matrix::Identity(3, 3);
    full(0, 1) = full(1, 0) = 0.2;
    CHECK_ERROR(g_wls(s, user_covariance(full)), ErrorCode::NotDiagonal);
  }

  TEST_CASE("wls from simulated residuals is a projection") {
    const SummingMatrix s = testing::figure_one();
    Rng rng(4);
    const auto lam = diagonal_covariance(rng.normal_matrix(50, 8));
    CHECK(gs_gap(s, g_wls(s, lam).g) < 1e-8);
  }

  TEST_CASE("mint against the constrained quadratic program") {
    const SummingMatrix s = testing::three_node();
    Matrix w(3, 3);
    w << 3, 1, 1, 1, 2, 0.5, 1, 0.5, 2;
    const Matrix g = g_mint(s, user_covariance(w)).g;
    CHECK((g - oracle::kkt_trace_min(s.s, w)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(gs_gap(s, g) < 1e-12);
  }

  TEST_CASE("mint special cases and scale invariance") {
    Rng rng(12);
    for (const auto& s : {testing::three_node(), testing::figure_one(), testing::forty_three()}) {
      CHECK((g_mint(s, identity_scaled_covariance(s.m)).g - g_ols(s).g).cwiseAbs().maxCoeff() < 1e-10);
      Vector d(s.m);
      for (int i = 0; i < s.m; ++i) d(i) = rng.uniform(0.5, 3.0);
      const auto lam = user_covariance(Matrix(d.asDiagonal()));
      CHECK((g_mint(s, lam).g - g_wls(s, lam).g).cwiseAbs().maxCoeff() < 1e-10);
      const Matrix w = random_pd(s.m, rng);
      const Matrix g = g_mint(s, user_covariance(w)).g;
      for (double c : {1e-3, 1e3}) CHECK((g_mint(s, user_covariance(c * w)).g - g).cwiseAbs().maxCoeff() < 1e-8);
      const Matrix p = s.s * g;
      CHECK((p * p - p).cwiseAbs().maxCoeff() < 1e-7);
    }
  }

  TEST_CASE("mint rejects indefinite W") {
    const SummingMatrix s = testing::three_node();
    Matrix w = Matrix::Identity(3, 3);
    w(0, 1) = w(1, 0) = 2.0;
    CHECK_ERROR(g_mint(s, user_covariance(w)), ErrorCode::NotPositiveDefinite);
  }

  TEST_CASE("gls") {
    const SummingMatrix s = testing::figure_one();
    CHECK((g_gls(s, identity_scaled_covariance(8)).g - g_ols(s).g).cwiseAbs().maxCoeff() < 1e-10);
    Rng rng(31);
    const Matrix sigma = random_pd(8, rng);
    const Matrix omega = random_psd(5, 2, rng);
    const Matrix w = s.s * omega * s.s.transpose() + sigma;
    CHECK((g_gls(s, user_covariance(sigma)).g - g_mint(s, user_covariance(0.5 * (w + w.transpose()))).g)
              .cwiseAbs()
              .maxCoeff() < 1e-7);
    CHECK((g_gls(s, user_covariance(sigma), false).g - g_gls(s, user_covariance(sigma)).g).cwiseAbs().maxCoeff() <
          1e-8);
  }

  TEST_CASE("gls with singular sigma") {
    const SummingMatrix s = testing::figure_one();
    Rng rng(32);
    // Rank-6 sigma whose range still meets col(S) fully.
    const Matrix a = rng.normal_matrix(8, 6);
    const Matrix sigma = a * a.transpose();
    const Matrix pinv = pseudo_inverse(sigma);
    REQUIRE((sigma * pinv * sigma - sigma).cwiseAbs().maxCoeff() < 1e-8);
    const Matrix g = g_gls(s, user_covariance(sigma)).g;
    CHECK(g.allFinite());
    CHECK(gs_gap(s, g) < 1e-8);

    // Range orthogonal to col(S): S' Sigma^+ S = 0.
    const Matrix u = s.u();
    const Matrix degenerate = u * u.transpose();
    CHECK_ERROR(g_gls(s, user_covariance(degenerate)),
                ErrorCode::RankDeficientReducedGram);
  }

  TEST_CASE("erm") {
    const SummingMatrix s = testing::three_node();
    Rng rng(41);
    const Matrix y = random_coherent(s, 50, rng);
    const Matrix yhat = y + 0.5 * rng.normal_matrix(50, 3);
    const auto panel = TrainingPanel::make(y, yhat, s, Alignment::Holdout, 1, 10);
    const auto map = g_erm(panel, s);
    CHECK_FALSE(map.is_projection);
    const Matrix oracle_g = oracle::frobenius_lstsq(y, yhat, s.s);
    CHECK((map.g - oracle_g).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(oracle::frobenius_objective(y, yhat, s.s, map.g) <=
          oracle::frobenius_objective(y, yhat, s.s, g_ols(s).g) + 1e-12);

    const auto exact = TrainingPanel::make(y, y, s, Alignment::Holdout, 1, 10);
    const auto exact_map = g_erm(exact, s);
    CHECK((apply(exact_map, s, y) - y).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("erm minimum-norm fallback") {
    const SummingMatrix s = testing::three_node();
    Rng rng(42);
    const Matrix y = random_coherent(s, 30, rng);
    Matrix yhat = rng.normal_matrix(30, 3);
    yhat.col(2) = yhat.col(1);
    const auto map = g_erm(TrainingPanel::make(y, yhat, s, Alignment::Holdout), s);
    CHECK((map.g - oracle::frobenius_lstsq(y, yhat, s.s)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_ERROR(g_erm(TrainingPanel::make(y, Matrix::Zero(30, 3), s, Alignment::Holdout), s),
                ErrorCode::AllZeroForecasts);
  }

  TEST_CASE("emint-u") {
    const SummingMatrix s = testing::figure_one();
    Rng rng(51);
    const Matrix y = random_coherent(s, 40, rng);
    const Matrix yhat = y + 0.3 * rng.normal_matrix(40, 8);
    const auto map = g_emint_u(TrainingPanel::make(y, yhat, s, Alignment::Insample), s);
    const Matrix b = y.rightCols(5);
    const Matrix expected = (b.transpose() * yhat) * (yhat.transpose() * yhat).inverse();
    CHECK((map.g - expected).cwiseAbs().maxCoeff() < 1e-9);
    CHECK_FALSE(map.is_projection);

    // Coherent fitted values have a rank-n Gram matrix.
    CHECK_ERROR(g_emint_u(TrainingPanel::make(y, y, s, Alignment::Insample), s), ErrorCode::SingularGram);
    const auto fallback = g_emint_u(TrainingPanel::make(y, y, s, Alignment::Insample), s, GramPolicy::SvdFallback);
    CHECK((fallback.g * y.transpose() - b.transpose()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((apply(fallback, s, y) - y).cwiseAbs().maxCoeff() < 1e-9);

    const Matrix y5 = y.topRows(5);
    const Matrix f5 = yhat.topRows(5);
    CHECK_ERROR(g_emint_u(TrainingPanel::make(y5, f5, s, Alignment::Insample), s), ErrorCode::SingularGram);
    CHECK_ERROR(g_emint_u(TrainingPanel::make(y, yhat, s, Alignment::Holdout), s), ErrorCode::MisalignedRows);
  }

  TEST_CASE("training panel validation") {
    const SummingMatrix s = testing::three_node();
    Rng rng(52);
    const Matrix y = random_coherent(s, 10, rng);
    CHECK_ERROR(TrainingPanel::make(y, y.topRows(9), s, Alignment::Insample), ErrorCode::MisalignedRows);
    Matrix bad = y;
    bad(3, 0) += 1.0;
    CHECK_ERROR(TrainingPanel::make(bad, y, s, Alignment::Insample), ErrorCode::IncoherentOutput);
  }

  TEST_CASE("every map yields coherent output") {
    const SummingMatrix s = testing::figure_one();
    Rng rng(61);
    const Matrix y = random_coherent(s, 60, rng);
    const Matrix yhat = y + rng.normal_matrix(60, 8);
    const Matrix resid = y - yhat;
    const auto panel = TrainingPanel::make(y, yhat, s, Alignment::Insample);
    const std::vector<ReconciliationMap> maps{
        g_bottom_up(s),
        g_ols(s),
        g_wls(s, diagonal_covariance(resid)),
        g_mint(s, sample_covariance(resid)),
        g_mint(s, shrink_covariance(resid)),
        g_gls(s, sample_covariance(resid)),
        g_erm(TrainingPanel::make(y, yhat, s, Alignment::Holdout), s),
        g_emint_u(panel, s),
    };
    const Matrix base = rng.normal_matrix(7, 8);
    for (const auto& map : maps) {
      const Matrix out = apply(map, s, base);
      CHECK((out * s.u_t.transpose()).cwiseAbs().maxCoeff() < 1e-8);
      if (map.is_projection) {
        CHECK(gs_gap(s, map.g) < 1e-8);
        CHECK((apply(map, s, y) - y).cwiseAbs().maxCoeff() < 1e-8);
      }
    }
  }

  TEST_CASE("apply is independent of batching") {
    const SummingMatrix s = testing::forty_three();
    Rng rng(71);
    const auto map = g_mint(s, user_covariance(random_pd(s.m, rng)));
    const Matrix base = rng.normal_matrix(9, s.m);
    const Matrix whole = apply(map, s, base);
    for (Eigen::Index t = 0; t < base.rows(); ++t) {
      const Vector row = apply(map, s, Vector(base.row(t).transpose()));
      CHECK((whole.row(t).transpose() - row).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK_ERROR(apply(map, s, Matrix(Matrix::Zero(2, 3))), ErrorCode::DimensionMismatch);
  }

  TEST_CASE("mint dual forms agree on random W") {
    Rng rng(81);
    for (int i = 0; i < 50; ++i) {
      const SummingMatrix s = testing::figure_one();
      const Matrix w = random_pd(s.m, rng);
      const Matrix winv = w.inverse();
      const Matrix g1 = (s.s.transpose() * winv * s.s).inverse() * s.s.transpose() * winv;
      CHECK((g_mint(s, user_covariance(w)).g - g1).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}
