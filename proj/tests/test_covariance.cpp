#include "recon/covariance.hpp"
#include "recon/random.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <cmath>

using namespace recon;

namespace {

Matrix correlated_draws(const Matrix& sigma, Eigen::Index rows, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix l = sigma.llt().matrixL();
  return (l * rng.normal_matrix(sigma.rows(), rows)).transpose();
}

}  // namespace

TEST_SUITE("covariance") {
  TEST_CASE("sample covariance matches two-pass loops") {
    Rng rng(3);
    const Matrix x = rng.normal_matrix(40, 4) + Matrix::Constant(40, 4, 5.0);
    const auto est = sample_covariance(x);
    CHECK(est.kind == CovKind::Sample);
    CHECK((est.w - oracle::two_pass_cov(x)).cwiseAbs().maxCoeff() < 1e-12);

    Matrix eye_rows(6, 2);
    eye_rows << 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1;
    CHECK((sample_covariance(eye_rows).w - oracle::two_pass_cov(eye_rows)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("sample covariance errors") {
    Matrix constant_col(2, 2);
    constant_col << 1, 0, -1, 0;
    CHECK_ERROR(sample_covariance(constant_col), ErrorCode::DegenerateVariance);
    CHECK_ERROR(sample_covariance(Matrix::Ones(1, 3)), ErrorCode::TooFewRows);
    Matrix bad = Matrix::Identity(3, 2);
    bad(0, 0) = std::nan("");
    CHECK_ERROR(sample_covariance(bad), ErrorCode::NonFiniteInput);
  }

  TEST_CASE("sample covariance recovers the small-design block") {
    const double rho = 0.5;
    Matrix sigma(2, 2);
    sigma << 2.0, std::sqrt(6.0) * rho, std::sqrt(6.0) * rho, 3.0;
    const Eigen::Index t = 1000;
    const Matrix w = sample_covariance(correlated_draws(sigma, t, 11)).w;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        // Gaussian: var(s_ij) = (sigma_ij^2 + sigma_ii sigma_jj) / (T - 1).
        const double se = std::sqrt((sigma(i, j) * sigma(i, j) + sigma(i, i) * sigma(j, j)) / (t - 1.0));
        CHECK(std::abs(w(i, j) - sigma(i, j)) < 4.0 * se);
      }
    }
  }

  TEST_CASE("shrinkage") {
    Rng rng(5);
    Matrix sigma = Matrix::Identity(5, 5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i != j) sigma(i, j) = 0.4;
      }
    }
    const Matrix x = correlated_draws(sigma, 60, 17);
    const auto sample = sample_covariance(x);
    const auto shrunk = shrink_covariance(x);
    REQUIRE(shrunk.shrink_lambda.has_value());
    const double lam = *shrunk.shrink_lambda;
    CHECK(lam >= 0.0);
    CHECK(lam <= 1.0);
    CHECK(shrunk.kind == CovKind::Shrink);
    CHECK(shrunk.w.diagonal() == sample.w.diagonal());
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) {
        if (i != j) CHECK(shrunk.w(i, j) == doctest::Approx((1.0 - lam) * sample.w(i, j)).epsilon(1e-14));
      }
    }
    CHECK(shrunk.w.llt().info() == Eigen::Success);

    const auto full = shrink_covariance(x, 1.0);
    CHECK(full.w == Matrix(sample.w.diagonal().asDiagonal()));
    const auto none = shrink_covariance(x, 0.0);
    CHECK((none.w - sample.w).cwiseAbs().maxCoeff() == 0.0);
    CHECK_ERROR(shrink_covariance(x.topRows(2)), ErrorCode::TooFewRows);
  }

  TEST_CASE("shrinkage intensity by direct formula") {
    Rng rng(8);
    const Matrix x = rng.normal_matrix(25, 3);
    const Eigen::Index n = x.rows();
    // Standardize, then var-hat(r_ij) = n/(n-1)^3 sum_k (w_kij - mean w_ij)^2 and r_ij = n/(n-1) mean w_ij.
    Matrix z = x.rowwise() - x.colwise().mean();
    for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j) /= std::sqrt(z.col(j).squaredNorm() / (n - 1.0));
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i == j) continue;
        const Vector wk = z.col(i).cwiseProduct(z.col(j));
        const double mean = wk.mean();
        num += n / std::pow(n - 1.0, 3) * (wk.array() - mean).square().sum();
        den += std::pow(n / (n - 1.0) * mean, 2);
      }
    }
    CHECK(shrinkage_intensity(x) == doctest::Approx(num / den).epsilon(1e-10));
  }

  TEST_CASE("uncorrelated columns are unaffected by shrinkage") {
    Matrix x(4, 2);
    x << 1, 1, -1, 1, 1, -1, -1, -1;
    const auto sample = sample_covariance(x);
    CHECK(sample.w(0, 1) == 0.0);
    CHECK(shrink_covariance(x).w == sample.w);
  }

  TEST_CASE("diagonal covariance") {
    Rng rng(9);
    const Matrix x = rng.normal_matrix(30, 3);
    const auto d = diagonal_covariance(x);
    CHECK(d.kind == CovKind::Diagonal);
    CHECK(d.w.diagonal() == sample_covariance(x).w.diagonal());
    CHECK((d.w - Matrix(d.w.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    Matrix c = x;
    c.col(1).setConstant(2.0);
    CHECK_ERROR(diagonal_covariance(c), ErrorCode::DegenerateVariance);
  }

  TEST_CASE("identity scaled and user supplied") {
    CHECK(identity_scaled_covariance(3, 2.5).w == 2.5 * Matrix::Identity(3, 3));
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.5;
    CHECK_ERROR(user_covariance(asym), ErrorCode::NonSymmetric);
    Matrix zero_diag = Matrix::Identity(2, 2);
    zero_diag(1, 1) = 0.0;
    CHECK_ERROR(user_covariance(zero_diag), ErrorCode::DegenerateVariance);
  }

  TEST_CASE("pseudo inverse") {
    CHECK(pseudo_inverse(Matrix::Identity(4, 4)).isApprox(Matrix::Identity(4, 4), 1e-15));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 2.0;
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 0.5;
    CHECK((pseudo_inverse(d) - expected).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(21);
    const Matrix a = rng.normal_matrix(3, 5);
    const Matrix m = a.transpose() * a;
    const Matrix p = pseudo_inverse(m);
    CHECK((m * p * m - m).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((p * m * p - p).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(((m * p).transpose() - m * p).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(((p * m).transpose() - p * m).cwiseAbs().maxCoeff() < 1e-8);

    const Matrix b = rng.normal_matrix(5, 5);
    const Matrix pd = b * b.transpose() + Matrix::Identity(5, 5);
    const Matrix inv = pd.inverse();
    CHECK((pseudo_inverse(pd) - inv).cwiseAbs().maxCoeff() < 1e-8 * inv.cwiseAbs().maxCoeff());

    Matrix asym = Matrix::Identity(2, 2);
    asym(1, 0) = 1.0;
    CHECK_ERROR(pseudo_inverse(asym), ErrorCode::NonSymmetric);
  }
}
