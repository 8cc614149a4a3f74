#pragma once

// Independent reference computations. Each avoids the code path it checks.

#include "recon/linalg.hpp"

#include <Eigen/Dense>

#include <vector>

namespace oracle {

using recon::Matrix;
using recon::Vector;

// Stationary covariance of x_t = A x_{t-1} + e_t: vec(G) = (I - A kron A)^{-1} vec(Sigma).
inline Matrix lyapunov(const Matrix& a, const Matrix& sigma) {
  const Eigen::Index n = a.rows();
  Matrix kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = a(i, j) * a;
  }
  const Matrix lhs = Matrix::Identity(n * n, n * n) - kron;
  const Vector vec_sigma = Eigen::Map<const Vector>(sigma.data(), n * n);
  const Vector vec_gamma = lhs.fullPivLu().solve(vec_sigma);
  return Eigen::Map<const Matrix>(vec_gamma.data(), n, n);
}

// argmin tr(S G W G' S') subject to G S = I, from the full KKT system in vec(G).
inline Matrix kkt_trace_min(const Matrix& s, const Matrix& w) {
  const Eigen::Index m = s.rows();
  const Eigen::Index n = s.cols();
  const Eigen::Index vars = n * m;
  const Eigen::Index cons = n * n;
  const Matrix sts = s.transpose() * s;
  // tr(A G B G') = vec(G)' (B kron A) vec(G) with column-major vec.
  Matrix q(vars, vars);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) q.block(i * n, j * n, n, n) = w(i, j) * sts;
  }
  // vec(G S) = (S' kron I_n) vec(G).
  Matrix a = Matrix::Zero(cons, vars);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) a.block(i * n, j * n, n, n) = s(j, i) * Matrix::Identity(n, n);
  }
  Matrix kkt = Matrix::Zero(vars + cons, vars + cons);
  kkt.topLeftCorner(vars, vars) = 2.0 * q;
  kkt.topRightCorner(vars, cons) = a.transpose();
  kkt.bottomLeftCorner(cons, vars) = a;
  Vector rhs = Vector::Zero(vars + cons);
  const Matrix eye = Matrix::Identity(n, n);
  rhs.tail(cons) = Eigen::Map<const Vector>(eye.data(), cons);
  const Vector sol = kkt.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(sol.data(), n, m);
}

// Minimum-norm G minimizing ||Y - Yhat G' S'||_F via the vectorized problem.
inline Matrix frobenius_lstsq(const Matrix& y, const Matrix& yhat, const Matrix& s) {
  const Eigen::Index rows = y.rows();
  const Eigen::Index m = s.rows();
  const Eigen::Index n = s.cols();
  // vec(Yhat X S') = (S kron Yhat) vec(X), X = G' (m x n).
  Matrix design(rows * m, m * n);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) design.block(i * rows, j * m, rows, m) = s(i, j) * yhat;
  }
  const Vector target = Eigen::Map<const Vector>(y.data(), rows * m);
  const Vector x = design.completeOrthogonalDecomposition().solve(target);
  return Eigen::Map<const Matrix>(x.data(), m, n).transpose();
}

inline double frobenius_objective(const Matrix& y, const Matrix& yhat, const Matrix& s, const Matrix& g) {
  return (y - yhat * g.transpose() * s.transpose()).squaredNorm();
}

// Two-pass covariance with explicit loops.
inline Matrix two_pass_cov(const Matrix& x) {
  const Eigen::Index t = x.rows();
  const Eigen::Index m = x.cols();
  std::vector<double> mean(static_cast<std::size_t>(m), 0.0);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < t; ++i) mean[static_cast<std::size_t>(j)] += x(i, j);
    mean[static_cast<std::size_t>(j)] /= static_cast<double>(t);
  }
  Matrix out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < t; ++i) {
        acc += (x(i, a) - mean[static_cast<std::size_t>(a)]) * (x(i, b) - mean[static_cast<std::size_t>(b)]);
      }
      out(a, b) = acc / static_cast<double>(t - 1);
    }
  }
  return out;
}

// Plain AR recursion over an explicitly extended buffer.
inline std::vector<double> ar_forecast(double intercept, const std::vector<double>& phi,
                                       const std::vector<double>& history, int h) {
  std::vector<double> buf = history;
  std::vector<double> out;
  for (int step = 0; step < h; ++step) {
    double v = intercept;
    for (std::size_t i = 0; i < phi.size(); ++i) v += phi[i] * buf[buf.size() - 1 - i];
    buf.push_back(v);
    out.push_back(v);
  }
  return out;
}

inline std::vector<double> naive_mse(const Matrix& a, const Matrix& p) {
  std::vector<double> out;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) acc += (a(i, j) - p(i, j)) * (a(i, j) - p(i, j));
    out.push_back(acc / static_cast<double>(a.rows()));
  }
  return out;
}

}  // namespace oracle
