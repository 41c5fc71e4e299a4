#pragma once

// Small dense helpers shared by the Omega modules.

#include <Eigen/Dense>

#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>

namespace omega {

using Dim = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline Dim lcm_dim(Dim a, Dim b) { return std::lcm(a, b); }
inline Dim gcd_dim(Dim a, Dim b) { return std::gcd(a, b); }

inline void require_positive_dim(Dim n, const char* what) {
  if (n < 1) throw std::invalid_argument(std::string(what) + ": dimension must be >= 1");
}

/// Column of ones, 1_n.
inline Vector ones(Dim n) { return Vector::Ones(n); }

/// Kronecker product A ⊗ B.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Dim i = 0; i < a.rows(); ++i)
    for (Dim j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// I_n ⊗ 1_k (nk × n): repeats each coordinate k times.
inline Matrix identity_kron_ones(Dim n, Dim k) {
  return kron(Matrix::Identity(n, n), Matrix::Ones(k, 1));
}

/// I_n ⊗ 1ᵀ_k (n × nk): sums consecutive blocks of length k.
inline Matrix identity_kron_ones_t(Dim n, Dim k) {
  return kron(Matrix::Identity(n, n), Matrix::Ones(1, k));
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

/// Numerical rank by column-pivoted QR; pivots below rel_tol·|largest pivot| count as zero.
/// The leading pivot of a column-pivoted QR is the largest column norm.
inline Dim numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(m);
  qr.setThreshold(rel_tol);
  return qr.rank();
}

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace omega
