#pragma once

// Dimension-keeping semi-tensor product (DK-STP) and the V-operator norm.

#include "omega/cdspace.hpp"
#include "omega/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace omega {

/// Ψ_{n×p} = (n/t)(I_n ⊗ 1ᵀ_{t/n})(I_p ⊗ 1_{t/p}), t = lcm(n,p).
/// Built literally from the Kronecker factors; coincides with Π^p_n.
inline Matrix bridge(Dim n, Dim p) {
  require_positive_dim(n, "bridge");
  require_positive_dim(p, "bridge");
  const Dim t = lcm_dim(n, p);
  const double weight = static_cast<double>(n) / static_cast<double>(t);
  return weight * (identity_kron_ones_t(n, t / n) * identity_kron_ones(p, t / p));
}

enum class StpWeighting {
  weighted,    // (n/t)(M ⊗ 1ᵀ)(N ⊗ 1); the product used everywhere else
  unweighted,  // (M ⊗ 1ᵀ)(N ⊗ 1); diagnostics only
};

/// M ⋉ N for M ∈ ℳ_{m×n}, N ∈ ℳ_{p×q}; the result is m×q for every shape pair.
inline Matrix dk_product(const Matrix& m, const Matrix& n, StpWeighting weighting = StpWeighting::weighted) {
  if (m.size() == 0 || n.size() == 0) throw std::invalid_argument("dk_product: empty matrix");
  const Dim inner_left = m.cols();
  const Dim inner_right = n.rows();
  if (inner_left == inner_right) return m * n;
  const Dim t = lcm_dim(inner_left, inner_right);
  Matrix out = kron(m, Matrix::Ones(1, t / inner_left)) * kron(n, Matrix::Ones(t / inner_right, 1));
  if (weighting == StpWeighting::weighted)
    out *= static_cast<double>(inner_left) / static_cast<double>(t);
  return out;
}

/// A ⋉ x for a column vector x of any length.
inline Vector dk_apply(const Matrix& a, const Vector& x) { return dk_product(a, Matrix(x)).col(0); }

/// Largest eigenvalue of the symmetric positive semidefinite AᵀA.
inline double gram_lambda_max(const Matrix& a) {
  const Matrix gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw numeric_failure("op_vnorm: eigen-solver did not converge on " + std::to_string(gram.rows()) + "x" +
                          std::to_string(gram.cols()) + " Gram matrix");
  return std::max(0.0, solver.eigenvalues().maxCoeff());
}

/// ‖A‖_V = sup ‖A ⋉ x‖_V/‖x‖_V = √((cols/rows)·λ_max(AᵀA)).
inline double op_vnorm(const Matrix& a) {
  if (a.size() == 0) throw std::invalid_argument("op_vnorm: empty matrix");
  if (!a.allFinite()) throw std::invalid_argument("op_vnorm: non-finite entry");
  const double factor = static_cast<double>(a.cols()) / static_cast<double>(a.rows());
  return std::sqrt(factor * gram_lambda_max(a));
}

}  // namespace omega
