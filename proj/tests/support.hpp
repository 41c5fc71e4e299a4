#pragma once

// Test-only oracles. These avoid the library's own code paths on purpose.

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <random>

namespace omega::testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd oracle_kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out = MatrixXd::Zero(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      for (long r = 0; r < b.rows(); ++r)
        for (long c = 0; c < b.cols(); ++c) out(i * b.rows() + r, j * b.cols() + c) = a(i, j) * b(r, c);
  return out;
}

/// (m/t)(I_m ⊗ 1ᵀ_{t/m})(I_n ⊗ 1_{t/n}) formed literally.
inline MatrixXd oracle_projector(long n, long m) {
  const long t = std::lcm(n, m);
  const MatrixXd left = oracle_kron(MatrixXd::Identity(m, m), MatrixXd::Ones(1, t / m));
  const MatrixXd right = oracle_kron(MatrixXd::Identity(n, n), MatrixXd::Ones(t / n, 1));
  return (static_cast<double>(m) / static_cast<double>(t)) * (left * right);
}

inline VectorXd oracle_lift(const VectorXd& x, long k) {
  return oracle_kron(x, MatrixXd::Ones(k, 1));
}

/// V-norm straight from the definition.
inline double oracle_vnorm(const VectorXd& x) { return std::sqrt(x.squaredNorm() / static_cast<double>(x.size())); }

inline double oracle_vdist(const VectorXd& x, const VectorXd& y) {
  const long t = std::lcm(x.size(), y.size());
  return oracle_vnorm(oracle_lift(x, t / x.size()) - oracle_lift(y, t / y.size()));
}

class Rng {
 public:
  explicit Rng(unsigned long seed) : gen_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen_); }

  VectorXd vector(long n, double lo = -1.0, double hi = 1.0) {
    VectorXd v(n);
    for (long i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  MatrixXd matrix(long r, long c, double lo = -1.0, double hi = 1.0) {
    MatrixXd m(r, c);
    for (long i = 0; i < r; ++i)
      for (long j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

 private:
  std::mt19937_64 gen_;
};

/// Dominant eigenvalue of a symmetric PSD matrix by power iteration from a random start.
inline double oracle_power_lambda(const MatrixXd& s, Rng& rng, int iterations = 20000) {
  VectorXd v = rng.vector(s.rows());
  if (v.norm() == 0.0) v.setOnes();
  v.normalize();
  double lambda = 0.0;
  for (int i = 0; i < iterations; ++i) {
    VectorXd w = s * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / nw;
  }
  return lambda;
}

inline double max_abs_diff(const MatrixXd& a, const MatrixXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace omega::testing
