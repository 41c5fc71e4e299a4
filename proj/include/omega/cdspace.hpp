#pragma once

/**
 * Cross-dimensional Euclidean space Ω.
 *
 * Vectors of different dimensions are compared by lifting both to the least
 * common multiple of their dimensions with x ⊗ 1_k (each coordinate repeated
 * k times). Two vectors are equivalent when some such lifts coincide; every
 * class has a unique representative of minimal dimension.
 *
 * The V-inner product divides the ordinary inner product of the lifts by the
 * common dimension, so ‖x‖_V = ‖x‖₂/√dim(x) and the norm of a class does not
 * depend on the representative.
 */

#include "omega/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace omega {

/// Block-constancy tolerance used when reducing a vector to its class representative.
struct Tolerance {
  double rel = 1e-9;
  double abs = 1e-12;

  double bound(double scale) const { return std::max(rel * scale, abs); }
};

/// An element of ℝ^n viewed as a representative of its class in Ω.
class CdVector {
 public:
  CdVector(Vector entries) : entries_(std::move(entries)) { validate(); }  // NOLINT(implicit)
  template <typename Derived>
  CdVector(const Eigen::MatrixBase<Derived>& expr) : entries_(expr) {  // NOLINT(implicit)
    validate();
  }
  CdVector(std::initializer_list<double> values)
      : entries_(Eigen::Map<const Vector>(values.begin(), static_cast<Dim>(values.size()))) {
    validate();
  }

  Dim dim() const { return entries_.size(); }
  const Vector& entries() const { return entries_; }
  double operator[](Dim i) const { return entries_[i]; }

  operator const Vector&() const { return entries_; }  // NOLINT(implicit)

 private:
  void validate() const {
    if (entries_.size() == 0) throw std::invalid_argument("CdVector: empty vector");
    if (!entries_.allFinite()) throw std::invalid_argument("CdVector: non-finite entry");
  }

  Vector entries_;
};

/// x ⊗ 1_k.
inline Vector kron_ones(const Vector& x, Dim k) {
  require_positive_dim(k, "kron_ones");
  Vector out(x.size() * k);
  for (Dim i = 0; i < x.size(); ++i) out.segment(i * k, k).setConstant(x[i]);
  return out;
}

/// Lift x to ℝ^n by x ⊗ 1_{n/dim x}; dim x must divide n.
inline Vector lift_to(const Vector& x, Dim n) {
  if (x.size() == 0 || n % x.size() != 0)
    throw std::invalid_argument("lift_to: dimension " + std::to_string(x.size()) +
                                " does not divide " + std::to_string(n));
  return kron_ones(x, n / x.size());
}

namespace detail {

inline bool blocks_constant(const Vector& v, Dim block, double bound) {
  for (Dim start = 0; start < v.size(); start += block) {
    const double ref = v[start];
    for (Dim j = 1; j < block; ++j)
      if (std::abs(v[start + j] - ref) > bound) return false;
  }
  return true;
}

}  // namespace detail

/// Least-dimension z with v = z ⊗ 1_k (within tol). Divisors are tried in
/// ascending order so the first hit is the minimal representative.
inline CdVector canonicalize(const Vector& v, Tolerance tol = {}) {
  if (v.size() == 0) throw std::invalid_argument("canonicalize: empty vector");
  const Dim n = v.size();
  const double bound = tol.bound(v.cwiseAbs().maxCoeff());
  for (Dim d = 1; d < n; ++d) {
    if (n % d != 0) continue;
    const Dim block = n / d;
    if (!detail::blocks_constant(v, block, bound)) continue;
    Vector z(d);
    for (Dim i = 0; i < d; ++i) z[i] = v[i * block];
    return CdVector(std::move(z));
  }
  return CdVector(v);
}

inline bool is_canonical(const CdVector& x, Tolerance tol = {}) {
  return canonicalize(x, tol).dim() == x.dim();
}

namespace detail {

/// Brings two representatives to a common dimension. Same-dimension inputs are
/// used as-is; otherwise both are reduced first so the lcm stays small.
inline std::pair<Vector, Vector> common_lift(const Vector& x, const Vector& y) {
  if (x.size() == y.size()) return {x, y};
  const Vector cx = canonicalize(x).entries();
  const Vector cy = canonicalize(y).entries();
  const Dim t = lcm_dim(cx.size(), cy.size());
  return {lift_to(cx, t), lift_to(cy, t)};
}

}  // namespace detail

/// x + y in Ω; the result lives in the lcm of the reduced dimensions.
inline CdVector stp_add(const CdVector& x, const CdVector& y) {
  auto [a, b] = detail::common_lift(x, y);
  return CdVector(Vector(a + b));
}

inline CdVector stp_sub(const CdVector& x, const CdVector& y) {
  auto [a, b] = detail::common_lift(x, y);
  return CdVector(Vector(a - b));
}

inline CdVector scale(double c, const CdVector& x) { return CdVector(Vector(c * x.entries())); }

inline double v_inner(const CdVector& x, const CdVector& y) {
  auto [a, b] = detail::common_lift(x, y);
  return a.dot(b) / static_cast<double>(a.size());
}

inline double v_norm(const CdVector& x) {
  return x.entries().norm() / std::sqrt(static_cast<double>(x.dim()));
}

inline double v_dist(const CdVector& x, const CdVector& y) { return v_norm(stp_sub(x, y)); }

inline bool equivalent(const CdVector& x, const CdVector& y, Tolerance tol = {}) {
  const CdVector cx = canonicalize(x, tol);
  const CdVector cy = canonicalize(y, tol);
  if (cx.dim() != cy.dim()) return false;
  const double scale = std::max(cx.entries().cwiseAbs().maxCoeff(), cy.entries().cwiseAbs().maxCoeff());
  return (cx.entries() - cy.entries()).cwiseAbs().maxCoeff() <= tol.bound(scale);
}

/// Angle between two classes, in radians.
inline double angle(const CdVector& x, const CdVector& y) {
  const double nx = v_norm(x);
  const double ny = v_norm(y);
  if (nx == 0.0 || ny == 0.0) throw std::invalid_argument("angle: zero-norm argument");
  const double c = std::clamp(v_inner(x, y) / (nx * ny), -1.0, 1.0);
  return std::acos(c);
}

inline double degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

/// Π^n_m: the least-squares map from ℝ^n onto ℝ^m under d_V.
struct Projector {
  Dim source_dim;
  Dim target_dim;
  Matrix matrix;  // target_dim × source_dim

  Vector apply(const Vector& x) const {
    if (x.size() != source_dim) throw std::invalid_argument("Projector::apply: dimension mismatch");
    return matrix * x;
  }
};

/// Builds Π^n_m = (m/t)(I_m ⊗ 1ᵀ_{t/m})(I_n ⊗ 1_{t/n}), t = lcm(m,n). Entry (i,j)
/// is m/t times the overlap of the i-th length-t/m block and the j-th length-t/n
/// block of ℝ^t, which is the integer the two Kronecker factors multiply to.
inline Projector projector(Dim n, Dim m) {
  require_positive_dim(n, "projector");
  require_positive_dim(m, "projector");
  const Dim t = lcm_dim(m, n);
  const Dim row_block = t / m;
  const Dim col_block = t / n;
  const double weight = static_cast<double>(m) / static_cast<double>(t);
  Matrix p = Matrix::Zero(m, n);
  for (Dim i = 0; i < m; ++i) {
    const Dim lo = i * row_block;
    const Dim hi = lo + row_block;
    for (Dim j = lo / col_block; j * col_block < hi; ++j) {
      const Dim overlap = std::min(hi, (j + 1) * col_block) - std::max(lo, j * col_block);
      p(i, j) = weight * static_cast<double>(overlap);
    }
  }
  return {n, m, std::move(p)};
}

/// Π^n_m ξ evaluated by block averaging, without forming the matrix.
inline Vector project(const CdVector& xi, Dim m) {
  require_positive_dim(m, "project");
  const Dim n = xi.dim();
  if (n == m) return xi.entries();
  const Dim t = lcm_dim(m, n);
  const Dim row_block = t / m;
  const Dim col_block = t / n;
  const double weight = static_cast<double>(m) / static_cast<double>(t);
  Vector out(m);
  for (Dim i = 0; i < m; ++i) {
    const Dim lo = i * row_block;
    const Dim hi = lo + row_block;
    double acc = 0.0;
    for (Dim j = lo / col_block; j * col_block < hi; ++j) {
      const Dim overlap = std::min(hi, (j + 1) * col_block) - std::max(lo, j * col_block);
      acc += static_cast<double>(overlap) * xi[j];
    }
    out[i] = weight * acc;
  }
  return out;
}

/// Finite sublattice of (ℤ₊, |): closed under lcm and gcd, with covering edges.
class SubspaceLattice {
 public:
  SubspaceLattice(std::set<Dim> nodes, std::vector<std::pair<Dim, Dim>> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {}

  const std::set<Dim>& nodes() const { return nodes_; }
  /// (lower, upper) pairs; lower divides upper with nothing in between.
  const std::vector<std::pair<Dim, Dim>>& edges() const { return edges_; }

  bool contains(Dim d) const { return nodes_.count(d) != 0; }

  Dim sup(Dim a, Dim b) const { return checked(lcm_dim(a, b), a, b); }
  Dim inf(Dim a, Dim b) const { return checked(gcd_dim(a, b), a, b); }

 private:
  Dim checked(Dim r, Dim a, Dim b) const {
    if (!contains(a) || !contains(b)) throw std::invalid_argument("SubspaceLattice: node not in lattice");
    return r;
  }

  std::set<Dim> nodes_;
  std::vector<std::pair<Dim, Dim>> edges_;
};

enum class LatticeClosure {
  full,        // closed under lcm and gcd
  joins_only,  // closed under lcm only: the upper part generated by the given spaces
};

inline SubspaceLattice build_lattice(const std::set<Dim>& dims, LatticeClosure closure = LatticeClosure::full) {
  if (dims.empty()) throw std::invalid_argument("build_lattice: empty dimension set");
  for (Dim d : dims) require_positive_dim(d, "build_lattice");

  std::set<Dim> nodes = dims;
  for (bool grew = true; grew;) {
    grew = false;
    const std::vector<Dim> current(nodes.begin(), nodes.end());
    for (std::size_t i = 0; i < current.size(); ++i)
      for (std::size_t j = i + 1; j < current.size(); ++j) {
        grew |= nodes.insert(lcm_dim(current[i], current[j])).second;
        if (closure == LatticeClosure::full) grew |= nodes.insert(gcd_dim(current[i], current[j])).second;
      }
  }

  std::vector<std::pair<Dim, Dim>> edges;
  for (Dim a : nodes)
    for (Dim b : nodes) {
      if (a == b || b % a != 0) continue;
      const bool covered = std::none_of(nodes.begin(), nodes.end(), [&](Dim c) {
        return c != a && c != b && c % a == 0 && b % c == 0;
      });
      if (covered) edges.emplace_back(a, b);
    }
  return SubspaceLattice(std::move(nodes), std::move(edges));
}

}  // namespace omega
