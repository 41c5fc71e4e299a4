#pragma once

// Controllability/observability, intersection subspaces and chain search,
// least-squares cross-dimension reduction, and field restriction checks.

#include "omega/cdspace.hpp"
#include "omega/dkstp.hpp"
#include "omega/dynamics.hpp"
#include "omega/errors.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace omega {

inline constexpr double kRankTolerance = 1e-10;

/// [B, AB, ..., A^{n−1}B].
inline Matrix ctrb_matrix(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) throw std::invalid_argument("ctrb_matrix: shape mismatch");
  const Dim n = a.rows();
  const Dim k = b.cols();
  Matrix out(n, n * k);
  if (k == 0) return out;
  out.leftCols(k) = b;
  for (Dim i = 1; i < n; ++i) out.middleCols(i * k, k) = a * out.middleCols((i - 1) * k, k);
  return out;
}

/// [C; CA; ...; CA^{n−1}].
inline Matrix obsv_matrix(const Matrix& a, const Matrix& c) {
  if (a.rows() != a.cols() || c.cols() != a.cols()) throw std::invalid_argument("obsv_matrix: shape mismatch");
  return ctrb_matrix(a.transpose(), c.transpose()).transpose();
}

inline Dim ctrb_rank(const Matrix& a, const Matrix& b, double tol = kRankTolerance) {
  return numerical_rank(ctrb_matrix(a, b), tol);
}

inline Dim obs_rank(const Matrix& a, const Matrix& c, double tol = kRankTolerance) {
  return numerical_rank(obsv_matrix(a, c), tol);
}

/// Basis of Ω^m ∩ Ω^n inside ℝ^m: the g = gcd(m,n) columns of I_g ⊗ 1_{m/g}.
inline Matrix intersection_basis(Dim m, Dim n) {
  require_positive_dim(m, "intersection_basis");
  require_positive_dim(n, "intersection_basis");
  const Dim g = gcd_dim(m, n);
  return identity_kron_ones(g, m / g);
}

/// Orthogonal projector onto span(S)^⊥.
inline Matrix complement_projector(const Matrix& s, Dim n) {
  if (s.cols() == 0) return Matrix::Identity(n, n);
  if (s.rows() != n) throw std::invalid_argument("complement_projector: basis has wrong row count");
  if (numerical_rank(s) != s.cols()) throw std::invalid_argument("complement_projector: basis is linearly dependent");
  const Matrix gram = s.transpose() * s;
  return Matrix::Identity(n, n) - s * gram.ldlt().solve(s.transpose());
}

/// Controllable on span(S)^⊥: the Kalman matrix projected onto the complement has full rank n − dim S.
inline bool partial_ctrb(const Matrix& a, const Matrix& b, const Matrix& s, double tol = kRankTolerance) {
  const Dim n = a.rows();
  const Matrix p = complement_projector(s, n);
  return numerical_rank(p * ctrb_matrix(a, b), tol) == n - s.cols();
}

struct ControllabilityReport {
  std::string label;
  Dim kalman_rank = 0;
  bool fully_controllable = false;
  Dim subspace_dim = 0;
  bool partially_controllable = false;
};

inline ControllabilityReport controllability_report(const Mode& mode, const Matrix& s = Matrix()) {
  ControllabilityReport r;
  r.label = mode.label();
  const Matrix basis = s.size() == 0 ? Matrix(mode.dim(), 0) : s;
  r.kalman_rank = ctrb_rank(mode.a(), mode.b());
  r.fully_controllable = r.kalman_rank == mode.dim();
  r.subspace_dim = basis.cols();
  r.partially_controllable = partial_ctrb(mode.a(), mode.b(), basis);
  return r;
}

/// Breadth-first search for a mode chain start → ... → target. Edge i → j needs
/// mode i controllable on (Ω^{n_i} ∩ Ω^{n_j})^⊥; the last mode must be completely controllable.
inline std::optional<std::vector<std::size_t>> reachability_chain(const DvSystem& system, std::size_t start,
                                                                  std::size_t target) {
  const std::size_t count = system.modes.size();
  if (start >= count || target >= count) throw std::invalid_argument("reachability_chain: unknown mode index");
  for (const auto& m : system.modes)
    if (!m.is_linear()) throw std::invalid_argument("reachability_chain: mode '" + m.label() + "' is not linear");

  const Mode& last = system.modes[target];
  if (ctrb_rank(last.a(), last.b()) != last.dim()) return std::nullopt;

  std::vector<std::optional<std::size_t>> parent(count);
  std::vector<bool> seen(count, false);
  std::deque<std::size_t> queue{start};
  seen[start] = true;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    if (i == target) {
      std::vector<std::size_t> chain{i};
      for (auto p = parent[i]; p; p = parent[*p]) chain.insert(chain.begin(), *p);
      return chain;
    }
    const Mode& mi = system.modes[i];
    for (std::size_t j = 0; j < count; ++j) {
      if (seen[j] || j == i) continue;
      if (!partial_ctrb(mi.a(), mi.b(), intersection_basis(mi.dim(), system.modes[j].dim()))) continue;
      seen[j] = true;
      parent[j] = i;
      queue.push_back(j);
    }
  }
  return std::nullopt;
}

/// Least-squares model of (A, B, C) on ℝ^m.
struct ReducedModel {
  Dim source_dim = 0;
  Dim target_dim = 0;
  Matrix a;  // A_π, m×m
  Matrix b;  // B_π = Π^n_m B, m×k
  Matrix c;  // C_π, p×m
};

namespace detail {

inline Matrix solve_checked(const Matrix& gram, const Matrix& rhs, const char* what) {
  Eigen::FullPivLU<Matrix> lu(gram);
  if (!lu.isInvertible()) throw numeric_failure(std::string(what) + ": singular normal-equation matrix");
  return lu.solve(rhs);
}

}  // namespace detail

/// A_π = Π A Πᵀ(ΠΠᵀ)⁻¹ when n ≥ m, Π A (ΠᵀΠ)⁻¹Πᵀ when n < m, with Π = Π^n_m;
/// C_π follows the same pattern with C in place of Π A.
inline ReducedModel reduce_model(const Matrix& a, Dim m, const Matrix& b = Matrix(), const Matrix& c = Matrix()) {
  if (a.rows() != a.cols() || a.rows() < 1) throw std::invalid_argument("reduce_model: A must be square");
  require_positive_dim(m, "reduce_model");
  const Dim n = a.rows();
  if (b.size() != 0 && b.rows() != n) throw std::invalid_argument("reduce_model: B has wrong row count");
  if (c.size() != 0 && c.cols() != n) throw std::invalid_argument("reduce_model: C has wrong column count");

  ReducedModel r;
  r.source_dim = n;
  r.target_dim = m;
  if (m == n) {
    r.a = a;
    r.b = b;
    r.c = c;
    return r;
  }
  const Matrix pi = projector(n, m).matrix;
  if (n >= m) {
    // X (ΠΠᵀ)⁻¹ = ((ΠΠᵀ)⁻¹ Xᵀ)ᵀ since ΠΠᵀ is symmetric.
    const Matrix gram = pi * pi.transpose();
    r.a = detail::solve_checked(gram, (pi * a * pi.transpose()).transpose(), "reduce_model").transpose();
    if (c.size() != 0) r.c = detail::solve_checked(gram, (c * pi.transpose()).transpose(), "reduce_model").transpose();
  } else {
    const Matrix gram = pi.transpose() * pi;
    const Matrix inv_pt = detail::solve_checked(gram, pi.transpose(), "reduce_model");  // (ΠᵀΠ)⁻¹Πᵀ
    r.a = pi * a * inv_pt;
    if (c.size() != 0) r.c = c * inv_pt;
  }
  if (b.size() != 0) r.b = pi * b;
  return r;
}

struct ErrorSeries {
  Dim target_dim = 0;
  std::vector<double> times;
  /// Relative error; empty where ‖x(t)‖_V = 0.
  std::vector<std::optional<double>> values;

  std::optional<double> max_value() const {
    std::optional<double> best;
    for (const auto& v : values)
      if (v && (!best || *v > *best)) best = v;
    return best;
  }
};

inline std::optional<double> relative_v_error(const Vector& approx, const Vector& exact) {
  const double denom = v_norm(exact);
  if (denom == 0.0) return std::nullopt;
  return v_dist(approx, exact) / denom;
}

/// E(t) = ‖x̃(t) − x(t)‖_V / ‖x(t)‖_V with x = e^{At}x0, z = e^{A_π t}Π^n_m x0, x̃ = Π^m_n z.
inline ErrorSeries approx_error(const Matrix& a, const Vector& x0, Dim m, const std::vector<double>& times) {
  if (x0.size() != a.rows()) throw std::invalid_argument("approx_error: x0 has wrong dimension");
  const Dim n = a.rows();
  const ReducedModel red = reduce_model(a, m);
  const Vector z0 = project(CdVector(x0), m);
  ErrorSeries out;
  out.target_dim = m;
  for (double t : times) {
    const Vector x = expm(a, t) * x0;
    const Vector z = expm(red.a, t) * z0;
    out.times.push_back(t);
    out.values.push_back(relative_v_error(project(CdVector(z), n), x));
  }
  return out;
}

/// x ↦ Π^n_m F(Π^m_n x): the restriction of a field on ℝ^n to ℝ^m.
inline VectorField restrict_field(VectorField f, Dim n, Dim m) {
  require_positive_dim(n, "restrict_field");
  require_positive_dim(m, "restrict_field");
  if (m == n) return f;
  return [f = std::move(f), n, m](const Vector& x) {
    return project(CdVector(f(project(CdVector(x), n))), m);
  };
}

/// Whether v(x) lies in span{V_j(x)} up to tol·max(1, ‖v(x)‖).
inline bool span_membership(const VectorField& v, const std::vector<VectorField>& basis, const Vector& x,
                            double tol = 1e-9) {
  const Vector target = v(x);
  if (basis.empty()) return target.norm() <= tol;
  Matrix span(target.size(), static_cast<Dim>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) {
    const Vector col = basis[j](x);
    if (col.size() != target.size()) throw std::invalid_argument("span_membership: basis vector has wrong dimension");
    span.col(static_cast<Dim>(j)) = col;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(span);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() != span.cols()) throw std::invalid_argument("span_membership: basis is linearly dependent at x");
  const Vector coeffs = qr.solve(target);
  return (span * coeffs - target).norm() <= tol * std::max(1.0, target.norm());
}

struct AggregateRun {
  Segment nominal;         // in ℝ^{n_i}
  Segment member;          // directly simulated, in ℝ^{n^i_j}
  std::vector<Vector> nominal_in_member;  // Π^{n_i}_{n^i_j} x^i(t)
  ErrorSeries error;
};

/// Runs the nominal model from Π x0, maps its states back to the member
/// dimension and compares them with the member's own trajectory.
inline AggregateRun aggregate_run(const Mode& nominal, const Mode& member, const Vector& member_x0, double horizon,
                                  double step, Integrator method = Integrator::exact) {
  AggregateRun run;
  const Vector nominal_x0 = project(CdVector(member_x0), nominal.dim());
  run.nominal = integrate_mode(nominal, nominal_x0, 0.0, horizon, step, {}, nullptr, method);
  run.member = integrate_mode(member, member_x0, 0.0, horizon, step, {}, nullptr, method);
  run.error.target_dim = nominal.dim();
  for (std::size_t i = 0; i < run.nominal.times.size(); ++i) {
    Vector mapped = project(CdVector(run.nominal.states[i]), member.dim());
    run.error.times.push_back(run.nominal.times[i]);
    run.error.values.push_back(relative_v_error(mapped, run.member.states[i]));
    run.nominal_in_member.push_back(std::move(mapped));
  }
  return run;
}

}  // namespace omega
