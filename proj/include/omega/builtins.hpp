#pragma once

// Named evaluators and matrices for the shipped example scenarios. Configs
// refer to nonlinear dynamics, feedbacks and outputs by these names.

#include "omega/dynamics.hpp"
#include "omega/switching.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace omega::builtins {

struct NamedField {
  Dim dim;
  VectorField field;
};

struct NamedFeedback {
  Dim dim;  // state dimension the feedback expects
  Dim inputs;
  Feedback feedback;
};

struct NamedOutput {
  Dim nominal_dim;  // q
  std::function<Vector(const Vector&)> h;
};

inline Vector vec(std::initializer_list<double> v) {
  return Eigen::Map<const Vector>(v.begin(), static_cast<Dim>(v.size()));
}

// Disturbance-decoupling example on ℝ² / ℝ³ with a disturbance field on ℝ⁶.
inline Vector ddp_f1(const Vector& x) { return vec({x[1], 2.0 * x[0] / 3.0}); }
inline Vector ddp_g1(const Vector& x) { return vec({-1.0 - x[1], 1.0}); }
inline Vector ddp_f2(const Vector& z) { return vec({z[1] - z[2], z[0], -z[0]}); }
inline Vector ddp_g2(const Vector& z) { return vec({z[2] - z[1], 1.0, -1.0}); }
inline Vector ddp_h(const Vector& w) { return vec({w.sum() + w[0] * w[1]}); }
inline Vector ddp_xi(const Vector& w) {
  return vec({1.0 + w[4] * w[4], -1.0 - w[5] * w[5], 0.0, -1.0 - w[1], 1.0, w[0]});
}
// Spanning fields of the controlled-invariant distributions inside ker dh_i.
inline Vector ddp_v1(const Vector& x) { return vec({-1.0, 1.0 + 2.0 * x[0] / 3.0}); }
inline Vector ddp_v2a(const Vector& z) { return vec({-1.0, 1.0 + z[0], 0.0}); }
inline Vector ddp_v2b(const Vector& z) { return vec({-1.0, 0.0, 1.0 + z[0]}); }

inline Vector rotation(const Vector& x) { return vec({x[1], -x[0]}); }
inline Vector van_der_pol(const Vector& x) { return vec({x[1], (1.0 - x[0] * x[0]) * x[1] - x[0]}); }

inline const std::map<std::string, NamedField>& fields() {
  static const std::map<std::string, NamedField> registry{
      {"rotation", {2, rotation}},   {"van_der_pol", {2, van_der_pol}}, {"ddp_f1", {2, ddp_f1}},
      {"ddp_g1", {2, ddp_g1}},       {"ddp_f2", {3, ddp_f2}},           {"ddp_g2", {3, ddp_g2}},
      {"ddp_xi", {6, ddp_xi}},       {"ddp_v1", {2, ddp_v1}},           {"ddp_v2a", {3, ddp_v2a}},
      {"ddp_v2b", {3, ddp_v2b}},
  };
  return registry;
}

inline const std::map<std::string, NamedFeedback>& feedbacks() {
  static const std::map<std::string, NamedFeedback> registry{
      // u = −(y1 + y2) + v with y = [[1,−1],[1,1]]x and v = −1.
      {"steer_to_diagonal", {2, 1, [](double, const Vector& x) { return vec({-2.0 * x[0] - 1.0}); }}},
      {"stabilize_dim2", {2, 1, [](double, const Vector& x) { return vec({-x[0] - x[1]}); }}},
      {"stabilize_dim3", {3, 1, [](double, const Vector& z) { return vec({-z[0] - z[1] - 3.0 * z[2]}); }}},
  };
  return registry;
}

inline const std::map<std::string, NamedOutput>& outputs() {
  static const std::map<std::string, NamedOutput> registry{
      {"ddp_h", {6, ddp_h}},
  };
  return registry;
}

/// Disturbance profiles η(t) of a given length.
inline std::function<Vector(double)> disturbance_profile(const std::string& name, Dim dim) {
  require_positive_dim(dim, "disturbance_profile");
  if (name == "zero") return [dim](double) { return Vector(Vector::Zero(dim)); };
  if (name == "constant") return [dim](double) { return Vector(Vector::Ones(dim)); };
  if (name == "sine") return [dim](double t) { return Vector(std::sin(t) * Vector::Ones(dim)); };
  throw std::invalid_argument("unknown disturbance profile '" + name + "'");
}

inline bool has_disturbance_profile(const std::string& name) {
  return name == "zero" || name == "constant" || name == "sine";
}

inline Mode make_field_mode(const std::string& label, const std::string& field,
                            const std::vector<std::string>& inputs = {}) {
  const auto& reg = fields();
  auto it = reg.find(field);
  if (it == reg.end()) throw std::invalid_argument("unknown built-in field '" + field + "'");
  std::vector<VectorField> g;
  for (const auto& name : inputs) {
    auto gi = reg.find(name);
    if (gi == reg.end()) throw std::invalid_argument("unknown built-in field '" + name + "'");
    if (gi->second.dim != it->second.dim)
      throw std::invalid_argument("input field '" + name + "' does not match the drift dimension");
    g.push_back(gi->second.field);
  }
  return Mode::nonlinear(label, it->second.dim, it->second.field, std::move(g));
}

// Matrices of the reduction experiments.

inline Matrix scaled_identity(Dim n) { return 0.001 * Matrix::Identity(n, n); }

inline Matrix graded_diagonal(Dim n) {
  Vector d(n);
  for (Dim i = 0; i < n; ++i) d[i] = -0.001 * static_cast<double>(i + 1);
  return d.asDiagonal();
}

/// 0.001·U with U uniform on [0,1]^{n×n}, filled row-major from the seed.
inline Matrix seeded_uniform(Dim n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix a(n, n);
  for (Dim i = 0; i < n; ++i)
    for (Dim j = 0; j < n; ++j) a(i, j) = 0.001 * omega::detail::unit_uniform(rng);
  return a;
}

inline Matrix experiment_matrix(const std::string& name, Dim n, std::uint64_t seed) {
  require_positive_dim(n, "experiment_matrix");
  if (name == "scaled_identity") return scaled_identity(n);
  if (name == "graded_diagonal") return graded_diagonal(n);
  if (name == "seeded_uniform") return seeded_uniform(n, seed);
  throw std::invalid_argument("unknown experiment matrix '" + name + "'");
}

}  // namespace omega::builtins
