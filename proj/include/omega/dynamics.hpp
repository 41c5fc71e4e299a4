#pragma once

/**
 * Dimension-varying dynamics.
 *
 * A DvSystem is a list of modes, each living in its own ℝ^{n_i}, plus a rule
 * for resetting the state when a switching signal moves from one mode to the
 * next. simulate() integrates the active mode on every dwell interval with a
 * fixed-step RK4 whose grid is cut at each switch instant, applies the reset,
 * and logs the jump (gap, direction, impulse amplitude) as a discrete event.
 *
 * Lifting a mode from ℝ^n to ℝ^{kn} (lift_field) makes its flow commute with
 * x ↦ x ⊗ 1_k; embed_common() uses this to rewrite the whole system as an
 * ordinary switched system on ℝ^{lcm of all n_i}.
 */

#include "omega/cdspace.hpp"
#include "omega/dkstp.hpp"
#include "omega/errors.hpp"
#include "omega/switching.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace omega {

using VectorField = std::function<Vector(const Vector&)>;
/// State feedback u(t, x).
using Feedback = std::function<Vector(double, const Vector&)>;

/// e^{tA} by scaling and squaring with a truncated Taylor series.
inline Matrix expm(const Matrix& a, double t = 1.0) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
  if (!a.allFinite() || !std::isfinite(t)) throw std::invalid_argument("expm: non-finite input");
  const Dim n = a.rows();
  Matrix x = t * a;
  const double norm1 = n == 0 ? 0.0 : x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  x /= std::ldexp(1.0, squarings);

  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * x) / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-18 * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  if (!sum.allFinite()) throw numeric_failure("expm: overflow (‖tA‖₁ = " + std::to_string(norm1) + ")");
  return sum;
}

/// One Σ_i: ẋ = f(x) + Σ_k g_k(x) u_k on ℝ^n, or ẋ = A x + B u when linear.
class Mode {
 public:
  static Mode linear(std::string label, Matrix a, Matrix b = Matrix()) {
    if (a.rows() != a.cols() || a.rows() < 1) throw std::invalid_argument("Mode '" + label + "': A must be square");
    if (b.size() == 0) b.resize(a.rows(), 0);
    if (b.rows() != a.rows())
      throw std::invalid_argument("Mode '" + label + "': B must have " + std::to_string(a.rows()) + " rows");
    if (!a.allFinite() || !b.allFinite()) throw std::invalid_argument("Mode '" + label + "': non-finite entry");
    Mode m;
    m.label_ = std::move(label);
    m.dim_ = a.rows();
    m.a_ = std::move(a);
    m.b_ = std::move(b);
    return m;
  }

  static Mode nonlinear(std::string label, Dim dim, VectorField drift, std::vector<VectorField> inputs = {}) {
    require_positive_dim(dim, "Mode::nonlinear");
    if (!drift) throw std::invalid_argument("Mode '" + label + "': missing drift");
    Mode m;
    m.label_ = std::move(label);
    m.dim_ = dim;
    m.drift_ = std::move(drift);
    m.inputs_ = std::move(inputs);
    return m;
  }

  Mode& with_feedback(Feedback fb) {
    feedback_ = std::move(fb);
    return *this;
  }

  const std::string& label() const { return label_; }
  Dim dim() const { return dim_; }
  bool is_linear() const { return a_.has_value(); }
  const Matrix& a() const {
    if (!a_) throw std::logic_error("Mode '" + label_ + "' is not linear");
    return *a_;
  }
  const Matrix& b() const {
    if (!a_) throw std::logic_error("Mode '" + label_ + "' is not linear");
    return b_;
  }
  Dim input_count() const { return a_ ? b_.cols() : static_cast<Dim>(inputs_.size()); }
  const Feedback& feedback() const { return feedback_; }
  const VectorField& drift_field() const { return drift_; }
  const std::vector<VectorField>& input_fields() const { return inputs_; }

  Vector drift(const Vector& x) const {
    if (a_) return *a_ * x;
    Vector out = drift_(x);
    if (out.size() != dim_) throw std::invalid_argument("Mode '" + label_ + "': drift returned wrong dimension");
    return out;
  }

  Vector input_term(const Vector& x, const Vector& u) const {
    if (u.size() != input_count())
      throw std::invalid_argument("Mode '" + label_ + "': expected " + std::to_string(input_count()) + " inputs");
    if (a_) return b_ * u;
    Vector out = Vector::Zero(dim_);
    for (std::size_t k = 0; k < inputs_.size(); ++k) out += inputs_[k](x) * u[static_cast<Dim>(k)];
    return out;
  }

 private:
  Mode() = default;

  std::string label_;
  Dim dim_ = 0;
  std::optional<Matrix> a_;
  Matrix b_;
  VectorField drift_;
  std::vector<VectorField> inputs_;
  Feedback feedback_;
};

/// η(t) ∈ ℝ^ℓ entering the drift argument as A ⋉ (x + η); the mode sees project(η, n).
struct Disturbance {
  Dim dim = 1;
  std::function<Vector(double)> eta;

  Vector projected(double t, Dim n) const {
    Vector e = eta(t);
    if (e.size() != dim) throw std::invalid_argument("Disturbance: evaluator returned wrong dimension");
    return project(CdVector(std::move(e)), n);
  }
};

/// y = H ⋉ x (linear) or y = h(project(x, q)).
struct OutputMap {
  Dim nominal_dim = 1;  // q
  std::optional<Matrix> h_matrix;
  std::function<Vector(const Vector&)> h_function;

  static OutputMap linear(Matrix h) {
    OutputMap out;
    out.nominal_dim = h.cols();
    out.h_matrix = std::move(h);
    return out;
  }
  static OutputMap function(Dim q, std::function<Vector(const Vector&)> h) {
    require_positive_dim(q, "OutputMap");
    OutputMap out;
    out.nominal_dim = q;
    out.h_function = std::move(h);
    return out;
  }

  Vector evaluate(const Vector& x) const {
    if (h_matrix) return dk_apply(*h_matrix, x);
    return h_function(project(CdVector(x), nominal_dim));
  }

  /// C = H Ψ_{q×n} for a linear output seen from a mode of dimension n.
  Matrix mode_matrix(Dim n) const {
    if (!h_matrix) throw std::logic_error("OutputMap::mode_matrix: output is not linear");
    return *h_matrix * bridge(nominal_dim, n);
  }
};

enum class TransitionRule { nearest, explicit_table };

struct DvSystem {
  std::vector<Mode> modes;
  TransitionRule rule = TransitionRule::nearest;
  std::map<std::pair<std::size_t, std::size_t>, TransitionMap> maps;
  std::optional<OutputMap> output;
  double impulse_scale = 0.0;  // μ

  TransitionMap transition(std::size_t from, std::size_t to) const {
    const Dim np = modes.at(from).dim();
    const Dim nq = modes.at(to).dim();
    if (rule == TransitionRule::explicit_table) {
      auto it = maps.find({from, to});
      if (it != maps.end()) return it->second;
      if (from == to) return TransitionMap(Matrix::Identity(np, np));
      throw std::invalid_argument("no transition map from mode '" + modes[from].label() + "' to '" +
                                  modes[to].label() + "'");
    }
    return nearest_map(np, nq);
  }

  /// Checks mode indices and map coverage for every switch of `signal`.
  void check_signal(const SwitchingSignal& signal) const {
    auto check_mode = [&](std::size_t m) {
      if (m >= modes.size())
        throw std::invalid_argument("switching signal references unknown mode index " + std::to_string(m));
    };
    check_mode(signal.initial_mode);
    std::size_t prev = signal.initial_mode;
    for (const auto& s : signal.schedule) {
      check_mode(s.mode);
      const TransitionMap w = transition(prev, s.mode);
      if (w.source_dim() != modes[prev].dim() || w.target_dim() != modes[s.mode].dim())
        throw std::invalid_argument("transition map " + modes[prev].label() + "->" + modes[s.mode].label() +
                                    " has the wrong shape");
      prev = s.mode;
    }
  }
};

struct Sample {
  double t = 0.0;
  std::size_t mode = 0;
  Vector state;
  double v_norm = 0.0;
  std::optional<Vector> output;

  Dim dim() const { return state.size(); }
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<JumpEvent> events;

  Dim max_dim() const {
    Dim d = 0;
    for (const auto& s : samples) d = std::max(d, s.dim());
    return d;
  }

  /// ‖x‖_V at the start of every dwell interval: the initial state, then each post-switch state.
  std::vector<double> entry_norms() const {
    std::vector<double> out;
    if (!samples.empty()) out.push_back(samples.front().v_norm);
    for (const auto& e : events)
      if (e.time > 0.0) out.push_back(v_norm(e.post_state));
    return out;
  }
};

enum class Integrator {
  rk4,
  exact,  // e^{hA} stepping for autonomous linear modes; other modes fall back to RK4
};

inline constexpr double kDefaultStep = 1e-3;
/// Agreement target between the RK4 and exact linear paths.
inline constexpr double kIntegratorTolerance = 1e-8;

struct Segment {
  std::vector<double> times;
  std::vector<Vector> states;
};

namespace detail {

inline std::vector<double> step_grid(double t0, double t1, double step) {
  std::vector<double> grid{t0};
  if (t1 <= t0) return grid;
  const auto count = static_cast<long>(std::ceil((t1 - t0) / step - 1e-9));
  for (long k = 1; k < count; ++k) grid.push_back(t0 + static_cast<double>(k) * step);
  grid.push_back(t1);
  return grid;
}

}  // namespace detail

/// Integrates one mode on [t0, t1]. The last step is shortened to land on t1.
/// An empty `control` falls back to the mode's own feedback, then to u = 0.
inline Segment integrate_mode(const Mode& mode, const Vector& x0, double t0, double t1, double step,
                              const Feedback& control = {}, const Disturbance* disturbance = nullptr,
                              Integrator method = Integrator::rk4) {
  if (x0.size() != mode.dim())
    throw std::invalid_argument("integrate_mode: x0 has dimension " + std::to_string(x0.size()) + ", mode '" +
                                mode.label() + "' has " + std::to_string(mode.dim()));
  if (!(step > 0.0)) throw std::invalid_argument("integrate_mode: step must be > 0");
  if (t1 < t0) throw std::invalid_argument("integrate_mode: t1 < t0");

  const Feedback& fb = control ? control : mode.feedback();
  const Vector zero_input = Vector::Zero(mode.input_count());
  auto rhs = [&](double t, const Vector& x) -> Vector {
    Vector arg = x;
    if (disturbance) arg += disturbance->projected(t, mode.dim());
    Vector dx = mode.drift(arg);
    if (mode.input_count() > 0) dx += mode.input_term(x, fb ? fb(t, x) : zero_input);
    return dx;
  };

  const std::vector<double> grid = detail::step_grid(t0, t1, step);
  Segment seg;
  seg.times = grid;
  seg.states.reserve(grid.size());
  seg.states.push_back(x0);

  const bool exact = method == Integrator::exact && mode.is_linear() && !fb && disturbance == nullptr;
  Matrix full_step;
  if (exact && grid.size() > 2) full_step = expm(mode.a(), step);

  Vector x = x0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double t = grid[k - 1];
    const double h = grid[k] - t;
    if (exact) {
      x = (k + 1 < grid.size() ? full_step : expm(mode.a(), h)) * x;
    } else {
      const Vector k1 = rhs(t, x);
      const Vector k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
      const Vector k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
      const Vector k4 = rhs(t + h, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!x.allFinite())
      throw numeric_failure("integrate_mode: state of mode '" + mode.label() + "' is not finite", grid[k]);
    seg.states.push_back(x);
  }
  return seg;
}

/// F(y) = Π^n_{kn} f(Π^{kn}_n y), so F(x ⊗ 1_k) = f(x) ⊗ 1_k.
inline Mode lift_field(const Mode& mode, Dim k) {
  require_positive_dim(k, "lift_field");
  if (k == 1) return mode;
  const Dim n = mode.dim();
  const Dim kn = k * n;
  const std::string label = mode.label() + "^" + std::to_string(kn);

  Mode lifted = [&] {
    if (mode.is_linear()) {
      const Matrix up = projector(n, kn).matrix;
      const Matrix down = projector(kn, n).matrix;
      return Mode::linear(label, up * mode.a() * down, up * mode.b());
    }
    VectorField f = mode.drift_field();
    VectorField drift = [f, n, k](const Vector& y) { return kron_ones(f(project(CdVector(y), n)), k); };
    std::vector<VectorField> inputs;
    for (const auto& g : mode.input_fields())
      inputs.push_back([g, n, k](const Vector& y) { return kron_ones(g(project(CdVector(y), n)), k); });
    return Mode::nonlinear(label, kn, std::move(drift), std::move(inputs));
  }();

  if (mode.feedback()) {
    Feedback fb = mode.feedback();
    lifted.with_feedback([fb, n](double t, const Vector& y) { return fb(t, project(CdVector(y), n)); });
  }
  return lifted;
}

/// H(y) = h(Π y) with h defined on ℝ^q; constant on equivalence classes.
inline Vector lift_function(const std::function<Vector(const Vector&)>& h, const CdVector& y, Dim q) {
  return h(project(y, q));
}

struct SimOptions {
  double step = kDefaultStep;
  Integrator method = Integrator::rk4;
};

/// Runs `system` under `signal` from x0. A mismatched x0 is first moved into the
/// initial mode by a nearest jump, logged as an event at t = 0.
inline Trajectory simulate(const DvSystem& system, const SwitchingSignal& signal, const Vector& x0,
                           const SimOptions& options = {}, const Disturbance* disturbance = nullptr) {
  if (system.modes.empty()) throw std::invalid_argument("simulate: system has no modes");
  validate_signal(signal);
  system.check_signal(signal);
  if (x0.size() == 0 || !x0.allFinite()) throw std::invalid_argument("simulate: invalid initial state");

  Trajectory traj;
  std::size_t mode = signal.initial_mode;
  Vector x = x0;
  if (x.size() != system.modes[mode].dim()) {
    Vector post = project(CdVector(x), system.modes[mode].dim());
    traj.events.push_back(make_jump_event(0.0, x, post, system.impulse_scale));
    x = std::move(post);
  }

  auto record = [&](double t, std::size_t m, const Vector& state) {
    Sample s;
    s.t = t;
    s.mode = m;
    s.state = state;
    s.v_norm = v_norm(state);
    if (system.output) s.output = system.output->evaluate(state);
    traj.samples.push_back(std::move(s));
  };

  std::vector<double> bounds{0.0};
  for (const auto& s : signal.schedule) bounds.push_back(s.time);
  bounds.push_back(signal.horizon);

  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const Mode& active = system.modes[mode];
    Segment seg = integrate_mode(active, x, bounds[k], bounds[k + 1], options.step, {}, disturbance, options.method);
    for (std::size_t i = 0; i < seg.times.size(); ++i) record(seg.times[i], mode, seg.states[i]);
    x = seg.states.back();
    if (k < signal.schedule.size()) {
      const std::size_t next = signal.schedule[k].mode;
      Vector post = system.transition(mode, next).apply(x);
      traj.events.push_back(make_jump_event(bounds[k + 1], x, post, system.impulse_scale));
      x = std::move(post);
      mode = next;
    }
  }
  return traj;
}

/// The system rewritten on ℝ^n, n = lcm of all mode dimensions.
struct EmbeddedSystem {
  Dim common_dim = 1;
  DvSystem system;
};

inline EmbeddedSystem embed_common(const DvSystem& original) {
  if (original.modes.empty()) throw std::invalid_argument("embed_common: system has no modes");
  Dim n = 1;
  for (const auto& m : original.modes) n = lcm_dim(n, m.dim());

  EmbeddedSystem out;
  out.common_dim = n;
  out.system.rule = TransitionRule::explicit_table;
  out.system.impulse_scale = original.impulse_scale;
  out.system.output = original.output;
  for (const auto& m : original.modes) out.system.modes.push_back(lift_field(m, n / m.dim()));

  // Reset on ℝ^n: y ↦ (W Π^n_{n_p} y) ⊗ 1_{n/n_q}.
  for (std::size_t p = 0; p < original.modes.size(); ++p)
    for (std::size_t q = 0; q < original.modes.size(); ++q) {
      if (p == q) continue;
      const Dim np = original.modes[p].dim();
      const Dim nq = original.modes[q].dim();
      const Matrix w = original.transition(p, q).matrix();
      out.system.maps.emplace(std::make_pair(p, q),
                              TransitionMap(projector(nq, n).matrix * w * projector(n, np).matrix));
    }
  return out;
}

/// Jump events re-expressed in ℝ^n: states and direction lifted by ⊗ 1.
inline std::vector<JumpEvent> embed_events(const std::vector<JumpEvent>& events, Dim n) {
  std::vector<JumpEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    JumpEvent lifted = e;
    lifted.pre_state = lift_to(e.pre_state, n);
    lifted.post_state = lift_to(e.post_state, n);
    if (e.direction) lifted.direction = lift_to(*e.direction, n);
    out.push_back(std::move(lifted));
  }
  return out;
}

/// Largest d_V between index-aligned samples of two runs with the same time grid.
inline double max_sample_distance(const Trajectory& a, const Trajectory& b) {
  if (a.samples.size() != b.samples.size())
    throw std::invalid_argument("max_sample_distance: trajectories have different sample counts");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    if (a.samples[i].t != b.samples[i].t)
      throw std::invalid_argument("max_sample_distance: sample times differ");
    worst = std::max(worst, v_dist(a.samples[i].state, b.samples[i].state));
  }
  return worst;
}

inline bool is_hurwitz(const Matrix& a) {
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) throw numeric_failure("is_hurwitz: eigen-solver did not converge");
  return (solver.eigenvalues().real().array() < 0.0).all();
}

struct DwellOptions {
  double gamma = 0.03;                    // required contraction margin, in (0,1)
  std::optional<double> lipschitz;        // overrides the largest transition constant
  double grid_min = 0.01;
  double grid_max = 100.0;
  double grid_step = 0.01;
};

struct DwellReport {
  std::optional<double> dwell;
  double lipschitz = 1.0;
  /// Per mode ‖e^{ΔA_i}‖ at the reported dwell (empty when none).
  std::vector<double> mode_norms;
  std::string diagnostic;
};

/// Smallest Δ such that max_i ‖e^{Δ' A_i}‖·L ≤ 1 − γ for every grid Δ' ≥ Δ,
/// refined by bisection between the last failing and first passing grid points.
/// Entry norms of any run with dwell ≥ Δ then shrink by at least 1 − γ per switch.
inline DwellReport dwell_bound(const DvSystem& system, const DwellOptions& opt = {}) {
  if (!(opt.gamma > 0.0 && opt.gamma < 1.0)) throw std::invalid_argument("dwell_bound: gamma must be in (0,1)");
  if (!(opt.grid_min > 0.0 && opt.grid_step > 0.0 && opt.grid_max > opt.grid_min))
    throw std::invalid_argument("dwell_bound: invalid grid");
  DwellReport report;
  for (const auto& m : system.modes) {
    if (!m.is_linear()) throw std::invalid_argument("dwell_bound: mode '" + m.label() + "' is not linear");
    if (!is_hurwitz(m.a())) {
      report.diagnostic = "mode '" + m.label() + "' is not Hurwitz";
      return report;
    }
  }

  double l = 1.0;
  if (opt.lipschitz) {
    l = *opt.lipschitz;
  } else {
    for (std::size_t p = 0; p < system.modes.size(); ++p)
      for (std::size_t q = 0; q < system.modes.size(); ++q)
        if (p != q) l = std::max(l, system.transition(p, q).lipschitz());
  }
  report.lipschitz = l;

  auto norms_at = [&](double delta) {
    std::vector<double> out;
    for (const auto& m : system.modes) out.push_back(spectral_norm(expm(m.a(), delta)));
    return out;
  };
  const double target = 1.0 - opt.gamma;
  auto passes = [&](double delta) {
    for (double v : norms_at(delta))
      if (v * l > target) return false;
    return true;
  };

  if (system.modes.size() < 2) {
    report.dwell = opt.grid_min;
    report.mode_norms = norms_at(opt.grid_min);
    report.diagnostic = "single mode: no switching";
    return report;
  }

  const auto points = static_cast<long>(std::floor((opt.grid_max - opt.grid_min) / opt.grid_step + 1e-9));
  auto grid_at = [&](long k) { return opt.grid_min + static_cast<double>(k) * opt.grid_step; };
  if (!passes(grid_at(points))) {
    report.diagnostic = "no contraction within grid up to " + std::to_string(grid_at(points));
    return report;
  }
  long first_ok = points;
  while (first_ok > 0 && passes(grid_at(first_ok - 1))) --first_ok;

  double hi = grid_at(first_ok);
  if (first_ok > 0) {
    double lo = grid_at(first_ok - 1);
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (passes(mid) ? hi : lo) = mid;
    }
  }
  report.dwell = hi;
  report.mode_norms = norms_at(hi);
  report.diagnostic = "ok";
  return report;
}

}  // namespace omega
