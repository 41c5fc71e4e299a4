#pragma once

// Transition maps between mode dimensions, switching signals and jump accounting.

#include "omega/cdspace.hpp"
#include "omega/dkstp.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace omega {

/// Linear reset x(t⁺) = W x(t⁻) from ℝ^{n_p} into ℝ^{n_q}, with its Lipschitz constant ‖W‖_V.
class TransitionMap {
 public:
  explicit TransitionMap(Matrix w) : matrix_(std::move(w)) {
    if (matrix_.size() == 0) throw std::invalid_argument("TransitionMap: empty matrix");
    if (!matrix_.allFinite()) throw std::invalid_argument("TransitionMap: non-finite entry");
    lipschitz_ = op_vnorm(matrix_);
  }

  Dim source_dim() const { return matrix_.cols(); }
  Dim target_dim() const { return matrix_.rows(); }
  const Matrix& matrix() const { return matrix_; }
  double lipschitz() const { return lipschitz_; }

  Vector apply(const Vector& x) const {
    if (x.size() != source_dim())
      throw std::invalid_argument("TransitionMap::apply: expected dimension " + std::to_string(source_dim()) +
                                  ", got " + std::to_string(x.size()));
    return matrix_ * x;
  }

 private:
  Matrix matrix_;
  double lipschitz_;
};

inline double lipschitz_of(const TransitionMap& w) { return op_vnorm(w.matrix()); }

/// Jump to the nearest point of the destination space: W = Π^{n_p}_{n_q}.
inline TransitionMap nearest_map(Dim n_p, Dim n_q) { return TransitionMap(projector(n_p, n_q).matrix); }

/// Removes n−m coordinates. Without indices the trailing ones go: W = [I_m, 0].
inline TransitionMap drop_map(Dim n, Dim m, const std::optional<std::vector<Dim>>& dropped = std::nullopt) {
  require_positive_dim(m, "drop_map");
  if (m >= n) throw std::invalid_argument("drop_map: target dimension must be smaller than source");
  Matrix w = Matrix::Zero(m, n);
  if (!dropped) {
    w.leftCols(m).setIdentity();
    return TransitionMap(std::move(w));
  }
  if (static_cast<Dim>(dropped->size()) != n - m)
    throw std::invalid_argument("drop_map: expected " + std::to_string(n - m) + " dropped indices");
  std::vector<bool> drop(static_cast<std::size_t>(n), false);
  for (Dim i : *dropped) {
    if (i < 0 || i >= n || drop[static_cast<std::size_t>(i)])
      throw std::invalid_argument("drop_map: invalid or repeated index " + std::to_string(i));
    drop[static_cast<std::size_t>(i)] = true;
  }
  Dim row = 0;
  for (Dim j = 0; j < n; ++j)
    if (!drop[static_cast<std::size_t>(j)]) w(row++, j) = 1.0;
  return TransitionMap(std::move(w));
}

/// Appends m−n coordinates placed by nearest jumping: W = [I_n; Π^n_{m−n}].
inline TransitionMap add_map(Dim n, Dim m) {
  require_positive_dim(n, "add_map");
  if (m <= n) throw std::invalid_argument("add_map: target dimension must be larger than source");
  Matrix w(m, n);
  w.topRows(n).setIdentity();
  w.bottomRows(m - n) = projector(n, m - n).matrix;
  return TransitionMap(std::move(w));
}

/// first, then second: W = W_second · W_first.
inline TransitionMap compose_maps(const TransitionMap& first, const TransitionMap& second) {
  if (first.target_dim() != second.source_dim())
    throw std::invalid_argument("compose_maps: first maps into " + std::to_string(first.target_dim()) +
                                " but second starts from " + std::to_string(second.source_dim()));
  return TransitionMap(second.matrix() * first.matrix());
}

/// δ = d_V(x(t⁻), x(t⁺)); zero exactly when the trajectory is continuous in Ω.
inline double jump_gap(const CdVector& pre, const CdVector& post) { return v_dist(pre, post); }

struct JumpEvent {
  double time = 0.0;
  Vector pre_state;
  Vector post_state;
  double gap = 0.0;
  /// Unit direction (x⁺ − x⁻)/δ in ℝ^{lcm(pre,post dims)}; absent when δ = 0.
  std::optional<Vector> direction;
  /// μ·δ.
  double impulse_amplitude = 0.0;
};

/// Gaps at or below this are treated as continuous switches.
inline constexpr double kContinuousGap = 1e-12;

inline JumpEvent make_jump_event(double time, const Vector& pre, const Vector& post, double mu = 0.0) {
  if (mu < 0.0) throw std::invalid_argument("make_jump_event: impulse scale must be >= 0");
  JumpEvent ev;
  ev.time = time;
  ev.pre_state = pre;
  ev.post_state = post;
  ev.gap = jump_gap(pre, post);
  ev.impulse_amplitude = mu * ev.gap;
  if (ev.gap > kContinuousGap) {
    const Dim t = lcm_dim(pre.size(), post.size());
    ev.direction = Vector((lift_to(post, t) - lift_to(pre, t)) / ev.gap);
  }
  return ev;
}

enum class SignalKind { fixed, random_dwell };

struct SwitchPoint {
  double time;
  std::size_t mode;
};

/// Piecewise-constant, right-continuous σ(t) on [0, horizon].
struct SwitchingSignal {
  SignalKind kind = SignalKind::fixed;
  std::size_t initial_mode = 0;
  std::vector<SwitchPoint> schedule;
  double dwell_min = 0.0;
  double dwell_max = 0.0;
  std::uint64_t seed = 0;
  double horizon = 0.0;

  std::size_t mode_at(double t) const {
    std::size_t mode = initial_mode;
    for (const auto& s : schedule) {
      if (s.time > t) break;
      mode = s.mode;
    }
    return mode;
  }

  /// Smallest gap between consecutive switch instants (0 is the first instant).
  double minimum_dwell() const {
    double best = horizon;
    double prev = 0.0;
    for (const auto& s : schedule) {
      best = std::min(best, s.time - prev);
      prev = s.time;
    }
    return best;
  }
};

inline void validate_signal(const SwitchingSignal& s) {
  if (!(s.horizon > 0.0) || !std::isfinite(s.horizon))
    throw std::invalid_argument("switching signal: horizon must be positive");
  double prev = 0.0;
  for (const auto& p : s.schedule) {
    if (!(p.time > prev))
      throw std::invalid_argument("switching signal: switch times must be strictly increasing and > 0");
    prev = p.time;
  }
  if (!s.schedule.empty() && s.schedule.back().time >= s.horizon)
    throw std::invalid_argument("switching signal: switch at or after the horizon");
}

/// Signal with an explicit schedule of (time, next mode) pairs.
inline SwitchingSignal make_fixed_signal(std::size_t initial_mode, std::vector<SwitchPoint> schedule, double horizon) {
  SwitchingSignal s;
  s.kind = SignalKind::fixed;
  s.initial_mode = initial_mode;
  s.schedule = std::move(schedule);
  s.horizon = horizon;
  validate_signal(s);
  s.dwell_min = s.dwell_max = s.minimum_dwell();
  return s;
}

/// Fixed signal cycling through `modes` with the matching cyclic dwell pattern,
/// e.g. modes {0,1} and dwells {1,2} switch at 1, 3, 4, 6, 7, ...
inline SwitchingSignal make_periodic_signal(const std::vector<std::size_t>& modes, const std::vector<double>& dwells,
                                            double horizon) {
  if (modes.empty() || dwells.empty()) throw std::invalid_argument("periodic signal: empty mode or dwell list");
  for (double d : dwells)
    if (!(d > 0.0)) throw std::invalid_argument("periodic signal: dwells must be positive");
  std::vector<SwitchPoint> schedule;
  double t = 0.0;
  for (std::size_t k = 0;; ++k) {
    t += dwells[k % dwells.size()];
    if (t >= horizon) break;
    schedule.push_back({t, modes[(k + 1) % modes.size()]});
  }
  return make_fixed_signal(modes.front(), std::move(schedule), horizon);
}

namespace detail {

/// Uniform double in [0,1) from the top 53 bits; identical on every standard library.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Signal cycling through `modes` with dwells drawn uniformly from [dwell_min, dwell_max].
/// A pure function of (modes, bounds, horizon, seed).
inline SwitchingSignal make_random_signal(const std::vector<std::size_t>& modes, double dwell_min, double dwell_max,
                                          double horizon, std::uint64_t seed) {
  if (modes.empty()) throw std::invalid_argument("random signal: empty mode list");
  if (!(dwell_min > 0.0)) throw std::invalid_argument("random signal: minimum dwell must be > 0");
  if (dwell_max < dwell_min) throw std::invalid_argument("random signal: maximum dwell below minimum");
  std::mt19937_64 rng(seed);
  std::vector<SwitchPoint> schedule;
  double t = 0.0;
  for (std::size_t k = 0;; ++k) {
    t += dwell_min + (dwell_max - dwell_min) * detail::unit_uniform(rng);
    if (t >= horizon) break;
    schedule.push_back({t, modes[(k + 1) % modes.size()]});
  }
  SwitchingSignal s;
  s.kind = SignalKind::random_dwell;
  s.initial_mode = modes.front();
  s.schedule = std::move(schedule);
  s.dwell_min = dwell_min;
  s.dwell_max = dwell_max;
  s.seed = seed;
  s.horizon = horizon;
  validate_signal(s);
  return s;
}

}  // namespace omega
