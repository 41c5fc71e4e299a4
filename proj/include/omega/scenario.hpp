#pragma once

/**
 * JSON scenario configs and the command runners behind the `omega` tool.
 *
 * A config names the modes (matrices or built-in fields), the switching
 * signal, the transition rule and whichever blocks a command needs
 * (experiment, vectors, lattice, ...). load_config() parses and validates in
 * one pass; every failure is a ConfigError whose message starts with the
 * offending field path, e.g. "modes[1].A: expected 4 rows, got 3".
 *
 * to_json() writes the normalized form (defaults filled in, time grids
 * expanded), so parse(to_json(c)) reproduces c.
 */

#include "omega/analysis.hpp"
#include "omega/builtins.hpp"
#include "omega/cdspace.hpp"
#include "omega/dynamics.hpp"
#include "omega/errors.hpp"
#include "omega/switching.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace omega::scenario {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// Validation failure; what() is "<field path>: <message>".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::invalid_argument(field.empty() ? message : field + ": " + message), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct FeedbackSpec {
  std::optional<std::string> builtin;
  std::optional<Matrix> gain;    // u = −K x + offset
  std::optional<Vector> offset;
};

struct ModeSpec {
  std::string label;
  Dim dim = 0;
  std::optional<Matrix> a;
  std::optional<Matrix> b;
  std::optional<std::string> field;
  std::vector<std::string> inputs;
  std::optional<FeedbackSpec> feedback;
};

enum class MapKind { matrix, drop, add, nearest };

struct MapSpec {
  std::size_t from = 0;
  std::size_t to = 0;
  MapKind kind = MapKind::nearest;
  std::optional<Matrix> matrix;
  std::optional<std::vector<Dim>> dropped;
};

enum class SignalSpecKind { fixed, periodic, random };

struct SignalSpec {
  SignalSpecKind kind = SignalSpecKind::fixed;
  std::size_t initial = 0;
  std::vector<SwitchPoint> schedule;  // fixed
  std::vector<std::size_t> modes;     // periodic, random
  std::vector<double> dwells;         // periodic
  double dwell_min = 0.0;             // random
  double dwell_max = 0.0;
  std::uint64_t seed = 0;
};

struct OutputSpec {
  std::optional<Matrix> h;
  std::optional<std::string> builtin;
};

struct DisturbanceSpec {
  double mu = 0.0;
  std::string eta = "zero";
  Dim dim = 1;
};

struct DwellSpec {
  double gamma = 0.03;
  std::optional<double> lipschitz;
};

struct ChainSpec {
  std::size_t start = 0;
  std::size_t target = 0;
};

struct ExperimentSpec {
  std::optional<std::string> matrix;  // built-in experiment matrix name
  std::optional<Matrix> a;
  std::optional<Matrix> b;
  std::optional<Matrix> c;
  Dim n = 0;
  std::vector<Dim> targets;
  std::vector<double> times;
  Vector x0;
  std::uint64_t seed = 0;
};

struct VectorsSpec {
  Vector x;
  std::optional<Vector> y;
  std::optional<Dim> project_to;
};

struct LatticeSpec {
  std::set<Dim> dims;
  LatticeClosure closure = LatticeClosure::full;
};

struct ScenarioConfig {
  std::string name;
  std::string description;
  std::vector<ModeSpec> modes;
  TransitionRule rule = TransitionRule::nearest;
  std::vector<MapSpec> maps;
  std::optional<SignalSpec> signal;
  std::optional<Vector> x0;
  double step = kDefaultStep;
  std::optional<double> horizon;
  Integrator integrator = Integrator::rk4;
  std::optional<OutputSpec> output;
  std::optional<DisturbanceSpec> disturbance;
  DwellSpec dwell;
  std::optional<ChainSpec> chain;
  std::optional<ExperimentSpec> experiment;
  std::optional<VectorsSpec> vectors;
  std::optional<LatticeSpec> lattice;
};

// ---------------------------------------------------------------- parsing

namespace detail {

/// A JSON node plus its path, for diagnostics.
class Node {
 public:
  Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *value_; }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(path_, message); }

  bool has(const char* key) const { return value_->is_object() && value_->contains(key); }

  Node at(const char* key) const {
    require_object();
    if (!value_->contains(key)) throw ConfigError(child_path(key), "required field is missing");
    return Node((*value_)[key], child_path(key));
  }

  std::optional<Node> opt(const char* key) const {
    if (!has(key) || (*value_)[key].is_null()) return std::nullopt;
    return Node((*value_)[key], child_path(key));
  }

  void only_keys(std::initializer_list<const char*> allowed) const {
    require_object();
    for (auto it = value_->begin(); it != value_->end(); ++it) {
      bool known = false;
      for (const char* k : allowed) known |= it.key() == k;
      if (!known) throw ConfigError(child_path(it.key().c_str()), "unknown field");
    }
  }

  std::size_t size() const {
    if (!value_->is_array()) fail("expected an array");
    return value_->size();
  }

  Node item(std::size_t i) const { return Node((*value_)[i], path_ + "[" + std::to_string(i) + "]"); }

  double number() const {
    if (!value_->is_number()) fail("expected a number");
    const double v = value_->get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be > 0");
    return v;
  }

  long integer() const {
    if (!value_->is_number_integer()) fail("expected an integer");
    return value_->get<long>();
  }

  Dim dimension() const {
    const long v = integer();
    if (v < 1) fail("dimension must be >= 1");
    return static_cast<Dim>(v);
  }

  std::size_t index() const {
    const long v = integer();
    if (v < 0) fail("index must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed() const {
    if (!value_->is_number_unsigned() && !(value_->is_number_integer() && value_->get<long>() >= 0))
      fail("seed must be a non-negative integer");
    return value_->get<std::uint64_t>();
  }

  std::string string() const {
    if (!value_->is_string()) fail("expected a string");
    return value_->get<std::string>();
  }

  Vector vector() const {
    const std::size_t n = size();
    if (n == 0) fail("expected a non-empty array of numbers");
    Vector v(static_cast<Dim>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Dim>(i)] = item(i).number();
    return v;
  }

  /// Row-major array of rows. Empty rows are allowed only as [] for a zero-column matrix.
  Matrix matrix() const {
    const std::size_t rows = size();
    if (rows == 0) fail("expected a non-empty array of rows");
    const std::size_t cols = item(0).size();
    Matrix m(static_cast<Dim>(rows), static_cast<Dim>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const Node row = item(i);
      if (row.size() != cols)
        row.fail("row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Dim>(i), static_cast<Dim>(j)) = row.item(j).number();
    }
    return m;
  }

 private:
  void require_object() const {
    if (!value_->is_object()) fail("expected an object");
  }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* value_;
  std::string path_;
};

inline void check_shape(const Node& node, const Matrix& m, Dim rows, Dim cols) {
  if (m.rows() != rows)
    node.fail("expected " + std::to_string(rows) + " rows, got " + std::to_string(m.rows()));
  if (m.cols() != cols)
    node.fail("expected " + std::to_string(cols) + " columns, got " + std::to_string(m.cols()));
}

inline FeedbackSpec parse_feedback(const Node& node) {
  FeedbackSpec fb;
  if (node.raw().is_string()) {
    fb.builtin = node.string();
    return fb;
  }
  node.only_keys({"K", "offset"});
  fb.gain = node.at("K").matrix();
  if (auto off = node.opt("offset")) fb.offset = off->vector();
  return fb;
}

inline ModeSpec parse_mode(const Node& node, std::size_t index) {
  node.only_keys({"label", "dim", "A", "B", "field", "inputs", "feedback"});
  ModeSpec m;
  m.label = node.has("label") ? node.at("label").string() : "mode" + std::to_string(index);
  m.dim = node.at("dim").dimension();
  if (auto a = node.opt("A")) {
    m.a = a->matrix();
    check_shape(*a, *m.a, m.dim, m.dim);
  }
  if (auto b = node.opt("B")) {
    m.b = b->matrix();
    if (m.b->rows() != m.dim) b->fail("expected " + std::to_string(m.dim) + " rows, got " + std::to_string(m.b->rows()));
  }
  if (auto f = node.opt("field")) m.field = f->string();
  if (auto in = node.opt("inputs"))
    for (std::size_t i = 0; i < in->size(); ++i) m.inputs.push_back(in->item(i).string());
  if (auto fb = node.opt("feedback")) m.feedback = parse_feedback(*fb);

  if (m.a.has_value() == m.field.has_value()) node.fail("exactly one of 'A' or 'field' is required");
  if (m.field) {
    const auto& reg = builtins::fields();
    auto it = reg.find(*m.field);
    if (it == reg.end()) node.at("field").fail("unknown built-in field '" + *m.field + "'");
    if (it->second.dim != m.dim)
      node.at("field").fail("built-in field '" + *m.field + "' has dimension " + std::to_string(it->second.dim));
    if (m.b) node.at("B").fail("'B' is only valid with 'A'; use 'inputs' for built-in fields");
    for (std::size_t i = 0; i < m.inputs.size(); ++i) {
      auto gi = reg.find(m.inputs[i]);
      const Node in = node.at("inputs").item(i);
      if (gi == reg.end()) in.fail("unknown built-in field '" + m.inputs[i] + "'");
      if (gi->second.dim != m.dim) in.fail("input field has dimension " + std::to_string(gi->second.dim));
    }
  } else if (!m.inputs.empty()) {
    node.at("inputs").fail("'inputs' is only valid with 'field'; use 'B' for linear modes");
  }

  if (m.feedback) {
    const Node fbn = node.at("feedback");
    const Dim inputs = m.a ? (m.b ? m.b->cols() : 0) : static_cast<Dim>(m.inputs.size());
    if (inputs == 0) fbn.fail("feedback given but the mode has no inputs");
    if (m.feedback->builtin) {
      const auto& reg = builtins::feedbacks();
      auto it = reg.find(*m.feedback->builtin);
      if (it == reg.end()) fbn.fail("unknown built-in feedback '" + *m.feedback->builtin + "'");
      if (it->second.dim != m.dim || it->second.inputs != inputs)
        fbn.fail("built-in feedback '" + *m.feedback->builtin + "' expects dim " + std::to_string(it->second.dim) +
                 " with " + std::to_string(it->second.inputs) + " input(s)");
    } else {
      check_shape(fbn.at("K"), *m.feedback->gain, inputs, m.dim);
      if (m.feedback->offset && m.feedback->offset->size() != inputs)
        fbn.at("offset").fail("expected " + std::to_string(inputs) + " entries");
    }
  }
  return m;
}

inline MapKind parse_map_kind(const Node& node) {
  const std::string s = node.string();
  if (s == "matrix") return MapKind::matrix;
  if (s == "drop") return MapKind::drop;
  if (s == "add") return MapKind::add;
  if (s == "nearest") return MapKind::nearest;
  node.fail("unknown map kind '" + s + "' (expected matrix, drop, add or nearest)");
}

inline SignalSpec parse_signal(const Node& node) {
  node.only_keys({"kind", "initial", "schedule", "modes", "dwells", "dwell_bounds", "seed"});
  SignalSpec s;
  const std::string kind = node.at("kind").string();
  auto index_list = [](const Node& list) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(list.item(i).index());
    if (out.empty()) list.fail("expected at least one mode index");
    return out;
  };
  if (kind == "fixed") {
    s.kind = SignalSpecKind::fixed;
    s.initial = node.has("initial") ? node.at("initial").index() : 0;
    if (auto sched = node.opt("schedule")) {
      for (std::size_t i = 0; i < sched->size(); ++i) {
        const Node entry = sched->item(i);
        if (entry.size() != 2) entry.fail("expected [time, mode]");
        const double t = entry.item(0).positive();
        if (!s.schedule.empty() && !(t > s.schedule.back().time)) entry.item(0).fail("switch times must increase");
        s.schedule.push_back({t, entry.item(1).index()});
      }
    }
  } else if (kind == "periodic") {
    s.kind = SignalSpecKind::periodic;
    s.modes = index_list(node.at("modes"));
    const Node dw = node.at("dwells");
    for (std::size_t i = 0; i < dw.size(); ++i) s.dwells.push_back(dw.item(i).positive());
    if (s.dwells.size() != s.modes.size()) dw.fail("expected one dwell per mode");
    s.initial = s.modes.front();
  } else if (kind == "random") {
    s.kind = SignalSpecKind::random;
    s.modes = index_list(node.at("modes"));
    const Node b = node.at("dwell_bounds");
    if (b.size() != 2) b.fail("expected [min, max]");
    s.dwell_min = b.item(0).positive();
    s.dwell_max = b.item(1).positive();
    if (s.dwell_max < s.dwell_min) b.fail("max dwell is below min dwell");
    s.seed = node.at("seed").seed();
    s.initial = s.modes.front();
  } else {
    node.at("kind").fail("unknown signal kind '" + kind + "' (expected fixed, periodic or random)");
  }
  return s;
}

inline std::vector<double> parse_times(const Node& node) {
  std::vector<double> out;
  if (node.raw().is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(node.item(i).number());
  } else {
    node.only_keys({"from", "to", "step"});
    const double from = node.at("from").number();
    const double to = node.at("to").number();
    const double step = node.at("step").positive();
    if (to < from) node.at("to").fail("must be >= from");
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long k = 0; k <= count; ++k) out.push_back(from + static_cast<double>(k) * step);
  }
  if (out.empty()) node.fail("expected at least one time");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] < 0.0) node.fail("times must be >= 0");
    if (i > 0 && out[i] < out[i - 1]) node.fail("times must be nondecreasing");
  }
  return out;
}

inline ExperimentSpec parse_experiment(const Node& node) {
  node.only_keys({"matrix", "A", "B", "C", "n", "targets", "times", "x0", "seed"});
  ExperimentSpec e;
  e.seed = node.has("seed") ? node.at("seed").seed() : 0;
  if (auto a = node.opt("A")) {
    e.a = a->matrix();
    if (e.a->rows() != e.a->cols()) a->fail("must be square");
    e.n = e.a->rows();
    if (node.has("matrix")) node.fail("give either 'matrix' or 'A', not both");
    if (node.has("n") && node.at("n").dimension() != e.n) node.at("n").fail("does not match the size of A");
  } else {
    e.matrix = node.at("matrix").string();
    e.n = node.at("n").dimension();
    try {
      builtins::experiment_matrix(*e.matrix, e.n, e.seed);
    } catch (const std::invalid_argument& err) {
      node.at("matrix").fail(err.what());
    }
  }
  if (auto b = node.opt("B")) {
    e.b = b->matrix();
    if (e.b->rows() != e.n) b->fail("expected " + std::to_string(e.n) + " rows");
  }
  if (auto c = node.opt("C")) {
    e.c = c->matrix();
    if (e.c->cols() != e.n) c->fail("expected " + std::to_string(e.n) + " columns");
  }
  const Node targets = node.at("targets");
  for (std::size_t i = 0; i < targets.size(); ++i) e.targets.push_back(targets.item(i).dimension());
  if (e.targets.empty()) targets.fail("expected at least one target dimension");
  e.times = parse_times(node.at("times"));
  const Node x0 = node.at("x0");
  if (x0.raw().is_number()) {
    e.x0 = Vector::Constant(e.n, x0.number());
  } else {
    e.x0 = x0.vector();
    if (e.x0.size() != e.n) x0.fail("expected " + std::to_string(e.n) + " entries");
  }
  return e;
}

}  // namespace detail

inline ScenarioConfig parse_config(const json& doc) {
  using detail::Node;
  const Node root(doc, "");
  root.only_keys({"name", "description", "modes", "transition", "signal", "x0", "step", "horizon", "integrator",
                  "output", "disturbance", "dwell", "chain", "experiment", "vectors", "lattice"});
  ScenarioConfig cfg;
  if (auto n = root.opt("name")) cfg.name = n->string();
  if (auto d = root.opt("description")) cfg.description = d->string();

  if (auto modes = root.opt("modes")) {
    for (std::size_t i = 0; i < modes->size(); ++i) cfg.modes.push_back(detail::parse_mode(modes->item(i), i));
    std::set<std::string> labels;
    for (std::size_t i = 0; i < cfg.modes.size(); ++i)
      if (!labels.insert(cfg.modes[i].label).second)
        modes->item(i).at("label").fail("duplicate mode label '" + cfg.modes[i].label + "'");
  }
  const std::size_t mode_count = cfg.modes.size();
  auto check_mode_index = [&](const Node& node, std::size_t idx) {
    if (idx >= mode_count)
      node.fail("unknown mode index " + std::to_string(idx) + " (config has " + std::to_string(mode_count) + " modes)");
  };

  if (auto tr = root.opt("transition")) {
    tr->only_keys({"rule", "maps"});
    const std::string rule = tr->at("rule").string();
    if (rule == "nearest") {
      cfg.rule = TransitionRule::nearest;
      if (tr->has("maps")) tr->at("maps").fail("maps are only used with rule 'explicit'");
    } else if (rule == "explicit") {
      cfg.rule = TransitionRule::explicit_table;
      const Node maps = tr->at("maps");
      std::set<std::pair<std::size_t, std::size_t>> seen;
      for (std::size_t i = 0; i < maps.size(); ++i) {
        const Node mn = maps.item(i);
        mn.only_keys({"from", "to", "kind", "matrix", "dropped"});
        MapSpec m;
        m.from = mn.at("from").index();
        m.to = mn.at("to").index();
        check_mode_index(mn.at("from"), m.from);
        check_mode_index(mn.at("to"), m.to);
        if (!seen.insert({m.from, m.to}).second) mn.fail("duplicate map for this mode pair");
        m.kind = detail::parse_map_kind(mn.at("kind"));
        const Dim np = cfg.modes[m.from].dim;
        const Dim nq = cfg.modes[m.to].dim;
        switch (m.kind) {
          case MapKind::matrix:
            m.matrix = mn.at("matrix").matrix();
            detail::check_shape(mn.at("matrix"), *m.matrix, nq, np);
            break;
          case MapKind::drop:
            if (nq >= np) mn.at("kind").fail("drop needs a smaller target dimension");
            if (auto d = mn.opt("dropped")) {
              std::vector<Dim> idx;
              for (std::size_t k = 0; k < d->size(); ++k) idx.push_back(static_cast<Dim>(d->item(k).index()));
              try {
                drop_map(np, nq, idx);
              } catch (const std::invalid_argument& err) {
                d->fail(err.what());
              }
              m.dropped = std::move(idx);
            }
            break;
          case MapKind::add:
            if (nq <= np) mn.at("kind").fail("add needs a larger target dimension");
            break;
          case MapKind::nearest:
            break;
        }
        if (m.kind != MapKind::matrix && mn.has("matrix")) mn.at("matrix").fail("only valid with kind 'matrix'");
        if (m.kind != MapKind::drop && mn.has("dropped")) mn.at("dropped").fail("only valid with kind 'drop'");
        cfg.maps.push_back(std::move(m));
      }
    } else {
      tr->at("rule").fail("unknown rule '" + rule + "' (expected nearest or explicit)");
    }
  }

  if (auto s = root.opt("step")) cfg.step = s->positive();
  if (auto h = root.opt("horizon")) cfg.horizon = h->positive();
  if (auto integ = root.opt("integrator")) {
    const std::string name = integ->string();
    if (name == "rk4") cfg.integrator = Integrator::rk4;
    else if (name == "exact") cfg.integrator = Integrator::exact;
    else integ->fail("unknown integrator '" + name + "' (expected rk4 or exact)");
  }
  if (auto x = root.opt("x0")) cfg.x0 = x->vector();

  if (auto s = root.opt("signal")) {
    cfg.signal = detail::parse_signal(*s);
    const SignalSpec& sig = *cfg.signal;
    check_mode_index(s->has("initial") ? s->at("initial") : *s, sig.initial);
    for (std::size_t i = 0; i < sig.schedule.size(); ++i)
      check_mode_index(s->at("schedule").item(i).item(1), sig.schedule[i].mode);
    for (std::size_t i = 0; i < sig.modes.size(); ++i) check_mode_index(s->at("modes").item(i), sig.modes[i]);
    if (!cfg.horizon) root.fail("'horizon' is required when a signal is given");
    if (!sig.schedule.empty() && sig.schedule.back().time >= *cfg.horizon)
      s->at("schedule").fail("last switch must come before the horizon");
    if (cfg.rule == TransitionRule::explicit_table) {
      std::set<std::pair<std::size_t, std::size_t>> covered;
      for (const auto& m : cfg.maps) covered.insert({m.from, m.to});
      std::vector<std::size_t> order;
      if (sig.kind == SignalSpecKind::fixed) {
        order.push_back(sig.initial);
        for (const auto& p : sig.schedule) order.push_back(p.mode);
      } else {
        order = sig.modes;
        order.push_back(sig.modes.front());
      }
      for (std::size_t i = 1; i < order.size(); ++i)
        if (order[i] != order[i - 1] && !covered.count({order[i - 1], order[i]}))
          root.at("transition").at("maps").fail("no map from mode " + std::to_string(order[i - 1]) + " to mode " +
                                                std::to_string(order[i]) + " used by the signal");
    }
  }

  if (auto o = root.opt("output")) {
    o->only_keys({"H", "builtin"});
    OutputSpec out;
    if (auto h = o->opt("H")) out.h = h->matrix();
    if (auto b = o->opt("builtin")) {
      out.builtin = b->string();
      if (!builtins::outputs().count(*out.builtin)) b->fail("unknown built-in output '" + *out.builtin + "'");
    }
    if (out.h.has_value() == out.builtin.has_value()) o->fail("exactly one of 'H' or 'builtin' is required");
    cfg.output = std::move(out);
  }

  if (auto d = root.opt("disturbance")) {
    d->only_keys({"mu", "eta", "dim"});
    DisturbanceSpec ds;
    if (auto mu = d->opt("mu")) {
      ds.mu = mu->number();
      if (ds.mu < 0.0) mu->fail("must be >= 0");
    }
    if (auto eta = d->opt("eta")) ds.eta = eta->string();
    if (!builtins::has_disturbance_profile(ds.eta)) d->at("eta").fail("unknown disturbance profile '" + ds.eta + "'");
    ds.dim = d->at("dim").dimension();
    cfg.disturbance = ds;
  }

  if (auto dw = root.opt("dwell")) {
    dw->only_keys({"gamma", "lipschitz"});
    if (auto g = dw->opt("gamma")) {
      cfg.dwell.gamma = g->number();
      if (!(cfg.dwell.gamma > 0.0 && cfg.dwell.gamma < 1.0)) g->fail("must be in (0, 1)");
    }
    if (auto l = dw->opt("lipschitz")) cfg.dwell.lipschitz = l->positive();
  }

  if (auto c = root.opt("chain")) {
    c->only_keys({"start", "target"});
    ChainSpec ch{c->at("start").index(), c->at("target").index()};
    check_mode_index(c->at("start"), ch.start);
    check_mode_index(c->at("target"), ch.target);
    cfg.chain = ch;
  }

  if (auto e = root.opt("experiment")) cfg.experiment = detail::parse_experiment(*e);

  if (auto v = root.opt("vectors")) {
    v->only_keys({"x", "y", "project_to"});
    VectorsSpec vs;
    vs.x = v->at("x").vector();
    if (auto y = v->opt("y")) vs.y = y->vector();
    if (auto p = v->opt("project_to")) vs.project_to = p->dimension();
    cfg.vectors = std::move(vs);
  }

  if (auto l = root.opt("lattice")) {
    l->only_keys({"dims", "closure"});
    LatticeSpec ls;
    const Node dims = l->at("dims");
    for (std::size_t i = 0; i < dims.size(); ++i) ls.dims.insert(dims.item(i).dimension());
    if (ls.dims.empty()) dims.fail("expected at least one dimension");
    if (auto c = l->opt("closure")) {
      const std::string s = c->string();
      if (s == "full") ls.closure = LatticeClosure::full;
      else if (s == "joins_only") ls.closure = LatticeClosure::joins_only;
      else c->fail("unknown closure '" + s + "' (expected full or joins_only)");
    }
    cfg.lattice = std::move(ls);
  }
  return cfg;
}

/// Parses JSON text; syntax errors are reported with line and column.
inline ScenarioConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column), "invalid JSON");
  }
  return parse_config(doc);
}

inline ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// ---------------------------------------------------------------- serialization

namespace detail {

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Dim i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Dim j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json vector_json(const Vector& v) {
  json out = json::array();
  for (Dim i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline const char* map_kind_name(MapKind k) {
  switch (k) {
    case MapKind::matrix: return "matrix";
    case MapKind::drop: return "drop";
    case MapKind::add: return "add";
    case MapKind::nearest: return "nearest";
  }
  return "nearest";
}

}  // namespace detail

inline json to_json(const ScenarioConfig& cfg) {
  using detail::matrix_json;
  using detail::vector_json;
  json doc = json::object();
  doc["name"] = cfg.name;
  doc["description"] = cfg.description;
  if (!cfg.modes.empty()) {
    json modes = json::array();
    for (const auto& m : cfg.modes) {
      json jm{{"label", m.label}, {"dim", m.dim}};
      if (m.a) jm["A"] = matrix_json(*m.a);
      if (m.b) jm["B"] = matrix_json(*m.b);
      if (m.field) jm["field"] = *m.field;
      if (!m.inputs.empty()) jm["inputs"] = m.inputs;
      if (m.feedback) {
        if (m.feedback->builtin) {
          jm["feedback"] = *m.feedback->builtin;
        } else {
          json fb{{"K", matrix_json(*m.feedback->gain)}};
          if (m.feedback->offset) fb["offset"] = vector_json(*m.feedback->offset);
          jm["feedback"] = std::move(fb);
        }
      }
      modes.push_back(std::move(jm));
    }
    doc["modes"] = std::move(modes);
  }
  if (cfg.rule == TransitionRule::nearest) {
    doc["transition"] = {{"rule", "nearest"}};
  } else {
    json maps = json::array();
    for (const auto& m : cfg.maps) {
      json jm{{"from", m.from}, {"to", m.to}, {"kind", detail::map_kind_name(m.kind)}};
      if (m.matrix) jm["matrix"] = matrix_json(*m.matrix);
      if (m.dropped) jm["dropped"] = *m.dropped;
      maps.push_back(std::move(jm));
    }
    doc["transition"] = {{"rule", "explicit"}, {"maps", std::move(maps)}};
  }
  if (cfg.signal) {
    const SignalSpec& s = *cfg.signal;
    json js;
    switch (s.kind) {
      case SignalSpecKind::fixed: {
        json sched = json::array();
        for (const auto& p : s.schedule) sched.push_back(json::array({p.time, p.mode}));
        js = {{"kind", "fixed"}, {"initial", s.initial}, {"schedule", std::move(sched)}};
        break;
      }
      case SignalSpecKind::periodic:
        js = {{"kind", "periodic"}, {"modes", s.modes}, {"dwells", s.dwells}};
        break;
      case SignalSpecKind::random:
        js = {{"kind", "random"}, {"modes", s.modes}, {"dwell_bounds", {s.dwell_min, s.dwell_max}}, {"seed", s.seed}};
        break;
    }
    doc["signal"] = std::move(js);
  }
  if (cfg.x0) doc["x0"] = vector_json(*cfg.x0);
  doc["step"] = cfg.step;
  if (cfg.horizon) doc["horizon"] = *cfg.horizon;
  doc["integrator"] = cfg.integrator == Integrator::exact ? "exact" : "rk4";
  if (cfg.output) {
    if (cfg.output->h) doc["output"] = {{"H", matrix_json(*cfg.output->h)}};
    else doc["output"] = {{"builtin", *cfg.output->builtin}};
  }
  if (cfg.disturbance) doc["disturbance"] = {{"mu", cfg.disturbance->mu}, {"eta", cfg.disturbance->eta}, {"dim", cfg.disturbance->dim}};
  doc["dwell"] = {{"gamma", cfg.dwell.gamma}};
  if (cfg.dwell.lipschitz) doc["dwell"]["lipschitz"] = *cfg.dwell.lipschitz;
  if (cfg.chain) doc["chain"] = {{"start", cfg.chain->start}, {"target", cfg.chain->target}};
  if (cfg.experiment) {
    const ExperimentSpec& e = *cfg.experiment;
    json je{{"targets", e.targets}, {"times", e.times}, {"x0", vector_json(e.x0)}, {"seed", e.seed}};
    if (e.a) {
      je["A"] = matrix_json(*e.a);
    } else {
      je["matrix"] = *e.matrix;
      je["n"] = e.n;
    }
    if (e.b) je["B"] = matrix_json(*e.b);
    if (e.c) je["C"] = matrix_json(*e.c);
    doc["experiment"] = std::move(je);
  }
  if (cfg.vectors) {
    json jv{{"x", vector_json(cfg.vectors->x)}};
    if (cfg.vectors->y) jv["y"] = vector_json(*cfg.vectors->y);
    if (cfg.vectors->project_to) jv["project_to"] = *cfg.vectors->project_to;
    doc["vectors"] = std::move(jv);
  }
  if (cfg.lattice) {
    doc["lattice"] = {{"dims", std::vector<Dim>(cfg.lattice->dims.begin(), cfg.lattice->dims.end())},
                      {"closure", cfg.lattice->closure == LatticeClosure::full ? "full" : "joins_only"}};
  }
  return doc;
}

// ---------------------------------------------------------------- building

inline Mode build_mode(const ModeSpec& spec) {
  Mode mode = spec.a ? Mode::linear(spec.label, *spec.a, spec.b.value_or(Matrix()))
                     : builtins::make_field_mode(spec.label, *spec.field, spec.inputs);
  if (spec.feedback) {
    if (spec.feedback->builtin) {
      mode.with_feedback(builtins::feedbacks().at(*spec.feedback->builtin).feedback);
    } else {
      const Matrix k = *spec.feedback->gain;
      const Vector offset = spec.feedback->offset.value_or(Vector::Zero(k.rows()));
      mode.with_feedback([k, offset](double, const Vector& x) { return Vector(offset - k * x); });
    }
  }
  return mode;
}

inline DvSystem build_system(const ScenarioConfig& cfg) {
  DvSystem sys;
  for (const auto& m : cfg.modes) sys.modes.push_back(build_mode(m));
  sys.rule = cfg.rule;
  for (const auto& m : cfg.maps) {
    const Dim np = cfg.modes[m.from].dim;
    const Dim nq = cfg.modes[m.to].dim;
    TransitionMap w = [&] {
      switch (m.kind) {
        case MapKind::matrix: return TransitionMap(*m.matrix);
        case MapKind::drop: return drop_map(np, nq, m.dropped);
        case MapKind::add: return add_map(np, nq);
        case MapKind::nearest: break;
      }
      return nearest_map(np, nq);
    }();
    sys.maps.emplace(std::make_pair(m.from, m.to), std::move(w));
  }
  if (cfg.output) {
    if (cfg.output->h) {
      sys.output = OutputMap::linear(*cfg.output->h);
    } else {
      const auto& named = builtins::outputs().at(*cfg.output->builtin);
      sys.output = OutputMap::function(named.nominal_dim, named.h);
    }
  }
  if (cfg.disturbance) sys.impulse_scale = cfg.disturbance->mu;
  return sys;
}

inline SwitchingSignal build_signal(const ScenarioConfig& cfg) {
  if (!cfg.signal) throw ConfigError("signal", "required by this command");
  const SignalSpec& s = *cfg.signal;
  const double horizon = *cfg.horizon;
  switch (s.kind) {
    case SignalSpecKind::fixed: return make_fixed_signal(s.initial, s.schedule, horizon);
    case SignalSpecKind::periodic: return make_periodic_signal(s.modes, s.dwells, horizon);
    case SignalSpecKind::random: return make_random_signal(s.modes, s.dwell_min, s.dwell_max, horizon, s.seed);
  }
  throw ConfigError("signal.kind", "unsupported");
}

inline std::optional<Disturbance> build_disturbance(const ScenarioConfig& cfg) {
  if (!cfg.disturbance) return std::nullopt;
  return Disturbance{cfg.disturbance->dim, builtins::disturbance_profile(cfg.disturbance->eta, cfg.disturbance->dim)};
}

/// The matrix governing a linear mode after its feedback: A − BK for a
/// constant-gain feedback with zero offset, A without feedback.
inline Matrix closed_loop_matrix(const ModeSpec& m, const std::string& field) {
  if (!m.a) throw ConfigError(field, "mode '" + m.label + "' is not linear");
  if (!m.feedback) return *m.a;
  if (m.feedback->gain && (!m.feedback->offset || m.feedback->offset->isZero(0.0)))
    return *m.a - *m.b * *m.feedback->gain;
  throw ConfigError(field + ".feedback", "needs a matrix feedback {K} without offset for this command");
}

inline Matrix experiment_matrix(const ExperimentSpec& e) {
  return e.a ? *e.a : builtins::experiment_matrix(*e.matrix, e.n, e.seed);
}

// ---------------------------------------------------------------- output

/// %.17g: enough digits to round-trip any double, identical across runs.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

inline void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  const Dim width = tr.max_dim();
  out << "t,mode,dim,v_norm";
  for (Dim i = 0; i < width; ++i) out << ",x_" << i;
  out << '\n';
  for (const auto& s : tr.samples) {
    out << fmt(s.t) << ',' << s.mode << ',' << s.dim() << ',' << fmt(s.v_norm);
    for (Dim i = 0; i < width; ++i) {
      out << ',';
      if (i < s.dim()) out << fmt(s.state[i]);
    }
    out << '\n';
  }
}

inline void write_events_csv(std::ostream& out, const std::vector<JumpEvent>& events) {
  out << "t,pre_dim,post_dim,gap,amplitude\n";
  for (const auto& e : events)
    out << fmt(e.time) << ',' << e.pre_state.size() << ',' << e.post_state.size() << ',' << fmt(e.gap) << ','
        << fmt(e.impulse_amplitude) << '\n';
}

inline void write_outputs_csv(std::ostream& out, const Trajectory& tr) {
  Dim width = 0;
  for (const auto& s : tr.samples)
    if (s.output) width = std::max(width, s.output->size());
  out << "t";
  for (Dim i = 0; i < width; ++i) out << ",y_" << i;
  out << '\n';
  for (const auto& s : tr.samples) {
    if (!s.output) continue;
    out << fmt(s.t);
    for (Dim i = 0; i < s.output->size(); ++i) out << ',' << fmt((*s.output)[i]);
    out << '\n';
  }
}

/// Rows (t, m, E); E is left empty where it is undefined.
inline void write_error_csv(std::ostream& out, const std::vector<ErrorSeries>& series) {
  out << "t,m,E\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.times.size(); ++i) {
      out << fmt(s.times[i]) << ',' << s.target_dim << ',';
      if (s.values[i]) out << fmt(*s.values[i]);
      out << '\n';
    }
}

inline void write_json(const fs::path& path, const json& doc) {
  auto out = detail::open_output(path);
  out << doc.dump(2) << '\n';
  detail::finish(out, path);
}

// ---------------------------------------------------------------- commands

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "embed", "dwell",  "ctrb",       "obs",
                                              "chain",    "reduce", "approx", "reduce-vec", "lattice"};
  return names;
}

namespace detail {

inline void require_modes(const ScenarioConfig& cfg, const char* command) {
  if (cfg.modes.empty()) throw ConfigError("modes", std::string("at least one mode is required by '") + command + "'");
}

inline const Vector& require_x0(const ScenarioConfig& cfg) {
  if (!cfg.x0) throw ConfigError("x0", "required by this command");
  return *cfg.x0;
}

inline const ExperimentSpec& require_experiment(const ScenarioConfig& cfg) {
  if (!cfg.experiment) throw ConfigError("experiment", "required by this command");
  return *cfg.experiment;
}

inline std::vector<ErrorSeries> error_tables(const ExperimentSpec& e) {
  const Matrix a = experiment_matrix(e);
  std::vector<ErrorSeries> out;
  for (Dim m : e.targets) out.push_back(approx_error(a, e.x0, m, e.times));
  return out;
}

inline void write_error_table(const fs::path& dir, const std::vector<ErrorSeries>& tables) {
  const fs::path path = dir / "errors.csv";
  auto out = open_output(path);
  write_error_csv(out, tables);
  finish(out, path);
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace detail

/// Runs one command and writes its artifacts into `out_dir`; a short summary goes to `log`.
inline void run_command(const std::string& command, const ScenarioConfig& cfg, const fs::path& out_dir,
                        std::ostream& log) {
  using detail::matrix_json;
  using detail::vector_json;
  fs::create_directories(out_dir);

  if (command == "simulate") {
    detail::require_modes(cfg, "simulate");
    const DvSystem sys = build_system(cfg);
    const SwitchingSignal sig = build_signal(cfg);
    const auto dist = build_disturbance(cfg);
    const Trajectory tr = simulate(sys, sig, detail::require_x0(cfg), {cfg.step, cfg.integrator}, dist ? &*dist : nullptr);
    {
      const fs::path p = out_dir / "trajectory.csv";
      auto out = detail::open_output(p);
      write_trajectory_csv(out, tr);
      detail::finish(out, p);
    }
    {
      const fs::path p = out_dir / "events.csv";
      auto out = detail::open_output(p);
      write_events_csv(out, tr.events);
      detail::finish(out, p);
    }
    if (sys.output) {
      const fs::path p = out_dir / "outputs.csv";
      auto out = detail::open_output(p);
      write_outputs_csv(out, tr);
      detail::finish(out, p);
    }
    log << "simulate: " << tr.samples.size() << " samples, " << tr.events.size() << " events, final v_norm "
        << fmt(tr.samples.back().v_norm) << '\n';
    return;
  }

  if (command == "embed") {
    detail::require_modes(cfg, "embed");
    const DvSystem sys = build_system(cfg);
    const EmbeddedSystem emb = embed_common(sys);
    json doc{{"common_dim", emb.common_dim}};
    json modes = json::array();
    for (std::size_t i = 0; i < emb.system.modes.size(); ++i) {
      const Mode& m = emb.system.modes[i];
      json jm{{"label", m.label()}, {"source_dim", sys.modes[i].dim()}, {"dim", m.dim()}};
      if (m.is_linear()) {
        jm["A"] = matrix_json(m.a());
        if (m.b().cols() > 0) jm["B"] = matrix_json(m.b());
      }
      modes.push_back(std::move(jm));
    }
    doc["modes"] = std::move(modes);
    json maps = json::array();
    for (const auto& [key, w] : emb.system.maps)
      maps.push_back({{"from", key.first}, {"to", key.second}, {"matrix", matrix_json(w.matrix())}});
    doc["maps"] = std::move(maps);
    if (cfg.signal && cfg.x0) {
      const SwitchingSignal sig = build_signal(cfg);
      const SimOptions opt{cfg.step, cfg.integrator};
      const Trajectory orig = simulate(sys, sig, *cfg.x0, opt);
      const Vector start = project(CdVector(*cfg.x0), sys.modes[sig.initial_mode].dim());
      const Trajectory lifted = simulate(emb.system, sig, lift_to(start, emb.common_dim), opt);
      const double dist = max_sample_distance(orig, lifted);
      const double tol = 10.0 * kIntegratorTolerance;
      json events = json::array();
      for (const auto& e : embed_events(orig.events, emb.common_dim)) {
        json je{{"t", e.time}, {"gap", e.gap}, {"amplitude", e.impulse_amplitude}};
        je["direction"] = e.direction ? vector_json(*e.direction) : json(nullptr);
        events.push_back(std::move(je));
      }
      doc["equivalence"] = {{"samples", orig.samples.size()}, {"max_distance", dist}, {"tolerance", tol},
                            {"equivalent", dist <= tol}};
      doc["impulses"] = std::move(events);
      log << "embed: common dim " << emb.common_dim << ", max d_V " << fmt(dist) << '\n';
    } else {
      log << "embed: common dim " << emb.common_dim << '\n';
    }
    write_json(out_dir / "embedding.json", doc);
    return;
  }

  if (command == "dwell") {
    detail::require_modes(cfg, "dwell");
    DvSystem sys = build_system(cfg);
    for (std::size_t i = 0; i < cfg.modes.size(); ++i)
      sys.modes[i] = Mode::linear(cfg.modes[i].label, closed_loop_matrix(cfg.modes[i], "modes[" + std::to_string(i) + "]"));
    DwellOptions opt;
    opt.gamma = cfg.dwell.gamma;
    opt.lipschitz = cfg.dwell.lipschitz;
    const DwellReport r = dwell_bound(sys, opt);
    json doc{{"dwell", detail::optional_number(r.dwell)},
             {"lipschitz", r.lipschitz},
             {"gamma", opt.gamma},
             {"mode_norms", r.mode_norms},
             {"diagnostic", r.diagnostic}};
    write_json(out_dir / "dwell.json", doc);
    log << "dwell: " << (r.dwell ? fmt(*r.dwell) : std::string("none")) << " (" << r.diagnostic << ")\n";
    return;
  }

  if (command == "ctrb") {
    detail::require_modes(cfg, "ctrb");
    json modes = json::array();
    for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
      const ModeSpec& ms = cfg.modes[i];
      if (!ms.a) throw ConfigError("modes[" + std::to_string(i) + "]", "ctrb needs a linear mode");
      const Mode mode = Mode::linear(ms.label, *ms.a, ms.b.value_or(Matrix()));
      const ControllabilityReport full = controllability_report(mode);
      json partial = json::array();
      for (std::size_t j = 0; j < cfg.modes.size(); ++j) {
        if (j == i) continue;
        const Matrix s = intersection_basis(ms.dim, cfg.modes[j].dim);
        const ControllabilityReport r = controllability_report(mode, s);
        partial.push_back({{"with", cfg.modes[j].label},
                           {"subspace_dim", r.subspace_dim},
                           {"partially_controllable", r.partially_controllable}});
      }
      modes.push_back({{"label", ms.label},
                       {"dim", ms.dim},
                       {"kalman_rank", full.kalman_rank},
                       {"fully_controllable", full.fully_controllable},
                       {"intersections", std::move(partial)}});
      log << "ctrb: " << ms.label << " rank " << full.kalman_rank << '/' << ms.dim << '\n';
    }
    write_json(out_dir / "ctrb.json", {{"modes", std::move(modes)}});
    return;
  }

  if (command == "obs") {
    detail::require_modes(cfg, "obs");
    if (!cfg.output || !cfg.output->h) throw ConfigError("output.H", "obs needs a linear output matrix");
    const OutputMap h = OutputMap::linear(*cfg.output->h);
    json modes = json::array();
    bool all = true;
    for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
      const ModeSpec& ms = cfg.modes[i];
      if (!ms.a) throw ConfigError("modes[" + std::to_string(i) + "]", "obs needs a linear mode");
      const Matrix& a = *ms.a;
      const Matrix c = h.mode_matrix(ms.dim);
      const Dim rank = obs_rank(a, c);
      all &= rank == ms.dim;
      modes.push_back({{"label", ms.label}, {"dim", ms.dim}, {"C", matrix_json(c)}, {"obs_rank", rank},
                       {"observable", rank == ms.dim}});
      log << "obs: " << ms.label << " rank " << rank << '/' << ms.dim << '\n';
    }
    write_json(out_dir / "obs.json", {{"modes", std::move(modes)}, {"observable_on_all_modes", all}});
    return;
  }

  if (command == "chain") {
    detail::require_modes(cfg, "chain");
    if (!cfg.chain) throw ConfigError("chain", "required by this command");
    DvSystem sys;
    for (std::size_t i = 0; i < cfg.modes.size(); ++i) {
      const ModeSpec& ms = cfg.modes[i];
      if (!ms.a) throw ConfigError("modes[" + std::to_string(i) + "]", "chain needs a linear mode");
      sys.modes.push_back(Mode::linear(ms.label, *ms.a, ms.b.value_or(Matrix())));
    }
    const auto chain = reachability_chain(sys, cfg.chain->start, cfg.chain->target);
    json doc{{"start", cfg.chain->start}, {"target", cfg.chain->target}, {"found", chain.has_value()}};
    if (chain) {
      json labels = json::array();
      for (std::size_t i : *chain) labels.push_back(cfg.modes[i].label);
      doc["chain"] = *chain;
      doc["labels"] = std::move(labels);
    }
    write_json(out_dir / "chain.json", doc);
    log << "chain: " << (chain ? "found, " + std::to_string(chain->size()) + " modes" : std::string("none")) << '\n';
    return;
  }

  if (command == "reduce" || command == "approx") {
    const ExperimentSpec& e = detail::require_experiment(cfg);
    const std::vector<ErrorSeries> tables = detail::error_tables(e);
    detail::write_error_table(out_dir, tables);
    if (command == "reduce") {
      const Matrix a = experiment_matrix(e);
      json models = json::array();
      for (Dim m : e.targets) {
        const ReducedModel r = reduce_model(a, m, e.b.value_or(Matrix()), e.c.value_or(Matrix()));
        json jm{{"m", m}, {"A", matrix_json(r.a)}};
        if (e.b) jm["B"] = matrix_json(r.b);
        if (e.c) jm["C"] = matrix_json(r.c);
        models.push_back(std::move(jm));
      }
      write_json(out_dir / "reduced.json", {{"source_dim", e.n}, {"models", std::move(models)}});
    }
    for (const auto& s : tables) {
      const auto worst = s.max_value();
      log << command << ": m = " << s.target_dim << ", max E " << (worst ? fmt(*worst) : std::string("undefined")) << '\n';
    }
    return;
  }

  if (command == "reduce-vec") {
    if (!cfg.vectors) throw ConfigError("vectors", "required by this command");
    const VectorsSpec& v = *cfg.vectors;
    const CdVector x(v.x);
    const CdVector cx = canonicalize(x);
    json doc{{"x", {{"dim", x.dim()}, {"canonical", vector_json(cx.entries())}, {"v_norm", v_norm(x)}}}};
    if (v.y) {
      const CdVector y(*v.y);
      doc["y"] = {{"dim", y.dim()}, {"canonical", vector_json(canonicalize(y).entries())}, {"v_norm", v_norm(y)}};
      json pair{{"equivalent", equivalent(x, y)},
                {"v_dist", v_dist(x, y)},
                {"v_inner", v_inner(x, y)},
                {"sum", vector_json(stp_add(x, y).entries())}};
      pair["angle_degrees"] = v_norm(x) > 0.0 && v_norm(y) > 0.0 ? json(degrees(angle(x, y))) : json(nullptr);
      doc["pair"] = std::move(pair);
    }
    if (v.project_to) {
      const Vector p = project(x, *v.project_to);
      doc["projection"] = {{"m", *v.project_to}, {"value", vector_json(p)}, {"residual", v_dist(x, p)}};
    }
    write_json(out_dir / "reduce_vec.json", doc);
    log << "reduce-vec: canonical dim " << cx.dim() << '\n';
    return;
  }

  if (command == "lattice") {
    if (!cfg.lattice) throw ConfigError("lattice", "required by this command");
    const SubspaceLattice lat = build_lattice(cfg.lattice->dims, cfg.lattice->closure);
    json edges = json::array();
    for (const auto& [lo, hi] : lat.edges()) edges.push_back(json::array({lo, hi}));
    write_json(out_dir / "lattice.json",
               {{"nodes", std::vector<Dim>(lat.nodes().begin(), lat.nodes().end())}, {"edges", std::move(edges)}});
    log << "lattice: " << lat.nodes().size() << " nodes, " << lat.edges().size() << " edges\n";
    return;
  }

  throw ConfigError("command", "unknown command '" + command + "'");
}

}  // namespace omega::scenario
