#pragma once

// Stabilization strategies, the single-grain iterative process and avalanches.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kspm/core.hpp"

namespace kspm {

/// Ordered sequence of fired columns (s_1, ..., s_T).
using Strategy = std::vector<Column>;

/// Largest grain count accepted by the iterative process. Keeps every
/// sigma entry and the weighted mass well inside 64 bits.
inline constexpr Value kMaxGrains = Value{1} << 40;

/// Columns fired strictly later than every previous firing, in firing order.
inline std::vector<Column> extract_peaks(const Strategy& s) {
  std::vector<Column> peaks;
  for (Column c : s)
    if (peaks.empty() || c > peaks.back()) peaks.push_back(c);
  return peaks;
}

/// Smallest l such that l, l+1, ..., l+D-2 are all fired by s.
inline std::optional<Column> interval_base(const Strategy& s, Value d) {
  if (s.empty()) return std::nullopt;
  Column top = *std::max_element(s.begin(), s.end());
  std::vector<char> fired(static_cast<std::size_t>(top) + 1, 0);
  for (Column c : s) fired[static_cast<std::size_t>(c)] = 1;
  const Column width = d - 1;
  Column run = 0;
  for (Column i = 0; i <= top; ++i) {
    run = fired[static_cast<std::size_t>(i)] ? run + 1 : 0;
    if (run >= width) return i - width + 1;
  }
  return std::nullopt;
}

struct Avalanche {
  Value k = 0;
  Strategy strategy;
  std::vector<Column> peaks;
  std::optional<Column> interval_l;

  /// Sorted distinct fired columns.
  std::vector<Column> fired_set() const {
    std::vector<Column> out = strategy;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::optional<Column> max_fired() const {
    if (peaks.empty()) return std::nullopt;
    return peaks.back();
  }

  friend bool operator==(const Avalanche&, const Avalanche&) = default;
};

/// Builds an avalanche record with derived peaks and interval column.
inline Avalanche make_avalanche(Value k, Strategy s, Parameters params) {
  Avalanche av;
  av.k = k;
  av.peaks = extract_peaks(s);
  av.interval_l = interval_base(s, params.d);
  av.strategy = std::move(s);
  return av;
}

struct ShotVector {
  std::vector<Value> counts;
  Value n_grains = 0;

  Value operator[](Column i) const noexcept {
    return (i >= 0 && static_cast<std::size_t>(i) < counts.size())
               ? counts[static_cast<std::size_t>(i)]
               : 0;
  }

  void add(const Strategy& s) {
    for (Column c : s) {
      auto idx = static_cast<std::size_t>(c);
      if (idx >= counts.size()) counts.resize(idx + 1, 0);
      ++counts[idx];
    }
  }

  friend bool operator==(const ShotVector&, const ShotVector&) = default;
};

struct TraceRecord {
  Configuration pi_k;
  Avalanche avalanche;
};

struct RunTrace {
  Parameters params;
  std::vector<TraceRecord> records;  // records[k-1] describes grain k
  ShotVector shot;

  /// pi(k); pi(0) is the empty pile.
  Configuration fixed_point(Value k) const {
    if (k == 0) return Configuration(params);
    return records.at(static_cast<std::size_t>(k - 1)).pi_k;
  }
  Value n_grains() const noexcept { return static_cast<Value>(records.size()); }
};

namespace detail {

// Leftmost stabilization over raw storage. Keeps its queue buffers between
// calls so the iterative process does not reallocate per grain.
class LeftmostEngine {
 public:
  // Stabilizes sigma in place, appending firings to `out`. Only the columns in
  // `seeds` (and whatever they trigger) are considered initially fireable.
  void run(std::vector<Value>& sigma, Value d, std::span<const Column> seeds, Strategy& out) {
    for (Column c : seeds) consider(sigma, d, c);
    while (!heap_.empty()) {
      Column c = heap_.top();
      heap_.pop();
      queued_[static_cast<std::size_t>(c)] = 0;
      fire_in_place(sigma, c, d);
      out.push_back(c);
      if (c > 0) consider(sigma, d, c - 1);
      consider(sigma, d, c);
      consider(sigma, d, c + d - 1);
    }
  }

 private:
  void consider(const std::vector<Value>& sigma, Value d, Column c) {
    auto idx = static_cast<std::size_t>(c);
    if (idx >= sigma.size() || sigma[idx] < d) return;
    if (idx >= queued_.size()) queued_.resize(idx + 1 + idx / 2, 0);
    if (queued_[idx]) return;
    queued_[idx] = 1;
    heap_.push(c);
  }

  std::priority_queue<Column, std::vector<Column>, std::greater<>> heap_;
  std::vector<char> queued_;
};

}  // namespace detail

/// pi(cfg) together with the leftmost strategy reaching it.
inline std::pair<Configuration, Strategy> stabilize_leftmost(const Configuration& cfg) {
  Configuration out = cfg;
  Strategy s;
  std::vector<Column> seeds;
  for (std::size_t i = 0; i < cfg.size(); ++i)
    if (cfg[static_cast<Column>(i)] >= cfg.d()) seeds.push_back(static_cast<Column>(i));
  detail::LeftmostEngine engine;
  engine.run(out.storage(), cfg.d(), seeds, s);
  return {std::move(out), std::move(s)};
}

/// Stabilizes by firing a uniformly chosen fireable column at every step.
///
/// The generator is std::mt19937_64 seeded with `seed`; the k-th choice takes
/// index (draw mod count) into the current fireable list. Both pieces are
/// fixed by the standard, so results are identical on every platform.
inline std::pair<Configuration, Strategy> stabilize_random(const Configuration& cfg,
                                                           std::uint64_t seed) {
  Configuration out = cfg;
  auto& sigma = out.storage();
  const Value d = cfg.d();
  Strategy s;
  std::mt19937_64 rng(seed);

  std::vector<Column> live;
  std::vector<std::int64_t> slot;  // position in `live`, or -1
  auto update = [&](Column c) {
    if (c < 0) return;
    auto idx = static_cast<std::size_t>(c);
    if (idx >= slot.size()) slot.resize(idx + 1, -1);
    bool fireable = idx < sigma.size() && sigma[idx] >= d;
    if (fireable && slot[idx] < 0) {
      slot[idx] = static_cast<std::int64_t>(live.size());
      live.push_back(c);
    } else if (!fireable && slot[idx] >= 0) {
      auto pos = static_cast<std::size_t>(slot[idx]);
      live[pos] = live.back();
      slot[static_cast<std::size_t>(live[pos])] = static_cast<std::int64_t>(pos);
      live.pop_back();
      slot[idx] = -1;
    }
  };

  for (std::size_t i = 0; i < sigma.size(); ++i) update(static_cast<Column>(i));
  while (!live.empty()) {
    Column c = live[static_cast<std::size_t>(rng() % live.size())];
    detail::fire_in_place(sigma, c, d);
    s.push_back(c);
    update(c - 1);
    update(c);
    update(c + d - 1);
  }
  return {std::move(out), std::move(s)};
}

/// The single-grain iterative process, advanced one grain at a time.
class Process {
 public:
  explicit Process(Parameters params) : fix_(params) {}

  /// Resumes from a previously reached state: fix must be pi(k) and shot its
  /// accumulated shot vector.
  Process(Configuration fix, ShotVector shot, Value k)
      : fix_(std::move(fix)), shot_(std::move(shot)), k_(k) {
    if (!is_stable(fix_)) throw std::invalid_argument("resume state is not a fixed point");
    if (weighted_mass(fix_) != k) throw std::invalid_argument("resume state mass differs from k");
    shot_.n_grains = k;
  }

  /// Adds one grain on column 0 and returns the resulting avalanche.
  Avalanche step() {
    if (k_ >= kMaxGrains) throw std::overflow_error("grain count exceeds the mass cap");
    Strategy s;
    fix_.at_grow(0) += 1;
    const Column origin = 0;
    engine_.run(fix_.storage(), fix_.d(), std::span(&origin, 1), s);
    ++k_;
    shot_.add(s);
    shot_.n_grains = k_;
    return make_avalanche(k_, std::move(s), fix_.params());
  }

  const Configuration& fixed_point() const noexcept { return fix_; }
  const ShotVector& shot() const noexcept { return shot_; }
  Value k() const noexcept { return k_; }
  const Parameters& params() const noexcept { return fix_.params(); }

 private:
  Configuration fix_;
  ShotVector shot_;
  Value k_ = 0;
  detail::LeftmostEngine engine_;
};

/// Runs the iterative process for n_grains grains, keeping every record.
inline RunTrace run_process(Value n_grains, Parameters params) {
  if (n_grains < 0) throw std::invalid_argument("grain count must be non-negative");
  if (n_grains > kMaxGrains) throw std::invalid_argument("grain count exceeds the mass cap");
  RunTrace trace{params, {}, {}};
  trace.records.reserve(static_cast<std::size_t>(n_grains));
  Process proc(params);
  for (Value k = 1; k <= n_grains; ++k) {
    Avalanche av = proc.step();
    trace.records.push_back({proc.fixed_point().trimmed(), std::move(av)});
  }
  trace.shot = proc.shot();
  return trace;
}

/// Whether firing i then j and j then i reach the same configuration.
inline bool check_diamond(const Configuration& cfg, Column i, Column j) {
  if (i == j) throw contract_violation("check_diamond: columns must differ");
  if (!is_fireable(cfg, i) || !is_fireable(cfg, j))
    throw contract_violation("check_diamond: both columns must be fireable");
  return fire(fire(cfg, i), j) == fire(fire(cfg, j), i);
}

inline std::map<Column, Value> strategy_counts(const Strategy& s) {
  std::map<Column, Value> counts;
  for (Column c : s) ++counts[c];
  return counts;
}

}  // namespace kspm
