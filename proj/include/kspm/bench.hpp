#pragma once

// Iterative process that replays each avalanche only until its right part is
// determined, then emits the rest from pi(k-1) without simulating it.
//
// Handoff happens just before a peak c (c greater than every column fired so
// far, r being the previous maximum) when both hold:
//   * every column i in (r, c) already holds at least one grain, so firing c
//     is followed by the descending run c-1, ..., r+1;
//   * once that run is done, some D-1 consecutive columns below c are fired.
// From then on each peak is the lowest column within D-1 of the previous one
// holding D-1 in pi(k-1), followed by its descending run.

#include <cstddef>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include "kspm/core.hpp"
#include "kspm/pseudolocal.hpp"
#include "kspm/strategies.hpp"

namespace kspm {

struct PseudoLocalCounters {
  std::uint64_t replayed_firings = 0;       // chosen by the leftmost worklist
  std::uint64_t predicted_firings = 0;      // emitted by the peak chain
  std::uint64_t simulated_above_interval = 0;  // replayed firings at >= l+D-1, l from the whole avalanche
  std::uint64_t prediction_reads = 0;       // pi(k-1) columns inspected by the chain
  std::uint64_t handoffs = 0;
  std::uint64_t fallbacks = 0;              // avalanches replayed to the end
};

struct PseudoLocalStep {
  Avalanche avalanche;
  bool predicted = false;
  std::size_t replayed = 0;   // length of the replayed prefix
};

class PseudoLocalProcess {
 public:
  explicit PseudoLocalProcess(Parameters params) : sigma_(params) {}

  PseudoLocalStep step() {
    const Value d = sigma_.d();
    auto& sigma = sigma_.storage();
    ++k_;
    if (sigma.empty()) sigma.push_back(0);
    sigma[0] += 1;

    Strategy s;
    Column r = -1;
    std::optional<Column> interval;
    bool handed_off = false;
    push_if_fireable(0);

    while (!heap_.empty()) {
      Column c = heap_.top();
      if (r >= 0 && c > r && try_handoff(c, r, interval, s)) {
        handed_off = true;
        break;
      }
      heap_.pop();
      queued_[static_cast<std::size_t>(c)] = 0;
      detail::fire_in_place(sigma, c, d);
      mark_fired(c, interval);
      s.push_back(c);
      r = std::max(r, c);
      ++counters_.replayed_firings;
      if (c > 0) push_if_fireable(c - 1);
      push_if_fireable(c);
      push_if_fireable(c + d - 1);
    }

    PseudoLocalStep out;
    out.replayed = handed_off ? replayed_len_ : s.size();
    out.predicted = handed_off;
    if (handed_off)
      ++counters_.handoffs;
    else if (!s.empty())
      ++counters_.fallbacks;
    out.avalanche = make_avalanche(k_, std::move(s), sigma_.params());
    if (const auto& l = out.avalanche.interval_l)
      for (std::size_t t = 0; t < out.replayed; ++t)
        if (out.avalanche.strategy[t] >= *l + d - 1) ++counters_.simulated_above_interval;
    return out;
  }

  const Configuration& fixed_point() const noexcept { return sigma_; }
  const PseudoLocalCounters& counters() const noexcept { return counters_; }
  Value k() const noexcept { return k_; }

 private:
  bool fired(Column c) const {
    return c >= 0 && static_cast<std::size_t>(c) < stamp_.size() && stamp_[static_cast<std::size_t>(c)] == k_;
  }

  void mark_fired(Column c, std::optional<Column>& interval) {
    auto idx = static_cast<std::size_t>(c);
    if (idx >= stamp_.size()) stamp_.resize(idx + 1 + idx / 2, 0);
    stamp_[idx] = k_;
    if (interval) return;
    const Value d = sigma_.d();
    Column lo = c, hi = c;
    while (lo > 0 && c - lo < d - 2 && fired(lo - 1)) --lo;
    while (hi - c < d - 2 && fired(hi + 1)) ++hi;
    if (hi - lo + 1 >= d - 1) interval = lo;
  }

  void push_if_fireable(Column c) {
    const auto& sigma = sigma_.storage();
    auto idx = static_cast<std::size_t>(c);
    if (idx >= sigma.size() || sigma[idx] < sigma_.d()) return;
    if (idx >= queued_.size()) queued_.resize(idx + 1 + idx / 2, 0);
    if (queued_[idx]) return;
    queued_[idx] = 1;
    heap_.push(c);
  }

  // Predicts and applies the rest of the avalanche when the handoff
  // conditions hold before firing peak c.
  bool try_handoff(Column c, Column r, std::optional<Column>& interval, Strategy& s) {
    const Value d = sigma_.d();
    const auto& sigma = sigma_.storage();
    auto at = [&](Column i) { return static_cast<std::size_t>(i) < sigma.size() ? sigma[static_cast<std::size_t>(i)] : 0; };
    for (Column i = r + 1; i < c; ++i)
      if (at(i) < 1) return false;
    Column base = -1;
    if (interval && *interval + d - 1 <= c) {
      base = *interval;
    } else {
      for (Column i = c - d + 1; i <= r; ++i)
        if (!fired(i)) return false;
      base = c - d + 1;
    }

    // pi(k-1) above r: current value minus the grain from column i-D+1, if fired.
    auto prev_at = [&](Column i) { return at(i) - (fired(i - d + 1) ? 1 : 0); };
    std::size_t reads = 0;
    std::vector<Column> peaks = peak_chain(std::max(r + 1, base + d - 1), r + d - 1, d, prev_at, &reads);
    counters_.prediction_reads += reads;
    Strategy suffix = suffix_from_peaks(PeakSequence{peaks, 0}, r + 1);

    replayed_len_ = s.size();
    auto& storage = sigma_.storage();
    for (Column f : suffix) {
      detail::fire_in_place(storage, f, d);
      auto idx = static_cast<std::size_t>(f);
      if (idx >= stamp_.size()) stamp_.resize(idx + 1 + idx / 2, 0);
      stamp_[idx] = k_;
      s.push_back(f);
    }
    counters_.predicted_firings += suffix.size();
    while (!heap_.empty()) {
      queued_[static_cast<std::size_t>(heap_.top())] = 0;
      heap_.pop();
    }
    return true;
  }

  Configuration sigma_;
  Value k_ = 0;
  std::vector<Value> stamp_;  // avalanche index that last fired the column
  std::priority_queue<Column, std::vector<Column>, std::greater<>> heap_;
  std::vector<char> queued_;
  std::size_t replayed_len_ = 0;
  PseudoLocalCounters counters_;
};

}  // namespace kspm
