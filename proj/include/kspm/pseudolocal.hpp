#pragma once

// Structure of avalanches: interval detection, peak prediction and the
// pseudo-local reconstruction of an avalanche's right part from pi(k-1) alone.
//
// Once the avalanche has fired D-1 consecutive columns l..l+D-2, every later
// peak p >= l+D-1 is a column holding D-1 in pi(k-1) that lies within D-1 of
// the previous peak, and each peak is followed by a descending run that fills
// the holes down to the previous peak.

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kspm/core.hpp"
#include "kspm/strategies.hpp"

namespace kspm {

struct PeakSequence {
  std::vector<Column> peaks;
  Column base_l = 0;

  friend bool operator==(const PeakSequence&, const PeakSequence&) = default;
};

struct StructureReport {
  bool single_fire_ok = true;
  bool local_density_ok = true;
  bool peaks_match = true;
  bool suffix_match = true;
  bool equality_range_ok = true;
  std::string details;

  bool ok() const noexcept {
    return single_fire_ok && local_density_ok && peaks_match && suffix_match &&
           equality_range_ok;
  }
};

inline std::optional<Column> find_interval_l(const Avalanche& av, Parameters params) {
  return interval_base(av.strategy, params.d);
}

/// Lowest column in [lo, hi] holding D-1, then repeatedly the lowest column
/// holding D-1 within D-1 to the right of the last one. `value_at` reads
/// pi(k-1); `reads`, when given, counts the columns inspected.
template <class ValueAt>
std::vector<Column> peak_chain(Column lo, Column hi, Value d, ValueAt&& value_at,
                               std::size_t* reads = nullptr) {
  std::vector<Column> peaks;
  auto scan = [&](Column from, Column to) -> Column {
    for (Column i = from; i <= to; ++i) {
      if (reads) ++*reads;
      if (value_at(i) == d - 1) return i;
    }
    return -1;
  };
  for (Column p = scan(lo, hi); p >= 0; p = scan(p + 1, p + d - 1)) peaks.push_back(p);
  return peaks;
}

/// Predicted peaks at or above l+D-1.
///
/// Without `prefix_max` the first peak is the lowest column >= l+D-1 holding
/// D-1. With it (the largest column fired before the avalanche first reaches
/// l+D-1) the first peak must also lie within D-1 of that column, which is the
/// reachability condition the chain applies to every later peak.
inline PeakSequence predict_peaks(const Configuration& prev_fix, Column l, Parameters params,
                                  std::optional<Column> prefix_max = std::nullopt) {
  const Value d = params.d;
  Column lo = l + d - 1;
  Column hi = static_cast<Column>(prev_fix.size());
  if (prefix_max) {
    lo = std::max(lo, *prefix_max + 1);
    hi = std::min(hi, *prefix_max + d - 1);
  }
  return {peak_chain(lo, hi, d, [&](Column i) { return prev_fix[i]; }), l};
}

/// Firings of the avalanche from its first peak >= l+D-1 onward: each peak
/// followed by the descending run down to one past the previous peak.
inline Strategy suffix_from_peaks(const PeakSequence& ps, Column first_floor) {
  Strategy s;
  Column floor = first_floor;
  for (Column p : ps.peaks) {
    for (Column c = p; c >= floor; --c) s.push_back(c);
    floor = p + 1;
  }
  return s;
}

inline Strategy predict_suffix(const Configuration& prev_fix, Column l, Parameters params,
                               std::optional<Column> prefix_max = std::nullopt) {
  PeakSequence ps = predict_peaks(prev_fix, l, params, prefix_max);
  if (ps.peaks.empty()) return {};
  Column floor = prefix_max ? *prefix_max + 1 : ps.peaks.front() - params.d + 2;
  return suffix_from_peaks(ps, floor);
}

/// Where an avalanche first reaches column `threshold`.
struct SuffixSplit {
  std::size_t t0 = 0;         // index of the first firing >= threshold (size() if none)
  Column prefix_max = -1;     // largest column fired before t0
};

inline SuffixSplit split_at(const Strategy& s, Column threshold) {
  SuffixSplit out{s.size(), -1};
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (s[t] >= threshold) {
      out.t0 = t;
      return out;
    }
    out.prefix_max = std::max(out.prefix_max, s[t]);
  }
  return out;
}

/// Checks one avalanche against the single-firing property, the local gap
/// bounds, the predicted right part and the equality of successive fixed
/// points above the interval.
inline StructureReport verify_avalanche_structure(const Avalanche& av, const Configuration& prev_fix,
                                                  const Configuration& next_fix, Parameters params) {
  const Value d = params.d;
  const Strategy& s = av.strategy;
  StructureReport rep;
  std::ostringstream why;

  Column top = s.empty() ? 0 : *std::max_element(s.begin(), s.end());
  std::vector<char> fired(static_cast<std::size_t>(top) + 1, 0);
  Column running_max = -1;
  for (std::size_t t = 0; t < s.size(); ++t) {
    Column c = s[t];
    if (c < 0) {
      rep.single_fire_ok = false;
      why << "negative column at t=" << t << "; ";
      break;
    }
    if (fired[static_cast<std::size_t>(c)]) {
      rep.single_fire_ok = false;
      why << "column " << c << " fired twice; ";
    }
    if (t > 0) {
      if (c < running_max) {
        Column hole = running_max - 1;
        while (hole >= 0 && fired[static_cast<std::size_t>(hole)]) --hole;
        if (c != hole || running_max - c >= d - 1) {
          rep.local_density_ok = false;
          why << "backward move " << running_max << "->" << c << " at t=" << t << "; ";
        }
      } else if (c > running_max && c - running_max > d - 1) {
        rep.local_density_ok = false;
        why << "forward jump " << running_max << "->" << c << " at t=" << t << "; ";
      }
    }
    fired[static_cast<std::size_t>(c)] = 1;
    running_max = std::max(running_max, c);
  }

  if (auto l = find_interval_l(av, params); l && rep.single_fire_ok) {
    const Column threshold = *l + d - 1;
    SuffixSplit split = split_at(s, threshold);
    Strategy actual(s.begin() + static_cast<std::ptrdiff_t>(split.t0), s.end());
    std::vector<Column> actual_peaks;
    for (Column p : av.peaks)
      if (p >= threshold) actual_peaks.push_back(p);

    PeakSequence predicted = predict_peaks(prev_fix, *l, params, split.prefix_max);
    if (predicted.peaks != actual_peaks) {
      rep.peaks_match = false;
      why << "peak prediction differs (l=" << *l << "); ";
    }
    if (predict_suffix(prev_fix, *l, params, split.prefix_max) != actual) {
      rep.suffix_match = false;
      why << "suffix prediction differs (l=" << *l << "); ";
    }
    for (Column j = threshold; j < running_max; ++j)
      if (next_fix[j] != prev_fix[j]) {
        rep.equality_range_ok = false;
        why << "pi(k) and pi(k-1) differ at " << j << "; ";
        break;
      }
  }
  rep.details = why.str();
  return rep;
}

}  // namespace kspm
