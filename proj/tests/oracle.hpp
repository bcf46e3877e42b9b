#pragma once

// Brute-force reference: restart the scan from column 0 after every firing.
// Shares nothing with the library except the plain vector representation.

#include <cstdint>
#include <vector>

namespace oracle {

using Vec = std::vector<std::int64_t>;

struct Result {
  Vec sigma;
  std::vector<std::int64_t> strategy;
};

inline void fire(Vec& s, std::size_t i, std::int64_t d) {
  if (s.size() < i + static_cast<std::size_t>(d)) s.resize(i + static_cast<std::size_t>(d), 0);
  s[i] -= d;
  if (i > 0) s[i - 1] += d - 1;
  s[i + static_cast<std::size_t>(d) - 1] += 1;
}

inline Result stabilize(Vec s, std::int64_t d) {
  Result r;
  for (;;) {
    std::size_t i = 0;
    while (i < s.size() && s[i] < d) ++i;
    if (i == s.size()) break;
    fire(s, i, d);
    r.strategy.push_back(static_cast<std::int64_t>(i));
  }
  while (!s.empty() && s.back() == 0) s.pop_back();
  r.sigma = std::move(s);
  return r;
}

/// Avalanches s^1..s^n and fixed points pi(1)..pi(n) of the single-grain process.
struct Process {
  std::int64_t d;
  Vec sigma;
  Result step() {
    if (sigma.empty()) sigma.push_back(0);
    sigma[0] += 1;
    Result r = stabilize(sigma, d);
    sigma = r.sigma;
    return r;
  }
};

}  // namespace oracle
