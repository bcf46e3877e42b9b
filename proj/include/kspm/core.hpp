#pragma once

// Configurations of the Kadanoff sand pile model KSPM(D) and its transition rule.
//
// A configuration is stored as its sequence of height differences
// sigma_i = h_i - h_{i+1}. Only a finite prefix is held in memory; every
// column beyond the stored length reads as zero.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kspm {

using Column = std::int64_t;
using Value = std::int64_t;

/// Raised when an operation is applied outside its precondition, e.g. firing
/// a column that is not fireable. Never used for recoverable input errors.
class contract_violation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Parameters {
  Value d = 3;

  constexpr Parameters() = default;
  constexpr explicit Parameters(Value d_) : d(d_) {
    if (d_ < 2) throw std::invalid_argument("KSPM parameter D must be >= 2");
  }

  friend constexpr bool operator==(const Parameters&, const Parameters&) = default;
};

class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(Parameters params) : params_(params) {}
  Configuration(std::vector<Value> sigma, Parameters params)
      : sigma_(std::move(sigma)), params_(params) {
    for (Value v : sigma_)
      if (v < 0) throw std::invalid_argument("configuration entries must be non-negative");
  }
  Configuration(std::initializer_list<Value> sigma, Parameters params)
      : Configuration(std::vector<Value>(sigma), params) {}

  const Parameters& params() const noexcept { return params_; }
  Value d() const noexcept { return params_.d; }

  /// Value at column i; zero beyond the stored prefix.
  Value operator[](Column i) const noexcept {
    return (i >= 0 && static_cast<std::size_t>(i) < sigma_.size())
               ? sigma_[static_cast<std::size_t>(i)]
               : 0;
  }

  /// Stored prefix length. May exceed the last nonzero column.
  std::size_t size() const noexcept { return sigma_.size(); }
  std::span<const Value> values() const noexcept { return sigma_; }

  /// Index of the last nonzero column, or -1 for the empty pile.
  Column last_nonzero() const noexcept {
    for (std::size_t i = sigma_.size(); i > 0; --i)
      if (sigma_[i - 1] != 0) return static_cast<Column>(i - 1);
    return -1;
  }

  /// Copy with trailing zeros removed.
  Configuration trimmed() const {
    Configuration out(params_);
    out.sigma_.assign(sigma_.begin(), sigma_.begin() + (last_nonzero() + 1));
    return out;
  }

  /// Mutable access that grows the prefix as needed.
  Value& at_grow(Column i) {
    if (i < 0) throw std::out_of_range("negative column");
    auto idx = static_cast<std::size_t>(i);
    if (idx >= sigma_.size()) sigma_.resize(idx + 1, 0);
    return sigma_[idx];
  }

  /// Raw storage, for in-place engines that maintain the invariants themselves.
  std::vector<Value>& storage() noexcept { return sigma_; }

  /// Semantic equality: trailing zeros are ignored.
  friend bool operator==(const Configuration& a, const Configuration& b) {
    if (a.params_ != b.params_) return false;
    std::size_t n = std::max(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i)
      if (a[static_cast<Column>(i)] != b[static_cast<Column>(i)]) return false;
    return true;
  }

  friend std::ostream& operator<<(std::ostream& os, const Configuration& c) {
    os << '(';
    Column last = c.last_nonzero();
    for (Column i = 0; i <= last; ++i) os << (i ? "," : "") << c[i];
    if (last < 0) os << '0';
    return os << ')';
  }

 private:
  std::vector<Value> sigma_;
  Parameters params_{};
};

inline bool is_fireable(const Configuration& cfg, Column i) noexcept {
  return i >= 0 && cfg[i] >= cfg.d();
}

namespace detail {

// Applies the transition rule in place. Caller guarantees fireability.
inline void fire_in_place(std::vector<Value>& sigma, Column i, Value d) {
  auto need = static_cast<std::size_t>(i + d);
  if (sigma.size() < need) sigma.resize(need, 0);
  auto idx = static_cast<std::size_t>(i);
  sigma[idx] -= d;
  if (i > 0) sigma[idx - 1] += d - 1;
  sigma[idx + static_cast<std::size_t>(d) - 1] += 1;
}

}  // namespace detail

/// Fires column i. Throws contract_violation when sigma_i < D.
inline Configuration fire(const Configuration& cfg, Column i) {
  if (!is_fireable(cfg, i))
    throw contract_violation("fire: column " + std::to_string(i) + " is not fireable");
  Configuration out = cfg;
  detail::fire_in_place(out.storage(), i, cfg.d());
  return out;
}

inline Configuration add_grain(const Configuration& cfg) {
  Configuration out = cfg;
  out.at_grow(0) += 1;
  return out;
}

/// Heights h_0..h_{n-1}, h_i being the suffix sum of sigma from i.
inline std::vector<Value> heights(const Configuration& cfg, std::size_t n) {
  std::vector<Value> h(n, 0);
  std::size_t len = std::max(n, cfg.size());
  Value acc = 0;
  for (std::size_t i = len; i > 0; --i) {
    acc += cfg[static_cast<Column>(i - 1)];
    if (i - 1 < n) h[i - 1] = acc;
  }
  return h;
}

/// Inverse of heights(): sigma_i = h_i - h_{i+1}, with h zero past the end.
inline Configuration from_heights(std::span<const Value> h, Parameters params) {
  std::vector<Value> sigma(h.size(), 0);
  for (std::size_t i = 0; i < h.size(); ++i)
    sigma[i] = h[i] - (i + 1 < h.size() ? h[i + 1] : 0);
  return Configuration(std::move(sigma), params);
}

/// Total grain count, sum of (i+1) * sigma_i.
inline Value weighted_mass(const Configuration& cfg) noexcept {
  Value m = 0;
  auto v = cfg.values();
  for (std::size_t i = 0; i < v.size(); ++i) m += static_cast<Value>(i + 1) * v[i];
  return m;
}

inline bool is_stable(const Configuration& cfg) noexcept {
  return std::ranges::none_of(cfg.values(), [d = cfg.d()](Value v) { return v >= d; });
}

}  // namespace kspm
