#pragma once

// Exact rationals over 64-bit integers, plus 3-vectors and 3x3 matrices of them.
// Intermediate products are formed in 128 bits; a result that does not fit
// back into 64 bits after reduction throws std::overflow_error.

#include <array>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace kspm {

class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n) {}  // NOLINT(google-explicit-constructor)
  Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return make(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Rational operator-() const { return make(-static_cast<__int128>(num_), den_); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
  }

  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

 private:
  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Rational make(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr __int128 lo = INT64_MIN, hi = INT64_MAX;
    if (n < lo || n > hi || d > hi) throw std::overflow_error("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  void assign(std::int64_t n, std::int64_t d) { *this = make(n, d); }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct RationalVec3 {
  std::array<Rational, 3> c{};

  Rational& operator[](std::size_t i) { return c[i]; }
  const Rational& operator[](std::size_t i) const { return c[i]; }

  friend RationalVec3 operator+(const RationalVec3& a, const RationalVec3& b) {
    return {{a[0] + b[0], a[1] + b[1], a[2] + b[2]}};
  }
  friend RationalVec3 operator-(const RationalVec3& a, const RationalVec3& b) {
    return {{a[0] - b[0], a[1] - b[1], a[2] - b[2]}};
  }
  friend RationalVec3 operator*(const Rational& s, const RationalVec3& v) {
    return {{s * v[0], s * v[1], s * v[2]}};
  }
  friend bool operator==(const RationalVec3&, const RationalVec3&) = default;

  friend std::ostream& operator<<(std::ostream& os, const RationalVec3& v) {
    return os << '(' << v[0] << ", " << v[1] << ", " << v[2] << ')';
  }
};

struct RationalMat3 {
  std::array<std::array<Rational, 3>, 3> m{};

  static RationalMat3 identity() {
    RationalMat3 r;
    for (std::size_t i = 0; i < 3; ++i) r.m[i][i] = 1;
    return r;
  }

  /// Matrix whose columns are a, b, c.
  static RationalMat3 from_columns(const RationalVec3& a, const RationalVec3& b,
                                   const RationalVec3& c) {
    RationalMat3 r;
    for (std::size_t i = 0; i < 3; ++i) {
      r.m[i][0] = a[i];
      r.m[i][1] = b[i];
      r.m[i][2] = c[i];
    }
    return r;
  }

  friend RationalVec3 operator*(const RationalMat3& a, const RationalVec3& v) {
    RationalVec3 out;
    for (std::size_t i = 0; i < 3; ++i) out[i] = a.m[i][0] * v[0] + a.m[i][1] * v[1] + a.m[i][2] * v[2];
    return out;
  }
  friend RationalMat3 operator*(const RationalMat3& a, const RationalMat3& b) {
    RationalMat3 out;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        out.m[i][j] = a.m[i][0] * b.m[0][j] + a.m[i][1] * b.m[1][j] + a.m[i][2] * b.m[2][j];
    return out;
  }
  friend RationalMat3 operator-(const RationalMat3& a, const RationalMat3& b) {
    RationalMat3 out;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) out.m[i][j] = a.m[i][j] - b.m[i][j];
    return out;
  }
  friend RationalMat3 operator*(const Rational& s, const RationalMat3& a) {
    RationalMat3 out = a;
    for (auto& row : out.m)
      for (auto& x : row) x *= s;
    return out;
  }
  friend bool operator==(const RationalMat3&, const RationalMat3&) = default;

  Rational det() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }

  Rational trace() const { return m[0][0] + m[1][1] + m[2][2]; }

  /// Sum of the principal 2x2 minors.
  Rational minor_sum() const {
    return (m[0][0] * m[1][1] - m[0][1] * m[1][0]) + (m[0][0] * m[2][2] - m[0][2] * m[2][0]) +
           (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
  }

  /// Exact rank by fraction-free elimination.
  int rank() const {
    auto a = m;
    int r = 0;
    for (std::size_t col = 0; col < 3 && r < 3; ++col) {
      std::size_t pivot = static_cast<std::size_t>(r);
      while (pivot < 3 && a[pivot][col] == Rational(0)) ++pivot;
      if (pivot == 3) continue;
      std::swap(a[pivot], a[static_cast<std::size_t>(r)]);
      for (std::size_t i = 0; i < 3; ++i) {
        if (i == static_cast<std::size_t>(r) || a[i][col] == Rational(0)) continue;
        Rational f = a[i][col] / a[static_cast<std::size_t>(r)][col];
        for (std::size_t j = 0; j < 3; ++j) a[i][j] -= f * a[static_cast<std::size_t>(r)][j];
      }
      ++r;
    }
    return r;
  }

  RationalMat3 inverse() const {
    Rational dt = det();
    if (dt == Rational(0)) throw std::domain_error("singular matrix");
    RationalMat3 inv;
    auto cof = [&](std::size_t r, std::size_t c) {
      std::size_t r0 = r == 0 ? 1 : 0, r1 = r == 2 ? 1 : 2;
      std::size_t c0 = c == 0 ? 1 : 0, c1 = c == 2 ? 1 : 2;
      Rational minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
      return ((r + c) % 2 == 0) ? minor : -minor;
    };
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) inv.m[i][j] = cof(j, i) / dt;
    return inv;
  }
};

}  // namespace kspm
