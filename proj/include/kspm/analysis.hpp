#pragma once

// Shot vectors and the D=3 linear-algebra picture of (2,0)^j prefixes.
//
// For D=3 the shot vector a of pi(N) obeys sigma_i = a_{i-2} - 3 a_i + 2 a_{i+1}
// with a_{-2} = N and a_{-1} = 0. Stacking u_i = (a_{i-2}, a_{i-1}, a_i) turns this
// into u_{i+1} = A u_i + v_i, v_i = (0, 0, sigma_i / 2). Along a (2,0)^j prefix the
// component of u_{2i} - v on the eigenline of -1/2 shrinks by exactly 4 per
// double step, which forces N to grow like 4^j.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kspm/core.hpp"
#include "kspm/pseudolocal.hpp"
#include "kspm/rational.hpp"
#include "kspm/strategies.hpp"

namespace kspm {

// ---------------------------------------------------------------------------
// Shot identity (any D)

/// Per-column residual sigma_i - (N [i=0] + a_{i-D+1} - D a_i + (D-1) a_{i+1}).
/// Every entry is zero when fix = pi(N) and shot is its shot vector.
inline std::vector<Value> shot_identity_residual(const Configuration& fix, const ShotVector& shot,
                                                 Value n_grains, Parameters params) {
  if (shot.n_grains != n_grains)
    throw std::invalid_argument("shot vector was accumulated over a different grain count");
  if (fix.d() != params.d) throw std::invalid_argument("configuration has a different D");
  const Value d = params.d;
  std::size_t len = std::max(fix.size(), shot.counts.size() + static_cast<std::size_t>(d));
  std::vector<Value> res(len, 0);
  for (std::size_t u = 0; u < len; ++u) {
    auto i = static_cast<Column>(u);
    Value flow = (i == 0 ? n_grains : 0) + shot[i - d + 1] - d * shot[i] + (d - 1) * shot[i + 1];
    res[u] = fix[i] - flow;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Exact D=3 algebra

/// The recurrence matrix for D=3.
inline RationalMat3 recurrence_matrix() {
  RationalMat3 a;
  a.m = {{{0, 1, 0}, {0, 0, 1}, {Rational(-1, 2), 0, Rational(3, 2)}}};
  return a;
}

/// Cubic c[0] + c[1] x + c[2] x^2 + c[3] x^3 with exact coefficients.
struct Cubic {
  std::array<Rational, 4> c{};

  Rational operator()(const Rational& x) const { return ((c[3] * x + c[2]) * x + c[1]) * x + c[0]; }
  friend bool operator==(const Cubic&, const Cubic&) = default;
};

/// det(x I - M).
inline Cubic characteristic_polynomial(const RationalMat3& m) {
  return Cubic{{-m.det(), m.minor_sum(), -m.trace(), 1}};
}

struct Eigenvalue {
  Rational value;
  int algebraic_multiplicity = 0;
  int geometric_multiplicity = 0;

  friend bool operator==(const Eigenvalue&, const Eigenvalue&) = default;
};

namespace detail {

inline std::vector<std::int64_t> divisors(std::int64_t n) {
  std::vector<std::int64_t> out;
  if (n < 0) n = -n;
  for (std::int64_t i = 1; i <= n; ++i)
    if (n % i == 0) out.push_back(i);
  return out;
}

// Coefficients of p(x) / (x - r) by synthetic division; p(r) must be 0.
inline std::vector<Rational> deflate(const std::vector<Rational>& p, const Rational& r) {
  std::vector<Rational> q(p.size() - 1);
  Rational carry = 0;
  for (std::size_t i = p.size(); i-- > 1;) {
    carry = p[i] + carry * r;
    q[i - 1] = carry;
  }
  return q;
}

inline Rational eval(const std::vector<Rational>& p, const Rational& x) {
  Rational acc = 0;
  for (std::size_t i = p.size(); i-- > 0;) acc = acc * x + p[i];
  return acc;
}

}  // namespace detail

/// Rational eigenvalues of m with multiplicities, found by the rational root
/// test on the characteristic polynomial. Irrational roots are not reported.
inline std::vector<Eigenvalue> rational_eigenvalues(const RationalMat3& m) {
  Cubic cp = characteristic_polynomial(m);
  // Clear denominators.
  std::int64_t lcm = 1;
  for (const Rational& r : cp.c) lcm = std::lcm(lcm, r.den());
  std::vector<Rational> poly(cp.c.begin(), cp.c.end());
  for (Rational& r : poly) r *= Rational(lcm);

  std::vector<Eigenvalue> out;
  std::int64_t lead = poly.back().num();
  std::int64_t constant = poly.front().num();
  if (constant == 0) {
    int mult = 0;
    while (poly.size() > 1 && poly.front() == Rational(0)) {
      poly = detail::deflate(poly, 0);
      ++mult;
    }
    out.push_back({0, mult, 3 - (m).rank()});
    constant = poly.front().num();
  }
  for (std::int64_t p : detail::divisors(constant))
    for (std::int64_t q : detail::divisors(lead))
      for (std::int64_t sign : {1, -1}) {
        Rational cand(sign * p, q);
        bool seen = false;
        for (const auto& e : out) seen = seen || e.value == cand;
        if (seen) continue;
        int mult = 0;
        while (poly.size() > 1 && detail::eval(poly, cand) == Rational(0)) {
          poly = detail::deflate(poly, cand);
          ++mult;
        }
        if (mult > 0)
          out.push_back({cand, mult, 3 - (m - cand * RationalMat3::identity()).rank()});
      }
  std::sort(out.begin(), out.end(), [](const Eigenvalue& a, const Eigenvalue& b) { return a.value < b.value; });
  return out;
}

struct JordanData {
  RationalMat3 a;
  Cubic char_poly;
  std::vector<Eigenvalue> eigenvalues;
  // Jordan basis: A e1 = e1, A e2 = e1 + e2, A e3 = -1/2 e3.
  RationalVec3 e1, e2, e3;
  RationalMat3 basis;          // columns e1, e2, e3
  RationalMat3 basis_inverse;
  RationalMat3 jordan_form;    // basis_inverse * A * basis
};

inline JordanData jordan_data() {
  JordanData jd;
  jd.a = recurrence_matrix();
  jd.char_poly = characteristic_polynomial(jd.a);
  jd.eigenvalues = rational_eigenvalues(jd.a);
  jd.e1 = {{1, 1, 1}};
  jd.e2 = {{0, 1, 2}};
  jd.e3 = {{4, -2, 1}};
  jd.basis = RationalMat3::from_columns(jd.e1, jd.e2, jd.e3);
  jd.basis_inverse = jd.basis.inverse();
  jd.jordan_form = jd.basis_inverse * jd.a * jd.basis;
  return jd;
}

/// Coefficient c with p(x) = c e3, p projecting along span(e1, e2).
inline Rational project_e3(const RationalVec3& x, const JordanData& jd) {
  return (jd.basis_inverse * x)[2];
}

/// Fixed point of w -> w/4 + p(b) on the e3 line: v = -2/27 e3.
inline RationalVec3 projection_offset(const JordanData& jd) { return Rational(-2, 27) * jd.e3; }

/// u_0..u_upto, with the conventions a_{-2} = N and a_{-1} = 0.
inline std::vector<RationalVec3> build_u_vectors(const ShotVector& shot, Value n_grains, std::size_t upto,
                                                 Parameters params = Parameters{3}) {
  if (params.d != 3) throw std::invalid_argument("u-vector recurrence is defined for D=3 only");
  auto a = [&](Column i) -> Value {
    if (i == -2) return n_grains;
    if (i == -1) return 0;
    return shot[i];
  };
  std::vector<RationalVec3> us;
  us.reserve(upto + 1);
  for (std::size_t u = 0; u <= upto; ++u) {
    auto i = static_cast<Column>(u);
    us.push_back({{a(i - 2), a(i - 1), a(i)}});
  }
  return us;
}

struct CheckResult {
  bool ok = true;
  std::string detail;
  explicit operator bool() const noexcept { return ok; }
};

/// Exact check of u_{i+1} = A u_i + v_i and u_{i+2} = A^2 u_i + A v_i + v_{i+1}.
inline CheckResult verify_recurrence(const std::vector<RationalVec3>& us, const Configuration& fix) {
  if (fix.d() != 3) throw std::invalid_argument("u-vector recurrence is defined for D=3 only");
  const RationalMat3 a = recurrence_matrix();
  const RationalMat3 a2 = a * a;
  auto v = [&](std::size_t i) { return RationalVec3{{0, 0, Rational(fix[static_cast<Column>(i)], 2)}}; };
  for (std::size_t i = 0; i + 1 < us.size(); ++i) {
    if (us[i + 1] != a * us[i] + v(i)) {
      std::ostringstream os;
      os << "u_" << i + 1 << " = " << us[i + 1] << " but A u_" << i << " + v_" << i << " = "
         << a * us[i] + v(i);
      return {false, os.str()};
    }
    if (i + 2 < us.size() && us[i + 2] != a2 * us[i] + a * v(i) + v(i + 1)) {
      std::ostringstream os;
      os << "two-step recurrence fails at u_" << i + 2;
      return {false, os.str()};
    }
  }
  return {};
}

/// Largest j with sigma = (2,0)^j ... as a prefix.
inline Value prefix_20_length(const Configuration& fix) {
  if (fix.d() != 3) throw std::invalid_argument("(2,0)^j prefixes are defined for D=3 only");
  Value j = 0;
  while (fix[2 * j] == 2 && fix[2 * j + 1] == 0) ++j;
  return j;
}

struct ProjectionLaw {
  Value n_grains = 0;
  Value a0 = 0;
  Value j = 0;
  std::vector<Rational> x;   // x[i] = coefficient of p(u_{2i} - v), i = 0..j
  Rational closed_form;      // (N + a_0 + 2/3) / 9
  bool double_step_ok = true;  // u_{2(i+1)} = A^2 u_{2i} + (0, 1, 3/2)
  bool contraction_ok = true;  // x[i+1] = x[i] / 4
  bool closed_form_ok = true;  // x[0] = closed_form
  bool scaling_ok = true;      // x[0] = 4^j x[j]
  bool positive_ok = true;     // x[j] > 0

  Rational x_j() const { return x.back(); }
  bool ok() const noexcept {
    return double_step_ok && contraction_ok && closed_form_ok && scaling_ok && positive_ok;
  }
};

/// Evaluates the projection law on pi(N) = fix with shot vector `shot`.
/// Throws std::invalid_argument when fix lacks a (2,0)^j prefix.
inline ProjectionLaw verify_projection_law(const Configuration& fix, const ShotVector& shot, Value j) {
  if (j < 0) throw std::invalid_argument("j must be non-negative");
  if (prefix_20_length(fix) < j)
    throw std::invalid_argument("fixed point does not start with (2,0)^" + std::to_string(j));
  const JordanData jd = jordan_data();
  const RationalVec3 v = projection_offset(jd);
  const RationalMat3 a2 = jd.a * jd.a;
  const RationalVec3 b{{0, 1, Rational(3, 2)}};

  ProjectionLaw law;
  law.n_grains = shot.n_grains;
  law.a0 = shot[0];
  law.j = j;
  auto us = build_u_vectors(shot, shot.n_grains, static_cast<std::size_t>(2 * j));
  for (Value i = 0; i <= j; ++i) law.x.push_back(project_e3(us[static_cast<std::size_t>(2 * i)] - v, jd));
  for (Value i = 0; i < j; ++i) {
    auto u = static_cast<std::size_t>(2 * i);
    law.double_step_ok = law.double_step_ok && us[u + 2] == a2 * us[u] + b;
    law.contraction_ok = law.contraction_ok &&
                         law.x[static_cast<std::size_t>(i + 1)] == law.x[static_cast<std::size_t>(i)] * Rational(1, 4);
  }
  law.closed_form = (Rational(law.n_grains) + Rational(law.a0) + Rational(2, 3)) * Rational(1, 9);
  law.closed_form_ok = law.x.front() == law.closed_form;
  Rational pow4 = 1;
  for (Value i = 0; i < j; ++i) pow4 *= Rational(4);
  law.scaling_ok = law.x.front() == pow4 * law.x.back();
  law.positive_ok = law.x.back() > Rational(0);
  return law;
}

inline ProjectionLaw verify_projection_law(const RunTrace& trace, Value j) {
  if (trace.params.d != 3) throw std::invalid_argument("projection law is defined for D=3 only");
  return verify_projection_law(trace.fixed_point(trace.n_grains()), trace.shot, j);
}

/// First N (1-based j index) whose fixed point starts with (2,0)^j, for j = 1..j_max,
/// from a single sweep of the process up to `cap` grains.
inline std::vector<std::optional<Value>> prefix_onsets(Value j_max, Value cap) {
  std::vector<std::optional<Value>> first(static_cast<std::size_t>(std::max<Value>(j_max, 0)));
  Process proc(Parameters{3});
  Value found = 0;
  for (Value k = 1; k <= cap && found < j_max; ++k) {
    proc.step();
    Value len = std::min(prefix_20_length(proc.fixed_point()), j_max);
    for (Value j = 1; j <= len; ++j) {
      auto& slot = first[static_cast<std::size_t>(j - 1)];
      if (!slot) {
        slot = k;
        ++found;
      }
    }
  }
  return first;
}

inline std::optional<Value> min_grains_for_prefix(Value j, Value cap) {
  if (j < 1) throw std::invalid_argument("j must be >= 1");
  return prefix_onsets(j, cap).back();
}

/// For an avalanche firing 2j but not 2j-1 (D=3), the largest such j; the
/// pre-avalanche fixed point must then start with (2,0)^{j-2}.
struct PrefixForcing {
  std::optional<Value> j;
  Value observed_prefix = 0;
  bool ok = true;
};

inline PrefixForcing check_prefix_forcing(const Avalanche& av, const Configuration& prev_fix) {
  PrefixForcing out;
  out.observed_prefix = prefix_20_length(prev_fix);
  auto fired = av.fired_set();
  auto has = [&](Column c) { return std::binary_search(fired.begin(), fired.end(), c); };
  for (Column c : fired)
    if (c >= 2 && c % 2 == 0 && !has(c - 1)) out.j = c / 2;
  if (out.j) out.ok = out.observed_prefix >= *out.j - 2;
  return out;
}

// ---------------------------------------------------------------------------
// Empirical growth laws

/// Column from which avalanche k is pseudo-local: its interval base when it
/// has one, otherwise its largest fired column (nothing fires beyond it).
inline Column onset_column(const Avalanche& av) {
  if (av.interval_l) return *av.interval_l;
  return av.max_fired().value_or(0);
}

/// Lower bound on the last nonempty column of a stable pile with N grains:
/// N <= (D-1)(e+1)(e+2)/2 gives e >= sqrt(2N/(D-1)) - 2.
inline double extent_lower_bound(Value n_grains, Value d) {
  return std::sqrt(2.0 * static_cast<double>(n_grains) / static_cast<double>(d - 1)) - 2.0;
}

struct GrowthSample {
  Value n = 0;
  Column extent = 0;    // e(N)
  Column onset_max = 0; // L_max(N)
  double extent_bound = 0;
};

struct GrowthReport {
  Value n_grains = 0;
  Value j_max = 0;
  std::vector<std::optional<Value>> n_min;     // index j-1
  std::vector<std::optional<double>> ratios;   // n_min[j] / n_min[j-1], index j-2 for j >= 2
  double growth_rate = 0;                      // exp of the slope of log N_min(j) against j
  std::vector<std::pair<Value, Column>> onset_steps;  // (N, L_max(N)) where L_max increases
  std::vector<GrowthSample> samples;           // powers of two and the final N
  Value fit_limit = 0;
  double c1 = 0, c2 = 0;                       // L_max(N) <= c1 log4(N) + c2, fitted on N <= fit_limit
  std::vector<std::string> violations;

  Column onset_max_at(Value n) const {
    Column best = 0;
    for (auto [at, l] : onset_steps)
      if (at <= n) best = l;
    return best;
  }
  bool ok() const noexcept { return violations.empty(); }
};

/// Streams the process, recording everything a growth report needs.
class GrowthTracker {
 public:
  GrowthTracker(Value j_max, Value fit_limit) : j_max_(j_max), fit_limit_(fit_limit) {
    n_min_.resize(static_cast<std::size_t>(std::max<Value>(j_max, 0)));
  }

  void observe(const Avalanche& av, const Configuration& fix) {
    const Value n = av.k;
    const Value d = fix.d();
    n_ = n;
    if (d == 3) {
      Value len = std::min(prefix_20_length(fix), j_max_);
      for (Value j = 1; j <= len; ++j)
        if (!n_min_[static_cast<std::size_t>(j - 1)]) n_min_[static_cast<std::size_t>(j - 1)] = n;
    }
    Column l = onset_column(av);
    if (onset_steps_.empty() || l > onset_steps_.back().second) onset_steps_.emplace_back(n, l);

    Column extent = fix.last_nonzero();
    double bound = extent_lower_bound(n, d);
    if (static_cast<double>(extent) < bound) {
      std::ostringstream os;
      os << "e(" << n << ") = " << extent << " below bound " << bound;
      violations_.push_back(os.str());
    }
    if ((n & (n - 1)) == 0) samples_.push_back({n, extent, onset_max(), bound});
    last_ = {n, extent, onset_max(), bound};
  }

  Column onset_max() const { return onset_steps_.empty() ? 0 : onset_steps_.back().second; }

  /// Fills N_min entries this run was too short to reach, e.g. from prefix_onsets.
  void supply_n_min(const std::vector<std::optional<Value>>& sweep) {
    for (std::size_t j = 0; j < n_min_.size() && j < sweep.size(); ++j)
      if (!n_min_[j]) n_min_[j] = sweep[j];
  }

  GrowthReport finish() const {
    GrowthReport rep;
    rep.n_grains = n_;
    rep.j_max = j_max_;
    rep.n_min = n_min_;
    rep.onset_steps = onset_steps_;
    rep.samples = samples_;
    if (n_ > 0 && (n_ & (n_ - 1)) != 0) rep.samples.push_back(last_);
    rep.violations = violations_;
    rep.fit_limit = fit_limit_;

    for (Value j = 2; j <= j_max_; ++j) {
      const auto& prev = n_min_[static_cast<std::size_t>(j - 2)];
      const auto& cur = n_min_[static_cast<std::size_t>(j - 1)];
      if (prev && cur) {
        double r = static_cast<double>(*cur) / static_cast<double>(*prev);
        rep.ratios.push_back(r);
        if (*cur <= *prev) rep.violations.push_back("N_min not strictly increasing at j=" + std::to_string(j));
        if (j >= 3 && (r < 3.5 || r > 4.5))
          rep.violations.push_back("N_min ratio at j=" + std::to_string(j) + " outside [3.5, 4.5]");
      } else {
        rep.ratios.push_back(std::nullopt);
      }
    }
    fit_growth_rate(rep);
    fit_onset_bound(rep);
    return rep;
  }

 private:
  void fit_growth_rate(GrowthReport& rep) const {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (std::size_t i = 0; i < n_min_.size(); ++i) {
      if (!n_min_[i]) continue;
      double x = static_cast<double>(i + 1), y = std::log(static_cast<double>(*n_min_[i]));
      sx += x, sy += y, sxx += x * x, sxy += x * y, cnt += 1;
    }
    double denom = cnt * sxx - sx * sx;
    if (cnt >= 2 && denom != 0) rep.growth_rate = std::exp((cnt * sxy - sx * sy) / denom);
  }

  // Least-squares slope of L_max against log4(N) over 2 <= N <= fit_limit,
  // intercept raised so the bound is tight on that range, then checked on
  // every N of the run.
  void fit_onset_bound(GrowthReport& rep) const {
    Value limit = std::min(fit_limit_, n_);
    if (limit < 2 || onset_steps_.empty()) return;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double cnt = 0;
    std::size_t step = 0;
    Column lmax = 0;
    for (Value n = 2; n <= limit; ++n) {
      while (step < onset_steps_.size() && onset_steps_[step].first <= n) lmax = onset_steps_[step++].second;
      double x = std::log(static_cast<double>(n)) / std::log(4.0);
      double y = static_cast<double>(lmax);
      sx += x, sy += y, sxx += x * x, sxy += x * y, cnt += 1;
    }
    double denom = cnt * sxx - sx * sx;
    rep.c1 = denom != 0 ? (cnt * sxy - sx * sy) / denom : 0;
    rep.c2 = -1e300;
    step = 0;
    lmax = 0;
    for (Value n = 2; n <= limit; ++n) {
      while (step < onset_steps_.size() && onset_steps_[step].first <= n) lmax = onset_steps_[step++].second;
      rep.c2 = std::max(rep.c2, static_cast<double>(lmax) - rep.c1 * std::log(static_cast<double>(n)) / std::log(4.0));
    }
    // L_max is a step function and the bound increases, so the first N of
    // each step is where the bound is tightest.
    for (auto [n, l] : onset_steps_) {
      if (n < 2) continue;
      double bound = rep.c1 * std::log(static_cast<double>(n)) / std::log(4.0) + rep.c2;
      if (static_cast<double>(l) > bound + 1e-9) {
        std::ostringstream os;
        os << "L_max(" << n << ") = " << l << " exceeds fitted bound " << bound;
        rep.violations.push_back(os.str());
      }
    }
  }

  Value j_max_;
  Value fit_limit_;
  Value n_ = 0;
  std::vector<std::optional<Value>> n_min_;
  std::vector<std::pair<Value, Column>> onset_steps_;
  std::vector<GrowthSample> samples_;
  GrowthSample last_{};
  std::vector<std::string> violations_;
};

inline GrowthReport growth_report(const RunTrace& trace, Value j_max, Value fit_limit = 1000) {
  GrowthTracker tracker(j_max, fit_limit);
  for (const auto& rec : trace.records) tracker.observe(rec.avalanche, rec.pi_k);
  return tracker.finish();
}

/// Same report without retaining the trace; suitable for long sweeps.
inline GrowthReport growth_report(Value n_grains, Parameters params, Value j_max, Value fit_limit = 1000) {
  GrowthTracker tracker(j_max, fit_limit);
  Process proc(params);
  for (Value k = 1; k <= n_grains; ++k) {
    Avalanche av = proc.step();
    tracker.observe(av, proc.fixed_point());
  }
  return tracker.finish();
}

}  // namespace kspm
