#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "kspm/core.hpp"
#include "oracle.hpp"

using namespace kspm;

namespace {

const Parameters D3{3};
const Parameters D4{4};

Configuration cfg(std::initializer_list<Value> v, Parameters p = D3) { return Configuration(v, p); }

}  // namespace

TEST(Parameters, RejectsSmallD) {
  EXPECT_THROW(Parameters(1), std::invalid_argument);
  EXPECT_THROW(Parameters(0), std::invalid_argument);
  EXPECT_NO_THROW(Parameters(2));
  EXPECT_EQ(Parameters().d, 3);
}

TEST(Configuration, RejectsNegativeEntries) {
  EXPECT_THROW(cfg({1, -1}), std::invalid_argument);
}

TEST(Configuration, ReadsZeroBeyondPrefix) {
  auto c = cfg({2, 0, 1});
  EXPECT_EQ(c[2], 1);
  EXPECT_EQ(c[3], 0);
  EXPECT_EQ(c[1000], 0);
  EXPECT_EQ(c[-1], 0);
}

TEST(Configuration, EqualityIgnoresTrailingZeros) {
  EXPECT_EQ(cfg({2, 0, 1}), cfg({2, 0, 1, 0, 0}));
  EXPECT_NE(cfg({2, 0, 1}), cfg({2, 0, 1, 1}));
  EXPECT_NE(cfg({2}, D3), cfg({2}, D4));
  EXPECT_EQ(cfg({}), cfg({0, 0}));
}

TEST(Configuration, TrimmedAndLastNonzero) {
  auto c = cfg({0, 3, 0, 0});
  EXPECT_EQ(c.last_nonzero(), 1);
  EXPECT_EQ(c.trimmed().size(), 2u);
  EXPECT_EQ(cfg({0, 0}).last_nonzero(), -1);
}

TEST(Configuration, Prints) {
  std::ostringstream os;
  os << cfg({2, 0, 1, 0}) << ' ' << cfg({});
  EXPECT_EQ(os.str(), "(2,0,1) (0)");
}

TEST(Fire, Fireability) {
  EXPECT_TRUE(is_fireable(cfg({3, 0}), 0));
  EXPECT_FALSE(is_fireable(cfg({2, 0}), 0));
  EXPECT_TRUE(is_fireable(cfg({1, 4, 0}), 1));
  EXPECT_FALSE(is_fireable(cfg({1, 4, 0}), 7));
}

TEST(Fire, RuleArithmetic) {
  EXPECT_EQ(fire(cfg({3, 0, 0}), 0), cfg({0, 0, 1}));
  EXPECT_EQ(fire(cfg({1, 4, 0, 0}), 1), cfg({3, 1, 0, 1}));
  EXPECT_EQ(fire(cfg({5, 0, 0, 0, 0}, D4), 0), cfg({1, 0, 0, 1}, D4));
  // Grows the prefix when the receiving column is beyond it.
  EXPECT_EQ(fire(cfg({0, 0, 3}), 2), cfg({0, 2, 0, 0, 1}));
}

TEST(Fire, RejectsUnfireableColumn) {
  EXPECT_THROW(fire(cfg({2, 0}), 0), contract_violation);
  EXPECT_THROW(fire(cfg({2, 0}), 5), contract_violation);
}

TEST(Fire, ConservesWeightedMass) {
  std::mt19937_64 rng(7);
  for (Value d = 2; d <= 6; ++d) {
    for (int t = 0; t < 200; ++t) {
      std::vector<Value> v(1 + rng() % 20);
      for (auto& x : v) x = static_cast<Value>(rng() % (3 * d + 1));
      Configuration c(v, Parameters(d));
      for (std::size_t i = 0; i < c.size(); ++i)
        if (is_fireable(c, static_cast<Column>(i))) {
          EXPECT_EQ(weighted_mass(fire(c, static_cast<Column>(i))), weighted_mass(c));
          oracle::Vec raw = v;
          oracle::fire(raw, i, d);
          EXPECT_EQ(fire(c, static_cast<Column>(i)), Configuration(raw, Parameters(d)));
        }
    }
  }
}

TEST(AddGrain, AddsToColumnZero) {
  EXPECT_EQ(add_grain(cfg({0})), cfg({1}));
  EXPECT_EQ(add_grain(cfg({2, 0, 1})), cfg({3, 0, 1}));
  EXPECT_EQ(add_grain(cfg({})), cfg({1}));
}

TEST(Heights, SuffixSums) {
  EXPECT_EQ(heights(cfg({2, 0, 1}), 3), (std::vector<Value>{3, 1, 1}));
  EXPECT_EQ(heights(cfg({0}), 2), (std::vector<Value>{0, 0}));
  EXPECT_EQ(heights(cfg({1, 0, 2}), 4), (std::vector<Value>{3, 2, 2, 0}));
}

TEST(Heights, RoundTrip) {
  auto c = cfg({2, 0, 1, 2, 0, 2});
  auto h = heights(c, c.size());
  EXPECT_EQ(from_heights(h, D3), c);
}

TEST(WeightedMass, Examples) {
  EXPECT_EQ(weighted_mass(cfg({2, 0, 1})), 5);
  EXPECT_EQ(weighted_mass(cfg({0})), 0);
  EXPECT_EQ(weighted_mass(fire(cfg({3, 0, 0}), 0)), 3);
}

TEST(IsStable, Examples) {
  EXPECT_TRUE(is_stable(cfg({2, 2, 2})));
  EXPECT_FALSE(is_stable(cfg({3, 0})));
  EXPECT_TRUE(is_stable(cfg({0})));
  EXPECT_FALSE(is_stable(cfg({0, 0, 0, 4}, D4)));
}
