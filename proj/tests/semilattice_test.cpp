#include "lagree/semilattice.hpp"

#include <vector>

#include "gtest/gtest.h"

namespace lagree {
namespace {

TEST(LatticeValue, JoinIsUnion) {
  EXPECT_EQ(join({"a"}, {"b"}), LatticeValue({"a", "b"}));
  EXPECT_EQ(join({"a", "b"}, {"b"}), LatticeValue({"a", "b"}));
  EXPECT_EQ(join({}, {"c"}), LatticeValue({"c"}));
}

TEST(LatticeValue, Leq) {
  EXPECT_TRUE(leq({"a"}, {"a", "b"}));
  EXPECT_FALSE(leq({"a", "b"}, {"a"}));
  EXPECT_FALSE(leq({"a"}, {"b"}));
}

TEST(LatticeValue, Comparable) {
  EXPECT_TRUE(comparable({"a"}, {"a"}));
  EXPECT_TRUE(comparable({"a"}, {"a", "b"}));
  EXPECT_FALSE(comparable({"a"}, {"b"}));
}

TEST(LatticeValue, JoinAll) {
  EXPECT_EQ(join_all(std::vector<LatticeValue>{{"a"}, {"b"}, {"c"}}),
            LatticeValue({"a", "b", "c"}));
  EXPECT_EQ(join_all(std::vector<LatticeValue>{{"a", "b"}}),
            LatticeValue({"a", "b"}));
  EXPECT_EQ(join_all(std::vector<LatticeValue>{{"a"}, {"a"}}), LatticeValue({"a"}));
  EXPECT_THROW(join_all(std::vector<LatticeValue>{}), std::invalid_argument);
}

TEST(LatticeValue, HeightIsCardinality) {
  EXPECT_EQ(height(LatticeValue{}), 0);
  EXPECT_EQ(height({"a", "b"}), 2);
  EXPECT_EQ(height({"a", "b", "c"}), 3);
}

TEST(LatticeValue, DuplicatesCollapse) {
  EXPECT_EQ(LatticeValue({"b", "a", "b"}), LatticeValue({"a", "b"}));
}

TEST(ClosureOracle, SingletonInputs) {
  // Closure of {a},{b},{c} holds all seven nonempty unions; the longest
  // chain {a} < {a,b} < {a,b,c} has two edges.
  EXPECT_EQ(closure_height_oracle(std::vector<LatticeValue>{{"a"}, {"b"}, {"c"}}), 2);
}

TEST(ClosureOracle, SingleInput) {
  EXPECT_EQ(closure_height_oracle(std::vector<LatticeValue>{{"a"}}), 0);
}

TEST(ClosureOracle, TwoChain) {
  EXPECT_EQ(closure_height_oracle(std::vector<LatticeValue>{{"a"}, {"a", "b"}}), 1);
}

TEST(ClosureOracle, CapIsEnforced) {
  std::vector<LatticeValue> inputs;
  for (int i = 0; i < 8; ++i) inputs.push_back({std::string(1, 'a' + i)});
  EXPECT_THROW(closure_height_oracle(inputs, 10), ClosureCapExceeded);
}

// Small exhaustive universe for the property checks.
std::vector<LatticeValue> all_subsets() {
  std::vector<Element> universe{"a", "b", "c", "d"};
  std::vector<LatticeValue> out;
  for (int mask = 0; mask < 16; ++mask) {
    std::vector<Element> elems;
    for (int i = 0; i < 4; ++i) {
      if (mask & (1 << i)) elems.push_back(universe[i]);
    }
    out.push_back(LatticeValue(std::move(elems)));
  }
  return out;
}

TEST(LatticeProperties, JoinLaws) {
  auto values = all_subsets();
  for (const auto& u : values) {
    EXPECT_EQ(join(u, u), u);
    for (const auto& v : values) {
      LatticeValue uv = join(u, v);
      EXPECT_EQ(uv, join(v, u));
      EXPECT_TRUE(leq(u, uv));
      EXPECT_TRUE(leq(v, uv));
      EXPECT_EQ(uv == v, leq(u, v));
      for (const auto& w : values) {
        EXPECT_EQ(join(join(u, v), w), join(u, join(v, w)));
      }
    }
  }
}

TEST(LatticeProperties, HeightStrictlyMonotone) {
  auto values = all_subsets();
  for (const auto& u : values) {
    for (const auto& v : values) {
      if (leq(u, v) && !(u == v)) EXPECT_LT(height(u), height(v));
    }
  }
}

// A value comparable with every member of V is comparable with the join of
// any subset of V; exhaustive over the 4-element universe.
TEST(LatticeProperties, ComparabilityClosedUnderJoins) {
  auto values = all_subsets();
  for (const auto& x : values) {
    std::vector<LatticeValue> comparable_with_x;
    for (const auto& v : values) {
      if (comparable(x, v)) comparable_with_x.push_back(v);
    }
    int m = static_cast<int>(comparable_with_x.size());
    for (int mask = 1; mask < (1 << m) && m <= 12; ++mask) {
      LatticeValue u;
      for (int i = 0; i < m; ++i) {
        if (mask & (1 << i)) u = join(u, comparable_with_x[i]);
      }
      EXPECT_TRUE(comparable(x, u));
    }
  }
}

TEST(LatticeProperties, OracleBelowCardinalityHeight) {
  std::vector<std::vector<LatticeValue>> families{
      {{"a"}, {"b"}},
      {{"a"}, {"a", "b"}, {"c"}},
      {{"a", "b"}, {"b", "c"}, {"c", "d"}},
      {{"a"}, {"b"}, {"c"}, {"d"}},
  };
  for (const auto& inputs : families) {
    EXPECT_LE(closure_height_oracle(inputs), height(join_all(inputs)));
  }
}

TEST(LatticeProperties, PairwiseIncomparableSingletons) {
  for (int n = 1; n <= 6; ++n) {
    std::vector<LatticeValue> inputs;
    for (int i = 0; i < n; ++i) inputs.push_back({std::string(1, 'a' + i)});
    EXPECT_EQ(height(join_all(inputs)), n);
    EXPECT_EQ(closure_height_oracle(inputs), n - 1);
  }
}

TEST(LatticeValue, JsonIsSortedTokenArray) {
  nlohmann::json j = LatticeValue({"b", "a"});
  EXPECT_EQ(j.dump(), "[\"a\",\"b\"]");
  EXPECT_EQ(j.get<LatticeValue>(), LatticeValue({"a", "b"}));
}

}  // namespace
}  // namespace lagree
