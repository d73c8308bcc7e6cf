#include <gtest/gtest.h>

#include <sstream>

#include "simcamp/scenario_gen.hpp"
#include "test_util.hpp"

using namespace simcamp;
using simcamp::testing::brute_force_words;
using simcamp::testing::no_consecutive_ones;

TEST(SgCount, NoConsecutiveOnes) {
  const auto spec = no_consecutive_ones(2);
  EXPECT_EQ(sg_count(spec), 3);
  // Fibonacci: words of length h without "11" number F(h+2).
  EXPECT_EQ(sg_count(no_consecutive_ones(8)), 55);
}

TEST(SgCount, NoMonitorsIsPower) {
  ConstraintSpec spec{Alphabet({"x", "y", "z"}), 2, {}};
  EXPECT_EQ(sg_count(spec), 9);
}

TEST(SgCount, EmptyLanguage) {
  auto spec = no_consecutive_ones(3);
  spec.monitors[0].accepting = {false, false, false};
  EXPECT_EQ(sg_count(spec), 0);
  GeneratorTable t(spec);
  EXPECT_THROW(t.get(0), Error);
}

TEST(SgCount, ExceedsSixtyFourBits) {
  ConstraintSpec spec{Alphabet({"0", "1", "2", "3"}), 40, {}};
  const BigCount expected = BigCount(1) << 80;
  EXPECT_EQ(sg_count(spec), expected);
  EXPECT_THROW(count_u64(GeneratorTable(spec)), Error);
  // The last word is all 3s.
  GeneratorTable t(spec);
  const auto last = t.get(expected - 1);
  for (Symbol u : last) EXPECT_EQ(u, 3);
}

TEST(SgGet, NoConsecutiveOnesExamples) {
  GeneratorTable t(no_consecutive_ones(2));
  EXPECT_EQ(t.get(std::uint64_t{0}), (InputTrace{0, 0}));
  EXPECT_EQ(t.get(std::uint64_t{1}), (InputTrace{0, 1}));
  EXPECT_EQ(t.get(std::uint64_t{2}), (InputTrace{1, 0}));
  EXPECT_THROW(t.get(std::uint64_t{3}), Error);
}

TEST(SgGet, MatchesBruteForceOnRandomSpecs) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t k = 2 + rng.below(2);
    ConstraintSpec spec{simcamp::testing::letters(k), 1 + rng.below(7), {}};
    const std::size_t monitors = rng.below(3);
    for (std::size_t m = 0; m < monitors; ++m) spec.monitors.push_back(simcamp::testing::random_dfa(rng, k, 1 + rng.below(4)));
    const auto expected = brute_force_words(spec);
    GeneratorTable table(spec);
    ASSERT_EQ(table.count(), expected.size());
    for (std::size_t j = 0; j < expected.size(); ++j) {
      const auto w = table.get(std::uint64_t{j});
      ASSERT_EQ(std::vector<Symbol>(w.begin(), w.end()), expected[j]) << "trial " << trial << " j " << j;
      ASSERT_TRUE(spec.accepts(w));
    }
  }
}

TEST(ConstraintSpecFile, ParseAndRoundTrip) {
  std::istringstream in(
      "alphabet=0,1\n"
      "horizon=4\n"
      "# forbid two consecutive ones\n"
      "states=3\nstart=0\naccept=0,1\n"
      "0 0 -> 0\n0 1 -> 1\n1 0 -> 0\n1 1 -> 2\n2 0 -> 2\n2 1 -> 2\n");
  const auto spec = parse_constraint_spec(in);
  EXPECT_EQ(spec.horizon, 4u);
  ASSERT_EQ(spec.monitors.size(), 1u);
  EXPECT_EQ(sg_count(spec), 8);
  std::stringstream out;
  write_constraint_spec(spec, out);
  const auto back = parse_constraint_spec(out);
  EXPECT_EQ(back.monitors[0].next, spec.monitors[0].next);
  EXPECT_EQ(back.monitors[0].accepting, spec.monitors[0].accepting);
}

TEST(ConstraintSpecFile, Errors) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return parse_constraint_spec(in);
  };
  EXPECT_THROW(parse("alphabet=a\n"), Error);                                          // no horizon
  EXPECT_THROW(parse("alphabet=a,b\nhorizon=2\nstates=1\nstart=0\naccept=0\n0 a -> 0\n"), Error);  // incomplete
  EXPECT_THROW(parse("alphabet=a\nhorizon=2\nstates=1\nstart=0\naccept=0\n0 c -> 0\n"), Error);    // unknown symbol
  EXPECT_THROW(parse("alphabet=a\nhorizon=0\n"), Error);
  EXPECT_THROW(parse("alphabet=a\nhorizon=1\nbogus=3\n"), Error);
}

TEST(SampleIndices, Examples) {
  const auto full = sample_indices(8, 1.0, 5);
  EXPECT_EQ(full, (std::vector<std::uint64_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  const auto quarter = sample_indices(8, 0.25, 5);
  EXPECT_EQ(quarter.size(), 2u);
  EXPECT_EQ(quarter, sample_indices(8, 0.25, 5));
  EXPECT_THROW(sample_indices(8, 0.0, 1), Error);
  EXPECT_THROW(sample_indices(8, 1.5, 1), Error);
  EXPECT_THROW(sample_indices(0, 0.5, 1), Error);
}

TEST(SampleIndices, SortedDistinctAndRoughlyUniform) {
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto w = sample_indices(20, 0.3, seed);
    ASSERT_EQ(w.size(), 6u);
    ASSERT_TRUE(std::is_sorted(w.begin(), w.end()));
    ASSERT_EQ(std::adjacent_find(w.begin(), w.end()), w.end());
    for (auto i : w) ++hits[i];
  }
  // Each index is expected 600 times; binomial sd about 20.5.
  for (int h : hits) EXPECT_NEAR(h, 600, 110);
}
