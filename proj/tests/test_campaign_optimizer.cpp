#include <gtest/gtest.h>

#include <sstream>

#include "simcamp/optimizer.hpp"
#include "simcamp/oracles.hpp"
#include "simcamp/sim_engine.hpp"
#include "simcamp/slicer.hpp"
#include "test_util.hpp"

using namespace simcamp;
using simcamp::testing::letters;
using simcamp::testing::word;
using simcamp::testing::words;

namespace {

std::vector<std::string> listing(const SimulationCampaign& c) {
  std::vector<std::string> out;
  for (const auto& cmd : c.commands) out.push_back(format_command(c.alphabet, cmd));
  return out;
}

SimulationCampaign optimize(const std::vector<InputTrace>& ordered, std::size_t sigma) {
  return optimize_unsorted(ordered, sigma, letters(), TimeQuantum(1.0));
}

NodeId node_for(const BranchingTree& bt, std::string_view w, std::size_t depth) {
  for (NodeId id : bt.path(word(w))) {
    if (bt.node(id).depth == depth) return id;
  }
  throw Error("no node");
}

}  // namespace

TEST(OptimizeSlice, SharedPrefixWithRoom) {
  const auto c = optimize(words({"aab", "aac"}), 2);
  EXPECT_EQ(listing(c), (std::vector<std::string>{"STORE 0", "RUN a 2", "STORE 1", "RUN b 1", "OUT", "LOAD 1",
                                                  "FREE 1", "RUN c 1", "OUT"}));
  EXPECT_EQ(c.length_quanta(), 4u);
  EXPECT_EQ(c.required_memory(), 2u);
}

TEST(OptimizeSlice, OneCheckpointIsNaive) {
  const auto c = optimize(words({"aab", "aac"}), 1);
  EXPECT_EQ(listing(c), (std::vector<std::string>{"STORE 0", "RUN a 2", "RUN b 1", "OUT", "LOAD 0", "RUN a 2",
                                                  "RUN c 1", "OUT"}));
  EXPECT_EQ(c.length_quanta(), 6u);
  EXPECT_EQ(c.required_memory(), 1u);
  EXPECT_EQ(c.length_quanta(), oracle::naive_length(words({"aab", "aac"})));
}

TEST(OptimizeSlice, Singleton) {
  const auto c = optimize(words({"aab"}), 5);
  EXPECT_EQ(listing(c), (std::vector<std::string>{"STORE 0", "RUN a 2", "RUN b 1", "OUT"}));
  EXPECT_EQ(c.length_time(), 3.0);
}

TEST(OptimizeSlice, RunSplitsAtStoredNode) {
  const auto c = optimize(words({"aaa", "aab"}), 2);
  EXPECT_EQ(listing(c), (std::vector<std::string>{"STORE 0", "RUN a 2", "STORE 1", "RUN a 1", "OUT", "LOAD 1",
                                                  "FREE 1", "RUN b 1", "OUT"}));
}

TEST(OptimizeSlice, QuantumScalesLength) {
  const auto c = optimize_unsorted(words({"aab", "aac"}), 2, letters(), TimeQuantum(0.5));
  EXPECT_DOUBLE_EQ(c.length_time(), 2.0);
}

TEST(OptimizeSlice, RejectsZeroSigmaAndMismatchedTree) {
  EXPECT_THROW(optimize(words({"ab"}), 0), Error);
  const auto bt = build_bt(words({"aab", "aac"}));
  EXPECT_THROW(optimize_slice(words({"aab", "aac", "aad"}), bt, 3, letters(), TimeQuantum()), Error);
}

TEST(OptimizeSlice, Deterministic) {
  Rng rng(4);
  const auto slice = simcamp::testing::random_slice(rng, 3, 3, 10, 300);
  std::ostringstream a, b;
  write_campaign(optimize(slice, 7), a);
  write_campaign(optimize(slice, 7), b);
  EXPECT_EQ(a.str(), b.str());
}

class WorthStoring : public ::testing::Test {
 protected:
  // Tree nodes: root (shared), aa (dd 2), aaaaaaa (dd 5), bbb (dd 3), ccc (dd 3).
  WorthStoring() : bt(build_sorted(words({"aaaaaaab", "aaaaaaac", "aab", "bbba", "bbbb", "ccca", "cccb"}))) {
    aa = node_for(bt, "aab", 2);
    a7 = node_for(bt, "aaaaaaab", 7);
    bbb = node_for(bt, "bbba", 3);
    ccc = node_for(bt, "ccca", 3);
  }
  static BranchingTree build_sorted(std::vector<InputTrace> v) {
    std::sort(v.begin(), v.end());
    return build_bt(v);
  }
  BranchingTree bt;
  NodeId aa = 0, a7 = 0, bbb = 0, ccc = 0;
};

TEST_F(WorthStoring, DepthDifferences) {
  EXPECT_EQ(bt.depth_difference(aa), 2u);
  EXPECT_EQ(bt.depth_difference(a7), 5u);
  EXPECT_EQ(bt.depth_difference(bbb), 3u);
  EXPECT_EQ(bt.depth_difference(ccc), 3u);
}

TEST_F(WorthStoring, RoomLeftStores) {
  StoredIndex index;
  EXPECT_EQ(is_worth_storing(bbb, bt, index, 2).action, StoreAction::Store);
  index.mark(bbb, 3);
  EXPECT_EQ(is_worth_storing(bbb, bt, index, 5).action, StoreAction::Skip);  // already stored
  EXPECT_EQ(is_worth_storing(kRootId, bt, index, 5).action, StoreAction::Skip);
}

TEST_F(WorthStoring, FullMemoryEvictsStrictlySmallerDepthDifference) {
  StoredIndex index;
  index.mark(aa, 2);
  index.mark(a7, 5);
  const auto d = is_worth_storing(bbb, bt, index, 3);
  EXPECT_EQ(d.action, StoreAction::StoreEvicting);
  EXPECT_EQ(d.victim, aa);
}

TEST_F(WorthStoring, FullMemoryTieSkips) {
  StoredIndex index;
  index.mark(bbb, 3);
  index.mark(a7, 5);
  EXPECT_EQ(is_worth_storing(ccc, bt, index, 3).action, StoreAction::Skip);
}

TEST_F(WorthStoring, EqualVictimsLeastRecentlyStored) {
  StoredIndex index;
  index.mark(ccc, 3);
  index.mark(bbb, 3);
  EXPECT_EQ(index.victim()->first, ccc);
  index.unmark(ccc);
  index.mark(ccc, 3);
  EXPECT_EQ(index.victim()->first, bbb);
}

TEST_F(WorthStoring, RootIsNeverEvicted) {
  StoredIndex index;
  EXPECT_FALSE(index.victim().has_value());
  EXPECT_EQ(is_worth_storing(bbb, bt, index, 1).action, StoreAction::Skip);
  EXPECT_THROW(index.unmark(kRootId), Error);
}

TEST_F(WorthStoring, NonTreeNodeSkipped) {
  StoredIndex index;
  const auto non_lsp = build_bt(words({"aab", "aac"}));
  EXPECT_EQ(is_worth_storing(kRootId, non_lsp, index, 5).action, StoreAction::Skip);
  EXPECT_EQ(is_worth_storing(99, non_lsp, index, 5).action, StoreAction::Skip);
}

TEST(SimCmds, FirstTraceHasNoLoad) {
  auto bt = build_bt(words({"aab", "aac"}));
  StoredIndex index;
  const auto cmds = sim_cmds(word("aab"), 0, bt, index, 4);
  ASSERT_FALSE(cmds.empty());
  EXPECT_NE(cmds.front().kind, CommandKind::Load);
  const auto second = sim_cmds(word("aac"), 1, bt, index, 4);
  EXPECT_EQ(second.front(), Command::load(1));
  EXPECT_EQ(second[1], Command::free(1));
}

// Properties on random slices in random verification order.
TEST(OptimizeSlice, RandomSliceProperties) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + rng.below(3);
    auto slice = simcamp::testing::random_slice(rng, k, 1 + rng.below(4), 4 + rng.below(10), 1 + rng.below(300));
    slice = order_slice(slice, OrderMode::Random, rng.next());
    std::vector<InputTrace> sorted = slice;
    std::sort(sorted.begin(), sorted.end());
    const auto bt = build_bt(sorted);
    const auto edges = oracle::edge_count(slice);
    const auto naive = oracle::naive_length(slice);
    const auto suv = reference_suv(trial, k);

    const auto full = optimize_slice(slice, bt, bt.materialized_size(), letters(k), TimeQuantum());
    EXPECT_EQ(full.length_quanta(), edges);
    const auto unlimited = optimize_slice(slice, bt, kUnlimitedMemory, letters(k), TimeQuantum());
    EXPECT_EQ(unlimited.length_quanta(), edges);
    const auto star = unlimited.required_memory();
    EXPECT_LE(star, bt.materialized_size());
    EXPECT_EQ(optimize_slice(slice, bt, star, letters(k), TimeQuantum()).length_quanta(), edges);

    for (std::size_t sigma : {std::size_t{1}, std::size_t{2}, std::size_t{3}, bt.materialized_size() / 2 + 1,
                              bt.materialized_size()}) {
      const auto c = optimize_slice(slice, bt, sigma, letters(k), TimeQuantum());
      const auto r = execute(c, suv);
      ASSERT_TRUE(r.executable) << r.error;
      EXPECT_LE(r.stats.peak_memory, sigma);
      EXPECT_LE(c.length_quanta(), naive);
      EXPECT_GE(c.length_quanta(), edges);
      ASSERT_EQ(r.outputs.size(), slice.size());
      for (std::size_t i = 0; i < slice.size(); ++i) {
        ASSERT_EQ(r.outputs[i].trace, std::vector<Symbol>(slice[i].begin(), slice[i].end()));
      }
      if (sigma == 1) {
        EXPECT_EQ(c.length_quanta(), naive);
      }
    }
  }
}

TEST(CampaignFile, RoundTrip) {
  const auto c = optimize_unsorted(words({"aab", "aac", "b"}), 3, letters(3), TimeQuantum(0.25), 4);
  std::stringstream s;
  write_campaign(c, s);
  EXPECT_EQ(s.str().substr(0, s.str().find('\n')), "#q=0.25;slice=4");
  const auto back = read_campaign(s);
  EXPECT_EQ(back.commands, c.commands);
  EXPECT_EQ(back.slice, 4u);
  EXPECT_EQ(back.alphabet, c.alphabet);
  EXPECT_DOUBLE_EQ(back.quantum.value(), 0.25);
}

TEST(CampaignFile, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_campaign(in);
  };
  EXPECT_THROW(parse(""), Error);
  EXPECT_THROW(parse("#slice=1\n"), Error);
  EXPECT_THROW(parse("#q=1;slice=0\n#alphabet=a\nRUN a 0\n"), Error);
  EXPECT_THROW(parse("#q=1;slice=0\n#alphabet=a\nRUN z 1\n"), Error);
  EXPECT_THROW(parse("#q=1;slice=0\n#alphabet=a\nJUMP 3\n"), Error);
  EXPECT_THROW(parse("#q=1;slice=0\n#alphabet=a\nLOAD x\n"), Error);
  EXPECT_THROW(parse("#q=1;slice=0\nOUT\n"), Error);
  const Alphabet ab({"a", "b"});
  std::istringstream in("#q=1;slice=0\nRUN b 2\nOUT\n");
  EXPECT_EQ(read_campaign(in, &ab).commands.size(), 2u);
}

TEST(Campaign, CountsAndMemory) {
  SimulationCampaign c{letters(2), TimeQuantum(2.0), 0,
                       {Command::store(0), Command::run(0, 3), Command::store(5), Command::store(6), Command::free(5),
                        Command::load(6), Command::run(1, 1), Command::out()}};
  EXPECT_EQ(c.length_quanta(), 4u);
  EXPECT_DOUBLE_EQ(c.length_time(), 8.0);
  EXPECT_EQ(c.required_memory(), 3u);
  const auto n = c.counts();
  EXPECT_EQ(n.loads, 1u);
  EXPECT_EQ(n.stores, 3u);
  EXPECT_EQ(n.frees, 1u);
  EXPECT_EQ(n.runs, 2u);
  EXPECT_EQ(n.outs, 1u);
  EXPECT_THROW(Command::run(0, 0), Error);
}
