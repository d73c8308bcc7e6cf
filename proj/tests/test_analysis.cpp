#include <gtest/gtest.h>

#include <sstream>

#include "simcamp/analysis.hpp"
#include "simcamp/optimizer.hpp"
#include "simcamp/oracles.hpp"
#include "test_util.hpp"

using namespace simcamp;
using simcamp::testing::letters;
using simcamp::testing::words;

namespace {

CampaignMetrics timed(double seconds, std::uint64_t n = 100, std::size_t d = 1) {
  CampaignMetrics m;
  m.est_seconds = seconds;
  m.traces = n;
  m.slices = d;
  return m;
}

CostModel run_only() {
  CostModel c;
  c.run_per_quantum = 1.0;
  return c;
}

}  // namespace

TEST(CompletionTime, MaxOverSlices) {
  const std::vector<CampaignMetrics> v{timed(10), timed(12), timed(9)};
  EXPECT_EQ(completion_time(v), 12.0);
  const std::vector<CampaignMetrics> one{timed(7)};
  EXPECT_EQ(completion_time(one), 7.0);
  const std::vector<CampaignMetrics> same{timed(3), timed(3)};
  EXPECT_EQ(completion_time(same), 3.0);
  EXPECT_THROW(completion_time(std::vector<CampaignMetrics>{}), Error);
}

TEST(Speedup, WorkedExample) {
  const auto slice = words({"aab", "aac"});
  const auto opt = optimize_unsorted(slice, 2, letters(3), TimeQuantum());
  const auto base = optimize_unsorted(slice, 1, letters(3), TimeQuantum());
  const std::vector<CampaignMetrics> a{measure(opt, 2, 1, 2, run_only())};
  const std::vector<CampaignMetrics> b{measure(base, 2, 1, 1, run_only())};
  EXPECT_DOUBLE_EQ(speedup(a, b), 1.5);
  EXPECT_DOUBLE_EQ(speedup(b, b), 1.0);
  EXPECT_NEAR(memory_efficiency(b, a), 4.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(memory_efficiency(a, a), 1.0);
  EXPECT_THROW(speedup(0.0, 1.0), Error);
}

TEST(Speedup, CompleteBinaryTreeClosedForm) {
  const double h = 16;
  const double naive = h * std::pow(2.0, h);
  const double opt = std::pow(2.0, h + 1) - 2;
  EXPECT_NEAR(speedup(opt, naive), 8.0001, 1e-4);
}

TEST(ParallelEfficiency, Formula) {
  EXPECT_DOUBLE_EQ(parallel_efficiency(10.0, 4, 40.0, 1), 1.0);
  EXPECT_DOUBLE_EQ(parallel_efficiency(20.0, 4, 40.0, 1), 0.5);
  EXPECT_DOUBLE_EQ(parallel_efficiency(5.0, 3, 5.0, 3), 1.0);
  const std::vector<CampaignMetrics> d4{timed(10, 100, 4), timed(8, 100, 4)};
  const std::vector<CampaignMetrics> d1{timed(40, 100, 1)};
  EXPECT_DOUBLE_EQ(parallel_efficiency(d4, d1), 1.0);
  const std::vector<CampaignMetrics> other_n{timed(40, 99, 1)};
  EXPECT_THROW(parallel_efficiency(d4, other_n), Error);
}

TEST(OmissionProbability, Examples) {
  EXPECT_DOUBLE_EQ(omission_probability(ProgressVector{{3, 4}}), 0.25);
  EXPECT_DOUBLE_EQ(omission_probability(ProgressVector{{10, 10}, {4, 4}}), 0.0);
  EXPECT_DOUBLE_EQ(omission_probability(ProgressVector{{5, 10}, {9, 10}}), 0.5);
  EXPECT_DOUBLE_EQ(omission_probability(ProgressVector{{0, 10}}), 1.0);
  EXPECT_THROW(omission_probability(ProgressVector{{0, 0}}), Error);
  EXPECT_THROW(omission_probability(ProgressVector{{5, 4}}), Error);
  EXPECT_THROW(omission_probability(ProgressVector{}), Error);
}

TEST(OmissionProbability, NonIncreasingInProgress) {
  ProgressVector p{{0, 7}, {0, 5}, {0, 9}};
  double last = omission_probability(p);
  Rng rng(2);
  for (int step = 0; step < 100; ++step) {
    auto& s = p[rng.below(p.size())];
    if (s.verified < s.size) ++s.verified;
    const double now = omission_probability(p);
    EXPECT_LE(now, last);
    last = now;
  }
}

TEST(InflationStudy, Properties) {
  const auto slice = words({"aaab", "aaac", "aaad", "bbba", "bbbb"});
  const auto opt = optimize_unsorted(slice, 3, letters(), TimeQuantum());
  const auto base = optimize_unsorted(slice, 1, letters(), TimeQuantum());
  const CostModel cost = parse_cost_model("load=0.5 store=0.5 free=0 out=0 run_per_q=1");
  const std::vector<CommandCounts> o{opt.counts()}, b{base.counts()};
  const std::vector<double> grid{1, 10, 50, 100};
  const auto rows = inflation_study(o, b, cost, grid);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_DOUBLE_EQ(rows[0].speedup, estimate_time(base, cost) / estimate_time(opt, cost));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].speedup, rows[i - 1].speedup);
  EXPECT_LT(rows[3].speedup, rows[1].speedup);
  EXPECT_LT(rows[1].speedup, rows[0].speedup);
  const std::vector<double> bad{0.5};
  EXPECT_THROW(inflation_study(o, b, cost, bad), Error);
}

TEST(InflationStudy, NoCheckpointCommandsIsFlat) {
  CommandCounts runs_only;
  runs_only.runs = 2;
  runs_only.run_quanta = 10;
  CommandCounts base = runs_only;
  base.run_quanta = 20;
  const std::vector<CommandCounts> o{runs_only}, b{base};
  const std::vector<double> grid{1, 10, 100};
  const auto rows = inflation_study(o, b, parse_cost_model("load=3 store=3 free=1 out=1 run_per_q=1"), grid);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.speedup, rows[0].speedup);
}

TEST(Report, CsvShapeAndMeans) {
  std::vector<ReportRow> rows(2);
  rows[0].traces = rows[1].traces = 10;
  rows[0].seed = "1";
  rows[1].seed = "2";
  rows[0].speedup = 2.0;
  rows[1].speedup = 4.0;
  const auto all = with_seed_means(rows);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[2].seed, "mean");
  EXPECT_DOUBLE_EQ(all[2].speedup, 3.0);
  std::ostringstream out;
  write_report_csv(all, out);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "N,D,sigma,seed,f,length_q,peak_mem,est_seconds,speedup,par_eff,mem_eff");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);

  std::ostringstream p;
  write_progress_csv(ProgressVector{{5, 10}, {10, 10}}, p);
  EXPECT_EQ(p.str(), "slice,j,n,op_bound\n0,5,10,0.5\n1,10,10,0\n");
}

// Speedup over the one-checkpoint campaign is at least 1 under Run-only costs.
TEST(Speedup, AtLeastOneOnRandomSlices) {
  Rng rng(91);
  for (int trial = 0; trial < 30; ++trial) {
    const auto slice = simcamp::testing::random_slice(rng, 3, 2, 10, 150);
    const auto base = optimize_unsorted(slice, 1, letters(3), TimeQuantum());
    for (std::size_t sigma : {2, 4, 16}) {
      const auto c = optimize_unsorted(slice, sigma, letters(3), TimeQuantum());
      EXPECT_GE(speedup(estimate_time(c, run_only()), estimate_time(base, run_only())), 1.0);
    }
  }
}
