#ifndef SIMCAMP_ANALYSIS_HPP
#define SIMCAMP_ANALYSIS_HPP

#include <algorithm>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "simcamp/campaign.hpp"
#include "simcamp/common.hpp"
#include "simcamp/sim_engine.hpp"

namespace simcamp {

/// Measurements of one slice campaign.
struct CampaignMetrics {
  std::size_t slice = 0;
  std::uint64_t traces = 0;   // N, whole corpus
  std::size_t slices = 1;     // D
  std::size_t sigma = 1;
  std::uint64_t length_quanta = 0;
  std::size_t peak_memory = 0;
  CommandCounts counts;
  double est_seconds = 0.0;
};

inline CampaignMetrics measure(const SimulationCampaign& c, std::uint64_t traces, std::size_t slices,
                               std::size_t sigma, const CostModel& cost) {
  CampaignMetrics m;
  m.slice = c.slice;
  m.traces = traces;
  m.slices = slices;
  m.sigma = sigma;
  m.counts = c.counts();
  m.length_quanta = m.counts.run_quanta;
  m.peak_memory = c.required_memory();
  m.est_seconds = estimate_time(m.counts, cost);
  return m;
}

/// Completion time of a parallel campaign: the slowest slice.
inline double completion_time(std::span<const CampaignMetrics> slices) {
  if (slices.empty()) throw Error("completion time of an empty campaign set");
  double t = 0.0;
  for (const auto& m : slices) t = std::max(t, m.est_seconds);
  return t;
}

inline std::uint64_t completion_length(std::span<const CampaignMetrics> slices) {
  if (slices.empty()) throw Error("completion length of an empty campaign set");
  std::uint64_t l = 0;
  for (const auto& m : slices) l = std::max(l, m.length_quanta);
  return l;
}

inline std::size_t peak_memory(std::span<const CampaignMetrics> slices) {
  std::size_t p = 0;
  for (const auto& m : slices) p = std::max(p, m.peak_memory);
  return p;
}

namespace detail {
inline double ratio(double num, double den, const char* what) {
  if (den == 0.0) throw Error(std::string(what) + ": zero denominator");
  return num / den;
}
inline void require_same_shape(std::span<const CampaignMetrics> a, std::span<const CampaignMetrics> b,
                               bool same_slices) {
  if (a.empty() || b.empty()) throw Error("empty campaign set");
  if (a.front().traces != b.front().traces) throw Error("campaign sets cover different trace counts");
  if (same_slices && a.front().slices != b.front().slices) throw Error("campaign sets use different slice counts");
}
}  // namespace detail

/// Speedup of a campaign over its one-checkpoint baseline: time(1) / time(sigma).
inline double speedup(double time_sigma, double time_baseline) {
  return detail::ratio(time_baseline, time_sigma, "speedup");
}

inline double speedup(std::span<const CampaignMetrics> at_sigma, std::span<const CampaignMetrics> at_one) {
  detail::require_same_shape(at_sigma, at_one, true);
  return speedup(completion_time(at_sigma), completion_time(at_one));
}

/// (time(D_base) * D_base) / (time(D) * D).
inline double parallel_efficiency(double time_d, std::size_t d, double time_base, std::size_t d_base) {
  return detail::ratio(time_base * static_cast<double>(d_base), time_d * static_cast<double>(d),
                       "parallel efficiency");
}

inline double parallel_efficiency(std::span<const CampaignMetrics> at_d, std::span<const CampaignMetrics> at_base) {
  detail::require_same_shape(at_d, at_base, false);
  return parallel_efficiency(completion_time(at_d), at_d.front().slices, completion_time(at_base),
                             at_base.front().slices);
}

/// time(sigma*) / time(sigma).
inline double memory_efficiency(double time_sigma, double time_star) {
  return detail::ratio(time_star, time_sigma, "memory efficiency");
}

inline double memory_efficiency(std::span<const CampaignMetrics> at_sigma, std::span<const CampaignMetrics> at_star) {
  detail::require_same_shape(at_sigma, at_star, true);
  return memory_efficiency(completion_time(at_sigma), completion_time(at_star));
}

// ---------------------------------------------------------------------------
// Omission probability under uniformly random verification order.

struct SliceProgress {
  std::uint64_t verified = 0;  // j
  std::uint64_t size = 0;      // n
};

using ProgressVector = std::vector<SliceProgress>;

/// 1 - min_i(j_i / n_i), clamped to [0, 1].
inline double omission_probability(std::span<const SliceProgress> progress) {
  if (progress.empty()) throw Error("omission probability of an empty progress vector");
  double min_fraction = 1.0;
  for (const auto& p : progress) {
    if (p.size == 0) throw Error("slice of size zero in progress vector");
    if (p.verified > p.size) throw Error("verified count exceeds slice size");
    min_fraction = std::min(min_fraction, static_cast<double>(p.verified) / static_cast<double>(p.size));
  }
  return std::clamp(1.0 - min_fraction, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Store/load inflation study.

struct InflationRow {
  double f = 1.0;
  double time_sigma = 0.0;
  double time_baseline = 0.0;
  double speedup = 0.0;
};

/// Speedups with Load/Store costs scaled by each f; Run cost unchanged.
/// Each vector holds per-slice command counts of one parallel campaign.
inline std::vector<InflationRow> inflation_study(std::span<const CommandCounts> optimized,
                                                 std::span<const CommandCounts> baseline,
                                                 const CostModel& base_cost, std::span<const double> f_grid) {
  if (optimized.empty() || baseline.empty()) throw Error("inflation study needs campaigns");
  std::vector<InflationRow> rows;
  for (double f : f_grid) {
    if (!(f >= 1.0)) throw Error("inflation factor must be >= 1");
    const auto cost = base_cost.inflated(f);
    InflationRow r;
    r.f = f;
    for (const auto& c : optimized) r.time_sigma = std::max(r.time_sigma, estimate_time(c, cost));
    for (const auto& c : baseline) r.time_baseline = std::max(r.time_baseline, estimate_time(c, cost));
    r.speedup = speedup(r.time_sigma, r.time_baseline);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Reports.

struct ReportRow {
  std::uint64_t traces = 0;
  std::size_t slices = 1;
  std::size_t sigma = 1;
  std::string seed;
  double f = 1.0;
  double length_quanta = 0;
  double peak_memory = 0;
  double est_seconds = 0.0;
  double speedup = 1.0;
  double parallel_efficiency = 1.0;
  double memory_efficiency = 1.0;
};

inline constexpr const char* kReportHeader =
    "N,D,sigma,seed,f,length_q,peak_mem,est_seconds,speedup,par_eff,mem_eff";

inline void write_report_csv(std::span<const ReportRow> rows, std::ostream& out) {
  using detail::format_double;
  out << kReportHeader << '\n';
  for (const auto& r : rows) {
    out << r.traces << ',' << r.slices << ',';
    if (r.sigma == std::numeric_limits<std::size_t>::max()) {
      out << "inf";
    } else {
      out << r.sigma;
    }
    out << ',' << r.seed << ',' << format_double(r.f)
        << ',' << format_double(r.length_quanta) << ',' << format_double(r.peak_memory) << ','
        << format_double(r.est_seconds) << ',' << format_double(r.speedup) << ','
        << format_double(r.parallel_efficiency) << ',' << format_double(r.memory_efficiency) << '\n';
  }
}

/// Per-seed rows followed by their arithmetic mean per (N, D, sigma, f),
/// tagged with seed `mean`.
inline std::vector<ReportRow> with_seed_means(std::vector<ReportRow> rows) {
  std::map<std::tuple<std::uint64_t, std::size_t, std::size_t, double>, std::vector<const ReportRow*>> groups;
  for (const auto& r : rows) groups[{r.traces, r.slices, r.sigma, r.f}].push_back(&r);
  std::vector<ReportRow> means;
  for (const auto& [key, members] : groups) {
    ReportRow m = *members.front();
    m.seed = "mean";
    const double n = static_cast<double>(members.size());
    auto avg = [&](double ReportRow::*field) {
      double s = 0.0;
      for (const auto* r : members) s += r->*field;
      return s / n;
    };
    m.length_quanta = avg(&ReportRow::length_quanta);
    m.peak_memory = avg(&ReportRow::peak_memory);
    m.est_seconds = avg(&ReportRow::est_seconds);
    m.speedup = avg(&ReportRow::speedup);
    m.parallel_efficiency = avg(&ReportRow::parallel_efficiency);
    m.memory_efficiency = avg(&ReportRow::memory_efficiency);
    means.push_back(m);
  }
  rows.insert(rows.end(), means.begin(), means.end());
  return rows;
}

inline void write_progress_csv(std::span<const SliceProgress> progress, std::ostream& out) {
  out << "slice,j,n,op_bound\n";
  for (std::size_t i = 0; i < progress.size(); ++i) {
    const auto& p = progress[i];
    const double bound = p.size ? 1.0 - static_cast<double>(p.verified) / static_cast<double>(p.size) : 1.0;
    out << i << ',' << p.verified << ',' << p.size << ',' << detail::format_double(bound) << '\n';
  }
}

}  // namespace simcamp

#endif  // SIMCAMP_ANALYSIS_HPP
