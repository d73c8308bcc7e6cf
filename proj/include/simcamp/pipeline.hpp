#ifndef SIMCAMP_PIPELINE_HPP
#define SIMCAMP_PIPELINE_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>
#include "simcamp/analysis.hpp"
#include "simcamp/branching_tree.hpp"
#include "simcamp/campaign.hpp"
#include "simcamp/driver.hpp"
#include "simcamp/optimizer.hpp"
#include "simcamp/scenario_gen.hpp"
#include "simcamp/sim_engine.hpp"
#include "simcamp/slicer.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

namespace fs = std::filesystem;

struct RunConfig {
  std::string source;           // trace file or constraint spec file
  double fraction = 1.0;
  std::size_t slices = 1;
  std::size_t sigma = kUnlimitedMemory;
  OrderMode order = OrderMode::Random;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::string> costs_path;
  std::vector<double> f_grid{1.0};
  std::size_t workers = 1;
  std::string out_dir = "out";
  std::size_t memory_budget = 64u << 20;  // external sort, bytes
  bool dedupe = false;
  bool resume = false;
  std::optional<std::size_t> base_slices;  // reference D for parallel efficiency
  std::vector<std::string> driver;         // empty: in-process reference model
  std::optional<std::uint64_t> fail_modulus;  // reference model fails when digest % m == 0

  void validate() const {
    if (workers < 1) throw Error("worker count must be >= 1");
    if (sigma < 1) throw Error("sigma must be >= 1");
    if (slices < 1) throw Error("number of slices must be >= 1");
    if (seeds.empty()) throw Error("at least one seed is required");
    if (!(fraction > 0.0) || fraction > 1.0) throw Error("fraction must lie in (0, 1]");
  }
};

inline std::string format_sigma(std::size_t sigma) {
  return sigma == kUnlimitedMemory ? "inf" : std::to_string(sigma);
}

inline std::size_t parse_sigma(std::string_view s) {
  if (s == "inf" || s == "unlimited") return kUnlimitedMemory;
  const auto v = detail::parse_int<std::size_t>(s, "sigma");
  if (v < 1) throw Error("sigma must be >= 1");
  return v;
}

/// Runs `task(i)` for i in [0, n) on `workers` threads. The first failure is
/// rethrown, tagged with the stage name and slice id.
inline void parallel_for(std::size_t n, std::size_t workers, const std::string& stage,
                         const std::function<void(std::size_t)>& task) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::string first_error;
  auto worker = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        task(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true)) {
          first_error = "stage '" + stage + "' failed on slice " + std::to_string(i) + ": " + e.what();
        }
      }
    }
  };
  const std::size_t w = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < w; ++k) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failed) throw Error(first_error);
}

/// Write-then-rename so readers never see a partial file.
inline void write_atomically(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.close();
    if (!out) throw Error("I/O error writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

struct PipelineLayout {
  fs::path root;
  fs::path slices() const { return root / "slices"; }
  fs::path campaigns() const { return root / "campaigns"; }
  fs::path results() const { return root / "results"; }
  fs::path progress() const { return root / "progress"; }
  fs::path manifest() const { return slices() / "manifest.jsonl"; }
  fs::path slice_file(std::size_t i) const { return slices() / ("slice_" + std::to_string(i) + ".trace"); }
  fs::path campaign_file(std::size_t i) const { return campaigns() / ("slice_" + std::to_string(i) + ".campaign"); }
  fs::path result_file(std::size_t i) const { return results() / ("slice_" + std::to_string(i) + ".json"); }
  fs::path progress_file(std::size_t i) const { return progress() / ("slice_" + std::to_string(i) + ".progress"); }
};

struct ManifestEntry {
  std::size_t slice = 0;
  std::uint64_t size = 0;
  OrderMode order = OrderMode::Lexicographic;
  std::uint64_t seed = 0;
  std::string file;
};

inline bool is_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  return detail::trim(first).substr(0, 10) == "#alphabet=";
}

inline std::uint64_t sampling_seed(std::uint64_t master) { return mix64(master ^ 0x73616d706c65ULL); }

/// Slicing stage: sorts or generates the corpus, samples the index set,
/// splits it into contiguous lexicographic slices and writes each slice in
/// its verification order plus a JSON-lines manifest. Returns N.
inline std::uint64_t run_slice_stage(const std::string& source, double fraction, std::size_t slices,
                                     OrderMode order, std::uint64_t seed, const fs::path& out_dir,
                                     std::size_t memory_budget = 64u << 20, bool dedupe = false) {
  PipelineLayout layout{out_dir};
  fs::create_directories(layout.slices());

  Alphabet alphabet;
  TimeQuantum quantum;
  std::vector<std::vector<InputTrace>> parts(slices);
  std::uint64_t total = 0;

  if (is_trace_file(source)) {
    const fs::path sorted = out_dir / "sorted.trace";
    external_sort(source, sorted.string(), memory_budget, dedupe);
    std::uint64_t n = 0;
    {
      TraceReader counter(sorted.string());
      while (counter.next()) ++n;
    }
    const auto w = sample_indices(n, fraction, sampling_seed(seed));
    const auto ranges = slice_indices(w.size(), slices);
    TraceReader reader(sorted.string());
    alphabet = reader.header().alphabet;
    quantum = reader.header().quantum;
    std::uint64_t pos = 0;
    std::size_t wi = 0, si = 0;
    while (auto t = reader.next()) {
      if (wi < w.size() && w[wi] == pos) {
        while (wi >= ranges[si].end) ++si;
        parts[si].push_back(std::move(*t));
        ++wi;
      }
      ++pos;
    }
    total = w.size();
  } else {
    const GeneratorTable table(read_constraint_spec(source));
    alphabet = table.spec().alphabet;
    const auto n = count_u64(table);
    if (n == 0) throw Error("constraint spec admits no scenarios");
    const auto w = sample_indices(n, fraction, sampling_seed(seed));
    const auto ranges = slice_indices(w.size(), slices);
    for (std::size_t i = 0; i < slices; ++i) {
      for (auto k = ranges[i].begin; k < ranges[i].end; ++k) parts[i].push_back(table.get(w[k]));
    }
    total = w.size();
  }

  std::string manifest;
  for (std::size_t i = 0; i < slices; ++i) {
    const auto slice_seed = derive_seed(seed, i);
    const auto ordered = order_slice(std::move(parts[i]), order, slice_seed);
    TraceWriter writer(layout.slice_file(i).string(), alphabet, quantum);
    for (const auto& t : ordered) writer.write(t);
    writer.close();
    nlohmann::json line = {{"slice", i},
                           {"size", ordered.size()},
                           {"order", to_string(order)},
                           {"seed", slice_seed},
                           {"file", layout.slice_file(i).filename().string()}};
    manifest += line.dump() + "\n";
  }
  write_atomically(layout.manifest(), manifest);
  return total;
}

inline std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest '" + path.string() + "'");
  std::vector<ManifestEntry> out;
  for (std::string line; std::getline(in, line);) {
    if (detail::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    out.push_back({j.at("slice").get<std::size_t>(), j.at("size").get<std::uint64_t>(),
                   parse_order_mode(j.at("order").get<std::string>()), j.at("seed").get<std::uint64_t>(),
                   j.at("file").get<std::string>()});
  }
  return out;
}

/// Optimizes one slice file into a campaign.
inline SimulationCampaign optimize_slice_file(const std::string& slice_path, std::size_t sigma,
                                              std::size_t slice_id) {
  const auto corpus = read_trace_file(slice_path);
  return optimize_unsorted(corpus.traces, sigma, corpus.alphabet, corpus.quantum, slice_id);
}

inline nlohmann::json result_to_json(const ExecutionResult& r, const Alphabet& alphabet, std::size_t slice) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& o : r.outputs) outputs.push_back({{"token", o.token}, {"trace", format_trace(alphabet, o.trace)}});
  nlohmann::json j = {{"slice", slice},
                      {"executable", r.executable},
                      {"length_q", r.stats.length_quanta},
                      {"peak_mem", r.stats.peak_memory},
                      {"loads", r.stats.counts.loads},
                      {"stores", r.stats.counts.stores},
                      {"frees", r.stats.counts.frees},
                      {"runs", r.stats.counts.runs},
                      {"outs", r.stats.counts.outs},
                      {"outputs", outputs}};
  if (!r.executable) {
    j["failed_at"] = *r.failed_at;
    j["error"] = r.error;
  }
  return j;
}

inline void write_progress_file(const fs::path& path, std::uint64_t verified, std::uint64_t size) {
  write_atomically(path, std::to_string(verified) + " " + std::to_string(size) + "\n");
}

inline SliceProgress read_progress_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing progress file '" + path.string() + "'");
  SliceProgress p;
  if (!(in >> p.verified >> p.size)) throw Error("malformed progress file '" + path.string() + "'");
  return p;
}

/// Executes one campaign, keeping its progress file current.
inline ExecutionResult execute_campaign_file(const SimulationCampaign& campaign, std::uint64_t seed,
                                             const std::vector<std::string>& driver,
                                             std::optional<std::uint64_t> fail_modulus,
                                             const fs::path& progress_path, std::uint64_t slice_size) {
  write_progress_file(progress_path, 0, slice_size);
  if (!driver.empty()) {
    auto r = run_external(campaign, driver);
    write_progress_file(progress_path, r.outputs.size(), slice_size);
    return r;
  }
  ReferenceSuv::FailPredicate fail_if;
  if (fail_modulus && *fail_modulus > 0) {
    const auto m = *fail_modulus;
    fail_if = [m](std::uint64_t d) { return d % m == 0; };
  }
  const auto suv = reference_suv(seed, campaign.alphabet.size(), fail_if);
  std::uint64_t outs = 0;
  auto r = execute(campaign, suv, [&](std::size_t i, const SimulatorState<std::uint64_t>&) {
    if (campaign.commands[i].kind == CommandKind::Out && ++outs % 1024 == 0) {
      write_progress_file(progress_path, outs, slice_size);
    }
  });
  write_progress_file(progress_path, r.outputs.size(), slice_size);
  return r;
}

inline ProgressVector read_progress_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("missing progress directory '" + dir.string() + "'");
  std::vector<std::pair<std::size_t, SliceProgress>> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("slice_", 0) != 0 || e.path().extension() != ".progress") continue;
    const auto id = detail::parse_int<std::size_t>(name.substr(6, name.size() - 6 - 9), "slice id");
    found.emplace_back(id, read_progress_file(e.path()));
  }
  if (found.empty()) throw Error("no progress files in '" + dir.string() + "'");
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  ProgressVector out;
  for (auto& [id, p] : found) out.push_back(p);
  return out;
}

/// Omission bound from the per-slice progress files under `results_dir`;
/// also writes progress.csv there.
inline double cmd_progress(const fs::path& results_dir, std::ostream& out) {
  const fs::path dir = fs::is_directory(results_dir / "progress") ? results_dir / "progress" : results_dir;
  const auto progress = read_progress_dir(dir);
  std::ostringstream csv;
  write_progress_csv(progress, csv);
  write_atomically(results_dir / "progress.csv", csv.str());
  const double bound = omission_probability(progress);
  out << detail::format_double(bound) << '\n';
  return bound;
}

/// Cost model used when none is supplied: one second per simulated quantum,
/// everything else free, so estimated time equals campaign length.
inline CostModel run_only_cost_model() {
  CostModel c;
  c.run_per_quantum = 1.0;
  return c;
}

struct SeedReport {
  std::vector<ReportRow> rows;
  ProgressVector progress;
};

/// Analysis stage for one seed directory.
inline SeedReport run_analysis_stage(const RunConfig& cfg, std::uint64_t seed, const fs::path& dir,
                                     std::uint64_t total_traces) {
  PipelineLayout layout{dir};
  const auto manifest = read_manifest(layout.manifest());
  const std::size_t d = manifest.size();
  const CostModel cost = cfg.costs_path ? read_cost_model(*cfg.costs_path) : run_only_cost_model();

  std::vector<TraceCorpus> slices(d);
  std::vector<CommandCounts> configured(d), baseline(d), unlimited(d);
  std::vector<std::size_t> peak_configured(d), peak_star(d);
  parallel_for(d, cfg.workers, "analyze", [&](std::size_t i) {
    slices[i] = read_trace_file(layout.slice_file(i).string());
    const auto c = read_campaign_file(layout.campaign_file(i).string());
    configured[i] = c.counts();
    peak_configured[i] = c.required_memory();
    baseline[i] = optimize_unsorted(slices[i].traces, 1, slices[i].alphabet, slices[i].quantum, i).counts();
    const auto star = optimize_unsorted(slices[i].traces, kUnlimitedMemory, slices[i].alphabet, slices[i].quantum, i);
    unlimited[i] = star.counts();
    peak_star[i] = star.required_memory();
  });
  const std::size_t sigma_star = *std::max_element(peak_star.begin(), peak_star.end());

  // Parallel efficiency reference: same traces re-sliced into base_slices.
  std::optional<std::vector<CommandCounts>> base_counts;
  if (cfg.base_slices) {
    std::vector<InputTrace> all;
    for (const auto& s : slices) all.insert(all.end(), s.traces.begin(), s.traces.end());
    std::sort(all.begin(), all.end());
    const auto ranges = slice_indices(all.size(), *cfg.base_slices);
    std::vector<CommandCounts> counts(ranges.size());
    parallel_for(ranges.size(), cfg.workers, "analyze-base", [&](std::size_t i) {
      std::vector<InputTrace> part(all.begin() + static_cast<std::ptrdiff_t>(ranges[i].begin),
                                   all.begin() + static_cast<std::ptrdiff_t>(ranges[i].end));
      part = order_slice(std::move(part), cfg.order, derive_seed(seed, i));
      counts[i] = optimize_unsorted(part, cfg.sigma, slices[0].alphabet, slices[0].quantum, i).counts();
    });
    base_counts = std::move(counts);
  }

  auto completion = [](const std::vector<CommandCounts>& v, const CostModel& c) {
    double t = 0.0;
    for (const auto& x : v) t = std::max(t, estimate_time(x, c));
    return t;
  };
  auto max_length = [](const std::vector<CommandCounts>& v) {
    std::uint64_t l = 0;
    for (const auto& x : v) l = std::max(l, x.run_quanta);
    return l;
  };
  auto max_peak = [](const std::vector<std::size_t>& v) { return *std::max_element(v.begin(), v.end()); };

  SeedReport report;
  for (double f : cfg.f_grid) {
    const auto c = cost.inflated(f);
    const double t_one = completion(baseline, c);
    const double t_star = completion(unlimited, c);
    struct Variant {
      std::size_t sigma;
      const std::vector<CommandCounts>* counts;
      std::size_t peak;
    };
    const Variant variants[] = {{1, &baseline, 1},
                                {cfg.sigma, &configured, max_peak(peak_configured)},
                                {sigma_star, &unlimited, sigma_star}};
    for (const auto& v : variants) {
      const double t = completion(*v.counts, c);
      ReportRow row;
      row.traces = total_traces;
      row.slices = d;
      row.sigma = v.sigma;
      row.seed = std::to_string(seed);
      row.f = f;
      row.length_quanta = static_cast<double>(max_length(*v.counts));
      row.peak_memory = static_cast<double>(v.peak);
      row.est_seconds = t;
      row.speedup = t > 0 ? speedup(t, t_one) : 1.0;
      row.memory_efficiency = t > 0 ? memory_efficiency(t, t_star) : 1.0;
      row.parallel_efficiency = 1.0;
      if (base_counts && v.counts == &configured) {
        row.parallel_efficiency = parallel_efficiency(t, d, completion(*base_counts, c), *cfg.base_slices);
      }
      report.rows.push_back(row);
    }
  }
  report.progress = read_progress_dir(layout.progress());
  return report;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// End-to-end run: slice, optimize, execute, analyze. Stages exchange files
/// only. With `resume`, existing slice/campaign outputs are reused.
inline int cmd_pipeline(const RunConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  const fs::path root(cfg.out_dir);
  fs::create_directories(root);
  std::vector<ReportRow> all_rows;
  ProgressVector last_progress;

  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = cfg.seeds.size() == 1 ? root : root / ("seed_" + std::to_string(seed));
    PipelineLayout layout{dir};
    fs::create_directories(dir);

    std::uint64_t total = 0;
    if (cfg.resume && fs::exists(layout.manifest())) {
      for (const auto& e : read_manifest(layout.manifest())) total += e.size;
    } else {
      total = run_slice_stage(cfg.source, cfg.fraction, cfg.slices, cfg.order, seed, dir, cfg.memory_budget,
                              cfg.dedupe);
    }
    const auto manifest = read_manifest(layout.manifest());
    log << "seed " << seed << ": " << total << " traces in " << manifest.size() << " slices\n";

    fs::create_directories(layout.campaigns());
    parallel_for(manifest.size(), cfg.workers, "optimize", [&](std::size_t i) {
      const auto path = layout.campaign_file(i);
      if (cfg.resume && fs::exists(path)) return;
      const auto c = optimize_slice_file(layout.slice_file(i).string(), cfg.sigma, i);
      std::ostringstream text;
      write_campaign(c, text);
      write_atomically(path, text.str());
    });

    fs::create_directories(layout.results());
    fs::create_directories(layout.progress());
    parallel_for(manifest.size(), cfg.workers, "execute", [&](std::size_t i) {
      const auto c = read_campaign_file(layout.campaign_file(i).string());
      const auto r = execute_campaign_file(c, seed, cfg.driver, cfg.fail_modulus, layout.progress_file(i),
                                           manifest[i].size);
      write_atomically(layout.result_file(i), result_to_json(r, c.alphabet, i).dump() + "\n");
      if (!r.executable) throw Error("campaign not executable at command " + std::to_string(*r.failed_at) + ": " + r.error);
    });

    auto report = run_analysis_stage(cfg, seed, dir, total);
    std::ostringstream csv;
    write_report_csv(report.rows, csv);
    write_atomically(dir / "report.csv", csv.str());
    std::ostringstream pcsv;
    write_progress_csv(report.progress, pcsv);
    write_atomically(dir / "progress.csv", pcsv.str());
    all_rows.insert(all_rows.end(), report.rows.begin(), report.rows.end());
    last_progress = report.progress;
  }

  if (cfg.seeds.size() > 1) {
    std::ostringstream csv;
    write_report_csv(with_seed_means(all_rows), csv);
    write_atomically(root / "report.csv", csv.str());
  }
  log << "omission bound: " << detail::format_double(omission_probability(last_progress)) << '\n';
  return 0;
}

}  // namespace simcamp

#endif  // SIMCAMP_PIPELINE_HPP
