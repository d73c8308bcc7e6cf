#ifndef SIMCAMP_SLICER_HPP
#define SIMCAMP_SLICER_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <queue>
#include <string>
#include <vector>

#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

enum class OrderMode { Lexicographic, Random, AsGiven };

inline std::string to_string(OrderMode m) {
  switch (m) {
    case OrderMode::Lexicographic: return "lex";
    case OrderMode::Random: return "random";
    case OrderMode::AsGiven: return "given";
  }
  return "?";
}

inline OrderMode parse_order_mode(std::string_view s) {
  if (s == "lex" || s == "lexicographic") return OrderMode::Lexicographic;
  if (s == "random") return OrderMode::Random;
  if (s == "given" || s == "as-given") return OrderMode::AsGiven;
  throw Error("unknown order mode '" + std::string(s) + "'");
}

/// Half-open index range [begin, end).
struct IndexRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  std::uint64_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct SlicePlan {
  std::size_t slices = 1;
  std::vector<IndexRange> ranges;
  std::uint64_t seed = 0;
  OrderMode order = OrderMode::Lexicographic;
};

/// Contiguous split of [0, n) into `slices` ranges whose sizes differ by at
/// most one; the remainder goes to the leading ranges.
inline std::vector<IndexRange> slice_indices(std::uint64_t n, std::size_t slices) {
  if (slices < 1) throw Error("number of slices must be >= 1");
  if (slices > n) {
    throw Error("cannot split " + std::to_string(n) + " traces into " + std::to_string(slices) +
                " slices");
  }
  std::vector<IndexRange> out;
  out.reserve(slices);
  const std::uint64_t base = n / slices;
  const std::uint64_t extra = n % slices;
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < slices; ++i) {
    const std::uint64_t len = base + (i < extra ? 1 : 0);
    out.push_back({pos, pos + len});
    pos += len;
  }
  return out;
}

inline SlicePlan make_slice_plan(std::uint64_t n, std::size_t slices, OrderMode order,
                                 std::uint64_t seed) {
  return SlicePlan{slices, slice_indices(n, slices), seed, order};
}

/// Verification order for one slice. Random mode is a seeded Fisher-Yates shuffle.
template <class T>
std::vector<T> order_slice(std::vector<T> items, OrderMode mode, std::uint64_t seed) {
  switch (mode) {
    case OrderMode::Lexicographic:
      std::stable_sort(items.begin(), items.end());
      break;
    case OrderMode::Random: {
      Rng rng(seed);
      for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
      }
      break;
    }
    case OrderMode::AsGiven:
      break;
  }
  return items;
}

// ---------------------------------------------------------------------------
// External sort: sorted runs bounded by a memory budget, then a k-way merge.

struct SortReport {
  std::uint64_t input_traces = 0;
  std::uint64_t output_traces = 0;
  std::uint64_t duplicates = 0;
  std::size_t runs = 0;
  std::size_t memory_budget = 0;
  std::uint64_t max_run_traces = 0;
};

namespace detail {

inline std::size_t trace_footprint(const InputTrace& t) {
  return sizeof(InputTrace) + t.horizon() * sizeof(Symbol);
}

inline void write_run(const std::filesystem::path& path, const std::vector<InputTrace>& run) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create run file '" + path.string() + "'");
  for (const auto& t : run) {
    const auto len = static_cast<std::uint32_t>(t.horizon());
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(reinterpret_cast<const char*>(t.symbols().data()),
              static_cast<std::streamsize>(len * sizeof(Symbol)));
  }
  if (!out) throw Error("I/O error writing run file '" + path.string() + "'");
}

class RunReader {
 public:
  explicit RunReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw Error("cannot open run file '" + path.string() + "'");
  }
  std::optional<InputTrace> next() {
    std::uint32_t len = 0;
    if (!in_.read(reinterpret_cast<char*>(&len), sizeof len)) return std::nullopt;
    std::vector<Symbol> s(len);
    if (!in_.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(len * sizeof(Symbol)))) {
      throw Error("truncated run file");
    }
    return InputTrace(std::move(s));
  }

 private:
  std::ifstream in_;
};

}  // namespace detail

/// Sorts the trace file `in_path` into `out_path` lexicographically using at
/// most roughly `memory_budget` bytes of trace storage. Equal traces keep
/// their first occurrence; other copies are dropped with `dedupe` and raise
/// an error otherwise.
inline SortReport external_sort(const std::string& in_path, const std::string& out_path,
                                std::size_t memory_budget, bool dedupe = false) {
  namespace fs = std::filesystem;
  SortReport report;
  report.memory_budget = memory_budget;

  TraceReader reader(in_path);
  const auto header = reader.header();

  const fs::path run_dir = fs::path(out_path).string() + ".runs";
  fs::create_directories(run_dir);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{run_dir};

  std::vector<fs::path> run_files;
  std::vector<InputTrace> run;
  std::size_t run_bytes = 0;
  auto flush = [&] {
    if (run.empty()) return;
    std::stable_sort(run.begin(), run.end());
    report.max_run_traces = std::max<std::uint64_t>(report.max_run_traces, run.size());
    run_files.push_back(run_dir / ("run" + std::to_string(run_files.size()) + ".bin"));
    detail::write_run(run_files.back(), run);
    run.clear();
    run_bytes = 0;
  };
  while (auto t = reader.next()) {
    ++report.input_traces;
    const auto bytes = detail::trace_footprint(*t);
    if (!run.empty() && run_bytes + bytes > memory_budget) flush();
    run_bytes += bytes;
    run.push_back(std::move(*t));
  }
  flush();
  report.runs = run_files.size();

  std::vector<detail::RunReader> readers;
  readers.reserve(run_files.size());
  for (const auto& p : run_files) readers.emplace_back(p);

  // Min-heap on (trace, run index); the run index keeps first occurrences first.
  using Entry = std::pair<InputTrace, std::size_t>;
  auto greater = [](const Entry& a, const Entry& b) {
    if (const auto c = a.first <=> b.first; c != 0) return c > 0;
    return a.second > b.second;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(greater)> heap(greater);
  for (std::size_t i = 0; i < readers.size(); ++i) {
    if (auto t = readers[i].next()) heap.emplace(std::move(*t), i);
  }

  TraceWriter writer(out_path, header.alphabet, header.quantum);
  std::optional<InputTrace> last;
  while (!heap.empty()) {
    auto [trace, idx] = heap.top();
    heap.pop();
    if (auto t = readers[idx].next()) heap.emplace(std::move(*t), idx);
    if (last && *last == trace) {
      ++report.duplicates;
      continue;
    }
    writer.write(trace);
    ++report.output_traces;
    last = std::move(trace);
  }
  writer.close();
  if (report.duplicates > 0 && !dedupe) {
    std::error_code ec;
    fs::remove(out_path, ec);
    throw Error("input contains " + std::to_string(report.duplicates) +
                " duplicate trace(s); rerun with dedupe enabled");
  }
  return report;
}

}  // namespace simcamp

#endif  // SIMCAMP_SLICER_HPP
