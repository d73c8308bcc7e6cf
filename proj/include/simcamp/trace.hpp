#ifndef SIMCAMP_TRACE_HPP
#define SIMCAMP_TRACE_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simcamp/common.hpp"

namespace simcamp {

/// Finite, totally ordered input space. The order is the token order.
class Alphabet {
 public:
  Alphabet() = default;

  explicit Alphabet(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty()) throw Error("alphabet must not be empty");
    if (tokens_.size() > std::numeric_limits<Symbol>::max()) {
      throw Error("alphabet too large");
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      const auto& t = tokens_[i];
      if (t.empty() || t.find_first_of(",;= \t\r\n") != std::string::npos || t[0] == '#') {
        throw Error("invalid alphabet token '" + t + "'");
      }
      if (!index_.emplace(t, static_cast<Symbol>(i)).second) {
        throw Error("duplicate alphabet token '" + t + "'");
      }
    }
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  const std::string& token(Symbol s) const {
    if (s >= tokens_.size()) throw Error("symbol index " + std::to_string(s) + " out of alphabet");
    return tokens_[s];
  }

  Symbol symbol(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    if (it == index_.end()) throw Error("unknown symbol token '" + std::string(token) + "'");
    return it->second;
  }

  bool contains(std::span<const Symbol> word) const {
    return std::all_of(word.begin(), word.end(), [&](Symbol s) { return s < tokens_.size(); });
  }

  /// Alphabet with tokens "0", "1", ..., "n-1".
  static Alphabet numeric(std::size_t n) {
    std::vector<std::string> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(std::to_string(i));
    return Alphabet(std::move(t));
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Symbol> index_;
};

class TimeQuantum {
 public:
  explicit TimeQuantum(double value = 1.0) : value_(value) {
    if (!(value > 0.0) || !std::isfinite(value)) throw Error("time quantum must be positive");
  }
  double value() const { return value_; }
  friend bool operator==(TimeQuantum, TimeQuantum) = default;

 private:
  double value_;
};

/// A scenario: one alphabet index per time quantum. Horizon is the length.
class InputTrace {
 public:
  InputTrace() = default;
  explicit InputTrace(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw Error("input trace must have horizon >= 1");
  }
  InputTrace(std::initializer_list<Symbol> symbols) : InputTrace(std::vector<Symbol>(symbols)) {}

  std::size_t horizon() const { return symbols_.size(); }
  std::span<const Symbol> symbols() const { return symbols_; }
  Symbol operator[](std::size_t i) const { return symbols_[i]; }
  auto begin() const { return symbols_.begin(); }
  auto end() const { return symbols_.end(); }

  operator std::span<const Symbol>() const { return symbols_; }

  friend bool operator==(const InputTrace&, const InputTrace&) = default;
  friend std::strong_ordering operator<=>(const InputTrace& a, const InputTrace& b) {
    return a.symbols_ <=> b.symbols_;
  }

 private:
  std::vector<Symbol> symbols_;
};

enum class PrefixRelation { NotPrefix, ProperPrefix, Equal };

/// Lexicographic order; a proper prefix precedes its extensions.
inline std::strong_ordering lex_compare(std::span<const Symbol> a, std::span<const Symbol> b) {
  return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
}

inline std::strong_ordering lex_compare(const Alphabet& alphabet, std::span<const Symbol> a,
                                        std::span<const Symbol> b) {
  if (!alphabet.contains(a) || !alphabet.contains(b)) throw Error("alphabet mismatch");
  return lex_compare(a, b);
}

inline PrefixRelation is_prefix(std::span<const Symbol> a, std::span<const Symbol> b) {
  if (a.size() > b.size() || !std::equal(a.begin(), a.end(), b.begin())) {
    return PrefixRelation::NotPrefix;
  }
  return a.size() == b.size() ? PrefixRelation::Equal : PrefixRelation::ProperPrefix;
}

inline PrefixRelation is_prefix(const Alphabet& alphabet, std::span<const Symbol> a,
                                std::span<const Symbol> b) {
  if (!alphabet.contains(a) || !alphabet.contains(b)) throw Error("alphabet mismatch");
  return is_prefix(a, b);
}

/// Length of the longest common prefix.
inline std::size_t common_prefix_length(std::span<const Symbol> a, std::span<const Symbol> b) {
  const auto n = std::min(a.size(), b.size());
  std::size_t i = 0;
  while (i < n && a[i] == b[i]) ++i;
  return i;
}

/// Value of the piecewise-constant input function at `time`: x[floor(time / q)].
inline Symbol sample_time_function(const InputTrace& trace, TimeQuantum q, double time) {
  const double end = q.value() * static_cast<double>(trace.horizon());
  if (!(time >= 0.0) || !(time < end)) {
    throw Error("time " + detail::format_double(time) + " outside [0, " +
                detail::format_double(end) + ")");
  }
  auto index = static_cast<std::size_t>(std::floor(time / q.value()));
  // floor(time / q) can round up to horizon when time is just below the end.
  index = std::min(index, trace.horizon() - 1);
  return trace[index];
}

struct Provenance {
  std::string source;                   // file path or generator spec path
  std::vector<std::uint64_t> indices;   // index set W when generator-sourced
};

struct TraceCorpus {
  Alphabet alphabet;
  TimeQuantum quantum;
  std::vector<InputTrace> traces;
  Provenance provenance;
  bool sorted = false;

  std::size_t min_horizon() const {
    std::size_t m = traces.empty() ? 0 : traces.front().horizon();
    for (const auto& t : traces) m = std::min(m, t.horizon());
    return m;
  }
  std::size_t max_horizon() const {
    std::size_t m = 0;
    for (const auto& t : traces) m = std::max(m, t.horizon());
    return m;
  }

  friend bool operator==(const TraceCorpus& a, const TraceCorpus& b) {
    return a.alphabet == b.alphabet && a.quantum == b.quantum && a.traces == b.traces;
  }
};

/// Sorts lexicographically. Duplicates are an error unless `dedupe` is set,
/// in which case later copies are dropped. Returns the number of duplicates.
inline std::size_t sort_corpus(TraceCorpus& corpus, bool dedupe = false) {
  std::stable_sort(corpus.traces.begin(), corpus.traces.end());
  const auto last = std::unique(corpus.traces.begin(), corpus.traces.end());
  const auto dups = static_cast<std::size_t>(corpus.traces.end() - last);
  if (dups > 0 && !dedupe) {
    throw Error("corpus contains " + std::to_string(dups) + " duplicate trace(s)");
  }
  corpus.traces.erase(last, corpus.traces.end());
  corpus.sorted = true;
  return dups;
}

// ---------------------------------------------------------------------------
// Trace file format:
//   #alphabet=a,b,c;q=0.5
//   a,a,b
//   # comment
//   b,c

struct TraceFileHeader {
  Alphabet alphabet;
  TimeQuantum quantum;
};

inline std::string format_trace_header(const Alphabet& alphabet, TimeQuantum q) {
  std::string out = "#alphabet=";
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (i) out += ',';
    out += alphabet.tokens()[i];
  }
  out += ";q=" + detail::format_double(q.value());
  return out;
}

inline TraceFileHeader parse_trace_header(std::string_view line) {
  line = detail::trim(line);
  constexpr std::string_view tag = "#alphabet=";
  if (line.substr(0, tag.size()) != tag) throw Error("malformed trace header: missing '#alphabet='");
  const auto parts = detail::split(line.substr(tag.size()), ';');
  if (parts.size() != 2 || parts[1].substr(0, 2) != "q=") {
    throw Error("malformed trace header: expected '#alphabet=...;q=...'");
  }
  std::vector<std::string> tokens;
  for (auto t : detail::split(parts[0], ',')) tokens.emplace_back(detail::trim(t));
  return {Alphabet(std::move(tokens)), TimeQuantum(detail::parse_double(parts[1].substr(2), "quantum"))};
}

inline std::string format_trace(const Alphabet& alphabet, std::span<const Symbol> trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i) out += ',';
    out += alphabet.token(trace[i]);
  }
  return out;
}

inline InputTrace parse_trace(const Alphabet& alphabet, std::string_view line) {
  std::vector<Symbol> symbols;
  for (auto tok : detail::split(line, ',')) {
    tok = detail::trim(tok);
    if (tok.empty()) throw Error("empty token in trace line '" + std::string(line) + "'");
    symbols.push_back(alphabet.symbol(tok));
  }
  return InputTrace(std::move(symbols));
}

/// Streaming reader; one owner per file.
class TraceReader {
 public:
  explicit TraceReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw Error("cannot open trace file '" + path + "'");
    std::string line;
    if (!std::getline(in_, line)) throw Error("malformed header: empty trace file '" + path + "'");
    header_ = parse_trace_header(line);
    line_no_ = 1;
  }

  const TraceFileHeader& header() const { return *header_; }

  /// Next trace, or nullopt at end of file.
  std::optional<InputTrace> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      const auto body = detail::trim(line);
      if (body.empty() || body.front() == '#') continue;
      try {
        return parse_trace(header_->alphabet, body);
      } catch (const Error& e) {
        throw Error(path_ + ":" + std::to_string(line_no_) + ": " + e.what());
      }
    }
    if (in_.bad()) throw Error("I/O error reading '" + path_ + "'");
    return std::nullopt;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::optional<TraceFileHeader> header_;
  std::size_t line_no_ = 0;
};

class TraceWriter {
 public:
  TraceWriter(const std::string& path, const Alphabet& alphabet, TimeQuantum q)
      : path_(path), alphabet_(alphabet), out_(path) {
    if (!out_) throw Error("cannot open '" + path + "' for writing");
    out_ << format_trace_header(alphabet, q) << '\n';
  }

  void write(std::span<const Symbol> trace) { out_ << format_trace(alphabet_, trace) << '\n'; }

  void close() {
    out_.close();
    if (!out_) throw Error("I/O error writing '" + path_ + "'");
  }

 private:
  std::string path_;
  Alphabet alphabet_;
  std::ofstream out_;
};

inline TraceCorpus read_trace_file(const std::string& path) {
  TraceReader reader(path);
  TraceCorpus corpus{reader.header().alphabet, reader.header().quantum, {}, {path, {}}, false};
  while (auto t = reader.next()) corpus.traces.push_back(std::move(*t));
  return corpus;
}

inline void write_trace_file(const TraceCorpus& corpus, const std::string& path) {
  TraceWriter writer(path, corpus.alphabet, corpus.quantum);
  for (const auto& t : corpus.traces) writer.write(t);
  writer.close();
}

}  // namespace simcamp

#endif  // SIMCAMP_TRACE_HPP
