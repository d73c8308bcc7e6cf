#ifndef SIMCAMP_SCENARIO_GEN_HPP
#define SIMCAMP_SCENARIO_GEN_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

using BigCount = boost::multiprecision::cpp_int;

/// Complete DFA over an alphabet of `alphabet_size` symbols.
struct Dfa {
  std::size_t num_states = 0;
  std::size_t alphabet_size = 0;
  std::size_t start = 0;
  std::vector<bool> accepting;
  std::vector<std::size_t> next;  // next[state * alphabet_size + symbol]

  std::size_t step(std::size_t state, Symbol u) const { return next[state * alphabet_size + u]; }

  bool accepts(std::span<const Symbol> word) const {
    std::size_t s = start;
    for (Symbol u : word) s = step(s, u);
    return accepting[s];
  }

  void validate() const {
    if (num_states == 0) throw Error("DFA must have at least one state");
    if (start >= num_states) throw Error("DFA start state out of range");
    if (accepting.size() != num_states) throw Error("DFA accepting set has wrong size");
    if (next.size() != num_states * alphabet_size) throw Error("DFA transition table has wrong size");
    for (auto t : next) {
      if (t >= num_states) throw Error("DFA transition is missing or out of range");
    }
  }
};

/// Scenario-set definition: all words of length `horizon` accepted by every monitor.
struct ConstraintSpec {
  Alphabet alphabet;
  std::size_t horizon = 1;
  std::vector<Dfa> monitors;

  void validate() const {
    if (horizon < 1) throw Error("horizon must be >= 1");
    for (const auto& m : monitors) {
      if (m.alphabet_size != alphabet.size()) throw Error("monitor alphabet size mismatch");
      m.validate();
    }
  }

  bool accepts(std::span<const Symbol> word) const {
    if (word.size() != horizon) return false;
    for (const auto& m : monitors) {
      if (!m.accepts(word)) return false;
    }
    return true;
  }
};

// Spec file:
//   alphabet=a,b
//   horizon=8
//   states=2
//   start=0
//   accept=0,1
//   0 a -> 0
//   ...
// Each `states=` line opens a new monitor block.
inline ConstraintSpec parse_constraint_spec(std::istream& in) {
  ConstraintSpec spec;
  bool have_alphabet = false, have_horizon = false;
  struct Pending {
    Dfa dfa;
    std::vector<bool> defined;
  };
  std::vector<Pending> blocks;
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> Error {
    return Error("spec line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto arrow = line.find("->");
    if (arrow != std::string_view::npos) {
      if (blocks.empty()) throw fail("transition outside a monitor block");
      auto& b = blocks.back();
      std::istringstream lhs{std::string(line.substr(0, arrow))};
      std::string from, sym;
      if (!(lhs >> from >> sym)) throw fail("expected 'from symbol -> to'");
      const auto f = detail::parse_int<std::size_t>(from, "state");
      const auto t = detail::parse_int<std::size_t>(line.substr(arrow + 2), "state");
      if (f >= b.dfa.num_states || t >= b.dfa.num_states) throw fail("state out of range");
      const Symbol u = spec.alphabet.symbol(sym);
      b.dfa.next[f * b.dfa.alphabet_size + u] = t;
      b.defined[f * b.dfa.alphabet_size + u] = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw fail("unrecognised line '" + std::string(line) + "'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "alphabet") {
      std::vector<std::string> toks;
      for (auto t : detail::split(value, ',')) toks.emplace_back(detail::trim(t));
      spec.alphabet = Alphabet(std::move(toks));
      have_alphabet = true;
    } else if (key == "horizon") {
      spec.horizon = detail::parse_int<std::size_t>(value, "horizon");
      have_horizon = true;
    } else if (key == "states") {
      if (!have_alphabet) throw fail("alphabet must precede monitors");
      Pending p;
      p.dfa.num_states = detail::parse_int<std::size_t>(value, "states");
      p.dfa.alphabet_size = spec.alphabet.size();
      p.dfa.accepting.assign(p.dfa.num_states, false);
      p.dfa.next.assign(p.dfa.num_states * p.dfa.alphabet_size, 0);
      p.defined.assign(p.dfa.next.size(), false);
      blocks.push_back(std::move(p));
    } else if (key == "start") {
      if (blocks.empty()) throw fail("start outside a monitor block");
      blocks.back().dfa.start = detail::parse_int<std::size_t>(value, "start");
    } else if (key == "accept") {
      if (blocks.empty()) throw fail("accept outside a monitor block");
      auto& d = blocks.back().dfa;
      if (!value.empty()) {
        for (auto s : detail::split(value, ',')) {
          const auto st = detail::parse_int<std::size_t>(s, "accepting state");
          if (st >= d.num_states) throw fail("accepting state out of range");
          d.accepting[st] = true;
        }
      }
    } else {
      throw fail("unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_alphabet || !have_horizon) throw Error("spec requires alphabet= and horizon=");
  for (auto& b : blocks) {
    for (bool d : b.defined) {
      if (!d) throw Error("monitor DFA is not complete (missing transition)");
    }
    spec.monitors.push_back(std::move(b.dfa));
  }
  spec.validate();
  return spec;
}

inline ConstraintSpec read_constraint_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open spec file '" + path + "'");
  return parse_constraint_spec(in);
}

inline void write_constraint_spec(const ConstraintSpec& spec, std::ostream& out) {
  out << "alphabet=";
  for (std::size_t i = 0; i < spec.alphabet.size(); ++i) {
    out << (i ? "," : "") << spec.alphabet.tokens()[i];
  }
  out << "\nhorizon=" << spec.horizon << '\n';
  for (const auto& m : spec.monitors) {
    out << "states=" << m.num_states << "\nstart=" << m.start << "\naccept=";
    bool first = true;
    for (std::size_t s = 0; s < m.num_states; ++s) {
      if (m.accepting[s]) {
        out << (first ? "" : ",") << s;
        first = false;
      }
    }
    out << '\n';
    for (std::size_t s = 0; s < m.num_states; ++s) {
      for (std::size_t u = 0; u < m.alphabet_size; ++u) {
        out << s << ' ' << spec.alphabet.tokens()[u] << " -> " << m.next[s * m.alphabet_size + u]
            << '\n';
      }
    }
  }
}

/// Count table over the reachable product of all monitors:
/// counts[k][s] = number of length-k suffixes accepted from product state s.
/// Read-only after construction.
class GeneratorTable {
 public:
  explicit GeneratorTable(ConstraintSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const std::size_t m = spec_.monitors.size();
    const std::size_t k = spec_.alphabet.size();

    std::map<std::vector<std::size_t>, std::size_t> ids;
    std::vector<std::vector<std::size_t>> tuples;
    std::vector<std::size_t> start(m);
    for (std::size_t i = 0; i < m; ++i) start[i] = spec_.monitors[i].start;
    ids.emplace(start, 0);
    tuples.push_back(start);
    for (std::size_t s = 0; s < tuples.size(); ++s) {
      for (std::size_t u = 0; u < k; ++u) {
        std::vector<std::size_t> t(m);
        for (std::size_t i = 0; i < m; ++i) {
          t[i] = spec_.monitors[i].step(tuples[s][i], static_cast<Symbol>(u));
        }
        auto [it, inserted] = ids.emplace(t, tuples.size());
        if (inserted) tuples.push_back(std::move(t));
        next_.push_back(it->second);
      }
    }
    const std::size_t n = tuples.size();
    std::vector<bool> accepting(n);
    for (std::size_t s = 0; s < n; ++s) {
      bool acc = true;
      for (std::size_t i = 0; i < m; ++i) acc = acc && spec_.monitors[i].accepting[tuples[s][i]];
      accepting[s] = acc;
    }
    counts_.assign(spec_.horizon + 1, std::vector<BigCount>(n));
    for (std::size_t s = 0; s < n; ++s) counts_[0][s] = accepting[s] ? 1 : 0;
    for (std::size_t len = 1; len <= spec_.horizon; ++len) {
      for (std::size_t s = 0; s < n; ++s) {
        BigCount c = 0;
        for (std::size_t u = 0; u < k; ++u) c += counts_[len - 1][next_[s * k + u]];
        counts_[len][s] = std::move(c);
      }
    }
  }

  const ConstraintSpec& spec() const { return spec_; }
  std::size_t product_states() const { return counts_.empty() ? 0 : counts_[0].size(); }

  /// Number of accepted words of length horizon.
  const BigCount& count() const { return counts_[spec_.horizon][0]; }

  /// The j-th accepted word in lexicographic order.
  InputTrace get(BigCount j) const {
    if (j < 0 || j >= count()) throw Error("scenario index out of range");
    const std::size_t k = spec_.alphabet.size();
    std::vector<Symbol> word;
    word.reserve(spec_.horizon);
    std::size_t s = 0;
    for (std::size_t pos = 0; pos < spec_.horizon; ++pos) {
      const std::size_t remaining = spec_.horizon - pos - 1;
      for (std::size_t u = 0; u < k; ++u) {
        const std::size_t t = next_[s * k + u];
        const BigCount& c = counts_[remaining][t];
        if (j < c) {
          word.push_back(static_cast<Symbol>(u));
          s = t;
          break;
        }
        j -= c;
      }
    }
    return InputTrace(std::move(word));
  }

  InputTrace get(std::uint64_t j) const { return get(BigCount(j)); }

 private:
  ConstraintSpec spec_;
  std::vector<std::size_t> next_;
  std::vector<std::vector<BigCount>> counts_;
};

inline BigCount sg_count(const ConstraintSpec& spec) { return GeneratorTable(spec).count(); }

/// Count as a 64-bit integer; throws when it does not fit.
inline std::uint64_t count_u64(const GeneratorTable& table) {
  if (table.count() > std::numeric_limits<std::uint64_t>::max()) {
    throw Error("scenario count exceeds 64 bits: " + table.count().str());
  }
  return table.count().convert_to<std::uint64_t>();
}

/// Uniform random subset of [0, n) of size round(fraction * n), ascending
/// (selection sampling). Deterministic per seed.
inline std::vector<std::uint64_t> sample_indices(std::uint64_t n, double fraction, std::uint64_t seed) {
  if (n < 1) throw Error("cannot sample from an empty index range");
  if (!(fraction > 0.0) || fraction > 1.0) throw Error("fraction must lie in (0, 1]");
  const auto want = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::uint64_t> out;
  out.reserve(want);
  if (want == n) {
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  Rng rng(seed);
  std::uint64_t needed = want;
  for (std::uint64_t i = 0; i < n && needed > 0; ++i) {
    if (rng.below(n - i) < needed) {
      out.push_back(i);
      --needed;
    }
  }
  return out;
}

}  // namespace simcamp

#endif  // SIMCAMP_SCENARIO_GEN_HPP
