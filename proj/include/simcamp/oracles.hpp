#ifndef SIMCAMP_ORACLES_HPP
#define SIMCAMP_ORACLES_HPP

// Brute-force references. They deliberately share no code with the tree
// builder or the optimizer.

#include <map>
#include <set>
#include <span>
#include <vector>

#include "simcamp/campaign.hpp"
#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp::oracle {

inline constexpr std::size_t kDefaultSymbolBudget = 100000;
inline constexpr std::size_t kLspTraceBudget = 500;

/// Explicit trie of every prefix of a slice.
class PrefixTree {
 public:
  template <class Range>
  explicit PrefixTree(const Range& slice, std::size_t symbol_budget = kDefaultSymbolBudget) {
    nodes_.emplace_back();
    std::size_t symbols = 0;
    for (const auto& t : slice) {
      std::span<const Symbol> word(t);
      symbols += word.size();
      if (symbols > symbol_budget) throw Error("oracle budget exceeded");
      std::size_t v = 0;
      for (Symbol u : word) {
        auto it = nodes_[v].children.find(u);
        if (it == nodes_[v].children.end()) {
          nodes_.emplace_back();
          it = nodes_[v].children.emplace(u, nodes_.size() - 1).first;
        }
        v = it->second;
      }
      nodes_[v].end_marker = true;
    }
  }

  std::size_t edge_count() const { return nodes_.size() - 1; }

  std::size_t terminal_count() const {
    std::size_t n = 0;
    for (const auto& x : nodes_) n += x.end_marker ? 1 : 0;
    return n;
  }

 private:
  struct Node {
    std::map<Symbol, std::size_t> children;
    bool end_marker = false;
  };
  std::vector<Node> nodes_;
};

/// Number of distinct non-empty prefixes across the slice.
template <class Range>
std::size_t edge_count(const Range& slice, std::size_t symbol_budget = kDefaultSymbolBudget) {
  return PrefixTree(slice, symbol_budget).edge_count();
}

/// Longest shared prefixes mapped to the number of traces they prefix.
/// A common prefix p of two distinct traces is kept when no longer sequence
/// is still a common prefix of the same pair.
template <class Range>
std::map<std::vector<Symbol>, std::uint64_t> lsp_enumerate(const Range& slice,
                                                           std::size_t trace_budget = kLspTraceBudget) {
  std::vector<std::vector<Symbol>> traces;
  for (const auto& t : slice) {
    std::span<const Symbol> w(t);
    traces.emplace_back(w.begin(), w.end());
  }
  if (traces.size() > trace_budget) throw Error("oracle budget exceeded");

  std::set<std::vector<Symbol>> lsps;
  for (std::size_t a = 0; a < traces.size(); ++a) {
    for (std::size_t b = a + 1; b < traces.size(); ++b) {
      const auto& x = traces[a];
      const auto& y = traces[b];
      for (std::size_t len = 0; len <= std::min(x.size(), y.size()); ++len) {
        if (len > 0 && x[len - 1] != y[len - 1]) break;
        const bool extendable = len < x.size() && len < y.size() && x[len] == y[len];
        if (!extendable) lsps.emplace(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(len));
      }
    }
  }

  std::map<std::vector<Symbol>, std::uint64_t> out;
  for (const auto& p : lsps) {
    std::uint64_t n = 0;
    for (const auto& t : traces) {
      if (t.size() >= p.size() && std::equal(p.begin(), p.end(), t.begin())) ++n;
    }
    out.emplace(p, n);
  }
  return out;
}

/// Unoptimized campaign: every trace is simulated from the initial state.
template <class Range>
SimulationCampaign naive_campaign(const Range& ordered, const Alphabet& alphabet, TimeQuantum q,
                                  std::size_t slice = 0) {
  SimulationCampaign c{alphabet, q, slice, {}};
  c.commands.push_back(Command::store(kRootId));
  bool any = false;
  for (const auto& t : ordered) {
    any = true;
    std::span<const Symbol> w(t);
    c.commands.push_back(Command::load(kRootId));
    std::size_t i = 0;
    while (i < w.size()) {
      std::size_t k = i;
      while (k < w.size() && w[k] == w[i]) ++k;
      c.commands.push_back(Command::run(w[i], k - i));
      i = k;
    }
    c.commands.push_back(Command::out());
  }
  if (!any) throw Error("naive campaign requires a non-empty slice");
  return c;
}

/// Sum of horizons: the naive campaign length in quanta.
template <class Range>
std::uint64_t naive_length(const Range& slice) {
  std::uint64_t n = 0;
  for (const auto& t : slice) n += std::span<const Symbol>(t).size();
  return n;
}

}  // namespace simcamp::oracle

#endif  // SIMCAMP_ORACLES_HPP
