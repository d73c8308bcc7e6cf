#ifndef SIMCAMP_OPTIMIZER_HPP
#define SIMCAMP_OPTIMIZER_HPP

#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "simcamp/branching_tree.hpp"
#include "simcamp/campaign.hpp"
#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

inline constexpr std::size_t kUnlimitedMemory = std::numeric_limits<std::size_t>::max();

/// Which checkpoints the campaign under construction has stored, plus an
/// index of the evictable ones ordered by (depth difference, store order).
/// The root checkpoint is stored from the start and never evictable.
class StoredIndex {
 public:
  StoredIndex() { mark_root(); }

  bool stored(NodeId id) const { return id < flags_.size() && flags_[id].stored; }

  /// Live stored checkpoints, root included.
  std::size_t count() const { return count_; }
  std::size_t peak() const { return peak_; }

  void mark(NodeId id, std::size_t depth_difference) {
    grow(id);
    if (flags_[id].stored) throw Error("checkpoint " + std::to_string(id) + " already stored");
    flags_[id] = {true, depth_difference, seq_++};
    if (id != kRootId) evictable_.emplace(depth_difference, flags_[id].seq, id);
    peak_ = std::max(peak_, ++count_);
  }

  void unmark(NodeId id) {
    if (!stored(id)) throw Error("checkpoint " + std::to_string(id) + " is not stored");
    if (id == kRootId) throw Error("the initial checkpoint cannot be freed");
    evictable_.erase({flags_[id].dd, flags_[id].seq, id});
    flags_[id].stored = false;
    --count_;
  }

  /// Evictable checkpoint with the smallest depth difference; ties go to the
  /// least recently stored.
  std::optional<std::pair<NodeId, std::size_t>> victim() const {
    if (evictable_.empty()) return std::nullopt;
    const auto& [dd, seq, id] = *evictable_.begin();
    return std::pair{id, dd};
  }

  std::vector<NodeId> stored_ids() const {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < flags_.size(); ++i) {
      if (flags_[i].stored) out.push_back(i);
    }
    return out;
  }

 private:
  struct Flag {
    bool stored = false;
    std::size_t dd = 0;
    std::uint64_t seq = 0;
  };

  void mark_root() { mark(kRootId, 0); }
  void grow(NodeId id) {
    if (id >= flags_.size()) flags_.resize(id + 1);
  }

  std::vector<Flag> flags_;
  std::set<std::tuple<std::size_t, std::uint64_t, NodeId>> evictable_;
  std::size_t count_ = 0;
  std::size_t peak_ = 0;
  std::uint64_t seq_ = 0;
};

enum class StoreAction { Skip, Store, StoreEvicting };

struct StoreDecision {
  StoreAction action = StoreAction::Skip;
  NodeId victim = 0;
  friend bool operator==(const StoreDecision&, const StoreDecision&) = default;
};

/// Storage heuristic. A candidate that is not a tree node or is already
/// stored is skipped. With room left it is stored. With memory full, the
/// stored non-root checkpoint of minimal depth difference is evicted only if
/// that difference is strictly below the candidate's.
inline StoreDecision is_worth_storing(NodeId candidate, const BranchingTree& bt,
                                      const StoredIndex& index, std::size_t sigma) {
  if (!bt.contains(candidate) || index.stored(candidate)) return {};
  if (index.count() < sigma) return {StoreAction::Store, 0};
  const auto v = index.victim();
  if (v && v->second < bt.depth_difference(candidate)) return {StoreAction::StoreEvicting, v->first};
  return {};
}

/// Commands simulating the j-th trace of the slice. Updates the tree
/// counters and the stored index to reflect the state after these commands.
inline std::vector<Command> sim_cmds(std::span<const Symbol> trace, std::size_t j,
                                     BranchingTree& bt, StoredIndex& index, std::size_t sigma) {
  std::vector<Command> out;
  const auto chain = bt.path(trace);

  std::size_t start = 0;
  if (j > 0) {
    std::optional<NodeId> load;
    for (auto it = chain.rbegin(); it != chain.rend() && !load; ++it) {
      if (index.stored(*it)) load = *it;
    }
    if (!load) throw Error("no loadable checkpoint for trace " + std::to_string(j));
    out.push_back(Command::load(*load));
    start = bt.node(*load).depth;
  }

  // Counter sweep, deepest prefix first: removed nodes are always leaves.
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const NodeId id = *it;
    if (bt.decrement(id) != 0 || id == kRootId) continue;
    if (index.stored(id)) {
      out.push_back(Command::free(id));
      index.unmark(id);
    }
    bt.remove(id);
  }

  // Surviving tree nodes along this trace, by depth.
  std::vector<std::pair<std::size_t, NodeId>> nodes;
  for (NodeId id : chain) {
    if (bt.contains(id)) nodes.emplace_back(bt.node(id).depth, id);
  }
  auto node_at = [&](std::size_t depth) -> std::optional<NodeId> {
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), std::pair{depth, NodeId{0}});
    if (it == nodes.end() || it->first != depth) return std::nullopt;
    return it->second;
  };
  auto decide = [&](std::size_t depth) -> StoreDecision {
    const auto id = node_at(depth);
    return id ? is_worth_storing(*id, bt, index, sigma) : StoreDecision{};
  };

  const std::size_t h = trace.size();
  while (start < h) {
    std::size_t end = start;
    while (end + 1 < h && trace[end + 1] == trace[end] &&
           decide(end + 1).action == StoreAction::Skip) {
      ++end;
    }
    out.push_back(Command::run(trace[start], end - start + 1));
    start = end + 1;
    const auto d = decide(start);
    if (d.action == StoreAction::Skip) continue;
    if (d.action == StoreAction::StoreEvicting) {
      out.push_back(Command::free(d.victim));
      index.unmark(d.victim);
    }
    const NodeId id = *node_at(start);
    out.push_back(Command::store(id));
    index.mark(id, bt.depth_difference(id));
  }
  out.push_back(Command::out());
  return out;
}

/// Campaign for one slice in the given verification order. `bt` must be the
/// tree built from exactly these traces. The campaign opens with the store
/// of the initial state, which counts toward `sigma`.
template <class Range>
SimulationCampaign optimize_slice(const Range& ordered, BranchingTree bt, std::size_t sigma,
                                  const Alphabet& alphabet, TimeQuantum q, std::size_t slice = 0) {
  if (sigma < 1) throw Error("memory capacity must be >= 1");
  SimulationCampaign c{alphabet, q, slice, {}};
  StoredIndex index;
  c.commands.push_back(Command::store(kRootId));
  std::size_t j = 0;
  for (const auto& t : ordered) {
    auto cmds = sim_cmds(std::span<const Symbol>(t), j++, bt, index, sigma);
    c.commands.insert(c.commands.end(), cmds.begin(), cmds.end());
  }
  return c;
}

/// Sorts a copy of the slice, builds its tree and optimizes in the given order.
template <class Range>
SimulationCampaign optimize_unsorted(const Range& ordered, std::size_t sigma, const Alphabet& alphabet,
                                     TimeQuantum q, std::size_t slice = 0) {
  std::vector<InputTrace> sorted(std::begin(ordered), std::end(ordered));
  std::sort(sorted.begin(), sorted.end());
  return optimize_slice(ordered, build_bt(sorted), sigma, alphabet, q, slice);
}

}  // namespace simcamp

#endif  // SIMCAMP_OPTIMIZER_HPP
