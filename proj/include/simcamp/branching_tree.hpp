#ifndef SIMCAMP_BRANCHING_TREE_HPP
#define SIMCAMP_BRANCHING_TREE_HPP

#include <algorithm>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

struct BTNode {
  NodeId id = kRootId;
  std::size_t depth = 0;       // prefix length in quanta
  std::uint64_t ntraces = 0;   // traces having this prefix
  NodeId parent = kRootId;     // meaningless for the root
  std::vector<Symbol> segment; // symbols from the parent's depth to this depth
  bool lsp = false;            // false only for a root that is not a shared prefix
  bool alive = true;
  std::size_t children = 0;
};

struct BTStats {
  std::size_t size = 0;              // number of longest-shared-prefix nodes
  std::size_t max_depth = 0;
  std::uint64_t depth_diff_sum = 0;  // sum over non-root nodes of depth - parent depth
};

/// Tree of longest shared prefixes of a slice.
///
/// The empty prefix is always materialized as node 0, even when it is not a
/// longest shared prefix, so that the initial simulator state has a stable
/// identifier. Nodes are interned by (parent id, first extension symbol): two
/// children of one node never start with the same symbol, and the stored
/// segment disambiguates on lookup.
class BranchingTree {
 public:
  BranchingTree() { nodes_.push_back(BTNode{}); }

  const BTNode& root() const { return nodes_[kRootId]; }
  const BTNode& node(NodeId id) const { return nodes_.at(id); }

  /// True when `id` currently denotes a node of the tree proper.
  bool contains(NodeId id) const {
    return id < nodes_.size() && nodes_[id].alive && nodes_[id].lsp;
  }

  bool root_is_lsp() const { return nodes_[kRootId].lsp; }

  /// Number of live longest-shared-prefix nodes.
  std::size_t size() const { return live_ - (nodes_[kRootId].lsp ? 0 : 1); }

  /// Live nodes including the reserved root: the checkpoint count needed to
  /// keep every node stored together with the initial state.
  std::size_t materialized_size() const { return live_; }

  /// Upper bound on ids ever assigned.
  std::size_t id_bound() const { return nodes_.size(); }

  std::optional<NodeId> child(NodeId parent, Symbol first) const {
    const auto it = children_.find(key(parent, first));
    if (it == children_.end()) return std::nullopt;
    return it->second;
  }

  /// Live nodes (root first) that are prefixes of `word`, by increasing depth.
  std::vector<NodeId> path(std::span<const Symbol> word) const {
    std::vector<NodeId> out{kRootId};
    NodeId v = kRootId;
    while (nodes_[v].depth < word.size()) {
      const auto c = child(v, word[nodes_[v].depth]);
      if (!c) break;
      const BTNode& cn = nodes_[*c];
      if (cn.depth > word.size()) break;
      if (!std::equal(cn.segment.begin(), cn.segment.end(), word.begin() + nodes_[v].depth)) break;
      out.push_back(*c);
      v = *c;
    }
    return out;
  }

  /// Full prefix denoted by a node.
  std::vector<Symbol> prefix(NodeId id) const {
    std::vector<const std::vector<Symbol>*> parts;
    for (NodeId v = id; v != kRootId; v = nodes_[v].parent) parts.push_back(&nodes_[v].segment);
    std::vector<Symbol> out;
    out.reserve(nodes_[id].depth);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
      out.insert(out.end(), (*it)->begin(), (*it)->end());
    }
    return out;
  }

  std::vector<NodeId> live_nodes() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes_) {
      if (n.alive && n.lsp) out.push_back(n.id);
    }
    return out;
  }

  /// Depth difference to the parent; for a child of the root this is its depth.
  std::size_t depth_difference(NodeId id) const {
    const auto& n = nodes_[id];
    return id == kRootId ? 0 : n.depth - nodes_[n.parent].depth;
  }

  BTStats stats() const {
    BTStats s;
    s.size = size();
    for (const auto& n : nodes_) {
      if (!n.alive || !n.lsp) continue;
      s.max_depth = std::max(s.max_depth, n.depth);
      s.depth_diff_sum += depth_difference(n.id);
    }
    return s;
  }

  /// Decrements the trace counter; returns the new value.
  std::uint64_t decrement(NodeId id) {
    auto& n = nodes_.at(id);
    if (!n.alive || n.ntraces == 0) {
      throw Error("branching tree counter underflow at node " + std::to_string(id) +
                  " (slice does not match tree)");
    }
    return --n.ntraces;
  }

  /// Removes a leaf. The root is never removed.
  void remove(NodeId id) {
    auto& n = nodes_.at(id);
    if (id == kRootId) throw Error("the root node cannot be removed");
    if (!n.alive) throw Error("node " + std::to_string(id) + " already removed");
    if (n.children != 0) throw Error("node " + std::to_string(id) + " is not a leaf");
    children_.erase(key(n.parent, n.segment.front()));
    --nodes_[n.parent].children;
    n.alive = false;
    --live_;
  }

  /// One line per live node: `id depth ntraces parent` (parent `-` for the root).
  void dump(std::ostream& out) const {
    for (const auto& n : nodes_) {
      if (!n.alive || !n.lsp) continue;
      out << n.id << ' ' << n.depth << ' ' << n.ntraces << ' ';
      if (n.id == kRootId || !contains(n.parent)) {
        out << '-';
      } else {
        out << n.parent;
      }
      out << '\n';
    }
  }

 private:
  friend class BranchingTreeBuilder;

  static std::uint64_t key(NodeId parent, Symbol first) {
    return (parent << 16) | first;
  }

  std::vector<BTNode> nodes_;
  std::unordered_map<std::uint64_t, NodeId> children_;
  std::size_t live_ = 1;
};

/// Single-pass construction over a lexicographically sorted, duplicate-free
/// slice. Keeps only the tree and the previous trace.
class BranchingTreeBuilder {
 public:
  void add(std::span<const Symbol> trace) {
    if (trace.empty()) throw Error("empty trace");
    auto& nodes = tree_.nodes_;
    if (!have_prev_) {
      nodes[kRootId].ntraces = 1;
      prev_.assign(trace.begin(), trace.end());
      have_prev_ = true;
      return;
    }
    const auto cmp = lex_compare(prev_, trace);
    if (cmp == 0) throw Error("duplicate trace in slice");
    if (cmp > 0) throw Error("slice is not in lexicographic order");

    const std::size_t lsp_len = common_prefix_length(prev_, trace);

    // Deepest existing node that is a prefix of the shared prefix.
    NodeId par = kRootId;
    while (nodes[par].depth < lsp_len) {
      const auto c = tree_.child(par, trace[nodes[par].depth]);
      if (!c) break;
      const auto& cn = nodes[*c];
      if (cn.depth > lsp_len) break;
      if (!std::equal(cn.segment.begin(), cn.segment.end(), trace.begin() + nodes[par].depth)) break;
      par = *c;
    }

    NodeId lsp = par;
    if (nodes[par].depth == lsp_len) {
      // Already a node, or the reserved root becoming a shared prefix. The
      // root counts every trace so far, which is the correct weight.
      nodes[par].lsp = true;
    } else {
      lsp = nodes.size();
      const std::size_t par_depth = nodes[par].depth;
      BTNode n;
      n.id = lsp;
      n.depth = lsp_len;
      n.parent = par;
      n.segment.assign(trace.begin() + par_depth, trace.begin() + lsp_len);
      n.lsp = true;
      const Symbol first = n.segment.front();

      // At most one child of `par` lies on the previous trace beyond the new node.
      const auto moved = tree_.child(par, first);
      if (moved) {
        auto& cn = nodes[*moved];
        const std::size_t cut = lsp_len - par_depth;
        if (cn.depth <= lsp_len ||
            !std::equal(n.segment.begin(), n.segment.end(), cn.segment.begin())) {
          throw Error("branching tree invariant violated (unsorted input?)");
        }
        cn.parent = lsp;
        cn.segment.erase(cn.segment.begin(), cn.segment.begin() + static_cast<std::ptrdiff_t>(cut));
        n.ntraces = cn.ntraces;
        n.children = 1;
        tree_.children_[BranchingTree::key(lsp, cn.segment.front())] = *moved;
        tree_.children_[BranchingTree::key(par, first)] = lsp;
      } else {
        n.ntraces = 1;
        tree_.children_[BranchingTree::key(par, first)] = lsp;
        ++nodes[par].children;
      }
      nodes.push_back(std::move(n));
      ++tree_.live_;
    }

    for (NodeId v = lsp;; v = nodes[v].parent) {
      ++nodes[v].ntraces;
      if (v == kRootId) break;
    }
    prev_.assign(trace.begin(), trace.end());
  }

  BranchingTree finish() && { return std::move(tree_); }

 private:
  BranchingTree tree_;
  std::vector<Symbol> prev_;
  bool have_prev_ = false;
};

/// Complete branching tree of a sorted slice.
template <class Range>
BranchingTree build_bt(const Range& sorted_slice) {
  BranchingTreeBuilder b;
  for (const auto& t : sorted_slice) b.add(std::span<const Symbol>(t));
  return std::move(b).finish();
}

inline BTStats bt_stats(const BranchingTree& tree) { return tree.stats(); }

}  // namespace simcamp

#endif  // SIMCAMP_BRANCHING_TREE_HPP
