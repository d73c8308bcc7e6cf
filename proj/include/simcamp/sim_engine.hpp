#ifndef SIMCAMP_SIM_ENGINE_HPP
#define SIMCAMP_SIM_ENGINE_HPP

#include <concepts>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simcamp/campaign.hpp"
#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

/// Deterministic system under verification with an embedded monitor.
/// `transition(x, u, k)` holds input `u` for `k` quanta and must satisfy
/// transition(transition(x, u, a), u, b) == transition(x, u, a + b).
template <class M>
concept SuvModel = requires(const M& m, const typename M::state_type& x, Symbol u, std::uint64_t k) {
  typename M::state_type;
  { m.initial() } -> std::convertible_to<typename M::state_type>;
  { m.transition(x, u, k) } -> std::convertible_to<typename M::state_type>;
  { m.observe(x) } -> std::convertible_to<std::string>;
  { m.alphabet_size() } -> std::convertible_to<std::size_t>;
};

/// Desk-scale stand-in for a simulation model: the state is a 64-bit digest
/// of the input history, advanced one quantum at a time by keyed mixing.
class ReferenceSuv {
 public:
  using state_type = std::uint64_t;
  using FailPredicate = std::function<bool(std::uint64_t digest)>;

  ReferenceSuv(std::uint64_t seed, std::size_t alphabet_size, FailPredicate fail_if = {})
      : seed_(seed), alphabet_size_(alphabet_size), fail_if_(std::move(fail_if)) {
    for (std::size_t u = 0; u < alphabet_size; ++u) keys_.push_back(mix64(seed ^ mix64(u + 1)));
  }

  state_type initial() const { return mix64(seed_ ^ 0x5bd1e995ULL); }

  state_type transition(state_type x, Symbol u, std::uint64_t k) const {
    const std::uint64_t key = keys_.at(u);
    for (std::uint64_t i = 0; i < k; ++i) x = mix64(x ^ key);
    return x;
  }

  std::uint64_t digest(state_type x) const { return x; }
  bool fails(state_type x) const { return fail_if_ && fail_if_(digest(x)); }

  /// `pass-<hex digest>` or `fail-<hex digest>`.
  std::string observe(state_type x) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest(x)));
    return (fails(x) ? "fail-" : "pass-") + std::string(buf);
  }

  std::size_t alphabet_size() const { return alphabet_size_; }
  std::uint64_t seed() const { return seed_; }

  /// State reached from the initial state under `trace`.
  state_type replay(std::span<const Symbol> trace) const {
    state_type x = initial();
    for (Symbol u : trace) x = transition(x, u, 1);
    return x;
  }

 private:
  std::uint64_t seed_;
  std::size_t alphabet_size_;
  FailPredicate fail_if_;
  std::vector<std::uint64_t> keys_;
};

inline ReferenceSuv reference_suv(std::uint64_t seed, std::size_t alphabet_size,
                                  ReferenceSuv::FailPredicate fail_if = {}) {
  return ReferenceSuv(seed, alphabet_size, std::move(fail_if));
}

/// Simulator state: current model state (nullopt once an error occurred),
/// accumulated input trace, and the checkpoint memory.
template <class State>
struct SimulatorState {
  struct Checkpoint {
    State state;
    std::vector<Symbol> trace;
  };

  std::optional<State> current;
  std::vector<Symbol> trace;
  std::unordered_map<NodeId, Checkpoint> memory;
  std::string error_message;

  bool error() const { return !current.has_value(); }

  static SimulatorState initial(State x0) { return SimulatorState{std::move(x0), {}, {}, {}}; }
};

namespace detail {
template <class S>
S fail(S s, std::string msg) {
  s.current.reset();
  s.error_message = std::move(msg);
  return s;
}
}  // namespace detail

/// Transition function. Violated preconditions yield the absorbing error state.
template <SuvModel M>
SimulatorState<typename M::state_type> step(SimulatorState<typename M::state_type> s,
                                            const Command& cmd, const M& suv) {
  if (s.error()) return s;
  switch (cmd.kind) {
    case CommandKind::Load: {
      const auto it = s.memory.find(cmd.id);
      if (it == s.memory.end()) return detail::fail(std::move(s), "load of absent checkpoint " + std::to_string(cmd.id));
      s.current = it->second.state;
      s.trace = it->second.trace;
      return s;
    }
    case CommandKind::Store: {
      if (s.memory.contains(cmd.id)) {
        return detail::fail(std::move(s), "store of already present checkpoint " + std::to_string(cmd.id));
      }
      s.memory.emplace(cmd.id, typename SimulatorState<typename M::state_type>::Checkpoint{*s.current, s.trace});
      return s;
    }
    case CommandKind::Free:
      if (s.memory.erase(cmd.id) == 0) {
        return detail::fail(std::move(s), "free of absent checkpoint " + std::to_string(cmd.id));
      }
      return s;
    case CommandKind::Run:
      if (cmd.symbol >= suv.alphabet_size()) return detail::fail(std::move(s), "run with unknown symbol");
      if (cmd.quanta < 1) return detail::fail(std::move(s), "run of zero quanta");
      s.current = suv.transition(*s.current, cmd.symbol, cmd.quanta);
      s.trace.insert(s.trace.end(), cmd.quanta, cmd.symbol);
      return s;
    case CommandKind::Out:
      return s;
  }
  return s;
}

struct ExecutionOutput {
  std::string token;
  std::vector<Symbol> trace;
  friend bool operator==(const ExecutionOutput&, const ExecutionOutput&) = default;
};

struct ExecutionStats {
  std::uint64_t length_quanta = 0;
  std::size_t peak_memory = 0;
  CommandCounts counts;
};

struct ExecutionResult {
  std::vector<ExecutionOutput> outputs;
  ExecutionStats stats;
  bool executable = true;
  std::optional<std::size_t> failed_at;  // index of the failing command
  std::string error;
};

/// Runs `campaign` from the model's initial state. `on_step`, when given, is
/// called after every command with the command index and the new state.
template <SuvModel M>
ExecutionResult execute(
    const SimulationCampaign& campaign, const M& suv,
    const std::function<void(std::size_t, const SimulatorState<typename M::state_type>&)>& on_step = {}) {
  ExecutionResult r;
  auto s = SimulatorState<typename M::state_type>::initial(suv.initial());
  for (std::size_t i = 0; i < campaign.commands.size(); ++i) {
    const auto& cmd = campaign.commands[i];
    s = step(std::move(s), cmd, suv);
    if (s.error()) {
      r.executable = false;
      r.failed_at = i;
      r.error = s.error_message;
      return r;
    }
    switch (cmd.kind) {
      case CommandKind::Load: ++r.stats.counts.loads; break;
      case CommandKind::Store: ++r.stats.counts.stores; break;
      case CommandKind::Free: ++r.stats.counts.frees; break;
      case CommandKind::Run:
        ++r.stats.counts.runs;
        r.stats.counts.run_quanta += cmd.quanta;
        r.stats.length_quanta += cmd.quanta;
        break;
      case CommandKind::Out:
        ++r.stats.counts.outs;
        r.outputs.push_back({suv.observe(*s.current), s.trace});
        break;
    }
    r.stats.peak_memory = std::max(r.stats.peak_memory, s.memory.size());
    if (on_step) on_step(i, s);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Cost model: `load=<s> store=<s> free=<s> out=<s> run_per_q=<s> f=<x>`.

struct CostModel {
  double load = 0.0;
  double store = 0.0;
  double free = 0.0;
  double out = 0.0;
  double run_per_quantum = 0.0;
  double inflation = 1.0;  // applied to load and store

  void validate() const {
    for (double v : {load, store, free, out, run_per_quantum}) {
      if (!(v >= 0.0)) throw Error("cost model values must be non-negative");
    }
    if (!(inflation >= 1.0)) throw Error("inflation factor must be >= 1");
  }

  CostModel inflated(double f) const {
    CostModel c = *this;
    c.inflation = f;
    c.validate();
    return c;
  }

  std::string format() const {
    using detail::format_double;
    return "load=" + format_double(load) + " store=" + format_double(store) +
           " free=" + format_double(free) + " out=" + format_double(out) +
           " run_per_q=" + format_double(run_per_quantum) + " f=" + format_double(inflation);
  }
};

inline CostModel parse_cost_model(std::string_view text) {
  CostModel c;
  std::istringstream in{std::string(text)};
  std::string item;
  std::map<std::string, bool> seen;
  while (in >> item) {
    if (item.front() == '#') {
      std::getline(in, item);
      continue;
    }
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("malformed cost model entry '" + item + "'");
    const auto key = item.substr(0, eq);
    const double v = detail::parse_double(std::string_view(item).substr(eq + 1), key);
    if (key == "load") c.load = v;
    else if (key == "store") c.store = v;
    else if (key == "free") c.free = v;
    else if (key == "out") c.out = v;
    else if (key == "run_per_q") c.run_per_quantum = v;
    else if (key == "f") c.inflation = v;
    else throw Error("unknown cost model key '" + key + "'");
    seen[key] = true;
  }
  for (const char* k : {"load", "store", "free", "out", "run_per_q"}) {
    if (!seen[k]) throw Error(std::string("cost model is missing '") + k + "'");
  }
  c.validate();
  return c;
}

inline CostModel read_cost_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open cost model '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cost_model(ss.str());
}

/// Expected wall-clock seconds; Load and Store costs are scaled by the inflation factor.
inline double estimate_time(const CommandCounts& n, const CostModel& cost) {
  return static_cast<double>(n.loads) * cost.load * cost.inflation +
         static_cast<double>(n.stores) * cost.store * cost.inflation +
         static_cast<double>(n.frees) * cost.free + static_cast<double>(n.outs) * cost.out +
         static_cast<double>(n.run_quanta) * cost.run_per_quantum;
}

inline double estimate_time(const SimulationCampaign& campaign, const CostModel& cost) {
  return estimate_time(campaign.counts(), cost);
}

}  // namespace simcamp

#endif  // SIMCAMP_SIM_ENGINE_HPP
