#ifndef SIMCAMP_CAMPAIGN_HPP
#define SIMCAMP_CAMPAIGN_HPP

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "simcamp/common.hpp"
#include "simcamp/trace.hpp"

namespace simcamp {

enum class CommandKind : std::uint8_t { Load, Store, Free, Run, Out };

/// One simulator command. `id` is used by Load/Store/Free, `symbol` and
/// `quanta` by Run.
struct Command {
  CommandKind kind = CommandKind::Out;
  NodeId id = 0;
  Symbol symbol = 0;
  std::uint64_t quanta = 0;

  static Command load(NodeId id) { return {CommandKind::Load, id, 0, 0}; }
  static Command store(NodeId id) { return {CommandKind::Store, id, 0, 0}; }
  static Command free(NodeId id) { return {CommandKind::Free, id, 0, 0}; }
  static Command run(Symbol u, std::uint64_t k) {
    if (k < 1) throw Error("run must advance at least one quantum");
    return {CommandKind::Run, 0, u, k};
  }
  static Command out() { return {CommandKind::Out, 0, 0, 0}; }

  friend bool operator==(const Command&, const Command&) = default;
};

struct CommandCounts {
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t frees = 0;
  std::uint64_t runs = 0;
  std::uint64_t outs = 0;
  std::uint64_t run_quanta = 0;

  friend bool operator==(const CommandCounts&, const CommandCounts&) = default;
};

struct SimulationCampaign {
  Alphabet alphabet;
  TimeQuantum quantum;
  std::size_t slice = 0;
  std::vector<Command> commands;

  /// Sum of Run advancements, in quanta.
  std::uint64_t length_quanta() const {
    std::uint64_t n = 0;
    for (const auto& c : commands) {
      if (c.kind == CommandKind::Run) n += c.quanta;
    }
    return n;
  }

  double length_time() const { return static_cast<double>(length_quanta()) * quantum.value(); }

  /// Peak number of simultaneously stored checkpoints implied by Store/Free.
  std::size_t required_memory() const {
    std::set<NodeId> live;
    std::size_t peak = 0;
    for (const auto& c : commands) {
      if (c.kind == CommandKind::Store) {
        live.insert(c.id);
        peak = std::max(peak, live.size());
      } else if (c.kind == CommandKind::Free) {
        live.erase(c.id);
      }
    }
    return peak;
  }

  CommandCounts counts() const {
    CommandCounts n;
    for (const auto& c : commands) {
      switch (c.kind) {
        case CommandKind::Load: ++n.loads; break;
        case CommandKind::Store: ++n.stores; break;
        case CommandKind::Free: ++n.frees; break;
        case CommandKind::Run: ++n.runs; n.run_quanta += c.quanta; break;
        case CommandKind::Out: ++n.outs; break;
      }
    }
    return n;
  }
};

inline std::string format_command(const Alphabet& alphabet, const Command& c) {
  switch (c.kind) {
    case CommandKind::Load: return "LOAD " + std::to_string(c.id);
    case CommandKind::Store: return "STORE " + std::to_string(c.id);
    case CommandKind::Free: return "FREE " + std::to_string(c.id);
    case CommandKind::Run: return "RUN " + alphabet.token(c.symbol) + " " + std::to_string(c.quanta);
    case CommandKind::Out: return "OUT";
  }
  return {};
}

inline Command parse_command(const Alphabet& alphabet, std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string op, a, b, extra;
  in >> op >> a >> b >> extra;
  if (!extra.empty()) throw Error("trailing tokens in command '" + std::string(line) + "'");
  auto need = [&](bool ok) {
    if (!ok) throw Error("malformed command '" + std::string(line) + "'");
  };
  if (op == "LOAD" || op == "STORE" || op == "FREE") {
    need(!a.empty() && b.empty());
    const auto id = detail::parse_int<NodeId>(a, "checkpoint id");
    return op == "LOAD" ? Command::load(id) : op == "STORE" ? Command::store(id) : Command::free(id);
  }
  if (op == "RUN") {
    need(!a.empty() && !b.empty());
    return Command::run(alphabet.symbol(a), detail::parse_int<std::uint64_t>(b, "run quanta"));
  }
  if (op == "OUT") {
    need(a.empty());
    return Command::out();
  }
  throw Error("unknown command '" + std::string(line) + "'");
}

/// Header lines: `#q=<decimal>;slice=<i>` then `#alphabet=<tok>,...`.
inline void write_campaign(const SimulationCampaign& c, std::ostream& out) {
  out << "#q=" << detail::format_double(c.quantum.value()) << ";slice=" << c.slice << '\n';
  out << "#alphabet=";
  for (std::size_t i = 0; i < c.alphabet.size(); ++i) out << (i ? "," : "") << c.alphabet.tokens()[i];
  out << '\n';
  for (const auto& cmd : c.commands) out << format_command(c.alphabet, cmd) << '\n';
}

/// Reads a campaign. `alphabet` is used when the file has no alphabet line.
inline SimulationCampaign read_campaign(std::istream& in, const Alphabet* alphabet = nullptr) {
  SimulationCampaign c;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty campaign file");
  {
    const auto h = detail::trim(line);
    if (h.substr(0, 3) != "#q=") throw Error("malformed campaign header");
    const auto parts = detail::split(h.substr(1), ';');
    if (parts.size() != 2 || parts[1].substr(0, 6) != "slice=") throw Error("malformed campaign header");
    c.quantum = TimeQuantum(detail::parse_double(parts[0].substr(2), "quantum"));
    c.slice = detail::parse_int<std::size_t>(parts[1].substr(6), "slice");
  }
  bool have_alphabet = false;
  if (alphabet) {
    c.alphabet = *alphabet;
    have_alphabet = true;
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      if (body.substr(0, 10) == "#alphabet=") {
        std::vector<std::string> toks;
        for (auto t : detail::split(body.substr(10), ',')) toks.emplace_back(detail::trim(t));
        c.alphabet = Alphabet(std::move(toks));
        have_alphabet = true;
      }
      continue;
    }
    if (!have_alphabet) throw Error("campaign has no alphabet");
    try {
      c.commands.push_back(parse_command(c.alphabet, body));
    } catch (const Error& e) {
      throw Error("campaign line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

inline void write_campaign_file(const SimulationCampaign& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_campaign(c, out);
  out.close();
  if (!out) throw Error("I/O error writing '" + path + "'");
}

inline SimulationCampaign read_campaign_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open campaign file '" + path + "'");
  return read_campaign(in);
}

}  // namespace simcamp

#endif  // SIMCAMP_CAMPAIGN_HPP
