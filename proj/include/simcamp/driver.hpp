#ifndef SIMCAMP_DRIVER_HPP
#define SIMCAMP_DRIVER_HPP

// Line protocol between the campaign engine and an external simulator driver.
//
// The engine writes the campaign header lines and then one command per line.
// The driver answers nothing to `#` lines, `OK` to LOAD/STORE/FREE/RUN,
// `OUT <token>` to OUT, and `ERR <message>` when a command fails.

#include <csignal>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "simcamp/campaign.hpp"
#include "simcamp/sim_engine.hpp"

namespace simcamp {

namespace detail {

class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv) {
    if (argv.empty()) throw Error("empty driver command");
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw Error("pipe() failed");
    if (pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw Error("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw Error("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      std::vector<char*> args;
      for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
      args.push_back(nullptr);
      execvp(args[0], args.data());
      _exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
  }

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  ~ChildProcess() { wait(); }

  bool send(const std::string& line) {
    if (!in_) return false;
    if (std::fputs(line.c_str(), in_) < 0 || std::fputc('\n', in_) == EOF) return false;
    return std::fflush(in_) == 0;
  }

  std::optional<std::string> receive() {
    std::string line;
    int c;
    while ((c = std::fgetc(out_)) != EOF) {
      if (c == '\n') return line;
      line.push_back(static_cast<char>(c));
    }
    if (line.empty()) return std::nullopt;
    return line;
  }

  int wait() {
    if (in_) {
      std::fclose(in_);
      in_ = nullptr;
    }
    if (out_) {
      std::fclose(out_);
      out_ = nullptr;
    }
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
      status_ = status;
    }
    return status_;
  }

 private:
  pid_t pid_ = -1;
  std::FILE* in_ = nullptr;
  std::FILE* out_ = nullptr;
  int status_ = 0;
};

}  // namespace detail

/// Executes `campaign` through an external driver process. Outputs come
/// from the driver; associated traces and statistics are tracked locally.
inline ExecutionResult run_external(const SimulationCampaign& campaign,
                                    const std::vector<std::string>& driver_argv) {
  ExecutionResult r;
  detail::ChildProcess child(driver_argv);
  auto fail = [&](std::size_t i, std::string msg) {
    r.executable = false;
    r.failed_at = i;
    r.error = std::move(msg);
    return r;
  };

  std::ostringstream header;
  write_campaign(SimulationCampaign{campaign.alphabet, campaign.quantum, campaign.slice, {}}, header);
  std::istringstream hs(header.str());
  for (std::string line; std::getline(hs, line);) {
    if (!child.send(line)) return fail(0, "driver closed its input");
  }

  std::vector<Symbol> trace;
  std::unordered_map<NodeId, std::vector<Symbol>> memory;
  for (std::size_t i = 0; i < campaign.commands.size(); ++i) {
    const auto& cmd = campaign.commands[i];
    if (!child.send(format_command(campaign.alphabet, cmd))) return fail(i, "driver closed its input");
    const auto reply = child.receive();
    if (!reply) return fail(i, "driver terminated without replying");
    if (reply->rfind("ERR", 0) == 0) return fail(i, "driver error: " + reply->substr(std::min<std::size_t>(4, reply->size())));
    if (cmd.kind == CommandKind::Out) {
      if (reply->rfind("OUT ", 0) != 0 || reply->size() <= 4) {
        return fail(i, "protocol error: expected 'OUT <token>', got '" + *reply + "'");
      }
      ++r.stats.counts.outs;
      r.outputs.push_back({reply->substr(4), trace});
      continue;
    }
    if (*reply != "OK") return fail(i, "protocol error: expected 'OK', got '" + *reply + "'");
    switch (cmd.kind) {
      case CommandKind::Load: {
        const auto it = memory.find(cmd.id);
        if (it == memory.end()) return fail(i, "protocol error: driver accepted load of absent checkpoint");
        trace = it->second;
        ++r.stats.counts.loads;
        break;
      }
      case CommandKind::Store:
        if (!memory.emplace(cmd.id, trace).second) {
          return fail(i, "protocol error: driver accepted duplicate store");
        }
        ++r.stats.counts.stores;
        break;
      case CommandKind::Free:
        if (memory.erase(cmd.id) == 0) return fail(i, "protocol error: driver accepted free of absent checkpoint");
        ++r.stats.counts.frees;
        break;
      case CommandKind::Run:
        trace.insert(trace.end(), cmd.quanta, cmd.symbol);
        ++r.stats.counts.runs;
        r.stats.counts.run_quanta += cmd.quanta;
        r.stats.length_quanta += cmd.quanta;
        break;
      case CommandKind::Out:
        break;
    }
    r.stats.peak_memory = std::max(r.stats.peak_memory, memory.size());
  }
  child.wait();
  return r;
}

/// Driver loop backed by the reference model; what the bundled echo driver runs.
inline void serve_reference_driver(std::istream& in, std::ostream& out, std::uint64_t seed) {
  std::optional<Alphabet> alphabet;
  std::optional<ReferenceSuv> suv;
  std::optional<SimulatorState<ReferenceSuv::state_type>> state;
  for (std::string raw; std::getline(in, raw);) {
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.substr(0, 10) == "#alphabet=") {
        std::vector<std::string> toks;
        for (auto t : detail::split(line.substr(10), ',')) toks.emplace_back(detail::trim(t));
        alphabet.emplace(std::move(toks));
        suv.emplace(seed, alphabet->size());
        state = SimulatorState<ReferenceSuv::state_type>::initial(suv->initial());
      }
      continue;
    }
    if (!suv) {
      out << "ERR no alphabet received" << std::endl;
      continue;
    }
    Command cmd;
    try {
      cmd = parse_command(*alphabet, line);
    } catch (const Error& e) {
      out << "ERR " << e.what() << std::endl;
      continue;
    }
    *state = step(std::move(*state), cmd, *suv);
    if (state->error()) {
      out << "ERR " << state->error_message << std::endl;
      state = SimulatorState<ReferenceSuv::state_type>::initial(suv->initial());
      continue;
    }
    if (cmd.kind == CommandKind::Out) {
      out << "OUT " << suv->observe(*state->current) << std::endl;
    } else {
      out << "OK" << std::endl;
    }
  }
}

}  // namespace simcamp

#endif  // SIMCAMP_DRIVER_HPP
