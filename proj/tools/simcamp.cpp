#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "simcamp/oracles.hpp"
#include "simcamp/pipeline.hpp"

using namespace simcamp;

namespace {

std::vector<double> parse_f_grid(const std::string& text) {
  std::vector<double> out;
  for (auto tok : detail::split(text, ',')) {
    const double f = detail::parse_double(detail::trim(tok), "f-grid entry");
    if (!(f >= 1.0)) throw Error("f-grid entries must be >= 1");
    out.push_back(f);
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (auto tok : detail::split(text, ',')) out.push_back(detail::parse_int<std::uint64_t>(detail::trim(tok), "seed"));
  return out;
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

void emit(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    return;
  }
  std::ostringstream text;
  body(text);
  write_atomically(path, text.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation campaign optimizer: slice, optimize, execute and analyze trace sets."};
  app.require_subcommand(1);
  app.set_version_flag("--version", "simcamp 1.0");
  app.set_config("--config", "", "TOML/INI file; options go under a section named after the subcommand");

  // sg ----------------------------------------------------------------------
  auto* sg = app.add_subcommand("sg", "Scenario generator over a constraint spec");
  sg->require_subcommand(1);
  std::string spec_path;
  auto* sg_count_cmd = sg->add_subcommand("count", "Print the number of admissible traces");
  sg_count_cmd->add_option("--spec", spec_path, "Constraint spec file")->required();
  auto* sg_get_cmd = sg->add_subcommand("get", "Print traces by lexicographic index");
  std::string sg_index = "0";
  std::uint64_t sg_n = 1;
  std::string sg_out;
  sg_get_cmd->add_option("--spec", spec_path, "Constraint spec file")->required();
  sg_get_cmd->add_option("--index", sg_index, "First index (arbitrary precision)");
  sg_get_cmd->add_option("--count", sg_n, "Number of consecutive traces");
  sg_get_cmd->add_option("--out", sg_out, "Write a trace file instead of printing");

  // sort --------------------------------------------------------------------
  auto* sort_cmd = app.add_subcommand("sort", "External lexicographic sort of a trace file");
  std::string sort_in, sort_out;
  std::size_t budget = 64u << 20;
  bool dedupe = false;
  sort_cmd->add_option("--in", sort_in, "Input trace file")->required();
  sort_cmd->add_option("--out", sort_out, "Output trace file")->required();
  sort_cmd->add_option("--memory-budget", budget, "Bytes of traces held per sorted run");
  sort_cmd->add_flag("--dedupe", dedupe, "Drop duplicate traces instead of failing");

  // slice -------------------------------------------------------------------
  auto* slice_cmd = app.add_subcommand("slice", "Partition a corpus into lexicographic slices");
  std::string source, out_dir = "out", order_text = "random";
  std::size_t slices = 1;
  std::uint64_t seed = 0;
  double fraction = 1.0;
  slice_cmd->add_option("--in", source, "Trace file or constraint spec")->required();
  slice_cmd->add_option("--slices", slices, "Number of slices D");
  slice_cmd->add_option("--order", order_text, "Verification order: lex, random or given");
  slice_cmd->add_option("--seed", seed, "Master seed");
  slice_cmd->add_option("--fraction", fraction, "Fraction of the corpus to sample");
  slice_cmd->add_option("--out-dir", out_dir, "Output directory");
  slice_cmd->add_option("--memory-budget", budget, "External sort budget in bytes");
  slice_cmd->add_flag("--dedupe", dedupe, "Drop duplicate traces");

  // optimize ----------------------------------------------------------------
  auto* opt_cmd = app.add_subcommand("optimize", "Compute the campaign for one slice file");
  std::string opt_in, opt_out, sigma_text = "inf", dump_path;
  std::size_t slice_id = 0;
  opt_cmd->add_option("--in", opt_in, "Slice trace file, in verification order")->required();
  opt_cmd->add_option("--out", opt_out, "Campaign file (default: stdout)");
  opt_cmd->add_option("--sigma", sigma_text, "Checkpoint capacity, or inf");
  opt_cmd->add_option("--slice-id", slice_id, "Slice id recorded in the header");
  opt_cmd->add_option("--dump-bt", dump_path, "Write the branching tree as `id depth ntraces parent`");

  // execute -----------------------------------------------------------------
  auto* exec_cmd = app.add_subcommand("execute", "Run a campaign on the reference model or a driver");
  std::string campaign_path, result_path, driver_text, progress_path;
  std::uint64_t fail_modulus = 0;
  exec_cmd->add_option("--campaign", campaign_path, "Campaign file")->required();
  exec_cmd->add_option("--out", result_path, "Result JSON (default: stdout)");
  exec_cmd->add_option("--seed", seed, "Reference model seed");
  exec_cmd->add_option("--driver", driver_text, "External driver command line");
  exec_cmd->add_option("--progress", progress_path, "Progress file to keep updated");
  exec_cmd->add_option("--fail-modulus", fail_modulus, "Reference model fails when digest % m == 0");

  // analyze -----------------------------------------------------------------
  auto* analyze_cmd = app.add_subcommand("analyze", "Write report.csv and progress.csv for a pipeline directory");
  RunConfig cfg;
  std::string costs, f_grid = "1", seeds_text;
  std::size_t base_slices = 0;
  analyze_cmd->add_option("--dir", out_dir, "Pipeline output directory")->required();
  analyze_cmd->add_option("--costs", costs, "Cost model file");
  analyze_cmd->add_option("--f-grid", f_grid, "Comma-separated inflation factors");
  analyze_cmd->add_option("--sigma", sigma_text, "Capacity the campaigns were built with");
  analyze_cmd->add_option("--order", order_text, "Order mode, for re-slicing");
  analyze_cmd->add_option("--seed", seed, "Seed of this directory");
  analyze_cmd->add_option("--base-slices", base_slices, "Reference slice count for parallel efficiency");
  analyze_cmd->add_option("--workers", cfg.workers, "Worker threads");

  // oracle ------------------------------------------------------------------
  auto* oracle_cmd = app.add_subcommand("oracle", "Brute-force references over a slice file");
  std::string oracle_kind, oracle_in;
  oracle_cmd->add_option("kind", oracle_kind, "edges, lsp or naive")
      ->required()
      ->check(CLI::IsMember({"edges", "lsp", "naive"}));
  oracle_cmd->add_option("--in", oracle_in, "Slice trace file")->required();

  // pipeline ----------------------------------------------------------------
  auto* pipe_cmd = app.add_subcommand("pipeline", "Slice, optimize, execute and analyze end to end");
  pipe_cmd->fallthrough();
  bool resume = false;
  pipe_cmd->add_option("--in", source, "Trace file or constraint spec")->required();
  pipe_cmd->add_option("--slices", slices, "Number of slices D");
  pipe_cmd->add_option("--sigma", sigma_text, "Checkpoint capacity, or inf");
  pipe_cmd->add_option("--order", order_text, "Verification order: lex, random or given");
  pipe_cmd->add_option("--seed", seed, "Master seed");
  pipe_cmd->add_option("--seeds", seeds_text, "Comma-separated seeds; results are averaged");
  pipe_cmd->add_option("--fraction", fraction, "Fraction of the corpus to sample");
  pipe_cmd->add_option("--costs", costs, "Cost model file");
  pipe_cmd->add_option("--f-grid", f_grid, "Comma-separated inflation factors");
  pipe_cmd->add_option("--workers", cfg.workers, "Worker threads");
  pipe_cmd->add_option("--out-dir", out_dir, "Output directory");
  pipe_cmd->add_option("--memory-budget", budget, "External sort budget in bytes");
  pipe_cmd->add_flag("--dedupe", dedupe, "Drop duplicate traces");
  pipe_cmd->add_flag("--resume", resume, "Reuse slice and campaign files already on disk");
  pipe_cmd->add_option("--base-slices", base_slices, "Reference slice count for parallel efficiency");
  pipe_cmd->add_option("--driver", driver_text, "External driver command line");
  pipe_cmd->add_option("--fail-modulus", fail_modulus, "Reference model fails when digest % m == 0");

  // progress ----------------------------------------------------------------
  auto* progress_cmd = app.add_subcommand("progress", "Print the current omission-probability bound");
  progress_cmd->add_option("--dir", out_dir, "Pipeline output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sg_count_cmd->parsed()) {
      std::cout << sg_count(read_constraint_spec(spec_path)) << '\n';
    } else if (sg_get_cmd->parsed()) {
      const GeneratorTable table(read_constraint_spec(spec_path));
      BigCount first(sg_index);
      emit(sg_out, [&](std::ostream& out) {
        out << format_trace_header(table.spec().alphabet, TimeQuantum()) << '\n';
        for (std::uint64_t k = 0; k < sg_n; ++k) out << format_trace(table.spec().alphabet, table.get(first + k)) << '\n';
      });
    } else if (sort_cmd->parsed()) {
      const auto r = external_sort(sort_in, sort_out, budget, dedupe);
      nlohmann::json j = {{"input_traces", r.input_traces}, {"output_traces", r.output_traces},
                          {"duplicates", r.duplicates},     {"runs", r.runs},
                          {"memory_budget", r.memory_budget}, {"max_run_traces", r.max_run_traces}};
      std::cout << j.dump() << '\n';
    } else if (slice_cmd->parsed()) {
      const auto n = run_slice_stage(source, fraction, slices, parse_order_mode(order_text), seed, out_dir, budget, dedupe);
      std::cout << n << " traces in " << slices << " slices written to " << out_dir << '\n';
    } else if (opt_cmd->parsed()) {
      const auto corpus = read_trace_file(opt_in);
      std::vector<InputTrace> sorted = corpus.traces;
      std::sort(sorted.begin(), sorted.end());
      const auto bt = build_bt(sorted);
      if (!dump_path.empty()) emit(dump_path, [&](std::ostream& out) { bt.dump(out); });
      const auto c = optimize_slice(corpus.traces, bt, parse_sigma(sigma_text), corpus.alphabet, corpus.quantum, slice_id);
      emit(opt_out, [&](std::ostream& out) { write_campaign(c, out); });
      if (!opt_out.empty() && opt_out != "-") {
        std::cerr << "length_q=" << c.length_quanta() << " peak_mem=" << c.required_memory()
                  << " bt_size=" << bt.size() << '\n';
      }
    } else if (exec_cmd->parsed()) {
      const auto c = read_campaign_file(campaign_path);
      std::uint64_t outs = 0;
      for (const auto& cmd : c.commands) outs += cmd.kind == CommandKind::Out ? 1 : 0;
      const fs::path progress = progress_path.empty() ? fs::path(campaign_path + ".progress") : fs::path(progress_path);
      std::optional<std::uint64_t> fm;
      if (fail_modulus > 0) fm = fail_modulus;
      const auto r = execute_campaign_file(c, seed, split_words(driver_text), fm, progress, std::max<std::uint64_t>(outs, 1));
      if (progress_path.empty()) fs::remove(progress);
      emit(result_path, [&](std::ostream& out) { out << result_to_json(r, c.alphabet, c.slice).dump() << '\n'; });
      if (!r.executable) {
        std::cerr << "simcamp: campaign not executable at command " << *r.failed_at << ": " << r.error << '\n';
        return 2;
      }
    } else if (analyze_cmd->parsed()) {
      cfg.sigma = parse_sigma(sigma_text);
      cfg.order = parse_order_mode(order_text);
      cfg.f_grid = parse_f_grid(f_grid);
      if (!costs.empty()) cfg.costs_path = costs;
      if (base_slices > 0) cfg.base_slices = base_slices;
      PipelineLayout layout{out_dir};
      std::uint64_t total = 0;
      for (const auto& e : read_manifest(layout.manifest())) total += e.size;
      const auto report = run_analysis_stage(cfg, seed, out_dir, total);
      std::ostringstream csv, pcsv;
      write_report_csv(report.rows, csv);
      write_progress_csv(report.progress, pcsv);
      write_atomically(layout.root / "report.csv", csv.str());
      write_atomically(layout.root / "progress.csv", pcsv.str());
      std::cout << csv.str();
    } else if (oracle_cmd->parsed()) {
      const auto corpus = read_trace_file(oracle_in);
      if (oracle_kind == "edges") {
        std::cout << oracle::edge_count(corpus.traces) << '\n';
      } else if (oracle_kind == "lsp") {
        for (const auto& [p, n] : oracle::lsp_enumerate(corpus.traces)) {
          std::cout << (p.empty() ? "-" : format_trace(corpus.alphabet, p)) << ' ' << p.size() << ' ' << n << '\n';
        }
      } else {
        write_campaign(oracle::naive_campaign(corpus.traces, corpus.alphabet, corpus.quantum), std::cout);
      }
    } else if (pipe_cmd->parsed()) {
      cfg.source = source;
      cfg.fraction = fraction;
      cfg.slices = slices;
      cfg.sigma = parse_sigma(sigma_text);
      cfg.order = parse_order_mode(order_text);
      cfg.seeds = seeds_text.empty() ? std::vector<std::uint64_t>{seed} : parse_seeds(seeds_text);
      if (!costs.empty()) cfg.costs_path = costs;
      cfg.f_grid = parse_f_grid(f_grid);
      cfg.out_dir = out_dir;
      cfg.memory_budget = budget;
      cfg.dedupe = dedupe;
      cfg.resume = resume;
      if (base_slices > 0) cfg.base_slices = base_slices;
      cfg.driver = split_words(driver_text);
      if (fail_modulus > 0) cfg.fail_modulus = fail_modulus;
      return cmd_pipeline(cfg);
    } else if (progress_cmd->parsed()) {
      cmd_progress(out_dir, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "simcamp: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
