#include "interop/cli.hpp"

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "interop/datasetgen.hpp"
#include "interop/harness.hpp"
#include "interop/llmclient.hpp"
#include "interop/sandbox.hpp"
#include "interop/stats.hpp"
#include "interop/strategies.hpp"

namespace interop::cli {

namespace {

namespace fs = std::filesystem;

// Thrown for flag combinations CLI11 cannot reject on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

DatasetVersion version_arg(const std::string& text) {
  auto v = parse_dataset_version(text);
  if (!v) throw UsageError("unknown dataset version '" + text + "'");
  return *v;
}

Strategy strategy_arg(const std::string& text) {
  auto s = parse_strategy(text);
  if (!s) throw UsageError("unknown strategy '" + text + "'");
  return *s;
}

llm::FailureMix mix_arg(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 5) throw UsageError("--noise-mix needs five comma-separated weights");
  double w[5];
  for (int i = 0; i < 5; ++i) {
    try {
      std::size_t used = 0;
      w[i] = std::stod(parts[i], &used);
      if (used != parts[i].size() || !(w[i] >= 0.0)) throw std::invalid_argument(parts[i]);
    } catch (const std::exception&) {
      throw UsageError("bad --noise-mix weight '" + parts[i] + "'");
    }
  }
  llm::FailureMix mix{w[0], w[1], w[2], w[3], w[4]};
  if (!(mix.total() > 0.0)) throw UsageError("--noise-mix weights must not all be zero");
  return mix;
}

// ---- gen-dataset ----------------------------------------------------------

struct GenArgs {
  int count = static_cast<int>(dataset::kDefaultEntryCount);
  std::uint64_t seed = 42;
  std::string version = "all";
  std::string out = "data";
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  std::vector<DatasetVersion> versions;
  if (a.version == "all") {
    versions = {DatasetVersion::V1, DatasetVersion::V2, DatasetVersion::V3, DatasetVersion::V4};
  } else {
    versions = {version_arg(a.version)};
  }
  const auto corpus = dataset::synthesize_corpus(a.count, a.seed);
  for (const auto v : versions) {
    const fs::path dir = a.version == "all" ? fs::path(a.out) / std::string(to_string(v)) : fs::path(a.out);
    const auto manifest = dataset::generate_dataset(corpus, v, dir);
    out << to_string(v) << '\t' << manifest.entries.size() << " entries\t" << dir.string() << '\n';
  }
  return kExitOk;
}

// ---- run ------------------------------------------------------------------

struct RunArgs {
  std::vector<std::string> datasets;
  std::vector<std::string> strategies{"direct"};
  std::vector<std::string> models;
  std::string backend_kind = "oracle";
  std::string backend_url;
  std::string out = "results";
  int runs = 3;
  double temperature = 0.9;
  std::uint64_t seed = 0;
  double error_rate = 0.0;
  std::string noise_mix;
  std::string num_tolerance;
  std::string prompt_dir;
  std::string response_dir;
  std::string runner;
  int jobs = 1;
  std::int64_t sandbox_timeout_ms = 30000;
  std::int64_t request_timeout_ms = 120000;
};

harness::BackendFactory make_factory(const RunArgs& a, const std::string& model) {
  llm::BackendConfig cfg;
  auto kind = llm::parse_backend_kind(a.backend_kind);
  if (!kind) throw UsageError("unknown backend kind '" + a.backend_kind + "'");
  cfg.kind = *kind;
  cfg.base_url = a.backend_url;
  cfg.model_tag = model;
  cfg.temperature = a.temperature;
  cfg.request_timeout_ms = a.request_timeout_ms;
  cfg.seed = a.seed;
  cfg.error_rate = a.error_rate;
  cfg.response_dir = a.response_dir;
  cfg.max_in_flight = std::max(1, a.jobs);
  try {
    cfg.resolve_and_validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const llm::FailureMix mix = a.noise_mix.empty() ? llm::FailureMix{} : mix_arg(a.noise_mix);

  switch (cfg.kind) {
    case llm::BackendKind::Http: {
      auto shared = std::make_shared<llm::HttpBackend>(cfg);
      return [shared](const dataset::DatasetManifest&, Strategy) -> std::shared_ptr<llm::Backend> { return shared; };
    }
    case llm::BackendKind::Scripted:
      return [cfg](const dataset::DatasetManifest&, Strategy) -> std::shared_ptr<llm::Backend> {
        return std::make_shared<llm::ScriptedBackend>(cfg.model_tag, cfg.response_dir);
      };
    case llm::BackendKind::Oracle:
      return [cfg](const dataset::DatasetManifest& m, Strategy s) -> std::shared_ptr<llm::Backend> {
        return std::make_shared<llm::OracleBackend>(m, s, cfg.model_tag);
      };
    case llm::BackendKind::Noisy:
      return [cfg, mix](const dataset::DatasetManifest& m, Strategy s) -> std::shared_ptr<llm::Backend> {
        auto inner = std::make_shared<llm::OracleBackend>(m, s, cfg.model_tag);
        return std::make_shared<llm::NoisyBackend>(inner, cfg.error_rate, cfg.seed, mix);
      };
  }
  throw UsageError("unsupported backend kind");
}

void print_summaries(const std::vector<harness::CellSummary>& summaries, std::ostream& out) {
  out << "cell\truns\tpass_at_1_per_run\tavg_pass_at_1\tstatus\n";
  for (const auto& s : summaries) {
    std::string per_run;
    for (const auto& t : s.runs) {
      if (!per_run.empty()) per_run += ';';
      per_run += fmt("%.4f", t.pass_at_1);
    }
    out << harness::to_string(s.key) << '\t' << s.runs.size() << '\t' << per_run << '\t' << fmt("%.4f", s.average)
        << '\t' << (s.complete ? "complete" : "incomplete: " + s.note) << '\n';
  }
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  if (a.runs < 1) throw UsageError("--runs must be >= 1");
  if (a.jobs < 1) throw UsageError("--jobs must be >= 1");

  harness::ExperimentGrid grid;
  grid.runs = a.runs;
  grid.results_dir = a.out;
  for (const auto& s : a.strategies) {
    for (const auto& part : split(s, ',')) grid.strategies.push_back(strategy_arg(part));
  }
  const std::vector<std::string> models = a.models.empty() ? std::vector<std::string>{a.backend_kind} : a.models;
  for (const auto& m : models) grid.backends.push_back({m, make_factory(a, m)});

  harness::GridOptions opts;
  opts.jobs = a.jobs;
  if (!a.num_tolerance.empty()) {
    auto tol = Decimal::try_parse(a.num_tolerance);
    if (!tol || tol->sign() < 0) throw UsageError("--num-tolerance must be a non-negative number");
    opts.num_tolerance = *tol;
  }
  if (!a.prompt_dir.empty()) {
    for (const auto s : grid.strategies) {
      auto& slot = s == Strategy::Direct ? opts.direct_template : opts.codegen_template;
      if (!slot) slot = strategy::load_template(a.prompt_dir, s);
    }
  }

  std::unique_ptr<sandbox::Sandbox> box;
  if (std::find(grid.strategies.begin(), grid.strategies.end(), Strategy::Codegen) != grid.strategies.end()) {
    sandbox::SandboxLimits limits;
    limits.wall_timeout_ms = a.sandbox_timeout_ms;
    auto runner = a.runner.empty() ? sandbox::default_runner_command() : split(a.runner, ' ');
    box = std::make_unique<sandbox::Sandbox>(std::move(runner), limits, a.jobs);
    opts.sandbox = box.get();
  }

  for (const auto& d : a.datasets) grid.datasets.push_back(dataset::load_dataset(d));

  const auto report = harness::run_grid(grid, opts);
  err << "attempted " << report.attempted << ", skipped " << report.skipped << ", backend calls "
      << report.backend_calls << '\n';

  auto summaries = harness::summarize(fs::path(a.out));
  print_summaries(summaries, out);
  return kExitOk;
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string results = "results";
  std::string csv;
  std::string summary_csv;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  if (!fs::is_directory(a.results)) throw std::runtime_error("no results directory " + a.results);
  const auto records = harness::load_records(a.results);
  const auto summaries = harness::summarize(records, harness::load_meta(a.results));
  print_summaries(summaries, out);
  if (!a.csv.empty()) harness::export_csv(records, a.csv);
  if (!a.summary_csv.empty()) harness::export_summaries_csv(summaries, a.summary_csv);
  return kExitOk;
}

// ---- compare --------------------------------------------------------------

struct CompareArgs {
  std::string results = "results";
  std::string a;
  std::string b;
  double alpha = 0.05;
  bool no_correction = false;
};

// A cell ("v1:model:direct"), one run of a cell ("...@2") or a literal "c/n".
stats::Proportion resolve_operand(const std::string& spec, const std::vector<harness::CellSummary>& summaries,
                                  bool& needs_complete, const harness::CellSummary*& cell, int& run) {
  cell = nullptr;
  run = 0;
  needs_complete = false;
  if (const auto slash = spec.find('/'); slash != std::string::npos && spec.find(':') == std::string::npos) {
    try {
      std::size_t u1 = 0, u2 = 0;
      const auto c = std::stoll(spec.substr(0, slash), &u1);
      const auto n = std::stoll(spec.substr(slash + 1), &u2);
      if (u1 != slash || u2 != spec.size() - slash - 1) throw std::invalid_argument(spec);
      return stats::Proportion(c, n);
    } catch (const std::exception&) {
      throw UsageError("bad proportion literal '" + spec + "'");
    }
  }
  std::string key_text = spec;
  if (const auto at = spec.rfind('@'); at != std::string::npos) {
    try {
      std::size_t used = 0;
      run = std::stoi(spec.substr(at + 1), &used);
      if (used != spec.size() - at - 1 || run < 1) throw std::invalid_argument(spec);
    } catch (const std::exception&) {
      throw UsageError("bad run index in '" + spec + "'");
    }
    key_text = spec.substr(0, at);
  }
  const auto key = harness::parse_cell_key(key_text);
  if (!key) throw UsageError("bad cell address '" + spec + "' (expected version:model:strategy)");
  for (const auto& s : summaries) {
    if (s.key == *key) {
      cell = &s;
      break;
    }
  }
  if (cell == nullptr) throw std::runtime_error("no records for cell " + harness::to_string(*key));
  if (run == 0) {
    needs_complete = true;
    return stats::Proportion(cell->total_c, cell->total_n);
  }
  for (const auto& t : cell->runs) {
    if (t.run == run) return stats::Proportion(t.c, t.n);
  }
  throw std::runtime_error("cell " + harness::to_string(*key) + " has no run " + std::to_string(run));
}

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  if (!(a.alpha > 0.0 && a.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
  const bool literal_only = a.a.find(':') == std::string::npos && a.b.find(':') == std::string::npos;
  std::vector<harness::CellSummary> summaries;
  if (!literal_only) summaries = harness::summarize(fs::path(a.results));

  bool complete_a = false, complete_b = false;
  const harness::CellSummary* cell_a = nullptr;
  const harness::CellSummary* cell_b = nullptr;
  int run_a = 0, run_b = 0;
  const auto pa = resolve_operand(a.a, summaries, complete_a, cell_a, run_a);
  const auto pb = resolve_operand(a.b, summaries, complete_b, cell_b, run_b);
  if (complete_a && !cell_a->complete) throw std::runtime_error("cell " + a.a + " is incomplete: " + cell_a->note);
  if (complete_b && !cell_b->complete) throw std::runtime_error("cell " + a.b + " is incomplete: " + cell_b->note);

  const auto r = stats::compare(pa, pb, a.alpha, !a.no_correction);
  out << "comparison\tz\tp_value\th\tpower\treject_H0\n";
  out << a.a << " vs " << a.b << '\t' << fmt("%.4f", r.z) << '\t' << stats::format_p_value(r.p_value) << '\t'
      << fmt("%.4f", r.h) << '\t' << fmt("%.4f", r.power) << '\t' << (r.reject_null() ? "true" : "false") << '\n';
  return kExitOk;
}

// ---- failures -------------------------------------------------------------

struct FailuresArgs {
  std::string results = "results";
  std::vector<std::string> strategies{"direct", "codegen"};
};

int cmd_failures(const FailuresArgs& a, std::ostream& out) {
  if (!fs::is_directory(a.results)) throw std::runtime_error("no results directory " + a.results);
  const auto records = harness::load_records(a.results);
  out << "strategy\tfailure_cause\tcount\tpercent\n";
  for (const auto& s : a.strategies) {
    const auto strat = strategy_arg(s);
    const auto report = harness::failure_report(records, strat);
    for (const auto& row : report.rows) {
      out << to_string(strat) << '\t' << to_csv(row.cause) << '\t' << row.count << '\t' << fmt("%.2f", row.percent)
          << '\n';
    }
  }
  return kExitOk;
}

// ---- validate-dataset -----------------------------------------------------

struct ValidateArgs {
  std::vector<std::string> datasets;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  bool all_ok = true;
  for (const auto& d : a.datasets) {
    const auto report = dataset::validate_dataset(dataset::load_dataset(d));
    out << d << '\t' << to_string(report.version) << '\t' << report.passed() << '/' << report.checks.size()
        << (report.ok() ? "\tok" : "\tFAILED") << '\n';
    for (const auto& c : report.checks) {
      if (!c.passed) out << "  " << c.prefix << ": " << c.detail << '\n';
    }
    all_ok = all_ok && report.ok();
  }
  return all_ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data interoperability via LLM conversion: dataset generation, experiment runs, analysis"};
  app.name(argc > 0 ? fs::path(argv[0]).filename().string() : "interop");
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-dataset", "Write a synthetic field-boundary dataset");
  gen_cmd->add_option("--count", gen.count, "Entries per dataset")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Corpus seed")->capture_default_str();
  gen_cmd->add_option("--version", gen.version, "v1..v4, or 'all' for one subdirectory each")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run the experiment grid (resumable)");
  run_cmd->add_option("--dataset", run.datasets, "Dataset directory (repeatable)")->required();
  run_cmd->add_option("--strategy", run.strategies, "direct, codegen (repeatable)")->capture_default_str();
  run_cmd->add_option("--backend-kind", run.backend_kind, "http, scripted, oracle or noisy")
      ->check(CLI::IsMember({"http", "scripted", "oracle", "noisy"}))
      ->capture_default_str();
  run_cmd->add_option("--backend-url", run.backend_url, std::string("Model server URL (default $") +
                                                            llm::kBackendUrlEnv + ")");
  run_cmd->add_option("--model", run.models, "Model tag (repeatable; defaults to the backend kind)");
  run_cmd->add_option("--runs", run.runs, "Independent runs per cell")->capture_default_str();
  run_cmd->add_option("--temperature", run.temperature, "Sampling temperature")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Noise seed")->capture_default_str();
  run_cmd->add_option("--error-rate", run.error_rate, "Noisy backend corruption rate")->capture_default_str();
  run_cmd->add_option("--noise-mix", run.noise_mix,
                      "Relative weights truncate,wrong-value,empty,length-stop,transport");
  run_cmd->add_option("--num-tolerance", run.num_tolerance, "Absolute numeric tolerance (default exact)");
  run_cmd->add_option("--prompt-dir", run.prompt_dir, "Directory with direct.txt and codegen.txt");
  run_cmd->add_option("--response-dir", run.response_dir, "Reply files for the scripted backend");
  run_cmd->add_option("--runner", run.runner, std::string("Module runner command (default $") + sandbox::kRunnerEnv +
                                                  " or interop-runner)");
  run_cmd->add_option("--jobs", run.jobs, "Concurrent attempts")->capture_default_str();
  run_cmd->add_option("--sandbox-timeout-ms", run.sandbox_timeout_ms, "Module wall timeout")->capture_default_str();
  run_cmd->add_option("--request-timeout-ms", run.request_timeout_ms, "HTTP request timeout")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Results directory")->capture_default_str();

  AnalyzeArgs analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Summarize pass@1 per cell");
  analyze_cmd->add_option("--results", analyze.results, "Results directory")->capture_default_str();
  analyze_cmd->add_option("--csv", analyze.csv, "Write all attempt records as CSV");
  analyze_cmd->add_option("--summary-csv", analyze.summary_csv, "Write the per-cell summary as CSV");

  CompareArgs compare;
  auto* compare_cmd = app.add_subcommand("compare", "Two-proportion test between cells, runs or c/n literals");
  compare_cmd->add_option("--results", compare.results, "Results directory")->capture_default_str();
  compare_cmd->add_option("--a", compare.a, "version:model:strategy[@run] or c/n")->required();
  compare_cmd->add_option("--b", compare.b, "version:model:strategy[@run] or c/n")->required();
  compare_cmd->add_option("--alpha", compare.alpha, "Significance level")->capture_default_str();
  compare_cmd->add_flag("--no-correction", compare.no_correction, "Disable the continuity correction");

  FailuresArgs failures;
  auto* failures_cmd = app.add_subcommand("failures", "Failure-cause histogram per strategy");
  failures_cmd->add_option("--results", failures.results, "Results directory")->capture_default_str();
  failures_cmd->add_option("--strategy", failures.strategies, "direct, codegen (repeatable)")->capture_default_str();

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate-dataset", "Check expected files against the reference converter");
  validate_cmd->add_option("--dataset", validate.datasets, "Dataset directory (repeatable)")->required();

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen, out);
    if (*run_cmd) return cmd_run(run, out, err);
    if (*analyze_cmd) return cmd_analyze(analyze, out);
    if (*compare_cmd) return cmd_compare(compare, out);
    if (*failures_cmd) return cmd_failures(failures, out);
    if (*validate_cmd) return cmd_validate(validate, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace interop::cli
