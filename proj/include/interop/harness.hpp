#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "interop/core.hpp"
#include "interop/datasetgen.hpp"
#include "interop/decimal.hpp"
#include "interop/llmclient.hpp"
#include "interop/sandbox.hpp"
#include "interop/stats.hpp"
#include "interop/strategies.hpp"

namespace interop::harness {

namespace fs = std::filesystem;

// Builds the backend for one (dataset, strategy) cell.
using BackendFactory =
    std::function<std::shared_ptr<llm::Backend>(const dataset::DatasetManifest&, Strategy)>;

struct BackendEntry {
  std::string model_tag;
  BackendFactory make;
};

struct ExperimentGrid {
  std::vector<dataset::DatasetManifest> datasets;
  std::vector<Strategy> strategies;
  std::vector<BackendEntry> backends;
  int runs = 3;
  fs::path results_dir;

  std::size_t total_attempts() const;
};

struct GridOptions {
  int jobs = 1;
  std::optional<Decimal> num_tolerance;
  std::optional<strategy::PromptTemplate> direct_template;   // default template when absent
  std::optional<strategy::PromptTemplate> codegen_template;
  sandbox::Sandbox* sandbox = nullptr;  // required for CODEGEN
  // Stop after this many new attempts (simulates an interrupted run).
  std::optional<std::size_t> max_attempts;
  std::function<void(const AttemptRecord&)> on_record;
};

struct GridReport {
  std::size_t attempted = 0;
  std::size_t skipped = 0;  // already present from an earlier execution
  std::uint64_t backend_calls = 0;
  bool interrupted = false;
};

// Every (entry, run) of every cell is attempted once; records already on
// disk are skipped. The conversion-module cache is off: runs are independent.
GridReport run_grid(const ExperimentGrid& grid, const GridOptions& options);

struct CellKey {
  DatasetVersion version = DatasetVersion::V1;
  std::string model_tag;
  Strategy strategy = Strategy::Direct;

  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

std::string to_string(const CellKey& key);  // "v1:model:direct"
// "version:model:strategy"; the model tag may itself contain ':'.
std::optional<CellKey> parse_cell_key(std::string_view text);

// Stem of the per-cell files: "<version>__<model>__<strategy>".
std::string cell_file_stem(const CellKey& key);

struct CellMeta {
  std::int64_t entries = 0;
  int runs = 0;
};

std::string to_json_line(const AttemptRecord& r);
std::optional<AttemptRecord> from_json_line(std::string_view line);

// All records in a results directory; partially written lines are skipped.
std::vector<AttemptRecord> load_records(const fs::path& results_dir);
std::map<CellKey, CellMeta> load_meta(const fs::path& results_dir);

struct RunTally {
  int run = 1;
  std::int64_t n = 0;
  std::int64_t c = 0;
  double pass_at_1 = 0.0;
};

struct CellSummary {
  CellKey key;
  std::vector<RunTally> runs;
  std::int64_t total_n = 0;
  std::int64_t total_c = 0;
  double average = 0.0;  // NaN when the cell is incomplete
  bool complete = false;
  std::string note;
  std::map<FailureCause, std::int64_t> failures;
};

std::vector<CellSummary> summarize(const std::vector<AttemptRecord>& records,
                                   const std::map<CellKey, CellMeta>& meta = {});
std::vector<CellSummary> summarize(const fs::path& results_dir);

inline constexpr const char* kCsvHeader =
    "dataset_version,entry_id,model_tag,strategy,run,success,failure_cause,detail,duration_ms,cache_hit";

// RFC 4180 quoting where needed.
std::string csv_field(std::string_view value);

// Rows sorted by (cell, entry, run).
std::string records_csv(std::vector<AttemptRecord> records);
void export_csv(const std::vector<AttemptRecord>& records, const fs::path& path);

std::string summaries_csv(const std::vector<CellSummary>& summaries);
void export_summaries_csv(const std::vector<CellSummary>& summaries, const fs::path& path);

struct FailureRow {
  FailureCause cause = FailureCause::LlmRuntimeError;
  std::int64_t count = 0;
  double percent = 0.0;
};

struct FailureReport {
  std::int64_t total_failures = 0;
  std::vector<FailureRow> rows;  // descending by count
};

FailureReport failure_report(const std::vector<AttemptRecord>& records, Strategy strategy);

// Pooled comparison of two complete cells. Throws std::invalid_argument for
// incomplete cells.
stats::ComparisonResult compare_cells(const CellSummary& a, const CellSummary& b, double alpha = 0.05,
                                      bool corrected = true);

// Run-vs-run comparison inside one cell.
stats::ComparisonResult compare_runs(const CellSummary& cell, int run_a, int run_b, double alpha = 0.05,
                                     bool corrected = true);

}  // namespace interop::harness
