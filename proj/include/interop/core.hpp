#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>

namespace interop {

enum class DatasetVersion { V1 = 1, V2 = 2, V3 = 3, V4 = 4 };

std::string_view to_string(DatasetVersion v);
// Accepts "v1".."v4" (case-insensitive) or "1".."4".
std::optional<DatasetVersion> parse_dataset_version(std::string_view text);

enum class Strategy { Direct, Codegen };

std::string_view to_string(Strategy s);  // "DIRECT" / "CODEGEN"
std::optional<Strategy> parse_strategy(std::string_view text);

enum class FailureCause {
  LlmRuntimeError,
  LlmLengthStop,
  HttpTimeout,
  JsonSyntaxError,
  DataMismatch,
  CodeCompilationError,
  CodeExecutionError,
  EmptyData,
};

inline constexpr FailureCause kAllFailureCauses[] = {
    FailureCause::LlmRuntimeError,      FailureCause::LlmLengthStop,
    FailureCause::HttpTimeout,          FailureCause::JsonSyntaxError,
    FailureCause::DataMismatch,         FailureCause::CodeCompilationError,
    FailureCause::CodeExecutionError,   FailureCause::EmptyData,
};

// CSV spelling, e.g. "DATA_MISMATCH".
std::string_view to_csv(FailureCause c);
std::optional<FailureCause> parse_failure_cause(std::string_view csv);
// Human-readable label used in reports.
std::string_view describe(FailureCause c);

// Where in a conversion pipeline an error surfaced.
enum class Stage { LlmCall, Extraction, Compile, Execute, Parse, Compare };

std::string_view to_string(Stage s);

enum class ErrorKind {
  Transport,          // connection refused/reset, malformed HTTP response
  Timeout,            // request deadline exceeded
  StopLength,         // backend stopped generation on its length limit
  ProviderError,      // backend answered with an error status
  NoCode,             // nothing resembling code in a response
  Empty,              // blank document
  Syntax,             // malformed JSON
  Mismatch,           // well-formed but different from the expected document
  CompileFailed,      // runner exit 3
  MissingEntrypoint,  // runner exit 5
  RuntimeFailed,      // runner exit 4 or abnormal termination
  ExecTimeout,        // sandbox wall timeout
  OutputOverflow,     // sandbox stdout limit exceeded
  Unknown,
};

struct RawError {
  ErrorKind kind = ErrorKind::Unknown;
  std::string message;
};

// Total mapping from (stage, error) to the failure taxonomy. Unknown kinds
// fall back to the stage's generic cause.
FailureCause classify_failure(Stage stage, const RawError& error);

// Thrown inside pipelines; caught at the attempt boundary and classified.
class StageError : public std::runtime_error {
 public:
  StageError(Stage stage, RawError error)
      : std::runtime_error(error.message), stage_(stage), error_(std::move(error)) {}
  Stage stage() const { return stage_; }
  const RawError& error() const { return error_; }

 private:
  Stage stage_;
  RawError error_;
};

inline constexpr std::size_t kMaxDetailChars = 2000;

// First kMaxDetailChars code points of a UTF-8 message.
std::string truncate_detail(std::string_view message);

struct ConversionTask {
  std::string entry_id;
  std::string input_text;
  std::string target_example;
  std::optional<std::string> expected_text;  // harness mode only

  bool harness_mode() const { return expected_text.has_value(); }
  // Throws std::invalid_argument when input or target is empty.
  void validate() const;
};

struct AttemptRecord {
  DatasetVersion dataset_version = DatasetVersion::V1;
  std::string entry_id;
  std::string model_tag;
  Strategy strategy = Strategy::Direct;
  int run_index = 1;
  bool success = false;
  std::optional<FailureCause> failure_cause;
  std::string detail;
  std::int64_t duration_ms = 0;
  bool cache_hit = false;

  using Key = std::tuple<DatasetVersion, std::string, std::string, Strategy, int>;
  Key key() const { return {dataset_version, entry_id, model_tag, strategy, run_index}; }

  static AttemptRecord succeeded(std::string detail = {});
  static AttemptRecord failed(FailureCause cause, std::string_view detail);
};

struct RunConfig {
  int runs = 3;
  double temperature = 0.9;
  int k = 1;
  int samples_per_entry = 1;
  double alpha = 0.05;
  double beta = 0.2;
  std::int64_t sandbox_timeout_ms = 30000;
  std::string backend_ref;

  // Throws std::invalid_argument on violated invariants.
  void validate() const;
};

}  // namespace interop
