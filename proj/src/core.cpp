#include "interop/core.hpp"

#include <algorithm>
#include <cctype>

namespace interop {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(DatasetVersion v) {
  switch (v) {
    case DatasetVersion::V1: return "v1";
    case DatasetVersion::V2: return "v2";
    case DatasetVersion::V3: return "v3";
    case DatasetVersion::V4: return "v4";
  }
  return "v?";
}

std::optional<DatasetVersion> parse_dataset_version(std::string_view text) {
  std::string s = lower(text);
  if (!s.empty() && s.front() == 'v') s.erase(0, 1);
  if (s == "1") return DatasetVersion::V1;
  if (s == "2") return DatasetVersion::V2;
  if (s == "3") return DatasetVersion::V3;
  if (s == "4") return DatasetVersion::V4;
  return std::nullopt;
}

std::string_view to_string(Strategy s) {
  return s == Strategy::Direct ? "DIRECT" : "CODEGEN";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  const std::string s = lower(text);
  if (s == "direct") return Strategy::Direct;
  if (s == "codegen") return Strategy::Codegen;
  return std::nullopt;
}

std::string_view to_csv(FailureCause c) {
  switch (c) {
    case FailureCause::LlmRuntimeError: return "LLM_RUNTIME";
    case FailureCause::LlmLengthStop: return "LLM_LENGTH_STOP";
    case FailureCause::HttpTimeout: return "HTTP_TIMEOUT";
    case FailureCause::JsonSyntaxError: return "JSON_SYNTAX";
    case FailureCause::DataMismatch: return "DATA_MISMATCH";
    case FailureCause::CodeCompilationError: return "CODE_COMPILE";
    case FailureCause::CodeExecutionError: return "CODE_EXECUTE";
    case FailureCause::EmptyData: return "EMPTY_DATA";
  }
  return "";
}

std::optional<FailureCause> parse_failure_cause(std::string_view csv) {
  for (const auto c : kAllFailureCauses) {
    if (to_csv(c) == csv) return c;
  }
  return std::nullopt;
}

std::string_view describe(FailureCause c) {
  switch (c) {
    case FailureCause::LlmRuntimeError: return "Runtime exception when calling the LLM";
    case FailureCause::LlmLengthStop: return "LLM exception (completion stopped abnormally: length)";
    case FailureCause::HttpTimeout: return "HTTP timeout";
    case FailureCause::JsonSyntaxError: return "JSON syntax exception";
    case FailureCause::DataMismatch: return "JSON data mismatches expected";
    case FailureCause::CodeCompilationError: return "Code compilation exception";
    case FailureCause::CodeExecutionError: return "Code execution exception";
    case FailureCause::EmptyData: return "Data is empty";
  }
  return "";
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::LlmCall: return "llm-call";
    case Stage::Extraction: return "extraction";
    case Stage::Compile: return "compile";
    case Stage::Execute: return "execute";
    case Stage::Parse: return "parse";
    case Stage::Compare: return "compare";
  }
  return "";
}

FailureCause classify_failure(Stage stage, const RawError& error) {
  // A blank document is EmptyData wherever it is detected, except when the
  // backend itself is the failing party.
  if (error.kind == ErrorKind::Empty && stage != Stage::LlmCall) return FailureCause::EmptyData;

  switch (stage) {
    case Stage::LlmCall:
      if (error.kind == ErrorKind::StopLength) return FailureCause::LlmLengthStop;
      if (error.kind == ErrorKind::Timeout) return FailureCause::HttpTimeout;
      return FailureCause::LlmRuntimeError;
    case Stage::Extraction:
      if (error.kind == ErrorKind::NoCode) return FailureCause::CodeCompilationError;
      return FailureCause::JsonSyntaxError;
    case Stage::Compile:
      return FailureCause::CodeCompilationError;
    case Stage::Execute:
      if (error.kind == ErrorKind::CompileFailed || error.kind == ErrorKind::MissingEntrypoint) {
        return FailureCause::CodeCompilationError;
      }
      return FailureCause::CodeExecutionError;
    case Stage::Parse:
      return FailureCause::JsonSyntaxError;
    case Stage::Compare:
      return FailureCause::DataMismatch;
  }
  return FailureCause::LlmRuntimeError;
}

std::string truncate_detail(std::string_view message) {
  std::size_t chars = 0;
  std::size_t i = 0;
  while (i < message.size()) {
    if (chars == kMaxDetailChars) return std::string(message.substr(0, i));
    const auto c = static_cast<unsigned char>(message[i]);
    std::size_t len = 1;
    if (c >= 0xF0) len = 4;
    else if (c >= 0xE0) len = 3;
    else if (c >= 0xC0) len = 2;
    i = std::min(message.size(), i + len);
    ++chars;
  }
  return std::string(message);
}

void ConversionTask::validate() const {
  if (input_text.empty()) throw std::invalid_argument("conversion task has empty input");
  if (target_example.empty()) throw std::invalid_argument("conversion task has empty target example");
}

AttemptRecord AttemptRecord::succeeded(std::string detail) {
  AttemptRecord r;
  r.success = true;
  r.detail = std::move(detail);
  return r;
}

AttemptRecord AttemptRecord::failed(FailureCause cause, std::string_view detail) {
  AttemptRecord r;
  r.success = false;
  r.failure_cause = cause;
  r.detail = truncate_detail(detail);
  return r;
}

void RunConfig::validate() const {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (k < 1 || k > runs * samples_per_entry) {
    throw std::invalid_argument("k must lie in [1, runs * samples_per_entry]");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (sandbox_timeout_ms <= 0) throw std::invalid_argument("sandbox timeout must be positive");
}

}  // namespace interop
