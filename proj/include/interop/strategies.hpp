#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "interop/core.hpp"
#include "interop/decimal.hpp"
#include "interop/llmclient.hpp"
#include "interop/sandbox.hpp"

namespace interop::strategy {

inline constexpr std::string_view kInputPlaceholder = "{INPUT}";
inline constexpr std::string_view kTargetPlaceholder = "{TARGET_EXAMPLE}";

struct PromptTemplate {
  Strategy strategy = Strategy::Direct;
  std::string body;
  std::string version_tag;

  // Throws std::invalid_argument unless each placeholder occurs exactly once.
  void validate() const;
};

PromptTemplate default_template(Strategy strategy);

// Reads "direct.txt" or "codegen.txt" from dir. The version tag is derived
// from the file content.
PromptTemplate load_template(const std::filesystem::path& dir, Strategy strategy);

// Single pass: substituted text is never re-scanned for placeholders.
std::string build_prompt(const PromptTemplate& t, const ConversionTask& task);

// First fenced block if it parses as JSON, else the first balanced {...}
// span, else the trimmed response.
std::string extract_json(std::string_view response);

// First fenced block (any label), else the whole response; trimmed and
// newline-terminated.
// Throws StageError(Extraction, NoCode) when nothing is left.
std::string extract_code(std::string_view response);

// Hash of the sorted JSON path/type sets of input and target plus the
// template version tag. Values never influence it.
std::string fingerprint_schema(std::string_view doc_text, std::string_view target_text,
                               std::string_view version_tag = {});

struct ConversionModule {
  std::string fingerprint;
  std::string source_code;
  std::string created_from;
  bool validated = false;
};

// Fingerprint -> validated module. Entries are immutable once stored.
class ModuleCache {
 public:
  explicit ModuleCache(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const { return enabled_; }
  std::shared_ptr<const ConversionModule> find(const std::string& fingerprint) const;
  // Stores the module unless one is already present; returns the stored one.
  std::shared_ptr<const ConversionModule> insert(ConversionModule module);
  std::size_t size() const;

 private:
  bool enabled_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const ConversionModule>> modules_;
};

struct PipelineOptions {
  std::optional<Decimal> num_tolerance;  // exact comparison when absent
  llm::CallContext call;
};

struct AttemptOutcome {
  AttemptRecord record;                // entry_id, strategy, result, timing
  std::optional<std::string> output;   // converted document on success
  int backend_calls = 0;
};

AttemptOutcome convert_direct(const ConversionTask& task, llm::Backend& backend, const PromptTemplate& tmpl,
                              const PipelineOptions& options = {});

// With a disabled (or null) cache every attempt asks the backend once.
AttemptOutcome convert_codegen(const ConversionTask& task, llm::Backend& backend, const PromptTemplate& tmpl,
                               sandbox::Sandbox& sandbox, ModuleCache* cache,
                               const PipelineOptions& options = {});

}  // namespace interop::strategy
