#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "interop/core.hpp"
#include "interop/datasetgen.hpp"

namespace interop::llm {

enum class BackendKind { Http, Scripted, Oracle, Noisy };

std::string_view to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view text);

inline constexpr const char* kBackendUrlEnv = "INTEROP_BACKEND_URL";

struct BackendConfig {
  BackendKind kind = BackendKind::Oracle;
  std::string base_url;  // http kind; falls back to $INTEROP_BACKEND_URL
  std::string model_tag;
  double temperature = 0.9;
  std::int64_t request_timeout_ms = 120000;
  std::uint64_t seed = 0;                // noisy kind
  double error_rate = 0.0;               // noisy kind
  std::filesystem::path response_dir;    // scripted kind
  int max_in_flight = 1;                 // http kind, per endpoint

  // Fills base_url from the environment when empty, then checks invariants.
  // Throws std::invalid_argument.
  void resolve_and_validate();
};

enum class StopReason { Done, Length, Error };

struct CompletionResult {
  std::string text;
  StopReason stop_reason = StopReason::Done;
  std::int64_t latency_ms = 0;
};

// Optional per-call information supplied by the caller. A call index pins
// the noisy backend's decision for that call independently of scheduling.
struct CallContext {
  std::optional<std::uint64_t> call_index;
};

// Transport-level failure; kind is Transport, Timeout or ProviderError.
class BackendError : public std::runtime_error {
 public:
  BackendError(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Stateless single-shot completion. Implementations are safe for
// concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(std::string_view prompt, const CallContext& ctx = {}) = 0;
  virtual std::string model_tag() const = 0;
};

// Ollama generate endpoint, non-streaming.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg);
  CompletionResult complete(std::string_view prompt, const CallContext& ctx = {}) override;
  std::string model_tag() const override { return cfg_.model_tag; }

  // Request body sent for a prompt (exposed for inspection).
  std::string request_body(std::string_view prompt) const;

 private:
  BackendConfig cfg_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

// Replies looked up by stable_hash(prompt): first the in-memory table, then
// "<hash>.txt" in the response directory. Unknown prompts are a transport
// error.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::string model_tag, std::filesystem::path response_dir = {});
  void add(std::string_view prompt, std::string reply, StopReason stop = StopReason::Done);
  CompletionResult complete(std::string_view prompt, const CallContext& ctx = {}) override;
  std::string model_tag() const override { return tag_; }

 private:
  std::string tag_;
  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, CompletionResult> table_;
};

// Known-correct stand-in for a perfect model over one dataset. DIRECT
// prompts get the reference conversion of the embedded input; CODEGEN
// prompts get a fenced conversion module for the dataset's version.
class OracleBackend final : public Backend {
 public:
  OracleBackend(const dataset::DatasetManifest& manifest, Strategy strategy, std::string model_tag = "oracle");
  CompletionResult complete(std::string_view prompt, const CallContext& ctx = {}) override;
  std::string model_tag() const override { return tag_; }
  std::uint64_t calls() const { return calls_.load(); }

 private:
  struct Known {
    std::string input_text;
    std::string expected_text;
  };
  std::vector<Known> known_;
  DatasetVersion version_;
  Strategy strategy_;
  std::string tag_;
  std::atomic<std::uint64_t> calls_{0};
};

// Python conversion module (def convert(text) -> str) implementing the
// reference adaptation for a dataset version.
std::string reference_module_source(DatasetVersion version);

enum class Corruption { Truncate, WrongValue, Empty, LengthStop, Transport };

std::string_view to_string(Corruption c);

struct FailureMix {
  double truncate = 1.0;
  double wrong_value = 0.0;
  double empty = 0.0;
  double length_stop = 0.0;
  double transport = 0.0;

  double total() const { return truncate + wrong_value + empty + length_stop + transport; }
};

struct CorruptionEvent {
  std::uint64_t call_index = 0;
  Corruption corruption = Corruption::Truncate;
};

// With probability error_rate (decided from (seed, call index) alone) the
// inner reply is corrupted by a mode drawn from the mix weights.
class NoisyBackend final : public Backend {
 public:
  NoisyBackend(std::shared_ptr<Backend> inner, double error_rate, std::uint64_t seed, FailureMix mix = {});
  CompletionResult complete(std::string_view prompt, const CallContext& ctx = {}) override;
  std::string model_tag() const override { return inner_->model_tag(); }

  // Decision for a call index; nullopt means pass-through.
  std::optional<Corruption> decide(std::uint64_t call_index) const;

  // Injected corruptions so far, sorted by call index.
  std::vector<CorruptionEvent> corruption_log() const;

 private:
  std::shared_ptr<Backend> inner_;
  double error_rate_;
  std::uint64_t seed_;
  FailureMix mix_;
  std::atomic<std::uint64_t> next_index_{0};
  mutable std::mutex mu_;
  std::vector<CorruptionEvent> log_;
};

}  // namespace interop::llm
