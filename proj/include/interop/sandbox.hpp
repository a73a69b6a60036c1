#pragma once

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace interop::sandbox {

struct SandboxLimits {
  std::int64_t wall_timeout_ms = 30000;
  std::size_t max_output_bytes = 10u << 20;
  // Parent for the per-execution ephemeral directories; empty = system temp.
  std::filesystem::path work_root;
};

enum class ExecStatus { Ok, CompileError, RuntimeError, Timeout, OutputOverflow, MissingEntrypoint };

std::string_view to_string(ExecStatus s);

// Runner exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCompileError = 3;
inline constexpr int kExitRuntimeError = 4;
inline constexpr int kExitMissingEntrypoint = 5;

// Bijective over {0, 3, 4, 5}; any other exit code is a runtime error.
ExecStatus status_for_exit_code(int code);
std::optional<int> exit_code_for(ExecStatus status);

struct ExecutionResult {
  ExecStatus status = ExecStatus::RuntimeError;
  std::string stdout_text;
  std::string stderr_text;
  std::int64_t duration_ms = 0;
  int exit_code = -1;  // -1 when killed or never started
};

// Name the module is written under inside the ephemeral directory.
inline constexpr const char* kModuleFileName = "conversion_module.py";

inline constexpr const char* kRunnerEnv = "INTEROP_RUNNER";

// Runner command from $INTEROP_RUNNER (whitespace separated), else
// {"interop-runner"}.
std::vector<std::string> default_runner_command();

// Writes the module into a fresh directory, runs `<runner...> <module-path>`
// with input_text on stdin, and enforces the wall timeout by killing the
// child's process group. The directory is removed before returning.
ExecutionResult execute_module(std::string_view source_code, std::string_view input_text,
                               const SandboxLimits& limits, const std::vector<std::string>& runner_command);

// Thread-safe front end that bounds the number of concurrent children.
class Sandbox {
 public:
  Sandbox(std::vector<std::string> runner_command, SandboxLimits limits = {}, int max_concurrent = 0);

  ExecutionResult execute(std::string_view source_code, std::string_view input_text);

  const SandboxLimits& limits() const { return limits_; }
  const std::vector<std::string>& runner_command() const { return runner_; }

 private:
  std::vector<std::string> runner_;
  SandboxLimits limits_;
  int max_concurrent_;
  std::mutex mu_;
  std::condition_variable cv_;
  int running_ = 0;
};

}  // namespace interop::sandbox
