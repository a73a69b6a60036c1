#include "interop/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace interop::sandbox {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    reset();
    fd_ = std::exchange(o.fd_, -1);
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw std::system_error(errno, std::generic_category(), "pipe2");
  return Pipe{Fd(fds[0]), Fd(fds[1])};
}

class TempDir {
 public:
  explicit TempDir(const fs::path& root) {
    std::string tmpl = ((root.empty() ? fs::temp_directory_path() : root) / "interop-sbx-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw std::system_error(errno, std::generic_category(), "mkdtemp");
    }
    path_ = tmpl;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

std::int64_t ms_since(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t).count();
}

ExecutionResult failed_spawn(const std::string& what, Clock::time_point start) {
  ExecutionResult r;
  r.status = ExecStatus::RuntimeError;
  r.stderr_text = "sandbox: " + what;
  r.duration_ms = ms_since(start);
  return r;
}

constexpr int kExecFailedExit = 127;

}  // namespace

std::string_view to_string(ExecStatus s) {
  switch (s) {
    case ExecStatus::Ok: return "ok";
    case ExecStatus::CompileError: return "compile_error";
    case ExecStatus::RuntimeError: return "runtime_error";
    case ExecStatus::Timeout: return "timeout";
    case ExecStatus::OutputOverflow: return "output_overflow";
    case ExecStatus::MissingEntrypoint: return "missing_entrypoint";
  }
  return "";
}

ExecStatus status_for_exit_code(int code) {
  switch (code) {
    case kExitOk: return ExecStatus::Ok;
    case kExitCompileError: return ExecStatus::CompileError;
    case kExitRuntimeError: return ExecStatus::RuntimeError;
    case kExitMissingEntrypoint: return ExecStatus::MissingEntrypoint;
    default: return ExecStatus::RuntimeError;
  }
}

std::optional<int> exit_code_for(ExecStatus status) {
  switch (status) {
    case ExecStatus::Ok: return kExitOk;
    case ExecStatus::CompileError: return kExitCompileError;
    case ExecStatus::RuntimeError: return kExitRuntimeError;
    case ExecStatus::MissingEntrypoint: return kExitMissingEntrypoint;
    default: return std::nullopt;
  }
}

std::vector<std::string> default_runner_command() {
  if (const char* env = std::getenv(kRunnerEnv); env != nullptr && *env != '\0') {
    std::vector<std::string> out;
    std::istringstream ss(env);
    for (std::string tok; ss >> tok;) out.push_back(tok);
    if (!out.empty()) return out;
  }
  return {"interop-runner"};
}

ExecutionResult execute_module(std::string_view source_code, std::string_view input_text,
                               const SandboxLimits& limits, const std::vector<std::string>& runner_command) {
  ignore_sigpipe();
  const auto start = Clock::now();
  if (source_code.empty()) throw std::invalid_argument("empty module source");
  if (runner_command.empty()) throw std::invalid_argument("empty runner command");
  if (limits.wall_timeout_ms <= 0) throw std::invalid_argument("wall timeout must be positive");

  std::optional<TempDir> dir;
  try {
    dir.emplace(limits.work_root);
  } catch (const std::exception& e) {
    return failed_spawn(e.what(), start);
  }
  const fs::path module_path = dir->path() / kModuleFileName;
  {
    std::ofstream out(module_path, std::ios::binary);
    out << source_code;
    if (!out) return failed_spawn("cannot write module to " + module_path.string(), start);
  }

  std::vector<std::string> args = runner_command;
  args.push_back(module_path.string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  const std::string workdir = dir->path().string();

  Pipe in, out, err;
  try {
    in = make_pipe();
    out = make_pipe();
    err = make_pipe();
  } catch (const std::exception& e) {
    return failed_spawn(e.what(), start);
  }

  const pid_t pid = ::fork();
  if (pid < 0) return failed_spawn(std::string("fork: ") + std::strerror(errno), start);
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(workdir.c_str()) != 0) ::_exit(kExecFailedExit);
    ::dup2(in.read.get(), STDIN_FILENO);
    ::dup2(out.write.get(), STDOUT_FILENO);
    ::dup2(err.write.get(), STDERR_FILENO);
    ::execvp(argv[0], argv.data());
    const char msg[] = "sandbox: exec failed\n";
    [[maybe_unused]] auto n = ::write(STDERR_FILENO, msg, sizeof(msg) - 1);
    ::_exit(kExecFailedExit);
  }
  ::setpgid(pid, pid);  // also set from the parent to close the race with kill()

  in.read.reset();
  out.write.reset();
  err.write.reset();
  set_nonblocking(in.write.get());
  set_nonblocking(out.read.get());
  set_nonblocking(err.read.get());

  ExecutionResult result;
  std::size_t written = 0;
  bool timed_out = false;
  bool overflow = false;
  if (input_text.empty()) in.write.reset();

  char buf[65536];
  const auto deadline = start + std::chrono::milliseconds(limits.wall_timeout_ms);
  while (out.read.get() >= 0 || err.read.get() >= 0) {
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[3];
    nfds_t n = 0;
    int out_slot = -1, err_slot = -1, in_slot = -1;
    if (out.read.get() >= 0) {
      out_slot = static_cast<int>(n);
      fds[n++] = {out.read.get(), POLLIN, 0};
    }
    if (err.read.get() >= 0) {
      err_slot = static_cast<int>(n);
      fds[n++] = {err.read.get(), POLLIN, 0};
    }
    if (in.write.get() >= 0) {
      in_slot = static_cast<int>(n);
      fds[n++] = {in.write.get(), POLLOUT, 0};
    }
    const int rc = ::poll(fds, n, static_cast<int>(std::min<std::int64_t>(remaining, 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t w = ::write(in.write.get(), input_text.data() + written, input_text.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN) in.write.reset();
      if (written == input_text.size()) in.write.reset();
    }
    auto drain = [&](int slot, Fd& fd, std::string& sink, bool limited) {
      if (slot < 0 || !(fds[slot].revents & (POLLIN | POLLHUP | POLLERR))) return;
      const ssize_t r = ::read(fd.get(), buf, sizeof(buf));
      if (r > 0) {
        sink.append(buf, static_cast<std::size_t>(r));
        if (limited && sink.size() > limits.max_output_bytes) overflow = true;
        if (!limited && sink.size() > limits.max_output_bytes) sink.resize(limits.max_output_bytes);
      } else if (r == 0 || errno != EAGAIN) {
        fd.reset();
      }
    };
    drain(out_slot, out.read, result.stdout_text, true);
    drain(err_slot, err.read, result.stderr_text, false);
    if (overflow) break;
  }

  int status = 0;
  if (timed_out || overflow) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
  } else {
    // Output channels closed; give the child until the deadline to exit.
    while (true) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (w < 0 && errno != EINTR) break;
      if (Clock::now() >= deadline) {
        timed_out = true;
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ::kill(-pid, SIGKILL);  // stray grandchildren
  }
  result.duration_ms = ms_since(start);

  if (timed_out) {
    result.status = ExecStatus::Timeout;
    result.stderr_text += "\nsandbox: killed after " + std::to_string(limits.wall_timeout_ms) + " ms";
    return result;
  }
  if (overflow) {
    result.status = ExecStatus::OutputOverflow;
    result.stdout_text.resize(limits.max_output_bytes);
    result.stderr_text += "\nsandbox: stdout exceeded " + std::to_string(limits.max_output_bytes) + " bytes";
    return result;
  }
  if (WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    result.status = status_for_exit_code(result.exit_code);
    if (result.exit_code == kExecFailedExit) result.stderr_text += "\nsandbox: could not start runner";
  } else {
    result.status = ExecStatus::RuntimeError;
    if (WIFSIGNALED(status)) result.stderr_text += "\nsandbox: terminated by signal " + std::to_string(WTERMSIG(status));
  }
  return result;
}

Sandbox::Sandbox(std::vector<std::string> runner_command, SandboxLimits limits, int max_concurrent)
    : runner_(std::move(runner_command)), limits_(std::move(limits)), max_concurrent_(max_concurrent) {
  if (max_concurrent_ <= 0) max_concurrent_ = std::max(1u, std::thread::hardware_concurrency());
}

ExecutionResult Sandbox::execute(std::string_view source_code, std::string_view input_text) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return running_ < max_concurrent_; });
    ++running_;
  }
  struct Release {
    Sandbox* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->running_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return execute_module(source_code, input_text, limits_, runner_);
}

}  // namespace interop::sandbox
