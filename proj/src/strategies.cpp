#include "interop/strategies.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include "interop/equivalence.hpp"
#include "interop/hashing.hpp"
#include "interop/json.hpp"

namespace interop::strategy {

namespace {

using Clock = std::chrono::steady_clock;

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

// Content of the first ``` fenced block, label line stripped.
std::optional<std::string_view> first_fence(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto content_start = text.find('\n', open + 3);
  if (content_start == std::string_view::npos) return std::nullopt;
  ++content_start;
  const auto close = text.find("```", content_start);
  if (close == std::string_view::npos) return text.substr(content_start);  // unterminated fence
  return text.substr(content_start, close - content_start);
}

std::optional<std::string_view> balanced_object(std::string_view text) {
  const auto open = text.find('{');
  if (open == std::string_view::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return text.substr(open, i - open + 1);
  }
  return std::nullopt;
}

std::string_view type_label(const json::Value& v) {
  if (v.is_null()) return "null";
  if (v.is_bool()) return "boolean";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "object";
}

void collect_paths(const json::Value& v, const std::string& path, std::set<std::string>& out) {
  out.insert(path + ":" + std::string(type_label(v)));
  if (v.is_array()) {
    for (const auto& item : v.as_array()) collect_paths(item, path + "[]", out);
  } else if (v.is_object()) {
    for (const auto& m : v.as_object()) collect_paths(m.value, path + "." + m.key, out);
  }
}

std::string path_signature(std::string_view text) {
  try {
    std::set<std::string> paths;
    collect_paths(json::parse(text), "$", paths);
    std::string joined;
    for (const auto& p : paths) joined += p + "\n";
    return joined;
  } catch (const json::ParseError&) {
    std::string structural;
    for (const char c : text) {
      if (std::ispunct(static_cast<unsigned char>(c))) {
        structural.push_back(c);
        if (structural.size() == 64) break;
      }
    }
    return "raw:" + structural;
  }
}

std::int64_t ms_since(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t).count();
}

llm::CompletionResult call_backend(llm::Backend& backend, const std::string& prompt, const llm::CallContext& ctx) {
  llm::CompletionResult r;
  try {
    r = backend.complete(prompt, ctx);
  } catch (const llm::BackendError& e) {
    throw StageError(Stage::LlmCall, {e.kind(), e.what()});
  }
  if (r.stop_reason == llm::StopReason::Length) {
    throw StageError(Stage::LlmCall, {ErrorKind::StopLength, "Completion stopped abnormally: length"});
  }
  if (r.stop_reason == llm::StopReason::Error) {
    throw StageError(Stage::LlmCall, {ErrorKind::ProviderError, "backend reported an error stop"});
  }
  return r;
}

equiv::CanonicalDoc parse_document(std::string_view text) {
  if (is_blank(text)) throw StageError(Stage::Parse, {ErrorKind::Empty, "document is empty"});
  try {
    return equiv::canonicalize(text);
  } catch (const json::ParseError& e) {
    throw StageError(Stage::Parse, {ErrorKind::Syntax, e.what()});
  }
}

void compare_with_expected(const equiv::CanonicalDoc& produced, const std::string& expected_text,
                           const std::optional<Decimal>& tolerance) {
  const auto expected = equiv::canonicalize(expected_text);
  const auto cmp = equiv::equivalent(produced, expected, tolerance);
  if (!cmp.equal) {
    throw StageError(Stage::Compare, {ErrorKind::Mismatch, "first difference at " + cmp.path + ": " + cmp.reason});
  }
}

// Without ground truth the output must at least have the target's shape.
void check_shape(std::string_view produced_text, const std::string& target_text) {
  if (path_signature(produced_text) != path_signature(target_text)) {
    throw StageError(Stage::Compare, {ErrorKind::Mismatch, "output structure differs from the target example"});
  }
}

AttemptOutcome failure(Stage stage, const RawError& err) {
  AttemptOutcome o;
  o.record = AttemptRecord::failed(classify_failure(stage, err), err.message);
  return o;
}

}  // namespace

void PromptTemplate::validate() const {
  if (count_occurrences(body, kInputPlaceholder) != 1) {
    throw std::invalid_argument("template must contain {INPUT} exactly once");
  }
  if (count_occurrences(body, kTargetPlaceholder) != 1) {
    throw std::invalid_argument("template must contain {TARGET_EXAMPLE} exactly once");
  }
}

PromptTemplate default_template(Strategy strategy) {
  if (strategy == Strategy::Direct) {
    return PromptTemplate{
        Strategy::Direct,
        "Consider the data below:\n"
        "```\n"
        "{INPUT}\n"
        "```\n"
        "Convert it into the following representation:\n"
        "```\n"
        "{TARGET_EXAMPLE}\n"
        "```\n"
        "The example only shows the structure; take every value from the data above.\n"
        "Output only the converted document, no explanation.\n",
        "direct-1"};
  }
  return PromptTemplate{
      Strategy::Codegen,
      "Consider the data below:\n"
      "```\n"
      "{INPUT}\n"
      "```\n"
      "Write Python 3 code that converts data like this into the following representation:\n"
      "```\n"
      "{TARGET_EXAMPLE}\n"
      "```\n"
      "Define a function named `convert` taking the raw input text as its only parameter and "
      "returning the converted text. Use only the Python Standard Library. Take every value "
      "from the input; the example only shows the structure.\n"
      "Reply with the code in a single fenced code block.\n",
      "codegen-1"};
}

PromptTemplate load_template(const std::filesystem::path& dir, Strategy strategy) {
  const auto path = dir / (strategy == Strategy::Direct ? "direct.txt" : "codegen.txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read prompt template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  PromptTemplate t{strategy, ss.str(), {}};
  t.version_tag = "file-" + stable_hash(t.body).substr(0, 8);
  t.validate();
  return t;
}

std::string build_prompt(const PromptTemplate& t, const ConversionTask& task) {
  std::string out;
  out.reserve(t.body.size() + task.input_text.size() + task.target_example.size());
  std::string_view rest = t.body;
  while (!rest.empty()) {
    const auto in_pos = rest.find(kInputPlaceholder);
    const auto tg_pos = rest.find(kTargetPlaceholder);
    const auto pos = std::min(in_pos, tg_pos);
    if (pos == std::string_view::npos) {
      out.append(rest);
      break;
    }
    out.append(rest.substr(0, pos));
    if (pos == in_pos) {
      out.append(task.input_text);
      rest.remove_prefix(pos + kInputPlaceholder.size());
    } else {
      out.append(task.target_example);
      rest.remove_prefix(pos + kTargetPlaceholder.size());
    }
  }
  return out;
}

std::string extract_json(std::string_view response) {
  if (auto fenced = first_fence(response)) {
    const auto body = trim(*fenced);
    try {
      json::parse(body);
      return std::string(body);
    } catch (const json::ParseError&) {
    }
  }
  if (auto obj = balanced_object(response)) return std::string(*obj);
  return std::string(trim(response));
}

std::string extract_code(std::string_view response) {
  std::string_view code = response;
  if (auto fenced = first_fence(response)) code = *fenced;
  code = trim(code);
  if (code.empty()) throw StageError(Stage::Extraction, {ErrorKind::NoCode, "no code found"});
  return std::string(code) + "\n";
}

std::string fingerprint_schema(std::string_view doc_text, std::string_view target_text,
                               std::string_view version_tag) {
  const std::string material = "input\n" + path_signature(doc_text) + "target\n" + path_signature(target_text) +
                               "template\n" + std::string(version_tag);
  return stable_hash(material);
}

std::shared_ptr<const ConversionModule> ModuleCache::find(const std::string& fingerprint) const {
  std::lock_guard lock(mu_);
  auto it = modules_.find(fingerprint);
  return it == modules_.end() ? nullptr : it->second;
}

std::shared_ptr<const ConversionModule> ModuleCache::insert(ConversionModule module) {
  std::lock_guard lock(mu_);
  auto key = module.fingerprint;
  auto [it, inserted] = modules_.try_emplace(std::move(key), nullptr);
  if (inserted) it->second = std::make_shared<const ConversionModule>(std::move(module));
  return it->second;
}

std::size_t ModuleCache::size() const {
  std::lock_guard lock(mu_);
  return modules_.size();
}

AttemptOutcome convert_direct(const ConversionTask& task, llm::Backend& backend, const PromptTemplate& tmpl,
                              const PipelineOptions& options) {
  task.validate();
  const auto start = Clock::now();
  AttemptOutcome outcome;
  Stage stage = Stage::LlmCall;
  try {
    const std::string prompt = build_prompt(tmpl, task);
    outcome.backend_calls = 1;
    const auto reply = call_backend(backend, prompt, options.call);

    stage = Stage::Extraction;
    const std::string doc_text = extract_json(reply.text);

    stage = Stage::Parse;
    const auto produced = parse_document(doc_text);

    stage = Stage::Compare;
    if (task.expected_text) compare_with_expected(produced, *task.expected_text, options.num_tolerance);

    outcome.record = AttemptRecord::succeeded();
    outcome.output = doc_text;
  } catch (const StageError& e) {
    const int calls = outcome.backend_calls;
    outcome = failure(e.stage(), e.error());
    outcome.backend_calls = calls;
  } catch (const std::exception& e) {
    const int calls = outcome.backend_calls;
    outcome = failure(stage, {ErrorKind::Unknown, e.what()});
    outcome.backend_calls = calls;
  }
  outcome.record.entry_id = task.entry_id;
  outcome.record.strategy = Strategy::Direct;
  outcome.record.duration_ms = ms_since(start);
  return outcome;
}

AttemptOutcome convert_codegen(const ConversionTask& task, llm::Backend& backend, const PromptTemplate& tmpl,
                               sandbox::Sandbox& sandbox, ModuleCache* cache, const PipelineOptions& options) {
  task.validate();
  const auto start = Clock::now();
  const bool caching = cache != nullptr && cache->enabled();
  AttemptOutcome outcome;
  bool cache_hit = false;
  Stage stage = Stage::LlmCall;
  try {
    const std::string fingerprint = fingerprint_schema(task.input_text, task.target_example, tmpl.version_tag);
    std::shared_ptr<const ConversionModule> cached = caching ? cache->find(fingerprint) : nullptr;
    std::string source;
    if (cached) {
      cache_hit = true;
      source = cached->source_code;
    } else {
      const std::string prompt = build_prompt(tmpl, task);
      outcome.backend_calls = 1;
      const auto reply = call_backend(backend, prompt, options.call);
      stage = Stage::Extraction;
      source = extract_code(reply.text);
    }

    stage = Stage::Execute;
    const auto exec = sandbox.execute(source, task.input_text);
    const std::string diag = exec.stderr_text.empty() ? std::string(sandbox::to_string(exec.status))
                                                      : std::string(sandbox::to_string(exec.status)) + ": " + exec.stderr_text;
    switch (exec.status) {
      case sandbox::ExecStatus::Ok:
        break;
      case sandbox::ExecStatus::CompileError:
        throw StageError(Stage::Compile, {ErrorKind::CompileFailed, diag});
      case sandbox::ExecStatus::MissingEntrypoint:
        throw StageError(Stage::Compile, {ErrorKind::MissingEntrypoint, diag});
      case sandbox::ExecStatus::Timeout:
        throw StageError(Stage::Execute, {ErrorKind::ExecTimeout, diag});
      case sandbox::ExecStatus::OutputOverflow:
        throw StageError(Stage::Execute, {ErrorKind::OutputOverflow, diag});
      case sandbox::ExecStatus::RuntimeError:
        throw StageError(Stage::Execute, {ErrorKind::RuntimeFailed, diag});
    }
    if (is_blank(exec.stdout_text)) throw StageError(Stage::Execute, {ErrorKind::Empty, "Data is empty"});

    stage = Stage::Extraction;
    const std::string doc_text = extract_json(exec.stdout_text);

    stage = Stage::Parse;
    const auto produced = parse_document(doc_text);

    stage = Stage::Compare;
    if (task.expected_text) {
      compare_with_expected(produced, *task.expected_text, options.num_tolerance);
    } else {
      check_shape(doc_text, task.target_example);
    }

    if (caching && !cache_hit) {
      cache->insert(ConversionModule{fingerprint, source, task.entry_id, true});
    }
    outcome.record = AttemptRecord::succeeded();
    outcome.output = doc_text;
  } catch (const StageError& e) {
    const int calls = outcome.backend_calls;
    outcome = failure(e.stage(), e.error());
    outcome.backend_calls = calls;
  } catch (const std::exception& e) {
    const int calls = outcome.backend_calls;
    outcome = failure(stage, {ErrorKind::Unknown, e.what()});
    outcome.backend_calls = calls;
  }
  outcome.record.entry_id = task.entry_id;
  outcome.record.strategy = Strategy::Codegen;
  outcome.record.cache_hit = cache_hit;
  outcome.record.duration_ms = ms_since(start);
  return outcome;
}

}  // namespace interop::strategy
