#include "interop/llmclient.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "interop/hashing.hpp"

namespace interop::llm {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double unit_interval(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Http: return "http";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Noisy: return "noisy";
  }
  return "";
}

std::optional<BackendKind> parse_backend_kind(std::string_view text) {
  for (const auto k : {BackendKind::Http, BackendKind::Scripted, BackendKind::Oracle, BackendKind::Noisy}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void BackendConfig::resolve_and_validate() {
  if (base_url.empty()) {
    if (const char* env = std::getenv(kBackendUrlEnv); env != nullptr) base_url = env;
  }
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (request_timeout_ms <= 0) throw std::invalid_argument("request timeout must be positive");
  if (!(error_rate >= 0.0 && error_rate <= 1.0)) throw std::invalid_argument("error rate must lie in [0, 1]");
  if (kind == BackendKind::Http) {
    if (base_url.empty()) throw std::invalid_argument("http backend needs a base url (--backend-url or INTEROP_BACKEND_URL)");
    if (model_tag.empty()) throw std::invalid_argument("http backend needs a model tag");
  }
  if (max_in_flight < 1) throw std::invalid_argument("max in-flight requests must be >= 1");
}

// ---------------------------------------------------------------------------
// HTTP

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.resolve_and_validate();
  std::string url = cfg_.base_url;
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) {
    scheme_host_port_ = url;
  } else {
    scheme_host_port_ = url.substr(0, path_start);
    path_prefix_ = url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

std::string HttpBackend::request_body(std::string_view prompt) const {
  nlohmann::ordered_json body;
  body["model"] = cfg_.model_tag;
  body["prompt"] = std::string(prompt);
  body["stream"] = false;
  body["options"] = {{"temperature", cfg_.temperature}};
  return body.dump();
}

CompletionResult HttpBackend::complete(std::string_view prompt, const CallContext&) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");

  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < cfg_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    HttpBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  // A fresh client per call: no keep-alive session or other state is shared.
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::milliseconds(cfg_.request_timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_keep_alive(false);

  const auto start = Clock::now();
  auto res = client.Post(path_prefix_ + "/api/generate", request_body(prompt), "application/json");
  const auto latency = elapsed_ms(start);

  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                           ((err == httplib::Error::Read || err == httplib::Error::Write) &&
                            latency + 50 >= cfg_.request_timeout_ms);
    if (timed_out) {
      throw BackendError(ErrorKind::Timeout, "request timed out after " + std::to_string(latency) + " ms");
    }
    throw BackendError(ErrorKind::Transport, "transport error: " + httplib::to_string(err));
  }

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(res->status == 200 ? ErrorKind::Transport : ErrorKind::ProviderError,
                       "HTTP " + std::to_string(res->status) + ", unreadable body: " + e.what());
  }
  if (res->status != 200 || body.contains("error")) {
    std::string msg = body.contains("error") && body["error"].is_string() ? body["error"].get<std::string>()
                                                                           : res->body;
    throw BackendError(ErrorKind::ProviderError, "HTTP " + std::to_string(res->status) + ": " + msg);
  }
  if (!body.contains("response") || !body["response"].is_string()) {
    throw BackendError(ErrorKind::ProviderError, "response field missing");
  }

  CompletionResult out;
  out.text = body["response"].get<std::string>();
  out.latency_ms = latency;
  const std::string reason = body.value("done_reason", std::string("stop"));
  out.stop_reason = reason == "length" ? StopReason::Length : StopReason::Done;
  return out;
}

// ---------------------------------------------------------------------------
// Scripted

ScriptedBackend::ScriptedBackend(std::string model_tag, std::filesystem::path response_dir)
    : tag_(std::move(model_tag)), dir_(std::move(response_dir)) {}

void ScriptedBackend::add(std::string_view prompt, std::string reply, StopReason stop) {
  std::lock_guard lock(mu_);
  table_[stable_hash(prompt)] = CompletionResult{std::move(reply), stop, 0};
}

CompletionResult ScriptedBackend::complete(std::string_view prompt, const CallContext&) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  const std::string key = stable_hash(prompt);
  {
    std::lock_guard lock(mu_);
    if (auto it = table_.find(key); it != table_.end()) return it->second;
  }
  if (!dir_.empty()) {
    std::ifstream in(dir_ / (key + ".txt"), std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      return CompletionResult{ss.str(), StopReason::Done, 0};
    }
  }
  throw BackendError(ErrorKind::Transport, "no scripted reply for prompt " + key);
}

// ---------------------------------------------------------------------------
// Oracle

OracleBackend::OracleBackend(const dataset::DatasetManifest& manifest, Strategy strategy, std::string model_tag)
    : version_(manifest.version), strategy_(strategy), tag_(std::move(model_tag)) {
  known_.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) known_.push_back({e.input_text, e.expected_text});
}

CompletionResult OracleBackend::complete(std::string_view prompt, const CallContext&) {
  if (prompt.empty()) throw std::invalid_argument("empty prompt");
  calls_.fetch_add(1);
  const auto it = std::find_if(known_.begin(), known_.end(),
                               [&](const Known& k) { return prompt.find(k.input_text) != std::string_view::npos; });
  if (it == known_.end()) throw BackendError(ErrorKind::Transport, "oracle: prompt embeds no known input");
  if (strategy_ == Strategy::Direct) return CompletionResult{it->expected_text, StopReason::Done, 0};
  return CompletionResult{"```python\n" + reference_module_source(version_) + "```\n", StopReason::Done, 0};
}

std::string reference_module_source(DatasetVersion version) {
  std::string props;
  switch (version) {
    case DatasetVersion::V1:
      break;
    case DatasetVersion::V2:
      props = "    properties[\"id\"] = boundary[\"id\"]\n";
      break;
    case DatasetVersion::V3:
      props =
          "    properties[\"id\"] = boundary[\"id\"]\n"
          "    properties[\"area_ha\"] = boundary[\"area\"][\"valueAsDouble\"]\n";
      break;
    case DatasetVersion::V4:
      props =
          "    properties[\"id\"] = boundary[\"id\"]\n"
          "    properties[\"area_acres\"] = boundary[\"area\"][\"valueAsDouble\"] * ACRES_PER_HECTARE\n";
      break;
  }
  return
      "import json\n"
      "from decimal import Decimal, getcontext\n"
      "\n"
      "getcontext().prec = 200\n"
      "ACRES_PER_HECTARE = Decimal(\"2.471053814671653\")\n"
      "\n"
      "\n"
      "def _dump(value):\n"
      "    if isinstance(value, Decimal):\n"
      "        return str(value)\n"
      "    if isinstance(value, dict):\n"
      "        return \"{\" + \", \".join(json.dumps(k) + \": \" + _dump(v) for k, v in value.items()) + \"}\"\n"
      "    if isinstance(value, list):\n"
      "        return \"[\" + \", \".join(_dump(v) for v in value) + \"]\"\n"
      "    return json.dumps(value)\n"
      "\n"
      "\n"
      "def convert(text):\n"
      "    doc = json.loads(text, parse_float=Decimal)\n"
      "    boundary = doc[\"values\"][0]\n"
      "    polygons = []\n"
      "    for polygon in boundary[\"multipolygons\"]:\n"
      "        rings = []\n"
      "        for ring in polygon[\"rings\"]:\n"
      "            rings.append([[p[\"lon\"], p[\"lat\"]] for p in ring[\"points\"]])\n"
      "        polygons.append(rings)\n"
      "    properties = {}\n" +
      props +
      "    if len(polygons) == 1:\n"
      "        geometry = {\"type\": \"Polygon\", \"coordinates\": polygons[0]}\n"
      "    else:\n"
      "        geometry = {\"type\": \"MultiPolygon\", \"coordinates\": polygons}\n"
      "    feature = {\"type\": \"Feature\", \"properties\": properties, \"geometry\": geometry}\n"
      "    return _dump({\"type\": \"FeatureCollection\", \"features\": [feature]})\n";
}

// ---------------------------------------------------------------------------
// Noisy

std::string_view to_string(Corruption c) {
  switch (c) {
    case Corruption::Truncate: return "truncate";
    case Corruption::WrongValue: return "wrong-value";
    case Corruption::Empty: return "empty";
    case Corruption::LengthStop: return "length-stop";
    case Corruption::Transport: return "transport";
  }
  return "";
}

NoisyBackend::NoisyBackend(std::shared_ptr<Backend> inner, double error_rate, std::uint64_t seed, FailureMix mix)
    : inner_(std::move(inner)), error_rate_(error_rate), seed_(seed), mix_(mix) {
  if (!inner_) throw std::invalid_argument("noisy backend needs an inner backend");
  if (!(error_rate_ >= 0.0 && error_rate_ <= 1.0)) throw std::invalid_argument("error rate must lie in [0, 1]");
  if (mix_.truncate < 0 || mix_.wrong_value < 0 || mix_.empty < 0 || mix_.length_stop < 0 || mix_.transport < 0 ||
      !(mix_.total() > 0.0)) {
    throw std::invalid_argument("failure mix needs non-negative weights with a positive sum");
  }
}

std::optional<Corruption> NoisyBackend::decide(std::uint64_t call_index) const {
  const std::uint64_t base = mix64(seed_ ^ mix64(call_index));
  const double u = unit_interval(base);
  if (!(u < error_rate_)) return std::nullopt;
  double pick = unit_interval(mix64(base)) * mix_.total();
  const std::pair<double, Corruption> table[] = {
      {mix_.truncate, Corruption::Truncate},      {mix_.wrong_value, Corruption::WrongValue},
      {mix_.empty, Corruption::Empty},            {mix_.length_stop, Corruption::LengthStop},
      {mix_.transport, Corruption::Transport},
  };
  Corruption last = Corruption::Truncate;
  for (const auto& [weight, mode] : table) {
    if (weight <= 0.0) continue;
    last = mode;
    if (pick < weight) return mode;
    pick -= weight;
  }
  return last;
}

namespace {

std::string corrupt_value(std::string text) {
  for (char& c : text) {
    if (c >= '0' && c <= '9') {
      // Never turns a leading digit into '0', so numbers stay well-formed.
      c = c == '9' ? '8' : static_cast<char>(c + 1);
      return text;
    }
  }
  for (char& c : text) {
    if (c >= 'a' && c <= 'z') {
      c = c == 'z' ? 'y' : static_cast<char>(c + 1);
      return text;
    }
  }
  return text + " ";
}

}  // namespace

CompletionResult NoisyBackend::complete(std::string_view prompt, const CallContext& ctx) {
  const std::uint64_t index = ctx.call_index ? *ctx.call_index : next_index_.fetch_add(1);
  const auto decision = decide(index);
  if (decision) {
    std::lock_guard lock(mu_);
    log_.push_back({index, *decision});
  }
  if (decision == Corruption::Transport) {
    throw BackendError(ErrorKind::Transport, "injected transport error (call " + std::to_string(index) + ")");
  }

  CompletionResult r = inner_->complete(prompt, ctx);
  if (!decision) return r;
  switch (*decision) {
    case Corruption::Truncate:
      r.text = r.text.substr(0, std::max<std::size_t>(1, r.text.size() / 2));
      break;
    case Corruption::WrongValue:
      r.text = corrupt_value(std::move(r.text));
      break;
    case Corruption::Empty:
      r.text.clear();
      break;
    case Corruption::LengthStop:
      r.text = r.text.substr(0, r.text.size() / 2);
      r.stop_reason = StopReason::Length;
      break;
    case Corruption::Transport:
      break;
  }
  return r;
}

std::vector<CorruptionEvent> NoisyBackend::corruption_log() const {
  std::lock_guard lock(mu_);
  auto out = log_;
  std::sort(out.begin(), out.end(),
            [](const CorruptionEvent& a, const CorruptionEvent& b) { return a.call_index < b.call_index; });
  return out;
}

}  // namespace interop::llm
