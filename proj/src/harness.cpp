#include "interop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "interop/hashing.hpp"

namespace interop::harness {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

bool record_less(const AttemptRecord& a, const AttemptRecord& b) {
  const CellKey ka{a.dataset_version, a.model_tag, a.strategy};
  const CellKey kb{b.dataset_version, b.model_tag, b.strategy};
  if (ka != kb) return ka < kb;
  if (a.entry_id != b.entry_id) return a.entry_id < b.entry_id;
  return a.run_index < b.run_index;
}

bool ends_mid_line(const fs::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in || in.tellg() <= 0) return false;
  in.seekg(-1, std::ios::end);
  return in.get() != '\n';
}

void write_meta(const fs::path& path, const CellKey& key, const CellMeta& meta) {
  nlohmann::ordered_json j;
  j["dataset_version"] = std::string(to_string(key.version));
  j["model_tag"] = key.model_tag;
  j["strategy"] = std::string(to_string(key.strategy));
  j["entries"] = meta.entries;
  j["runs"] = meta.runs;
  write_text(path, j.dump(2) + "\n");
}

}  // namespace

std::size_t ExperimentGrid::total_attempts() const {
  std::size_t entries = 0;
  for (const auto& d : datasets) entries += d.entries.size();
  return entries * strategies.size() * backends.size() * static_cast<std::size_t>(runs);
}

std::string to_string(const CellKey& key) {
  return std::string(to_string(key.version)) + ":" + key.model_tag + ":" + lower(to_string(key.strategy));
}

std::optional<CellKey> parse_cell_key(std::string_view text) {
  const auto first = text.find(':');
  const auto last = text.rfind(':');
  if (first == std::string_view::npos || first == last) return std::nullopt;
  auto version = parse_dataset_version(text.substr(0, first));
  auto strategy = parse_strategy(text.substr(last + 1));
  std::string model(text.substr(first + 1, last - first - 1));
  if (!version || !strategy || model.empty()) return std::nullopt;
  return CellKey{*version, std::move(model), *strategy};
}

std::string cell_file_stem(const CellKey& key) {
  std::string model;
  bool changed = false;
  for (const char c : key.model_tag) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') {
      model.push_back(c);
    } else {
      model.push_back('_');
      changed = true;
    }
  }
  if (changed) model += "-" + stable_hash(key.model_tag).substr(0, 8);
  return std::string(to_string(key.version)) + "__" + model + "__" + lower(to_string(key.strategy));
}

std::string to_json_line(const AttemptRecord& r) {
  nlohmann::ordered_json j;
  j["dataset_version"] = std::string(to_string(r.dataset_version));
  j["entry_id"] = r.entry_id;
  j["model_tag"] = r.model_tag;
  j["strategy"] = std::string(to_string(r.strategy));
  j["run"] = r.run_index;
  j["success"] = r.success;
  j["failure_cause"] = r.failure_cause ? nlohmann::ordered_json(std::string(to_csv(*r.failure_cause)))
                                       : nlohmann::ordered_json(nullptr);
  j["detail"] = r.detail;
  j["duration_ms"] = r.duration_ms;
  j["cache_hit"] = r.cache_hit;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::optional<AttemptRecord> from_json_line(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    AttemptRecord r;
    auto version = parse_dataset_version(j.at("dataset_version").get<std::string>());
    auto strategy = parse_strategy(j.at("strategy").get<std::string>());
    if (!version || !strategy) return std::nullopt;
    r.dataset_version = *version;
    r.strategy = *strategy;
    r.entry_id = j.at("entry_id").get<std::string>();
    r.model_tag = j.at("model_tag").get<std::string>();
    r.run_index = j.at("run").get<int>();
    r.success = j.at("success").get<bool>();
    if (!j.at("failure_cause").is_null()) {
      r.failure_cause = parse_failure_cause(j.at("failure_cause").get<std::string>());
      if (!r.failure_cause) return std::nullopt;
    }
    if (r.success == r.failure_cause.has_value()) return std::nullopt;
    r.detail = j.value("detail", std::string{});
    r.duration_ms = j.value("duration_ms", std::int64_t{0});
    r.cache_hit = j.value("cache_hit", false);
    return r;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::vector<AttemptRecord> load_records(const fs::path& results_dir) {
  std::vector<AttemptRecord> out;
  std::error_code ec;
  if (!fs::is_directory(results_dir, ec)) return out;
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(results_dir)) {
    if (item.is_regular_file() && item.path().extension() == ".jsonl") files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      if (auto r = from_json_line(line)) out.push_back(std::move(*r));
    }
  }
  return out;
}

std::map<CellKey, CellMeta> load_meta(const fs::path& results_dir) {
  std::map<CellKey, CellMeta> out;
  std::error_code ec;
  if (!fs::is_directory(results_dir, ec)) return out;
  for (const auto& item : fs::directory_iterator(results_dir)) {
    const std::string name = item.path().filename().string();
    if (!item.is_regular_file() || name.size() < 10 || name.substr(name.size() - 10) != ".meta.json") continue;
    try {
      std::ifstream in(item.path());
      const auto j = nlohmann::json::parse(in);
      auto version = parse_dataset_version(j.at("dataset_version").get<std::string>());
      auto strategy = parse_strategy(j.at("strategy").get<std::string>());
      if (!version || !strategy) continue;
      out[CellKey{*version, j.at("model_tag").get<std::string>(), *strategy}] =
          CellMeta{j.at("entries").get<std::int64_t>(), j.at("runs").get<int>()};
    } catch (const std::exception&) {
      continue;
    }
  }
  return out;
}

GridReport run_grid(const ExperimentGrid& grid, const GridOptions& options) {
  if (grid.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (grid.results_dir.empty()) throw std::invalid_argument("results directory required");
  const bool needs_sandbox =
      std::find(grid.strategies.begin(), grid.strategies.end(), Strategy::Codegen) != grid.strategies.end();
  if (needs_sandbox && options.sandbox == nullptr) throw std::invalid_argument("CODEGEN needs a sandbox");
  fs::create_directories(grid.results_dir);

  const auto direct_tmpl = options.direct_template.value_or(strategy::default_template(Strategy::Direct));
  const auto codegen_tmpl = options.codegen_template.value_or(strategy::default_template(Strategy::Codegen));
  direct_tmpl.validate();
  codegen_tmpl.validate();

  std::set<AttemptRecord::Key> done;
  for (const auto& r : load_records(grid.results_dir)) done.insert(r.key());
  const auto old_meta = load_meta(grid.results_dir);

  GridReport report;
  std::atomic<std::size_t> launched{0};
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> calls{0};
  const int jobs = std::max(1, options.jobs);

  for (const auto& manifest : grid.datasets) {
    for (const auto strat : grid.strategies) {
      for (const auto& be : grid.backends) {
        if (stop) break;
        const CellKey key{manifest.version, be.model_tag, strat};
        const auto stem = cell_file_stem(key);
        CellMeta meta{static_cast<std::int64_t>(manifest.entries.size()), grid.runs};
        if (auto it = old_meta.find(key); it != old_meta.end()) meta.runs = std::max(meta.runs, it->second.runs);
        write_meta(grid.results_dir / (stem + ".meta.json"), key, meta);

        const auto records_path = grid.results_dir / (stem + ".jsonl");
        const bool torn_tail = ends_mid_line(records_path);
        std::ofstream sink(records_path, std::ios::binary | std::ios::app);
        if (!sink) throw std::runtime_error("cannot append to results for " + to_string(key));
        // An interrupted write leaves a partial line; start on a fresh one.
        if (torn_tail) sink << '\n';
        std::mutex sink_mu;

        std::shared_ptr<llm::Backend> backend = be.make(manifest, strat);
        const auto& tmpl = strat == Strategy::Direct ? direct_tmpl : codegen_tmpl;
        const std::size_t n_entries = manifest.entries.size();

        for (int run = 1; run <= grid.runs && !stop; ++run) {
          std::vector<std::size_t> pending;
          for (std::size_t i = 0; i < n_entries; ++i) {
            const AttemptRecord::Key k{key.version, manifest.entries[i].prefix, key.model_tag, strat, run};
            if (done.count(k) != 0) {
              ++report.skipped;
            } else {
              pending.push_back(i);
            }
          }

          std::atomic<std::size_t> next{0};
          auto worker = [&] {
            while (!stop) {
              const std::size_t slot = next.fetch_add(1);
              if (slot >= pending.size()) return;
              if (options.max_attempts && launched.fetch_add(1) >= *options.max_attempts) {
                stop = true;
                return;
              }
              const auto& entry = manifest.entries[pending[slot]];
              ConversionTask task{entry.prefix, entry.input_text, manifest.target_text, entry.expected_text};
              strategy::PipelineOptions popts;
              popts.num_tolerance = options.num_tolerance;
              popts.call.call_index = static_cast<std::uint64_t>(run - 1) * n_entries + pending[slot];

              auto outcome = strat == Strategy::Direct
                                 ? strategy::convert_direct(task, *backend, tmpl, popts)
                                 : strategy::convert_codegen(task, *backend, tmpl, *options.sandbox, nullptr, popts);
              calls += static_cast<std::uint64_t>(outcome.backend_calls);
              AttemptRecord& rec = outcome.record;
              rec.dataset_version = key.version;
              rec.model_tag = key.model_tag;
              rec.run_index = run;

              std::lock_guard lock(sink_mu);
              sink << to_json_line(rec) << '\n';
              sink.flush();
              ++report.attempted;
              if (options.on_record) options.on_record(rec);
            }
          };

          const int n_threads = std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(1, pending.size())));
          if (n_threads <= 1) {
            worker();
          } else {
            std::vector<std::jthread> pool;
            for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
          }
        }
      }
    }
  }
  report.backend_calls = calls;
  report.interrupted = stop;
  return report;
}

std::vector<CellSummary> summarize(const std::vector<AttemptRecord>& records,
                                   const std::map<CellKey, CellMeta>& meta) {
  std::map<CellKey, std::map<int, RunTally>> tallies;
  std::map<CellKey, std::map<FailureCause, std::int64_t>> failures;
  std::set<AttemptRecord::Key> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.key()).second) continue;  // duplicate key: first record wins
    const CellKey key{r.dataset_version, r.model_tag, r.strategy};
    auto& t = tallies[key][r.run_index];
    t.run = r.run_index;
    ++t.n;
    if (r.success) ++t.c;
    if (r.failure_cause) ++failures[key][*r.failure_cause];
  }

  std::vector<CellSummary> out;
  for (auto& [key, runs] : tallies) {
    CellSummary s;
    s.key = key;
    s.failures = failures[key];
    for (auto& [run, t] : runs) {
      t.pass_at_1 = stats::pass_at_k(t.n, t.c, 1);
      s.total_n += t.n;
      s.total_c += t.c;
      s.runs.push_back(t);
    }

    s.complete = true;
    if (auto it = meta.find(key); it != meta.end()) {
      if (static_cast<int>(s.runs.size()) != it->second.runs) {
        s.complete = false;
        s.note = std::to_string(s.runs.size()) + " of " + std::to_string(it->second.runs) + " runs present";
      }
      for (const auto& t : s.runs) {
        if (t.n != it->second.entries || t.run < 1 || t.run > it->second.runs) {
          s.complete = false;
          if (s.note.empty()) {
            s.note = "run " + std::to_string(t.run) + " has " + std::to_string(t.n) + " of " +
                     std::to_string(it->second.entries) + " entries";
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < s.runs.size(); ++i) {
        if (s.runs[i].run != static_cast<int>(i) + 1 || s.runs[i].n != s.runs.front().n) {
          s.complete = false;
          s.note = "uneven or missing runs";
        }
      }
    }

    if (s.complete) {
      double sum = 0.0;
      for (const auto& t : s.runs) sum += t.pass_at_1;
      s.average = sum / static_cast<double>(s.runs.size());
    } else {
      s.average = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CellSummary> summarize(const fs::path& results_dir) {
  return summarize(load_records(results_dir), load_meta(results_dir));
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (const char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string records_csv(std::vector<AttemptRecord> records) {
  std::sort(records.begin(), records.end(), record_less);
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : records) {
    out += csv_field(to_string(r.dataset_version)) + ",";
    out += csv_field(r.entry_id) + ",";
    out += csv_field(r.model_tag) + ",";
    out += csv_field(to_string(r.strategy)) + ",";
    out += std::to_string(r.run_index) + ",";
    out += r.success ? "SUCCESS," : "FAILURE,";
    out += (r.failure_cause ? std::string(to_csv(*r.failure_cause)) : std::string()) + ",";
    out += csv_field(r.success ? std::string_view{} : std::string_view(r.detail)) + ",";
    out += std::to_string(r.duration_ms) + ",";
    if (r.strategy == Strategy::Codegen) out += r.cache_hit ? "true" : "false";
    out += "\n";
  }
  return out;
}

void export_csv(const std::vector<AttemptRecord>& records, const fs::path& path) {
  write_text(path, records_csv(records));
}

std::string summaries_csv(const std::vector<CellSummary>& summaries) {
  std::string out = "dataset_version,model_tag,strategy,runs,n_per_run,c_per_run,pass_at_1_per_run,avg_pass_at_1,complete\n";
  for (const auto& s : summaries) {
    std::string ns, cs, ps;
    for (const auto& t : s.runs) {
      const std::string sep = ns.empty() ? "" : ";";
      ns += sep + std::to_string(t.n);
      cs += sep + std::to_string(t.c);
      ps += sep + format_fixed(t.pass_at_1, 7);
    }
    out += csv_field(to_string(s.key.version)) + "," + csv_field(s.key.model_tag) + "," +
           csv_field(to_string(s.key.strategy)) + "," + std::to_string(s.runs.size()) + "," + ns + "," + cs + "," +
           ps + "," + format_fixed(s.average, 7) + "," + (s.complete ? "true" : "false") + "\n";
  }
  return out;
}

void export_summaries_csv(const std::vector<CellSummary>& summaries, const fs::path& path) {
  write_text(path, summaries_csv(summaries));
}

FailureReport failure_report(const std::vector<AttemptRecord>& records, Strategy strategy) {
  std::map<FailureCause, std::int64_t> counts;
  FailureReport report;
  for (const auto& r : records) {
    if (r.strategy != strategy || r.success || !r.failure_cause) continue;
    ++counts[*r.failure_cause];
    ++report.total_failures;
  }
  for (const auto& [cause, count] : counts) {
    report.rows.push_back({cause, count, 100.0 * static_cast<double>(count) / static_cast<double>(report.total_failures)});
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const FailureRow& a, const FailureRow& b) { return a.count > b.count; });
  return report;
}

stats::ComparisonResult compare_cells(const CellSummary& a, const CellSummary& b, double alpha, bool corrected) {
  if (!a.complete) throw std::invalid_argument("cell " + to_string(a.key) + " is incomplete");
  if (!b.complete) throw std::invalid_argument("cell " + to_string(b.key) + " is incomplete");
  return stats::compare(stats::Proportion(a.total_c, a.total_n), stats::Proportion(b.total_c, b.total_n), alpha,
                        corrected);
}

stats::ComparisonResult compare_runs(const CellSummary& cell, int run_a, int run_b, double alpha, bool corrected) {
  auto find = [&](int run) -> const RunTally& {
    for (const auto& t : cell.runs) {
      if (t.run == run) return t;
    }
    throw std::invalid_argument("cell " + to_string(cell.key) + " has no run " + std::to_string(run));
  };
  const auto& a = find(run_a);
  const auto& b = find(run_b);
  return stats::compare(stats::Proportion(a.c, a.n), stats::Proportion(b.c, b.n), alpha, corrected);
}

}  // namespace interop::harness
