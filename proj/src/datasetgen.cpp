#include "interop/datasetgen.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "interop/equivalence.hpp"
#include "interop/json.hpp"

namespace interop::dataset {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// mt19937_64's output sequence is fixed by the standard; the distributions
// are not, so uniform variates are derived from raw words here.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

 private:
  std::mt19937_64 engine_;
};

std::string uuid4(Stream& rng) {
  std::uint64_t hi = rng.next();
  std::uint64_t lo = rng.next();
  hi = (hi & 0xFFFFFFFFFFFF0FFFull) | 0x0000000000004000ull;  // version 4
  lo = (lo & 0x3FFFFFFFFFFFFFFFull) | 0x8000000000000000ull;  // RFC 4122 variant
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xFFFF),
                static_cast<unsigned>(hi & 0xFFFF), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFull));
  return buf;
}

std::string iso8601(std::int64_t epoch_seconds, int millis) {
  const std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  if (millis >= 0) {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  }
  return buf;
}

Decimal micro_degrees(double degrees) {
  return Decimal::from_parts(Decimal::Coefficient(std::llround(degrees * 1e6)), -6);
}

constexpr const char* kNames[] = {
    "Unique_Boundary_name", "Am Mühlenbach", "Große Wiese", "Kirchacker", "Lange Breite",
    "Hinterm Hof", "Sandkoppel", "Eichenschlag", "Nordfeld", "Auf der Höhe",
};
constexpr const char* kSourceTypes[] = {"HandDrawn", "Imported", "MachineMeasured"};

geo::FieldBoundary make_boundary(std::uint64_t seed, std::size_t index) {
  Stream rng(splitmix64(seed ^ splitmix64(index + 1)));

  geo::FieldBoundary b;
  b.id = uuid4(rng);
  b.name = std::string(kNames[rng.below(std::size(kNames))]) + " " + std::to_string(1 + rng.below(40));
  b.source_type = kSourceTypes[rng.below(std::size(kSourceTypes))];

  const std::int64_t created = 1420070400 + static_cast<std::int64_t>(rng.uniform() * 8 * 365 * 86400);
  const std::int64_t modified = created + static_cast<std::int64_t>(rng.uniform() * 2 * 365 * 86400);
  b.created_time = iso8601(created, -1);
  b.modified_time = iso8601(modified, static_cast<int>(rng.below(1000)));

  // Keep the whole polygon inside lat 47-55 / lon 6-15.
  const double lat0 = 47.5 + rng.uniform() * 7.0;
  const double lon0 = 6.5 + rng.uniform() * 8.0;
  const std::size_t vertices = 5 + rng.below(26);
  const double base_radius_m = 60.0 + rng.uniform() * 540.0;
  constexpr double kMetersPerDegree = 111320.0;
  const double cos_lat = std::cos(lat0 * std::numbers::pi / 180.0);

  geo::Ring ring;
  ring.reserve(vertices + 1);
  for (std::size_t k = 0; k < vertices; ++k) {
    const double theta = 2.0 * std::numbers::pi * (static_cast<double>(k) + 0.8 * rng.uniform()) /
                         static_cast<double>(vertices);
    const double r = base_radius_m * (0.75 + 0.5 * rng.uniform());
    const double lat = lat0 + r * std::sin(theta) / kMetersPerDegree;
    const double lon = lon0 + r * std::cos(theta) / (kMetersPerDegree * cos_lat);
    ring.push_back(geo::Position{micro_degrees(lon), micro_degrees(lat)});
  }
  ring.push_back(ring.front());
  b.area_ha = Decimal::from_double(geo::ring_area_ha(ring));
  b.rings.push_back(std::move(ring));
  return b;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw DatasetError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

constexpr std::string_view kInputSuffix = ".input.txt";
constexpr std::string_view kExpectedSuffix = ".expected.txt";
constexpr std::string_view kTargetName = "target.txt";

}  // namespace

std::vector<geo::FieldBoundary> synthesize_boundaries(int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  std::vector<geo::FieldBoundary> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(make_boundary(seed, static_cast<std::size_t>(i)));
  return out;
}

Corpus synthesize_corpus(int count, std::uint64_t seed) {
  auto all = synthesize_boundaries(count + 1, seed);
  Corpus c;
  c.target = std::move(all.back());
  all.pop_back();
  c.entries = std::move(all);
  return c;
}

const DatasetEntry* DatasetManifest::find(std::string_view prefix) const {
  for (const auto& e : entries) {
    if (e.prefix == prefix) return &e;
  }
  return nullptr;
}

std::string make_prefix(std::size_t index, std::size_t total, const std::string& id) {
  const int width = std::max<int>(3, static_cast<int>(std::to_string(total).size()));
  std::string num = std::to_string(index);
  if (static_cast<int>(num.size()) < width) num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
  return num + "-" + id.substr(0, 8);
}

std::string render_input(const geo::FieldBoundary& boundary) {
  return json::dump(geo::boundary_to_provider(boundary), 2) + "\n";
}

std::string render_expected(const geo::FieldBoundary& boundary, DatasetVersion version) {
  return json::dump(geo::provider_to_geo_reference(geo::boundary_to_provider(boundary), version), 2) +
         "\n";
}

DatasetManifest generate_dataset(const Corpus& corpus, DatasetVersion version, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DatasetError("cannot create " + out_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.version = version;
  manifest.directory = out_dir;
  const std::size_t total = corpus.entries.size();
  for (std::size_t i = 0; i < total; ++i) {
    const auto& b = corpus.entries[i];
    b.validate();
    DatasetEntry e;
    e.prefix = make_prefix(i + 1, total, b.id);
    e.input_text = render_input(b);
    e.expected_text = render_expected(b, version);
    write_file(out_dir / (e.prefix + std::string(kInputSuffix)), e.input_text);
    write_file(out_dir / (e.prefix + std::string(kExpectedSuffix)), e.expected_text);
    manifest.entries.push_back(std::move(e));
  }
  manifest.target_text = render_expected(corpus.target, version);
  write_file(out_dir / kTargetName, manifest.target_text);
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const DatasetEntry& a, const DatasetEntry& b) { return a.prefix < b.prefix; });
  return manifest;
}

DatasetVersion infer_version(const std::string& target_text) {
  json::Value doc;
  try {
    doc = json::parse(target_text);
  } catch (const json::ParseError& e) {
    throw DatasetError(std::string("unparseable target.txt: ") + e.what());
  }
  const json::Value* features = doc.find("features");
  if (features == nullptr || !features->is_array() || features->as_array().empty()) {
    throw DatasetError("target.txt has no features");
  }
  const json::Value* props = features->as_array().front().find("properties");
  if (props == nullptr || !props->is_object()) throw DatasetError("target.txt feature has no properties");

  std::set<std::string> keys;
  for (const auto& m : props->as_object()) keys.insert(m.key);
  for (const auto v : {DatasetVersion::V1, DatasetVersion::V2, DatasetVersion::V3, DatasetVersion::V4}) {
    const auto wanted = geo::version_property_keys(v);
    if (keys == std::set<std::string>(wanted.begin(), wanted.end())) return v;
  }
  std::string listed;
  for (const auto& k : keys) listed += (listed.empty() ? "" : ", ") + k;
  throw DatasetError("target.txt properties {" + listed + "} match no dataset version");
}

DatasetManifest load_dataset(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DatasetError("not a directory: " + dir.string());

  std::map<std::string, std::pair<bool, bool>> pairs;  // prefix -> (has input, has expected)
  for (const auto& item : fs::directory_iterator(dir, ec)) {
    if (!item.is_regular_file()) continue;
    const std::string name = item.path().filename().string();
    if (ends_with(name, kInputSuffix)) {
      pairs[name.substr(0, name.size() - kInputSuffix.size())].first = true;
    } else if (ends_with(name, kExpectedSuffix)) {
      pairs[name.substr(0, name.size() - kExpectedSuffix.size())].second = true;
    }
  }
  if (ec) throw DatasetError("cannot list " + dir.string() + ": " + ec.message());

  for (const auto& [prefix, has] : pairs) {
    if (!has.first) throw DatasetError("orphan expected file for prefix \"" + prefix + "\" (no input)");
    if (!has.second) throw DatasetError("orphan input file for prefix \"" + prefix + "\" (no expected)");
  }

  const fs::path target_path = dir / kTargetName;
  if (!fs::exists(target_path)) throw DatasetError("missing " + target_path.string());

  DatasetManifest manifest;
  manifest.directory = dir;
  manifest.target_text = read_file(target_path);
  manifest.version = infer_version(manifest.target_text);
  for (const auto& [prefix, has] : pairs) {
    DatasetEntry e;
    e.prefix = prefix;
    e.input_text = read_file(dir / (prefix + std::string(kInputSuffix)));
    e.expected_text = read_file(dir / (prefix + std::string(kExpectedSuffix)));
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

std::size_t ValidationReport::passed() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const EntryCheck& c) { return c.passed; }));
}

ValidationReport validate_dataset(const DatasetManifest& manifest) {
  ValidationReport report;
  report.version = manifest.version;
  for (const auto& e : manifest.entries) {
    EntryCheck check{e.prefix, false, {}};
    try {
      const auto reference = geo::provider_to_geo_reference(json::parse(e.input_text), manifest.version);
      const auto cmp = equiv::equivalent(equiv::canonicalize(std::string_view(e.expected_text)), equiv::canonicalize(reference));
      check.passed = cmp.equal;
      if (!cmp.equal) check.detail = "at " + cmp.path + ": " + cmp.reason;
    } catch (const std::exception& ex) {
      check.detail = ex.what();
    }
    report.checks.push_back(std::move(check));
  }
  return report;
}

}  // namespace interop::dataset
