#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "interop/core.hpp"
#include "interop/geoconv.hpp"

namespace interop::dataset {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultEntryCount = 222;

// Deterministic irregular field polygons (5-30 vertices, single closed ring)
// in the lat 47-55 / lon 6-15 box, with UUIDv4-shaped ids. The i-th boundary
// only depends on (seed, i), so a longer run extends a shorter one.
std::vector<geo::FieldBoundary> synthesize_boundaries(int count, std::uint64_t seed);

// Scored boundaries plus the extra boundary used for target.txt.
struct Corpus {
  std::vector<geo::FieldBoundary> entries;
  geo::FieldBoundary target;
};

// count + 1 synthesized boundaries; the last one becomes the target example.
Corpus synthesize_corpus(int count, std::uint64_t seed);

struct DatasetEntry {
  std::string prefix;
  std::string input_text;
  std::string expected_text;
};

struct DatasetManifest {
  DatasetVersion version = DatasetVersion::V1;
  std::vector<DatasetEntry> entries;  // sorted by prefix
  std::string target_text;
  std::filesystem::path directory;

  const DatasetEntry* find(std::string_view prefix) const;
};

// "<index>-<first 8 id chars>", index 1-based and zero-padded to >= 3 digits.
std::string make_prefix(std::size_t index, std::size_t total, const std::string& id);

std::string render_input(const geo::FieldBoundary& boundary);
std::string render_expected(const geo::FieldBoundary& boundary, DatasetVersion version);

// Writes <PREFIX>.input.txt / <PREFIX>.expected.txt for every entry and
// target.txt into out_dir (created if needed). IO failures throw
// DatasetError naming the path.
DatasetManifest generate_dataset(const Corpus& corpus, DatasetVersion version,
                                 const std::filesystem::path& out_dir);

// Infers the version from the property keys of the target example.
DatasetVersion infer_version(const std::string& target_text);

// Throws DatasetError on orphan files (naming the prefix), a missing or
// unparseable target.txt, or an unreadable directory.
DatasetManifest load_dataset(const std::filesystem::path& dir);

struct EntryCheck {
  std::string prefix;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  DatasetVersion version = DatasetVersion::V1;
  std::vector<EntryCheck> checks;

  std::size_t passed() const;
  std::size_t failed() const { return checks.size() - passed(); }
  bool ok() const { return failed() == 0; }
};

// Recomputes every expected file from its input with the reference converter
// and compares exactly.
ValidationReport validate_dataset(const DatasetManifest& manifest);

}  // namespace interop::dataset
