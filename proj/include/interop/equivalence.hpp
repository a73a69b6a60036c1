#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "interop/decimal.hpp"
#include "interop/json.hpp"

namespace interop::equiv {

class CanonicalDoc;
struct CanonicalEntry;

// Order-preserving array, key-sorted object.
using CanonicalArray = std::vector<CanonicalDoc>;
using CanonicalObject = std::vector<CanonicalEntry>;

class CanonicalDoc {
 public:
  using Storage =
      std::variant<std::nullptr_t, bool, Decimal, std::string, CanonicalArray, CanonicalObject>;

  CanonicalDoc() : data_(nullptr) {}
  explicit CanonicalDoc(Storage data) : data_(std::move(data)) {}

  const Storage& storage() const { return data_; }

 private:
  Storage data_;
};

struct CanonicalEntry {
  std::string key;
  CanonicalDoc value;
};

// Parses with exact numerics and rejects duplicate keys.
// Throws json::ParseError (carrying the byte offset) on malformed input.
CanonicalDoc canonicalize(std::string_view text);
CanonicalDoc canonicalize(const json::Value& value);
inline CanonicalDoc canonicalize(const std::string& text) { return canonicalize(std::string_view(text)); }
inline CanonicalDoc canonicalize(const char* text) { return canonicalize(std::string_view(text)); }

struct Comparison {
  bool equal = true;
  std::string path;    // e.g. "features[0].properties.area_ha"; empty for the root
  std::string reason;  // human-readable description of the first difference

  explicit operator bool() const { return equal; }
};

// Exact by default; with a tolerance, numbers match when |a - b| <= tolerance.
Comparison equivalent(const CanonicalDoc& a, const CanonicalDoc& b,
                      const std::optional<Decimal>& tolerance = std::nullopt);

}  // namespace interop::equiv
