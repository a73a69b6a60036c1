#include "interop/equivalence.hpp"

#include <algorithm>

namespace interop::equiv {

CanonicalDoc canonicalize(const json::Value& value) {
  if (value.is_null()) return CanonicalDoc(nullptr);
  if (value.is_bool()) return CanonicalDoc(value.as_bool());
  if (value.is_number()) return CanonicalDoc(Decimal::parse(value.as_number().token));
  if (value.is_string()) return CanonicalDoc(value.as_string());
  if (value.is_array()) {
    CanonicalArray items;
    items.reserve(value.as_array().size());
    for (const auto& v : value.as_array()) items.push_back(canonicalize(v));
    return CanonicalDoc(std::move(items));
  }
  CanonicalObject entries;
  entries.reserve(value.as_object().size());
  for (const auto& m : value.as_object()) entries.push_back({m.key, canonicalize(m.value)});
  std::sort(entries.begin(), entries.end(),
            [](const CanonicalEntry& a, const CanonicalEntry& b) { return a.key < b.key; });
  return CanonicalDoc(std::move(entries));
}

CanonicalDoc canonicalize(std::string_view text) {
  return canonicalize(json::parse(text, json::ParseOptions{.reject_duplicate_keys = true}));
}

namespace {

std::string_view kind_name(const CanonicalDoc& d) {
  switch (d.storage().index()) {
    case 0: return "null";
    case 1: return "boolean";
    case 2: return "number";
    case 3: return "string";
    case 4: return "array";
    default: return "object";
  }
}

std::string join_key(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

Comparison differ(std::string path, std::string reason) {
  return Comparison{false, std::move(path), std::move(reason)};
}

Comparison compare(const CanonicalDoc& a, const CanonicalDoc& b,
                   const std::optional<Decimal>& tolerance, const std::string& path) {
  if (a.storage().index() != b.storage().index()) {
    return differ(path, std::string("type ") + std::string(kind_name(a)) + " vs " +
                            std::string(kind_name(b)));
  }
  const auto& sa = a.storage();
  const auto& sb = b.storage();
  switch (sa.index()) {
    case 0:
      return {};
    case 1:
      if (std::get<bool>(sa) != std::get<bool>(sb)) return differ(path, "boolean differs");
      return {};
    case 2: {
      const auto& x = std::get<Decimal>(sa);
      const auto& y = std::get<Decimal>(sb);
      const bool same = tolerance ? (x - y).abs() <= *tolerance : x == y;
      if (!same) return differ(path, "number " + x.text() + " vs " + y.text());
      return {};
    }
    case 3:
      if (std::get<std::string>(sa) != std::get<std::string>(sb)) {
        return differ(path, "string \"" + std::get<std::string>(sa) + "\" vs \"" +
                                std::get<std::string>(sb) + "\"");
      }
      return {};
    case 4: {
      const auto& xa = std::get<CanonicalArray>(sa);
      const auto& xb = std::get<CanonicalArray>(sb);
      const std::size_t n = std::min(xa.size(), xb.size());
      for (std::size_t i = 0; i < n; ++i) {
        auto c = compare(xa[i], xb[i], tolerance, path + "[" + std::to_string(i) + "]");
        if (!c.equal) return c;
      }
      if (xa.size() != xb.size()) {
        return differ(path + "[" + std::to_string(n) + "]",
                      "array length " + std::to_string(xa.size()) + " vs " +
                          std::to_string(xb.size()));
      }
      return {};
    }
    default: {
      const auto& oa = std::get<CanonicalObject>(sa);
      const auto& ob = std::get<CanonicalObject>(sb);
      std::size_t i = 0;
      std::size_t j = 0;
      while (i < oa.size() || j < ob.size()) {
        if (j == ob.size() || (i < oa.size() && oa[i].key < ob[j].key)) {
          return differ(join_key(path, oa[i].key), "key missing on the right");
        }
        if (i == oa.size() || ob[j].key < oa[i].key) {
          return differ(join_key(path, ob[j].key), "key missing on the left");
        }
        auto c = compare(oa[i].value, ob[j].value, tolerance, join_key(path, oa[i].key));
        if (!c.equal) return c;
        ++i;
        ++j;
      }
      return {};
    }
  }
}

}  // namespace

Comparison equivalent(const CanonicalDoc& a, const CanonicalDoc& b,
                      const std::optional<Decimal>& tolerance) {
  return compare(a, b, tolerance, "");
}

}  // namespace interop::equiv
