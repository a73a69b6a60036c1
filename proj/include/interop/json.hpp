#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace interop::json {

// Document model for exchanged data. Numbers keep their source token so that
// nothing is lost to a binary floating-point round trip, and objects keep
// insertion order so that written fixtures are diff-stable.

struct Number {
  std::string token;
  friend bool operator==(const Number&, const Number&) = default;
};

class Value;
struct Member;
using Array = std::vector<Value>;
using Object = std::vector<Member>;

class Value {
 public:
  using Storage = std::variant<std::nullptr_t, bool, Number, std::string, Array, Object>;

  Value() : data_(nullptr) {}
  Value(std::nullptr_t) : data_(nullptr) {}
  Value(bool b) : data_(b) {}
  Value(Number n) : data_(std::move(n)) {}
  Value(std::string s) : data_(std::move(s)) {}
  Value(const char* s) : data_(std::string(s)) {}
  Value(Array a) : data_(std::move(a)) {}
  Value(Object o) : data_(std::move(o)) {}

  static Value number(std::string token) { return Value(Number{std::move(token)}); }

  bool is_null() const { return std::holds_alternative<std::nullptr_t>(data_); }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_number() const { return std::holds_alternative<Number>(data_); }
  bool is_string() const { return std::holds_alternative<std::string>(data_); }
  bool is_array() const { return std::holds_alternative<Array>(data_); }
  bool is_object() const { return std::holds_alternative<Object>(data_); }

  bool as_bool() const { return std::get<bool>(data_); }
  const Number& as_number() const { return std::get<Number>(data_); }
  const std::string& as_string() const { return std::get<std::string>(data_); }
  const Array& as_array() const { return std::get<Array>(data_); }
  Array& as_array() { return std::get<Array>(data_); }
  const Object& as_object() const { return std::get<Object>(data_); }
  Object& as_object() { return std::get<Object>(data_); }

  // Object lookup; nullptr when absent or when this is not an object.
  const Value* find(std::string_view key) const;

  const Storage& storage() const { return data_; }

 private:
  Storage data_;
};

struct Member {
  std::string key;
  Value value;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : std::runtime_error(message + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct ParseOptions {
  bool reject_duplicate_keys = true;
  std::size_t max_depth = 512;
};

// Strict RFC 8259 parse of a single document (surrounding whitespace allowed).
Value parse(std::string_view text, const ParseOptions& options = {});

// Serializes with the given indentation; indent < 0 produces compact output.
std::string dump(const Value& value, int indent = 2);

}  // namespace interop::json
