#pragma once

// Random JSON documents written by hand (not through the library's
// serializer), so key order, whitespace and number spelling can be varied
// independently of the value.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "support.hpp"

namespace testsupport {

struct Node {
  enum class Kind { Null, Bool, Number, String, Array, Object };
  Kind kind = Kind::Null;
  std::string scalar;  // "true"/"false", plain number text, or raw string
  std::vector<Node> items;
  std::vector<std::pair<std::string, Node>> members;
};

class DocGen {
 public:
  explicit DocGen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  std::string plain_number() {
    std::string s = pick(0, 3) == 0 ? "-" : "";
    if (pick(0, 4) == 0) {
      s += "0";
    } else {
      s += static_cast<char>('0' + pick(1, 9));
      for (int i = 0, n = pick(0, 6); i < n; ++i) s += static_cast<char>('0' + pick(0, 9));
    }
    if (const int f = pick(0, 3) == 0 ? 0 : pick(1, 14); f > 0) {
      s += '.';
      for (int i = 0; i < f; ++i) s += static_cast<char>('0' + pick(0, 9));
    }
    return s == "-0" ? "0" : s;
  }

  std::string text() {
    static const std::vector<std::string> pieces = {"a",   "Z",   " ",         "\"",         "\\",   "/",
                                                    "\n",  "\t",  "\xC3\xA9",  "\xE2\x82\xAC", "\xF0\x9F\x8C\xBE",
                                                    "x1",  "{}",  "[",         "0.5",        "null"};
    std::string s;
    for (int i = 0, n = pick(0, 8); i < n; ++i) s += pieces[static_cast<std::size_t>(pick(0, static_cast<int>(pieces.size()) - 1))];
    return s;
  }

  std::string key() {
    std::string k;
    for (int i = 0, n = pick(1, 6); i < n; ++i) k += static_cast<char>('a' + pick(0, 25));
    return k;
  }

  Node node(int depth) {
    Node n;
    const int choice = depth <= 0 ? pick(0, 3) : pick(0, 5);
    switch (choice) {
      case 0:
        n.kind = Node::Kind::Null;
        break;
      case 1:
        n.kind = Node::Kind::Bool;
        n.scalar = pick(0, 1) ? "true" : "false";
        break;
      case 2:
        n.kind = Node::Kind::Number;
        n.scalar = plain_number();
        break;
      case 3:
        n.kind = Node::Kind::String;
        n.scalar = text();
        break;
      case 4:
        n.kind = Node::Kind::Array;
        for (int i = 0, m = pick(0, 5); i < m; ++i) n.items.push_back(node(depth - 1));
        break;
      default: {
        n.kind = Node::Kind::Object;
        std::set<std::string> used;
        for (int i = 0, m = pick(0, 5); i < m; ++i) {
          auto k = key();
          if (!used.insert(k).second) continue;
          n.members.emplace_back(k, node(depth - 1));
        }
      }
    }
    return n;
  }

  // A document that is an object or array holding at least one number.
  Node document() {
    for (;;) {
      Node root;
      root.kind = pick(0, 3) == 0 ? Node::Kind::Array : Node::Kind::Object;
      std::set<std::string> used;
      for (int i = 0, m = pick(1, 6); i < m; ++i) {
        if (root.kind == Node::Kind::Array) {
          root.items.push_back(node(3));
        } else if (auto k = key(); used.insert(k).second) {
          root.members.emplace_back(k, node(3));
        }
      }
      if (count_numbers(root) > 0) return root;
    }
  }

  static int count_numbers(const Node& n) {
    int c = n.kind == Node::Kind::Number ? 1 : 0;
    for (const auto& i : n.items) c += count_numbers(i);
    for (const auto& [k, v] : n.members) c += count_numbers(v);
    return c;
  }

  struct Style {
    bool shuffle_keys = false;
    bool random_whitespace = false;
    bool respell_numbers = false;
  };

  std::string emit(const Node& n, const Style& style) {
    std::string out;
    emit_into(out, n, style);
    return out;
  }

  // Points `target` at the index-th number (depth-first) and returns its path.
  static Node* nth_number(Node& n, int& index, std::string path, std::string& out_path) {
    if (n.kind == Node::Kind::Number) {
      if (index-- == 0) {
        out_path = path;
        return &n;
      }
      return nullptr;
    }
    for (std::size_t i = 0; i < n.items.size(); ++i) {
      if (auto* hit = nth_number(n.items[i], index, path + "[" + std::to_string(i) + "]", out_path)) return hit;
    }
    for (auto& [k, v] : n.members) {
      if (auto* hit = nth_number(v, index, path.empty() ? k : path + "." + k, out_path)) return hit;
    }
    return nullptr;
  }

 private:
  void ws(std::string& out, const Style& style) {
    if (!style.random_whitespace) return;
    static const char* spaces[] = {"", " ", "\n", "\t", "  ", "\r\n  "};
    out += spaces[pick(0, 5)];
  }

  static void quote(std::string& out, const std::string& s) {
    out += '"';
    for (const char ch : s) {
      switch (ch) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        default: out += ch;
      }
    }
    out += '"';
  }

  void emit_into(std::string& out, const Node& n, const Style& style) {
    ws(out, style);
    switch (n.kind) {
      case Node::Kind::Null: out += "null"; break;
      case Node::Kind::Bool: out += n.scalar; break;
      case Node::Kind::Number:
        if (style.respell_numbers && pick(0, 1) == 1) {
          const auto forms = equivalent_spellings(n.scalar);
          out += forms[static_cast<std::size_t>(pick(0, static_cast<int>(forms.size()) - 1))];
        } else {
          out += n.scalar;
        }
        break;
      case Node::Kind::String: quote(out, n.scalar); break;
      case Node::Kind::Array:
        out += '[';
        for (std::size_t i = 0; i < n.items.size(); ++i) {
          if (i > 0) out += ',';
          emit_into(out, n.items[i], style);
        }
        ws(out, style);
        out += ']';
        break;
      case Node::Kind::Object: {
        std::vector<std::size_t> order(n.members.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        if (style.shuffle_keys) std::shuffle(order.begin(), order.end(), rng_);
        out += '{';
        for (std::size_t i = 0; i < order.size(); ++i) {
          if (i > 0) out += ',';
          ws(out, style);
          quote(out, n.members[order[i]].first);
          ws(out, style);
          out += ':';
          emit_into(out, n.members[order[i]].second, style);
        }
        ws(out, style);
        out += '}';
      }
    }
    ws(out, style);
  }

  std::mt19937_64 rng_;
};

}  // namespace testsupport
