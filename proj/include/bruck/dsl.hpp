// Concrete syntax for counterfunctions:
//   expr := "const" NAT | "id" | "affine" NAT NAT | "pow" NAT | "table" PATH
#pragma once

#include "bruck/monotone.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bruck {

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : ConfigError("counterfunction syntax error at position " + std::to_string(pos) + ": " + what),
        position(pos) {}
  std::size_t position;
};

struct CounterfunctionExpr {
  enum class Kind { constant, identity, affine, power, table };
  Kind kind = Kind::identity;
  Nat a = 0;  // const value, affine slope, pow exponent
  Nat b = 0;  // affine offset
  std::string path;
  std::vector<Nat> values;  // table contents, read at parse time

  std::string to_string() const {
    switch (kind) {
      case Kind::constant: return "const " + a.str();
      case Kind::identity: return "id";
      case Kind::affine: return "affine " + a.str() + " " + b.str();
      case Kind::power: return "pow " + a.str();
      case Kind::table: return "table " + path;
    }
    return "";
  }

  /// Registered growth degree.
  unsigned degree() const { return kind == Kind::power ? a.convert_to<unsigned>() : 1; }

  Counterfunction build() const {
    switch (kind) {
      case Kind::constant: return Counterfunction::constant(a);
      case Kind::identity: return Counterfunction::identity();
      case Kind::affine: return Counterfunction::affine(a, b);
      case Kind::power: return Counterfunction::power(a.convert_to<unsigned>());
      case Kind::table: return Counterfunction::table(values, "table " + path);
    }
    throw Error("unreachable");
  }

  friend bool operator==(const CounterfunctionExpr& x, const CounterfunctionExpr& y) {
    return x.kind == y.kind && x.a == y.a && x.b == y.b && x.path == y.path && x.values == y.values;
  }
};

namespace detail {

struct Lexer {
  const std::string& s;
  std::size_t pos = 0;

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool done() {
    skip();
    return pos >= s.size();
  }
  std::pair<std::string, std::size_t> word() {
    skip();
    const std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw ParseError("unexpected end of input", start);
    return {s.substr(start, pos - start), start};
  }
  Nat nat() {
    auto [w, at] = word();
    for (char c : w) {
      if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError("expected a natural number, got '" + w + "'", at);
    }
    return Nat(w);
  }
};

inline std::vector<Nat> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file '" + path + "'");
  std::vector<Nat> out;
  std::string tok;
  char c;
  auto flush = [&] {
    if (tok.empty()) return;
    for (char d : tok) {
      if (!std::isdigit(static_cast<unsigned char>(d))) {
        throw ConfigError("table '" + path + "': '" + tok + "' is not a natural number");
      }
    }
    out.emplace_back(tok);
    tok.clear();
  };
  while (in.get(c)) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) flush();
    else tok += c;
  }
  flush();
  if (out.empty()) throw ConfigError("table '" + path + "' is empty");
  return out;
}

}  // namespace detail

inline CounterfunctionExpr parse_counterfunction(const std::string& text) {
  detail::Lexer lx{text};
  CounterfunctionExpr e;
  auto [head, at] = lx.word();
  if (head == "const") {
    e.kind = CounterfunctionExpr::Kind::constant;
    e.a = lx.nat();
  } else if (head == "id") {
    e.kind = CounterfunctionExpr::Kind::identity;
  } else if (head == "affine") {
    e.kind = CounterfunctionExpr::Kind::affine;
    e.a = lx.nat();
    e.b = lx.nat();
  } else if (head == "pow") {
    e.kind = CounterfunctionExpr::Kind::power;
    e.a = lx.nat();
    if (e.a > 64) throw ParseError("exponent too large", at);
  } else if (head == "table") {
    e.kind = CounterfunctionExpr::Kind::table;
    e.path = lx.word().first;
    e.values = detail::read_table(e.path);
  } else {
    throw ParseError("unknown form '" + head + "'", at);
  }
  if (!lx.done()) throw ParseError("trailing input", lx.pos);
  return e;
}

}  // namespace bruck
