// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/rational.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hlsbound {

using Rational = boost::rational<std::int64_t>;
using Cycles = std::int64_t;

inline Cycles floor_of(const Rational &r) {
  auto q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0)
    --q;
  return q;
}

inline Cycles ceil_of(const Rational &r) { return -floor_of(-r); }

inline std::string to_string(const Rational &r) {
  if (r.denominator() == 1)
    return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

enum class OpKind : std::uint8_t { Add, Sub, Mul, Div };

inline constexpr OpKind kAllOpKinds[] = {OpKind::Add, OpKind::Sub, OpKind::Mul,
                                         OpKind::Div};

inline std::string_view op_name(OpKind k) {
  switch (k) {
  case OpKind::Add: return "add";
  case OpKind::Sub: return "sub";
  case OpKind::Mul: return "mul";
  case OpKind::Div: return "div";
  }
  return "?";
}

inline std::optional<OpKind> op_from_name(std::string_view s) {
  for (auto k : kAllOpKinds)
    if (op_name(k) == s)
      return k;
  return std::nullopt;
}

inline char op_symbol(OpKind k) {
  switch (k) {
  case OpKind::Add: return '+';
  case OpKind::Sub: return '-';
  case OpKind::Mul: return '*';
  case OpKind::Div: return '/';
  }
  return '?';
}

inline bool is_associative(OpKind k) {
  return k == OpKind::Add || k == OpKind::Mul;
}

/// Base class for every domain error the library reports.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string &msg, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + msg),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

class AnalysisError : public Error {
public:
  using Error::Error;
};

class GraphError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace hlsbound
