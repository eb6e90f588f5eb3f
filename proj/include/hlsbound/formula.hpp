// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/types.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

/// Symbolic expressions over pragma variables with exact rational evaluation,
/// interval evaluation and a text form that parses back to the same value.
namespace hlsbound::fx {

enum class Op : std::uint8_t { Const, Var, Table, Add, Sub, Mul, Div, Floor, Max, Min, Lcm, Mod };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  Rational value{0};
  std::string name;       // Var, Table
  std::vector<Expr> args; // Table: one index expression
};

inline bool is_const(const Expr &e) { return e->op == Op::Const; }
inline bool is_const(const Expr &e, Rational v) { return e->op == Op::Const && e->value == v; }

inline Expr constant(Rational v) {
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}
inline Expr constant(std::int64_t v) { return constant(Rational(v)); }

inline Expr var(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->name = std::move(name);
  return n;
}

inline Expr table(std::string name, Expr index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Table;
  n->name = std::move(name);
  n->args = {std::move(index)};
  return n;
}

namespace detail {

inline Expr make(Op op, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

inline bool all_const(const std::vector<Expr> &args) {
  return std::all_of(args.begin(), args.end(), [](const Expr &e) { return is_const(e); });
}

inline Rational floor_r(Rational v) { return Rational(floor_of(v)); }

} // namespace detail

inline Expr add(std::vector<Expr> args) {
  std::vector<Expr> keep;
  Rational c{0};
  for (auto &a : args) {
    if (is_const(a))
      c += a->value;
    else if (a->op == Op::Add)
      for (const auto &x : a->args)
        keep.push_back(x);
    else
      keep.push_back(std::move(a));
  }
  if (c != Rational(0) || keep.empty())
    keep.push_back(constant(c));
  return keep.size() == 1 ? keep.front() : detail::make(Op::Add, std::move(keep));
}
inline Expr add(Expr a, Expr b) { return add(std::vector<Expr>{std::move(a), std::move(b)}); }

inline Expr sub(Expr a, Expr b) {
  if (is_const(a) && is_const(b))
    return constant(a->value - b->value);
  if (is_const(b, Rational(0)))
    return a;
  return detail::make(Op::Sub, {std::move(a), std::move(b)});
}

/// Product; a zero factor short-circuits evaluation of later factors.
inline Expr mul(std::vector<Expr> args) {
  std::vector<Expr> keep;
  Rational c{1};
  for (auto &a : args) {
    if (is_const(a))
      c *= a->value;
    else
      keep.push_back(std::move(a));
  }
  if (c == Rational(0))
    return constant(0);
  if (c != Rational(1) || keep.empty())
    keep.insert(keep.begin(), constant(c));
  return keep.size() == 1 ? keep.front() : detail::make(Op::Mul, std::move(keep));
}
inline Expr mul(Expr a, Expr b) { return mul(std::vector<Expr>{std::move(a), std::move(b)}); }

inline Expr div(Expr a, Expr b) {
  if (is_const(b, Rational(0)))
    throw std::invalid_argument("fx::div by constant zero");
  if (is_const(a) && is_const(b))
    return constant(a->value / b->value);
  if (is_const(b, Rational(1)))
    return a;
  return detail::make(Op::Div, {std::move(a), std::move(b)});
}

inline Expr floor(Expr a) {
  if (is_const(a))
    return constant(detail::floor_r(a->value));
  if (a->op == Op::Floor)
    return a;
  return detail::make(Op::Floor, {std::move(a)});
}

inline Expr max(std::vector<Expr> args) {
  if (args.empty())
    return constant(0);
  if (detail::all_const(args)) {
    Rational m = args.front()->value;
    for (const auto &a : args)
      m = std::max(m, a->value);
    return constant(m);
  }
  return args.size() == 1 ? args.front() : detail::make(Op::Max, std::move(args));
}

inline Expr min(std::vector<Expr> args) {
  if (args.empty())
    throw std::invalid_argument("fx::min of nothing");
  if (detail::all_const(args)) {
    Rational m = args.front()->value;
    for (const auto &a : args)
      m = std::min(m, a->value);
    return constant(m);
  }
  return args.size() == 1 ? args.front() : detail::make(Op::Min, std::move(args));
}

inline Expr lcm(std::vector<Expr> args) {
  if (args.empty())
    return constant(1);
  return args.size() == 1 ? args.front() : detail::make(Op::Lcm, std::move(args));
}

inline Expr mod(Expr a, Expr b) { return detail::make(Op::Mod, {std::move(a), std::move(b)}); }

// ---------------------------------------------------------------------------
// Exact evaluation

struct Env {
  std::function<std::int64_t(const std::string &)> var;
  std::function<Rational(const std::string &, std::int64_t)> table;
};

namespace detail {

inline std::int64_t as_integer(const Rational &v, const char *what) {
  if (v.denominator() != 1)
    throw std::domain_error(std::string(what) + " of non-integer value " + to_string(v));
  return v.numerator();
}

} // namespace detail

inline Rational eval(const Expr &e, const Env &env) {
  switch (e->op) {
  case Op::Const:
    return e->value;
  case Op::Var:
    return Rational(env.var(e->name));
  case Op::Table:
    return env.table(e->name, detail::as_integer(eval(e->args[0], env), "table index"));
  case Op::Add: {
    Rational s{0};
    for (const auto &a : e->args)
      s += eval(a, env);
    return s;
  }
  case Op::Sub:
    return eval(e->args[0], env) - eval(e->args[1], env);
  case Op::Mul: {
    Rational p{1};
    for (const auto &a : e->args) {
      p *= eval(a, env);
      if (p == Rational(0))
        return p;
    }
    return p;
  }
  case Op::Div: {
    auto d = eval(e->args[1], env);
    if (d == Rational(0))
      throw std::domain_error("division by zero");
    return eval(e->args[0], env) / d;
  }
  case Op::Floor:
    return detail::floor_r(eval(e->args[0], env));
  case Op::Max: {
    Rational m = eval(e->args[0], env);
    for (std::size_t i = 1; i < e->args.size(); ++i)
      m = std::max(m, eval(e->args[i], env));
    return m;
  }
  case Op::Min: {
    Rational m = eval(e->args[0], env);
    for (std::size_t i = 1; i < e->args.size(); ++i)
      m = std::min(m, eval(e->args[i], env));
    return m;
  }
  case Op::Lcm: {
    std::int64_t l = 1;
    for (const auto &a : e->args)
      l = std::lcm(l, detail::as_integer(eval(a, env), "lcm"));
    return Rational(l);
  }
  case Op::Mod: {
    auto a = detail::as_integer(eval(e->args[0], env), "mod");
    auto b = detail::as_integer(eval(e->args[1], env), "mod");
    if (b == 0)
      throw std::domain_error("mod by zero");
    return Rational(((a % b) + b) % b);
  }
  }
  return Rational(0);
}

// ---------------------------------------------------------------------------
// Interval evaluation, used for branch-and-bound relaxations

struct Interval {
  Rational lo{0}, hi{0};

  static Interval point(Rational v) { return {v, v}; }
  bool is_point() const { return lo == hi; }
};

struct IntervalEnv {
  std::function<Interval(const std::string &)> var;
  /// Range of a table over the index values in [lo, hi].
  std::function<Interval(const std::string &, const Interval &)> table;
};

inline Interval eval_interval(const Expr &e, const IntervalEnv &env) {
  auto mul2 = [](const Interval &a, const Interval &b) {
    Rational c[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
    return Interval{*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
  };
  switch (e->op) {
  case Op::Const:
    return Interval::point(e->value);
  case Op::Var:
    return env.var(e->name);
  case Op::Table:
    return env.table(e->name, eval_interval(e->args[0], env));
  case Op::Add: {
    Interval s = Interval::point(0);
    for (const auto &a : e->args) {
      auto x = eval_interval(a, env);
      s = {s.lo + x.lo, s.hi + x.hi};
    }
    return s;
  }
  case Op::Sub: {
    auto a = eval_interval(e->args[0], env), b = eval_interval(e->args[1], env);
    return {a.lo - b.hi, a.hi - b.lo};
  }
  case Op::Mul: {
    Interval p = Interval::point(1);
    for (const auto &a : e->args) {
      auto x = eval_interval(a, env);
      if (x.is_point() && x.lo == Rational(0))
        return Interval::point(0);
      p = mul2(p, x);
    }
    return p;
  }
  case Op::Div: {
    auto a = eval_interval(e->args[0], env), b = eval_interval(e->args[1], env);
    if (b.lo <= Rational(0))
      throw std::domain_error("interval division by a range containing zero");
    return mul2(a, {Rational(1) / b.hi, Rational(1) / b.lo});
  }
  case Op::Floor: {
    auto a = eval_interval(e->args[0], env);
    return {detail::floor_r(a.lo), detail::floor_r(a.hi)};
  }
  case Op::Max:
  case Op::Min: {
    auto r = eval_interval(e->args[0], env);
    for (std::size_t i = 1; i < e->args.size(); ++i) {
      auto x = eval_interval(e->args[i], env);
      if (e->op == Op::Max)
        r = {std::max(r.lo, x.lo), std::max(r.hi, x.hi)};
      else
        r = {std::min(r.lo, x.lo), std::min(r.hi, x.hi)};
    }
    return r;
  }
  case Op::Lcm: {
    Interval r = Interval::point(1);
    for (const auto &a : e->args) {
      auto x = eval_interval(a, env);
      if (r.is_point() && x.is_point())
        r = Interval::point(Rational(std::lcm(detail::as_integer(r.lo, "lcm"),
                                              detail::as_integer(x.lo, "lcm"))));
      else
        r = {std::max(r.lo, x.lo), r.hi * x.hi};
    }
    return r;
  }
  case Op::Mod: {
    auto a = eval_interval(e->args[0], env), b = eval_interval(e->args[1], env);
    if (a.is_point() && b.is_point()) {
      auto x = detail::as_integer(a.lo, "mod"), y = detail::as_integer(b.lo, "mod");
      if (y == 0)
        throw std::domain_error("mod by zero");
      return Interval::point(Rational(((x % y) + y) % y));
    }
    return {Rational(0), std::max(b.hi - 1, Rational(0))};
  }
  }
  return Interval::point(0);
}

// ---------------------------------------------------------------------------
// Text form

inline std::string format(const Expr &e) {
  auto list = [](const std::vector<Expr> &args, const char *sep) {
    std::string s;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i)
        s += sep;
      s += format(args[i]);
    }
    return s;
  };
  switch (e->op) {
  case Op::Const: {
    const auto &v = e->value;
    if (v.denominator() == 1)
      return v.numerator() < 0 ? "(" + std::to_string(v.numerator()) + ")"
                               : std::to_string(v.numerator());
    return "(" + std::to_string(v.numerator()) + "/" + std::to_string(v.denominator()) + ")";
  }
  case Op::Var:
    return e->name;
  case Op::Table:
    return e->name + "[" + format(e->args[0]) + "]";
  case Op::Add:
    return "(" + list(e->args, " + ") + ")";
  case Op::Sub:
    return "(" + list(e->args, " - ") + ")";
  case Op::Mul:
    return "(" + list(e->args, " * ") + ")";
  case Op::Div:
    return "(" + list(e->args, " / ") + ")";
  case Op::Floor:
    return "floor(" + format(e->args[0]) + ")";
  case Op::Max:
    return "max(" + list(e->args, ", ") + ")";
  case Op::Min:
    return "min(" + list(e->args, ", ") + ")";
  case Op::Lcm:
    return "lcm(" + list(e->args, ", ") + ")";
  case Op::Mod:
    return "(" + list(e->args, " mod ") + ")";
  }
  return "?";
}

/// Collects the names of variables referenced by `e`.
inline void collect_vars(const Expr &e, std::set<std::string> &out) {
  if (e->op == Op::Var)
    out.insert(e->name);
  for (const auto &a : e->args)
    collect_vars(a, out);
}

/// Recursive-descent parser for the text form produced by `format`.
class Parser {
public:
  explicit Parser(std::string_view text) : s_(text) {}

  Expr parse_all() {
    auto e = expr();
    skip();
    if (pos_ != s_.size())
      fail("unexpected trailing input");
    return e;
  }

  Expr expr() {
    auto lhs = term();
    for (;;) {
      skip();
      if (eat('+'))
        lhs = add(lhs, term());
      else if (eat('-'))
        lhs = sub(lhs, term());
      else
        return lhs;
    }
  }

private:
  Expr term() {
    auto lhs = factor();
    for (;;) {
      skip();
      if (eat('*'))
        lhs = mul(lhs, factor());
      else if (eat('/'))
        lhs = div(lhs, factor());
      else if (keyword("mod"))
        lhs = mod(lhs, factor());
      else
        return lhs;
    }
  }

  Expr factor() {
    skip();
    if (eat('(')) {
      auto e = expr();
      expect(')');
      return e;
    }
    if (eat('-'))
      return sub(constant(0), factor());
    if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      std::int64_t v = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
        v = v * 10 + (s_[pos_++] - '0');
      return constant(v);
    }
    auto id = ident();
    skip();
    if (eat('(')) {
      std::vector<Expr> args{expr()};
      skip();
      while (eat(','))
        args.push_back(expr());
      expect(')');
      if (id == "floor" && args.size() == 1)
        return floor(args[0]);
      if (id == "max")
        return max(std::move(args));
      if (id == "min")
        return min(std::move(args));
      if (id == "lcm")
        return lcm(std::move(args));
      fail("unknown function '" + id + "'");
    }
    if (eat('[')) {
      auto idx = expr();
      expect(']');
      return table(id, idx);
    }
    return var(id);
  }

  std::string ident() {
    skip();
    auto start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (start == pos_)
      fail("expected identifier");
    return std::string(s_.substr(start, pos_ - start));
  }

  bool keyword(std::string_view kw) {
    skip();
    if (s_.substr(pos_, kw.size()) != kw)
      return false;
    auto end = pos_ + kw.size();
    if (end < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
      return false;
    pos_ = end;
    return true;
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c))
      fail(std::string("expected '") + c + "'");
  }
  [[noreturn]] void fail(const std::string &msg) {
    throw ParseError("expression: " + msg + " at offset " + std::to_string(pos_), 1,
                     pos_ + 1);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline Expr parse(std::string_view text) { return Parser(text).parse_all(); }

} // namespace hlsbound::fx
