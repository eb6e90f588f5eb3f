// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/kernel_ir.hpp"

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace hlsbound {

namespace detail {

struct Token {
  enum class Kind : std::uint8_t { Ident, Int, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Kind::Ident;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          t.text += advance();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Token::Kind::Int;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          t.text += advance();
        if (pos_ < src_.size() && src_[pos_] == '.') {
          t.kind = Token::Kind::Number;
          t.text += advance();
          while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            t.text += advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'f' || src_[pos_] == 'F')) {
          t.kind = Token::Kind::Number;
          advance();
        }
      } else {
        t.kind = Token::Kind::Punct;
        t.text += advance();
        if ((c == '+' || c == '*' || c == '-' || c == '/') && pos_ < src_.size() &&
            src_[pos_] == '=')
          t.text += advance();
      }
      out.push_back(std::move(t));
    }
  }

private:
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' ||
                 (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/')) {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  KernelIR run() {
    expect_word("kernel");
    k_.name = expect_ident("kernel name");
    expect("{");
    while (!peek_is("}")) {
      if (peek().kind == Token::Kind::End)
        fail(peek(), "unexpected end of input, missing '}'");
      if (peek_is_word("array") || peek_is_word("scalar")) {
        parse_decl();
      } else if (peek_is_word("option")) {
        parse_option();
      } else {
        k_.root.push_back(parse_node(std::nullopt));
      }
    }
    expect("}");
    if (peek().kind != Token::Kind::End)
      fail(peek(), "trailing input after kernel");
    return std::move(k_);
  }

private:
  [[noreturn]] void fail(const Token &t, const std::string &msg) {
    throw ParseError(msg, t.line, t.column);
  }

  const Token &peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token &next() {
    const Token &t = toks_[pos_];
    if (pos_ + 1 < toks_.size())
      ++pos_;
    return t;
  }
  bool peek_is(std::string_view p, std::size_t ahead = 0) const {
    return peek(ahead).kind == Token::Kind::Punct && peek(ahead).text == p;
  }
  bool peek_is_word(std::string_view w) const {
    return peek().kind == Token::Kind::Ident && peek().text == w;
  }
  void expect(std::string_view p) {
    if (!peek_is(p))
      fail(peek(), "expected '" + std::string(p) + "', found '" + peek().text + "'");
    next();
  }
  void expect_word(std::string_view w) {
    if (!peek_is_word(w))
      fail(peek(), "expected '" + std::string(w) + "'");
    next();
  }
  std::string expect_ident(const char *what) {
    if (peek().kind != Token::Kind::Ident)
      fail(peek(), std::string("expected ") + what);
    return next().text;
  }
  std::int64_t expect_int(const char *what) {
    if (peek().kind != Token::Kind::Int)
      fail(peek(), std::string("expected integer ") + what);
    return std::stoll(next().text);
  }

  void parse_decl() {
    bool scalar = next().text == "scalar";
    const Token &at = peek();
    ArrayDecl d;
    d.name = expect_ident("array name");
    if (k_.find_array(d.name))
      fail(at, "duplicate declaration of '" + d.name + "'");
    while (!scalar && peek_is("[")) {
      next();
      auto ext = expect_int("extent");
      if (ext <= 0)
        fail(at, "array extent must be positive");
      d.dims.push_back(ext);
      expect("]");
    }
    if (!scalar && d.dims.empty())
      fail(at, "array '" + d.name + "' needs at least one dimension");
    expect(":");
    auto ty = expect_ident("element type");
    if (ty == "f32")
      d.element_bits = 32;
    else if (ty == "f64")
      d.element_bits = 64;
    else
      fail(at, "unknown element type '" + ty + "'");
    auto dir = expect_ident("direction");
    if (dir == "in")
      d.direction = Direction::In;
    else if (dir == "out")
      d.direction = Direction::Out;
    else if (dir == "inout")
      d.direction = Direction::InOut;
    else
      fail(at, "unknown direction '" + dir + "'");
    expect(";");
    k_.arrays.push_back(std::move(d));
  }

  void parse_option() {
    next();
    const Token &at = peek();
    auto key = expect_ident("option name");
    auto val = expect_ident("option value");
    if (key != "tree_reduction")
      fail(at, "unknown option '" + key + "'");
    if (val != "on" && val != "off")
      fail(at, "option value must be on|off");
    k_.options.tree_reduction = val == "on";
    expect(";");
  }

  bool is_enclosing_iterator(const std::string &name) const {
    for (auto l : scope_)
      if (k_.loops[l].id == name)
        return true;
    return false;
  }

  // affine := term (('+'|'-') term)* ; term := ['-'] (int ['*' ident] | ident ['*' int] | '(' affine ')')
  AffineExpr parse_affine(const char *what) {
    AffineExpr e = parse_affine_term(what);
    while (peek_is("+") || peek_is("-")) {
      bool minus = next().text == "-";
      AffineExpr t = parse_affine_term(what);
      accumulate(e, t, minus ? -1 : 1);
    }
    return e;
  }

  static void accumulate(AffineExpr &e, const AffineExpr &t, std::int64_t sign) {
    e.constant += sign * t.constant;
    for (const auto &[n, c] : t.coeffs) {
      auto &slot = e.coeffs[n];
      slot += sign * c;
      if (slot == 0)
        e.coeffs.erase(n);
    }
  }

  AffineExpr parse_affine_term(const char *what) {
    std::int64_t sign = 1;
    while (peek_is("-")) {
      next();
      sign = -sign;
    }
    AffineExpr e;
    const Token &at = peek();
    if (peek_is("(")) {
      next();
      e = parse_affine(what);
      expect(")");
    } else if (at.kind == Token::Kind::Int) {
      auto v = std::stoll(next().text);
      if (peek_is("*")) {
        next();
        auto name = expect_iterator(what);
        e.coeffs[name] = v;
      } else {
        e.constant = v;
      }
    } else if (at.kind == Token::Kind::Ident) {
      auto name = expect_iterator(what);
      std::int64_t c = 1;
      if (peek_is("*")) {
        next();
        if (peek().kind != Token::Kind::Int)
          fail(peek(), std::string("non-affine ") + what);
        c = std::stoll(next().text);
      }
      e.coeffs[name] = c;
    } else {
      fail(at, std::string("expected affine ") + what);
    }
    if (peek_is("*") || peek_is("/"))
      fail(peek(), std::string("non-affine ") + what);
    AffineExpr out;
    accumulate(out, e, sign);
    return out;
  }

  std::string expect_iterator(const char *what) {
    const Token &at = peek();
    auto name = expect_ident(what);
    if (!is_enclosing_iterator(name))
      fail(at, std::string("non-affine ") + what + ": '" + name +
                   "' is not an enclosing loop iterator");
    return name;
  }

  NodeRef parse_node(std::optional<std::size_t> parent) {
    if (peek_is_word("loop") || peek_is_word("for"))
      return parse_loop(parent);
    if (peek_is_word("if") || peek_is_word("else"))
      fail(peek(), "conditional statements are not supported");
    if (peek_is_word("while"))
      fail(peek(), "while loops are not supported");
    return parse_statement(parent);
  }

  NodeRef parse_loop(std::optional<std::size_t> parent) {
    next();
    const Token &at = peek();
    Loop l;
    l.id = expect_ident("loop iterator");
    if (k_.loop_index(l.id))
      fail(at, "duplicate loop iterator '" + l.id + "'");
    l.lower = parse_affine("loop bound");
    l.upper = parse_affine("loop bound");
    if (peek_is_word("step")) {
      const Token &st = next();
      std::int64_t sign = 1;
      if (peek_is("-")) {
        next();
        sign = -1;
      }
      auto step = sign * expect_int("step");
      if (step < 0)
        fail(st, "negative stride is not supported");
      if (step != 1)
        fail(st, "non-unit stride is not supported");
    }
    l.parent = parent;
    l.depth = scope_.size();
    std::size_t idx = k_.loops.size();
    k_.loops.push_back(std::move(l));
    expect("{");
    scope_.push_back(idx);
    std::vector<NodeRef> body;
    while (!peek_is("}")) {
      if (peek().kind == Token::Kind::End)
        fail(peek(), "unexpected end of input in loop body");
      body.push_back(parse_node(idx));
    }
    scope_.pop_back();
    expect("}");
    k_.loops[idx].body = std::move(body);
    return {NodeRef::Kind::Loop, idx};
  }

  ArrayAccess parse_access_tail(const Token &at, const std::string &name) {
    const ArrayDecl *d = k_.find_array(name);
    if (!d)
      fail(at, "undeclared array '" + name + "'");
    ArrayAccess a;
    a.array = name;
    while (peek_is("[")) {
      next();
      a.subscripts.push_back(parse_affine("subscript"));
      expect("]");
    }
    if (a.subscripts.size() != d->dims.size())
      fail(at, "'" + name + "' expects " + std::to_string(d->dims.size()) +
                   " subscripts, got " + std::to_string(a.subscripts.size()));
    return a;
  }

  ValueExpr parse_expr() {
    ValueExpr e = parse_product();
    while (peek_is("+") || peek_is("-")) {
      auto op = next().text == "+" ? OpKind::Add : OpKind::Sub;
      e = ValueExpr::make_binary(op, std::move(e), parse_product());
    }
    return e;
  }

  ValueExpr parse_product() {
    ValueExpr e = parse_atom();
    while (peek_is("*") || peek_is("/")) {
      auto op = next().text == "*" ? OpKind::Mul : OpKind::Div;
      e = ValueExpr::make_binary(op, std::move(e), parse_atom());
    }
    return e;
  }

  ValueExpr parse_atom() {
    const Token &at = peek();
    if (peek_is("(")) {
      next();
      auto e = parse_expr();
      expect(")");
      return e;
    }
    if (peek_is("-") && (peek(1).kind == Token::Kind::Int || peek(1).kind == Token::Kind::Number)) {
      next();
      return ValueExpr::make_constant("-" + next().text);
    }
    if (at.kind == Token::Kind::Int || at.kind == Token::Kind::Number)
      return ValueExpr::make_constant(next().text);
    if (at.kind == Token::Kind::Ident) {
      auto name = next().text;
      if (peek_is("[") || (k_.find_array(name) && k_.find_array(name)->is_scalar()))
        return ValueExpr::make_access(parse_access_tail(at, name));
      if (is_enclosing_iterator(name))
        fail(at, "loop iterator '" + name + "' used as a value");
      return ValueExpr::make_param(name);
    }
    fail(at, "expected expression");
  }

  static void collect(const ValueExpr &e, std::vector<ArrayAccess> &reads,
                      std::vector<OpKind> &ops) {
    switch (e.kind) {
    case ValueExpr::Kind::Access:
      reads.push_back(e.access);
      break;
    case ValueExpr::Kind::Binary:
      for (const auto &o : e.operands)
        collect(o, reads, ops);
      ops.push_back(e.op);
      break;
    default:
      break;
    }
  }

  NodeRef parse_statement(std::optional<std::size_t> parent) {
    const Token &at = peek();
    Statement s;
    s.id = expect_ident("statement id");
    if (k_.statement_index(s.id))
      fail(at, "duplicate statement id '" + s.id + "'");
    expect(":");
    const Token &lt = peek();
    auto name = expect_ident("assignment target");
    s.lhs = parse_access_tail(lt, name);
    if (peek_is("="))
      s.assign = AssignOp::Assign;
    else if (peek_is("+="))
      s.assign = AssignOp::AddAssign;
    else if (peek_is("*="))
      s.assign = AssignOp::MulAssign;
    else
      fail(peek(), "expected '=', '+=' or '*='");
    next();
    s.rhs = parse_expr();
    expect(";");
    if (s.is_accumulation())
      s.reads.push_back(s.lhs);
    collect(s.rhs, s.reads, s.ops);
    if (s.assign == AssignOp::AddAssign)
      s.ops.push_back(OpKind::Add);
    else if (s.assign == AssignOp::MulAssign)
      s.ops.push_back(OpKind::Mul);
    s.loops = scope_;
    s.parent = parent;
    k_.statements.push_back(std::move(s));
    return {NodeRef::Kind::Statement, k_.statements.size() - 1};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  KernelIR k_;
  std::vector<std::size_t> scope_;
};

} // namespace detail

/// Parses the kernel DSL (see README) into a validated KernelIR.
inline KernelIR parse_kernel(std::string_view text) {
  return detail::Parser(text).run();
}

} // namespace hlsbound
