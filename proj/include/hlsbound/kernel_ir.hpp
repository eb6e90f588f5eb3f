// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hlsbound {

/// coeffs[iterator] * iterator + ... + constant. Zero coefficients are never stored.
struct AffineExpr {
  std::map<std::string, std::int64_t> coeffs;
  std::int64_t constant = 0;

  bool is_constant() const { return coeffs.empty(); }

  /// Matches `iterator + c` with unit coefficient.
  std::optional<std::string> single_iterator() const {
    if (coeffs.size() == 1 && coeffs.begin()->second == 1)
      return coeffs.begin()->first;
    return std::nullopt;
  }

  template <typename Env> std::int64_t eval(const Env &env) const {
    std::int64_t v = constant;
    for (const auto &[name, c] : coeffs)
      v += c * env(name);
    return v;
  }

  std::string str() const {
    std::string out;
    for (const auto &[name, c] : coeffs) {
      if (!out.empty())
        out += c < 0 ? "-" : "+";
      else if (c < 0)
        out += "-";
      auto a = c < 0 ? -c : c;
      if (a != 1)
        out += std::to_string(a) + "*";
      out += name;
    }
    if (out.empty())
      return std::to_string(constant);
    if (constant > 0)
      out += "+" + std::to_string(constant);
    else if (constant < 0)
      out += std::to_string(constant);
    return out;
  }

  friend bool operator==(const AffineExpr &, const AffineExpr &) = default;
};

enum class Direction : std::uint8_t { In, Out, InOut };

inline std::string_view direction_name(Direction d) {
  switch (d) {
  case Direction::In: return "in";
  case Direction::Out: return "out";
  case Direction::InOut: return "inout";
  }
  return "?";
}

/// An array (dims non-empty) or a register scalar (dims empty).
struct ArrayDecl {
  std::string name;
  std::vector<std::int64_t> dims;
  int element_bits = 32;
  Direction direction = Direction::In;

  bool is_scalar() const { return dims.empty(); }
  std::int64_t elements() const {
    std::int64_t n = 1;
    for (auto d : dims)
      n *= d;
    return n;
  }
};

struct ArrayAccess {
  std::string array;
  std::vector<AffineExpr> subscripts;

  std::string str() const {
    std::string out = array;
    for (const auto &s : subscripts)
      out += "[" + s.str() + "]";
    return out;
  }
  friend bool operator==(const ArrayAccess &, const ArrayAccess &) = default;
};

/// Right-hand side expression tree of a statement.
struct ValueExpr {
  enum class Kind : std::uint8_t { Access, Constant, Param, Binary };
  Kind kind = Kind::Constant;
  ArrayAccess access;      // Access
  std::string text;        // Constant literal or Param name
  OpKind op = OpKind::Add; // Binary
  std::vector<ValueExpr> operands;

  static ValueExpr make_access(ArrayAccess a) {
    ValueExpr e;
    e.kind = Kind::Access;
    e.access = std::move(a);
    return e;
  }
  static ValueExpr make_constant(std::string t) {
    ValueExpr e;
    e.kind = Kind::Constant;
    e.text = std::move(t);
    return e;
  }
  static ValueExpr make_param(std::string t) {
    ValueExpr e;
    e.kind = Kind::Param;
    e.text = std::move(t);
    return e;
  }
  static ValueExpr make_binary(OpKind op, ValueExpr lhs, ValueExpr rhs) {
    ValueExpr e;
    e.kind = Kind::Binary;
    e.op = op;
    e.operands.push_back(std::move(lhs));
    e.operands.push_back(std::move(rhs));
    return e;
  }

  std::string str() const {
    switch (kind) {
    case Kind::Access: return access.str();
    case Kind::Constant:
    case Kind::Param: return text;
    case Kind::Binary:
      return "(" + operands[0].str() + " " + op_symbol(op) + " " +
             operands[1].str() + ")";
    }
    return "";
  }
};

enum class AssignOp : std::uint8_t { Assign, AddAssign, MulAssign };

struct NodeRef {
  enum class Kind : std::uint8_t { Loop, Statement };
  Kind kind;
  std::size_t index;

  bool is_loop() const { return kind == Kind::Loop; }
  friend bool operator==(const NodeRef &, const NodeRef &) = default;
};

struct Loop {
  std::string id; // the loop iterator, unique across the kernel
  AffineExpr lower;
  AffineExpr upper; // exclusive
  std::vector<NodeRef> body;
  std::optional<std::size_t> parent;
  std::size_t depth = 0;
};

struct Statement {
  std::string id;
  ArrayAccess lhs;
  AssignOp assign = AssignOp::Assign;
  ValueExpr rhs;
  /// Every access read by one instance, the accumulated lhs first.
  std::vector<ArrayAccess> reads;
  /// Arithmetic op chain in evaluation order.
  std::vector<OpKind> ops;
  /// Enclosing loops, outermost first.
  std::vector<std::size_t> loops;
  std::optional<std::size_t> parent;

  bool is_accumulation() const { return assign != AssignOp::Assign; }
};

struct KernelOptions {
  bool tree_reduction = true;
};

/// Summary AST of an affine loop nest. Loops are stored in pre-order and
/// statements in textual order; `root` and `Loop::body` keep syntactic order.
struct KernelIR {
  std::string name;
  std::vector<ArrayDecl> arrays;
  std::vector<Loop> loops;
  std::vector<Statement> statements;
  std::vector<NodeRef> root;
  KernelOptions options;

  const ArrayDecl *find_array(std::string_view n) const {
    for (const auto &a : arrays)
      if (a.name == n)
        return &a;
    return nullptr;
  }

  std::optional<std::size_t> loop_index(std::string_view id) const {
    for (std::size_t i = 0; i < loops.size(); ++i)
      if (loops[i].id == id)
        return i;
    return std::nullopt;
  }

  std::optional<std::size_t> statement_index(std::string_view id) const {
    for (std::size_t i = 0; i < statements.size(); ++i)
      if (statements[i].id == id)
        return i;
    return std::nullopt;
  }

  const std::vector<NodeRef> &children_of(std::optional<std::size_t> loop) const {
    return loop ? loops[*loop].body : root;
  }

  /// True if `inner` is strictly nested inside `outer`.
  bool is_nested_in(std::size_t inner, std::size_t outer) const {
    auto p = loops[inner].parent;
    while (p) {
      if (*p == outer)
        return true;
      p = loops[*p].parent;
    }
    return false;
  }

  std::vector<std::size_t> statements_under(std::size_t loop) const {
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < statements.size(); ++s) {
      const auto &ls = statements[s].loops;
      if (std::find(ls.begin(), ls.end(), loop) != ls.end())
        out.push_back(s);
    }
    return out;
  }

  std::vector<std::size_t> statements_in(const NodeRef &n) const {
    if (n.is_loop())
      return statements_under(n.index);
    return {n.index};
  }

  /// Loops strictly inside `loop`, pre-order.
  std::vector<std::size_t> loops_under(std::size_t loop) const {
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < loops.size(); ++l)
      if (is_nested_in(l, loop))
        out.push_back(l);
    return out;
  }

  /// Loops strictly enclosing `loop`, outermost first.
  std::vector<std::size_t> loops_above(std::size_t loop) const {
    std::vector<std::size_t> out;
    for (auto p = loops[loop].parent; p; p = loops[*p].parent)
      out.push_back(*p);
    std::reverse(out.begin(), out.end());
    return out;
  }

  bool has_loop_children(std::size_t loop) const {
    for (const auto &c : loops[loop].body)
      if (c.is_loop())
        return true;
    return false;
  }

  /// Arrays (not scalars) accessed by any statement in the list, sorted.
  std::set<std::string> arrays_accessed(const std::vector<std::size_t> &stmts) const {
    std::set<std::string> out;
    for (auto s : stmts) {
      const auto &st = statements[s];
      auto add = [&](const ArrayAccess &a) {
        if (auto *d = find_array(a.array); d && !d->is_scalar())
          out.insert(a.array);
      };
      add(st.lhs);
      for (const auto &r : st.reads)
        add(r);
    }
    return out;
  }
};

namespace detail {

inline void summarize_list(const KernelIR &k, const std::vector<NodeRef> &nodes,
                           std::string &out) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0) {
      // consecutive statements form one straight-line list
      bool stmt_run = !nodes[i - 1].is_loop() && !nodes[i].is_loop();
      out += stmt_run ? "," : ", ";
    }
    const auto &n = nodes[i];
    if (n.is_loop()) {
      const auto &l = k.loops[n.index];
      out += "Loop_" + l.id + "(";
      summarize_list(k, l.body, out);
      out += ")";
    } else {
      out += k.statements[n.index].id;
    }
  }
}

inline nlohmann::ordered_json affine_json(const AffineExpr &e) {
  nlohmann::ordered_json j;
  j["coeffs"] = nlohmann::ordered_json::object();
  for (const auto &[n, c] : e.coeffs)
    j["coeffs"][n] = c;
  j["constant"] = e.constant;
  return j;
}

inline nlohmann::ordered_json access_json(const ArrayAccess &a) {
  nlohmann::ordered_json j;
  j["array"] = a.array;
  j["subscripts"] = nlohmann::ordered_json::array();
  for (const auto &s : a.subscripts)
    j["subscripts"].push_back(affine_json(s));
  return j;
}

inline nlohmann::ordered_json value_json(const ValueExpr &e) {
  nlohmann::ordered_json j;
  switch (e.kind) {
  case ValueExpr::Kind::Access:
    j["access"] = access_json(e.access);
    break;
  case ValueExpr::Kind::Constant:
    j["constant"] = e.text;
    break;
  case ValueExpr::Kind::Param:
    j["param"] = e.text;
    break;
  case ValueExpr::Kind::Binary:
    j["op"] = op_name(e.op);
    j["operands"] = nlohmann::ordered_json::array();
    for (const auto &o : e.operands)
      j["operands"].push_back(value_json(o));
    break;
  }
  return j;
}

inline nlohmann::ordered_json node_json(const KernelIR &k, const NodeRef &n) {
  nlohmann::ordered_json j;
  if (n.is_loop()) {
    const auto &l = k.loops[n.index];
    j["loop"] = l.id;
    j["lower"] = affine_json(l.lower);
    j["upper"] = affine_json(l.upper);
    j["body"] = nlohmann::ordered_json::array();
    for (const auto &c : l.body)
      j["body"].push_back(node_json(k, c));
  } else {
    const auto &s = k.statements[n.index];
    j["statement"] = s.id;
    j["write"] = access_json(s.lhs);
    j["assign"] = s.assign == AssignOp::Assign      ? "="
                  : s.assign == AssignOp::AddAssign ? "+="
                                                    : "*=";
    j["rhs"] = value_json(s.rhs);
    j["reads"] = nlohmann::ordered_json::array();
    for (const auto &r : s.reads)
      j["reads"].push_back(access_json(r));
    j["ops"] = nlohmann::ordered_json::array();
    for (auto o : s.ops)
      j["ops"].push_back(op_name(o));
  }
  return j;
}

} // namespace detail

/// Constructor notation, e.g. `Loop_i(Loop_j1(S1), Loop_j2(S2,S3))`.
inline std::string summarize(const KernelIR &k) {
  std::string out;
  detail::summarize_list(k, k.root, out);
  return out;
}

/// Canonical serialization; see docs/schemas/kernel_ir.schema.json.
inline nlohmann::ordered_json to_json(const KernelIR &k) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["name"] = k.name;
  j["options"] = {{"tree_reduction", k.options.tree_reduction}};
  j["arrays"] = nlohmann::ordered_json::array();
  for (const auto &a : k.arrays) {
    j["arrays"].push_back({{"name", a.name},
                           {"dims", a.dims},
                           {"element_bits", a.element_bits},
                           {"direction", direction_name(a.direction)}});
  }
  j["root"] = nlohmann::ordered_json::array();
  for (const auto &n : k.root)
    j["root"].push_back(detail::node_json(k, n));
  return j;
}

} // namespace hlsbound
