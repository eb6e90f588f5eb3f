// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/nlp.hpp"

#include <regex>

namespace hlsbound {

namespace detail {

inline void collect_tables(const fx::Expr &e, std::set<std::string> &out) {
  if (e->op == fx::Op::Table)
    out.insert(e->name);
  for (const auto &a : e->args)
    collect_tables(a, out);
}

/// Range of every model variable over its whole domain.
inline fx::IntervalEnv domain_env(const KernelModel &m,
                                  std::unordered_map<std::string, fx::Interval> &ranges) {
  for (const auto &v : m.vars())
    ranges[v.name] = {Rational(v.domain.front()), Rational(v.domain.back())};
  for (const auto &t : m.partitions()) {
    fx::IntervalEnv inner{[&ranges](const std::string &n) { return ranges.at(n); }, {}};
    ranges["AP_" + t.array + "_" + std::to_string(t.dim)] = fx::eval_interval(t.expr, inner);
  }
  std::unordered_map<std::string, std::size_t> tables;
  for (const auto &l : m.loops())
    tables[KernelModel::table_name(l.id)] = l.index;
  return {[&ranges](const std::string &n) { return ranges.at(n); },
          [&m, tables](const std::string &t, const fx::Interval &uf) {
            auto l = tables.at(t);
            std::optional<fx::Interval> r;
            for (auto d : m.loop(l).uf_domain) {
              if (Rational(d) < uf.lo || Rational(d) > uf.hi)
                continue;
              Rational v(m.body_bound(l, d).bound);
              r = r ? fx::Interval{std::min(r->lo, v), std::max(r->hi, v)} : fx::Interval::point(v);
            }
            return r.value_or(fx::Interval::point(0));
          }};
}

/// True when the constraint holds for every assignment in the domains.
inline bool always_holds(const Constraint &c, const fx::IntervalEnv &env) {
  auto a = fx::eval_interval(c.lhs, env), b = fx::eval_interval(c.rhs, env);
  switch (c.rel) {
  case Relation::Le:
    return a.hi <= b.lo;
  case Relation::Ge:
    return a.lo >= b.hi;
  case Relation::Eq:
    return a.is_point() && b.is_point() && a.lo == b.lo;
  }
  return false;
}

inline std::string join_values(const std::vector<std::int64_t> &vs) {
  std::string s;
  for (std::size_t i = 0; i < vs.size(); ++i)
    s += (i ? ", " : "") + std::to_string(vs[i]);
  return s;
}

} // namespace detail

/// Writes the problem as a self-contained algebraic model: body-bound
/// tables as params, pragma variables with their domains, partition factors
/// and latency terms as defined variables, every constraint that can be
/// violated with its equation tag, and the latency objective.
inline std::string export_model(const NlpProblem &p) {
  const auto &m = p.m();
  const auto &k = p.kernel();
  std::ostringstream out;
  out << "# pragma-selection model of kernel '" << k.name << "'\n";
  out << "# schema_version 1\n\n";

  std::set<std::string> tables;
  for (const auto &e : {m.computation(), m.communication(), m.dsp(), m.onchip_bits()})
    detail::collect_tables(e, tables);
  for (const auto &l : m.loops()) {
    auto name = KernelModel::table_name(l.id);
    if (!tables.count(name))
      continue;
    out << "param " << name << " :=";
    for (auto d : l.uf_domain)
      out << " " << d << " " << m.body_bound(l.index, d).bound;
    out << ";\n";
  }
  if (!tables.empty())
    out << "\n";

  for (const auto &v : m.vars()) {
    if (v.domain == std::vector<std::int64_t>{0, 1})
      out << "var " << v.name << " binary;\n";
    else
      out << "var " << v.name << " in {" << detail::join_values(v.domain) << "};\n";
  }
  out << "\n";
  for (const auto &t : m.partitions())
    out << "var AP_" << t.array << "_" << t.dim << " = " << fx::format(t.expr) << ";\n";
  out << "var computation = " << fx::format(m.computation()) << ";\n";
  out << "var communication = " << fx::format(m.communication()) << ";\n\n";

  std::unordered_map<std::string, fx::Interval> ranges;
  auto env = detail::domain_env(m, ranges);
  for (const auto &c : p.constraints) {
    if (detail::always_holds(c, env))
      continue;
    out << "subject to " << c.name << ": " << fx::format(c.lhs) << " "
        << relation_symbol(c.rel) << " " << fx::format(c.rhs) << ";  # " << c.tag() << "\n";
  }
  out << "\nminimize latency: floor(computation) + floor(communication);\n";
  return out.str();
}

/// A model read back from its text form.
struct ImportedModel {
  struct Var {
    std::string name;
    std::vector<std::int64_t> domain;
  };
  struct Row {
    std::string name;
    std::string tag;
    fx::Expr lhs;
    Relation rel = Relation::Le;
    fx::Expr rhs;
  };

  std::map<std::string, std::map<std::int64_t, Rational>> params;
  std::vector<Var> vars;
  std::vector<std::pair<std::string, fx::Expr>> defined;
  std::vector<Row> constraints;
  std::string objective_name;
  fx::Expr objective;

  using Values = std::unordered_map<std::string, std::int64_t>;

  /// Exact value of `e` with pragma variables from `vals`.
  Rational eval(const fx::Expr &e, const Values &vals) const {
    std::unordered_map<std::string, Rational> memo;
    return fx::eval(substitute(e, vals, memo), env(vals));
  }

  Cycles objective_value(const Values &vals) const { return floor_of(eval(objective, vals)); }

  /// Names of violated constraints, in file order.
  std::vector<std::string> violated(const Values &vals) const {
    std::vector<std::string> out;
    for (const auto &r : constraints) {
      auto a = eval(r.lhs, vals), b = eval(r.rhs, vals);
      bool ok = r.rel == Relation::Le ? a <= b : r.rel == Relation::Ge ? a >= b : a == b;
      if (!ok)
        out.push_back(r.name);
    }
    return out;
  }

private:
  fx::Env env(const Values &vals) const {
    return {[&vals](const std::string &n) -> std::int64_t {
              auto it = vals.find(n);
              if (it == vals.end())
                throw ConfigError("unbound variable '" + n + "'");
              return it->second;
            },
            [this](const std::string &t, std::int64_t i) {
              auto it = params.find(t);
              if (it == params.end())
                throw ConfigError("unknown param '" + t + "'");
              auto jt = it->second.find(i);
              if (jt == it->second.end())
                throw ConfigError("param '" + t + "' has no entry " + std::to_string(i));
              return jt->second;
            }};
  }

  // Defined variables may be fractional (latency terms), so they are
  // replaced by their values before evaluation.
  fx::Expr substitute(const fx::Expr &e, const Values &vals,
                      std::unordered_map<std::string, Rational> &memo) const {
    if (e->op == fx::Op::Var && !vals.count(e->name))
      return fx::constant(defined_value(e->name, vals, memo));
    if (e->args.empty())
      return e;
    auto n = std::make_shared<fx::Node>(*e);
    for (auto &a : n->args)
      a = substitute(a, vals, memo);
    return n;
  }

  Rational defined_value(const std::string &n, const Values &vals,
                         std::unordered_map<std::string, Rational> &memo) const {
    if (auto it = memo.find(n); it != memo.end())
      return it->second;
    for (const auto &[name, expr] : defined)
      if (name == n)
        return memo[n] = fx::eval(substitute(expr, vals, memo), env(vals));
    throw ConfigError("unbound variable '" + n + "'");
  }
};

/// Parses the text written by export_model.
inline ImportedModel import_model(std::string_view text) {
  ImportedModel r;
  std::size_t line = 1, stmt_line = 1;
  std::string stmt, comment;
  auto fail = [&](const std::string &msg) -> ParseError {
    return ParseError("model: " + msg, stmt_line, 1);
  };
  auto trim = [](std::string s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  auto expr = [&](const std::string &s) {
    try {
      return fx::parse(s);
    } catch (const ParseError &e) {
      throw fail(std::string("bad expression: ") + e.what());
    }
  };
  static const std::regex ident(R"([A-Za-z_][A-Za-z0-9_]*)");
  auto handle = [&](std::string s, const std::string &note) {
    s = trim(s);
    if (s.empty())
      return;
    std::smatch mt;
    if (s.rfind("param ", 0) == 0) {
      auto pos = s.find(":=");
      if (pos == std::string::npos)
        throw fail("param without ':='");
      auto name = trim(s.substr(6, pos - 6));
      std::istringstream vs(s.substr(pos + 2));
      auto &tbl = r.params[name];
      std::int64_t i, v;
      while (vs >> i) {
        if (!(vs >> v))
          throw fail("param '" + name + "' has an index without a value");
        tbl[i] = Rational(v);
      }
      if (!vs.eof())
        throw fail("param '" + name + "' has a non-integer entry");
    } else if (s.rfind("var ", 0) == 0) {
      auto rest = trim(s.substr(4));
      auto sp = rest.find_first_of(" =");
      auto name = rest.substr(0, sp);
      if (!std::regex_match(name, ident))
        throw fail("bad variable name '" + name + "'");
      auto tail = sp == std::string::npos ? std::string() : trim(rest.substr(sp));
      if (tail == "binary") {
        r.vars.push_back({name, {0, 1}});
      } else if (tail.rfind("in", 0) == 0) {
        auto b = tail.find('{'), e = tail.find('}');
        if (b == std::string::npos || e == std::string::npos)
          throw fail("domain of '" + name + "' needs braces");
        std::vector<std::int64_t> dom;
        std::string item;
        std::istringstream ds(tail.substr(b + 1, e - b - 1));
        while (std::getline(ds, item, ','))
          dom.push_back(std::stoll(trim(item)));
        r.vars.push_back({name, dom});
      } else if (!tail.empty() && tail[0] == '=') {
        r.defined.emplace_back(name, expr(tail.substr(1)));
      } else {
        throw fail("unknown declaration of '" + name + "'");
      }
    } else if (s.rfind("subject to ", 0) == 0) {
      auto colon = s.find(':');
      if (colon == std::string::npos)
        throw fail("constraint without ':'");
      ImportedModel::Row row;
      row.name = trim(s.substr(11, colon - 11));
      auto body = s.substr(colon + 1);
      std::size_t pos;
      std::size_t len = 2;
      if ((pos = body.find("<=")) != std::string::npos)
        row.rel = Relation::Le;
      else if ((pos = body.find(">=")) != std::string::npos)
        row.rel = Relation::Ge;
      else if ((pos = body.find('=')) != std::string::npos)
        row.rel = Relation::Eq, len = 1;
      else
        throw fail("constraint '" + row.name + "' has no relation");
      row.lhs = expr(body.substr(0, pos));
      row.rhs = expr(body.substr(pos + len));
      std::regex tag(R"(Eq\.\d+)");
      if (std::regex_search(note, mt, tag))
        row.tag = mt.str();
      r.constraints.push_back(std::move(row));
    } else if (s.rfind("minimize ", 0) == 0) {
      auto colon = s.find(':');
      if (colon == std::string::npos)
        throw fail("objective without ':'");
      r.objective_name = trim(s.substr(9, colon - 9));
      r.objective = expr(s.substr(colon + 1));
    } else {
      throw fail("unknown statement '" + s.substr(0, s.find(' ')) + "'");
    }
  };

  std::string pending; // statement text seen so far
  std::size_t i = 0;
  while (i < text.size()) {
    auto eol = text.find('\n', i);
    if (eol == std::string_view::npos)
      eol = text.size();
    std::string ln(text.substr(i, eol - i));
    auto hash = ln.find('#');
    std::string note = hash == std::string::npos ? "" : ln.substr(hash);
    if (hash != std::string::npos)
      ln.resize(hash);
    std::size_t start = 0, semi;
    while ((semi = ln.find(';', start)) != std::string::npos) {
      if (trim(pending).empty())
        stmt_line = line;
      pending += ln.substr(start, semi - start);
      handle(pending, note);
      pending.clear();
      start = semi + 1;
    }
    if (trim(pending).empty() && !trim(ln.substr(start)).empty())
      stmt_line = line;
    pending += " " + ln.substr(start);
    i = eol + 1;
    ++line;
  }
  if (!trim(pending).empty())
    throw fail("unterminated statement");
  if (!r.objective)
    throw ParseError("model: no objective", line, 1);
  return r;
}

} // namespace hlsbound
