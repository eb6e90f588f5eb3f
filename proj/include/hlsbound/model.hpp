// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/analysis.hpp"
#include "hlsbound/config.hpp"
#include "hlsbound/formula.hpp"
#include "hlsbound/opgraph.hpp"

#include <mutex>
#include <unordered_map>

namespace hlsbound {

struct ModelOptions {
  ResourceLimits resources = ResourceLimits::unbounded();
  /// Largest region (in source ops) expanded into an operation graph.
  std::size_t expansion_cap = std::size_t{1} << 17;
};

/// Static per-loop facts the formulas are built from.
struct LoopModel {
  std::size_t index = 0;
  std::string id;
  bool const_tc = true;
  std::int64_t tc = 0; // tc_max
  Rational tc_avg{0};
  Rational q{0}; // fraction of executions with at least one iteration
  Cycles ii = 1;
  bool carries = false;
  bool straight = false; // no loop children
  std::vector<std::int64_t> domain;    // tile: divisors of tc_max
  std::vector<std::int64_t> uf_domain; // divisors, capped by a distance > 1
  std::optional<std::int64_t> distance; // smallest carried distance
};

/// Lower bound on one chunk of `uf` consecutive iterations of a loop with
/// everything inside fully unrolled.
struct BodyBound {
  Cycles bound = 0;
  bool expanded = true; // false when the op-count fallback was used
};

enum class VarKind : std::uint8_t { Pip, Uf, Tile, Cache };

struct VarInfo {
  std::string name;
  VarKind kind = VarKind::Uf;
  std::size_t loop = 0;
  std::string array; // Cache only
  std::vector<std::int64_t> domain;
};

struct PartitionTerm {
  std::string array;
  std::size_t dim = 0;
  std::vector<std::size_t> loops; // loops whose iterator indexes this dim
  fx::Expr expr;
};

namespace detail {

/// True when every full chunk of `loop` (in any execution) expands to the
/// same graph up to a translation of the touched cells.
inline bool chunks_invariant(const KernelIR &k, std::size_t loop) {
  std::set<std::string> outside;
  for (auto a : k.loops_above(loop))
    outside.insert(k.loops[a].id);
  outside.insert(k.loops[loop].id);
  auto touches = [&](const AffineExpr &e) {
    for (const auto &[it, c] : e.coeffs)
      if (outside.count(it))
        return true;
    return false;
  };
  for (auto m : k.loops_under(loop))
    if (touches(k.loops[m].lower) || touches(k.loops[m].upper))
      return false;
  std::map<std::string, std::vector<std::map<std::string, std::int64_t>>> shift;
  for (auto s : k.statements_under(loop)) {
    const auto &st = k.statements[s];
    std::vector<const ArrayAccess *> acc{&st.lhs};
    for (const auto &r : st.reads)
      acc.push_back(&r);
    for (const auto *a : acc) {
      std::vector<std::map<std::string, std::int64_t>> v;
      for (const auto &sub : a->subscripts) {
        std::map<std::string, std::int64_t> m;
        for (const auto &[it, c] : sub.coeffs)
          if (outside.count(it))
            m[it] = c;
        v.push_back(std::move(m));
      }
      auto [it, fresh] = shift.emplace(a->array, v);
      if (!fresh && it->second != v)
        return false;
    }
  }
  return true;
}

} // namespace detail

/// Symbolic latency and resource model of one kernel. All formulas are
/// expressions over the pragma variables `pip_L`, `uf_L`, `tile_L` and
/// `cache_L__A`, plus one body-bound table `B_L` per loop indexed by uf.
class KernelModel {
public:
  KernelModel(KernelIR k, Analysis a, CalibrationTable cal, ModelOptions opt = {})
      : k_(std::move(k)), a_(std::move(a)), cal_(std::move(cal)), opt_(std::move(opt)), ck_(k_) {
    for (std::size_t l = 0; l < k_.loops.size(); ++l)
      loops_.push_back(make_loop(l));
    for (std::size_t s = 0; s < k_.statements.size(); ++s)
      stmt_bound_.push_back(statement_bound(s));
    pipe_.assign(loops_.size(), fx::constant(0));
    seq_.assign(loops_.size(), fx::constant(0));
    make_vars();
    comp_ = list_term(k_.root);
    make_memory();
    make_resources();
  }
  KernelModel(const KernelModel &) = delete;
  KernelModel &operator=(const KernelModel &) = delete;

  const KernelIR &kernel() const { return k_; }
  const Analysis &analysis() const { return a_; }
  const CalibrationTable &calibration() const { return cal_; }
  const ModelOptions &options() const { return opt_; }
  const std::vector<LoopModel> &loops() const { return loops_; }
  const LoopModel &loop(std::size_t l) const { return loops_[l]; }
  const std::vector<VarInfo> &vars() const { return vars_; }
  const std::vector<CachePoint> &cache_pairs() const { return cache_pairs_; }
  Cycles statement_term(std::size_t s) const { return stmt_bound_[s]; }

  const fx::Expr &computation() const { return comp_; }
  const fx::Expr &communication() const { return mem_; }
  fx::Expr total() const { return fx::add(comp_, mem_); }
  const fx::Expr &pipelined_term(std::size_t l) const { return pipe_[l]; }
  const fx::Expr &sequential_term(std::size_t l) const { return seq_[l]; }
  const fx::Expr &dsp() const { return dsp_; }
  const std::map<OpKind, fx::Expr> &dsp_by_op() const { return dsp_by_op_; }
  const fx::Expr &onchip_bits() const { return onchip_; }
  const std::vector<PartitionTerm> &partitions() const { return ap_; }

  static std::string pip_var(const std::string &l) { return "pip_" + l; }
  static std::string uf_var(const std::string &l) { return "uf_" + l; }
  static std::string tile_var(const std::string &l) { return "tile_" + l; }
  static std::string cache_var(const std::string &l, const std::string &a) {
    return "cache_" + l + "__" + a;
  }
  static std::string table_name(const std::string &l) { return "B_" + l; }

  /// Loops that enclose every access to `array`.
  std::vector<std::size_t> covering_loops(const std::string &array) const {
    std::vector<std::size_t> stmts;
    for (std::size_t s = 0; s < k_.statements.size(); ++s)
      if (k_.arrays_accessed({s}).count(array))
        stmts.push_back(s);
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < k_.loops.size(); ++l) {
      bool all = !stmts.empty();
      for (auto s : stmts) {
        const auto &ls = k_.statements[s].loops;
        all &= std::find(ls.begin(), ls.end(), l) != ls.end();
      }
      if (all)
        out.push_back(l);
    }
    return out;
  }

  /// Transfer cost in cycles of `array` cached at `loop` (empty = top level).
  Cycles transfer_cycles(const std::string &array, std::optional<std::size_t> loop) const {
    const auto *f = a_.footprint(array, loop);
    if (!f)
      return 0;
    auto bits = f->footprint_elems * f->element_bits;
    return f->transfer_count() * ((bits + cal_.burst_bits - 1) / cal_.burst_bits);
  }

  std::int64_t footprint_bits(const std::string &array, std::optional<std::size_t> loop) const {
    const auto *f = a_.footprint(array, loop);
    return f ? f->footprint_elems * f->element_bits : 0;
  }

  // -------------------------------------------------------------------------
  // Evaluation

  std::unordered_map<std::string, std::int64_t> values(const PragmaConfig &c) const {
    validate_shape(k_, c);
    std::unordered_map<std::string, std::int64_t> v;
    for (const auto &x : vars_) {
      const auto &id = k_.loops[x.loop].id;
      switch (x.kind) {
      case VarKind::Pip:
        v[x.name] = c.pip(id) ? 1 : 0;
        break;
      case VarKind::Uf:
        v[x.name] = c.uf(id);
        break;
      case VarKind::Tile:
        v[x.name] = c.at(id).tile;
        break;
      case VarKind::Cache:
        v[x.name] = c.cached(id, x.array) ? 1 : 0;
        break;
      }
    }
    for (const auto &cp : c.cache)
      if (!v.count(cache_var(cp.loop, cp.array)))
        throw ConfigError("array '" + cp.array + "' is not accessed under loop '" + cp.loop + "'");
    return v;
  }

  fx::Env env(const std::unordered_map<std::string, std::int64_t> &vals) const {
    return {[&vals](const std::string &n) -> std::int64_t {
              auto it = vals.find(n);
              if (it == vals.end())
                throw ConfigError("unbound variable '" + n + "'");
              return it->second;
            },
            [this](const std::string &t, std::int64_t uf) { return Rational(table_value(t, uf)); }};
  }

  Rational eval(const fx::Expr &e, const PragmaConfig &c) const {
    auto v = values(c);
    return fx::eval(e, env(v));
  }

  Cycles table_value(const std::string &table, std::int64_t uf) const {
    auto it = table_index_.find(table);
    if (it == table_index_.end())
      throw ConfigError("unknown table '" + table + "'");
    return body_bound(it->second, uf).bound;
  }

  /// Memoized chunk bound; safe to call from several threads.
  BodyBound body_bound(std::size_t l, std::int64_t uf) const {
    if (uf < 1)
      throw ConfigError("uf must be >= 1");
    {
      std::lock_guard<std::mutex> lock(memo_mutex_);
      if (auto it = memo_.find({l, uf}); it != memo_.end())
        return it->second;
    }
    auto b = compute_body_bound(l, uf);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    memo_.emplace(std::make_pair(l, uf), b);
    return b;
  }

private:
  LoopModel make_loop(std::size_t l) const {
    const auto &t = a_.trip[l];
    LoopModel m;
    m.index = l;
    m.id = k_.loops[l].id;
    m.const_tc = t.is_constant();
    m.tc = t.tc_max;
    m.tc_avg = t.tc_avg;
    m.q = t.executions ? Rational(t.nonempty_executions, t.executions) : Rational(0);
    m.ii = a_.min_ii[l];
    m.carries = a_.carries_dependence(l);
    m.straight = !k_.has_loop_children(l);
    m.domain = m.const_tc ? t.divisors_of_tc_max : std::vector<std::int64_t>{1};
    m.distance = a_.min_distance(l);
    for (auto d : m.domain)
      if (!m.distance || *m.distance <= 1 || d <= *m.distance)
        m.uf_domain.push_back(d);
    return m;
  }

  Cycles statement_bound(std::size_t s) const {
    auto g = build_graph(k_, {NodeRef{NodeRef::Kind::Statement, s}});
    return region_bound(g, opt_.resources, cal_).bound;
  }

  void make_vars() {
    for (const auto &l : loops_)
      vars_.push_back({pip_var(l.id), VarKind::Pip, l.index, {}, {0, 1}});
    for (const auto &l : loops_)
      vars_.push_back({uf_var(l.id), VarKind::Uf, l.index, {}, l.uf_domain});
    for (const auto &l : loops_)
      vars_.push_back({tile_var(l.id), VarKind::Tile, l.index, {}, l.domain});
    for (const auto &l : loops_) {
      table_index_[table_name(l.id)] = l.index;
      for (const auto &a : k_.arrays_accessed(k_.statements_under(l.index))) {
        if (!a_.footprint(a, l.index))
          continue;
        cache_pairs_.push_back({l.id, a});
        vars_.push_back({cache_var(l.id, a), VarKind::Cache, l.index, a, {0, 1}});
      }
    }
    std::set<std::string> seen;
    for (const auto &v : vars_)
      if (!seen.insert(v.name).second)
        throw ConfigError("variable name collision: '" + v.name + "'");
  }

  /// Children sequenced by loop-independent dependences: each child starts
  /// after every earlier child it depends on, so the list costs the longest
  /// weighted chain.
  fx::Expr list_term(const std::vector<NodeRef> &nodes) {
    std::vector<fx::Expr> term, finish;
    for (const auto &n : nodes)
      term.push_back(n.is_loop() ? loop_term(n.index) : fx::constant(stmt_bound_[n.index]));
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      std::vector<fx::Expr> before;
      for (std::size_t i = 0; i < j; ++i)
        if (dependent(nodes[i], nodes[j]))
          before.push_back(finish[i]);
      finish.push_back(before.empty() ? term[j] : fx::add(term[j], fx::max(before)));
    }
    return fx::max(finish);
  }

  bool dependent(const NodeRef &a, const NodeRef &b) const {
    auto sa = k_.statements_in(a), sb = k_.statements_in(b);
    std::set<std::size_t> A(sa.begin(), sa.end()), B(sb.begin(), sb.end());
    for (const auto &d : a_.deps)
      if (!d.carrier && ((A.count(d.src_stmt) && B.count(d.dst_stmt)) ||
                         (B.count(d.src_stmt) && A.count(d.dst_stmt))))
        return true;
    return false;
  }

  fx::Expr loop_term(std::size_t l) {
    const auto &m = loops_[l];
    auto uf = fx::var(uf_var(m.id));
    auto pip = fx::var(pip_var(m.id));
    auto B = fx::table(table_name(m.id), uf);
    auto II = fx::constant(m.ii);
    fx::Expr body = m.straight ? B : list_term(k_.loops[l].body);
    if (m.tc == 0)
      return fx::constant(0);
    fx::Expr pipe, seq;
    if (m.const_tc) {
      auto chunks = fx::floor(fx::div(fx::constant(m.tc), uf));
      pipe = fx::add(fx::mul(II, fx::sub(chunks, fx::constant(1))), B);
      if (!m.straight && m.carries)
        seq = fx::mul(fx::constant(m.tc), body);
      else
        seq = fx::mul(chunks, body);
    } else {
      pipe = fx::floor(fx::add(fx::mul(II, fx::sub(fx::div(fx::constant(m.tc_avg), uf),
                                                   fx::constant(m.q))),
                               fx::mul(fx::constant(m.q), B)));
      seq = fx::floor(fx::mul(fx::constant(m.tc_avg), body));
    }
    pipe_[l] = pipe;
    seq_[l] = seq;
    return fx::add(fx::mul(pip, pipe), fx::mul(fx::sub(fx::constant(1), pip), seq));
  }

  void make_memory() {
    std::vector<fx::Expr> levels;
    for (const auto &l : loops_) {
      std::vector<fx::Expr> at;
      for (const auto &cp : cache_pairs_)
        if (cp.loop == l.id)
          at.push_back(fx::mul(fx::var(cache_var(cp.loop, cp.array)),
                               fx::constant(transfer_cycles(cp.array, l.index))));
      if (!at.empty())
        levels.push_back(fx::max(std::move(at)));
    }
    std::vector<fx::Expr> top;
    for (const auto &arr : k_.arrays) {
      if (arr.is_scalar() || !a_.footprint(arr.name, std::nullopt))
        continue;
      auto cost = transfer_cycles(arr.name, std::nullopt);
      if (cost == 0)
        continue;
      std::vector<fx::Expr> cached;
      for (auto l : covering_loops(arr.name))
        if (std::count(cache_pairs_.begin(), cache_pairs_.end(),
                       CachePoint{k_.loops[l].id, arr.name}))
          cached.push_back(fx::var(cache_var(k_.loops[l].id, arr.name)));
      top.push_back(fx::mul(fx::sub(fx::constant(1), fx::add(cached)), fx::constant(cost)));
    }
    if (!top.empty())
      levels.push_back(fx::max(std::move(top)));
    mem_ = fx::add(levels);
  }

  using Demand = std::map<OpKind, fx::Expr>;

  Demand statement_demand(std::size_t s) const {
    const auto &st = k_.statements[s];
    std::vector<fx::Expr> mcu, ii{fx::constant(1)};
    for (auto l : st.loops) {
      mcu.push_back(fx::var(uf_var(k_.loops[l].id)));
      if (loops_[l].ii > 1)
        ii.push_back(fx::mul(fx::var(pip_var(k_.loops[l].id)), fx::constant(loops_[l].ii - 1)));
    }
    Demand d;
    std::map<OpKind, std::int64_t> count;
    for (auto op : st.ops)
      ++count[op];
    for (const auto &[op, c] : count) {
      if (cal_.dsp(op) == 0)
        continue;
      auto units = fx::mul(fx::constant(c * cal_.dsp(op)), fx::mul(mcu));
      d[op] = fx::div(units, fx::add(ii));
    }
    return d;
  }

  /// Independent dependence components run concurrently and add up; within
  /// a component units are shared and the maximum is charged.
  Demand list_demand(const std::vector<NodeRef> &nodes) const {
    std::vector<std::size_t> comp(nodes.size());
    std::iota(comp.begin(), comp.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      return comp[x] == x ? x : comp[x] = find(comp[x]);
    };
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j)
        if (dependent(nodes[i], nodes[j]))
          comp[find(j)] = find(i);
    std::map<std::size_t, std::map<OpKind, std::vector<fx::Expr>>> groups;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      auto d = nodes[i].is_loop() ? list_demand(k_.loops[nodes[i].index].body)
                                  : statement_demand(nodes[i].index);
      for (auto &[op, e] : d)
        groups[find(i)][op].push_back(e);
    }
    std::map<OpKind, std::vector<fx::Expr>> sum;
    for (auto &[_, g] : groups)
      for (auto &[op, es] : g)
        sum[op].push_back(fx::max(es));
    Demand out;
    for (auto &[op, es] : sum)
      out[op] = fx::add(es);
    return out;
  }

  void make_resources() {
    dsp_by_op_ = list_demand(k_.root);
    std::vector<fx::Expr> all;
    for (const auto &[_, e] : dsp_by_op_)
      all.push_back(e);
    dsp_ = fx::add(all);

    std::vector<fx::Expr> bits;
    for (const auto &cp : cache_pairs_)
      bits.push_back(fx::mul(fx::var(cache_var(cp.loop, cp.array)),
                             fx::constant(footprint_bits(cp.array, *k_.loop_index(cp.loop)))));
    onchip_ = fx::add(bits);

    for (const auto &arr : k_.arrays) {
      if (arr.is_scalar())
        continue;
      std::vector<std::set<std::size_t>> dims(arr.dims.size());
      for (const auto &st : k_.statements) {
        std::vector<const ArrayAccess *> acc{&st.lhs};
        for (const auto &r : st.reads)
          acc.push_back(&r);
        for (const auto *a : acc)
          if (a->array == arr.name)
            for (std::size_t d = 0; d < a->subscripts.size(); ++d)
              for (const auto &[it, c] : a->subscripts[d].coeffs)
                if (c != 0)
                  dims[d].insert(*k_.loop_index(it));
      }
      for (std::size_t d = 0; d < dims.size(); ++d) {
        PartitionTerm t{arr.name, d, {dims[d].begin(), dims[d].end()}, nullptr};
        std::vector<fx::Expr> ufs;
        for (auto l : t.loops)
          ufs.push_back(fx::var(uf_var(k_.loops[l].id)));
        t.expr = fx::lcm(std::move(ufs));
        ap_.push_back(std::move(t));
      }
    }
  }

  // -------------------------------------------------------------------------
  // Chunk bounds

  /// Source ops executed by one iteration of `l` (inner trip counts at
  /// `tc_min` for a lower count, `tc_max` for an upper estimate).
  std::map<OpKind, std::int64_t> ops_per_iteration(std::size_t l, bool upper) const {
    std::map<OpKind, std::int64_t> out;
    for (auto s : k_.statements_under(l)) {
      const auto &st = k_.statements[s];
      std::int64_t inst = 1;
      for (auto m : st.loops)
        if (k_.is_nested_in(m, l))
          inst *= upper ? a_.trip[m].tc_max : a_.trip[m].tc_min;
      for (auto op : st.ops)
        out[op] += inst;
    }
    return out;
  }

  BodyBound fallback_bound(std::size_t l, std::int64_t uf) const {
    Cycles b = 0;
    for (const auto &[op, per] : ops_per_iteration(l, false)) {
      auto count = per * uf;
      if (count == 0)
        continue;
      b = std::max(b, cal_.latency(op));
      if (auto lim = opt_.resources.limit(op)) {
        if (*lim <= 0)
          throw ConfigError(std::string("infeasible resources: no '") + std::string(op_name(op)) +
                            "' unit available");
        b = std::max(b, (count * cal_.latency(op) + *lim - 1) / *lim);
      }
    }
    return {b, false};
  }

  Cycles chunk_bound(std::size_t l, IterEnv env, std::int64_t first, std::int64_t uf) const {
    GraphBuilder b(ck_, k_.options.tree_reduction, opt_.expansion_cap);
    for (auto v = first; v < first + uf; ++v) {
      env[l] = v;
      b.add_nodes(k_.loops[l].body, env);
    }
    return region_bound(b.finish(), opt_.resources, cal_).bound;
  }

  BodyBound compute_body_bound(std::size_t l, std::int64_t uf) const {
    const auto &t = a_.trip[l];
    if (!t.ever_iterates() || t.tc_max < uf)
      return {0, true};
    std::int64_t per = 0;
    for (const auto &[_, c] : ops_per_iteration(l, true))
      per += c;
    if (per == 0)
      return {0, true};
    if (per > static_cast<std::int64_t>(opt_.expansion_cap) / uf)
      return fallback_bound(l, uf);
    const bool invariant = detail::chunks_invariant(k_, l);
    std::optional<Cycles> best;
    std::int64_t budget = static_cast<std::int64_t>(opt_.expansion_cap) * 4;
    try {
      ck_.for_each_execution(l, [&](IterEnv &env) {
        auto lo = ck_.lower(l, env), hi = ck_.upper(l, env);
        for (auto first = lo; first + uf <= hi; first += uf) {
          if ((budget -= per * uf) < 0)
            throw GraphTooLarge("chunk enumeration budget exhausted");
          auto b = chunk_bound(l, env, first, uf);
          best = std::min(best.value_or(b), b);
          if (invariant)
            return false;
        }
        return true;
      });
    } catch (const GraphTooLarge &) {
      return fallback_bound(l, uf);
    }
    return {best.value_or(0), true};
  }

  KernelIR k_;
  Analysis a_;
  CalibrationTable cal_;
  ModelOptions opt_;
  CompiledKernel ck_;
  std::vector<LoopModel> loops_;
  std::vector<Cycles> stmt_bound_;
  std::vector<VarInfo> vars_;
  std::vector<CachePoint> cache_pairs_;
  std::map<std::string, std::size_t> table_index_;
  fx::Expr comp_, mem_, dsp_, onchip_;
  std::map<OpKind, fx::Expr> dsp_by_op_;
  std::vector<fx::Expr> pipe_, seq_;
  std::vector<PartitionTerm> ap_;
  mutable std::mutex memo_mutex_;
  mutable std::map<std::pair<std::size_t, std::int64_t>, BodyBound> memo_;
};

} // namespace hlsbound
