// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/calibration.hpp"
#include "hlsbound/expansion.hpp"
#include "hlsbound/kernel_ir.hpp"

#include <numeric>

namespace hlsbound {

struct TripCountInfo {
  std::string loop_id;
  std::int64_t tc_min = 0;
  std::int64_t tc_max = 0;
  Rational tc_avg{0};
  std::vector<std::int64_t> divisors_of_tc_max{1};
  std::int64_t executions = 0;          // number of times the loop is entered
  std::int64_t nonempty_executions = 0; // entries with at least one iteration
  std::int64_t value_min = 0;           // iterator range over all executions
  std::int64_t value_max = -1;

  bool is_constant() const { return tc_min == tc_max; }
  bool ever_iterates() const { return value_max >= value_min; }
};

enum class DepKind : std::uint8_t { RaW, WaR, WaW };

inline std::string_view dep_kind_name(DepKind k) {
  switch (k) {
  case DepKind::RaW: return "RaW";
  case DepKind::WaR: return "WaR";
  case DepKind::WaW: return "WaW";
  }
  return "?";
}

struct Dependence {
  std::size_t src_stmt = 0;
  std::size_t dst_stmt = 0;
  DepKind kind = DepKind::RaW;
  std::optional<std::size_t> carrier;   // loop index; empty = loop-independent
  std::optional<std::int64_t> distance; // empty = loop-independent or non-uniform
  std::string array;
  ArrayAccess src_access;
  ArrayAccess dst_access;

  /// Distance used for bounding; non-uniform counts as 1.
  std::int64_t effective_distance() const { return distance.value_or(1); }
};

struct ReductionInfo {
  std::string loop_id;
  bool is_reduction = false;
  std::optional<OpKind> reduction_op;
  Cycles il_reduction = 0;
};

struct FootprintInfo {
  std::string array;
  std::optional<std::size_t> loop; // empty = whole kernel
  std::int64_t footprint_elems = 0;
  bool read_flag = false;  // some cell read before being written
  bool write_flag = false; // some cell written
  int element_bits = 32;

  std::int64_t transfer_count() const { return (read_flag ? 1 : 0) + (write_flag ? 1 : 0); }
};

namespace detail {

inline std::vector<std::int64_t> divisors(std::int64_t n) {
  std::vector<std::int64_t> out;
  if (n < 1)
    return {1};
  for (std::int64_t d = 1; d * d <= n; ++d)
    if (n % d == 0) {
      out.push_back(d);
      if (d != n / d)
        out.push_back(n / d);
    }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace detail

/// Trip counts per loop index, by enumeration of the enclosing iteration space.
inline std::vector<TripCountInfo> trip_counts(const KernelIR &k) {
  CompiledKernel ck(k);
  std::vector<TripCountInfo> out;
  for (std::size_t l = 0; l < k.loops.size(); ++l) {
    TripCountInfo t;
    t.loop_id = k.loops[l].id;
    std::int64_t total = 0;
    bool first = true;
    ck.for_each_execution(l, [&](IterEnv &env) {
      auto lo = ck.lower(l, env);
      auto hi = ck.upper(l, env);
      auto tc = std::max<std::int64_t>(0, hi - lo);
      if (first) {
        t.tc_min = t.tc_max = tc;
        first = false;
      }
      t.tc_min = std::min(t.tc_min, tc);
      t.tc_max = std::max(t.tc_max, tc);
      total += tc;
      ++t.executions;
      if (tc > 0) {
        if (t.nonempty_executions == 0) {
          t.value_min = lo;
          t.value_max = hi - 1;
        }
        t.value_min = std::min(t.value_min, lo);
        t.value_max = std::max(t.value_max, hi - 1);
        ++t.nonempty_executions;
      }
      return true;
    });
    t.tc_avg = t.executions ? Rational(total, t.executions) : Rational(0);
    t.divisors_of_tc_max = detail::divisors(t.tc_max);
    out.push_back(std::move(t));
  }
  return out;
}

namespace detail {

/// Per common loop constraint on dst iteration minus src iteration.
struct LevelDistance {
  enum class Kind : std::uint8_t { Any, Fixed, NonUniform } kind = Kind::Any;
  std::int64_t d = 0;

  bool can_be_zero() const { return kind != Kind::Fixed || d == 0; }
  bool can_be_positive() const { return kind != Kind::Fixed || d > 0; }
};

inline std::pair<std::int64_t, std::int64_t> affine_range(const KernelIR &k,
                                                          const std::vector<TripCountInfo> &tc,
                                                          const AffineExpr &e) {
  std::int64_t lo = e.constant, hi = e.constant;
  for (const auto &[name, c] : e.coeffs) {
    const auto &t = tc[*k.loop_index(name)];
    if (c >= 0) {
      lo += c * t.value_min;
      hi += c * t.value_max;
    } else {
      lo += c * t.value_max;
      hi += c * t.value_min;
    }
  }
  return {lo, hi};
}

inline bool iterates(const KernelIR &k, const std::vector<TripCountInfo> &tc, std::size_t stmt) {
  for (auto l : k.statements[stmt].loops)
    if (!tc[l].ever_iterates())
      return false;
  return true;
}

/// Distance constraints for src access `a` in statement `sa` against dst
/// access `b` in statement `sb`; nullopt when the accesses never overlap.
inline std::optional<std::vector<LevelDistance>>
level_distances(const KernelIR &k, const std::vector<TripCountInfo> &tc, std::size_t sa,
                const ArrayAccess &a, std::size_t sb, const ArrayAccess &b,
                std::vector<std::size_t> &common) {
  const auto &la = k.statements[sa].loops;
  const auto &lb = k.statements[sb].loops;
  common.clear();
  for (std::size_t i = 0; i < std::min(la.size(), lb.size()) && la[i] == lb[i]; ++i)
    common.push_back(la[i]);
  std::vector<LevelDistance> lv(common.size());
  auto level_of = [&](const std::string &it) -> std::optional<std::size_t> {
    auto li = *k.loop_index(it);
    for (std::size_t i = 0; i < common.size(); ++i)
      if (common[i] == li)
        return i;
    return std::nullopt;
  };
  for (std::size_t d = 0; d < a.subscripts.size(); ++d) {
    const auto &s1 = a.subscripts[d];
    const auto &s2 = b.subscripts[d];
    if (s1.is_constant() && s2.is_constant()) {
      if (s1.constant != s2.constant)
        return std::nullopt;
      continue;
    }
    auto i1 = s1.single_iterator();
    auto i2 = s2.single_iterator();
    if (i1 && i2 && *i1 == *i2) {
      if (auto lvl = level_of(*i1)) {
        auto dist = s1.constant - s2.constant;
        auto &c = lv[*lvl];
        if (c.kind == LevelDistance::Kind::Fixed && c.d != dist)
          return std::nullopt;
        c.kind = LevelDistance::Kind::Fixed;
        c.d = dist;
        continue;
      }
    }
    auto r1 = affine_range(k, tc, s1);
    auto r2 = affine_range(k, tc, s2);
    if (r1.second < r2.first || r2.second < r1.first)
      return std::nullopt;
    for (const auto *s : {&s1, &s2})
      for (const auto &[name, coeff] : s->coeffs)
        if (auto lvl = level_of(name); lvl && lv[*lvl].kind == LevelDistance::Kind::Any)
          lv[*lvl].kind = LevelDistance::Kind::NonUniform;
  }
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const auto &t = tc[common[i]];
    if (lv[i].kind == LevelDistance::Kind::Fixed &&
        std::abs(lv[i].d) > t.value_max - t.value_min)
      return std::nullopt;
  }
  return lv;
}

} // namespace detail

/// Dependences between every ordered pair of statement accesses. One entry
/// per (access pair, kind, carrier) with the minimum positive distance.
inline std::vector<Dependence> dependences(const KernelIR &k,
                                           const std::vector<TripCountInfo> &tc) {
  std::vector<Dependence> out;
  struct Acc {
    ArrayAccess access;
    bool write;
  };
  auto accesses = [&](std::size_t s) {
    std::vector<Acc> v{{k.statements[s].lhs, true}};
    for (const auto &r : k.statements[s].reads) {
      bool dup = false;
      for (const auto &e : v)
        dup |= !e.write && e.access == r;
      if (!dup)
        v.push_back({r, false});
    }
    return v;
  };
  std::vector<std::size_t> common;
  for (std::size_t sa = 0; sa < k.statements.size(); ++sa) {
    if (!detail::iterates(k, tc, sa))
      continue;
    auto acc_a = accesses(sa);
    for (std::size_t sb = 0; sb < k.statements.size(); ++sb) {
      if (!detail::iterates(k, tc, sb))
        continue;
      auto acc_b = accesses(sb);
      for (const auto &a : acc_a)
        for (const auto &b : acc_b) {
          if (a.access.array != b.access.array || (!a.write && !b.write))
            continue;
          auto kind = a.write ? (b.write ? DepKind::WaW : DepKind::RaW) : DepKind::WaR;
          auto lv = detail::level_distances(k, tc, sa, a.access, sb, b.access, common);
          if (!lv)
            continue;
          auto emit = [&](std::optional<std::size_t> carrier,
                          std::optional<std::int64_t> dist) {
            out.push_back({sa, sb, kind, carrier, dist, a.access.array, a.access, b.access});
          };
          bool prefix_zero = true;
          for (std::size_t j = 0; j < lv->size() && prefix_zero; ++j) {
            const auto &c = (*lv)[j];
            if (c.can_be_positive() && tc[common[j]].value_max > tc[common[j]].value_min) {
              using K = detail::LevelDistance::Kind;
              if (c.kind == K::Fixed)
                emit(common[j], c.d);
              else if (c.kind == K::Any)
                emit(common[j], 1);
              else
                emit(common[j], std::nullopt);
            }
            prefix_zero = c.can_be_zero();
          }
          if (prefix_zero && sa < sb)
            emit(std::nullopt, std::nullopt);
        }
    }
  }
  return out;
}

inline std::vector<Dependence> dependences(const KernelIR &k) {
  return dependences(k, trip_counts(k));
}

/// Associative op through which a statement updates its own lhs cell.
inline std::optional<OpKind> update_op(const Statement &s) {
  if (s.assign == AssignOp::AddAssign)
    return OpKind::Add;
  if (s.assign == AssignOp::MulAssign)
    return OpKind::Mul;
  const auto &r = s.rhs;
  if (r.kind == ValueExpr::Kind::Binary && is_associative(r.op))
    for (const auto &o : r.operands)
      if (o.kind == ValueExpr::Kind::Access && o.access == s.lhs)
        return r.op;
  return std::nullopt;
}

inline std::vector<ReductionInfo> reductions(const KernelIR &k,
                                             const std::vector<Dependence> &deps,
                                             const CalibrationTable &cal = {}) {
  std::vector<ReductionInfo> out;
  for (std::size_t l = 0; l < k.loops.size(); ++l) {
    ReductionInfo r;
    r.loop_id = k.loops[l].id;
    bool any_raw = false, ok = true;
    std::optional<OpKind> op;
    for (const auto &d : deps) {
      if (d.carrier != l)
        continue;
      const auto &s = k.statements[d.src_stmt];
      auto u = update_op(s);
      bool self = d.src_stmt == d.dst_stmt && d.src_access == s.lhs && d.dst_access == s.lhs &&
                  d.distance == 1 && u && (!op || *op == *u);
      if (!self) {
        ok = false;
        break;
      }
      op = u;
      any_raw |= d.kind == DepKind::RaW;
    }
    if (ok && any_raw) {
      r.is_reduction = true;
      r.reduction_op = op;
      r.il_reduction = cal.latency(*op);
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace detail {

/// True when executions of `loop` can differ in footprint: a bound inside
/// depends on an outer iterator, or two accesses to the same array shift
/// differently with the outer iterators.
inline bool execution_dependent(const KernelIR &k, std::size_t loop) {
  auto inside = [&](const std::string &it) {
    auto li = *k.loop_index(it);
    return li == loop || k.is_nested_in(li, loop);
  };
  auto outer_part = [&](const AffineExpr &e) {
    std::map<std::string, std::int64_t> out;
    for (const auto &[n, c] : e.coeffs)
      if (!inside(n))
        out[n] = c;
    return out;
  };
  std::vector<std::size_t> ls = k.loops_under(loop);
  ls.push_back(loop);
  for (auto l : ls)
    if (!outer_part(k.loops[l].lower).empty() || !outer_part(k.loops[l].upper).empty())
      return true;
  std::map<std::string, std::vector<std::map<std::string, std::int64_t>>> shift;
  auto check = [&](const ArrayAccess &a) {
    std::vector<std::map<std::string, std::int64_t>> v;
    for (const auto &sub : a.subscripts)
      v.push_back(outer_part(sub));
    auto [it, fresh] = shift.emplace(a.array, v);
    return fresh || it->second == v;
  };
  for (auto s : k.statements_under(loop)) {
    const auto &st = k.statements[s];
    if (!check(st.lhs))
      return true;
    for (const auto &r : st.reads)
      if (!check(r))
        return true;
  }
  return false;
}

/// Distinct-cell and read-before-write tracking for one region execution.
/// Each cell stores epoch*2 + written.
class CellTracker {
public:
  explicit CellTracker(const KernelIR &k) : k_(k) {
    for (const auto &a : k.arrays)
      cells_.emplace_back(a.is_scalar() ? 0 : a.elements(), 0u);
    stats_.resize(k.arrays.size());
  }

  struct Stats {
    std::int64_t cells = 0;
    bool live_in = false;
    bool written = false;
  };

  void reset() {
    cur_ += 2;
    std::fill(stats_.begin(), stats_.end(), Stats{});
  }

  void touch(std::size_t array, std::int64_t cell, bool write) {
    auto &c = cells_[array][cell];
    if ((c & ~1u) != cur_) {
      c = cur_;
      ++stats_[array].cells;
    }
    if (write) {
      c = cur_ | 1u;
      stats_[array].written = true;
    } else if (!(c & 1u)) {
      stats_[array].live_in = true;
    }
  }

  const Stats &stats(std::size_t array) const { return stats_[array]; }
  bool tracked(std::size_t array) const { return !k_.arrays[array].is_scalar(); }

private:
  const KernelIR &k_;
  std::vector<std::vector<std::uint32_t>> cells_;
  std::vector<Stats> stats_;
  std::uint32_t cur_ = 0;
};

/// True when every subscript of `a` provably stays inside the array.
inline bool provably_in_bounds(const KernelIR &k, const std::vector<TripCountInfo> &tc,
                               const ArrayAccess &a) {
  const auto *decl = k.find_array(a.array);
  for (std::size_t d = 0; d < a.subscripts.size(); ++d) {
    auto [lo, hi] = affine_range(k, tc, a.subscripts[d]);
    if (lo < 0 || hi >= decl->dims[d])
      return false;
  }
  return true;
}

inline constexpr std::int64_t kMaxEnumeratedInstances = std::int64_t{1} << 31;

} // namespace detail

/// Footprints of every array at the kernel level (loop empty) and at every
/// loop level. Loops whose execution depends on outer iterators report the
/// maximum over all executions.
inline std::vector<FootprintInfo> footprints(const KernelIR &k,
                                             const std::vector<TripCountInfo> &tc) {
  CompiledKernel ck(k);
  detail::CellTracker tr(k);
  struct Touch {
    const CompiledAccess *access;
    bool checked;
  };
  std::vector<std::vector<Touch>> reads(k.statements.size());
  std::vector<Touch> writes;
  for (std::size_t s = 0; s < k.statements.size(); ++s) {
    const auto &st = k.statements[s];
    for (std::size_t r = 0; r < st.reads.size(); ++r)
      if (tr.tracked(ck.reads(s)[r].array))
        reads[s].push_back({&ck.reads(s)[r], !detail::provably_in_bounds(k, tc, st.reads[r])});
    writes.push_back({&ck.write(s), !detail::provably_in_bounds(k, tc, st.lhs)});
  }
  std::int64_t budget = detail::kMaxEnumeratedInstances;
  auto cell = [&](const Touch &t, const IterEnv &env) {
    return t.checked ? ck.cell(*t.access, env) : t.access->flat.eval(env);
  };
  auto visit = [&](std::size_t s, const IterEnv &env) {
    if (--budget < 0)
      throw AnalysisError("iteration space too large to enumerate");
    for (const auto &r : reads[s])
      tr.touch(r.access->array, cell(r, env), false);
    const auto &w = writes[s];
    if (tr.tracked(w.access->array))
      tr.touch(w.access->array, cell(w, env), true);
    return true;
  };
  std::vector<FootprintInfo> out;
  auto collect = [&](std::optional<std::size_t> loop, const std::vector<std::size_t> &stmts,
                     std::vector<FootprintInfo> &acc) {
    auto names = k.arrays_accessed(stmts);
    for (std::size_t a = 0; a < k.arrays.size(); ++a) {
      if (!names.count(k.arrays[a].name))
        continue;
      const auto &st = tr.stats(a);
      auto it = std::find_if(acc.begin(), acc.end(),
                             [&](const FootprintInfo &f) { return f.array == k.arrays[a].name; });
      if (it == acc.end()) {
        acc.push_back({k.arrays[a].name, loop, st.cells, st.live_in, st.written,
                       k.arrays[a].element_bits});
      } else {
        it->footprint_elems = std::max(it->footprint_elems, st.cells);
        it->read_flag |= st.live_in;
        it->write_flag |= st.written;
      }
    }
  };

  std::vector<std::size_t> all(k.statements.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  {
    IterEnv env(k.loops.size(), 0);
    tr.reset();
    ck.for_each_instance(k.root, env, visit);
    collect(std::nullopt, all, out);
  }
  for (std::size_t l = 0; l < k.loops.size(); ++l) {
    std::vector<FootprintInfo> acc;
    auto stmts = k.statements_under(l);
    bool all_execs = detail::execution_dependent(k, l);
    std::vector<NodeRef> self{{NodeRef::Kind::Loop, l}};
    ck.for_each_execution(l, [&](IterEnv &env) {
      tr.reset();
      ck.for_each_instance(self, env, visit);
      collect(l, stmts, acc);
      return all_execs;
    });
    if (acc.empty())
      collect(l, stmts, acc); // loop never entered
    for (auto &f : acc)
      out.push_back(std::move(f));
  }
  return out;
}

inline std::vector<FootprintInfo> footprints(const KernelIR &k) {
  return footprints(k, trip_counts(k));
}

/// Latency from reading `r` to writing the lhs within one instance of `s`.
inline std::optional<Cycles> read_to_write_latency(const Statement &s, const ArrayAccess &r,
                                                   const CalibrationTable &cal) {
  std::function<std::optional<Cycles>(const ValueExpr &)> path =
      [&](const ValueExpr &e) -> std::optional<Cycles> {
    if (e.kind == ValueExpr::Kind::Access)
      return e.access == r ? std::optional<Cycles>(0) : std::nullopt;
    if (e.kind != ValueExpr::Kind::Binary)
      return std::nullopt;
    std::optional<Cycles> best;
    for (const auto &o : e.operands)
      if (auto p = path(o))
        best = std::max(best.value_or(0), *p + cal.latency(e.op));
    return best;
  };
  auto p = path(s.rhs);
  if (!s.is_accumulation())
    return p;
  auto acc = cal.latency(s.assign == AssignOp::AddAssign ? OpKind::Add : OpKind::Mul);
  std::optional<Cycles> out;
  if (p)
    out = *p + acc;
  if (r == s.lhs)
    out = std::max(out.value_or(0), acc);
  return out;
}

/// max(1, RecMII) over dependence cycles carried by `loop`; ResMII is 1.
inline Cycles min_II(const KernelIR &k, std::size_t loop, const std::vector<Dependence> &deps,
                     const CalibrationTable &cal) {
  Cycles ii = 1;
  auto inside = [&](std::size_t s) {
    const auto &ls = k.statements[s].loops;
    return std::find(ls.begin(), ls.end(), loop) != ls.end();
  };
  for (const auto &d : deps) {
    if (d.kind != DepKind::RaW || d.carrier != loop)
      continue;
    std::optional<Cycles> delay;
    if (d.src_stmt == d.dst_stmt) {
      delay = read_to_write_latency(k.statements[d.dst_stmt], d.dst_access, cal);
    } else if (d.src_stmt > d.dst_stmt) {
      // longest forward chain of same-iteration flow from dst back to src
      std::map<std::size_t, Cycles> dist;
      if (auto p = read_to_write_latency(k.statements[d.dst_stmt], d.dst_access, cal))
        dist[d.dst_stmt] = *p;
      for (std::size_t s = d.dst_stmt + 1; s <= d.src_stmt; ++s) {
        if (!inside(s))
          continue;
        for (const auto &e : deps) {
          if (e.kind != DepKind::RaW || e.dst_stmt != s || e.src_stmt >= s ||
              !dist.count(e.src_stmt))
            continue;
          if (e.carrier && (*e.carrier == loop || !k.is_nested_in(*e.carrier, loop)))
            continue;
          if (auto w = read_to_write_latency(k.statements[s], e.dst_access, cal))
            dist[s] = std::max(dist.count(s) ? dist[s] : 0, dist[e.src_stmt] + *w);
        }
      }
      if (dist.count(d.src_stmt))
        delay = dist[d.src_stmt];
    }
    if (delay) {
      auto dd = d.effective_distance();
      ii = std::max(ii, (*delay + dd - 1) / dd);
    }
  }
  return ii;
}

/// Every affine-analysis result for one kernel.
struct Analysis {
  std::vector<TripCountInfo> trip;
  std::vector<Dependence> deps;
  std::vector<ReductionInfo> reductions;
  std::vector<FootprintInfo> footprints;
  std::vector<Cycles> min_ii;

  const FootprintInfo *footprint(std::string_view array, std::optional<std::size_t> loop) const {
    for (const auto &f : footprints)
      if (f.array == array && f.loop == loop)
        return &f;
    return nullptr;
  }

  bool carries_dependence(std::size_t loop) const {
    for (const auto &d : deps)
      if (d.carrier == loop)
        return true;
    return false;
  }

  /// Smallest distance of any dependence carried by `loop`.
  std::optional<std::int64_t> min_distance(std::size_t loop) const {
    std::optional<std::int64_t> out;
    for (const auto &d : deps)
      if (d.carrier == loop)
        out = std::min(out.value_or(d.effective_distance()), d.effective_distance());
    return out;
  }
};

inline Analysis analyze(const KernelIR &k, const CalibrationTable &cal = {}) {
  Analysis a;
  a.trip = trip_counts(k);
  a.deps = dependences(k, a.trip);
  a.reductions = reductions(k, a.deps, cal);
  a.footprints = footprints(k, a.trip);
  for (std::size_t l = 0; l < k.loops.size(); ++l)
    a.min_ii.push_back(min_II(k, l, a.deps, cal));
  return a;
}

inline nlohmann::ordered_json analysis_json(const KernelIR &k, const Analysis &a) {
  using json = nlohmann::ordered_json;
  json j;
  j["schema_version"] = 1;
  j["kernel"] = k.name;
  j["trip_counts"] = json::array();
  for (std::size_t l = 0; l < k.loops.size(); ++l) {
    const auto &t = a.trip[l];
    j["trip_counts"].push_back({{"loop", t.loop_id},
                                {"tc_min", t.tc_min},
                                {"tc_max", t.tc_max},
                                {"tc_avg", to_string(t.tc_avg)},
                                {"divisors", t.divisors_of_tc_max},
                                {"min_ii", a.min_ii[l]}});
  }
  j["dependences"] = json::array();
  for (const auto &d : a.deps) {
    json e{{"src", k.statements[d.src_stmt].id},
           {"dst", k.statements[d.dst_stmt].id},
           {"kind", dep_kind_name(d.kind)},
           {"array", d.array},
           {"src_access", d.src_access.str()},
           {"dst_access", d.dst_access.str()}};
    e["carrier"] = d.carrier ? json(k.loops[*d.carrier].id) : json(nullptr);
    e["distance"] = d.distance ? json(*d.distance) : json(nullptr);
    j["dependences"].push_back(std::move(e));
  }
  j["reductions"] = json::array();
  for (const auto &r : a.reductions) {
    json e{{"loop", r.loop_id}, {"is_reduction", r.is_reduction}};
    e["op"] = r.reduction_op ? json(op_name(*r.reduction_op)) : json(nullptr);
    e["il_reduction"] = r.il_reduction;
    j["reductions"].push_back(std::move(e));
  }
  j["footprints"] = json::array();
  for (const auto &f : a.footprints) {
    json e{{"array", f.array}};
    e["loop"] = f.loop ? json(k.loops[*f.loop].id) : json(nullptr);
    e["footprint_elems"] = f.footprint_elems;
    e["read"] = f.read_flag;
    e["write"] = f.write_flag;
    j["footprints"].push_back(std::move(e));
  }
  return j;
}

} // namespace hlsbound
