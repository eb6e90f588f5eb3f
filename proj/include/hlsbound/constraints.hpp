// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/model.hpp"

namespace hlsbound {

enum class Relation : std::uint8_t { Le, Eq, Ge };

inline std::string_view relation_symbol(Relation r) {
  switch (r) {
  case Relation::Le:
    return "<=";
  case Relation::Eq:
    return "=";
  case Relation::Ge:
    return ">=";
  }
  return "?";
}

struct Constraint {
  int eq = 0;       // equation number, printed as "Eq.N"
  std::string name; // unique identifier
  std::string description;
  fx::Expr lhs;
  Relation rel = Relation::Le;
  fx::Expr rhs;
  bool resource = false; // Eq.9, Eq.15, Eq.16

  std::string tag() const { return "Eq." + std::to_string(eq); }

  bool holds(const fx::Env &env) const {
    auto a = fx::eval(lhs, env), b = fx::eval(rhs, env);
    switch (rel) {
    case Relation::Le:
      return a <= b;
    case Relation::Eq:
      return a == b;
    case Relation::Ge:
      return a >= b;
    }
    return false;
  }
};

struct ConstraintOptions {
  std::optional<std::int64_t> max_partition; // defaults to the calibration value
  bool fine_grained_only = false;
};

struct Violation {
  std::string tag;
  std::string constraint;
  std::string message;
};

/// Range checks on each variable against its declared domain.
inline std::vector<Violation> domain_violations(const KernelModel &m, const PragmaConfig &c) {
  std::vector<Violation> out;
  const auto &k = m.kernel();
  for (const auto &l : m.loops()) {
    auto p = c.at(l.id);
    auto tc = std::max<std::int64_t>(l.tc, 1);
    if (p.uf < 1 || p.uf > tc)
      out.push_back({"Eq.1", "uf_range_" + l.id,
                     "uf of loop '" + l.id + "' is " + std::to_string(p.uf) + ", outside [1, " +
                         std::to_string(tc) + "]"});
    if (p.tile < 1 || p.tile > tc)
      out.push_back({"Eq.2", "tile_range_" + l.id,
                     "tile of loop '" + l.id + "' is " + std::to_string(p.tile) +
                         ", outside [1, " + std::to_string(tc) + "]"});
  }
  for (const auto &cp : c.cache) {
    auto l = k.loop_index(cp.loop);
    if (!l || !std::count(m.cache_pairs().begin(), m.cache_pairs().end(), cp))
      out.push_back({"Eq.4", "cache_domain",
                     "array '" + cp.array + "' cannot be cached at loop '" + cp.loop +
                         "': not accessed under it"});
  }
  return out;
}

/// The constraint set of the pragma-selection problem in equation order.
inline std::vector<Constraint> build_constraints(const KernelModel &m,
                                                 const ConstraintOptions &opt = {}) {
  const auto &k = m.kernel();
  const auto &cal = m.calibration();
  std::vector<Constraint> out;
  auto V = [](const std::string &n) { return fx::var(n); };
  auto C = [](std::int64_t v) { return fx::constant(v); };
  auto uf = [&](std::size_t l) { return V(KernelModel::uf_var(k.loops[l].id)); };
  auto pip = [&](std::size_t l) { return V(KernelModel::pip_var(k.loops[l].id)); };

  // Eq.4: one cache point per array on every root-to-leaf path
  std::set<std::vector<std::string>> seen_paths;
  for (std::size_t leaf = 0; leaf < k.loops.size(); ++leaf) {
    if (k.has_loop_children(leaf))
      continue;
    auto path = k.loops_above(leaf);
    path.push_back(leaf);
    for (const auto &arr : k.arrays) {
      std::vector<std::string> names;
      for (auto l : path)
        if (std::count(m.cache_pairs().begin(), m.cache_pairs().end(),
                       CachePoint{k.loops[l].id, arr.name}))
          names.push_back(KernelModel::cache_var(k.loops[l].id, arr.name));
      if (names.size() < 2 || !seen_paths.insert(names).second)
        continue;
      std::vector<fx::Expr> vs;
      for (const auto &n : names)
        vs.push_back(V(n));
      out.push_back({4, "one_cache_" + arr.name + "_" + k.loops[leaf].id,
                     "array '" + arr.name + "' cached more than once on the path to loop '" +
                         k.loops[leaf].id + "'",
                     fx::add(vs), Relation::Le, C(1)});
    }
  }

  // Eq.5: loops under a pipelined loop are fully unrolled
  for (std::size_t lp = 0; lp < k.loops.size(); ++lp)
    for (auto l : k.loops_under(lp))
      out.push_back({5, "unroll_under_pip_" + k.loops[lp].id + "_" + k.loops[l].id,
                     "loop '" + k.loops[l].id + "' under pipelined loop '" + k.loops[lp].id +
                         "' must be fully unrolled (uf = " + std::to_string(m.loop(l).tc) + ")",
                     fx::mul(pip(lp), uf(l)), Relation::Eq,
                     fx::mul(pip(lp), C(m.loop(l).tc))});

  // Eq.6: at most one pipelined loop encloses a statement
  std::set<std::vector<std::size_t>> seen_nests;
  for (const auto &st : k.statements) {
    if (st.loops.size() < 2 || !seen_nests.insert(st.loops).second)
      continue;
    std::vector<fx::Expr> ps;
    for (auto l : st.loops)
      ps.push_back(pip(l));
    out.push_back({6, "one_pip_" + st.id,
                   "statement '" + st.id + "' is enclosed by more than one pipelined loop",
                   fx::add(ps), Relation::Le, C(1)});
  }

  // Eq.7: no cache point strictly under a pipelined loop
  for (std::size_t lp = 0; lp < k.loops.size(); ++lp)
    for (auto l : k.loops_under(lp))
      for (const auto &cp : m.cache_pairs())
        if (cp.loop == k.loops[l].id)
          out.push_back({7, "no_cache_under_pip_" + k.loops[lp].id + "_" + cp.loop + "_" + cp.array,
                         "array '" + cp.array + "' cached at loop '" + cp.loop +
                             "' under pipelined loop '" + k.loops[lp].id + "'",
                         fx::mul(pip(lp), V(KernelModel::cache_var(cp.loop, cp.array))),
                         Relation::Eq, C(0)});

  // Eq.8: uf bounded by the dependence distance
  for (const auto &l : m.loops())
    if (l.distance && *l.distance > 1)
      out.push_back({8, "uf_distance_" + l.id,
                     "uf of loop '" + l.id + "' exceeds its dependence distance " +
                         std::to_string(*l.distance),
                     uf(l.index), Relation::Le, C(*l.distance)});

  // Eq.9-11: array partitioning
  auto max_part = opt.max_partition.value_or(cal.max_partition);
  std::map<std::string, std::vector<const PartitionTerm *>> by_array;
  for (const auto &t : m.partitions())
    by_array[t.array].push_back(&t);
  for (const auto &arr : k.arrays) {
    auto it = by_array.find(arr.name);
    if (it == by_array.end())
      continue;
    std::vector<fx::Expr> aps;
    bool any = false;
    for (const auto *t : it->second) {
      any |= !t->loops.empty();
      aps.push_back(V("AP_" + arr.name + "_" + std::to_string(t->dim)));
    }
    if (!any)
      continue;
    Constraint c{9, "max_partition_" + arr.name,
                 "partitioning of array '" + arr.name + "' exceeds " + std::to_string(max_part),
                 fx::mul(aps), Relation::Le, C(max_part)};
    c.resource = true;
    out.push_back(std::move(c));
  }
  for (int eq : {10, 11})
    for (const auto &t : m.partitions())
      for (auto l : t.loops) {
        auto ap = V("AP_" + t.array + "_" + std::to_string(t.dim));
        auto base = "AP_" + t.array + "_" + std::to_string(t.dim) + "_" + k.loops[l].id;
        if (eq == 10)
          out.push_back({10, "ap_multiple_" + base,
                         "partition factor of '" + t.array + "' dim " + std::to_string(t.dim) +
                             " is not a multiple of uf of loop '" + k.loops[l].id + "'",
                         fx::mod(ap, uf(l)), Relation::Eq, C(0)});
        else
          out.push_back({11, "ap_ge_" + base,
                         "partition factor of '" + t.array + "' dim " + std::to_string(t.dim) +
                             " is below uf of loop '" + k.loops[l].id + "'",
                         ap, Relation::Ge, uf(l)});
      }

  // Eq.12-13: factors divide the trip count
  for (const auto &l : m.loops()) {
    if (l.const_tc && l.tc > 0) {
      out.push_back({12, "uf_divides_" + l.id,
                     "uf of loop '" + l.id + "' does not divide its trip count " +
                         std::to_string(l.tc),
                     fx::mod(C(l.tc), uf(l.index)), Relation::Eq, C(0)});
      out.push_back({13, "tile_divides_" + l.id,
                     "tile of loop '" + l.id + "' does not divide its trip count " +
                         std::to_string(l.tc),
                     fx::mod(C(l.tc), V(KernelModel::tile_var(l.id))), Relation::Eq, C(0)});
    } else {
      out.push_back({12, "uf_divides_" + l.id,
                     "loop '" + l.id + "' has a non-constant trip count and cannot be unrolled",
                     uf(l.index), Relation::Eq, C(1)});
      out.push_back({13, "tile_divides_" + l.id,
                     "loop '" + l.id + "' has a non-constant trip count and cannot be tiled",
                     V(KernelModel::tile_var(l.id)), Relation::Eq, C(1)});
    }
  }

  // Eq.14: fine-grained parallelism only
  if (opt.fine_grained_only)
    for (std::size_t lp = 0; lp < k.loops.size(); ++lp)
      for (auto la : k.loops_above(lp))
        out.push_back({14, "fine_only_" + k.loops[lp].id + "_" + k.loops[la].id,
                       "loop '" + k.loops[la].id + "' above pipelined loop '" + k.loops[lp].id +
                           "' must keep uf = 1",
                       fx::mul(pip(lp), uf(la)), Relation::Le, C(1)});

  Constraint dsp{15, "dsp", "DSP lower bound exceeds " + std::to_string(cal.dsp_available),
                 m.dsp(), Relation::Le, C(cal.dsp_available)};
  dsp.resource = true;
  out.push_back(std::move(dsp));
  Constraint mem{16, "onchip",
                 "on-chip cache footprint exceeds " + std::to_string(cal.onchip_bits_available) +
                     " bits",
                 m.onchip_bits(), Relation::Le, C(cal.onchip_bits_available)};
  mem.resource = true;
  out.push_back(std::move(mem));

  std::stable_sort(out.begin(), out.end(),
                   [](const Constraint &a, const Constraint &b) { return a.eq < b.eq; });
  return out;
}

/// Environment that also defines the partition factors `AP_<array>_<dim>`.
inline fx::Env constraint_env(const KernelModel &m,
                              const std::unordered_map<std::string, std::int64_t> &vals,
                              std::unordered_map<std::string, std::int64_t> &scratch) {
  scratch = vals;
  auto base = m.env(vals);
  for (const auto &t : m.partitions())
    scratch["AP_" + t.array + "_" + std::to_string(t.dim)] =
        fx::eval(t.expr, base).numerator();
  return m.env(scratch);
}

/// Every violated constraint, domain checks first, then in equation order.
inline std::vector<Violation> check_constraints(const KernelModel &m,
                                                const std::vector<Constraint> &cs,
                                                const PragmaConfig &c, bool structural_only = false) {
  auto out = domain_violations(m, c);
  if (!out.empty())
    return out;
  auto vals = m.values(c);
  std::unordered_map<std::string, std::int64_t> scratch;
  auto env = constraint_env(m, vals, scratch);
  for (const auto &x : cs) {
    if (structural_only && x.resource)
      continue;
    if (!x.holds(env)) {
      auto l = fx::eval(x.lhs, env), r = fx::eval(x.rhs, env);
      out.push_back({x.tag(), x.name,
                     x.description + " (" + to_string(l) + " " +
                         std::string(relation_symbol(x.rel)) + " " + to_string(r) +
                         " does not hold)"});
    }
  }
  return out;
}

} // namespace hlsbound
