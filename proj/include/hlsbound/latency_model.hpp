// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/constraints.hpp"

#include <bit>

namespace hlsbound {

// ---------------------------------------------------------------------------
// Building blocks

/// Pragma state of one loop as seen by the I operator.
struct PipelineVars {
  Rational tc_avg{0};
  std::int64_t uf = 1;
  bool pip = false;
  Cycles ii = 1;
};

/// Loop operator: pipelined loops overlap chunks every II cycles, other
/// loops run their chunks back to back.
inline Cycles apply_I(const PipelineVars &v, Cycles body) {
  if (v.uf < 1 || v.ii < 1)
    throw ConfigError("apply_I: uf and II must be >= 1");
  if (v.tc_avg == Rational(0))
    return 0;
  if (v.pip)
    return floor_of(Rational(v.ii) * (v.tc_avg / v.uf - 1)) + body;
  return floor_of(v.tc_avg / v.uf) * body;
}

/// Statement-list operator: `deps` holds pairs (i, j), i < j, of dependent
/// children. The result is the longest chain of dependent children, which is
/// the sum for a fully dependent list and the maximum for independent ones.
inline Cycles compose_C(const std::vector<Cycles> &terms,
                        const std::vector<std::pair<std::size_t, std::size_t>> &deps) {
  std::vector<Cycles> finish(terms.begin(), terms.end());
  for (std::size_t j = 0; j < terms.size(); ++j)
    for (const auto &[a, b] : deps)
      if (b == j && a < j)
        finish[j] = std::max(finish[j], finish[a] + terms[j]);
  return finish.empty() ? 0 : *std::max_element(finish.begin(), finish.end());
}

inline Cycles lat_sequential(std::int64_t tc, Cycles body) { return tc * body; }

inline Cycles lat_reduction_unroll(std::int64_t tc, std::int64_t uf, Cycles body,
                                   bool tree_reduction = true) {
  if (uf < 1)
    throw ConfigError("lat_reduction_unroll: uf must be >= 1");
  if (uf == 1 || !tree_reduction)
    return lat_sequential(tc, body);
  auto log2 = static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(uf)) - 1);
  return tc / uf * body * log2;
}

inline Cycles lat_coarse_grained(std::int64_t tc, std::int64_t uf, Cycles body,
                                 bool is_reduction) {
  if (is_reduction)
    throw ConfigError("lat_coarse_grained: a reduction loop cannot be parallelized coarsely");
  if (uf < 1)
    throw ConfigError("lat_coarse_grained: uf must be >= 1");
  return tc / uf * body;
}

struct UnrollBound {
  Cycles cycles = 0;
  bool expanded = true;
  std::string note;
};

/// Region bound of `nodes` fully unrolled; past `cap` ops only a work and
/// single-op bound is kept.
inline UnrollBound lat_full_unroll(const KernelIR &k, const std::vector<NodeRef> &nodes,
                                   const ResourceLimits &res, const CalibrationTable &cal,
                                   std::size_t cap = std::size_t{1} << 17) {
  CompiledKernel ck(k);
  try {
    GraphBuilder b(ck, k.options.tree_reduction, cap);
    b.add_nodes(nodes, IterEnv(k.loops.size(), 0));
    return {region_bound(b.finish(), res, cal).bound, true, ""};
  } catch (const GraphTooLarge &) {
  }
  std::map<OpKind, std::int64_t> count;
  IterEnv env(k.loops.size(), 0);
  ck.for_each_instance(nodes, env, [&](std::size_t s, const IterEnv &) {
    for (auto op : k.statements[s].ops)
      ++count[op];
    return true;
  });
  Cycles b = 0;
  for (const auto &[op, c] : count) {
    if (c == 0)
      continue;
    b = std::max(b, cal.latency(op));
    if (auto lim = res.limit(op); lim && *lim > 0)
      b = std::max(b, (c * cal.latency(op) + *lim - 1) / *lim);
  }
  return {b, false, "expansion cap exceeded; work bound only"};
}

/// One transfer: cache level key, footprint in bits, transfer count.
struct Transfer {
  std::string level;
  std::int64_t bits = 0;
  int count = 1;
};

/// Transfers at one level overlap (maximum); levels add up.
inline Cycles memory_bound(const std::vector<Transfer> &ts, std::int64_t burst_bits = 512) {
  std::map<std::string, Cycles> level;
  for (const auto &t : ts) {
    Cycles c = t.count * ((t.bits + burst_bits - 1) / burst_bits);
    level[t.level] = std::max(level[t.level], c);
  }
  Cycles sum = 0;
  for (const auto &[_, c] : level)
    sum += c;
  return sum;
}

// ---------------------------------------------------------------------------
// Program bound

struct LoopBound {
  std::string loop;
  std::string rule; // pipelined | sequential | coarse_grained | unrolled_chunks | inside_pipeline
  std::optional<Cycles> cycles; // per execution; empty inside a pipeline
  std::int64_t uf = 1;
  Cycles ii = 1;
  bool expanded = true;
};

struct PartitionFactor {
  std::string array;
  std::size_t dim = 0;
  std::int64_t factor = 1;
};

struct BoundReport {
  Cycles computation = 0;
  Cycles communication = 0;
  Cycles total = 0;
  std::vector<LoopBound> loops;
  Rational dsp{0};
  std::int64_t onchip_bits = 0;
  std::vector<PartitionFactor> partitions;
  std::vector<Violation> resource_violations;
  std::vector<std::string> notes;
};

inline std::string format_violations(const std::vector<Violation> &vs) {
  std::string s;
  for (const auto &v : vs)
    s += (s.empty() ? "" : "; ") + v.tag + ": " + v.message;
  return s;
}

/// Lower bound on the latency of `k` under `c`. Structural constraints must
/// hold; resource constraint violations are reported, not raised.
inline BoundReport program_bound(const KernelModel &m, const PragmaConfig &c,
                                 const ConstraintOptions &copt = {}) {
  auto cs = build_constraints(m, copt);
  if (auto v = check_constraints(m, cs, c, true); !v.empty())
    throw ConfigError("invalid config: " + format_violations(v));
  auto vals = m.values(c);
  auto env = m.env(vals);
  BoundReport r;
  r.computation = floor_of(fx::eval(m.computation(), env));
  r.communication = floor_of(fx::eval(m.communication(), env));
  r.total = r.computation + r.communication;

  const auto &k = m.kernel();
  for (const auto &l : m.loops()) {
    LoopBound b;
    b.loop = l.id;
    auto p = c.at(l.id);
    b.uf = p.uf;
    b.ii = p.pip ? l.ii : 1;
    bool inside = false;
    for (auto a : k.loops_above(l.index))
      inside |= c.pip(k.loops[a].id);
    if (inside) {
      b.rule = "inside_pipeline";
    } else if (p.pip) {
      b.rule = "pipelined";
      b.cycles = floor_of(fx::eval(m.pipelined_term(l.index), env));
    } else {
      b.rule = l.straight ? "unrolled_chunks" : l.carries ? "sequential" : "coarse_grained";
      b.cycles = floor_of(fx::eval(m.sequential_term(l.index), env));
    }
    if (!inside && (p.pip || l.straight)) {
      b.expanded = m.body_bound(l.index, p.uf).expanded;
      if (!b.expanded)
        r.notes.push_back("loop '" + l.id + "': chunk exceeds the expansion cap; work bound used");
    }
    r.loops.push_back(std::move(b));
  }

  r.dsp = fx::eval(m.dsp(), env);
  r.onchip_bits = floor_of(fx::eval(m.onchip_bits(), env));
  for (const auto &t : m.partitions())
    r.partitions.push_back({t.array, t.dim, fx::eval(t.expr, env).numerator()});
  for (auto &v : check_constraints(m, cs, c))
    r.resource_violations.push_back(std::move(v));
  return r;
}

inline nlohmann::ordered_json bound_json(const BoundReport &r) {
  using json = nlohmann::ordered_json;
  json j;
  j["schema_version"] = 1;
  j["computation"] = r.computation;
  j["communication"] = r.communication;
  j["total"] = r.total;
  j["loops"] = json::array();
  for (const auto &l : r.loops) {
    json e{{"loop", l.loop}, {"rule", l.rule}};
    e["cycles"] = l.cycles ? json(*l.cycles) : json(nullptr);
    e["uf"] = l.uf;
    e["ii"] = l.ii;
    e["expanded"] = l.expanded;
    j["loops"].push_back(std::move(e));
  }
  j["resources"] = {{"dsp", floor_of(r.dsp)}, {"dsp_exact", to_string(r.dsp)},
                    {"onchip_bits", r.onchip_bits}};
  j["partitions"] = json::array();
  for (const auto &p : r.partitions)
    j["partitions"].push_back({{"array", p.array}, {"dim", p.dim}, {"factor", p.factor}});
  j["violations"] = json::array();
  for (const auto &v : r.resource_violations)
    j["violations"].push_back({{"tag", v.tag}, {"constraint", v.constraint}, {"message", v.message}});
  j["notes"] = r.notes;
  return j;
}

} // namespace hlsbound
