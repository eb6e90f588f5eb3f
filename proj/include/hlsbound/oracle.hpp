// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/analysis.hpp"
#include "hlsbound/config.hpp"
#include "hlsbound/scheduler.hpp"

#include <unordered_set>

namespace hlsbound {

struct SimulationResult {
  Cycles computation = 0;
  Cycles communication = 0;
  Cycles total = 0;
  std::size_t ops = 0;
};

namespace detail {

/// Expands a kernel under a pragma config into one task graph: operation
/// regions joined by zero-latency barriers and II-cycle issue delays.
class TaskGraphBuilder {
public:
  TaskGraphBuilder(const KernelIR &k, const Analysis &a, const PragmaConfig &c,
                   std::size_t max_ops)
      : k_(k), a_(a), c_(c), ck_(k), max_ops_(max_ops) {
    g_.nodes.push_back({GraphNode::Kind::Root, OpKind::Add, 0, {}, "root"});
  }

  OperationGraph build() {
    IterEnv env(k_.loops.size(), 0);
    run_list(k_.root, env, OperationGraph::root);
    for (const auto &n : g_.nodes)
      if (n.is_op())
        g_.op_counts[n.op] += n.multiplicity;
    return std::move(g_);
  }

private:
  using Instance = std::pair<std::size_t, IterEnv>;

  std::size_t delay(std::vector<std::size_t> preds, Cycles cycles) {
    g_.nodes.push_back(
        {GraphNode::Kind::Delay, OpKind::Add, 0, std::move(preds), cycles ? "ii" : "sync", cycles});
    return g_.nodes.size() - 1;
  }
  std::size_t barrier(std::vector<std::size_t> preds) {
    std::sort(preds.begin(), preds.end());
    preds.erase(std::unique(preds.begin(), preds.end()), preds.end());
    if (preds.size() == 1)
      return preds.front();
    return delay(std::move(preds), 0);
  }

  /// Splices the operation graph of `inst` after `entry`; returns its exit.
  std::size_t region(const std::vector<Instance> &inst, std::size_t entry) {
    GraphBuilder b(ck_, k_.options.tree_reduction);
    for (const auto &[s, env] : inst)
      b.add_instance(s, env);
    auto r = b.finish();
    std::vector<std::size_t> map(r.nodes.size(), entry);
    std::vector<bool> consumed(r.nodes.size(), false);
    std::vector<std::size_t> ops;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      const auto &v = r.nodes[i];
      if (!v.is_op())
        continue;
      GraphNode n = v;
      n.preds.clear();
      for (auto p : v.preds) {
        consumed[p] = true;
        n.preds.push_back(map[p]);
      }
      std::sort(n.preds.begin(), n.preds.end());
      n.preds.erase(std::unique(n.preds.begin(), n.preds.end()), n.preds.end());
      g_.nodes.push_back(std::move(n));
      map[i] = g_.nodes.size() - 1;
      ops.push_back(i);
      if (++count_ > max_ops_)
        throw GraphTooLarge("simulation size cap exceeded: more than " + std::to_string(max_ops_) +
                    " ops");
    }
    std::vector<std::size_t> sinks;
    for (auto i : ops)
      if (!consumed[i])
        sinks.push_back(map[i]);
    return sinks.empty() ? entry : barrier(sinks);
  }

  bool dependent(const NodeRef &x, const NodeRef &y) const {
    auto sx = k_.statements_in(x), sy = k_.statements_in(y);
    std::unordered_set<std::size_t> X(sx.begin(), sx.end()), Y(sy.begin(), sy.end());
    for (const auto &d : a_.deps)
      if (!d.carrier &&
          ((X.count(d.src_stmt) && Y.count(d.dst_stmt)) || (Y.count(d.src_stmt) && X.count(d.dst_stmt))))
        return true;
    return false;
  }

  std::size_t run_list(const std::vector<NodeRef> &nodes, IterEnv &env, std::size_t entry) {
    std::vector<std::size_t> exits;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      std::vector<std::size_t> after;
      for (std::size_t i = 0; i < j; ++i)
        if (dependent(nodes[i], nodes[j]))
          after.push_back(exits[i]);
      auto start = after.empty() ? entry : barrier(after);
      if (nodes[j].is_loop())
        exits.push_back(run_loop(nodes[j].index, env, start));
      else
        exits.push_back(region({{nodes[j].index, env}}, start));
    }
    return exits.empty() ? entry : barrier(exits);
  }

  void collect(const std::vector<NodeRef> &nodes, IterEnv &env, std::vector<Instance> &out) {
    ck_.for_each_instance(nodes, env, [&](std::size_t s, const IterEnv &e) {
      out.emplace_back(s, e);
      return true;
    });
  }

  std::size_t run_loop(std::size_t l, IterEnv &env, std::size_t entry) {
    const auto &loop = k_.loops[l];
    const auto p = c_.at(loop.id);
    const auto lo = ck_.lower(l, env), hi = ck_.upper(l, env);
    const auto uf = std::max<std::int64_t>(p.uf, 1);
    bool nested = false;
    for (const auto &b : loop.body)
      nested |= b.is_loop();
    bool carried = false;
    for (const auto &d : a_.deps)
      carried |= d.carrier == l;

    if (p.pip) {
      std::vector<std::size_t> exits;
      std::size_t issue = entry;
      for (auto first = lo; first < hi; first += uf) {
        if (first > lo)
          issue = delay({issue}, a_.min_ii[l]);
        std::vector<Instance> inst;
        for (auto v = first; v < std::min(hi, first + uf); ++v) {
          env[l] = v;
          collect(loop.body, env, inst);
        }
        exits.push_back(region(inst, issue));
      }
      return exits.empty() ? entry : barrier(exits);
    }
    std::size_t cur = entry;
    if (!nested) {
      for (auto first = lo; first < hi; first += uf) {
        std::vector<Instance> inst;
        for (auto v = first; v < std::min(hi, first + uf); ++v) {
          env[l] = v;
          collect(loop.body, env, inst);
        }
        cur = region(inst, cur);
      }
      return cur;
    }
    const auto width = carried ? 1 : uf;
    for (auto first = lo; first < hi; first += width) {
      std::vector<std::size_t> exits;
      for (auto v = first; v < std::min(hi, first + width); ++v) {
        env[l] = v;
        exits.push_back(run_list(loop.body, env, cur));
      }
      cur = barrier(exits);
    }
    return cur;
  }

  const KernelIR &k_;
  const Analysis &a_;
  const PragmaConfig &c_;
  CompiledKernel ck_;
  std::size_t max_ops_;
  std::size_t count_ = 0;
  OperationGraph g_;
};

/// Serial transfer time of the cache points: for every execution of a cache
/// loop, the largest transfer among its arrays; the top level covers every
/// array without a cache point enclosing all of its accesses.
inline Cycles simulate_transfers(const KernelIR &k, const PragmaConfig &c,
                                 const CalibrationTable &cal) {
  CompiledKernel ck(k);
  auto cost = [&](std::size_t array, const std::vector<NodeRef> &nodes, IterEnv env) {
    std::unordered_map<std::int64_t, bool> touched; // cell -> read before write
    bool read_first = false, written = false;
    ck.for_each_instance(nodes, env, [&](std::size_t s, const IterEnv &e) {
      for (const auto &r : ck.reads(s))
        if (r.array == array) {
          auto cell = ck.cell(r, e);
          if (!touched.count(cell)) {
            touched[cell] = true;
            read_first = true;
          }
        }
      const auto &w = ck.write(s);
      if (w.array == array) {
        touched.try_emplace(ck.cell(w, e), false);
        written = true;
      }
      return true;
    });
    auto bits = static_cast<std::int64_t>(touched.size()) * k.arrays[array].element_bits;
    auto bursts = (bits + cal.burst_bits - 1) / cal.burst_bits;
    return bursts * ((read_first ? 1 : 0) + (written ? 1 : 0));
  };
  auto array_index = [&](const std::string &n) {
    for (std::size_t i = 0; i < k.arrays.size(); ++i)
      if (k.arrays[i].name == n)
        return i;
    throw ConfigError("unknown array '" + n + "'");
  };

  Cycles total = 0;
  std::map<std::size_t, std::vector<std::size_t>> by_loop;
  std::set<std::size_t> covered;
  for (const auto &cp : c.cache) {
    auto l = *k.loop_index(cp.loop);
    auto a = array_index(cp.array);
    by_loop[l].push_back(a);
    bool all = true;
    for (const auto &st : k.statements) {
      bool uses = st.lhs.array == cp.array;
      for (const auto &r : st.reads)
        uses |= r.array == cp.array;
      if (uses)
        all &= std::find(st.loops.begin(), st.loops.end(), l) != st.loops.end();
    }
    if (all)
      covered.insert(a);
  }
  for (const auto &[l, arrays] : by_loop)
    ck.for_each_execution(l, [&](IterEnv &env) {
      Cycles level = 0;
      for (auto a : arrays)
        level = std::max(level, cost(a, {NodeRef{NodeRef::Kind::Loop, l}}, env));
      total += level;
      return true;
    });
  Cycles top = 0;
  for (std::size_t a = 0; a < k.arrays.size(); ++a)
    if (!k.arrays[a].is_scalar() && !covered.count(a))
      top = std::max(top, cost(a, k.root, IterEnv(k.loops.size(), 0)));
  return total + top;
}

} // namespace detail

/// Executes `k` under `c` on `res` functional units with a list scheduler:
/// pipelined loops issue one chunk of uf iterations every II cycles, other
/// loops run chunks back to back, loops without carried dependences run uf
/// iterations of a nested body side by side, and dependent siblings wait for
/// each other. Cache transfers are added as a serial prologue.
inline SimulationResult simulate_config(const KernelIR &k, const Analysis &a,
                                        const PragmaConfig &c, const ResourceLimits &res,
                                        const CalibrationTable &cal,
                                        const SchedulePolicy &policy = {}) {
  validate_shape(k, c);
  detail::TaskGraphBuilder b(k, a, c, policy.max_ops);
  auto g = b.build();
  SchedulePolicy unlimited = policy;
  unlimited.max_ops = std::numeric_limits<std::size_t>::max();
  SimulationResult r;
  r.ops = g.num_ops();
  r.computation = list_schedule(g, res, cal, unlimited).makespan;
  r.communication = detail::simulate_transfers(k, c, cal);
  r.total = r.computation + r.communication;
  return r;
}

} // namespace hlsbound
