// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/opgraph.hpp"

#include <queue>

namespace hlsbound {

struct ScheduleResult {
  Cycles makespan = 0;
  std::vector<Cycles> start;  // per node
  std::vector<Cycles> finish; // per node
  /// Busy units per op kind for each cycle in [0, makespan).
  std::map<OpKind, std::vector<std::int64_t>> usage;
};

struct SchedulePolicy {
  std::size_t max_ops = std::size_t{1} << 14;
};

namespace detail {

inline std::int64_t units_for(const GraphNode &n, const ResourceLimits &res) {
  auto lim = res.limit(n.op);
  return lim ? std::min<std::int64_t>(n.multiplicity, *lim) : n.multiplicity;
}

inline Cycles duration_of(const GraphNode &n, const ResourceLimits &res,
                          const CalibrationTable &cal) {
  if (n.kind == GraphNode::Kind::Delay)
    return n.delay;
  if (!n.is_op())
    return 0;
  auto u = units_for(n, res);
  return (n.multiplicity + u - 1) / u * cal.latency(n.op);
}

} // namespace detail

/// Greedy resource-constrained list schedule. Ready ops are ordered by
/// longest remaining path (then node id) and started as soon as enough units
/// are free; every result is checked for precedence and capacity.
inline ScheduleResult list_schedule(const OperationGraph &g, const ResourceLimits &res,
                                    const CalibrationTable &cal, const SchedulePolicy &policy = {}) {
  if (g.num_ops() > policy.max_ops)
    throw Error("schedule size cap exceeded: " + std::to_string(g.num_ops()) + " ops > " +
                std::to_string(policy.max_ops));
  for (const auto &[op, count] : g.op_counts)
    if (count > 0)
      if (auto lim = res.limit(op); lim && *lim <= 0)
        throw ConfigError(std::string("infeasible resources: no '") + std::string(op_name(op)) +
                          "' unit available");
  const auto n = g.nodes.size();
  auto succ = g.successors();
  std::vector<Cycles> dur(n), prio(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    dur[i] = detail::duration_of(g.nodes[i], res, cal);
  for (std::size_t i = n; i-- > 0;) {
    Cycles tail = 0;
    for (auto s : succ[i])
      tail = std::max(tail, prio[s]);
    prio[i] = dur[i] + tail;
  }

  ScheduleResult r;
  r.start.assign(n, -1);
  r.finish.assign(n, -1);
  std::vector<std::size_t> waiting(n);
  std::vector<Cycles> earliest(n, 0);
  auto cmp = [&](std::size_t a, std::size_t b) {
    return prio[a] != prio[b] ? prio[a] < prio[b] : a > b;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> ready(cmp);
  // (finish time, node) of running ops
  std::priority_queue<std::pair<Cycles, std::size_t>, std::vector<std::pair<Cycles, std::size_t>>,
                      std::greater<>>
      running;
  std::map<OpKind, std::int64_t> busy;
  for (std::size_t i = 0; i < n; ++i) {
    waiting[i] = g.nodes[i].preds.size();
    if (waiting[i] == 0)
      ready.push(i);
  }
  std::size_t done = 0;
  Cycles now = 0;
  auto complete = [&](std::size_t i) {
    ++done;
    r.makespan = std::max(r.makespan, r.finish[i]);
    for (auto s : succ[i]) {
      earliest[s] = std::max(earliest[s], r.finish[i]);
      if (--waiting[s] == 0)
        ready.push(s);
    }
  };
  while (done < n) {
    std::vector<std::size_t> deferred;
    bool progressed = false;
    while (!ready.empty()) {
      auto i = ready.top();
      ready.pop();
      const auto &v = g.nodes[i];
      if (earliest[i] > now) {
        deferred.push_back(i);
        continue;
      }
      if (v.kind == GraphNode::Kind::Delay && dur[i] > 0) {
        r.start[i] = now;
        r.finish[i] = now + dur[i];
        running.emplace(r.finish[i], i);
        progressed = true;
        continue;
      }
      if (!v.is_op()) {
        r.start[i] = r.finish[i] = now;
        complete(i);
        progressed = true;
        continue;
      }
      auto u = detail::units_for(v, res);
      auto lim = res.limit(v.op);
      if (lim && busy[v.op] + u > *lim) {
        deferred.push_back(i);
        continue;
      }
      busy[v.op] += u;
      r.start[i] = now;
      r.finish[i] = now + dur[i];
      running.emplace(r.finish[i], i);
      progressed = true;
    }
    for (auto i : deferred)
      ready.push(i);
    if (progressed)
      continue;
    // advance to the next completion or release time
    Cycles next = std::numeric_limits<Cycles>::max();
    if (!running.empty())
      next = running.top().first;
    for (auto i : deferred)
      if (earliest[i] > now)
        next = std::min(next, earliest[i]);
    if (next == std::numeric_limits<Cycles>::max())
      throw std::logic_error("list_schedule: deadlock");
    now = next;
    while (!running.empty() && running.top().first <= now) {
      auto i = running.top().second;
      running.pop();
      if (g.nodes[i].is_op())
        busy[g.nodes[i].op] -= detail::units_for(g.nodes[i], res);
      complete(i);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto &v = g.nodes[i];
    for (auto p : v.preds)
      if (r.start[i] < r.finish[p])
        throw std::logic_error("list_schedule: precedence violated");
    if (!v.is_op())
      continue;
    auto &use = r.usage[v.op];
    if (static_cast<Cycles>(use.size()) < r.makespan)
      use.resize(static_cast<std::size_t>(r.makespan), 0);
    for (auto t = r.start[i]; t < r.finish[i]; ++t)
      use[static_cast<std::size_t>(t)] += detail::units_for(v, res);
  }
  for (const auto &[op, use] : r.usage)
    if (auto lim = res.limit(op))
      for (auto u : use)
        if (u > *lim)
          throw std::logic_error("list_schedule: resource cap violated");
  return r;
}

} // namespace hlsbound
