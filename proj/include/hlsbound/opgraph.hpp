// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/calibration.hpp"
#include "hlsbound/expansion.hpp"

#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

namespace hlsbound {

struct GraphNode {
  enum class Kind : std::uint8_t { LiveIn, Root, Op, LiveOut, Delay };
  Kind kind = Kind::Op;
  OpKind op = OpKind::Add;
  /// Source operations folded into this node; a rebalanced reduction root
  /// also absorbs the accumulator input and carries 2.
  std::int64_t multiplicity = 1;
  std::vector<std::size_t> preds;
  std::string label;
  Cycles delay = 0; // Delay nodes: fixed latency, no functional unit

  bool is_op() const { return kind == Kind::Op; }
};

/// Operation graph of a straight-line region. Nodes are stored in
/// topological order; node 0 is the root.
struct OperationGraph {
  std::vector<GraphNode> nodes;
  std::map<OpKind, std::int64_t> op_counts;

  static constexpr std::size_t root = 0;

  std::size_t num_ops() const {
    std::size_t n = 0;
    for (const auto &v : nodes)
      n += v.is_op();
    return n;
  }
  std::int64_t total_ops() const {
    std::int64_t n = 0;
    for (const auto &[k, c] : op_counts)
      n += c;
    return n;
  }
  std::vector<std::size_t> of_kind(GraphNode::Kind kind) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == kind)
        out.push_back(i);
    return out;
  }
  std::vector<std::size_t> live_in() const { return of_kind(GraphNode::Kind::LiveIn); }
  std::vector<std::size_t> live_out() const { return of_kind(GraphNode::Kind::LiveOut); }
  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto &v : nodes)
      n += v.preds.size();
    return n;
  }
  std::vector<std::vector<std::size_t>> successors() const {
    std::vector<std::vector<std::size_t>> out(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (auto p : nodes[i].preds)
        out[p].push_back(i);
    return out;
  }
};

struct RegionBound {
  Cycles weighted_cp = 0;
  Cycles work_bound = 0;
  Cycles bound = 0;
};

/// Raised when graph construction exceeds its op budget.
class GraphTooLarge : public GraphError {
public:
  using GraphError::GraphError;
};

/// Incremental SSA expansion of statement instances into an OperationGraph.
class GraphBuilder {
public:
  GraphBuilder(const CompiledKernel &ck, bool tree_reduction,
               std::size_t max_ops = std::numeric_limits<std::size_t>::max())
      : ck_(ck), tree_(tree_reduction), max_ops_(max_ops) {
    g_.nodes.push_back({GraphNode::Kind::Root, OpKind::Add, 0, {}, "root"});
    uses_.push_back(0);
    holders_.push_back(0);
  }

  void add_instance(std::size_t stmt, const IterEnv &env) {
    const auto &s = ck_.kernel().statements[stmt];
    std::size_t cursor = s.is_accumulation() ? 1 : 0;
    Value v = eval(s, s.rhs, env, cursor);
    if (s.is_accumulation()) {
      Value acc = read(ck_.reads(stmt)[0], env);
      auto op = s.assign == AssignOp::AddAssign ? OpKind::Add : OpKind::Mul;
      v = make_op(op, {acc, v}, s.id, true);
    }
    write(ck_.write(stmt), env, v, s.id);
  }

  /// Expands every statement instance of `nodes` under `env`.
  void add_nodes(const std::vector<NodeRef> &nodes, IterEnv env) {
    ck_.for_each_instance(nodes, env, [&](std::size_t s, const IterEnv &e) {
      add_instance(s, e);
      return true;
    });
  }

  OperationGraph finish() {
    std::vector<std::pair<Location, Value>> final(mem_.begin(), mem_.end());
    std::sort(final.begin(), final.end(),
              [](const auto &a, const auto &b) { return a.first < b.first; });
    for (auto &[loc, v] : final) {
      if (v.kind != Value::Kind::Node || g_.nodes[v.node].kind == GraphNode::Kind::LiveIn)
        continue;
      GraphNode out{GraphNode::Kind::LiveOut, OpKind::Add, 0, {v.node}, location_label(loc)};
      g_.nodes.push_back(std::move(out));
      ++uses_[v.node];
    }
    for (const auto &n : g_.nodes)
      if (n.is_op())
        g_.op_counts[n.op] += n.multiplicity;
    return tree_ ? rebalance() : std::move(g_);
  }

private:
  struct Value {
    enum class Kind : std::uint8_t { Undefined, Constant, Node } kind = Kind::Undefined;
    std::size_t node = 0;
  };
  using Location = std::pair<std::size_t, std::int64_t>;
  struct LocationHash {
    std::size_t operator()(const Location &l) const {
      return std::hash<std::int64_t>()(l.second * 1315423911LL + static_cast<std::int64_t>(l.first));
    }
  };

  std::string location_label(const Location &loc) const {
    const auto &a = ck_.kernel().arrays[loc.first];
    std::string out = a.name;
    auto rem = loc.second;
    std::vector<std::int64_t> idx(a.dims.size());
    for (std::size_t d = a.dims.size(); d-- > 0;) {
      idx[d] = rem % a.dims[d];
      rem /= a.dims[d];
    }
    for (auto i : idx)
      out += "[" + std::to_string(i) + "]";
    return out;
  }

  Value read(const CompiledAccess &a, const IterEnv &env) {
    Location loc{a.array, ck_.cell(a, env)};
    auto &v = mem_[loc];
    if (v.kind == Value::Kind::Undefined) {
      g_.nodes.push_back({GraphNode::Kind::LiveIn, OpKind::Add, 0, {}, location_label(loc)});
      uses_.push_back(0);
      holders_.push_back(1);
      v = {Value::Kind::Node, g_.nodes.size() - 1};
    }
    return v;
  }

  void write(const CompiledAccess &a, const IterEnv &env, Value v, const std::string &stmt) {
    Location loc{a.array, ck_.cell(a, env)};
    auto &slot = mem_[loc];
    if (slot.kind == Value::Kind::Node) {
      auto old = slot.node;
      --holders_[old];
      if (g_.nodes[old].is_op() && holders_[old] == 0 && uses_[old] == 0)
        throw GraphError("useless operation: value computed by '" + g_.nodes[old].label +
                         "' is overwritten by '" + stmt + "' before use");
    }
    slot = v;
    if (v.kind == Value::Kind::Node)
      ++holders_[v.node];
  }

  Value make_op(OpKind op, std::initializer_list<Value> inputs, const std::string &label,
                bool accumulate = false) {
    if (++ops_ > max_ops_)
      throw GraphTooLarge("operation graph exceeds " + std::to_string(max_ops_) + " ops");
    GraphNode n{GraphNode::Kind::Op, op, 1, {}, label};
    for (const auto &in : inputs)
      if (in.kind == Value::Kind::Node &&
          std::find(n.preds.begin(), n.preds.end(), in.node) == n.preds.end())
        n.preds.push_back(in.node);
    for (auto p : n.preds)
      ++uses_[p];
    if (n.preds.empty())
      n.preds.push_back(OperationGraph::root);
    g_.nodes.push_back(std::move(n));
    uses_.push_back(0);
    holders_.push_back(0);
    accumulate_.resize(g_.nodes.size(), false);
    accumulate_.back() = accumulate;
    return {Value::Kind::Node, g_.nodes.size() - 1};
  }

  Value eval(const Statement &s, const ValueExpr &e, const IterEnv &env, std::size_t &cursor) {
    const auto stmt = static_cast<std::size_t>(&s - ck_.kernel().statements.data());
    switch (e.kind) {
    case ValueExpr::Kind::Access:
      return read(ck_.reads(stmt)[cursor++], env);
    case ValueExpr::Kind::Constant:
    case ValueExpr::Kind::Param:
      return {Value::Kind::Constant, 0};
    case ValueExpr::Kind::Binary: {
      auto a = eval(s, e.operands[0], env, cursor);
      auto b = eval(s, e.operands[1], env, cursor);
      return make_op(e.op, {a, b}, s.id);
    }
    }
    return {};
  }

  /// Replaces every maximal single-consumer cluster of one associative op by
  /// a balanced tree over its inputs. In clusters that update an accumulator
  /// the first input is folded into the root, which then counts two ops.
  OperationGraph rebalance() {
    auto &old = g_;
    auto succ = old.successors();
    const auto n = old.nodes.size();
    // a node is interior when its only consumer is an op of the same kind
    std::vector<bool> interior(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      const auto &v = old.nodes[i];
      if (!v.is_op() || !is_associative(v.op) || succ[i].size() != 1)
        continue;
      const auto &c = old.nodes[succ[i][0]];
      interior[i] = c.is_op() && c.op == v.op && c.multiplicity == 1;
    }
    OperationGraph out;
    out.op_counts = old.op_counts;
    std::vector<std::size_t> map(n, 0);
    auto push = [&](GraphNode node) {
      out.nodes.push_back(std::move(node));
      return out.nodes.size() - 1;
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (interior[i])
        continue;
      const auto &v = old.nodes[i];
      std::vector<std::size_t> leaves;
      std::size_t cluster = 1;
      bool fold = i < accumulate_.size() && accumulate_[i];
      if (v.is_op() && is_associative(v.op)) {
        std::function<void(std::size_t)> collect = [&](std::size_t x) {
          for (auto p : old.nodes[x].preds) {
            if (interior[p]) {
              ++cluster;
              fold |= accumulate_[p];
              collect(p);
            } else {
              leaves.push_back(map[p]);
            }
          }
        };
        collect(i);
      }
      if (cluster < 2) {
        GraphNode c = v;
        for (auto &p : c.preds)
          p = map[p];
        map[i] = push(std::move(c));
        continue;
      }
      // inputs equal to the root count as constants in the source ops
      leaves.erase(std::remove(leaves.begin(), leaves.end(), OperationGraph::root), leaves.end());
      std::optional<std::size_t> head;
      if (fold && !leaves.empty()) {
        head = leaves.front();
        leaves.erase(leaves.begin());
      }
      // pad so the tree has one binary node per op not folded into the root
      std::vector<std::optional<std::size_t>> items(leaves.begin(), leaves.end());
      while (items.size() < (fold ? cluster : cluster + 1))
        items.push_back(std::nullopt);
      while (items.size() > 1) {
        std::vector<std::optional<std::size_t>> next;
        for (std::size_t j = 0; j + 1 < items.size(); j += 2) {
          GraphNode t{GraphNode::Kind::Op, v.op, 1, {}, v.label};
          for (auto x : {items[j], items[j + 1]})
            if (x)
              t.preds.push_back(*x);
          if (t.preds.empty())
            t.preds.push_back(OperationGraph::root);
          next.push_back(push(std::move(t)));
        }
        if (items.size() % 2)
          next.push_back(items.back());
        items = std::move(next);
      }
      auto &top = out.nodes[**items.begin()];
      if (fold)
        top.multiplicity = 2;
      if (head && std::find(top.preds.begin(), top.preds.end(), *head) == top.preds.end())
        top.preds.push_back(*head);
      if (top.preds.size() > 1)
        top.preds.erase(std::remove(top.preds.begin(), top.preds.end(), OperationGraph::root),
                        top.preds.end());
      map[i] = **items.begin();
    }
    return out;
  }

  const CompiledKernel &ck_;
  bool tree_;
  std::size_t max_ops_;
  std::size_t ops_ = 0;
  OperationGraph g_;
  std::vector<std::int64_t> uses_;
  std::vector<std::int64_t> holders_;
  std::vector<bool> accumulate_;
  std::unordered_map<Location, Value, LocationHash> mem_;
};

/// Graph of a straight-line statement list; each statement runs once with
/// enclosing iterators at their lower bounds.
inline OperationGraph build_graph(const KernelIR &k, const std::vector<NodeRef> &region,
                                  std::optional<bool> tree_reduction = std::nullopt) {
  CompiledKernel ck(k);
  GraphBuilder b(ck, tree_reduction.value_or(k.options.tree_reduction));
  for (const auto &n : region) {
    if (n.is_loop())
      throw GraphError("region contains loop '" + k.loops[n.index].id +
                       "'; only straight-line code is accepted");
    IterEnv env(k.loops.size(), 0);
    for (auto l : k.statements[n.index].loops)
      env[l] = ck.lower(l, env);
    b.add_instance(n.index, env);
  }
  return b.finish();
}

/// Graph of a loop nest body fully unrolled.
inline OperationGraph build_unrolled_graph(const KernelIR &k, const std::vector<NodeRef> &nodes,
                                           std::optional<bool> tree_reduction = std::nullopt) {
  CompiledKernel ck(k);
  GraphBuilder b(ck, tree_reduction.value_or(k.options.tree_reduction));
  b.add_nodes(nodes, IterEnv(k.loops.size(), 0));
  return b.finish();
}

inline Cycles node_latency(const GraphNode &n, const CalibrationTable &cal) {
  if (n.kind == GraphNode::Kind::Delay)
    return n.delay;
  return n.is_op() ? cal.latency(n.op) : 0;
}

/// Longest latency-weighted dependence chain; boundary nodes weigh 0.
inline Cycles critical_path(const OperationGraph &g, const CalibrationTable &cal) {
  std::vector<Cycles> finish(g.nodes.size(), 0);
  Cycles best = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    Cycles start = 0;
    for (auto p : g.nodes[i].preds)
      start = std::max(start, finish[p]);
    finish[i] = start + node_latency(g.nodes[i], cal);
    best = std::max(best, finish[i]);
  }
  return best;
}

inline RegionBound region_bound(const OperationGraph &g, const ResourceLimits &res,
                                const CalibrationTable &cal) {
  RegionBound r;
  r.weighted_cp = critical_path(g, cal);
  for (const auto &[op, count] : g.op_counts) {
    if (count == 0)
      continue;
    auto lim = res.limit(op);
    if (!lim)
      continue;
    if (*lim <= 0)
      throw ConfigError(std::string("infeasible resources: no '") + std::string(op_name(op)) +
                        "' unit available");
    r.work_bound = std::max(r.work_bound, (count * cal.latency(op) + *lim - 1) / *lim);
  }
  r.bound = std::max(r.weighted_cp, r.work_bound);
  return r;
}

/// Graphviz rendering for debugging.
inline std::string to_dot(const OperationGraph &g) {
  std::ostringstream o;
  o << "digraph cdag {\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto &n = g.nodes[i];
    o << "  n" << i << " [label=\"";
    switch (n.kind) {
    case GraphNode::Kind::Root: o << "root\" shape=point"; break;
    case GraphNode::Kind::LiveIn: o << n.label << "\" shape=box"; break;
    case GraphNode::Kind::LiveOut: o << n.label << "\" shape=box style=bold"; break;
    case GraphNode::Kind::Delay: o << "delay " << n.delay << "\" shape=diamond"; break;
    case GraphNode::Kind::Op:
      o << op_symbol(n.op);
      if (n.multiplicity > 1)
        o << " x" << n.multiplicity;
      o << " " << n.label << "\"";
      break;
    }
    o << "];\n";
    for (auto p : n.preds)
      o << "  n" << p << " -> n" << i << ";\n";
  }
  o << "}\n";
  return o.str();
}

} // namespace hlsbound
