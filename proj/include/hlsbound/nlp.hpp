// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/latency_model.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>

namespace hlsbound {

struct NlpOptions {
  bool fine_grained_only = false;
  std::optional<std::int64_t> max_partition;
};

/// The pragma-selection problem of one kernel: variables and domains come
/// from the model, constraints are tagged with their equation numbers and
/// the objective is the model's latency bound.
struct NlpProblem {
  std::shared_ptr<const KernelModel> model;
  NlpOptions options;
  std::vector<Constraint> constraints;

  const KernelModel &m() const { return *model; }
  const KernelIR &kernel() const { return model->kernel(); }
  ConstraintOptions constraint_options() const {
    return {options.max_partition, options.fine_grained_only};
  }
  std::int64_t max_partition() const {
    return options.max_partition.value_or(model->calibration().max_partition);
  }
};

inline NlpProblem build_problem(std::shared_ptr<const KernelModel> m, NlpOptions opt = {}) {
  if (m->kernel().statements.empty())
    throw ConfigError("kernel '" + m->kernel().name + "' has no statements");
  NlpProblem p{std::move(m), opt, {}};
  p.constraints = build_constraints(*p.model, p.constraint_options());
  return p;
}

inline NlpProblem build_problem(const KernelIR &k, const Analysis &a, const CalibrationTable &cal,
                                NlpOptions opt = {}, ModelOptions mopt = {}) {
  if (k.statements.empty())
    throw ConfigError("kernel '" + k.name + "' has no statements");
  return build_problem(std::make_shared<const KernelModel>(k, a, cal, std::move(mopt)), opt);
}

/// Every violated constraint with its equation tag; empty means valid.
inline std::vector<Violation> check_config(const NlpProblem &p, const PragmaConfig &c) {
  return check_constraints(p.m(), p.constraints, c);
}

/// Latency bound of a valid config; identical to program_bound(c).total.
inline Cycles objective(const NlpProblem &p, const PragmaConfig &c) {
  if (auto v = check_config(p, c); !v.empty())
    throw ConfigError("invalid config: " + format_violations(v));
  auto vals = p.m().values(c);
  auto env = p.m().env(vals);
  return floor_of(fx::eval(p.m().computation(), env)) +
         floor_of(fx::eval(p.m().communication(), env));
}

/// Every assignment of pipelined loops with at most one pipeline on each
/// root-to-leaf path, in lexicographic order of the pip vector.
inline std::vector<std::vector<bool>> pipeline_placements(const KernelIR &k) {
  std::vector<std::vector<bool>> out{std::vector<bool>(k.loops.size(), false)};
  // reverse pre-order: a loop is set only where no loop under it is
  for (std::size_t l = k.loops.size(); l-- > 0;) {
    auto under = k.loops_under(l);
    std::vector<std::vector<bool>> more;
    for (const auto &p : out) {
      bool free = true;
      for (auto u : under)
        free &= !p[u];
      if (!free)
        continue;
      auto q = p;
      q[l] = true;
      more.push_back(std::move(q));
    }
    out.insert(out.end(), more.begin(), more.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

/// Interval environment with some uf variables left free over their domain.
class RelaxedEnv {
public:
  RelaxedEnv(const KernelModel &m, const std::unordered_map<std::string, std::int64_t> &vals,
             const std::vector<std::size_t> &free_loops)
      : m_(m), vals_(vals) {
    for (auto l : free_loops) {
      const auto &d = m.loop(l).uf_domain;
      free_[KernelModel::uf_var(m.loop(l).id)] = {Rational(d.front()), Rational(d.back())};
    }
    for (const auto &l : m.loops())
      tables_[KernelModel::table_name(l.id)] = l.index;
  }

  fx::IntervalEnv env() const {
    return {[this](const std::string &n) {
              if (auto it = free_.find(n); it != free_.end())
                return it->second;
              auto it = vals_.find(n);
              if (it == vals_.end())
                throw ConfigError("unbound variable '" + n + "'");
              return fx::Interval::point(Rational(it->second));
            },
            [this](const std::string &t, const fx::Interval &uf) {
              auto l = tables_.at(t);
              if (uf.is_point())
                return fx::Interval::point(Rational(m_.body_bound(l, floor_of(uf.lo)).bound));
              std::optional<fx::Interval> r;
              for (auto d : m_.loop(l).uf_domain) {
                if (Rational(d) < uf.lo || Rational(d) > uf.hi)
                  continue;
                Rational v(m_.body_bound(l, d).bound);
                r = r ? fx::Interval{std::min(r->lo, v), std::max(r->hi, v)} : fx::Interval::point(v);
              }
              if (!r)
                throw ConfigError("table '" + t + "' has no entry in range");
              return *r;
            }};
  }

private:
  const KernelModel &m_;
  const std::unordered_map<std::string, std::int64_t> &vals_;
  std::unordered_map<std::string, fx::Interval> free_;
  std::unordered_map<std::string, std::size_t> tables_;
};

} // namespace detail

/// Lower bound on the computation latency of every config that agrees with
/// `c` except on the uf of `free_loops`, which range over their domains.
inline Cycles relaxed_bound(const NlpProblem &p, const PragmaConfig &c,
                            const std::vector<std::size_t> &free_loops) {
  auto vals = p.m().values(c);
  detail::RelaxedEnv env(p.m(), vals, free_loops);
  return floor_of(fx::eval_interval(p.m().computation(), env.env()).lo);
}

enum class SolveStatus : std::uint8_t { Optimal, TimeoutBestSoFar, Infeasible };

inline std::string_view status_name(SolveStatus s) {
  switch (s) {
  case SolveStatus::Optimal:
    return "optimal";
  case SolveStatus::TimeoutBestSoFar:
    return "timeout_best_so_far";
  case SolveStatus::Infeasible:
    return "infeasible";
  }
  return "?";
}

struct SolveOptions {
  std::optional<std::chrono::milliseconds> timeout;
};

struct SolveResult {
  std::optional<PragmaConfig> best_config;
  std::optional<Cycles> lower_bound;
  SolveStatus status = SolveStatus::Infeasible;
  std::uint64_t nodes_explored = 0;
};

namespace detail {

/// Branch and bound over pipeline placements, then unroll factors. Caches
/// only affect communication and on-chip usage, so they are chosen per
/// placement by enumerating one covering cache loop (or none) per array.
class Solver {
public:
  Solver(const NlpProblem &p, const SolveOptions &o) : p_(p), m_(p.m()), k_(p.kernel()) {
    if (o.timeout)
      deadline_ = std::chrono::steady_clock::now() + *o.timeout;
  }

  SolveResult run() {
    SolveResult r;
    std::vector<Placement> placed;
    for (const auto &pip : pipeline_placements(k_)) {
      auto pl = place(pip);
      if (!pl)
        continue;
      minimize(*pl, 0);
      placed.push_back(std::move(*pl));
      if (timed_out_)
        break;
    }
    r.nodes_explored = nodes_;
    const Placement *best = nullptr;
    for (const auto &pl : placed)
      if (pl.best_comp && (!best || pl.total() < best->total()))
        best = &pl;
    if (!best) {
      r.status = timed_out_ ? SolveStatus::TimeoutBestSoFar : SolveStatus::Infeasible;
      return r;
    }
    if (timed_out_) {
      r.status = SolveStatus::TimeoutBestSoFar;
      r.best_config = config_of(*best, best->best_vals);
      r.lower_bound = best->total();
      return r;
    }
    // lexicographically smallest optimum: first placement, then smallest ufs
    Placement pl = *best;
    auto vals = pl.vals;
    if (find(pl, 0, pl.best_comp.value()))
      vals = pl.vals;
    else
      vals = pl.best_vals;
    r.nodes_explored = nodes_;
    r.best_config = config_of(pl, vals);
    r.lower_bound = pl.total();
    r.status = timed_out_ ? SolveStatus::TimeoutBestSoFar : SolveStatus::Optimal;
    if (auto v = check_config(p_, *r.best_config); !v.empty())
      throw Error("solver produced an invalid config: " + format_violations(v));
    return r;
  }

private:
  struct Placement {
    std::vector<bool> pip;
    std::vector<std::size_t> free; // loops whose uf is searched, in loop order
    std::vector<bool> assigned;    // per loop: uf fixed at the current node
    std::unordered_map<std::string, std::int64_t> vals;
    std::set<CachePoint> cache;
    Cycles comm = 0;
    std::optional<Cycles> best_comp;
    std::unordered_map<std::string, std::int64_t> best_vals;

    Cycles total() const { return *best_comp + comm; }
  };

  static constexpr Cycles kInf = std::numeric_limits<Cycles>::max();

  bool expired() {
    if (!timed_out_ && deadline_ && std::chrono::steady_clock::now() >= *deadline_)
      timed_out_ = true;
    return timed_out_;
  }

  bool under_pip(const std::vector<bool> &pip, std::size_t l) const {
    for (auto a : k_.loops_above(l))
      if (pip[a])
        return true;
    return false;
  }

  std::optional<Placement> place(const std::vector<bool> &pip) {
    Placement pl;
    pl.pip = pip;
    pl.assigned.assign(k_.loops.size(), true);
    for (const auto &v : m_.vars())
      pl.vals[v.name] = v.kind == VarKind::Pip ? (pip[v.loop] ? 1 : 0) : v.kind == VarKind::Cache ? 0 : 1;
    for (std::size_t l = 0; l < k_.loops.size(); ++l) {
      const auto &lm = m_.loop(l);
      auto &uf = pl.vals[KernelModel::uf_var(lm.id)];
      bool above_pip = false;
      for (auto u : k_.loops_under(l))
        above_pip |= pip[u];
      if (under_pip(pip, l)) {
        if (!std::count(lm.uf_domain.begin(), lm.uf_domain.end(), lm.tc))
          return std::nullopt;
        uf = lm.tc;
      } else if (p_.options.fine_grained_only && above_pip) {
        uf = 1;
      } else if (lm.uf_domain.size() > 1) {
        pl.free.push_back(l);
        pl.assigned[l] = false;
        uf = lm.uf_domain.front();
      } else {
        uf = lm.uf_domain.front();
      }
    }
    if (!choose_caches(pl))
      return std::nullopt;
    return pl;
  }

  /// Cheapest cache selection for the placement, ties broken by the
  /// lexicographically smallest cache vector.
  bool choose_caches(Placement &pl) {
    std::vector<std::vector<std::optional<std::size_t>>> options;
    std::vector<std::string> arrays;
    for (const auto &arr : k_.arrays) {
      std::vector<std::optional<std::size_t>> opts{std::nullopt};
      for (auto l : m_.covering_loops(arr.name))
        if (std::count(m_.cache_pairs().begin(), m_.cache_pairs().end(),
                       CachePoint{k_.loops[l].id, arr.name}) &&
            !under_pip(pl.pip, l))
          opts.push_back(l);
      if (opts.size() > 1) {
        arrays.push_back(arr.name);
        options.push_back(std::move(opts));
      }
    }
    std::vector<std::size_t> pick(arrays.size(), 0);
    std::optional<std::pair<Cycles, std::vector<std::int64_t>>> best;
    const auto avail = m_.calibration().onchip_bits_available;
    while (true) {
      ++nodes_;
      if (expired())
        return false;
      std::set<CachePoint> cache;
      for (std::size_t i = 0; i < arrays.size(); ++i)
        if (auto l = options[i][pick[i]])
          cache.insert({k_.loops[*l].id, arrays[i]});
      for (const auto &cp : m_.cache_pairs())
        pl.vals[KernelModel::cache_var(cp.loop, cp.array)] = cache.count(cp) ? 1 : 0;
      auto env = m_.env(pl.vals);
      if (fx::eval(m_.onchip_bits(), env) <= Rational(avail)) {
        auto comm = floor_of(fx::eval(m_.communication(), env));
        std::vector<std::int64_t> vec;
        for (const auto &cp : m_.cache_pairs())
          vec.push_back(cache.count(cp) ? 1 : 0);
        std::pair<Cycles, std::vector<std::int64_t>> key{comm, std::move(vec)};
        if (!best || key < *best) {
          best = std::move(key);
          pl.cache = cache;
          pl.comm = comm;
        }
      }
      std::size_t i = 0;
      while (i < pick.size() && ++pick[i] == options[i].size())
        pick[i++] = 0;
      if (i == pick.size())
        break;
    }
    for (const auto &cp : m_.cache_pairs())
      pl.vals[KernelModel::cache_var(cp.loop, cp.array)] = pl.cache.count(cp) ? 1 : 0;
    return best.has_value();
  }

  /// Unroll factors fixed so far respect Eq.9 and the DSP budget.
  bool feasible(const Placement &pl, const fx::IntervalEnv &env) const {
    std::map<std::string, std::int64_t> product;
    for (const auto &t : m_.partitions()) {
      std::int64_t ap = 1;
      for (auto l : t.loops)
        if (pl.assigned[l])
          ap = std::lcm(ap, pl.vals.at(KernelModel::uf_var(k_.loops[l].id)));
      auto &prod = product.try_emplace(t.array, 1).first->second;
      prod = std::min<std::int64_t>(prod * ap, std::numeric_limits<std::int32_t>::max());
    }
    for (const auto &[a, prod] : product)
      if (prod > p_.max_partition())
        return false;
    return fx::eval_interval(m_.dsp(), env).lo <= Rational(m_.calibration().dsp_available);
  }

  std::vector<std::size_t> open_loops(const Placement &pl, std::size_t i) const {
    return {pl.free.begin() + static_cast<std::ptrdiff_t>(i), pl.free.end()};
  }

  /// Smallest computation bound of the placement below the incumbent.
  void minimize(Placement &pl, std::size_t i) {
    if (expired())
      return;
    ++nodes_;
    RelaxedEnv relaxed(m_, pl.vals, open_loops(pl, i));
    auto env = relaxed.env();
    if (!feasible(pl, env))
      return;
    auto lb = floor_of(fx::eval_interval(m_.computation(), env).lo);
    Cycles limit = incumbent_ == kInf ? kInf : incumbent_ - pl.comm;
    if (pl.best_comp)
      limit = std::min(limit, *pl.best_comp - 1);
    if (lb > limit)
      return;
    if (i == pl.free.size()) {
      pl.best_comp = lb;
      pl.best_vals = pl.vals;
      incumbent_ = std::min(incumbent_, lb + pl.comm);
      return;
    }
    auto l = pl.free[i];
    const auto &dom = m_.loop(l).uf_domain;
    auto &uf = pl.vals[KernelModel::uf_var(k_.loops[l].id)];
    pl.assigned[l] = true;
    for (auto it = dom.rbegin(); it != dom.rend(); ++it) {
      uf = *it;
      minimize(pl, i + 1);
    }
    pl.assigned[l] = false;
    uf = dom.front();
  }

  /// First config in ascending uf order whose computation bound is `target`.
  bool find(Placement &pl, std::size_t i, Cycles target) {
    if (expired())
      return false;
    ++nodes_;
    RelaxedEnv relaxed(m_, pl.vals, open_loops(pl, i));
    auto env = relaxed.env();
    if (!feasible(pl, env))
      return false;
    auto lb = floor_of(fx::eval_interval(m_.computation(), env).lo);
    if (lb > target)
      return false;
    if (i == pl.free.size())
      return lb == target;
    auto l = pl.free[i];
    auto &uf = pl.vals[KernelModel::uf_var(k_.loops[l].id)];
    pl.assigned[l] = true;
    for (auto v : m_.loop(l).uf_domain) {
      uf = v;
      if (find(pl, i + 1, target))
        return true;
    }
    pl.assigned[l] = false;
    return false;
  }

  PragmaConfig config_of(const Placement &pl,
                         const std::unordered_map<std::string, std::int64_t> &vals) const {
    auto c = default_config(k_);
    for (const auto &l : k_.loops) {
      auto &x = c.loops[l.id];
      x.pip = vals.at(KernelModel::pip_var(l.id)) != 0;
      x.uf = vals.at(KernelModel::uf_var(l.id));
      x.tile = vals.at(KernelModel::tile_var(l.id));
    }
    c.cache = pl.cache;
    return c;
  }

  const NlpProblem &p_;
  const KernelModel &m_;
  const KernelIR &k_;
  std::optional<std::chrono::steady_clock::time_point> deadline_;
  bool timed_out_ = false;
  std::uint64_t nodes_ = 0;
  Cycles incumbent_ = kInf;
};

} // namespace detail

/// Exact minimum of the objective over all valid configs. Among optimal
/// configs the one with the lexicographically smallest config vector wins.
inline SolveResult solve(const NlpProblem &p, const SolveOptions &opt = {}) {
  return detail::Solver(p, opt).run();
}

/// Number of configs satisfying every structural constraint; the resource
/// constraints (Eq.9, Eq.15, Eq.16) are not applied.
inline boost::multiprecision::cpp_int count_space(const NlpProblem &p) {
  using boost::multiprecision::cpp_int;
  const auto &k = p.kernel();
  const auto &m = p.m();
  cpp_int tiles = 1;
  for (const auto &l : m.loops())
    tiles *= l.domain.size();
  cpp_int total = 0;
  for (const auto &pip : pipeline_placements(k)) {
    auto under = [&](std::size_t l) {
      for (auto a : k.loops_above(l))
        if (pip[a])
          return true;
      return false;
    };
    cpp_int n = tiles;
    for (std::size_t l = 0; l < k.loops.size(); ++l) {
      const auto &lm = m.loop(l);
      bool above = false;
      for (auto u : k.loops_under(l))
        above |= pip[u];
      if (under(l))
        n *= std::count(lm.uf_domain.begin(), lm.uf_domain.end(), lm.tc) ? 1 : 0;
      else if (!(p.options.fine_grained_only && above))
        n *= lm.uf_domain.size();
    }
    // per array: antichains of allowed cache loops in the loop forest
    for (const auto &arr : k.arrays) {
      std::vector<cpp_int> f(k.loops.size(), 1);
      for (std::size_t l = k.loops.size(); l-- > 0;) {
        cpp_int prod = 1;
        for (const auto &c : k.loops[l].body)
          if (c.is_loop())
            prod *= f[c.index];
        bool allowed = std::count(m.cache_pairs().begin(), m.cache_pairs().end(),
                                  CachePoint{k.loops[l].id, arr.name}) &&
                       !under(l);
        f[l] = prod + (allowed ? 1 : 0);
      }
      for (const auto &c : k.root)
        if (c.is_loop())
          n *= f[c.index];
    }
    total += n;
  }
  return total;
}

} // namespace hlsbound
