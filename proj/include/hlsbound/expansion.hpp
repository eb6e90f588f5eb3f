// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/kernel_ir.hpp"

#include <algorithm>
#include <functional>
#include <vector>

namespace hlsbound {

/// Iterator values indexed by loop index.
using IterEnv = std::vector<std::int64_t>;

struct CompiledAffine {
  std::vector<std::pair<std::size_t, std::int64_t>> terms;
  std::int64_t constant = 0;

  std::int64_t eval(const IterEnv &env) const {
    std::int64_t v = constant;
    for (const auto &[l, c] : terms)
      v += c * env[l];
    return v;
  }
};

struct CompiledAccess {
  std::size_t array = 0; // index into KernelIR::arrays
  std::vector<CompiledAffine> subscripts;
  std::vector<std::int64_t> strides;
  std::vector<std::int64_t> extents;
  CompiledAffine flat; // cell id as one affine function, no bounds check
};

/// Kernel with affine expressions resolved to loop indices, for fast
/// instance enumeration.
class CompiledKernel {
public:
  explicit CompiledKernel(const KernelIR &k) : k_(&k) {
    for (const auto &l : k.loops) {
      lower_.push_back(compile(l.lower));
      upper_.push_back(compile(l.upper));
    }
    for (const auto &s : k.statements) {
      writes_.push_back(compile(s.lhs));
      std::vector<CompiledAccess> rs;
      for (const auto &r : s.reads)
        rs.push_back(compile(r));
      reads_.push_back(std::move(rs));
    }
  }

  const KernelIR &kernel() const { return *k_; }
  const CompiledAccess &write(std::size_t stmt) const { return writes_[stmt]; }
  const std::vector<CompiledAccess> &reads(std::size_t stmt) const { return reads_[stmt]; }

  std::int64_t lower(std::size_t loop, const IterEnv &env) const { return lower_[loop].eval(env); }
  std::int64_t upper(std::size_t loop, const IterEnv &env) const { return upper_[loop].eval(env); }

  CompiledAccess compile(const ArrayAccess &a) const {
    CompiledAccess c;
    for (std::size_t i = 0; i < k_->arrays.size(); ++i)
      if (k_->arrays[i].name == a.array)
        c.array = i;
    const auto &dims = k_->arrays[c.array].dims;
    std::int64_t stride = 1;
    c.strides.assign(dims.size(), 1);
    for (std::size_t d = dims.size(); d-- > 0;) {
      c.strides[d] = stride;
      stride *= dims[d];
    }
    c.extents = dims;
    for (std::size_t d = 0; d < a.subscripts.size(); ++d) {
      c.subscripts.push_back(compile(a.subscripts[d]));
      c.flat.constant += c.subscripts.back().constant * c.strides[d];
      for (const auto &[l, coeff] : c.subscripts.back().terms) {
        auto it = std::find_if(c.flat.terms.begin(), c.flat.terms.end(),
                               [&](const auto &t) { return t.first == l; });
        if (it == c.flat.terms.end())
          c.flat.terms.emplace_back(l, coeff * c.strides[d]);
        else
          it->second += coeff * c.strides[d];
      }
    }
    return c;
  }

  /// Flat cell id within the array; throws on out-of-bounds subscripts.
  std::int64_t cell(const CompiledAccess &a, const IterEnv &env) const {
    std::int64_t id = 0;
    for (std::size_t d = 0; d < a.subscripts.size(); ++d) {
      auto v = a.subscripts[d].eval(env);
      if (v < 0 || v >= a.extents[d])
        throw AnalysisError("access to '" + k_->arrays[a.array].name +
                            "' out of bounds (dimension " + std::to_string(d) +
                            ", index " + std::to_string(v) + ")");
      id += v * a.strides[d];
    }
    return id;
  }

  /// Visits every statement instance of `nodes` in execution order.
  /// The visitor returns false to stop early; the return value reports
  /// whether enumeration ran to completion.
  template <typename Fn>
  bool for_each_instance(const std::vector<NodeRef> &nodes, IterEnv &env, Fn &&fn) const {
    for (const auto &n : nodes) {
      if (!n.is_loop()) {
        if (!fn(n.index, env))
          return false;
        continue;
      }
      if (!for_each_iteration(n.index, env, [&](IterEnv &e) {
            return for_each_instance(k_->loops[n.index].body, e, fn);
          }))
        return false;
    }
    return true;
  }

  template <typename Fn>
  bool for_each_iteration(std::size_t loop, IterEnv &env, Fn &&fn) const {
    auto lo = lower(loop, env);
    auto hi = upper(loop, env);
    for (auto v = lo; v < hi; ++v) {
      env[loop] = v;
      if (!fn(env))
        return false;
    }
    return true;
  }

  /// Visits every execution (outer iterator assignment) of `loop`.
  bool for_each_execution(std::size_t loop, const std::function<bool(IterEnv &)> &fn) const {
    IterEnv env(k_->loops.size(), 0);
    auto chain = k_->loops_above(loop);
    return walk_chain(chain, 0, env, fn);
  }

private:
  bool walk_chain(const std::vector<std::size_t> &chain, std::size_t i, IterEnv &env,
                  const std::function<bool(IterEnv &)> &fn) const {
    if (i == chain.size())
      return fn(env);
    return for_each_iteration(chain[i], env,
                              [&](IterEnv &e) { return walk_chain(chain, i + 1, e, fn); });
  }

  CompiledAffine compile(const AffineExpr &e) const {
    CompiledAffine c;
    c.constant = e.constant;
    for (const auto &[name, coeff] : e.coeffs)
      c.terms.emplace_back(*k_->loop_index(name), coeff);
    return c;
  }

  const KernelIR *k_;
  std::vector<CompiledAffine> lower_, upper_;
  std::vector<CompiledAccess> writes_;
  std::vector<std::vector<CompiledAccess>> reads_;
};

} // namespace hlsbound
