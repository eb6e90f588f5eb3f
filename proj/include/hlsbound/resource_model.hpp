// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/latency_model.hpp"

namespace hlsbound {

/// Minimal DSP usage under perfect sharing between statements that never
/// run concurrently.
inline Rational dsp_lower_bound(const KernelModel &m, const PragmaConfig &c) {
  return m.eval(m.dsp(), c);
}

/// Smallest partition factor per array dimension compatible with the
/// unroll factors of the loops indexing it.
inline std::vector<PartitionFactor> partition_factors(const KernelModel &m,
                                                      const PragmaConfig &c) {
  auto vals = m.values(c);
  auto env = m.env(vals);
  std::vector<PartitionFactor> out;
  for (const auto &t : m.partitions())
    out.push_back({t.array, t.dim, fx::eval(t.expr, env).numerator()});
  return out;
}

/// Arrays whose partition product exceeds `max_partition`.
inline std::vector<Violation> partition_violations(const KernelModel &m, const PragmaConfig &c,
                                                   std::optional<std::int64_t> max_partition = {}) {
  auto limit = max_partition.value_or(m.calibration().max_partition);
  std::map<std::string, std::int64_t> product;
  for (const auto &p : partition_factors(m, c))
    product.try_emplace(p.array, 1).first->second *= p.factor;
  std::vector<Violation> out;
  for (const auto &[a, prod] : product)
    if (prod > limit)
      out.push_back({"Eq.9", "max_partition_" + a,
                     "partitioning of array '" + a + "' is " + std::to_string(prod) +
                         ", above the limit " + std::to_string(limit)});
  return out;
}

/// Bits of on-chip storage taken by the selected cache points.
inline std::int64_t onchip_usage(const KernelModel &m, const PragmaConfig &c) {
  const auto &k = m.kernel();
  for (const auto &arr : k.arrays) {
    std::vector<std::size_t> at;
    for (const auto &cp : c.cache)
      if (cp.array == arr.name)
        at.push_back(*k.loop_index(cp.loop));
    for (auto a : at)
      for (auto b : at)
        if (a != b && k.is_nested_in(b, a))
          throw ConfigError("array '" + arr.name + "' cached at nested loops '" + k.loops[a].id +
                            "' and '" + k.loops[b].id + "'");
  }
  return floor_of(m.eval(m.onchip_bits(), c));
}

} // namespace hlsbound
