// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/nlp.hpp"

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

/// Small kernels with trip counts drawn from {4, 6, 8, 12}.
inline std::vector<std::pair<std::string, std::string>> small_kernels() {
  return {
      {"matvec", "kernel mv { array A[8][6]: f32 in; array x[6]: f32 in; array y[8]: f32 inout;"
                 " loop i 0 8 { loop k 0 6 { S: y[i] += A[i][k] * x[k]; } } }"},
      {"recurrence", "kernel rc { array a[14]: f32 inout; array b[14]: f32 in;"
                     " array c[4]: f32 inout;"
                     " loop i 2 14 { S0: a[i] = a[i - 2] + b[i]; }"
                     " loop j 0 4 { S1: c[j] = c[j] * b[j]; } }"},
      {"producer_consumer", "kernel pc { array a[6]: f32 in; array b[6]: f32 in;"
                            " array t[6]: f32 inout; array d[6]: f32 inout;"
                            " loop i 0 6 { S0: t[i] = a[i] * b[i]; }"
                            " loop j 0 6 { S1: d[j] = t[j] + d[j]; } }"},
      {"mm_mini", "kernel mm { array A[4][6]: f32 in; array B[6][4]: f32 in;"
                  " array T[4][4]: f32 inout;"
                  " loop i 0 4 { loop j 0 4 { S0: T[i][j] = 0;"
                  " loop k 0 6 { S1: T[i][j] += A[i][k] * B[k][j]; } } } }"},
      {"stencil", "kernel st { array a[12][8]: f32 inout; array w[8]: f32 in;"
                  " loop i 1 12 { loop j 0 8 { S: a[i][j] = a[i - 1][j] * w[j] + a[i][j]; } } }"},
  };
}

inline std::vector<std::int64_t> divisors_of(std::int64_t n) {
  std::vector<std::int64_t> d;
  for (std::int64_t i = 1; i <= std::max<std::int64_t>(n, 1); ++i)
    if (std::max<std::int64_t>(n, 1) % i == 0)
      d.push_back(i);
  return d;
}

/// Visits every config over the raw domains: pip in {0, 1}, uf among the
/// divisors of the largest trip count, tile = 1 and any subset of cache
/// pairs; the visitor filters validity itself.
inline void for_each_raw_config(const hlsbound::KernelModel &m,
                                const std::function<void(const hlsbound::PragmaConfig &)> &fn) {
  const auto &k = m.kernel();
  const auto n = k.loops.size();
  std::vector<std::vector<std::int64_t>> ufs;
  for (const auto &l : m.loops())
    ufs.push_back(divisors_of(l.tc));
  const auto pairs = m.cache_pairs();
  std::vector<std::size_t> pick(n, 0);
  for (std::uint64_t pips = 0; pips < (std::uint64_t{1} << n); ++pips) {
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      for (std::uint64_t cache = 0; cache < (std::uint64_t{1} << pairs.size()); ++cache) {
        auto c = hlsbound::default_config(k);
        for (std::size_t l = 0; l < n; ++l) {
          auto &p = c.loops[k.loops[l].id];
          p.pip = (pips >> l) & 1;
          p.uf = ufs[l][pick[l]];
        }
        for (std::size_t i = 0; i < pairs.size(); ++i)
          if ((cache >> i) & 1)
            c.cache.insert(pairs[i]);
        fn(c);
      }
      std::size_t i = 0;
      while (i < n && ++pick[i] == ufs[i].size())
        pick[i++] = 0;
      if (i == n)
        break;
    }
  }
}

struct BruteForce {
  std::size_t valid = 0;
  std::optional<hlsbound::Cycles> best;
  std::optional<hlsbound::PragmaConfig> config;
};

/// Exhaustive minimum with the lexicographically smallest config vector.
inline BruteForce brute_force(const hlsbound::NlpProblem &p) {
  BruteForce r;
  std::vector<std::int64_t> best_vec;
  for_each_raw_config(p.m(), [&](const hlsbound::PragmaConfig &c) {
    if (!hlsbound::check_config(p, c).empty())
      return;
    ++r.valid;
    auto obj = hlsbound::objective(p, c);
    auto vec = hlsbound::config_vector(p.kernel(), c, p.m().cache_pairs());
    if (!r.best || obj < *r.best || (obj == *r.best && vec < best_vec)) {
      r.best = obj;
      r.config = c;
      best_vec = std::move(vec);
    }
  });
  return r;
}

/// A valid config drawn at random: a pipeline placement, unroll factors from
/// the domains (full unroll under the pipeline) and a few cache points.
inline std::optional<hlsbound::PragmaConfig> random_valid_config(const hlsbound::NlpProblem &p,
                                                                 std::mt19937 &rng) {
  const auto &k = p.kernel();
  const auto &m = p.m();
  auto placements = hlsbound::pipeline_placements(k);
  auto pick = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto &pip = placements[pick(placements.size())];
    auto c = hlsbound::default_config(k);
    for (std::size_t l = 0; l < k.loops.size(); ++l) {
      auto &x = c.loops[k.loops[l].id];
      x.pip = pip[l];
      const auto &lm = m.loop(l);
      x.uf = lm.uf_domain[pick(lm.uf_domain.size())];
      x.tile = lm.domain[pick(lm.domain.size())];
      for (auto a : k.loops_above(l))
        if (pip[a])
          x.uf = lm.tc;
    }
    for (const auto &cp : m.cache_pairs())
      if (pick(5) == 0)
        c.cache.insert(cp);
    if (hlsbound::check_config(p, c).empty())
      return c;
  }
  return std::nullopt;
}

} // namespace testing_support
