// SPDX-License-Identifier: Apache-2.0
#include "hlsbound/latency_model.hpp"
#include "hlsbound/oracle.hpp"
#include "random_kernels.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace hlsbound;
using testing_support::load_kernel;

namespace {

struct Fixture {
  KernelIR k;
  CalibrationTable cal;
  Analysis a;
  Fixture(const std::string &src, CalibrationTable c = {})
      : k(parse_kernel(src)), cal(c), a(analyze(k, cal)) {}
  SimulationResult sim(const PragmaConfig &c, const ResourceLimits &r = {}) const {
    return simulate_config(k, a, c, r, cal);
  }
};

CalibrationTable add_latency(Cycles l) {
  CalibrationTable cal;
  cal.cost(OpKind::Add).latency = l;
  return cal;
}

} // namespace

TEST(Oracle, SequentialLoopOfThreeCycleChain) {
  // a three-subtract chain per iteration, four dependent iterations
  CalibrationTable cal;
  cal.cost(OpKind::Sub).latency = 1;
  Fixture f("kernel s { array a[8]: f32 inout; array b[8]: f32 in;"
            " loop i 0 4 { S: a[0] = ((a[0] - b[i]) - b[i]) - b[i]; } }",
            cal);
  auto r = f.sim(default_config(f.k));
  EXPECT_EQ(r.computation, 12);
  KernelModel m(f.k, f.a, f.cal);
  EXPECT_EQ(program_bound(m, default_config(f.k)).computation, 12);
}

TEST(Oracle, PipelinedLoopIssuesEveryII) {
  // distance-3 recurrence through an add of latency 5: II = 2, depth 5
  Fixture f("kernel p { array a[16]: f32 inout; array b[16]: f32 in;"
            " loop i 3 13 { S: a[i] = a[i - 3] + b[i]; } }",
            add_latency(5));
  ASSERT_EQ(f.a.min_ii[0], 2);
  auto c = default_config(f.k);
  c.loops["i"].pip = true;
  EXPECT_EQ(f.sim(c).computation, 23);
  KernelModel m(f.k, f.a, f.cal);
  EXPECT_EQ(program_bound(m, c).computation, 23);
}

TEST(Oracle, IndependentSiblingsOverlap) {
  Fixture f("kernel s { array a[8]: f32 inout; array b[8]: f32 inout;"
            " S0: a[0] = a[1] + a[2]; S1: b[0] = b[1] + b[2]; }",
            add_latency(5));
  EXPECT_EQ(f.sim(default_config(f.k)).computation, 5);
  // one adder, busy for the whole latency of each add
  EXPECT_EQ(f.sim(default_config(f.k), ResourceLimits::uniform(1)).computation, 10);
}

TEST(Oracle, ParallelChunksRunSideBySide) {
  Fixture f("kernel c { array a[4][4]: f32 inout;"
            " loop i 0 4 { loop j 0 4 { S: a[i][j] = a[i][j] + 1; } } }",
            add_latency(5));
  auto c = default_config(f.k);
  EXPECT_EQ(f.sim(c).computation, 80);
  c.loops["i"].uf = 2;
  EXPECT_EQ(f.sim(c).computation, 40);
  c.loops["j"].uf = 4;
  EXPECT_EQ(f.sim(c).computation, 10);
}

TEST(Oracle, TransfersMatchFootprints) {
  auto k = load_kernel("gemm_small.k");
  CalibrationTable cal;
  auto a = analyze(k, cal);
  auto c = default_config(k);
  auto r = simulate_config(k, a, c, {}, cal);
  // C is read and written: 32 cells of 32 bits, two bursts each way
  EXPECT_EQ(r.communication, 4);
  c.cache.insert({"j", "A"});
  c.cache.insert({"j", "B"});
  c.cache.insert({"j", "C"});
  // per execution of j: B whole (24 cells, 2 bursts) or C row in and out
  EXPECT_EQ(simulate_config(k, a, c, {}, cal).communication, 8 * 2);
  c.cache = {{"i", "A"}, {"i", "B"}, {"i", "C"}};
  // one execution of i: A has 48 cells, 3 bursts; C 2 bursts each way
  EXPECT_EQ(simulate_config(k, a, c, {}, cal).communication, 4);
}

TEST(Oracle, SizeCapIsReported) {
  auto k = load_kernel("2mm.k");
  CalibrationTable cal;
  auto a = analyze(k, cal);
  EXPECT_THROW(simulate_config(k, a, default_config(k), {}, cal), Error);
}

namespace {

PragmaConfig random_config(const KernelModel &m, std::mt19937 &rng) {
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto c = default_config(m.kernel());
  const auto &k = m.kernel();
  for (const auto &l : m.loops()) {
    auto &p = c.loops[l.id];
    p.uf = l.uf_domain[pick(l.uf_domain.size())];
    p.pip = pick(3) == 0;
  }
  // unroll fully under a pipelined loop, one pipeline per nest
  for (std::size_t l = 0; l < k.loops.size(); ++l) {
    if (!c.pip(k.loops[l].id))
      continue;
    for (auto a : k.loops_above(l))
      if (c.pip(k.loops[a].id))
        c.loops[k.loops[l].id].pip = false;
  }
  for (std::size_t l = 0; l < k.loops.size(); ++l)
    for (auto a : k.loops_above(l))
      if (c.pip(k.loops[a].id))
        c.loops[k.loops[l].id].uf = m.loop(l).tc;
  for (const auto &cp : m.cache_pairs())
    if (pick(4) == 0)
      c.cache.insert(cp);
  return c;
}

} // namespace

TEST(Oracle, BoundNeverExceedsSimulation) {
  int checked = 0;
  for (unsigned seed = 1; seed <= 400; ++seed) {
    testing_support::LoopNestGen gen(seed);
    auto src = gen.program();
    KernelIR k;
    CalibrationTable cal;
    Analysis a;
    try {
      k = parse_kernel(src);
      a = analyze(k, cal);
      KernelModel probe(k, a, cal);
    } catch (const Error &) {
      continue; // out-of-bounds or dead code
    }
    for (auto res : {ResourceLimits::unbounded(), ResourceLimits::uniform(2)}) {
      ModelOptions opt;
      opt.resources = res;
      KernelModel m(k, a, cal, opt);
      auto cs = build_constraints(m);
      std::mt19937 rng(seed);
      for (int t = 0; t < 6; ++t) {
        auto c = t == 0 ? default_config(k) : random_config(m, rng);
        if (!check_constraints(m, cs, c, true).empty())
          continue;
        BoundReport b;
        SimulationResult s;
        try {
          b = program_bound(m, c);
          s = simulate_config(k, a, c, res, cal);
        } catch (const GraphError &) {
          continue; // dead code exposed by unrolling, or over the size cap
        }
        ASSERT_LE(b.computation, s.computation)
            << "seed " << seed << "\n" << src << "\n" << config_to_json(k, c).dump();
        ASSERT_LE(b.communication, s.communication)
            << "seed " << seed << "\n" << src << "\n" << config_to_json(k, c).dump();
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 300);
}
