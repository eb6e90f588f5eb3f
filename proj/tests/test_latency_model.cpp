// SPDX-License-Identifier: Apache-2.0
#include "hlsbound/latency_model.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hlsbound;
using testing_support::load_kernel;

namespace {

CalibrationTable unit_latencies() {
  CalibrationTable cal;
  for (auto k : kAllOpKinds)
    cal.cost(k).latency = 1;
  return cal;
}

struct Built {
  KernelIR k;
  CalibrationTable cal;
  Analysis a;
  std::unique_ptr<KernelModel> m;
  explicit Built(const std::string &src, CalibrationTable c = {}, ModelOptions opt = {})
      : k(parse_kernel(src)), cal(c), a(analyze(k, cal)),
        m(std::make_unique<KernelModel>(k, a, cal, opt)) {}
};

} // namespace

TEST(ApplyI, Examples) {
  EXPECT_EQ(apply_I({100, 1, true, 1}, 5), 104);
  EXPECT_EQ(apply_I({8, 4, false, 1}, 2), 4);
  EXPECT_EQ(apply_I({8, 4, true, 1}, 6), 7);
  EXPECT_EQ(apply_I({0, 1, true, 1}, 6), 0);
  EXPECT_THROW(apply_I({8, 0, false, 1}, 2), ConfigError);
}

TEST(ComposeC, DependentSumIndependentMax) {
  EXPECT_EQ(compose_C({7, 5}, {{0, 1}}), 12);
  EXPECT_EQ(compose_C({7, 5}, {}), 7);
  EXPECT_EQ(compose_C({9}, {}), 9);
  EXPECT_EQ(compose_C({}, {}), 0);
  // chain 0 -> 2 beside an independent 1
  EXPECT_EQ(compose_C({3, 10, 4}, {{0, 2}}), 10);
  EXPECT_EQ(compose_C({3, 10, 8}, {{0, 2}}), 11);
}

TEST(ComposeC, StatementListsFromKernels) {
  auto cal = unit_latencies();
  Built dep("kernel d { array x1[1]: f32 inout; array x2[1]: f32 inout; array y[1]: f32 in;"
            " array z[1]: f32 in; loop i 0 1 { S0: x1[0] += y[0]; S1: x2[0] += x1[0] * z[0]; } }",
            cal);
  // S0: one add; S1: a mul feeding the accumulation
  EXPECT_EQ(dep.m->statement_term(0), 1);
  EXPECT_EQ(dep.m->statement_term(1), 2);
  Built ind("kernel d { array x1[1]: f32 inout; array x2[1]: f32 inout; array y[1]: f32 in;"
            " array z[1]: f32 in; S0: x1[0] += y[0]; S1: x2[0] += z[0] * z[0]; }",
            cal);
  EXPECT_EQ(program_bound(*ind.m, default_config(ind.k)).computation, 2);
  Built chain("kernel d { array x1[1]: f32 inout; array x2[1]: f32 inout; array y[1]: f32 in;"
              " array z[1]: f32 in; S0: x1[0] += y[0]; S1: x2[0] += x1[0] * z[0]; }",
              cal);
  EXPECT_EQ(program_bound(*chain.m, default_config(chain.k)).computation, 1 + 2);
}

TEST(Sequential, Examples) {
  EXPECT_EQ(lat_sequential(0, 7), 0);
  EXPECT_EQ(lat_sequential(1, 7), 7);
  EXPECT_EQ(lat_sequential(210, 5), 1050);
}

TEST(ReductionUnroll, Examples) {
  EXPECT_EQ(lat_reduction_unroll(8, 8, 1), 3);
  EXPECT_EQ(lat_reduction_unroll(8, 1, 1), 8);
  EXPECT_EQ(lat_reduction_unroll(8, 4, 1), 4);
  EXPECT_EQ(lat_reduction_unroll(8, 8, 1, false), 8);
  EXPECT_THROW(lat_reduction_unroll(8, 0, 1), ConfigError);
}

TEST(CoarseGrained, Examples) {
  EXPECT_EQ(lat_coarse_grained(8, 4, 10, false), 20);
  EXPECT_EQ(lat_coarse_grained(8, 1, 10, false), 80);
  EXPECT_THROW(lat_coarse_grained(8, 4, 10, true), ConfigError);
}

TEST(FullUnroll, TreeReductionOfEight) {
  auto k = parse_kernel("kernel r { array s[1]: f32 inout; array v[8]: f32 in;"
                        " loop i 0 8 { S: s[0] += v[i]; } }");
  auto cal = unit_latencies();
  auto r = lat_full_unroll(k, k.root, ResourceLimits::unbounded(), cal);
  EXPECT_EQ(r.cycles, 3);
  EXPECT_TRUE(r.expanded);
}

TEST(FullUnroll, SingleIterationIsBody) {
  auto k = parse_kernel("kernel r { array a[4]: f32 inout; array b[4]: f32 in;"
                        " loop i 0 1 { S: a[i] = (b[i] * b[i]) + b[1]; } }");
  CalibrationTable cal;
  auto r = lat_full_unroll(k, k.root, ResourceLimits::unbounded(), cal);
  EXPECT_EQ(r.cycles, cal.latency(OpKind::Mul) + cal.latency(OpKind::Add));
}

TEST(FullUnroll, BicgInnerLoopIsMaxOfCriticalPaths) {
  CalibrationTable cal;
  const auto add = cal.latency(OpKind::Add), mul = cal.latency(OpKind::Mul);
  for (int n : {4, 8, 16}) {
    auto N = std::to_string(n);
    auto k = parse_kernel("kernel b { array A[" + N + "][" + N + "]: f32 in; array s[" + N +
                          "]: f32 inout; array q[" + N + "]: f32 inout; array p[" + N +
                          "]: f32 in; array r[" + N + "]: f32 in;"
                          " loop i 0 " + N + " { loop j 0 " + N +
                          " { S2: s[j] += r[i] * A[i][j]; S3: q[i] += A[i][j] * p[j]; } } }");
    auto j = k.loops[1].body;
    // unroll j under a fixed i
    auto b = lat_full_unroll(k, {NodeRef{NodeRef::Kind::Loop, 1}}, ResourceLimits::unbounded(),
                             cal);
    (void)j;
    Cycles log2n = std::bit_width(static_cast<unsigned>(n)) - 1;
    EXPECT_EQ(b.cycles, std::max(add + mul, add * log2n + mul)) << "N = " << n;
  }
}

TEST(FullUnroll, FallbackPastCap) {
  auto k = parse_kernel("kernel r { array a[64]: f32 inout; array b[64]: f32 in;"
                        " loop i 0 64 { S: a[i] = b[i] + b[i]; } }");
  CalibrationTable cal;
  ResourceLimits res;
  res.units[OpKind::Add] = 2;
  auto r = lat_full_unroll(k, k.root, res, cal, 10);
  EXPECT_FALSE(r.expanded);
  EXPECT_EQ(r.cycles, 64 * cal.latency(OpKind::Add) / 2);
  EXPECT_FALSE(r.note.empty());
}

TEST(MemoryBound, InoutCostsTwiceReadOnly) {
  EXPECT_EQ(memory_bound({{"top", 1024, 1}}), 2);
  EXPECT_EQ(memory_bound({{"top", 1024, 2}}), 4);
  EXPECT_EQ(memory_bound({{"top", 1024, 1}, {"top", 2048, 1}}), 4);
  EXPECT_EQ(memory_bound({{"i", 1024, 1}, {"top", 2048, 1}}), 6);
  EXPECT_EQ(memory_bound({{"top", 1, 1}}), 1);
}

TEST(MemoryModel, InoutAndLevels) {
  Built in("kernel m { array a[32]: f32 in; array b[32]: f32 out;"
           " loop i 0 32 { S: b[i] = a[i] + a[i]; } }");
  Built io("kernel m { array a[32]: f32 in; array b[32]: f32 inout;"
           " loop i 0 32 { S: b[i] = a[i] + b[i]; } }");
  // 32 x 32 bits: two bursts each way
  EXPECT_EQ(program_bound(*in.m, default_config(in.k)).communication, 2);
  EXPECT_EQ(program_bound(*io.m, default_config(io.k)).communication, 4);

  Built nest("kernel m { array a[4][32]: f32 in; array b[4][32]: f32 inout;"
             " loop i 0 4 { loop j 0 32 { S: b[i][j] += a[i][j]; } } }");
  auto c = default_config(nest.k);
  // uncached: b moves 128 cells in and out
  EXPECT_EQ(program_bound(*nest.m, c).communication, 16);
  c.cache = {{"i", "a"}, {"i", "b"}};
  EXPECT_EQ(program_bound(*nest.m, c).communication, 16);
  c.cache = {{"j", "a"}, {"i", "b"}};
  // one row of a at j (2 bursts) plus all of b at i (16)
  EXPECT_EQ(program_bound(*nest.m, c).communication, 2 + 16);
  c.cache = {{"j", "a"}, {"j", "b"}};
  EXPECT_EQ(program_bound(*nest.m, c).communication, 4);
  c.cache = {{"j", "a"}};
  EXPECT_EQ(program_bound(*nest.m, c).communication, 2 + 16);
}

TEST(ProgramBound, TwoMmPipelinedInnerNests) {
  auto k = load_kernel("2mm.k");
  CalibrationTable cal;
  auto a = analyze(k, cal);
  KernelModel m(k, a, cal);
  auto c = default_config(k);
  c.loops["j1"].pip = true;
  c.loops["k1"].uf = 210;
  c.loops["j2"].pip = true;
  c.loops["k2"].uf = 190;
  auto r = program_bound(m, c);
  // per i1: II 1 over 190 j1 iterations after a 48-cycle body
  // (S0 then a 210-term reduction tree of mul 4 and add 5 chains)
  EXPECT_EQ(r.computation, 180 * (189 + 48) + 180 * (219 + 44));
  EXPECT_EQ(r.communication, 2 * 2475);
  EXPECT_EQ(r.total, r.computation + r.communication);
  EXPECT_EQ(r.dsp, Rational(1680));
  ASSERT_EQ(r.loops.size(), 6u);
  EXPECT_EQ(r.loops[1].rule, "pipelined");
  EXPECT_EQ(r.loops[2].rule, "inside_pipeline");
  EXPECT_FALSE(r.loops[2].cycles.has_value());
}

TEST(ProgramBound, TwoMmDefaults) {
  auto k = load_kernel("2mm.k");
  CalibrationTable cal;
  auto a = analyze(k, cal);
  KernelModel m(k, a, cal);
  auto r = program_bound(m, default_config(k));
  // every reduction step is a mul chain into an add: S1 13, S3 9, S2 4
  const Cycles nest1 = 180 * 190 * (210 * 13);
  const Cycles nest2 = 180 * 220 * (4 + 190 * 9);
  EXPECT_EQ(r.computation, nest1 + nest2);
}

TEST(ProgramBound, AtaxDefaults) {
  auto k = load_kernel("atax.k");
  CalibrationTable cal;
  auto a = analyze(k, cal);
  KernelModel m(k, a, cal);
  auto r = program_bound(m, default_config(k));
  const Cycles step = cal.latency(OpKind::Mul) + cal.latency(OpKind::Add);
  // i1 carries y; its body chains the two 2100-step reductions through t
  EXPECT_EQ(r.computation, 1900 * (2100 * step + 2100 * step));
  // A dominates the top-level transfers: 1900 * 2100 * 32 / 512 bursts
  EXPECT_EQ(r.communication, 1900 * 2100 / 16);
  EXPECT_EQ(r.total, r.computation + r.communication);
}

TEST(ProgramBound, RejectsStructurallyInvalidConfigs) {
  auto k = load_kernel("2mm.k");
  CalibrationTable cal;
  auto a = analyze(k, cal);
  KernelModel m(k, a, cal);
  auto c = default_config(k);
  c.loops["j1"].pip = true;
  EXPECT_THROW(program_bound(m, c), ConfigError);
  c = default_config(k);
  c.loops["k1"].uf = 4;
  EXPECT_THROW(program_bound(m, c), ConfigError);
}

TEST(ProgramBound, ResourceViolationsAreReported) {
  auto k = load_kernel("2mm.k");
  CalibrationTable cal;
  cal.dsp_available = 10;
  auto a = analyze(k, cal);
  KernelModel m(k, a, cal);
  auto c = default_config(k);
  c.loops["k1"].uf = 210;
  auto r = program_bound(m, c);
  ASSERT_FALSE(r.resource_violations.empty());
  EXPECT_EQ(r.resource_violations.front().tag, "Eq.15");
  auto j = bound_json(r);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["violations"][0]["tag"], "Eq.15");
}
