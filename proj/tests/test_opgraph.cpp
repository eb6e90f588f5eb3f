// SPDX-License-Identifier: Apache-2.0
#include "hlsbound/analysis.hpp"
#include "hlsbound/scheduler.hpp"
#include "random_kernels.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hlsbound;
using testing_support::load_kernel;

namespace {

CalibrationTable unit_latency() {
  CalibrationTable cal;
  for (auto k : kAllOpKinds)
    cal.cost(k).latency = 1;
  return cal;
}

std::vector<NodeRef> top_statements(const KernelIR &k) { return k.root; }

const char *kReduce8 = "kernel t { array a[8]: f32 in; scalar c: f32 inout; "
                       "loop i 0 8 { S: c += a[i]; } }";

} // namespace

TEST(OpGraph, SingleMultiply) {
  auto k = parse_kernel("kernel t { scalar a: f32 out; scalar b: f32 in; scalar c: f32 in; "
                        "S: a = b * c; }");
  auto g = build_graph(k, top_statements(k));
  EXPECT_EQ(g.num_ops(), 1u);
  EXPECT_EQ(g.live_in().size(), 2u);
  EXPECT_EQ(g.live_out().size(), 1u);
  EXPECT_EQ(g.nodes[g.live_out()[0]].label, "a");
}

TEST(OpGraph, DeadWriteIsRejected) {
  auto k = parse_kernel("kernel t { scalar x: f32 out; scalar y: f32 in; scalar z: f32 in; "
                        "S1: x = 12 + y; S2: x = y + z; }");
  EXPECT_THROW(build_graph(k, top_statements(k)), GraphError);
}

TEST(OpGraph, LoopInRegionIsRejected) {
  auto k = parse_kernel(kReduce8);
  EXPECT_THROW(build_graph(k, k.root), GraphError);
}

TEST(OpGraph, ZeroInputOpHangsFromRoot) {
  auto k = parse_kernel("kernel t { scalar x: f32 out; S: x = 1 + 2; }");
  auto g = build_graph(k, k.root);
  ASSERT_EQ(g.num_ops(), 1u);
  for (const auto &n : g.nodes)
    if (n.is_op())
      EXPECT_EQ(n.preds, std::vector<std::size_t>{OperationGraph::root});
}

TEST(OpGraph, TreeReductionDepth) {
  auto k = parse_kernel(kReduce8);
  auto cal = unit_latency();
  auto tree = build_unrolled_graph(k, k.root, true);
  EXPECT_EQ(critical_path(tree, cal), 3);
  EXPECT_EQ(tree.op_counts.at(OpKind::Add), 8);
  auto serial = build_unrolled_graph(k, k.root, false);
  EXPECT_EQ(critical_path(serial, cal), 8);
  auto rb = region_bound(tree, ResourceLimits::uniform(1), cal);
  EXPECT_EQ(rb.weighted_cp, 3);
  EXPECT_EQ(rb.bound, 8);
}

TEST(OpGraph, MulChain) {
  auto k = parse_kernel("kernel t { scalar x: f32 inout; S1: x = x / 3; S2: x = x / 3; "
                        "S3: x = x / 3; }");
  CalibrationTable cal;
  cal.cost(OpKind::Div).latency = 4;
  EXPECT_EQ(critical_path(build_graph(k, k.root), cal), 12);
}

TEST(OpGraph, BicgUnrolledBody) {
  auto k = load_kernel("bicg.k");
  auto cal = unit_latency();
  // body of loop j, fully unrolled for one i1 iteration
  auto g = build_unrolled_graph(k, {{NodeRef::Kind::Loop, 2}}, true);
  EXPECT_EQ(critical_path(g, cal), 4);
}

TEST(OpGraph, IndependentMultiplies) {
  auto k = parse_kernel("kernel t { array a[8]: f32 out; array b[8]: f32 in; "
                        "loop i 0 8 { S: a[i] = b[i] * 3; } }");
  CalibrationTable cal;
  cal.cost(OpKind::Mul).latency = 4;
  auto g = build_unrolled_graph(k, k.root);
  ResourceLimits two;
  two.units[OpKind::Mul] = 2;
  EXPECT_EQ(region_bound(g, two, cal).bound, 16);
  EXPECT_EQ(region_bound(g, ResourceLimits::unbounded(), cal).bound, 4);
  EXPECT_EQ(list_schedule(g, two, cal).makespan, 16);
  ResourceLimits none;
  none.units[OpKind::Mul] = 0;
  EXPECT_THROW(region_bound(g, none, cal), ConfigError);
}

TEST(Scheduler, TreeAndChain) {
  auto cal = unit_latency();
  auto k = parse_kernel(kReduce8);
  EXPECT_EQ(list_schedule(build_unrolled_graph(k, k.root, true), {}, cal).makespan, 3);
  auto chain = parse_kernel("kernel t { scalar x: f32 inout; S1: x = x - 1; S2: x = x - 1; "
                            "S3: x = x - 1; S4: x = x - 1; }");
  auto g = build_graph(chain, chain.root);
  EXPECT_EQ(list_schedule(g, ResourceLimits::uniform(1), cal).makespan, 4);
  EXPECT_EQ(list_schedule(g, ResourceLimits::uniform(7), cal).makespan, 4);
}

TEST(Scheduler, SizeCap) {
  auto k = parse_kernel(kReduce8);
  SchedulePolicy p;
  p.max_ops = 4;
  EXPECT_THROW(list_schedule(build_unrolled_graph(k, k.root), {}, {}, p), Error);
}

TEST(OpGraph, RandomRegionsAreSoundAgainstScheduler) {
  testing_support::StraightLineGen gen(20261016);
  CalibrationTable cal;
  int checked = 0;
  for (int attempt = 0; checked < 150 && attempt < 5000; ++attempt) {
    auto k = parse_kernel(gen.program(1 + attempt % 12));
    OperationGraph g;
    try {
      g = build_graph(k, k.root, attempt % 2 == 0);
    } catch (const GraphError &) {
      continue; // useless operation
    }
    if (g.num_ops() == 0 || g.num_ops() > 64)
      continue;
    for (auto res : {ResourceLimits::unbounded(), ResourceLimits::uniform(1),
                     ResourceLimits::uniform(2), ResourceLimits::uniform(3)}) {
      auto rb = region_bound(g, res, cal);
      auto s = list_schedule(g, res, cal);
      EXPECT_LE(rb.bound, s.makespan) << to_dot(g);
      EXPECT_EQ(rb.bound, std::max(rb.weighted_cp, rb.work_bound));
      EXPECT_GE(rb.bound, 1);
    }
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(OpGraph, Monotonicity) {
  testing_support::StraightLineGen gen(7);
  CalibrationTable cal;
  int checked = 0;
  for (int attempt = 0; checked < 50 && attempt < 2000; ++attempt) {
    auto src = gen.program(6);
    auto k = parse_kernel(src);
    OperationGraph g;
    try {
      g = build_graph(k, k.root);
    } catch (const GraphError &) {
      continue;
    }
    for (std::int64_t r = 1; r < 5; ++r)
      EXPECT_LE(region_bound(g, ResourceLimits::uniform(r + 1), cal).bound,
                region_bound(g, ResourceLimits::uniform(r), cal).bound);
    // appending an op that reads a fresh cell cannot shrink the bound
    auto more = src.substr(0, src.size() - 1) + " Sx: d[7] = d[7] + 1; }";
    try {
      auto g2 = build_graph(parse_kernel(more), parse_kernel(more).root);
      for (std::int64_t r : {1, 2})
        EXPECT_GE(region_bound(g2, ResourceLimits::uniform(r), cal).bound,
                  region_bound(g, ResourceLimits::uniform(r), cal).bound);
    } catch (const GraphError &) {
    }
    ++checked;
  }
  EXPECT_GE(checked, 30);
}

TEST(OpGraph, UnrollComposition) {
  CalibrationTable cal;
  for (const char *name : {"bicg.k", "gemm_small.k"}) {
    auto k = load_kernel(name);
    CompiledKernel ck(k);
    for (std::size_t l = 0; l < k.loops.size(); ++l) {
      const auto trip = trip_counts(k)[l];
      Cycles prev = 0;
      for (std::int64_t uf = 1; uf <= trip.tc_max; ++uf) {
        if (trip.tc_max % uf)
          continue;
        GraphBuilder b(ck, true);
        IterEnv env(k.loops.size(), 0);
        for (auto o : k.loops_above(l))
          env[o] = ck.lower(o, env);
        for (std::int64_t it = 0; it < uf; ++it) {
          env[l] = ck.lower(l, env) + it;
          b.add_nodes(k.loops[l].body, env);
        }
        auto rb = region_bound(b.finish(), ResourceLimits::uniform(2), cal).bound;
        EXPECT_GE(rb, prev) << name << " loop " << k.loops[l].id << " uf " << uf;
        prev = rb;
      }
    }
  }
}
