// SPDX-License-Identifier: Apache-2.0
#include "hlsbound/analysis.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hlsbound;
using testing_support::load_kernel;

TEST(TripCounts, Rectangular) {
  auto t = trip_counts(load_kernel("2mm.k"));
  EXPECT_EQ(t[0].tc_min, 180);
  EXPECT_EQ(t[0].tc_max, 180);
  EXPECT_EQ(t[0].tc_avg, Rational(180));
  EXPECT_EQ(t[0].divisors_of_tc_max.size(), 18u);
  EXPECT_EQ(t[0].divisors_of_tc_max.front(), 1);
  EXPECT_EQ(t[0].divisors_of_tc_max.back(), 180);
}

TEST(TripCounts, Triangular) {
  auto k = parse_kernel("kernel t { array a[4][4]: f32 out; "
                        "loop i 0 4 { loop j 0 i { S: a[i][j] = 1; } } }");
  auto t = trip_counts(k);
  EXPECT_EQ(t[1].tc_min, 0);
  EXPECT_EQ(t[1].tc_max, 3);
  EXPECT_EQ(t[1].tc_avg, Rational(3, 2));
}

TEST(TripCounts, EmptyRange) {
  auto k = parse_kernel("kernel t { array a[8]: f32 out; loop i 5 5 { S: a[i] = 1; } }");
  auto t = trip_counts(k);
  EXPECT_EQ(t[0].tc_max, 0);
  EXPECT_EQ(t[0].tc_avg, Rational(0));
  EXPECT_TRUE(dependences(k).empty());
}

namespace {

std::vector<Dependence> carried_at(const std::vector<Dependence> &ds, std::size_t loop) {
  std::vector<Dependence> out;
  for (const auto &d : ds)
    if (d.carrier == loop)
      out.push_back(d);
  return out;
}

} // namespace

TEST(Dependences, DistanceTwoRecurrence) {
  auto k = parse_kernel("kernel t { array y[64]: f32 inout; "
                        "loop j 2 64 { S: y[j] = y[j-2] + 3; } }");
  auto ds = dependences(k);
  bool found = false;
  for (const auto &d : ds)
    if (d.kind == DepKind::RaW && d.carrier == 0u) {
      EXPECT_EQ(d.distance, 2);
      EXPECT_EQ(d.src_stmt, 0u);
      EXPECT_EQ(d.dst_stmt, 0u);
      found = true;
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(min_II(k, 0, ds, CalibrationTable{}), 3);
}

TEST(Dependences, ScalarAccumulation) {
  auto k = parse_kernel("kernel t { array a[8]: f32 in; scalar c: f32 inout; "
                        "loop i 0 8 { S: c += a[i]; } }");
  auto ds = dependences(k);
  auto c = carried_at(ds, 0);
  ASSERT_FALSE(c.empty());
  for (const auto &d : c)
    EXPECT_EQ(d.distance, 1);
  auto r = reductions(k, ds);
  EXPECT_TRUE(r[0].is_reduction);
  EXPECT_EQ(r[0].reduction_op, OpKind::Add);
}

TEST(Dependences, ElementwiseHasNoCarried) {
  auto k = parse_kernel("kernel t { array a[8]: f32 out; array b[8]: f32 in; "
                        "array c[8]: f32 in; loop i 0 8 { S: a[i] = b[i]*c[i]; } }");
  EXPECT_TRUE(carried_at(dependences(k), 0).empty());
  auto a = analyze(k);
  EXPECT_EQ(a.min_ii[0], 1);
}

TEST(Dependences, CoupledSubscriptIsNonUniform) {
  auto k = parse_kernel("kernel t { array a[16]: f32 inout; "
                        "loop i 0 4 { loop j 0 4 { S: a[i+j] = a[i+j] + 1; } } }");
  auto ds = dependences(k);
  auto c = carried_at(ds, 0);
  ASSERT_FALSE(c.empty());
  EXPECT_FALSE(c[0].distance.has_value());
  EXPECT_EQ(c[0].effective_distance(), 1);
}

TEST(Reductions, Atax) {
  auto k = load_kernel("atax.k");
  auto a = analyze(k);
  // i0, i1, j0, j1
  EXPECT_FALSE(a.reductions[0].is_reduction);
  EXPECT_TRUE(a.reductions[1].is_reduction);
  EXPECT_TRUE(a.reductions[2].is_reduction);
  EXPECT_EQ(a.reductions[2].reduction_op, OpKind::Add);
  EXPECT_FALSE(a.reductions[3].is_reduction);
  EXPECT_EQ(a.min_ii[0], 1);
  EXPECT_EQ(a.min_ii[2], 5);
}

TEST(Reductions, DivisionIsNotAssociative) {
  auto k = parse_kernel("kernel t { array a[8]: f32 in; scalar c: f32 inout; "
                        "loop i 0 8 { S: c = c / a[i]; } }");
  auto r = reductions(k, dependences(k));
  EXPECT_FALSE(r[0].is_reduction);
}

TEST(MinII, ReductionUsesOpLatency) {
  auto k = parse_kernel("kernel t { array a[8]: f32 in; scalar c: f32 inout; "
                        "loop i 0 8 { S: c += a[i]; } }");
  CalibrationTable cal;
  cal.cost(OpKind::Add).latency = 4;
  EXPECT_EQ(min_II(k, 0, dependences(k), cal), 4);
  EXPECT_EQ(reductions(k, dependences(k), cal)[0].il_reduction, 4);
}

TEST(MinII, CrossStatementCycle) {
  auto k = parse_kernel("kernel t { array y[64]: f32 inout; scalar t: f32 inout; "
                        "loop i 1 64 { S1: t = y[i-1] * 2; S2: y[i] = t + 1; } }");
  // mul (4) then add (5) around a distance-1 cycle
  EXPECT_EQ(min_II(k, 0, dependences(k), CalibrationTable{}), 9);
}

TEST(MinII, Monotone) {
  auto src = [](int d) {
    return "kernel t { array y[64]: f32 inout; loop j 4 64 { S: y[j] = y[j-" +
           std::to_string(d) + "] + 3; } }";
  };
  CalibrationTable lo, hi;
  hi.cost(OpKind::Add).latency = 9;
  Cycles prev = 1 << 20;
  for (int d = 1; d <= 4; ++d) {
    auto k = parse_kernel(src(d));
    auto ds = dependences(k);
    auto a = min_II(k, 0, ds, lo);
    EXPECT_LE(a, min_II(k, 0, ds, hi));
    EXPECT_LE(a, prev);
    prev = a;
  }
}

TEST(Footprints, AtaxTopLevel) {
  auto k = load_kernel("atax.k");
  auto f = footprints(k);
  auto find = [&](const std::string &arr, std::optional<std::size_t> l) {
    for (const auto &x : f)
      if (x.array == arr && x.loop == l)
        return x;
    ADD_FAILURE() << arr;
    return FootprintInfo{};
  };
  auto a = find("A", std::nullopt);
  EXPECT_EQ(a.footprint_elems, 1900 * 2100);
  EXPECT_TRUE(a.read_flag);
  EXPECT_FALSE(a.write_flag);
  auto y = find("y", std::nullopt);
  EXPECT_FALSE(y.read_flag); // S0 initializes y before use
  EXPECT_TRUE(y.write_flag);
  auto y1 = find("y", 1u);
  EXPECT_TRUE(y1.read_flag);
  EXPECT_EQ(find("A", 3u).footprint_elems, 2100);
}

TEST(Footprints, InoutArrayOf2mm) {
  auto k = load_kernel("2mm.k");
  auto f = footprints(k);
  for (const auto &x : f)
    if (x.array == "D" && !x.loop) {
      EXPECT_TRUE(x.read_flag);
      EXPECT_TRUE(x.write_flag);
      EXPECT_EQ(x.transfer_count(), 2);
    }
}

TEST(Footprints, ScalarOnlyIsEmpty) {
  auto k = parse_kernel("kernel t { scalar c: f32 inout; loop i 0 8 { S: c += 1; } }");
  EXPECT_TRUE(footprints(k).empty());
}

TEST(Footprints, OuterDominatesInner) {
  for (const char *name : {"2mm.k", "atax.k", "bicg.k", "gemm_small.k"}) {
    auto k = load_kernel(name);
    auto f = footprints(k);
    for (const auto &inner : f)
      for (const auto &outer : f) {
        if (inner.array != outer.array || !inner.loop)
          continue;
        bool encloses = !outer.loop || (outer.loop && k.is_nested_in(*inner.loop, *outer.loop));
        if (encloses)
          EXPECT_GE(outer.footprint_elems, inner.footprint_elems) << name << " " << inner.array;
      }
    for (const auto &x : f)
      EXPECT_LE(x.footprint_elems, k.find_array(x.array)->elements());
  }
}
