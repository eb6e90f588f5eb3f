// SPDX-License-Identifier: Apache-2.0
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hlsbound;
using testing_support::load_kernel;

TEST(KernelIr, Parses2mm) {
  auto k = load_kernel("2mm.k");
  EXPECT_EQ(k.name, "k2mm");
  ASSERT_EQ(k.loops.size(), 6u);
  ASSERT_EQ(k.statements.size(), 4u);
  EXPECT_EQ(k.loops[0].id, "i1");
  EXPECT_EQ(k.loops[0].upper.constant, 180);
  EXPECT_EQ(k.loops[2].depth, 2u);
  EXPECT_EQ(summarize(k), "Loop_i1(Loop_j1(S0, Loop_k1(S1))), Loop_i2(Loop_j2(S2, Loop_k2(S3)))");
}

TEST(KernelIr, SummaryJoinsStraightLineStatements) {
  auto k = parse_kernel(R"(kernel t {
    array a[4]: f32 inout; array b[4]: f32 inout; array c[4]: f32 inout;
    loop i 0 4 {
      loop j1 0 4 { S1: a[j1] = 1; }
      loop j2 0 4 { S2: b[j2] = 2; S3: c[j2] = 3; }
    }
  })");
  EXPECT_EQ(summarize(k), "Loop_i(Loop_j1(S1), Loop_j2(S2,S3))");
}

TEST(KernelIr, AtaxStructureAndOps) {
  auto k = load_kernel("atax.k");
  EXPECT_EQ(summarize(k), "Loop_i0(S0), Loop_i1(S1, Loop_j0(S2), Loop_j1(S3))");
  const auto &s2 = k.statements[2];
  EXPECT_TRUE(s2.is_accumulation());
  EXPECT_EQ(s2.ops, (std::vector<OpKind>{OpKind::Mul, OpKind::Add}));
  ASSERT_EQ(s2.reads.size(), 3u);
  EXPECT_EQ(s2.reads[0].str(), "t[i1]");
  EXPECT_EQ(k.statements[3].loops, (std::vector<std::size_t>{1, 3}));
}

TEST(KernelIr, ScalarsAndParams) {
  auto k = parse_kernel(R"(kernel r {
    array a[8]: f32 in; scalar c: f32 inout;
    loop i 0 8 { S: c += a[i] * alpha; }
  })");
  const auto &s = k.statements[0];
  EXPECT_TRUE(s.lhs.subscripts.empty());
  EXPECT_TRUE(k.find_array("c")->is_scalar());
  EXPECT_EQ(s.rhs.operands[1].kind, ValueExpr::Kind::Param);
}

TEST(KernelIr, JsonIsCanonical) {
  auto k = load_kernel("bicg.k");
  auto a = to_json(k).dump();
  auto b = to_json(load_kernel("bicg.k")).dump();
  EXPECT_EQ(a, b);
  auto j = to_json(k);
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["root"][1]["body"][1]["loop"], "j");
}

TEST(KernelIr, OptionTreeReduction) {
  auto k = parse_kernel("kernel t { option tree_reduction off; array a[2]: f32 out; "
                        "loop i 0 2 { S: a[i] = 1; } }");
  EXPECT_FALSE(k.options.tree_reduction);
}

namespace {

void expect_parse_error(const std::string &src, const std::string &fragment) {
  try {
    parse_kernel(src);
    FAIL() << "expected ParseError for: " << src;
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    EXPECT_GE(e.line(), 1u);
  }
}

} // namespace

TEST(KernelIr, RejectsUnsupportedConstructs) {
  expect_parse_error("kernel t { array a[4]: f32 out; loop i 0 4 { if (i) { S: a[i] = 1; } } }",
                     "conditional");
  expect_parse_error("kernel t { array a[4]: f32 out; while (1) { } }", "while");
  expect_parse_error("kernel t { loop i 0 4 { S: b[i] = 1; } }", "undeclared array 'b'");
  expect_parse_error("kernel t { array a[16]: f32 out; loop i 0 4 { S: a[i*i] = 1; } }",
                     "non-affine");
  expect_parse_error("kernel t { array a[4]: f32 out; loop i 0 4 step -1 { S: a[i] = 1; } }",
                     "negative stride");
  expect_parse_error("kernel t { array a[4]: f32 out; loop i 0 4 { S: a[i] = 1; S: a[i] = 2; } }",
                     "duplicate statement");
  expect_parse_error("kernel t { array a[4]: f32 out; loop i 0 n { S: a[i] = 1; } }",
                     "non-affine");
}

TEST(KernelIr, ErrorPositions) {
  try {
    parse_kernel("kernel t {\n  loop i 0 4 {\n    S: zz[i] = 1;\n  }\n}");
    FAIL();
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.column(), 8u);
  }
}
