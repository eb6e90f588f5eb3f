// SPDX-License-Identifier: Apache-2.0
#include "hlsbound/dse.hpp"
#include "hlsbound/parser.hpp"
#include "nlp_support.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <set>

using namespace hlsbound;
using testing_support::load_kernel;

namespace {

struct Fixture {
  KernelIR k;
  CalibrationTable cal;
  Analysis a;
  std::shared_ptr<const KernelModel> m;
  explicit Fixture(KernelIR kernel, CalibrationTable c = {})
      : k(std::move(kernel)), cal(c), a(analyze(k, cal)),
        m(std::make_shared<const KernelModel>(k, a, cal)) {}
};

std::vector<SimRule> rules(const char *text) { return parse_rules(nlohmann::json::parse(text)); }

const char *kCoarseReject =
    R"([{"predicate": {"coarse_parallel": true}, "effect": {"reject": "coarse_parallel"}}])";

DseConfig ladder(const char *text) {
  DseConfig cfg;
  cfg.ladder = parse_ladder(text);
  return cfg;
}

std::string temp_path(const char *tag) {
  return testing::TempDir() + "hlsbound_" + tag + ".json";
}

/// Evaluated steps never repeat a config and the running best never rises.
void check_invariants(const DseReport &r) {
  std::set<std::string> evaluated;
  std::optional<Cycles> prev;
  for (const auto &s : r.steps) {
    bool ran = s.outcome == StepOutcome::Evaluated || s.outcome == StepOutcome::Invalid ||
               s.outcome == StepOutcome::Timeout || s.outcome == StepOutcome::Error;
    if (ran)
      EXPECT_TRUE(evaluated.insert(s.config_hash).second) << "step " << s.index;
    if (s.outcome == StepOutcome::Pruned && s.lower_bound && prev)
      EXPECT_GE(*s.lower_bound, *prev) << "step " << s.index;
    if (prev) {
      ASSERT_TRUE(s.best_latency);
      EXPECT_LE(*s.best_latency, *prev);
    }
    prev = s.best_latency;
  }
  EXPECT_EQ(evaluated.size(), r.evaluations);
  EXPECT_EQ(r.steps.size(), r.ladder.size() * 2);
}

} // namespace

TEST(Ladder, ParsesAndValidates) {
  auto l = parse_ladder("inf,1024,64,1");
  ASSERT_EQ(l.size(), 4u);
  EXPECT_FALSE(l[0]);
  EXPECT_EQ(l[3], LadderValue(1));
  EXPECT_EQ(default_ladder().size(), 11u);
  for (const auto *bad : {"", "1024,2048", "64,inf", "abc", "0", "8,8"})
    EXPECT_THROW(parse_ladder(bad), ConfigError) << bad;
  Fixture s(load_kernel("gemm_small.k"));
  DseConfig cfg;
  cfg.ladder.clear();
  EXPECT_THROW(run_dse(s.m, cfg, ModelEvaluator{}), ConfigError);
}

TEST(Evaluator, EmptyRulesGiveTheModelBound) {
  Fixture s(load_kernel("2mm_small.k"));
  auto p = build_problem(s.m);
  std::mt19937 rng(5);
  for (int n = 0; n < 50; ++n) {
    auto c = testing_support::random_valid_config(p, rng);
    ASSERT_TRUE(c);
    auto e = ModelEvaluator{}.evaluate(*s.m, *c, std::nullopt);
    ASSERT_EQ(e.outcome, Evaluation::Outcome::Ok);
    EXPECT_EQ(e.latency, program_bound(*s.m, *c).total);
    for (const auto &[name, applied] : e.applied)
      EXPECT_TRUE(applied) << name;
  }
}

TEST(Evaluator, CoarseRejectionRecomputesTheBound) {
  Fixture s(load_kernel("2mm_small.k"));
  auto c = default_config(s.k);
  c.loops["i2"].uf = 2;
  c.loops["j2"].pip = true;
  c.loops["k2"].uf = 19;
  c.loops["i1"].uf = 3; // encloses sequential j1, k1
  SimulatedHlsEvaluator ev(rules(kCoarseReject));
  auto e = ev.evaluate(*s.m, c, std::nullopt);
  auto eff = c;
  eff.loops["i2"].uf = 1;
  eff.loops["i1"].uf = 1;
  EXPECT_EQ(e.latency, program_bound(*s.m, eff).total);
  EXPECT_FALSE(e.applied.at("uf_i2"));
  EXPECT_FALSE(e.applied.at("uf_i1"));
  EXPECT_TRUE(e.applied.at("pip_j2"));
  EXPECT_TRUE(e.applied.at("uf_k2"));
  EXPECT_TRUE(e.valid);
}

TEST(Evaluator, TimeoutInflationAndOverUtilization) {
  Fixture s(load_kernel("gemm_small.k"));
  auto c = default_config(s.k);
  c.loops["i"].uf = 8;
  c.loops["j"].uf = 4;
  auto base = program_bound(*s.m, c).total;
  SimulatedHlsEvaluator timeout(rules(R"([{"predicate": {"uf_product_gt": 10}, "effect": {"timeout": true}}])"));
  EXPECT_EQ(timeout.evaluate(*s.m, c, std::nullopt).outcome, Evaluation::Outcome::Timeout);
  c.loops["j"].uf = 1;
  EXPECT_EQ(timeout.evaluate(*s.m, c, std::nullopt).outcome, Evaluation::Outcome::Ok);
  c.loops["j"].uf = 4;

  SimulatedHlsEvaluator slow(rules(R"([{"predicate": {"uf_gt": {"i": 4}}, "effect": {"multiply": 1.5}},
                                       {"effect": {"multiply": 2}}])"));
  EXPECT_EQ(slow.evaluate(*s.m, c, std::nullopt).latency, ceil_of(Rational(base) * Rational(3)));

  SimulatedHlsEvaluator over(rules(R"([{"predicate": {"always": true}, "effect": {"over_utilize": true}}])"));
  auto e = over.evaluate(*s.m, c, std::nullopt);
  EXPECT_EQ(e.outcome, Evaluation::Outcome::Ok);
  EXPECT_FALSE(e.valid);
}

TEST(Evaluator, MalformedRulesAreRejected) {
  for (const auto *bad : {R"({"effect": {}})", R"([{"predicate": {"color": 1}, "effect": {}}])",
                          R"([{"effect": {"reject": "everything"}}])", R"([{"predicate": {}}])",
                          R"([{"effect": {"multiply": -2}}])", R"([{"effect": {"timeout": 3}}])",
                          R"([{"predicate": {"always": false}, "effect": {}}])"})
    EXPECT_THROW(parse_rules(nlohmann::json::parse(bad)), ConfigError) << bad;
}

TEST(Evaluator, CommandTemplate) {
  Fixture s(load_kernel("gemm_small.k"));
  auto c = default_config(s.k);
  CommandEvaluator ok(R"(test -s {config} && echo noise && echo '{"latency": 42, "valid": true, "applied": {"uf_i": false}}')",
                      "gemm_small.k");
  auto e = ok.evaluate(*s.m, c, std::chrono::milliseconds(5000));
  ASSERT_EQ(e.outcome, Evaluation::Outcome::Ok) << e.message;
  EXPECT_EQ(e.latency, 42);
  EXPECT_TRUE(e.valid);
  EXPECT_FALSE(e.applied.at("uf_i"));

  CommandEvaluator slow("sleep 5", "k");
  auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(slow.evaluate(*s.m, c, std::chrono::milliseconds(100)).outcome,
            Evaluation::Outcome::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));

  CommandEvaluator failing("exit 3", "k");
  EXPECT_EQ(failing.evaluate(*s.m, c, std::nullopt).outcome, Evaluation::Outcome::Error);
  CommandEvaluator garbage("echo not-json", "k");
  EXPECT_EQ(garbage.evaluate(*s.m, c, std::nullopt).outcome, Evaluation::Outcome::Error);
  CommandEvaluator tool_timeout(R"(echo '{"timeout": true}')", "k");
  EXPECT_EQ(tool_timeout.evaluate(*s.m, c, std::nullopt).outcome, Evaluation::Outcome::Timeout);
}

TEST(Dse, ModelEvaluatorStopsAtTheFirstDesign) {
  for (const auto *name : {"gemm_small.k", "bicg.k", "2mm_small.k"}) {
    Fixture s(load_kernel(name));
    auto r = run_dse(s.m, ladder("inf,1024,64,1"), ModelEvaluator{});
    ASSERT_TRUE(r.best_step) << name;
    EXPECT_EQ(*r.best_step, 0u) << name;
    EXPECT_EQ(r.evaluations, 1u) << name;
    EXPECT_EQ(r.steps[0].outcome, StepOutcome::Evaluated);
    EXPECT_EQ(r.steps[0].latency, r.steps[0].lower_bound);
    for (std::size_t i = 1; i < r.steps.size(); ++i)
      EXPECT_EQ(r.steps[i].outcome, StepOutcome::Pruned) << name << " step " << i;
    check_invariants(r);
  }
}

TEST(Dse, CoarseRejectionFallsBackToFineGrained) {
  Fixture s(load_kernel("2mm_small.k"));
  auto r = run_dse(s.m, DseConfig{}, SimulatedHlsEvaluator(rules(kCoarseReject)));
  ASSERT_TRUE(r.best_step);
  const auto &best = r.steps[*r.best_step];
  EXPECT_EQ(best.mode, DseMode::Fine);
  EXPECT_EQ(r.steps[0].outcome, StepOutcome::Evaluated);
  EXPECT_GT(*r.steps[0].latency, *r.best_latency);
  bool rejected = false;
  for (const auto &[name, applied] : r.steps[0].applied)
    rejected |= !applied;
  EXPECT_TRUE(rejected);
  // the fine-grained design keeps every loop above the pipeline rolled
  for (std::size_t l = 0; l < s.k.loops.size(); ++l)
    for (auto u : s.k.loops_under(l))
      if (r.best_config->pip(s.k.loops[u].id))
        EXPECT_EQ(r.best_config->uf(s.k.loops[l].id), 1);
  check_invariants(r);
}

TEST(Dse, ContinuesAfterTimeouts) {
  Fixture s(load_kernel("2mm_small.k"));
  auto ev = SimulatedHlsEvaluator(
      rules(R"([{"predicate": {"uf_product_gt": 100000}, "effect": {"timeout": true}}])"));
  auto r = run_dse(s.m, DseConfig{}, ev);
  std::vector<StepOutcome> ran;
  for (const auto &st : r.steps)
    if (st.outcome != StepOutcome::Pruned && st.outcome != StepOutcome::Duplicate &&
        st.outcome != StepOutcome::Infeasible)
      ran.push_back(st.outcome);
  ASSERT_GE(ran.size(), 3u);
  EXPECT_EQ(ran[0], StepOutcome::Timeout);
  EXPECT_EQ(ran[1], StepOutcome::Timeout);
  ASSERT_TRUE(r.best_latency);
  check_invariants(r);
}

TEST(Dse, EvaluatorFailuresAreRecorded) {
  Fixture s(load_kernel("gemm_small.k"));
  auto r = run_dse(s.m, ladder("inf,8,1"), CommandEvaluator("exit 1", "k"));
  EXPECT_FALSE(r.best_latency);
  EXPECT_EQ(r.steps[0].outcome, StepOutcome::Error);
  check_invariants(r);
}

TEST(Dse, ParallelEvaluationsMatchSequential) {
  Fixture s(load_kernel("2mm_small.k"));
  for (const auto *text :
       {"[]", kCoarseReject,
        R"([{"predicate": {"uf_product_gt": 100000}, "effect": {"timeout": true}}])"}) {
    SimulatedHlsEvaluator ev(rules(text));
    DseConfig seq;
    auto a = report_json(run_dse(s.m, seq, ev)).dump();
    for (std::size_t jobs : {2, 3, 8}) {
      DseConfig par;
      par.parallel_evaluations = jobs;
      EXPECT_EQ(report_json(run_dse(s.m, par, ev)).dump(), a) << text << " jobs " << jobs;
    }
  }
}

TEST(Dse, PruningIsSoundUnderTruthfulEvaluators) {
  const char *scenarios[] = {
      "[]",
      kCoarseReject,
      R"([{"predicate": {"uf_product_gt": 20}, "effect": {"multiply": 3}}])",
      R"([{"predicate": {"coarse_parallel": false}, "effect": {"multiply": 2, "reject": "pipeline"}}])",
  };
  for (const auto &[name, src] : testing_support::small_kernels())
    for (const auto *text : scenarios) {
      Fixture s(parse_kernel(src));
      SimulatedHlsEvaluator ev(rules(text));
      auto cfg = ladder("inf,64,16,8,4,2,1");
      auto r = run_dse(s.m, cfg, ev);
      check_invariants(r);
      // every ladder solve, evaluated without any pruning
      std::optional<Cycles> best;
      for (std::size_t i = 0; i < cfg.ladder.size() * 2; ++i) {
        NlpOptions opt;
        opt.fine_grained_only = i % 2 == 1;
        opt.max_partition =
            cfg.ladder[i / 2].value_or(std::numeric_limits<std::int64_t>::max());
        auto sol = solve(build_problem(s.m, opt));
        if (!sol.best_config)
          continue;
        auto e = ev.evaluate(*s.m, *sol.best_config, std::nullopt);
        EXPECT_GE(e.latency, *sol.lower_bound) << name;
        if (e.outcome == Evaluation::Outcome::Ok && e.valid && (!best || e.latency < *best))
          best = e.latency;
      }
      EXPECT_EQ(r.best_latency, best) << name << " " << text;
    }
}

TEST(Report, RoundTripsThroughJson) {
  Fixture s(load_kernel("2mm_small.k"));
  DseConfig cfg;
  cfg.stop_early = false;
  cfg.timeout_hls = std::chrono::milliseconds(60000);
  auto r = run_dse(s.m, cfg, SimulatedHlsEvaluator(rules(kCoarseReject)));
  ASSERT_GE(r.steps.size(), 20u);
  auto path = temp_path("report");
  persist_report(r, path);
  auto back = load_report(path);
  EXPECT_EQ(report_json(back).dump(), report_json(r).dump());
  EXPECT_EQ(back.best_config, r.best_config);
  std::remove(path.c_str());

  DseReport empty;
  persist_report(empty, path);
  EXPECT_EQ(report_json(load_report(path)).dump(), report_json(empty).dump());
  std::remove(path.c_str());
}

TEST(Report, SchemaMismatchAndIoErrors) {
  auto j = report_json(DseReport{});
  j["schema_version"] = 99;
  try {
    report_from_json(nlohmann::json::parse(j.dump()));
    FAIL() << "expected a schema error";
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("schema_version 99"), std::string::npos);
  }
  EXPECT_THROW(load_report("/nonexistent/dir/report.json"), Error);
  EXPECT_THROW(persist_report(DseReport{}, "/nonexistent/dir/report.json"), Error);
}
