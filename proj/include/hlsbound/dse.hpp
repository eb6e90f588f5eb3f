// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/evaluator.hpp"
#include "hlsbound/nlp.hpp"

#include <future>
#include <limits>

namespace hlsbound {

enum class DseMode : std::uint8_t { CoarseFine, Fine };

inline std::string_view mode_name(DseMode m) {
  return m == DseMode::CoarseFine ? "coarse+fine" : "fine";
}

/// Array-partitioning cap of one ladder rung; nullopt is unbounded.
using LadderValue = std::optional<std::int64_t>;

inline std::vector<LadderValue> default_ladder() {
  return {std::nullopt, 2048, 1024, 512, 256, 128, 64, 32, 16, 8, 1};
}

inline std::string ladder_string(const LadderValue &v) {
  return v ? std::to_string(*v) : "inf";
}

inline void validate_ladder(const std::vector<LadderValue> &ladder) {
  if (ladder.empty())
    throw ConfigError("partition ladder is empty");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!ladder[i]) {
      if (i != 0)
        throw ConfigError("'inf' may only start the partition ladder");
      continue;
    }
    if (*ladder[i] < 1)
      throw ConfigError("partition ladder values must be >= 1");
    if (i > 0 && ladder[i - 1] && *ladder[i - 1] <= *ladder[i])
      throw ConfigError("partition ladder must be strictly decreasing");
  }
}

/// Parses "inf,1024,64,1".
inline std::vector<LadderValue> parse_ladder(std::string_view text) {
  std::vector<LadderValue> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(',', pos);
    auto tok = std::string(text.substr(pos, end == std::string_view::npos ? end : end - pos));
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok == "inf" || tok == "∞") {
      out.push_back(std::nullopt);
    } else {
      std::size_t used = 0;
      std::int64_t v = 0;
      try {
        v = std::stoll(tok, &used);
      } catch (const std::exception &) {
        used = 0;
      }
      if (tok.empty() || used != tok.size())
        throw ConfigError("partition ladder: bad value '" + tok + "'");
      out.push_back(v);
    }
    if (end == std::string_view::npos)
      break;
    pos = end + 1;
  }
  validate_ladder(out);
  return out;
}

struct DseConfig {
  std::vector<LadderValue> ladder = default_ladder();
  Deadline timeout_hls;
  Deadline timeout_nlp;
  std::size_t parallel_evaluations = 1;
  bool stop_early = true; // skip the solves an earlier step already bounds
};

enum class StepOutcome : std::uint8_t {
  Evaluated,
  Invalid,
  Timeout,
  Error,
  Pruned,
  Duplicate,
  Infeasible
};

inline std::string_view outcome_name(StepOutcome o) {
  switch (o) {
  case StepOutcome::Evaluated:
    return "evaluated";
  case StepOutcome::Invalid:
    return "invalid";
  case StepOutcome::Timeout:
    return "timeout";
  case StepOutcome::Error:
    return "error";
  case StepOutcome::Pruned:
    return "pruned";
  case StepOutcome::Duplicate:
    return "duplicate";
  case StepOutcome::Infeasible:
    return "infeasible";
  }
  return "?";
}

struct DseStep {
  std::size_t index = 0;
  LadderValue max_partition;
  DseMode mode = DseMode::CoarseFine;
  bool solved = false;
  std::optional<SolveStatus> solve_status;
  std::optional<Cycles> lower_bound;
  std::optional<PragmaConfig> config;
  std::string config_hash;
  StepOutcome outcome = StepOutcome::Pruned;
  std::optional<Cycles> latency;
  std::optional<bool> valid;
  std::map<std::string, bool> applied;
  std::string message;
  std::optional<Cycles> best_latency; // after this step
};

struct DseReport {
  std::string kernel;
  std::string evaluator;
  std::vector<LadderValue> ladder;
  Deadline timeout_hls;
  Deadline timeout_nlp;
  std::vector<DseStep> steps;
  std::optional<std::size_t> best_step;
  std::optional<Cycles> best_latency;
  std::optional<PragmaConfig> best_config;
  std::size_t evaluations = 0;
};

/// Config with loops in key order, independent of any kernel.
inline nlohmann::ordered_json plain_config_json(const PragmaConfig &c) {
  nlohmann::ordered_json loops = nlohmann::ordered_json::object();
  for (const auto &[id, p] : c.loops)
    loops[id] = {{"uf", p.uf}, {"tile", p.tile}, {"pip", p.pip}};
  nlohmann::ordered_json cache = nlohmann::ordered_json::array();
  for (const auto &cp : c.cache)
    cache.push_back({{"loop", cp.loop}, {"array", cp.array}});
  return {{"loops", loops}, {"cache", cache}};
}

/// FNV-1a over the canonical config text.
inline std::string config_hash(const KernelIR &k, const PragmaConfig &c) {
  auto full = default_config(k);
  for (const auto &[id, p] : c.loops)
    full.loops[id] = p;
  full.cache = c.cache;
  auto text = plain_config_json(full).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

struct Solved {
  DseStep step;
  bool proven = false; // solve finished without timeout
};

inline Solved solve_step(const std::shared_ptr<const KernelModel> &m, const DseConfig &cfg,
                         std::size_t index) {
  Solved s;
  auto &st = s.step;
  st.index = index;
  st.max_partition = cfg.ladder[index / 2];
  st.mode = index % 2 == 0 ? DseMode::CoarseFine : DseMode::Fine;
  NlpOptions opt;
  opt.fine_grained_only = st.mode == DseMode::Fine;
  opt.max_partition = st.max_partition.value_or(std::numeric_limits<std::int64_t>::max());
  auto r = solve(build_problem(m, opt), {cfg.timeout_nlp});
  st.solved = true;
  st.solve_status = r.status;
  st.lower_bound = r.lower_bound;
  if (r.best_config) {
    st.config = r.best_config;
    st.config_hash = config_hash(m->kernel(), *r.best_config);
  }
  s.proven = r.status != SolveStatus::TimeoutBestSoFar;
  return s;
}

inline bool passes_gate(const DseStep &s, const std::optional<Cycles> &min_lat) {
  return s.config && s.lower_bound && (!min_lat || *s.lower_bound < *min_lat);
}

/// A proven coarse+fine solve bounds every later step: they are all
/// restrictions of its problem.
inline bool bounds_rest(const Solved &s, const std::optional<Cycles> &min_lat) {
  if (!s.proven || s.step.mode != DseMode::CoarseFine)
    return false;
  if (!s.step.config)
    return true;
  return min_lat && s.step.lower_bound && *s.step.lower_bound >= *min_lat;
}

} // namespace detail

/// Algorithm 1: for each partitioning cap, for each parallelism mode, solve
/// and evaluate the optimum when its bound beats the best latency so far.
/// Evaluations run up to `parallel_evaluations` at a time; the report is
/// the one a sequential run produces.
inline DseReport run_dse(std::shared_ptr<const KernelModel> m, const DseConfig &cfg,
                         const Evaluator &ev) {
  validate_ladder(cfg.ladder);
  DseReport rep;
  rep.kernel = m->kernel().name;
  rep.evaluator = ev.name();
  rep.ladder = cfg.ladder;
  rep.timeout_hls = cfg.timeout_hls;
  rep.timeout_nlp = cfg.timeout_nlp;
  const std::size_t total = cfg.ladder.size() * 2;
  const std::size_t jobs = std::max<std::size_t>(cfg.parallel_evaluations, 1);
  std::optional<Cycles> min_lat;
  std::set<std::string> seen;

  auto finish_from = [&](std::size_t from, const detail::Solved &by) {
    for (std::size_t i = from; i < total; ++i) {
      DseStep st;
      st.index = i;
      st.max_partition = cfg.ladder[i / 2];
      st.mode = i % 2 == 0 ? DseMode::CoarseFine : DseMode::Fine;
      st.outcome = by.step.config ? StepOutcome::Pruned : StepOutcome::Infeasible;
      st.message = "bounded by step " + std::to_string(by.step.index);
      st.best_latency = min_lat;
      rep.steps.push_back(std::move(st));
    }
  };

  std::size_t next = 0;
  while (next < total) {
    std::vector<detail::Solved> window;
    for (std::size_t i = next; i < total && window.size() < jobs; ++i) {
      window.push_back(detail::solve_step(m, cfg, i));
      if (cfg.stop_early && detail::bounds_rest(window.back(), min_lat))
        break;
    }

    // evaluate, speculatively, every distinct config that passes the gate now
    std::map<std::string, std::future<Evaluation>> pending;
    for (const auto &w : window)
      if (detail::passes_gate(w.step, min_lat) && !seen.count(w.step.config_hash) &&
          !pending.count(w.step.config_hash)) {
        const auto *cfg_ptr = &*w.step.config;
        pending.emplace(w.step.config_hash,
                        std::async(std::launch::async, [&ev, &m, cfg_ptr, &cfg] {
                          return ev.evaluate(*m, *cfg_ptr, cfg.timeout_hls);
                        }));
      }
    std::map<std::string, Evaluation> done;
    for (auto &[h, f] : pending)
      done.emplace(h, f.get());

    // merge in step order against the running best
    for (auto &w : window) {
      auto st = w.step;
      if (cfg.stop_early && detail::bounds_rest(w, min_lat)) {
        st.outcome = st.config ? StepOutcome::Pruned : StepOutcome::Infeasible;
        st.best_latency = min_lat;
        rep.steps.push_back(st);
        finish_from(st.index + 1, w);
        return rep;
      }
      if (!st.config) {
        st.outcome = StepOutcome::Infeasible;
      } else if (!detail::passes_gate(st, min_lat)) {
        st.outcome = StepOutcome::Pruned;
      } else if (seen.count(st.config_hash)) {
        st.outcome = StepOutcome::Duplicate;
      } else {
        seen.insert(st.config_hash);
        ++rep.evaluations;
        const auto &e = done.at(st.config_hash);
        st.applied = e.applied;
        st.message = e.message;
        switch (e.outcome) {
        case Evaluation::Outcome::Timeout:
          st.outcome = StepOutcome::Timeout;
          break;
        case Evaluation::Outcome::Error:
          st.outcome = StepOutcome::Error;
          break;
        case Evaluation::Outcome::Ok:
          st.latency = e.latency;
          st.valid = e.valid;
          st.outcome = e.valid ? StepOutcome::Evaluated : StepOutcome::Invalid;
          if (e.valid && (!min_lat || e.latency < *min_lat)) {
            min_lat = e.latency;
            rep.best_step = st.index;
            rep.best_latency = e.latency;
            rep.best_config = st.config;
          }
          break;
        }
      }
      st.best_latency = min_lat;
      rep.steps.push_back(std::move(st));
    }
    next += window.size();
  }
  return rep;
}

inline DseReport run_dse(const KernelIR &k, const Analysis &a, const CalibrationTable &cal,
                         const DseConfig &cfg, const Evaluator &ev) {
  if (k.statements.empty())
    throw ConfigError("kernel '" + k.name + "' has no statements");
  return run_dse(std::make_shared<const KernelModel>(k, a, cal), cfg, ev);
}

inline constexpr int kDseSchemaVersion = 1;

inline nlohmann::ordered_json report_json(const DseReport &r) {
  using json = nlohmann::ordered_json;
  auto opt = [](const auto &v) { return v ? json(*v) : json(nullptr); };
  auto ms = [](const Deadline &d) { return d ? json(d->count()) : json(nullptr); };
  auto ladder = [](const LadderValue &v) { return v ? json(*v) : json("inf"); };
  json j;
  j["schema_version"] = kDseSchemaVersion;
  j["kernel"] = r.kernel;
  j["evaluator"] = r.evaluator;
  j["ladder"] = json::array();
  for (const auto &v : r.ladder)
    j["ladder"].push_back(ladder(v));
  j["timeout_hls_ms"] = ms(r.timeout_hls);
  j["timeout_nlp_ms"] = ms(r.timeout_nlp);
  j["steps"] = json::array();
  for (const auto &s : r.steps) {
    json e;
    e["step"] = s.index;
    e["max_partition"] = ladder(s.max_partition);
    e["mode"] = mode_name(s.mode);
    e["solved"] = s.solved;
    e["solve_status"] = s.solve_status ? json(status_name(*s.solve_status)) : json(nullptr);
    e["lower_bound"] = opt(s.lower_bound);
    e["config"] = s.config ? plain_config_json(*s.config) : json(nullptr);
    e["config_hash"] = s.config_hash;
    e["outcome"] = outcome_name(s.outcome);
    e["latency"] = opt(s.latency);
    e["valid"] = opt(s.valid);
    e["applied"] = json::object();
    for (const auto &[k, v] : s.applied)
      e["applied"][k] = v;
    e["message"] = s.message;
    e["best_latency"] = opt(s.best_latency);
    j["steps"].push_back(std::move(e));
  }
  if (r.best_step)
    j["best"] = {{"step", *r.best_step},
                 {"latency", *r.best_latency},
                 {"config", plain_config_json(*r.best_config)}};
  else
    j["best"] = nullptr;
  j["evaluations"] = r.evaluations;
  return j;
}

inline DseReport report_from_json(const nlohmann::json &j) {
  try {
    auto version = j.at("schema_version").get<int>();
    if (version != kDseSchemaVersion)
      throw ConfigError("DSE report has schema_version " + std::to_string(version) +
                        ", expected " + std::to_string(kDseSchemaVersion));
    auto ladder = [](const nlohmann::json &v) -> LadderValue {
      if (v.is_string()) {
        if (v.get<std::string>() != "inf")
          throw ConfigError("bad ladder value '" + v.get<std::string>() + "'");
        return std::nullopt;
      }
      return v.get<std::int64_t>();
    };
    auto ms = [](const nlohmann::json &v) -> Deadline {
      if (v.is_null())
        return std::nullopt;
      return std::chrono::milliseconds(v.get<std::int64_t>());
    };
    auto cyc = [](const nlohmann::json &v) -> std::optional<Cycles> {
      if (v.is_null())
        return std::nullopt;
      return v.get<Cycles>();
    };
    DseReport r;
    r.kernel = j.at("kernel").get<std::string>();
    r.evaluator = j.at("evaluator").get<std::string>();
    for (const auto &v : j.at("ladder"))
      r.ladder.push_back(ladder(v));
    r.timeout_hls = ms(j.at("timeout_hls_ms"));
    r.timeout_nlp = ms(j.at("timeout_nlp_ms"));
    for (const auto &e : j.at("steps")) {
      DseStep s;
      s.index = e.at("step").get<std::size_t>();
      s.max_partition = ladder(e.at("max_partition"));
      auto mode = e.at("mode").get<std::string>();
      if (mode != "coarse+fine" && mode != "fine")
        throw ConfigError("bad mode '" + mode + "'");
      s.mode = mode == "fine" ? DseMode::Fine : DseMode::CoarseFine;
      s.solved = e.at("solved").get<bool>();
      if (!e.at("solve_status").is_null()) {
        auto name = e.at("solve_status").get<std::string>();
        bool found = false;
        for (auto st : {SolveStatus::Optimal, SolveStatus::TimeoutBestSoFar, SolveStatus::Infeasible})
          if (status_name(st) == name) {
            s.solve_status = st;
            found = true;
          }
        if (!found)
          throw ConfigError("bad solve status '" + name + "'");
      }
      s.lower_bound = cyc(e.at("lower_bound"));
      if (!e.at("config").is_null())
        s.config = config_from_json(e.at("config"));
      s.config_hash = e.at("config_hash").get<std::string>();
      auto outcome = e.at("outcome").get<std::string>();
      bool found = false;
      for (auto o : {StepOutcome::Evaluated, StepOutcome::Invalid, StepOutcome::Timeout,
                     StepOutcome::Error, StepOutcome::Pruned, StepOutcome::Duplicate,
                     StepOutcome::Infeasible})
        if (outcome_name(o) == outcome) {
          s.outcome = o;
          found = true;
        }
      if (!found)
        throw ConfigError("bad outcome '" + outcome + "'");
      s.latency = cyc(e.at("latency"));
      if (!e.at("valid").is_null())
        s.valid = e.at("valid").get<bool>();
      s.applied = e.at("applied").get<std::map<std::string, bool>>();
      s.message = e.at("message").get<std::string>();
      s.best_latency = cyc(e.at("best_latency"));
      r.steps.push_back(std::move(s));
    }
    if (!j.at("best").is_null()) {
      const auto &b = j.at("best");
      r.best_step = b.at("step").get<std::size_t>();
      r.best_latency = b.at("latency").get<Cycles>();
      r.best_config = config_from_json(b.at("config"));
    }
    r.evaluations = j.at("evaluations").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("malformed DSE report: ") + e.what());
  }
}

inline void persist_report(const DseReport &r, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write '" + path + "'");
  out << report_json(r).dump(2) << "\n";
  if (!out)
    throw Error("write to '" + path + "' failed");
}

inline DseReport load_report(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
  return report_from_json(j);
}

} // namespace hlsbound
