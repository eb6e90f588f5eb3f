// SPDX-License-Identifier: Apache-2.0
#include "hlsbound/dse.hpp"
#include "hlsbound/model_export.hpp"
#include "hlsbound/oracle.hpp"
#include "hlsbound/parser.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

using namespace hlsbound;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  std::string calibration;
  bool json = false;
  std::uint64_t seed = 0;
};

std::string read_text(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream out(path);
  if (!out || !(out << text))
    throw Error("cannot write '" + path + "'");
}

CalibrationTable calibration(const Globals &g) {
  if (g.calibration.empty())
    return {};
  auto cal = parse_calibration(read_text(g.calibration));
  cal.validate();
  return cal;
}

PragmaConfig load_config(const std::string &path) {
  try {
    return config_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

Deadline seconds(double s) {
  if (s <= 0)
    return std::nullopt;
  return std::chrono::milliseconds(static_cast<std::int64_t>(s * 1000.0));
}

std::string opt_str(const std::optional<Cycles> &v) { return v ? std::to_string(*v) : "-"; }

/// Left-aligned columns, two spaces apart.
void print_table(const std::vector<std::vector<std::string>> &rows) {
  std::vector<std::size_t> width;
  for (const auto &r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      width.resize(std::max(width.size(), r.size()));
      width[i] = std::max(width[i], r[i].size());
    }
  for (const auto &r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i)
      line += r[i] + (i + 1 < r.size() ? std::string(width[i] - r[i].size() + 2, ' ') : "");
    std::cout << line << "\n";
  }
}

std::string config_line(const KernelIR &k, const PragmaConfig &c) {
  std::string s;
  for (const auto &l : k.loops) {
    auto p = c.at(l.id);
    std::string part;
    if (p.pip)
      part += " pipeline";
    if (p.uf > 1)
      part += " parallel=" + std::to_string(p.uf);
    if (p.tile > 1)
      part += " tile=" + std::to_string(p.tile);
    if (!part.empty())
      s += (s.empty() ? "" : "; ") + l.id + ":" + part;
  }
  for (const auto &cp : c.cache)
    s += (s.empty() ? "" : "; ") + std::string("cache ") + cp.array + "@" + cp.loop;
  return s.empty() ? "(no pragmas)" : s;
}

struct Loaded {
  KernelIR k;
  CalibrationTable cal;
  Analysis a;
};

Loaded load(const Globals &g, const std::string &path) {
  Loaded l{parse_kernel(read_text(path)), calibration(g), {}};
  l.a = analyze(l.k, l.cal);
  return l;
}

// parse ---------------------------------------------------------------------

void cmd_parse(const Globals &g, const std::string &path) {
  auto k = parse_kernel(read_text(path));
  if (g.json) {
    std::cout << to_json(k).dump(2) << "\n";
    return;
  }
  std::cout << "kernel " << k.name << "\n\n";
  std::vector<std::vector<std::string>> rows{{"array", "dims", "bits", "direction"}};
  for (const auto &a : k.arrays) {
    std::string dims;
    for (auto d : a.dims)
      dims += "[" + std::to_string(d) + "]";
    rows.push_back({a.name, dims, std::to_string(a.element_bits),
                    std::string(direction_name(a.direction))});
  }
  print_table(rows);
  std::cout << "\n" << k.loops.size() << " loops, " << k.statements.size() << " statements\n"
            << summarize(k) << "\n";
}

// analyze -------------------------------------------------------------------

void cmd_analyze(const Globals &g, const std::string &path) {
  auto l = load(g, path);
  auto j = analysis_json(l.k, l.a);
  if (g.json) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::cout << "kernel " << l.k.name << "\n\n";
  std::vector<std::vector<std::string>> rows{{"loop", "tc_min", "tc_max", "tc_avg", "min_ii", "reduction"}};
  for (std::size_t i = 0; i < l.k.loops.size(); ++i) {
    const auto &t = j["trip_counts"][i];
    const auto &r = j["reductions"][i];
    rows.push_back({t["loop"], std::to_string(t["tc_min"].get<std::int64_t>()),
                    std::to_string(t["tc_max"].get<std::int64_t>()), t["tc_avg"],
                    std::to_string(t["min_ii"].get<std::int64_t>()),
                    r["is_reduction"].get<bool>() ? r["op"].get<std::string>() : "-"});
  }
  print_table(rows);
  std::cout << "\n";
  rows = {{"dependence", "kind", "array", "carrier", "distance"}};
  for (const auto &d : j["dependences"])
    rows.push_back({d["src"].get<std::string>() + " -> " + d["dst"].get<std::string>(), d["kind"],
                    d["array"], d["carrier"].is_null() ? "-" : d["carrier"].get<std::string>(),
                    d["distance"].is_null() ? "-" : std::to_string(d["distance"].get<std::int64_t>())});
  print_table(rows);
  std::cout << "\n";
  rows = {{"array", "level", "footprint", "read", "write"}};
  for (const auto &f : j["footprints"])
    rows.push_back({f["array"], f["loop"].is_null() ? "top" : f["loop"].get<std::string>(),
                    std::to_string(f["footprint_elems"].get<std::int64_t>()),
                    f["read"].get<bool>() ? "yes" : "no", f["write"].get<bool>() ? "yes" : "no"});
  print_table(rows);
}

// bound ---------------------------------------------------------------------

struct BoundArgs {
  std::string kernel;
  std::string config;
  std::optional<std::int64_t> max_partition;
  bool fine_grained_only = false;
};

void cmd_bound(const Globals &g, const BoundArgs &b) {
  auto l = load(g, b.kernel);
  auto c = b.config.empty() ? default_config(l.k) : load_config(b.config);
  KernelModel m(l.k, l.a, l.cal);
  auto r = program_bound(m, c, {b.max_partition, b.fine_grained_only});
  if (g.json) {
    std::cout << bound_json(r).dump(2) << "\n";
    return;
  }
  std::cout << "kernel " << l.k.name << ": " << config_line(l.k, c) << "\n\n";
  print_table({{"computation", std::to_string(r.computation)},
               {"communication", std::to_string(r.communication)},
               {"total", std::to_string(r.total)},
               {"dsp", to_string(r.dsp)},
               {"onchip_bits", std::to_string(r.onchip_bits)}});
  std::cout << "\n";
  std::vector<std::vector<std::string>> rows{{"loop", "rule", "cycles", "uf", "ii"}};
  for (const auto &lb : r.loops)
    rows.push_back({lb.loop, lb.rule, opt_str(lb.cycles), std::to_string(lb.uf), std::to_string(lb.ii)});
  print_table(rows);
  for (const auto &v : r.resource_violations)
    std::cout << "violation " << v.tag << ": " << v.message << "\n";
  for (const auto &n : r.notes)
    std::cout << "note: " << n << "\n";
}

// oracle --------------------------------------------------------------------

struct OracleArgs {
  std::string kernel;
  std::string config;
  bool random_config = false;
  std::int64_t units = 0; // 0 = unbounded
  std::size_t max_ops = std::size_t{1} << 14;
};

PragmaConfig random_config(const NlpProblem &p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto &k = p.kernel();
  const auto &m = p.m();
  auto placements = pipeline_placements(k);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const auto &pip = placements[pick(placements.size())];
    auto c = default_config(k);
    for (std::size_t l = 0; l < k.loops.size(); ++l) {
      auto &x = c.loops[k.loops[l].id];
      x.pip = pip[l];
      const auto &d = m.loop(l).uf_domain;
      x.uf = d[pick(d.size())];
      for (auto a : k.loops_above(l))
        if (pip[a])
          x.uf = m.loop(l).tc;
    }
    for (const auto &cp : m.cache_pairs())
      if (pick(4) == 0)
        c.cache.insert(cp);
    if (check_constraints(m, p.constraints, c, true).empty())
      return c;
  }
  throw ConfigError("no structurally valid random config found");
}

void cmd_oracle(const Globals &g, const OracleArgs &o) {
  auto l = load(g, o.kernel);
  auto model = std::make_shared<const KernelModel>(l.k, l.a, l.cal);
  PragmaConfig c;
  if (o.random_config)
    c = random_config(build_problem(model), g.seed);
  else
    c = o.config.empty() ? default_config(l.k) : load_config(o.config);
  auto bound = program_bound(*model, c);
  auto res = o.units > 0 ? ResourceLimits::uniform(o.units) : ResourceLimits::unbounded();
  SchedulePolicy policy;
  policy.max_ops = o.max_ops;
  auto sim = simulate_config(l.k, l.a, c, res, l.cal, policy);
  bool sound = bound.computation <= sim.computation && bound.communication <= sim.communication;
  if (g.json) {
    json j;
    j["schema_version"] = 1;
    j["kernel"] = l.k.name;
    j["config"] = config_to_json(l.k, c);
    j["units"] = o.units > 0 ? json(o.units) : json("unbounded");
    j["simulated"] = {{"computation", sim.computation},
                      {"communication", sim.communication},
                      {"total", sim.total},
                      {"ops", sim.ops}};
    j["bound"] = {{"computation", bound.computation},
                  {"communication", bound.communication},
                  {"total", bound.total}};
    j["sound"] = sound;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "kernel " << l.k.name << ": " << config_line(l.k, c) << "\n\n";
    print_table({{"", "bound", "simulated"},
                 {"computation", std::to_string(bound.computation), std::to_string(sim.computation)},
                 {"communication", std::to_string(bound.communication), std::to_string(sim.communication)},
                 {"total", std::to_string(bound.total), std::to_string(sim.total)}});
    std::cout << "\n" << sim.ops << " operations scheduled; bound "
              << (sound ? "holds" : "VIOLATED") << "\n";
  }
  if (!sound)
    throw Error("lower bound exceeds the simulated latency");
}

// solve, count-space, export-model -----------------------------------------

struct ProblemArgs {
  std::string kernel;
  std::optional<std::int64_t> max_partition;
  bool fine_grained_only = false;
};

struct SolveArgs : ProblemArgs {
  double timeout_nlp = 0;
  std::string export_model;
};

NlpProblem make_problem(const Loaded &l, const ProblemArgs &a) {
  return build_problem(l.k, l.a, l.cal, {a.fine_grained_only, a.max_partition});
}

void cmd_solve(const Globals &g, const SolveArgs &s) {
  auto l = load(g, s.kernel);
  auto p = make_problem(l, s);
  if (!s.export_model.empty())
    write_text(s.export_model, export_model(p));
  auto r = solve(p, {seconds(s.timeout_nlp)});
  if (g.json) {
    json j;
    j["schema_version"] = 1;
    j["kernel"] = l.k.name;
    j["status"] = status_name(r.status);
    j["lower_bound"] = r.lower_bound ? json(*r.lower_bound) : json(nullptr);
    j["config"] = r.best_config ? config_to_json(l.k, *r.best_config) : json(nullptr);
    if (r.best_config) {
      auto b = program_bound(p.m(), *r.best_config, p.constraint_options());
      j["computation"] = b.computation;
      j["communication"] = b.communication;
    }
    j["nodes_explored"] = r.nodes_explored;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "status       " << status_name(r.status) << "\n"
              << "lower_bound  " << opt_str(r.lower_bound) << "\n";
    if (r.best_config)
      std::cout << "config       " << config_line(l.k, *r.best_config) << "\n";
    std::cout << "nodes        " << r.nodes_explored << "\n";
  }
}

void cmd_count_space(const Globals &g, const ProblemArgs &a) {
  auto l = load(g, a.kernel);
  auto n = count_space(make_problem(l, a));
  if (g.json)
    std::cout << json{{"schema_version", 1}, {"kernel", l.k.name}, {"count", n.str()}}.dump(2)
              << "\n";
  else
    std::cout << n.str() << "\n";
}

struct ExportArgs : ProblemArgs {
  std::string output;
};

void cmd_export_model(const Globals &g, const ExportArgs &a) {
  auto l = load(g, a.kernel);
  auto p = make_problem(l, a);
  auto text = export_model(p);
  if (!a.output.empty())
    write_text(a.output, text);
  if (g.json) {
    auto im = import_model(text);
    json j{{"schema_version", 1}, {"kernel", l.k.name}, {"constraints", im.constraints.size()},
           {"variables", im.vars.size()}};
    if (a.output.empty())
      j["model"] = text;
    else
      j["path"] = a.output;
    std::cout << j.dump(2) << "\n";
  } else if (a.output.empty()) {
    std::cout << text;
  }
}

// dse, report ---------------------------------------------------------------

struct DseArgs {
  std::string kernel;
  std::string ladder;
  double timeout_hls = 0;
  double timeout_nlp = 0;
  std::string evaluator = "model";
  std::size_t jobs = 1;
  std::string report;
};

std::unique_ptr<Evaluator> make_evaluator(const std::string &spec, const std::string &kernel) {
  if (spec == "model")
    return std::make_unique<ModelEvaluator>();
  if (spec.rfind("simulated:", 0) == 0)
    return std::make_unique<SimulatedHlsEvaluator>(load_rules(spec.substr(10)));
  if (spec.rfind("command:", 0) == 0)
    return std::make_unique<CommandEvaluator>(spec.substr(8), kernel);
  throw CLI::ValidationError("--evaluator",
                             "expected model, simulated:<rules-file> or command:<template>");
}

void print_report(const DseReport &r) {
  std::cout << "kernel " << r.kernel << ", evaluator " << r.evaluator << "\n\n";
  std::vector<std::vector<std::string>> rows{
      {"step", "max_partition", "mode", "lower_bound", "outcome", "latency", "best"}};
  for (const auto &s : r.steps)
    rows.push_back({std::to_string(s.index), ladder_string(s.max_partition),
                    std::string(mode_name(s.mode)), opt_str(s.lower_bound),
                    std::string(outcome_name(s.outcome)), opt_str(s.latency), opt_str(s.best_latency)});
  print_table(rows);
  std::cout << "\n" << r.evaluations << " evaluations\n";
  if (r.best_step)
    std::cout << "best latency " << *r.best_latency << " from step " << *r.best_step << "\n";
  else
    std::cout << "no valid design found\n";
}

void cmd_dse(const Globals &g, const DseArgs &d) {
  auto l = load(g, d.kernel);
  DseConfig cfg;
  if (!d.ladder.empty())
    cfg.ladder = parse_ladder(d.ladder);
  cfg.timeout_hls = seconds(d.timeout_hls);
  cfg.timeout_nlp = seconds(d.timeout_nlp);
  cfg.parallel_evaluations = d.jobs;
  auto ev = make_evaluator(d.evaluator, d.kernel);
  auto r = run_dse(l.k, l.a, l.cal, cfg, *ev);
  if (!d.report.empty())
    persist_report(r, d.report);
  if (g.json)
    std::cout << report_json(r).dump(2) << "\n";
  else
    print_report(r);
}

void cmd_report(const Globals &g, const std::string &path) {
  auto r = load_report(path);
  if (g.json)
    std::cout << report_json(r).dump(2) << "\n";
  else
    print_report(r);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Latency lower bounds and pragma selection for HLS loop kernels"};
  app.name("hlsbound");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--calibration", g.calibration, "Calibration INI file")->check(CLI::ExistingFile);
  app.add_flag("--json", g.json, "Machine-readable output");
  app.add_option("--seed", g.seed, "Seed for randomized choices");

  std::string kernel_path, report_path;
  auto kernel_arg = [&](CLI::App *sub) {
    sub->add_option("kernel", kernel_path, "Kernel file")->required()->check(CLI::ExistingFile);
  };
  auto problem_opts = [](CLI::App *sub, ProblemArgs &a) {
    sub->add_option("--max-partition", a.max_partition, "Array partitioning cap")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--fine-grained-only", a.fine_grained_only,
                  "Keep loops above a pipeline rolled");
  };

  auto *parse = app.add_subcommand("parse", "Parse a kernel and print its IR");
  kernel_arg(parse);
  auto *analyze_cmd = app.add_subcommand("analyze", "Trip counts, dependences, reductions, footprints");
  kernel_arg(analyze_cmd);

  BoundArgs bound;
  auto *bound_cmd = app.add_subcommand("bound", "Latency lower bound of one config");
  kernel_arg(bound_cmd);
  bound_cmd->add_option("--config", bound.config, "Config JSON (default: no pragmas)")
      ->check(CLI::ExistingFile);
  bound_cmd->add_option("--max-partition", bound.max_partition, "Array partitioning cap")
      ->check(CLI::PositiveNumber);
  bound_cmd->add_flag("--fine-grained-only", bound.fine_grained_only,
                      "Also check the fine-grained constraint");

  SolveArgs solve_args;
  auto *solve_cmd = app.add_subcommand("solve", "Optimal pragma config under the model");
  kernel_arg(solve_cmd);
  problem_opts(solve_cmd, solve_args);
  solve_cmd->add_option("--timeout-nlp", solve_args.timeout_nlp, "Solver timeout in seconds (0: none)")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--export-model", solve_args.export_model, "Also write the model file");

  ProblemArgs count_args;
  auto *count_cmd = app.add_subcommand("count-space", "Number of structurally valid configs");
  kernel_arg(count_cmd);
  problem_opts(count_cmd, count_args);

  ExportArgs export_args;
  auto *export_cmd = app.add_subcommand("export-model", "Write the optimization problem as text");
  kernel_arg(export_cmd);
  problem_opts(export_cmd, export_args);
  export_cmd->add_option("-o,--output", export_args.output, "Output file (default: stdout)");

  DseArgs dse_args;
  auto *dse_cmd = app.add_subcommand("dse", "Design space exploration over the partition ladder");
  kernel_arg(dse_cmd);
  dse_cmd->add_option("--ladder", dse_args.ladder,
                      "Comma-separated caps, e.g. inf,1024,64,1 (default: inf,2048,...,8,1)");
  dse_cmd->add_option("--timeout-hls", dse_args.timeout_hls, "Evaluation timeout in seconds (0: none)")
      ->check(CLI::NonNegativeNumber);
  dse_cmd->add_option("--timeout-nlp", dse_args.timeout_nlp, "Solver timeout in seconds (0: none)")
      ->check(CLI::NonNegativeNumber);
  dse_cmd->add_option("--evaluator", dse_args.evaluator,
                      "model | simulated:<rules-file> | command:<template>");
  dse_cmd->add_option("--jobs", dse_args.jobs, "Concurrent evaluations")->check(CLI::PositiveNumber);
  dse_cmd->add_option("--report", dse_args.report, "Write the report JSON here");

  OracleArgs oracle_args;
  auto *oracle_cmd = app.add_subcommand("oracle", "Compare the bound with a list-scheduled execution");
  kernel_arg(oracle_cmd);
  oracle_cmd->add_option("--config", oracle_args.config, "Config JSON (default: no pragmas)")
      ->check(CLI::ExistingFile);
  oracle_cmd->add_flag("--random-config", oracle_args.random_config,
                       "Draw a valid config from --seed");
  oracle_cmd->add_option("--units", oracle_args.units, "Functional units per op kind (0: unbounded)")
      ->check(CLI::NonNegativeNumber);
  oracle_cmd->add_option("--max-ops", oracle_args.max_ops, "Operation graph size cap");

  auto *report_cmd = app.add_subcommand("report", "Print a saved DSE report");
  report_cmd->add_option("path", report_path, "Report JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*parse)
      cmd_parse(g, kernel_path);
    else if (*analyze_cmd)
      cmd_analyze(g, kernel_path);
    else if (*bound_cmd)
      bound.kernel = kernel_path, cmd_bound(g, bound);
    else if (*solve_cmd)
      solve_args.kernel = kernel_path, cmd_solve(g, solve_args);
    else if (*count_cmd)
      count_args.kernel = kernel_path, cmd_count_space(g, count_args);
    else if (*export_cmd)
      export_args.kernel = kernel_path, cmd_export_model(g, export_args);
    else if (*dse_cmd)
      dse_args.kernel = kernel_path, cmd_dse(g, dse_args);
    else if (*oracle_cmd)
      oracle_args.kernel = kernel_path, cmd_oracle(g, oracle_args);
    else if (*report_cmd)
      cmd_report(g, report_path);
  } catch (const CLI::ValidationError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
