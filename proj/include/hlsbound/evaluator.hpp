// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/latency_model.hpp"

#include "json.hpp"

#include <chrono>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace hlsbound {

/// Result of running one config through a synthesis tool.
struct Evaluation {
  enum class Outcome : std::uint8_t { Ok, Timeout, Error };
  Outcome outcome = Outcome::Ok;
  Cycles latency = 0;
  bool valid = false;                 // no over-utilization
  std::map<std::string, bool> applied; // per pragma variable
  std::string message;
};

using Deadline = std::optional<std::chrono::milliseconds>;

class Evaluator {
public:
  virtual ~Evaluator() = default;
  virtual std::string name() const = 0;
  /// Must be deterministic and safe to call concurrently.
  virtual Evaluation evaluate(const KernelModel &m, const PragmaConfig &c,
                              Deadline deadline) const = 0;
};

/// Every pragma the config sets, keyed by its variable name.
inline std::map<std::string, bool> set_pragmas(const KernelIR &k, const PragmaConfig &c) {
  std::map<std::string, bool> out;
  for (const auto &l : k.loops) {
    auto p = c.at(l.id);
    if (p.pip)
      out[KernelModel::pip_var(l.id)] = true;
    if (p.uf > 1)
      out[KernelModel::uf_var(l.id)] = true;
  }
  for (const auto &cp : c.cache)
    out[KernelModel::cache_var(cp.loop, cp.array)] = true;
  return out;
}

inline bool under_pipeline(const KernelIR &k, const PragmaConfig &c, std::size_t l) {
  for (auto a : k.loops_above(l))
    if (c.pip(k.loops[a].id))
      return true;
  return false;
}

/// Loops unrolled around a body that is not fully unrolled.
inline std::vector<std::size_t> coarse_parallel_loops(const KernelModel &m, const PragmaConfig &c) {
  const auto &k = m.kernel();
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < k.loops.size(); ++l) {
    if (c.uf(k.loops[l].id) <= 1 || c.pip(k.loops[l].id) || under_pipeline(k, c, l))
      continue;
    for (auto d : k.loops_under(l)) {
      const auto &id = k.loops[d].id;
      if (c.pip(id) || c.uf(id) < m.loop(d).tc) {
        out.push_back(l);
        break;
      }
    }
  }
  return out;
}

/// One scenario rule: when every listed predicate holds, apply the effect.
struct SimRule {
  struct When {
    std::optional<bool> coarse_parallel;
    std::optional<std::string> pipelined;
    std::optional<std::int64_t> uf_product_gt;
    std::map<std::string, std::int64_t> uf_gt;
    std::optional<std::int64_t> dsp_gt;
  } when;
  struct Effect {
    std::vector<std::string> reject; // coarse_parallel, parallel, pipeline, cache
    Rational multiply{1};
    bool timeout = false;
    bool over_utilize = false;
  } effect;
};

namespace detail {

inline Rational rational_from_json(const nlohmann::json &j, const std::string &where) {
  if (j.is_number_integer())
    return Rational(j.get<std::int64_t>());
  if (j.is_number_float()) {
    auto x = j.get<double>();
    auto scaled = std::llround(x * 1e6);
    if (std::abs(x * 1e6 - static_cast<double>(scaled)) > 1e-3)
      throw ConfigError(where + ": factor needs at most 6 decimals");
    return Rational(scaled, 1000000);
  }
  throw ConfigError(where + ": factor must be a number");
}

template <class F> void for_keys(const nlohmann::json &j, const std::string &where, F &&f) {
  if (!j.is_object())
    throw ConfigError(where + " must be an object");
  for (const auto &[key, v] : j.items())
    if (!f(key, v))
      throw ConfigError(where + ": unknown key '" + key + "'");
}

} // namespace detail

/// Parses a rule list: [{"predicate": {...}, "effect": {...}}, ...].
inline std::vector<SimRule> parse_rules(const nlohmann::json &j) {
  if (!j.is_array())
    throw ConfigError("rules: expected a JSON array");
  std::vector<SimRule> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto where = "rule " + std::to_string(i);
    SimRule r;
    try {
      detail::for_keys(j[i], where, [&](const std::string &key, const nlohmann::json &v) {
        if (key == "predicate") {
          detail::for_keys(v, where + " predicate", [&](const std::string &p, const nlohmann::json &x) {
            if (p == "always") {
              if (!x.get<bool>())
                throw ConfigError(where + ": 'always' must be true");
            } else if (p == "coarse_parallel")
              r.when.coarse_parallel = x.get<bool>();
            else if (p == "pipelined")
              r.when.pipelined = x.get<std::string>();
            else if (p == "uf_product_gt")
              r.when.uf_product_gt = x.get<std::int64_t>();
            else if (p == "dsp_gt")
              r.when.dsp_gt = x.get<std::int64_t>();
            else if (p == "uf_gt")
              r.when.uf_gt = x.get<std::map<std::string, std::int64_t>>();
            else
              return false;
            return true;
          });
        } else if (key == "effect") {
          detail::for_keys(v, where + " effect", [&](const std::string &e, const nlohmann::json &x) {
            if (e == "reject") {
              auto kinds = x.is_array() ? x.get<std::vector<std::string>>()
                                        : std::vector<std::string>{x.get<std::string>()};
              for (const auto &kind : kinds)
                if (kind != "coarse_parallel" && kind != "parallel" && kind != "pipeline" &&
                    kind != "cache")
                  throw ConfigError(where + ": unknown reject kind '" + kind + "'");
              r.effect.reject = kinds;
            } else if (e == "multiply") {
              r.effect.multiply = detail::rational_from_json(x, where);
              if (r.effect.multiply <= Rational(0))
                throw ConfigError(where + ": factor must be positive");
            } else if (e == "timeout") {
              r.effect.timeout = x.get<bool>();
            } else if (e == "over_utilize") {
              r.effect.over_utilize = x.get<bool>();
            } else {
              return false;
            }
            return true;
          });
        } else {
          return false;
        }
        return true;
      });
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (!j[i].contains("effect"))
      throw ConfigError(where + ": missing 'effect'");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<SimRule> load_rules(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read rules file '" + path + "'");
  try {
    return parse_rules(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("rules file '" + path + "': " + e.what());
  }
}

/// Stand-in for a synthesis tool: the latency is the model bound of the
/// config after rejected pragmas are reset, scaled by the rule factors.
class SimulatedHlsEvaluator : public Evaluator {
public:
  explicit SimulatedHlsEvaluator(std::vector<SimRule> rules = {}) : rules_(std::move(rules)) {}

  std::string name() const override { return rules_.empty() ? "model" : "simulated"; }

  Evaluation evaluate(const KernelModel &m, const PragmaConfig &c, Deadline) const override {
    const auto &k = m.kernel();
    Evaluation ev;
    ev.applied = set_pragmas(k, c);
    Rational factor{1};
    bool over = false;
    std::set<std::string> reject;
    for (const auto &r : rules_) {
      if (!matches(m, c, r.when))
        continue;
      if (r.effect.timeout) {
        ev.outcome = Evaluation::Outcome::Timeout;
        ev.message = "simulated timeout";
        return ev;
      }
      factor *= r.effect.multiply;
      over |= r.effect.over_utilize;
      reject.insert(r.effect.reject.begin(), r.effect.reject.end());
    }
    auto eff = c;
    auto drop = [&](const std::string &var) {
      if (ev.applied.count(var))
        ev.applied[var] = false;
    };
    if (reject.count("coarse_parallel"))
      for (auto l : coarse_parallel_loops(m, c)) {
        eff.loops[k.loops[l].id].uf = 1;
        drop(KernelModel::uf_var(k.loops[l].id));
      }
    if (reject.count("parallel"))
      for (std::size_t l = 0; l < k.loops.size(); ++l)
        if (!under_pipeline(k, c, l)) {
          eff.loops[k.loops[l].id].uf = 1;
          drop(KernelModel::uf_var(k.loops[l].id));
        }
    if (reject.count("pipeline"))
      for (const auto &l : k.loops) {
        eff.loops[l.id].pip = false;
        drop(KernelModel::pip_var(l.id));
      }
    if (reject.count("cache")) {
      for (const auto &cp : eff.cache)
        drop(KernelModel::cache_var(cp.loop, cp.array));
      eff.cache.clear();
    }
    try {
      auto b = program_bound(m, eff);
      ev.latency = ceil_of(Rational(b.total) * factor);
      ev.valid = !over;
      for (const auto &v : b.resource_violations)
        if (v.tag == "Eq.15" || v.tag == "Eq.16")
          ev.valid = false;
    } catch (const Error &e) {
      ev.outcome = Evaluation::Outcome::Error;
      ev.message = e.what();
    }
    return ev;
  }

private:
  static bool matches(const KernelModel &m, const PragmaConfig &c, const SimRule::When &w) {
    const auto &k = m.kernel();
    if (w.coarse_parallel && coarse_parallel_loops(m, c).empty() == *w.coarse_parallel)
      return false;
    if (w.pipelined && !c.pip(*w.pipelined))
      return false;
    if (w.uf_product_gt) {
      Rational prod{1};
      for (const auto &l : k.loops)
        prod *= c.uf(l.id);
      if (!(prod > Rational(*w.uf_product_gt)))
        return false;
    }
    for (const auto &[l, n] : w.uf_gt)
      if (!(c.uf(l) > n))
        return false;
    if (w.dsp_gt && !(fx::eval(m.dsp(), m.env(m.values(c))) > Rational(*w.dsp_gt)))
      return false;
    return true;
  }

  std::vector<SimRule> rules_;
};

/// The model itself as evaluator: every pragma applies and the latency is
/// the lower bound.
class ModelEvaluator : public SimulatedHlsEvaluator {
public:
  ModelEvaluator() = default;
};

namespace detail {

struct ProcessResult {
  bool timed_out = false;
  int status = 0;
  std::string out;
};

/// Runs `/bin/sh -c cmd`, capturing stdout; the process group is killed
/// when the deadline passes.
inline ProcessResult run_shell(const std::string &cmd, Deadline deadline) {
  int fds[2];
  if (pipe(fds) != 0)
    throw Error("pipe failed");
  pid_t pid = fork();
  if (pid < 0)
    throw Error("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char *>(nullptr));
    _exit(127);
  }
  setpgid(pid, pid);
  close(fds[1]);
  ProcessResult r;
  auto start = std::chrono::steady_clock::now();
  char buf[4096];
  while (true) {
    int wait_ms = -1;
    if (deadline) {
      auto left = *deadline - std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - start);
      if (left.count() <= 0) {
        r.timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(left.count());
    }
    pollfd p{fds[0], POLLIN, 0};
    int n = poll(&p, 1, wait_ms);
    if (n < 0 && errno == EINTR)
      continue;
    if (n == 0)
      continue;
    auto got = read(fds[0], buf, sizeof buf);
    if (got <= 0)
      break;
    r.out.append(buf, static_cast<std::size_t>(got));
  }
  close(fds[0]);
  if (r.timed_out)
    kill(-pid, SIGKILL);
  waitpid(pid, &r.status, 0);
  return r;
}

inline void replace_all(std::string &s, const std::string &from, const std::string &to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

} // namespace detail

/// Runs a user command per config. The template may use {kernel}, {config}
/// (path of a JSON config file) and {timeout} (seconds, 0 for none); the
/// last non-empty stdout line must be a JSON object with "latency", "valid"
/// and optionally "applied", or {"timeout": true}.
class CommandEvaluator : public Evaluator {
public:
  CommandEvaluator(std::string tmpl, std::string kernel_path)
      : tmpl_(std::move(tmpl)), kernel_(std::move(kernel_path)) {}

  std::string name() const override { return "command"; }

  Evaluation evaluate(const KernelModel &m, const PragmaConfig &c,
                      Deadline deadline) const override {
    Evaluation ev;
    char path[] = "/tmp/hlsbound-config-XXXXXX";
    int fd = mkstemp(path);
    if (fd < 0) {
      ev.outcome = Evaluation::Outcome::Error;
      ev.message = "cannot create a temporary config file";
      return ev;
    }
    auto text = config_to_json(m.kernel(), c).dump() + "\n";
    bool wrote = write(fd, text.data(), text.size()) == static_cast<ssize_t>(text.size());
    close(fd);
    auto cmd = tmpl_;
    detail::replace_all(cmd, "{kernel}", kernel_);
    detail::replace_all(cmd, "{config}", path);
    detail::replace_all(cmd, "{timeout}",
                        std::to_string(deadline ? (deadline->count() + 999) / 1000 : 0));
    try {
      if (!wrote)
        throw Error("cannot write the temporary config file");
      auto r = detail::run_shell(cmd, deadline);
      unlink(path);
      if (r.timed_out) {
        ev.outcome = Evaluation::Outcome::Timeout;
        ev.message = "deadline exceeded";
        return ev;
      }
      if (!WIFEXITED(r.status) || WEXITSTATUS(r.status) != 0)
        throw Error("command exited with status " +
                    std::to_string(WIFEXITED(r.status) ? WEXITSTATUS(r.status) : -1));
      parse_result(last_line(r.out), ev);
    } catch (const std::exception &e) {
      unlink(path);
      ev = Evaluation{};
      ev.outcome = Evaluation::Outcome::Error;
      ev.message = e.what();
    }
    return ev;
  }

private:
  static std::string last_line(const std::string &out) {
    std::string line, last;
    std::istringstream in(out);
    while (std::getline(in, line))
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        last = line;
    if (last.empty())
      throw Error("command printed no result line");
    return last;
  }

  static void parse_result(const std::string &line, Evaluation &ev) {
    auto j = nlohmann::json::parse(line);
    if (!j.is_object())
      throw Error("result line is not a JSON object");
    if (j.value("timeout", false)) {
      ev.outcome = Evaluation::Outcome::Timeout;
      ev.message = "tool timeout";
      return;
    }
    ev.latency = j.at("latency").get<Cycles>();
    ev.valid = j.at("valid").get<bool>();
    if (j.contains("applied"))
      ev.applied = j.at("applied").get<std::map<std::string, bool>>();
  }

  std::string tmpl_;
  std::string kernel_;
};

} // namespace hlsbound
