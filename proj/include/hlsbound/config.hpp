// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/kernel_ir.hpp"

#include "json.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hlsbound {

struct LoopPragma {
  std::int64_t uf = 1;
  std::int64_t tile = 1;
  bool pip = false;

  bool operator==(const LoopPragma &) const = default;
};

struct CachePoint {
  std::string loop;
  std::string array;

  auto operator<=>(const CachePoint &) const = default;
};

/// Pragma assignment for a kernel. Loops missing from `loops` use the
/// defaults (uf = 1, tile = 1, not pipelined).
///
/// JSON form:
///
///     {"loops": {"j1": {"uf": 1, "tile": 1, "pip": true}},
///      "cache": [{"loop": "i1", "array": "A"}]}
struct PragmaConfig {
  std::map<std::string, LoopPragma> loops;
  std::set<CachePoint> cache;

  LoopPragma at(const std::string &loop) const {
    auto it = loops.find(loop);
    return it == loops.end() ? LoopPragma{} : it->second;
  }
  std::int64_t uf(const std::string &loop) const { return at(loop).uf; }
  bool pip(const std::string &loop) const { return at(loop).pip; }
  bool cached(const std::string &loop, const std::string &array) const {
    return cache.count({loop, array}) > 0;
  }

  /// Drops entries equal to the defaults.
  PragmaConfig normalized() const {
    PragmaConfig c;
    for (const auto &[l, p] : loops)
      if (!(p == LoopPragma{}))
        c.loops[l] = p;
    c.cache = cache;
    return c;
  }

  bool operator==(const PragmaConfig &o) const {
    auto a = normalized(), b = o.normalized();
    return a.loops == b.loops && a.cache == b.cache;
  }
};

/// Config with one entry per loop of `k`, in loop order.
inline PragmaConfig default_config(const KernelIR &k) {
  PragmaConfig c;
  for (const auto &l : k.loops)
    c.loops[l.id] = LoopPragma{};
  return c;
}

/// Rejects loop ids and arrays not present in `k`.
inline void validate_shape(const KernelIR &k, const PragmaConfig &c) {
  for (const auto &[l, p] : c.loops) {
    if (!k.loop_index(l))
      throw ConfigError("config names unknown loop '" + l + "'");
    if (p.uf < 1 || p.tile < 1)
      throw ConfigError("loop '" + l + "': uf and tile must be >= 1");
  }
  for (const auto &cp : c.cache) {
    if (!k.loop_index(cp.loop))
      throw ConfigError("cache names unknown loop '" + cp.loop + "'");
    if (!k.find_array(cp.array))
      throw ConfigError("cache names unknown array '" + cp.array + "'");
  }
}

/// Config vector in the documented order: pip, uf, tile per loop (loop
/// order), then one cache flag per (loop, array) pair in `cache_pairs`.
inline std::vector<std::int64_t> config_vector(const KernelIR &k, const PragmaConfig &c,
                                               const std::vector<CachePoint> &cache_pairs) {
  std::vector<std::int64_t> v;
  for (const auto &l : k.loops)
    v.push_back(c.pip(l.id) ? 1 : 0);
  for (const auto &l : k.loops)
    v.push_back(c.uf(l.id));
  for (const auto &l : k.loops)
    v.push_back(c.at(l.id).tile);
  for (const auto &cp : cache_pairs)
    v.push_back(c.cache.count(cp) ? 1 : 0);
  return v;
}

inline nlohmann::ordered_json config_to_json(const KernelIR &k, const PragmaConfig &c) {
  nlohmann::ordered_json loops = nlohmann::ordered_json::object();
  for (const auto &l : k.loops) {
    auto p = c.at(l.id);
    loops[l.id] = {{"uf", p.uf}, {"tile", p.tile}, {"pip", p.pip}};
  }
  nlohmann::ordered_json cache = nlohmann::ordered_json::array();
  for (const auto &cp : c.cache)
    cache.push_back({{"loop", cp.loop}, {"array", cp.array}});
  return {{"loops", loops}, {"cache", cache}};
}

inline PragmaConfig config_from_json(const nlohmann::json &j) {
  PragmaConfig c;
  try {
    if (!j.is_object())
      throw ConfigError("config must be a JSON object");
    for (const auto &[key, _] : j.items())
      if (key != "loops" && key != "cache")
        throw ConfigError("config: unknown key '" + key + "'");
    if (j.contains("loops"))
      for (const auto &[id, v] : j.at("loops").items()) {
        LoopPragma p;
        for (const auto &[key, _] : v.items())
          if (key != "uf" && key != "tile" && key != "pip")
            throw ConfigError("config: loop '" + id + "': unknown key '" + key + "'");
        p.uf = v.value("uf", std::int64_t{1});
        p.tile = v.value("tile", std::int64_t{1});
        p.pip = v.value("pip", false);
        c.loops[id] = p;
      }
    if (j.contains("cache"))
      for (const auto &e : j.at("cache"))
        c.cache.insert({e.at("loop").get<std::string>(), e.at("array").get<std::string>()});
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

/// Stable hash of the normalized config, used for duplicate detection.
inline std::string config_key(const PragmaConfig &c) {
  auto n = c.normalized();
  std::string s;
  for (const auto &[l, p] : n.loops)
    s += l + ":" + std::to_string(p.uf) + "," + std::to_string(p.tile) + "," +
         (p.pip ? "p" : "-") + ";";
  s += "|";
  for (const auto &cp : n.cache)
    s += cp.loop + "/" + cp.array + ";";
  return s;
}

} // namespace hlsbound
