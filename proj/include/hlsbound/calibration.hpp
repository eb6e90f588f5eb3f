// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hlsbound/types.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace hlsbound {

struct OpCost {
  Cycles latency = 1;
  std::int64_t dsp = 0;
};

/// Per-op latencies and DSP costs plus device capacities.
///
/// File format (INI sections, every key optional):
///
///     [op.add]
///     latency = 5
///     dsp = 2
///     [device]
///     dsp = 6840
///     onchip_bits = 36700160
///     burst_bits = 512
///     max_partition = 1024
struct CalibrationTable {
  std::array<OpCost, 4> ops{OpCost{5, 2}, OpCost{5, 2}, OpCost{4, 3}, OpCost{15, 0}};
  std::int64_t dsp_available = 6840;
  std::int64_t onchip_bits_available = 35LL * 1024 * 1024;
  std::int64_t burst_bits = 512;
  std::int64_t max_partition = 1024;

  const OpCost &cost(OpKind k) const { return ops[static_cast<std::size_t>(k)]; }
  OpCost &cost(OpKind k) { return ops[static_cast<std::size_t>(k)]; }
  Cycles latency(OpKind k) const { return cost(k).latency; }
  std::int64_t dsp(OpKind k) const { return cost(k).dsp; }

  void validate() const {
    for (auto k : kAllOpKinds) {
      if (cost(k).latency < 1)
        throw ConfigError("latency of '" + std::string(op_name(k)) + "' must be >= 1");
      if (cost(k).dsp < 0)
        throw ConfigError("dsp cost of '" + std::string(op_name(k)) + "' must be >= 0");
    }
    if (dsp_available < 0 || onchip_bits_available < 0)
      throw ConfigError("device capacities must be non-negative");
    if (burst_bits < 1 || max_partition < 1)
      throw ConfigError("burst_bits and max_partition must be >= 1");
  }
};

inline CalibrationTable parse_calibration(const std::string &text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
  CalibrationTable cal;
  try {
    for (const auto &[section, body] : tree) {
      if (section.rfind("op.", 0) == 0) {
        auto kind = op_from_name(section.substr(3));
        if (!kind)
          throw ConfigError("calibration: unknown op '" + section.substr(3) + "'");
        auto &c = cal.cost(*kind);
        c.latency = body.get<Cycles>("latency", c.latency);
        c.dsp = body.get<std::int64_t>("dsp", c.dsp);
      } else if (section == "device") {
        cal.dsp_available = body.get<std::int64_t>("dsp", cal.dsp_available);
        cal.onchip_bits_available =
            body.get<std::int64_t>("onchip_bits", cal.onchip_bits_available);
        cal.burst_bits = body.get<std::int64_t>("burst_bits", cal.burst_bits);
        cal.max_partition = body.get<std::int64_t>("max_partition", cal.max_partition);
      } else {
        throw ConfigError("calibration: unknown section '" + section + "'");
      }
    }
  } catch (const pt::ptree_bad_data &e) {
    throw ConfigError(std::string("calibration: ") + e.what());
  }
  cal.validate();
  return cal;
}

/// Functional units available per op kind; a missing entry means unbounded.
struct ResourceLimits {
  std::map<OpKind, std::int64_t> units;

  static ResourceLimits unbounded() { return {}; }
  static ResourceLimits uniform(std::int64_t n) {
    ResourceLimits r;
    for (auto k : kAllOpKinds)
      r.units[k] = n;
    return r;
  }
  std::optional<std::int64_t> limit(OpKind k) const {
    auto it = units.find(k);
    if (it == units.end())
      return std::nullopt;
    return it->second;
  }
};

} // namespace hlsbound
