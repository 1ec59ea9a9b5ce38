// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PHASEMO_CONFIG_HPP
#define PHASEMO_CONFIG_HPP

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phasemo/channel.hpp"
#include "phasemo/error.hpp"
#include "phasemo/link.hpp"
#include "phasemo/power.hpp"
#include "phasemo/precoding.hpp"
#include "phasemo/waveform.hpp"

namespace phasemo::config {

using precoding::ArchitectureKind;

enum class ChannelSource { Synthetic, File };

/// Every scalar of a run. Defaults are the headline 64-antenna, 8-user,
/// 100 MHz, 64-QAM setting.
struct ScenarioConfig {
  std::vector<ArchitectureKind> architectures{ArchitectureKind::PhaseMO};
  std::size_t antennas = 64;
  std::size_t users = 8;
  std::size_t chains = 8;  ///< V for PhaseMO, R for hybrids/GreenMO, active antennas for AM
  std::size_t subcarriers = 64;
  std::size_t ofdm_symbols = 14;
  int modulation_order = 64;
  double bandwidth_hz = 100e6;
  double center_hz = 4.2e9;
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;

  ChannelSource channel_source = ChannelSource::Synthetic;
  std::string cfr_path;
  double distance_m = 300.0;
  double min_distance_m = 20.0;
  double pathloss_exponent = 2.0;
  std::size_t path_count = 6;
  double rician_k_db = 0.0;
  double spacing_wavelengths = 0.5;
  double max_angle_deg = 60.0;
  double max_delay_samples = 4.0;

  double noise_dbm = -100.0;
  bool noiseless = false;
  double sinr_cap_db = link::kDefaultSinrCapDb;
  double acpr_penalty_db = 0.0;  ///< PhaseMO only
  std::string mcs_table = "default";

  power::PowerModelParams power;

  bool compensate_spreading = false;
  bool precompensate = true;
  std::size_t oversample = 32;
  precoding::MutingPolicy muting_policy = precoding::MutingPolicy::HighestIndex;

  channel::GeometryScenario geometry(std::uint64_t drop_seed) const {
    channel::GeometryScenario g;
    g.antenna_count = antennas;
    g.spacing_wavelengths = spacing_wavelengths;
    g.user_count = users;
    g.path_count = path_count;
    g.distance_m = distance_m;
    g.min_distance_m = min_distance_m;
    g.pathloss_exponent = pathloss_exponent;
    g.center_hz = center_hz;
    g.bandwidth_hz = bandwidth_hz;
    g.subcarriers = subcarriers;
    g.max_angle_deg = max_angle_deg;
    g.max_delay_samples = max_delay_samples;
    g.rician_k_db = rician_k_db;
    g.seed = drop_seed;
    return g;
  }

  precoding::ArchitectureSpec architecture(ArchitectureKind kind) const {
    return precoding::ArchitectureSpec::make(kind, antennas, users, chains);
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(field, "expected a number, got '" + text + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size())
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  return v;
}

inline bool parse_bool(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(field, "expected a boolean, got '" + text + "'");
}

}  // namespace detail

struct Field {
  std::string key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

inline const std::vector<Field>& fields() {
  using detail::format_double;
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_uint;
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    auto real = [&t](std::string key, double ScenarioConfig::*m) {
      t.push_back({key, [key, m](ScenarioConfig& c, const std::string& v) { c.*m = parse_double(key, v); },
                   [m](const ScenarioConfig& c) { return format_double(c.*m); }});
    };
    auto count = [&t](std::string key, std::size_t ScenarioConfig::*m) {
      t.push_back({key, [key, m](ScenarioConfig& c, const std::string& v) { c.*m = parse_uint(key, v); },
                   [m](const ScenarioConfig& c) { return std::to_string(c.*m); }});
    };
    auto flag = [&t](std::string key, bool ScenarioConfig::*m) {
      t.push_back({key, [key, m](ScenarioConfig& c, const std::string& v) { c.*m = parse_bool(key, v); },
                   [m](const ScenarioConfig& c) { return std::string(c.*m ? "true" : "false"); }});
    };
    auto power_real = [&t](std::string key, double power::PowerModelParams::*m) {
      t.push_back({key, [key, m](ScenarioConfig& c, const std::string& v) { c.power.*m = parse_double(key, v); },
                   [m](const ScenarioConfig& c) { return format_double(c.power.*m); }});
    };

    t.push_back({"scenario.architectures",
                 [](ScenarioConfig& c, const std::string& v) {
                   c.architectures.clear();
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) {
                     const auto kind = precoding::parse_architecture(detail::trim(item));
                     if (!kind) throw ConfigError("scenario.architectures", "unknown architecture '" + item + "'");
                     c.architectures.push_back(*kind);
                   }
                 },
                 [](const ScenarioConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.architectures.size(); ++i)
                     out += (i ? "," : "") + std::string(precoding::to_string(c.architectures[i]));
                   return out;
                 }});
    count("scenario.antennas", &ScenarioConfig::antennas);
    count("scenario.users", &ScenarioConfig::users);
    count("scenario.chains", &ScenarioConfig::chains);
    count("scenario.subcarriers", &ScenarioConfig::subcarriers);
    count("scenario.ofdm_symbols", &ScenarioConfig::ofdm_symbols);
    t.push_back({"scenario.modulation_order",
                 [](ScenarioConfig& c, const std::string& v) {
                   c.modulation_order = static_cast<int>(parse_uint("scenario.modulation_order", v));
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.modulation_order); }});
    real("scenario.bandwidth_hz", &ScenarioConfig::bandwidth_hz);
    real("scenario.center_hz", &ScenarioConfig::center_hz);
    count("scenario.repetitions", &ScenarioConfig::repetitions);
    t.push_back({"scenario.seed",
                 [](ScenarioConfig& c, const std::string& v) { c.seed = parse_uint("scenario.seed", v); },
                 [](const ScenarioConfig& c) { return std::to_string(c.seed); }});

    t.push_back({"channel.source",
                 [](ScenarioConfig& c, const std::string& v) {
                   const std::string s = detail::trim(v);
                   if (s == "synthetic") c.channel_source = ChannelSource::Synthetic;
                   else if (s == "file") c.channel_source = ChannelSource::File;
                   else throw ConfigError("channel.source", "expected synthetic or file, got '" + v + "'");
                 },
                 [](const ScenarioConfig& c) {
                   return std::string(c.channel_source == ChannelSource::File ? "file" : "synthetic");
                 }});
    t.push_back({"channel.cfr_path", [](ScenarioConfig& c, const std::string& v) { c.cfr_path = detail::trim(v); },
                 [](const ScenarioConfig& c) { return c.cfr_path; }});
    real("channel.distance_m", &ScenarioConfig::distance_m);
    real("channel.min_distance_m", &ScenarioConfig::min_distance_m);
    real("channel.pathloss_exponent", &ScenarioConfig::pathloss_exponent);
    count("channel.path_count", &ScenarioConfig::path_count);
    real("channel.rician_k_db", &ScenarioConfig::rician_k_db);
    real("channel.spacing_wavelengths", &ScenarioConfig::spacing_wavelengths);
    real("channel.max_angle_deg", &ScenarioConfig::max_angle_deg);
    real("channel.max_delay_samples", &ScenarioConfig::max_delay_samples);

    real("link.noise_dbm", &ScenarioConfig::noise_dbm);
    flag("link.noiseless", &ScenarioConfig::noiseless);
    real("link.sinr_cap_db", &ScenarioConfig::sinr_cap_db);
    real("link.acpr_penalty_db", &ScenarioConfig::acpr_penalty_db);
    t.push_back({"link.mcs_table", [](ScenarioConfig& c, const std::string& v) { c.mcs_table = detail::trim(v); },
                 [](const ScenarioConfig& c) { return c.mcs_table; }});

    power_real("power.pa_efficiency", &power::PowerModelParams::pa_efficiency);
    power_real("power.max_eirp_dbm", &power::PowerModelParams::max_eirp_dbm);
    power_real("power.baseband_power_per_chain_w", &power::PowerModelParams::baseband_power_per_chain_w);
    power_real("power.gflops_per_chain", &power::PowerModelParams::gflops_per_chain);
    t.push_back({"power.antenna_power_mode",
                 [](ScenarioConfig& c, const std::string& v) {
                   const std::string s = detail::trim(v);
                   if (s == "fixed") c.power.antenna_power_mode = link::AntennaPowerMode::FixedPerAntenna;
                   else if (s == "cap_limited") c.power.antenna_power_mode = link::AntennaPowerMode::CapLimited;
                   else throw ConfigError("power.antenna_power_mode", "expected fixed or cap_limited, got '" + v + "'");
                 },
                 [](const ScenarioConfig& c) {
                   return std::string(c.power.antenna_power_mode == link::AntennaPowerMode::CapLimited ? "cap_limited"
                                                                                                      : "fixed");
                 }});

    flag("frontend.compensate_spreading", &ScenarioConfig::compensate_spreading);
    flag("frontend.precompensate", &ScenarioConfig::precompensate);
    count("frontend.oversample", &ScenarioConfig::oversample);
    t.push_back({"frontend.muting_policy",
                 [](ScenarioConfig& c, const std::string& v) {
                   const std::string s = detail::trim(v);
                   if (s == "highest_index") c.muting_policy = precoding::MutingPolicy::HighestIndex;
                   else if (s == "random") c.muting_policy = precoding::MutingPolicy::Random;
                   else throw ConfigError("frontend.muting_policy", "expected highest_index or random, got '" + v + "'");
                 },
                 [](const ScenarioConfig& c) {
                   return std::string(c.muting_policy == precoding::MutingPolicy::Random ? "random" : "highest_index");
                 }});
    return t;
  }();
  return table;
}

inline const Field* find_field(const std::string& key) {
  for (const Field& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

inline void set_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError(key, "unknown configuration key");
  f->set(cfg, value);
}

/// "section.key=value" -> (key, value).
inline std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError(text, "override must look like section.key=value");
  return {detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1))};
}

/// Module invariants, checked before anything runs.
inline void validate(const ScenarioConfig& c) {
  const auto fail = [](const std::string& field, const std::string& msg) { throw ConfigError(field, msg); };
  if (c.architectures.empty()) fail("scenario.architectures", "at least one architecture is required");
  if (c.antennas < 1) fail("scenario.antennas", "must be >= 1");
  if (c.users < 1) fail("scenario.users", "must be >= 1");
  if (c.chains < 1 || c.chains > c.antennas) fail("scenario.chains", "must lie in [1, antennas]");
  if (c.subcarriers < 1) fail("scenario.subcarriers", "must be >= 1");
  if (c.ofdm_symbols < 1) fail("scenario.ofdm_symbols", "must be >= 1");
  if (!waveform::is_supported_order(c.modulation_order))
    fail("scenario.modulation_order", "must be one of 4, 16, 64, 256");
  if (!(c.bandwidth_hz > 0.0)) fail("scenario.bandwidth_hz", "must be > 0");
  if (!(c.center_hz > 0.0)) fail("scenario.center_hz", "must be > 0");
  if (c.repetitions < 1) fail("scenario.repetitions", "must be >= 1");

  for (ArchitectureKind kind : c.architectures) {
    const auto arch = c.architecture(kind);
    const std::string name(precoding::to_string(kind));
    if (kind == ArchitectureKind::Analog && c.users != 1) fail("scenario.users", "Analog serves exactly one user");
    if (c.users > arch.streams())
      fail("scenario.users", "K = " + std::to_string(c.users) + " exceeds the " + std::to_string(arch.streams()) +
                                 " streams of " + name + " (zero forcing needs K <= chains)");
  }

  if (c.channel_source == ChannelSource::File && c.cfr_path.empty())
    fail("channel.cfr_path", "required when channel.source = file");
  if (!(c.min_distance_m > 0.0)) fail("channel.min_distance_m", "must be > 0");
  if (!(c.distance_m >= c.min_distance_m)) fail("channel.distance_m", "must be >= channel.min_distance_m");
  if (!(c.pathloss_exponent > 0.0)) fail("channel.pathloss_exponent", "must be > 0");
  if (c.path_count < 1) fail("channel.path_count", "must be >= 1");
  if (!(c.spacing_wavelengths > 0.0)) fail("channel.spacing_wavelengths", "must be > 0");
  if (!(c.max_angle_deg >= 0.0 && c.max_angle_deg <= 90.0)) fail("channel.max_angle_deg", "must lie in [0, 90]");
  if (!(c.max_delay_samples >= 0.0)) fail("channel.max_delay_samples", "must be >= 0");

  if (!(c.sinr_cap_db > 0.0)) fail("link.sinr_cap_db", "must be > 0");
  if (!(c.acpr_penalty_db >= 0.0)) fail("link.acpr_penalty_db", "must be >= 0");
  if (c.mcs_table.empty()) fail("link.mcs_table", "use 'default' or a CSV path");

  if (!(c.power.pa_efficiency > 0.0 && c.power.pa_efficiency <= 1.0))
    fail("power.pa_efficiency", "must lie in (0, 1]");
  if (!(c.power.baseband_power_per_chain_w > 0.0)) fail("power.baseband_power_per_chain_w", "must be > 0");
  if (!(c.power.gflops_per_chain > 0.0)) fail("power.gflops_per_chain", "must be > 0");

  if (c.oversample < 8) fail("frontend.oversample", "must be >= 8");
}

/// INI text -> config. Trailing " #" / " ;" comments are allowed.
inline ScenarioConfig parse_ini(std::istream& in, const std::vector<std::string>& overrides = {}) {
  std::stringstream cleaned;
  std::string line;
  while (std::getline(in, line)) {
    for (const char* marker : {" #", "\t#", " ;", "\t;"}) {
      const auto pos = line.find(marker);
      if (pos != std::string::npos) line.erase(pos);
    }
    cleaned << line << '\n';
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(cleaned, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("<file>", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  ScenarioConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section, "keys must live inside a [section]");
    for (const auto& [key, value] : body) set_value(cfg, section + "." + key, value.data());
  }
  for (const std::string& o : overrides) {
    const auto [key, value] = split_assignment(o);
    set_value(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

inline ScenarioConfig load_ini(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  return parse_ini(in, overrides);
}

/// Every key in registry order, "key=value" per line.
inline std::string canonical(const ScenarioConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) out += f.key + "=" + f.get(cfg) + "\n";
  return out;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const ScenarioConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical(cfg))));
  return buf;
}

}  // namespace phasemo::config

#endif  // PHASEMO_CONFIG_HPP
