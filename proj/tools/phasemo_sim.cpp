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

// phasemo-sim: scenario runs, parameter sweeps, oracle checks and channel
// file utilities. Exit codes: 0 ok, 1 configuration or input error,
// 2 oracle check failed, 3 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "phasemo.hpp"

namespace {

using namespace phasemo;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitOracle = 2;
constexpr int kExitRuntime = 3;

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(config::detail::trim(item));
  return out;
}

/// Writes to `path`, or stdout for "-".
void emit(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("--out", "cannot write " + path);
  out << text;
}

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string out = "-";
  std::string param;
  std::string values;
  std::string cfr_in;
  std::string cfr_out;
  double cfr_center_hz = 4.2e9;
  double cfr_spacing_hz = 100e6 / 64.0;
  std::size_t repetition = 0;
};

config::ScenarioConfig load(const Options& o) {
  if (o.config.empty()) {
    std::istringstream empty;
    return config::parse_ini(empty, o.overrides);
  }
  return config::load_ini(o.config, o.overrides);
}

std::string command_line(const std::string& name, const Options& o, const std::string& extra = {}) {
  std::string cmd = name;
  if (!extra.empty()) cmd += " " + extra;
  if (!o.overrides.empty()) cmd += " set=" + join(o.overrides, ";");
  return cmd;
}

int cmd_run(const Options& o) {
  const auto cfg = load(o);
  const auto rows = sim::run(cfg);
  std::ostringstream csv;
  sim::write_csv(csv, cfg, command_line("run", o), rows);
  emit(o.out, csv.str());
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  const auto cfg = load(o);
  const auto values = split_values(o.values);
  const auto rows = sim::sweep(cfg, o.param, values);
  std::ostringstream csv;
  sim::write_csv(csv, cfg, command_line("sweep", o, "param=" + o.param + " values=" + join(values, ",")), rows);
  emit(o.out, csv.str());
  return kExitOk;
}

int cmd_oracle(const Options& o) {
  const auto cfg = load(o);
  const auto report = sim::oracle_check(cfg);
  std::printf("oracle-check N=%zu V=%zu K=%zu L=%zu precompensate=%s\n", report.antennas, report.chains,
              report.users, report.oversample, report.precompensated ? "true" : "false");
  std::printf("%-5s %-14s %-14s %-10s\n", "rep", "rel_err_exact", "rel_err_sinc", "oob_db");
  for (const auto& t : report.trials)
    std::printf("%-5zu %-14.6e %-14.6e %-10.2f\n", t.repetition, t.error_exact, t.error_sinc, t.oob_db);
  std::printf("max rel_err %.6e (threshold %.0e), max out-of-band %.2f dB (threshold %.0f dB): %s\n",
              report.max_error(), sim::kOracleErrorThreshold, report.max_oob_db(), sim::kOracleOobThresholdDb,
              report.pass() ? "PASS" : "FAIL");
  return report.pass() ? kExitOk : kExitOracle;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

channel::ChannelFrequencyResponse read_any(const Options& o) {
  if (ends_with(o.cfr_in, ".csv")) {
    std::ifstream in(o.cfr_in);
    if (!in) throw ConfigError("<input>", "cannot open " + o.cfr_in);
    return channel::read_cfr_csv(in, o.cfr_center_hz, o.cfr_spacing_hz, "converted from " + o.cfr_in);
  }
  return channel::load_cfr(o.cfr_in);
}

int cmd_cfr_inspect(const Options& o) {
  const auto h = read_any(o);
  std::printf("users %zu\nantennas %zu\nsubcarriers %zu\ncenter_hz %.17g\nspacing_hz %.17g\n", h.users(),
              h.antennas(), h.subcarriers(), h.center_frequency_hz(), h.subcarrier_spacing_hz());
  std::printf("mean_power %.6e\nfinite %s\nmeta %s\n", h.mean_power(), h.all_finite() ? "true" : "false",
              h.meta().c_str());
  return kExitOk;
}

int cmd_cfr_convert(const Options& o) {
  const auto h = read_any(o);
  if (ends_with(o.cfr_out, ".csv")) {
    std::ostringstream csv;
    channel::write_cfr_csv(csv, h);
    emit(o.cfr_out, csv.str());
  } else {
    channel::save_cfr(h, o.cfr_out);
  }
  return kExitOk;
}

int cmd_cfr_synth(const Options& o) {
  const auto cfg = load(o);
  const auto h = channel::synthesize_channel(cfg.geometry(sim::drop_seed(cfg, o.repetition)));
  channel::save_cfr(h, o.cfr_out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PhaseMO massive-MIMO downlink link-level simulator"};
  app.set_version_flag("--version", std::string(sim::kVersion));
  app.require_subcommand(1);
  Options o;

  auto add_config = [&o](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--config,-c", o.config, "Scenario INI file")->check(CLI::ExistingFile);
    if (required) opt->required();
    sub->add_option("--set,-s", o.overrides, "Override, section.key=value (repeatable)");
  };

  auto* run = app.add_subcommand("run", "One CSV row per (repetition, architecture)");
  add_config(run, true);
  run->add_option("--out,-o", o.out, "Output CSV ('-' for stdout)");

  auto* sweep = app.add_subcommand("sweep", "Cross-product of a swept parameter with repetitions");
  add_config(sweep, false);
  sweep->add_option("--param,-p", o.param, "V | chains | active_antennas | users | distance | section.key")
      ->required();
  sweep->add_option("--values", o.values, "Comma separated values")->required();
  sweep->add_option("--out,-o", o.out, "Output CSV ('-' for stdout)");

  auto* oracle = app.add_subcommand("oracle-check", "Compare the matrix model with the sample-level chain");
  add_config(oracle, true);

  auto* cfr = app.add_subcommand("cfr", "Inspect, convert or synthesize channel files");
  cfr->require_subcommand(1);
  auto* inspect = cfr->add_subcommand("inspect", "Print the header and summary of a channel file");
  inspect->add_option("file", o.cfr_in, "Binary .cfr or long-format .csv")->required()->check(CLI::ExistingFile);
  auto* convert = cfr->add_subcommand("convert", "Convert between binary .cfr and long-format .csv");
  convert->add_option("input", o.cfr_in)->required()->check(CLI::ExistingFile);
  convert->add_option("output", o.cfr_out)->required();
  for (auto* sub : {inspect, convert}) {
    sub->add_option("--center-hz", o.cfr_center_hz, "Carrier for .csv input");
    sub->add_option("--spacing-hz", o.cfr_spacing_hz, "Subcarrier spacing for .csv input");
  }
  auto* synth = cfr->add_subcommand("synth", "Write the synthetic drop of a scenario to a .cfr file");
  add_config(synth, false);
  synth->add_option("--repetition,-r", o.repetition, "Drop index");
  synth->add_option("--out,-o", o.cfr_out, "Output .cfr")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*oracle) return cmd_oracle(o);
    if (*inspect) return cmd_cfr_inspect(o);
    if (*convert) return cmd_cfr_convert(o);
    if (*synth) return cmd_cfr_synth(o);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool input = e.code() == ErrorCode::FormatError || e.code() == ErrorCode::TruncatedPayload ||
                       e.code() == ErrorCode::IoError;
    return input ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
