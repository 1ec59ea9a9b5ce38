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

#ifndef PHASEMO_SIMULATION_HPP
#define PHASEMO_SIMULATION_HPP

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "phasemo/cfr_io.hpp"
#include "phasemo/channel.hpp"
#include "phasemo/config.hpp"
#include "phasemo/frontend.hpp"
#include "phasemo/link.hpp"
#include "phasemo/oracle.hpp"
#include "phasemo/power.hpp"
#include "phasemo/precoding.hpp"
#include "phasemo/rng.hpp"
#include "phasemo/waveform.hpp"

namespace phasemo::sim {

using config::ScenarioConfig;
using precoding::ArchitectureKind;

inline constexpr const char* kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Worker pool

/// hardware_concurrency, capped by PHASEMO_THREADS when set to a positive integer.
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PHASEMO_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap > 0) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, count). The first exception (lowest index) is rethrown.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         std::size_t workers = worker_count()) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::min(workers, count);
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Single link evaluation

struct ResultRow {
  std::size_t point = 0;
  std::string param;
  std::string value;
  std::size_t repetition = 0;
  ArchitectureKind architecture = ArchitectureKind::PhaseMO;
  std::size_t antennas = 0;
  std::size_t users = 0;
  std::size_t baseband_chains = 0;
  std::size_t active_antennas = 0;
  link::LinkResult link;
  double eirp_dbm = 0.0;
  power::PowerReport power;
};

/// Stream tags for derive_seed.
enum SeedTag : std::uint64_t { kDropTag = 1, kSymbolTag = 2, kNoiseTag = 3, kBeamformerTag = 4, kOracleTag = 5 };

inline std::uint64_t drop_seed(const ScenarioConfig& cfg, std::size_t rep) {
  return derive_seed(cfg.seed, {kDropTag, rep});
}

/// Synthetic drop for a repetition, or the file channel (same for every repetition).
inline channel::ChannelFrequencyResponse channel_for(const ScenarioConfig& cfg, std::size_t rep,
                                                     const channel::ChannelFrequencyResponse* file_channel) {
  if (cfg.channel_source == config::ChannelSource::File) return *file_channel;
  return channel::synthesize_channel(cfg.geometry(drop_seed(cfg, rep)));
}

inline channel::ChannelFrequencyResponse load_file_channel(const ScenarioConfig& cfg) {
  channel::ChannelFrequencyResponse h;
  try {
    h = channel::load_cfr(cfg.cfr_path);
  } catch (const Error& e) {
    throw ConfigError("channel.cfr_path", e.what());
  }
  if (h.users() != cfg.users || h.antennas() != cfg.antennas || h.subcarriers() != cfg.subcarriers)
    throw ConfigError("channel.cfr_path", "file is K=" + std::to_string(h.users()) + " N=" +
                                              std::to_string(h.antennas()) + " S=" + std::to_string(h.subcarriers()) +
                                              ", config expects K=" + std::to_string(cfg.users) +
                                              " N=" + std::to_string(cfg.antennas) +
                                              " S=" + std::to_string(cfg.subcarriers));
  return h;
}

inline link::McsTable load_table(const ScenarioConfig& cfg) {
  if (cfg.mcs_table == "default") return link::default_mcs_table();
  try {
    return link::load_mcs_table(cfg.mcs_table);
  } catch (const Error& e) {
    throw ConfigError("link.mcs_table", e.what());
  }
}

/// g_pa * g * diag(H Phi Gamma) per subcarrier: what each user's receiver divides by.
inline std::vector<ComplexVector> effective_user_gains(const channel::ChannelFrequencyResponse& h,
                                                       const precoding::AnalogPhaseMatrix& phi,
                                                       const precoding::DigitalPrecoder& gamma, double amplitude) {
  const ComplexMatrix p = phi.matrix();
  std::vector<ComplexVector> out;
  out.reserve(h.subcarriers());
  for (std::size_t s = 0; s < h.subcarriers(); ++s) {
    const ComplexMatrix hp = h.matrix(s) * p;
    const ComplexMatrix e = hp * gamma.per_subcarrier[s];
    out.push_back(amplitude * e.diagonal());
  }
  return out;
}

/// One architecture, one repetition: design, emit, transmit, measure, account power.
inline ResultRow run_single(const ScenarioConfig& cfg, ArchitectureKind kind, std::size_t rep,
                            const channel::ChannelFrequencyResponse& h, const link::McsTable& table) {
  const auto arch = cfg.architecture(kind);
  SeededRng bf_rng(derive_seed(cfg.seed, {kBeamformerTag, rep, static_cast<std::uint64_t>(kind)}));
  SeededRng sym_rng(derive_seed(cfg.seed, {kSymbolTag, rep}));
  SeededRng noise_rng(derive_seed(cfg.seed, {kNoiseTag, rep}));

  const auto design = precoding::design_beamformer(arch, h, bf_rng, cfg.muting_policy);
  const auto x = waveform::random_user_symbols(static_cast<Eigen::Index>(cfg.users), cfg.subcarriers,
                                               static_cast<Eigen::Index>(cfg.ofdm_symbols), cfg.modulation_order,
                                               sym_rng);
  const frontend::EmitOptions opts{true, cfg.compensate_spreading};
  const auto y = frontend::matrix_model_emit(arch, design.analog, design.digital, x, opts);

  link::TransmitParams tx;
  tx.noise_dbm = cfg.noise_dbm;
  tx.eirp_cap_dbm = cfg.power.max_eirp_dbm;
  tx.active_antennas = arch.radiating_antennas();
  tx.array_size = cfg.antennas;
  tx.power_mode = cfg.power.antenna_power_mode;
  tx.noiseless = cfg.noiseless;
  const auto rx = link::transmit_receive(y, h, tx, noise_rng);

  const double amplitude = rx.pa_gain * frontend::spreading_gain(arch, opts);
  const auto gains = effective_user_gains(h, design.analog, design.digital, amplitude);
  link::MeasureParams mp;
  mp.bandwidth_hz = cfg.bandwidth_hz;
  mp.sinr_cap_db = cfg.sinr_cap_db;
  mp.sinr_penalty_db = kind == ArchitectureKind::PhaseMO ? cfg.acpr_penalty_db : 0.0;

  ResultRow row;
  row.repetition = rep;
  row.architecture = kind;
  row.antennas = cfg.antennas;
  row.users = cfg.users;
  row.baseband_chains = arch.baseband_chains();
  row.active_antennas = arch.radiating_antennas();
  row.link = link::measure_link(rx, gains, x, table, mp);
  row.eirp_dbm = rx.eirp_dbm;
  row.power = power::power_report(row.active_antennas, cfg.antennas, row.baseband_chains,
                                  row.link.net_throughput_bps, cfg.power);
  return row;
}

// ---------------------------------------------------------------------------
// Runs and sweeps

struct RunPoint {
  std::string param;
  std::string value;
  ScenarioConfig cfg;
};

/// Evaluates every (point, repetition, architecture); rows come back in that
/// order whatever the thread count.
inline std::vector<ResultRow> execute(const std::vector<RunPoint>& points) {
  struct Task {
    std::size_t point;
    std::size_t rep;
    std::size_t arch;
  };
  std::vector<Task> tasks;
  std::vector<link::McsTable> tables;
  std::vector<std::optional<channel::ChannelFrequencyResponse>> files;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const ScenarioConfig& cfg = points[p].cfg;
    config::validate(cfg);
    tables.push_back(load_table(cfg));
    files.emplace_back(cfg.channel_source == config::ChannelSource::File
                           ? std::optional<channel::ChannelFrequencyResponse>(load_file_channel(cfg))
                           : std::nullopt);
    for (std::size_t r = 0; r < cfg.repetitions; ++r)
      for (std::size_t a = 0; a < cfg.architectures.size(); ++a) tasks.push_back({p, r, a});
  }
  std::vector<ResultRow> rows(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const Task& t = tasks[i];
    const ScenarioConfig& cfg = points[t.point].cfg;
    const auto h = channel_for(cfg, t.rep, files[t.point] ? &*files[t.point] : nullptr);
    ResultRow row = run_single(cfg, cfg.architectures[t.arch], t.rep, h, tables[t.point]);
    row.point = t.point;
    row.param = points[t.point].param;
    row.value = points[t.point].value;
    rows[i] = std::move(row);
  });
  return rows;
}

inline std::vector<ResultRow> run(const ScenarioConfig& cfg) { return execute({RunPoint{"", "", cfg}}); }

/// Short sweep names; any full config key is accepted too.
inline std::string sweep_key(const std::string& param) {
  if (param == "V" || param == "chains" || param == "active_antennas") return "scenario.chains";
  if (param == "users" || param == "K") return "scenario.users";
  if (param == "distance") return "channel.distance_m";
  if (config::find_field(param)) return param;
  throw ConfigError("--param", "unknown sweep parameter '" + param + "'");
}

inline std::vector<RunPoint> sweep_points(const ScenarioConfig& base, const std::string& param,
                                          const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("--values", "at least one value is required");
  const std::string key = sweep_key(param);
  std::vector<RunPoint> points;
  for (const std::string& v : values) {
    ScenarioConfig cfg = base;
    config::set_value(cfg, key, v);
    config::validate(cfg);
    points.push_back({param, v, std::move(cfg)});
  }
  return points;
}

inline std::vector<ResultRow> sweep(const ScenarioConfig& base, const std::string& param,
                                    const std::vector<std::string>& values) {
  return execute(sweep_points(base, param, values));
}

// ---------------------------------------------------------------------------
// CSV

inline const char* kCsvColumns =
    "point,param,value,repetition,architecture,antennas,users,baseband_chains,active_antennas,"
    "mean_sinr_db,min_sinr_db,sum_se_bps_hz,net_throughput_bps,eirp_dbm,pa_power_w,baseband_power_w,"
    "total_power_w,energy_efficiency_bits_per_j";

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// '#'-prefixed run metadata: seed, config hash, conventions, full config.
inline void write_metadata(std::ostream& out, const ScenarioConfig& cfg, const std::string& command) {
  const bool cap_limited = cfg.power.antenna_power_mode == link::AntennaPowerMode::CapLimited;
  out << "# phasemo-sim " << kVersion << "\n";
  out << "# command: " << command << "\n";
  out << "# seed: " << cfg.seed << "\n";
  out << "# config_hash: fnv1a64:" << config::config_hash(cfg) << "\n";
  out << "# convention.fft: unitary (1/sqrt(L) both directions)\n";
  out << "# convention.subcarrier_order: dc-centred, index s at offset s - floor(S/2)\n";
  out << "# convention.analog_phases: -arg(H) of user v mod K at the centre subcarrier\n";
  out << "# convention.stream_map: stream v serves user v mod K\n";
  out << "# convention.zf_normalization: per-subcarrier Frobenius norm = 1\n";
  out << "# convention.phasemo_gain: " << (cfg.compensate_spreading ? "1 (spreading compensated)" : "1/V") << "\n";
  out << "# convention.eirp: max per-antenna mean conducted power + 20log10(active antennas)\n";
  out << "# convention.antenna_power: "
      << (cap_limited ? "cap_limited (max_eirp - 20log10(active))" : "fixed (max_eirp - 20log10(array))") << "\n";
  out << "# convention.pa_power: active * per-antenna power / pa_efficiency\n";
  out << "# convention.noise: complex AWGN per user per subcarrier sample\n";
  out << "# convention.receiver: divide by known end-to-end gain, EVM over all subcarriers and symbols\n";
  out << "# convention.sinr: 10log10(1/EVM^2) capped at link.sinr_cap_db\n";
  out << "# convention.mcs: highest row with threshold <= SINR - penalty; table=" << cfg.mcs_table << "\n";
  out << "# convention.acpr_penalty: PhaseMO rows only\n";
  out << "# convention.muting: "
      << (cfg.muting_policy == precoding::MutingPolicy::Random ? "random" : "highest_index") << "\n";
  const std::string canon = config::canonical(cfg);
  std::size_t start = 0;
  while (start < canon.size()) {
    const auto nl = canon.find('\n', start);
    out << "# config." << canon.substr(start, nl - start) << "\n";
    start = nl + 1;
  }
}

inline void write_rows(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kCsvColumns << "\n";
  for (const ResultRow& r : rows) {
    const auto& s = r.link.per_user_sinr_db;
    out << r.point << ',' << r.param << ',' << r.value << ',' << r.repetition << ','
        << precoding::to_string(r.architecture) << ',' << r.antennas << ',' << r.users << ',' << r.baseband_chains
        << ',' << r.active_antennas << ',' << fmt(r.link.mean_sinr_db()) << ','
        << fmt(s.empty() ? 0.0 : *std::min_element(s.begin(), s.end())) << ',' << fmt(r.link.sum_se()) << ','
        << fmt(r.link.net_throughput_bps) << ',' << fmt(r.eirp_dbm) << ',' << fmt(r.power.pa_power_w) << ','
        << fmt(r.power.baseband_power_w) << ',' << fmt(r.power.total_w) << ','
        << fmt(r.power.energy_efficiency_bits_per_j) << "\n";
  }
}

inline void write_csv(std::ostream& out, const ScenarioConfig& cfg, const std::string& command,
                      const std::vector<ResultRow>& rows) {
  write_metadata(out, cfg, command);
  write_rows(out, rows);
}

// ---------------------------------------------------------------------------
// Oracle check

inline constexpr double kOracleErrorThreshold = 1e-3;
inline constexpr double kOracleOobThresholdDb = -120.0;

struct OracleTrial {
  std::size_t repetition = 0;
  double error_exact = 0.0;  ///< relative RMS, exact hold equalizer
  double error_sinc = 0.0;   ///< relative RMS, continuous-ZOH equalizer
  double oob_db = 0.0;       ///< worst antenna, out-of-band / in-band
};

struct OracleReport {
  std::size_t antennas = 0;
  std::size_t chains = 0;
  std::size_t users = 0;
  std::size_t oversample = 0;
  bool precompensated = true;
  std::vector<OracleTrial> trials;

  double max_error() const {
    double m = 0.0;
    for (const auto& t : trials) m = std::max(m, t.error_exact);
    return m;
  }
  double max_oob_db() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& t : trials) m = std::max(m, t.oob_db);
    return m;
  }
  bool pass() const { return max_error() < kOracleErrorThreshold && max_oob_db() < kOracleOobThresholdDb; }
};

/// Matrix path vs. the sample-level PhaseMO chain, one OFDM symbol per repetition.
inline OracleTrial oracle_trial(const ScenarioConfig& cfg, std::size_t rep) {
  const auto arch = cfg.architecture(ArchitectureKind::PhaseMO);
  const auto h = channel::synthesize_channel(cfg.geometry(drop_seed(cfg, rep)));
  SeededRng rng(derive_seed(cfg.seed, {kOracleTag, rep}));
  const auto design = precoding::design_beamformer(arch, h, rng, cfg.muting_policy);
  const auto x = waveform::random_user_symbols(static_cast<Eigen::Index>(cfg.users), cfg.subcarriers, 1,
                                               cfg.modulation_order, rng);
  const auto matrix = frontend::matrix_model_emit(arch, design.analog, design.digital, x);
  frontend::OracleConfig oc;
  oc.base_rate_hz = cfg.bandwidth_hz;
  oc.oversample = cfg.oversample;
  oc.precompensate = cfg.precompensate;
  const auto wave = frontend::time_domain_emit(design.analog, design.digital, x, oc);
  const auto reference = frontend::flatten(matrix);

  OracleTrial t;
  t.repetition = rep;
  t.error_exact = relative_rms_error(frontend::flatten(frontend::inband_subcarriers(wave)), reference);
  t.error_sinc =
      relative_rms_error(frontend::flatten(frontend::inband_subcarriers(wave, frontend::HoldEqualizer::Sinc)), reference);
  t.oob_db = -std::numeric_limits<double>::infinity();
  for (const auto& sig : wave.per_antenna) t.oob_db = std::max(t.oob_db, frontend::out_of_band_db(sig, cfg.bandwidth_hz));
  return t;
}

inline OracleReport oracle_check(const ScenarioConfig& cfg) {
  if (cfg.architectures.size() != 1 || cfg.architectures.front() != ArchitectureKind::PhaseMO)
    throw ConfigError("scenario.architectures", "oracle-check models the PhaseMO chain only");
  if (cfg.channel_source != config::ChannelSource::Synthetic)
    throw ConfigError("channel.source", "oracle-check uses synthetic drops");
  config::validate(cfg);
  OracleReport report;
  report.antennas = cfg.antennas;
  report.chains = cfg.chains;
  report.users = cfg.users;
  report.oversample = cfg.oversample;
  report.precompensated = cfg.precompensate;
  report.trials.resize(cfg.repetitions);
  parallel_for(cfg.repetitions, [&](std::size_t r) { report.trials[r] = oracle_trial(cfg, r); });
  return report;
}

}  // namespace phasemo::sim

#endif  // PHASEMO_SIMULATION_HPP
