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

#ifndef PHASEMO_LINK_HPP
#define PHASEMO_LINK_HPP

// Downlink measurement chain: PA scaling under the EIRP cap, channel, AWGN,
// genie-equalized EVM, SINR = 1/EVM^2, MCS lookup and net throughput.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "phasemo/channel.hpp"
#include "phasemo/core.hpp"
#include "phasemo/frontend.hpp"
#include "phasemo/rng.hpp"
#include "phasemo/waveform.hpp"

namespace phasemo::link {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Coherent array gain of n radiating antennas, in dB.
inline double array_gain_db(std::size_t n) { return 20.0 * std::log10(static_cast<double>(n)); }

struct McsRow {
  double sinr_threshold_db;
  double spectral_efficiency;
};

class McsTable {
 public:
  explicit McsTable(std::vector<McsRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw Error(ErrorCode::InvalidArgument, "MCS table needs at least one row");
    for (std::size_t i = 1; i < rows_.size(); ++i)
      if (!(rows_[i].sinr_threshold_db > rows_[i - 1].sinr_threshold_db) ||
          !(rows_[i].spectral_efficiency > rows_[i - 1].spectral_efficiency))
        throw Error(ErrorCode::InvalidArgument, "MCS table rows must be strictly increasing");
  }

  const std::vector<McsRow>& rows() const { return rows_; }
  double max_efficiency() const { return rows_.back().spectral_efficiency; }

 private:
  std::vector<McsRow> rows_;
};

/// NR CQI table (256QAM) efficiencies with commonly used SINR switching
/// points. Configuration, overridable with a CSV file.
inline McsTable default_mcs_table() {
  return McsTable({{-6.7, 0.1523}, {-4.7, 0.3770}, {-2.3, 0.8770}, {0.2, 1.4766}, {2.4, 1.9141},
                   {4.3, 2.4063},  {5.9, 2.7305},  {8.1, 3.3223},  {10.3, 3.9023}, {11.7, 4.5234},
                   {14.1, 5.1152}, {16.3, 5.5547}, {18.7, 6.2266}, {21.0, 6.9141}, {22.7, 7.4063}});
}

inline McsTable read_mcs_table(std::istream& in) {
  std::string line;
  while (std::getline(in, line) && (line.empty() || line[0] == '#')) {
  }
  if (!in || line.rfind("sinr_db,se_bps_hz", 0) != 0)
    throw Error(ErrorCode::FormatError, "MCS table CSV needs header sinr_db,se_bps_hz");
  std::vector<McsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    McsRow r{};
    char comma = 0;
    if (!(ls >> r.sinr_threshold_db >> comma >> r.spectral_efficiency) || comma != ',')
      throw Error(ErrorCode::FormatError, "bad MCS row: " + line);
    rows.push_back(r);
  }
  return McsTable(std::move(rows));
}

inline McsTable load_mcs_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open MCS table " + path);
  return read_mcs_table(in);
}

inline constexpr double kDefaultSinrCapDb = 40.0;

/// 10 log10(1 / evm^2), capped; evm == 0 returns the cap.
inline double sinr_from_evm(double evm, double cap_db = kDefaultSinrCapDb) {
  if (evm < 0.0 || !std::isfinite(evm)) throw Error(ErrorCode::InvalidArgument, "EVM must be finite and >= 0");
  if (evm == 0.0) return cap_db;
  return std::min(cap_db, -20.0 * std::log10(evm));
}

/// Efficiency of the highest row with threshold <= sinr; 0 below the first row.
inline double mcs_map(double sinr_db, const McsTable& table) {
  double se = 0.0;
  for (const McsRow& r : table.rows()) {
    if (r.sinr_threshold_db <= sinr_db) se = r.spectral_efficiency;
    else break;
  }
  return se;
}

inline double net_throughput(std::span<const double> se, double bandwidth_hz) {
  for (double v : se)
    if (v < 0.0) throw Error(ErrorCode::InvalidArgument, "spectral efficiency must be >= 0");
  return bandwidth_hz * std::accumulate(se.begin(), se.end(), 0.0);
}

enum class AntennaPowerMode {
  /// Each PA runs at (cap - 20 log10 N_array): muting antennas lowers EIRP.
  FixedPerAntenna,
  /// PAs are re-driven so the active array reaches the cap: cap - 20 log10 N_active.
  CapLimited,
};

/// Per-antenna conducted power budget in dBm.
inline double per_antenna_budget_dbm(double eirp_cap_dbm, std::size_t active, std::size_t array_size,
                                     AntennaPowerMode mode) {
  const std::size_t ref = mode == AntennaPowerMode::CapLimited ? active : array_size;
  return eirp_cap_dbm - array_gain_db(ref);
}

struct TransmitParams {
  double noise_dbm = -100.0;
  double eirp_cap_dbm = 77.0;
  std::size_t active_antennas = 0;  ///< radiating antennas; 0 = every row of Y
  std::size_t array_size = 0;       ///< physical array; 0 = every row of Y
  AntennaPowerMode power_mode = AntennaPowerMode::CapLimited;
  bool noiseless = false;
};

struct Reception {
  std::vector<ComplexMatrix> per_subcarrier;  ///< K x T
  double pa_gain = 0.0;                       ///< amplitude g_pa
  double max_antenna_power_w = 0.0;           ///< after g_pa
  double eirp_dbm = -INFINITY;
};

/// X_hat(s) = H(s) * (g_pa Y(s)) + n. g_pa is the largest gain keeping the
/// hottest antenna at its budget, so EIRP = P_max + 20 log10(N_active) <= cap.
inline Reception transmit_receive(const frontend::AntennaSignals& y, const channel::ChannelFrequencyResponse& h,
                                  const TransmitParams& params, SeededRng& noise_rng) {
  if (y.subcarriers() != h.subcarriers() || static_cast<std::size_t>(y.antennas()) != h.antennas())
    throw Error(ErrorCode::InvalidSpec, "antenna signals do not match the channel dimensions");
  const std::size_t array = params.array_size ? params.array_size : h.antennas();
  const std::size_t active = params.active_antennas ? params.active_antennas : h.antennas();
  const double budget_w = dbm_to_watts(per_antenna_budget_dbm(params.eirp_cap_dbm, active, array, params.power_mode));

  Reception r;
  const double p_max = y.antenna_power().maxCoeff();
  r.pa_gain = p_max > 0.0 ? std::sqrt(budget_w / p_max) : 0.0;
  r.max_antenna_power_w = p_max * r.pa_gain * r.pa_gain;
  if (r.max_antenna_power_w > 0.0) r.eirp_dbm = watts_to_dbm(r.max_antenna_power_w) + array_gain_db(active);

  const double noise_var = params.noiseless ? 0.0 : dbm_to_watts(params.noise_dbm);
  r.per_subcarrier.reserve(h.subcarriers());
  for (std::size_t s = 0; s < h.subcarriers(); ++s) {
    ComplexMatrix xs = r.pa_gain * (h.matrix(s) * y.per_subcarrier[s]);
    if (noise_var > 0.0)
      for (Eigen::Index i = 0; i < xs.size(); ++i) xs.data()[i] += noise_rng.complex_normal(noise_var);
    r.per_subcarrier.push_back(std::move(xs));
  }
  return r;
}

struct LinkResult {
  std::vector<double> per_user_evm;
  std::vector<double> per_user_sinr_db;  ///< measured, before any penalty
  std::vector<double> per_user_se;
  double net_throughput_bps = 0.0;
  double bandwidth_hz = 0.0;
  double sinr_penalty_db = 0.0;

  double sum_se() const { return std::accumulate(per_user_se.begin(), per_user_se.end(), 0.0); }
  double mean_sinr_db() const {
    return per_user_sinr_db.empty() ? 0.0
                                    : std::accumulate(per_user_sinr_db.begin(), per_user_sinr_db.end(), 0.0) /
                                          static_cast<double>(per_user_sinr_db.size());
  }
};

struct MeasureParams {
  double bandwidth_hz = 100e6;
  double sinr_cap_db = kDefaultSinrCapDb;
  double sinr_penalty_db = 0.0;  ///< subtracted before the MCS lookup
};

/// Divides user k's symbol on subcarrier s by the known end-to-end gain
/// gains[s](k) (perfect CSI), then measures EVM against the sent symbols.
inline LinkResult measure_link(const Reception& rx, const std::vector<ComplexVector>& gains,
                               const waveform::UserSymbols& sent, const McsTable& table, const MeasureParams& params) {
  if (rx.per_subcarrier.size() != sent.subcarriers() || gains.size() != sent.subcarriers())
    throw Error(ErrorCode::InvalidLength, "received, gains and reference disagree on subcarrier count");
  LinkResult out;
  out.bandwidth_hz = params.bandwidth_hz;
  out.sinr_penalty_db = params.sinr_penalty_db;
  for (Eigen::Index k = 0; k < sent.users(); ++k) {
    std::vector<Complex> eq;
    std::vector<Complex> ref;
    for (Eigen::Index t = 0; t < sent.ofdm_symbols(); ++t)
      for (std::size_t s = 0; s < sent.subcarriers(); ++s) {
        const Complex g = gains[s](k);
        if (g == Complex{}) throw Error(ErrorCode::DegenerateReference, "user receives no signal");
        eq.push_back(rx.per_subcarrier[s](k, t) / g);
        ref.push_back(sent.per_subcarrier[s](k, t));
      }
    const double evm = waveform::evm_rms(eq, ref);
    const double sinr = sinr_from_evm(evm, params.sinr_cap_db);
    out.per_user_evm.push_back(evm);
    out.per_user_sinr_db.push_back(sinr);
    out.per_user_se.push_back(mcs_map(sinr - params.sinr_penalty_db, table));
  }
  out.net_throughput_bps = net_throughput(out.per_user_se, params.bandwidth_hz);
  return out;
}

}  // namespace phasemo::link

#endif  // PHASEMO_LINK_HPP
