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

#ifndef PHASEMO_POWER_HPP
#define PHASEMO_POWER_HPP

#include <cmath>
#include <cstddef>

#include "phasemo/error.hpp"
#include "phasemo/link.hpp"

namespace phasemo::power {

using link::AntennaPowerMode;

struct PowerModelParams {
  double pa_efficiency = 0.6;
  double max_eirp_dbm = 77.0;
  double baseband_power_per_chain_w = 1.683;
  double gflops_per_chain = 15.0;  // metadata only
  AntennaPowerMode antenna_power_mode = AntennaPowerMode::CapLimited;

  void validate() const {
    if (!(pa_efficiency > 0.0 && pa_efficiency <= 1.0))
      throw Error(ErrorCode::InvalidPower, "PA efficiency must lie in (0, 1]");
    if (!std::isfinite(max_eirp_dbm)) throw Error(ErrorCode::InvalidPower, "max EIRP must be finite");
    if (!(baseband_power_per_chain_w > 0.0) || !(gflops_per_chain > 0.0))
      throw Error(ErrorCode::InvalidPower, "baseband power and GFLOPS per chain must be > 0");
  }
};

struct PowerReport {
  double pa_power_w = 0.0;
  double baseband_power_w = 0.0;
  double total_w = 0.0;
  double energy_efficiency_bits_per_j = 0.0;
};

/// Conducted power per PA in watts; the array is referenced at n_active
/// (cap-limited) or n_array (fixed) antennas.
inline double per_antenna_power_w(std::size_t n_active, std::size_t n_array, const PowerModelParams& p) {
  return link::dbm_to_watts(link::per_antenna_budget_dbm(p.max_eirp_dbm, n_active, n_array, p.antenna_power_mode));
}

/// n_active * P_ant / eta with P_ant = max_eirp - 20 log10(n_active).
inline double pa_power(std::size_t n_active, const PowerModelParams& p) {
  p.validate();
  if (n_active == 0) throw Error(ErrorCode::InvalidPower, "need at least one active antenna");
  const double p_ant = link::dbm_to_watts(p.max_eirp_dbm - link::array_gain_db(n_active));
  return static_cast<double>(n_active) * p_ant / p.pa_efficiency;
}

/// PA power under the configured antenna-power mode for an n_array array.
inline double pa_power(std::size_t n_active, std::size_t n_array, const PowerModelParams& p) {
  p.validate();
  if (n_active == 0 || n_active > n_array) throw Error(ErrorCode::InvalidPower, "need 1 <= active <= array size");
  return static_cast<double>(n_active) * per_antenna_power_w(n_active, n_array, p) / p.pa_efficiency;
}

inline double baseband_power(std::size_t chains, const PowerModelParams& p) {
  p.validate();
  return static_cast<double>(chains) * p.baseband_power_per_chain_w;
}

inline double energy_efficiency(double throughput_bps, double total_power_w) {
  if (!(total_power_w > 0.0)) throw Error(ErrorCode::InvalidPower, "total power must be > 0");
  if (throughput_bps < 0.0) throw Error(ErrorCode::InvalidArgument, "throughput must be >= 0");
  return throughput_bps / total_power_w;
}

inline PowerReport power_report(std::size_t n_active, std::size_t n_array, std::size_t chains,
                                double throughput_bps, const PowerModelParams& p) {
  PowerReport r;
  r.pa_power_w = pa_power(n_active, n_array, p);
  r.baseband_power_w = baseband_power(chains, p);
  r.total_w = r.pa_power_w + r.baseband_power_w;
  r.energy_efficiency_bits_per_j = energy_efficiency(throughput_bps, r.total_w);
  return r;
}

}  // namespace phasemo::power

#endif  // PHASEMO_POWER_HPP
