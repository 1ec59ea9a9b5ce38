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

#ifndef PHASEMO_ADAPTABILITY_HPP
#define PHASEMO_ADAPTABILITY_HPP

#include <algorithm>
#include <vector>

#include "phasemo/simulation.hpp"

namespace phasemo::power {

enum class AdaptMode { PhaseMO, AntennaMutingDBF };

struct AdaptabilityPoint {
  std::size_t chains = 0;
  std::vector<sim::ResultRow> repetitions;

  double median_throughput() const;
  double median_total_power() const;
  double median_energy_efficiency() const;
};

namespace detail {
template <typename F>
double median_of(const std::vector<sim::ResultRow>& rows, F get) {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(get(r));
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}
}  // namespace detail

inline double AdaptabilityPoint::median_throughput() const {
  return detail::median_of(repetitions, [](const sim::ResultRow& r) { return r.link.net_throughput_bps; });
}
inline double AdaptabilityPoint::median_total_power() const {
  return detail::median_of(repetitions, [](const sim::ResultRow& r) { return r.power.total_w; });
}
inline double AdaptabilityPoint::median_energy_efficiency() const {
  return detail::median_of(repetitions, [](const sim::ResultRow& r) { return r.power.energy_efficiency_bits_per_j; });
}

/// PhaseMO keeps all N PAs on and varies V; AM+DBF mutes down to `chains`
/// active antennas, each with its own digital chain.
inline std::vector<AdaptabilityPoint> adaptability_sweep(const sim::ScenarioConfig& scenario, AdaptMode mode,
                                                         const std::vector<std::size_t>& chain_counts) {
  sim::ScenarioConfig base = scenario;
  base.architectures = {mode == AdaptMode::PhaseMO ? precoding::ArchitectureKind::PhaseMO
                                                   : precoding::ArchitectureKind::AntennaMuting};
  std::vector<sim::RunPoint> points;
  for (std::size_t c : chain_counts) {
    if (c < 1 || c > base.antennas) throw Error(ErrorCode::InvalidArgument, "chain counts must lie in [1, N]");
    sim::ScenarioConfig cfg = base;
    cfg.chains = c;
    points.push_back({"chains", std::to_string(c), cfg});
  }
  const auto rows = sim::execute(points);
  std::vector<AdaptabilityPoint> out(chain_counts.size());
  for (std::size_t i = 0; i < chain_counts.size(); ++i) out[i].chains = chain_counts[i];
  for (const auto& r : rows) out[r.point].repetitions.push_back(r);
  return out;
}

}  // namespace phasemo::power

#endif  // PHASEMO_ADAPTABILITY_HPP
