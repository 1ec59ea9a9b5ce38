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

#ifndef PHASEMO_FRONTEND_HPP
#define PHASEMO_FRONTEND_HPP

// Frequency-domain transmitter model: Y(s) = g * Phi * Gamma(s) * X(s) per subcarrier.

#include <vector>

#include "phasemo/core.hpp"
#include "phasemo/precoding.hpp"
#include "phasemo/waveform.hpp"

namespace phasemo::frontend {

using precoding::AnalogPhaseMatrix;
using precoding::ArchitectureKind;
using precoding::ArchitectureSpec;
using precoding::DigitalPrecoder;

/// Per-subcarrier N x T emitted spectra (matrix path).
struct AntennaSignals {
  std::vector<ComplexMatrix> per_subcarrier;

  Eigen::Index antennas() const { return per_subcarrier.empty() ? 0 : per_subcarrier.front().rows(); }
  std::size_t subcarriers() const { return per_subcarrier.size(); }
  Eigen::Index ofdm_symbols() const { return per_subcarrier.empty() ? 0 : per_subcarrier.front().cols(); }

  /// Mean |Y_n|^2 over subcarriers and symbols, per antenna.
  Eigen::VectorXd antenna_power() const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(antennas());
    for (const ComplexMatrix& y : per_subcarrier) p += y.cwiseAbs2().rowwise().sum();
    const double count = static_cast<double>(subcarriers()) * static_cast<double>(ofdm_symbols());
    return count > 0.0 ? Eigen::VectorXd(p / count) : p;
  }
};

struct EmitOptions {
  /// The sample interleaver's per-stream delay is cancelled digitally. The
  /// matrix model only describes PhaseMO when this holds.
  bool precompensated = true;
  /// Undo the 1/V fast-phase-shifter spreading loss before the PA.
  bool compensate_spreading = false;
};

/// 1/V for PhaseMO (main-band amplitude after FPS spreading), 1 otherwise.
inline double spreading_gain(const ArchitectureSpec& arch, const EmitOptions& opts) {
  if (arch.kind != ArchitectureKind::PhaseMO || opts.compensate_spreading) return 1.0;
  return 1.0 / static_cast<double>(arch.chains);
}

inline AntennaSignals matrix_model_emit(const ArchitectureSpec& arch, const AnalogPhaseMatrix& phi,
                                        const DigitalPrecoder& gamma, const waveform::UserSymbols& x,
                                        const EmitOptions& opts = {}) {
  const auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidSpec, "matrix_model_emit: " + m); };
  if (arch.kind == ArchitectureKind::PhaseMO && !opts.precompensated)
    fail("PhaseMO needs interleaver delay pre-compensation");
  if (static_cast<std::size_t>(phi.antennas()) != arch.antennas) fail("analog matrix rows != N");
  if (static_cast<std::size_t>(phi.columns()) != arch.streams()) fail("analog matrix columns != chain count");
  if (gamma.subcarriers() != x.subcarriers()) fail("precoder and symbols disagree on subcarrier count");
  const ComplexMatrix p = phi.matrix();
  const double g = spreading_gain(arch, opts);
  AntennaSignals y;
  y.per_subcarrier.reserve(x.subcarriers());
  for (std::size_t s = 0; s < x.subcarriers(); ++s) {
    const ComplexMatrix& gs = gamma.per_subcarrier[s];
    if (gs.rows() != phi.columns() || gs.cols() != x.per_subcarrier[s].rows()) fail("precoder is not V x K");
    y.per_subcarrier.push_back(g * (p * (gs * x.per_subcarrier[s])));
  }
  return y;
}

}  // namespace phasemo::frontend

#endif  // PHASEMO_FRONTEND_HPP
