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

#ifndef PHASEMO_PRECODING_HPP
#define PHASEMO_PRECODING_HPP

// Analog phase matrices and zero-forcing digital precoders for every
// beamforming architecture.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phasemo/channel.hpp"
#include "phasemo/core.hpp"
#include "phasemo/rng.hpp"

namespace phasemo::precoding {

enum class ArchitectureKind { Digital, Analog, HybridFull, HybridPartial, GreenMO, PhaseMO, AntennaMuting };

inline constexpr ArchitectureKind kAllArchitectures[] = {
    ArchitectureKind::Digital, ArchitectureKind::Analog,  ArchitectureKind::HybridFull,   ArchitectureKind::HybridPartial,
    ArchitectureKind::GreenMO, ArchitectureKind::PhaseMO, ArchitectureKind::AntennaMuting};

constexpr std::string_view to_string(ArchitectureKind kind) {
  switch (kind) {
    case ArchitectureKind::Digital: return "Digital";
    case ArchitectureKind::Analog: return "Analog";
    case ArchitectureKind::HybridFull: return "HybridFull";
    case ArchitectureKind::HybridPartial: return "HybridPartial";
    case ArchitectureKind::GreenMO: return "GreenMO";
    case ArchitectureKind::PhaseMO: return "PhaseMO";
    case ArchitectureKind::AntennaMuting: return "AntennaMuting";
  }
  return "?";
}

inline std::optional<ArchitectureKind> parse_architecture(std::string_view name) {
  const auto lower = [](std::string_view in) {
    std::string out(in);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  for (ArchitectureKind k : kAllArchitectures)
    if (lower(to_string(k)) == lower(name)) return k;
  return std::nullopt;
}

/// `chains` is R for the hybrids and GreenMO, V (virtual chains) for PhaseMO,
/// N for Digital, 1 for Analog. AntennaMuting uses active_antennas as its
/// chain count.
struct ArchitectureSpec {
  ArchitectureKind kind = ArchitectureKind::PhaseMO;
  std::size_t antennas = 64;
  std::size_t users = 8;
  std::size_t chains = 8;
  std::size_t active_antennas = 64;

  static ArchitectureSpec make(ArchitectureKind kind, std::size_t antennas, std::size_t users, std::size_t chains) {
    ArchitectureSpec a{kind, antennas, users, chains, antennas};
    switch (kind) {
      case ArchitectureKind::Digital: a.chains = antennas; break;
      case ArchitectureKind::Analog: a.chains = 1; break;
      case ArchitectureKind::AntennaMuting: a.active_antennas = chains; break;
      default: break;
    }
    return a;
  }

  /// Digital chains the baseband has to feed.
  std::size_t baseband_chains() const {
    return kind == ArchitectureKind::AntennaMuting ? active_antennas : chains;
  }

  /// Antennas (and PAs) that radiate.
  std::size_t radiating_antennas() const {
    return kind == ArchitectureKind::AntennaMuting ? active_antennas : antennas;
  }

  /// Columns of the analog matrix, i.e. rows of the digital precoder.
  std::size_t streams() const { return baseband_chains(); }

  void validate() const {
    const auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidSpec, m); };
    if (antennas < 1 || users < 1) fail("N and K must be >= 1");
    if (chains < 1 || chains > antennas) fail("chain count must lie in [1, N]");
    if (active_antennas < 1 || active_antennas > antennas) fail("active antennas must lie in [1, N]");
    if (kind == ArchitectureKind::Analog && (chains != 1 || users != 1)) fail("Analog requires one chain and K = 1");
    if (kind == ArchitectureKind::Digital && chains != antennas) fail("Digital requires chains = N");
    if (kind == ArchitectureKind::AntennaMuting && chains != active_antennas)
      fail("AntennaMuting requires chains = active antennas");
    if (users > streams())
      fail("K = " + std::to_string(users) + " exceeds the " + std::to_string(streams()) +
           " available streams (zero forcing needs K <= chains)");
  }
};

enum class AnalogKind { UnitModulus, BinarySwitch };

/// N x V analog stage. UnitModulus entries are exp(j phase) where the mask is
/// set; BinarySwitch entries are 1 where the mask is set. Masked-out entries are 0.
struct AnalogPhaseMatrix {
  RealMatrix phases;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
  AnalogKind kind = AnalogKind::UnitModulus;

  Eigen::Index antennas() const { return phases.rows(); }
  Eigen::Index columns() const { return phases.cols(); }

  ComplexMatrix matrix() const {
    ComplexMatrix m = ComplexMatrix::Zero(phases.rows(), phases.cols());
    for (Eigen::Index n = 0; n < phases.rows(); ++n)
      for (Eigen::Index v = 0; v < phases.cols(); ++v)
        if (mask(n, v)) m(n, v) = kind == AnalogKind::BinarySwitch ? Complex{1.0, 0.0} : std::polar(1.0, phases(n, v));
    return m;
  }

  static AnalogPhaseMatrix unit_modulus(const RealMatrix& phases) {
    AnalogPhaseMatrix a;
    a.phases = phases;
    a.mask.setConstant(phases.rows(), phases.cols(), true);
    a.kind = AnalogKind::UnitModulus;
    return a;
  }

  static AnalogPhaseMatrix switches(const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& on) {
    AnalogPhaseMatrix a;
    a.phases = RealMatrix::Zero(on.rows(), on.cols());
    a.mask = on;
    a.kind = AnalogKind::BinarySwitch;
    return a;
  }

  static AnalogPhaseMatrix identity(Eigen::Index n) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> on;
    on.setConstant(n, n, false);
    for (Eigen::Index i = 0; i < n; ++i) on(i, i) = true;
    return switches(on);
  }

  /// N x A selection of the listed antennas (AntennaMuting).
  static AnalogPhaseMatrix selection(Eigen::Index n, std::span<const std::size_t> active) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> on;
    on.setConstant(n, static_cast<Eigen::Index>(active.size()), false);
    for (std::size_t c = 0; c < active.size(); ++c) on(static_cast<Eigen::Index>(active[c]), static_cast<Eigen::Index>(c)) = true;
    return switches(on);
  }
};

/// Per-subcarrier V x K matrices; scale[s] is the c with h_eff(s) * gamma(s) = c I
/// (for non-ZF precoders, the plain amplitude factor applied).
struct DigitalPrecoder {
  std::vector<ComplexMatrix> per_subcarrier;
  std::vector<double> scale;

  std::size_t subcarriers() const { return per_subcarrier.size(); }
};

/// Stream-to-user map used when V > K.
inline std::size_t stream_user(std::size_t stream, std::size_t users) { return stream % users; }

/// Phi_nv = -arg(H[v mod K][n][floor(S/2)]).
inline AnalogPhaseMatrix analog_phases_center_subcarrier(const channel::ChannelFrequencyResponse& h, std::size_t v_count) {
  if (v_count < 1) throw Error(ErrorCode::InvalidSpec, "V must be >= 1");
  const std::size_t sc = h.center_subcarrier();
  RealMatrix phases(static_cast<Eigen::Index>(h.antennas()), static_cast<Eigen::Index>(v_count));
  for (std::size_t v = 0; v < v_count; ++v) {
    const std::size_t k = stream_user(v, h.users());
    for (std::size_t n = 0; n < h.antennas(); ++n)
      phases(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(v)) = -std::arg(h.at(k, n, sc));
  }
  return AnalogPhaseMatrix::unit_modulus(phases);
}

/// Chain r feeds antennas [ceil(r N / R), ceil((r+1) N / R)). Matches
/// r * ceil(N/R) whenever R divides N, and never leaves a chain empty.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> partial_connection_mask(std::size_t antennas,
                                                                                   std::size_t chains) {
  if (chains < 1 || chains > antennas) throw Error(ErrorCode::InvalidSpec, "partial connection needs 1 <= R <= N");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
  mask.setConstant(static_cast<Eigen::Index>(antennas), static_cast<Eigen::Index>(chains), false);
  const auto start = [&](std::size_t r) { return (r * antennas + chains - 1) / chains; };
  for (std::size_t r = 0; r < chains; ++r)
    for (std::size_t n = start(r); n < start(r + 1); ++n)
      mask(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(r)) = true;
  return mask;
}

inline AnalogPhaseMatrix partial_hybrid_phases(const channel::ChannelFrequencyResponse& h, std::size_t chains) {
  AnalogPhaseMatrix a = analog_phases_center_subcarrier(h, chains);
  a.mask = partial_connection_mask(h.antennas(), chains);
  return a;
}

inline constexpr int kGreenmoMaxAttempts = 1000;

/// Random {0,1} N x R matrix with full column rank.
inline AnalogPhaseMatrix greenmo_binary_matrix(std::size_t antennas, std::size_t chains, SeededRng& rng) {
  if (chains < 1 || chains > antennas) throw Error(ErrorCode::InvalidSpec, "GreenMO needs 1 <= R <= N");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> on(static_cast<Eigen::Index>(antennas),
                                                          static_cast<Eigen::Index>(chains));
  for (int attempt = 0; attempt < kGreenmoMaxAttempts; ++attempt) {
    for (Eigen::Index n = 0; n < on.rows(); ++n)
      for (Eigen::Index r = 0; r < on.cols(); ++r) on(n, r) = rng.bit();
    const AnalogPhaseMatrix a = AnalogPhaseMatrix::switches(on);
    if (numerical_rank(a.matrix()) == static_cast<Eigen::Index>(chains)) return a;
  }
  throw Error(ErrorCode::GenerationFailed, "no full-rank binary matrix in 1000 draws");
}

enum class MutingPolicy { HighestIndex, Random };

/// Indices (ascending) of the antennas that stay on.
inline std::vector<std::size_t> active_antenna_set(std::size_t antennas, std::size_t active, MutingPolicy policy,
                                                   SeededRng& rng) {
  if (active < 1 || active > antennas) throw Error(ErrorCode::InvalidSpec, "active antennas must lie in [1, N]");
  std::vector<std::size_t> idx(antennas);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (policy == MutingPolicy::Random) {
    for (std::size_t i = antennas - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
  }
  idx.resize(active);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Per-subcarrier K x V effective channel H(s) * Phi.
inline std::vector<ComplexMatrix> effective_channels(const channel::ChannelFrequencyResponse& h,
                                                     const AnalogPhaseMatrix& phi) {
  if (static_cast<std::size_t>(phi.antennas()) != h.antennas())
    throw Error(ErrorCode::InvalidSpec, "analog matrix rows do not match channel antennas");
  const ComplexMatrix p = phi.matrix();
  std::vector<ComplexMatrix> out;
  out.reserve(h.subcarriers());
  for (std::size_t s = 0; s < h.subcarriers(); ++s) out.push_back(h.matrix(s) * p);
  return out;
}

inline constexpr double kRankTolerance = 1e-10;

/// Gamma(s) = c(s) * pinv(h_eff(s)) with ||Gamma(s)||_F^2 = power_budget.
inline DigitalPrecoder zero_forcing(std::span<const ComplexMatrix> h_eff, double power_budget = 1.0) {
  if (!(power_budget > 0.0)) throw Error(ErrorCode::InvalidArgument, "power budget must be > 0");
  DigitalPrecoder out;
  out.per_subcarrier.reserve(h_eff.size());
  out.scale.reserve(h_eff.size());
  for (std::size_t s = 0; s < h_eff.size(); ++s) {
    const ComplexMatrix& h = h_eff[s];
    if (h.rows() > h.cols())
      throw Error(ErrorCode::InvalidSpec, "zero forcing needs K <= V (got " + std::to_string(h.rows()) + " x " +
                                               std::to_string(h.cols()) + ")");
    Eigen::JacobiSVD<ComplexMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(0) > 0.0) || !(sv(sv.size() - 1) > kRankTolerance * sv(0)))
      throw RankDeficientError(s);
    const ComplexMatrix pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
    const double c = std::sqrt(power_budget) / pinv.norm();
    out.per_subcarrier.push_back(c * pinv);
    out.scale.push_back(c);
  }
  return out;
}

/// Gamma(s) = sqrt(budget) as a 1 x 1 matrix (analog beamforming has no digital stage).
inline DigitalPrecoder unit_precoder(std::size_t subcarriers, double power_budget = 1.0) {
  DigitalPrecoder out;
  const double a = std::sqrt(power_budget);
  out.per_subcarrier.assign(subcarriers, ComplexMatrix::Constant(1, 1, Complex{a, 0.0}));
  out.scale.assign(subcarriers, a);
  return out;
}

struct BeamformerDesign {
  AnalogPhaseMatrix analog;
  DigitalPrecoder digital;
  std::vector<std::size_t> active_antennas;  ///< radiating antennas, ascending
};

/// Analog stage per architecture, then ZF on the effective channel H * Phi.
inline BeamformerDesign design_beamformer(const ArchitectureSpec& arch, const channel::ChannelFrequencyResponse& h,
                                          SeededRng& rng, MutingPolicy muting = MutingPolicy::HighestIndex) {
  arch.validate();
  if (h.antennas() != arch.antennas || h.users() != arch.users)
    throw Error(ErrorCode::InvalidSpec, "channel dimensions do not match the architecture");
  BeamformerDesign d;
  const auto n = static_cast<Eigen::Index>(arch.antennas);
  switch (arch.kind) {
    case ArchitectureKind::Digital: d.analog = AnalogPhaseMatrix::identity(n); break;
    case ArchitectureKind::Analog:
    case ArchitectureKind::HybridFull:
    case ArchitectureKind::PhaseMO: d.analog = analog_phases_center_subcarrier(h, arch.chains); break;
    case ArchitectureKind::HybridPartial: d.analog = partial_hybrid_phases(h, arch.chains); break;
    case ArchitectureKind::GreenMO: d.analog = greenmo_binary_matrix(arch.antennas, arch.chains, rng); break;
    case ArchitectureKind::AntennaMuting: {
      const auto active = active_antenna_set(arch.antennas, arch.active_antennas, muting, rng);
      d.analog = AnalogPhaseMatrix::selection(n, active);
      break;
    }
  }
  if (arch.kind == ArchitectureKind::AntennaMuting) {
    for (Eigen::Index c = 0; c < d.analog.columns(); ++c)
      for (Eigen::Index r = 0; r < n; ++r)
        if (d.analog.mask(r, c)) d.active_antennas.push_back(static_cast<std::size_t>(r));
  } else {
    d.active_antennas.resize(arch.antennas);
    std::iota(d.active_antennas.begin(), d.active_antennas.end(), std::size_t{0});
  }
  if (arch.kind == ArchitectureKind::Analog) {
    d.digital = unit_precoder(h.subcarriers());
  } else {
    const auto heff = effective_channels(h, d.analog);
    d.digital = zero_forcing(heff);
  }
  return d;
}

}  // namespace phasemo::precoding

#endif  // PHASEMO_PRECODING_HPP
