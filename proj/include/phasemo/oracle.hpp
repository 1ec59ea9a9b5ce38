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

#ifndef PHASEMO_ORACLE_HPP
#define PHASEMO_ORACLE_HPP

// Brute-force time-domain PhaseMO transmitter: precode -> delay
// pre-compensation -> sample interleaver -> zero-order-hold DAC -> per-antenna
// fast phase shifter -> brick-wall band-pass. Everything runs at complex
// baseband on one OFDM symbol, so every stage is circular and exact.
//
// Time reference: a sample of an oversampled signal (rate L * V * f_s) stands
// for the instant (l + 1/2) / rate, i.e. the centre of its hold interval.

#include <cmath>
#include <span>
#include <vector>

#include "phasemo/core.hpp"
#include "phasemo/frontend.hpp"
#include "phasemo/waveform.hpp"

namespace phasemo::frontend {

/// V baseband streams p_v[m] at rate f_s.
struct PrecodedStreams {
  std::vector<std::vector<Complex>> samples;
  double sample_rate_hz = 1.0;
  bool precompensated = false;

  std::size_t streams() const { return samples.size(); }
  std::size_t length() const { return samples.empty() ? 0 : samples.front().size(); }
};

struct InterleavedStream {
  std::vector<Complex> samples;  ///< rate V * base_rate_hz
  std::size_t streams = 1;
  double base_rate_hz = 1.0;
  bool precompensated = false;

  double sample_rate_hz() const { return base_rate_hz * static_cast<double>(streams); }
};

/// Oversampled analog stand-in. Samples come in holds of `oversample`, and
/// `slots_per_period` consecutive holds form one FPS period.
struct OversampledSignal {
  std::vector<Complex> samples;
  double sample_rate_hz = 1.0;
  std::size_t oversample = 1;
  std::size_t slots_per_period = 1;
};

/// P_v(s) = (Gamma(s) X(s, symbol))_v, one OFDM symbol per stream.
inline PrecodedStreams precode_streams(const DigitalPrecoder& gamma, const waveform::UserSymbols& x,
                                       Eigen::Index symbol, double base_rate_hz) {
  if (gamma.subcarriers() != x.subcarriers() || gamma.subcarriers() == 0)
    throw Error(ErrorCode::InvalidLength, "precoder and symbols disagree on subcarrier count");
  const auto v_count = static_cast<std::size_t>(gamma.per_subcarrier.front().rows());
  std::vector<std::vector<Complex>> spectra(v_count, std::vector<Complex>(x.subcarriers()));
  for (std::size_t s = 0; s < x.subcarriers(); ++s) {
    const ComplexVector p = gamma.per_subcarrier[s] * x.per_subcarrier[s].col(symbol);
    for (std::size_t v = 0; v < v_count; ++v) spectra[v][s] = p(static_cast<Eigen::Index>(v));
  }
  PrecodedStreams out;
  out.sample_rate_hz = base_rate_hz;
  for (const auto& spec : spectra) out.samples.push_back(waveform::ofdm_modulate(spec, base_rate_hz).time_samples);
  return out;
}

/// Multiplies stream v by exp(+j 2 pi f v / (V f_s)), cancelling the
/// exp(-j 2 pi f v / (V f_s)) the interleaver's slot delay introduces.
inline PrecodedStreams phase_precompensate(const PrecodedStreams& p, std::size_t v_count, double base_rate_hz) {
  if (p.precompensated) throw Error(ErrorCode::AlreadyCompensated, "streams are already pre-compensated");
  if (p.streams() != v_count) throw Error(ErrorCode::InvalidLength, "stream count does not match V");
  PrecodedStreams out = p;
  out.precompensated = true;
  for (std::size_t v = 0; v < v_count; ++v) {
    Spectrum spec = fft_forward(p.samples[v], base_rate_hz);
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double f = spec.frequency(k);
      spec.bin_values[k] *= std::polar(1.0, kTwoPi * f * static_cast<double>(v) /
                                                (static_cast<double>(v_count) * base_rate_hz));
    }
    out.samples[v] = fft_inverse(spec);
  }
  return out;
}

/// z = [p_0[0], p_1[0], ..., p_{V-1}[0], p_0[1], ...].
inline InterleavedStream interleave(const PrecodedStreams& p) {
  if (p.streams() == 0) throw Error(ErrorCode::InvalidLength, "interleave: no streams");
  const std::size_t m = p.length();
  for (const auto& s : p.samples)
    if (s.size() != m) throw Error(ErrorCode::InvalidLength, "interleave: streams have different lengths");
  InterleavedStream z;
  z.streams = p.streams();
  z.base_rate_hz = p.sample_rate_hz;
  z.precompensated = p.precompensated;
  z.samples.resize(m * z.streams);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t v = 0; v < z.streams; ++v) z.samples[i * z.streams + v] = p.samples[v][i];
  return z;
}

inline PrecodedStreams deinterleave(const InterleavedStream& z) {
  if (z.streams == 0 || z.samples.size() % z.streams != 0)
    throw Error(ErrorCode::InvalidLength, "deinterleave: length is not a multiple of V");
  PrecodedStreams p;
  p.sample_rate_hz = z.base_rate_hz;
  p.precompensated = z.precompensated;
  const std::size_t m = z.samples.size() / z.streams;
  p.samples.assign(z.streams, std::vector<Complex>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t v = 0; v < z.streams; ++v) p.samples[v][i] = z.samples[i * z.streams + v];
  return p;
}

/// Zero-order hold: each z[n] repeated L times at rate L * V * f_s.
inline OversampledSignal dac_zoh(const InterleavedStream& z, std::size_t oversample) {
  if (oversample < 2) throw Error(ErrorCode::InvalidArgument, "dac_zoh: oversampling factor must be >= 2");
  OversampledSignal out;
  out.sample_rate_hz = z.sample_rate_hz() * static_cast<double>(oversample);
  out.oversample = oversample;
  out.slots_per_period = z.streams;
  out.samples.reserve(z.samples.size() * oversample);
  for (const Complex& v : z.samples) out.samples.insert(out.samples.end(), oversample, v);
  return out;
}

/// Periodic phase sequence of one antenna's fast phase shifter: phase
/// phases[v] during slot v of every period, slot length 1 / (V f_s).
struct FpsWaveform {
  std::vector<double> phases;
  double slot_duration_s = 1.0;
  std::size_t oversample = 1;
  std::vector<Complex> samples;

  std::size_t slots_per_period() const { return phases.size(); }
  double period_s() const { return slot_duration_s * static_cast<double>(phases.size()); }
};

inline FpsWaveform make_fps_waveform(std::span<const double> phases, double base_rate_hz, std::size_t oversample,
                                     std::size_t periods = 1) {
  if (phases.empty()) throw Error(ErrorCode::InvalidArgument, "FPS needs at least one phase");
  if (oversample < 1 || periods < 1) throw Error(ErrorCode::InvalidArgument, "FPS oversample and periods must be >= 1");
  FpsWaveform w;
  w.phases.assign(phases.begin(), phases.end());
  w.slot_duration_s = 1.0 / (static_cast<double>(phases.size()) * base_rate_hz);
  w.oversample = oversample;
  const std::size_t per_period = oversample * phases.size();
  w.samples.reserve(per_period * periods);
  for (std::size_t i = 0; i < per_period * periods; ++i)
    w.samples.push_back(std::polar(1.0, w.phases[(i / oversample) % phases.size()]));
  return w;
}

/// y = x * f_n, with the FPS switching on the DAC hold boundaries.
inline OversampledSignal fps_apply(const OversampledSignal& x, const FpsWaveform& w) {
  const std::size_t period = w.oversample * w.slots_per_period();
  if (x.oversample != w.oversample || x.slots_per_period != w.slots_per_period())
    throw Error(ErrorCode::AlignmentError, "FPS slots are not aligned with the DAC holds");
  if (period == 0 || x.samples.size() % period != 0 || w.samples.empty() || w.samples.size() % period != 0)
    throw Error(ErrorCode::AlignmentError, "signal length is not a whole number of FPS periods");
  const double expected_rate = static_cast<double>(w.oversample) / w.slot_duration_s;
  if (std::abs(expected_rate - x.sample_rate_hz) > 1e-9 * x.sample_rate_hz)
    throw Error(ErrorCode::AlignmentError, "FPS slot duration does not match the signal rate");
  OversampledSignal y = x;
  for (std::size_t i = 0; i < y.samples.size(); ++i) y.samples[i] *= w.samples[i % w.samples.size()];
  return y;
}

struct FpsLine {
  long index = 0;
  double frequency_hz = 0.0;
  Complex weight;
};

/// Fourier-series lines of the FPS waveform at f = i / (V T'_s):
///   (1/V) sum_v e^{j Phi_v} e^{-j (2 pi i / V)(v + 1/2)} sinc(i / V).
inline std::vector<FpsLine> fps_spectrum_closed_form(const FpsWaveform& w, long i_min, long i_max) {
  const auto v_count = static_cast<double>(w.slots_per_period());
  std::vector<FpsLine> lines;
  for (long i = i_min; i <= i_max; ++i) {
    Complex acc{};
    for (std::size_t v = 0; v < w.phases.size(); ++v)
      acc += std::polar(1.0, w.phases[v] - kTwoPi * static_cast<double>(i) / v_count * (static_cast<double>(v) + 0.5));
    // sinc(i/V) vanishes exactly at nonzero multiples of V.
    const double envelope = (i != 0 && i % static_cast<long>(w.phases.size()) == 0) ? 0.0
                                                                                      : sinc(static_cast<double>(i) / v_count);
    lines.push_back({i, static_cast<double>(i) / w.period_s(), acc * envelope / v_count});
  }
  return lines;
}

/// Band edges are half-open: bins with -B/2 <= f < B/2 pass.
inline bool in_band(double f, double bandwidth_hz) { return f >= -bandwidth_hz / 2.0 && f < bandwidth_hz / 2.0; }

/// Ideal filter: FFT, zero every bin outside the band, inverse FFT.
inline OversampledSignal brickwall_bandpass(const OversampledSignal& x, double bandwidth_hz) {
  if (!(bandwidth_hz > 0.0) || bandwidth_hz > x.sample_rate_hz)
    throw Error(ErrorCode::InvalidBandwidth, "pass band must satisfy 0 < B <= sample rate");
  Spectrum spec = fft_forward(x.samples, x.sample_rate_hz);
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (!in_band(spec.frequency(k), bandwidth_hz)) spec.bin_values[k] = Complex{};
  OversampledSignal y = x;
  y.samples = fft_inverse(spec);
  return y;
}

/// Out-of-band to in-band energy ratio, in dB (-inf when nothing leaks).
inline double out_of_band_db(const OversampledSignal& x, double bandwidth_hz) {
  const Spectrum spec = fft_forward(x.samples, x.sample_rate_hz);
  double in = 0.0;
  double out = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k)
    (in_band(spec.frequency(k), bandwidth_hz) ? in : out) += std::norm(spec.bin_values[k]);
  if (in == 0.0) throw Error(ErrorCode::DegenerateReference, "no in-band energy");
  return 10.0 * std::log10(out / in);
}

struct OracleConfig {
  double base_rate_hz = 100e6;  ///< f_s; one OFDM symbol of S samples spans 1/scs
  std::size_t oversample = 32;  ///< L, samples per DAC hold
  bool precompensate = true;
};

/// Per-antenna band-limited outputs (oracle path).
struct AntennaWaveforms {
  std::vector<OversampledSignal> per_antenna;
  std::size_t subcarriers = 0;
  std::size_t streams = 0;
  double bandwidth_hz = 0.0;
};

/// Full PhaseMO chain for one OFDM symbol. Per antenna n:
/// BPF(FPS_n(ZOH(interleave(precompensate(Gamma X))))).
inline AntennaWaveforms time_domain_emit(const AnalogPhaseMatrix& phi, const DigitalPrecoder& gamma,
                                         const waveform::UserSymbols& x, const OracleConfig& cfg,
                                         Eigen::Index symbol = 0) {
  if (phi.kind != precoding::AnalogKind::UnitModulus)
    throw Error(ErrorCode::InvalidSpec, "time_domain_emit models PhaseMO (unit-modulus FPS phases)");
  if (cfg.oversample < 8) throw Error(ErrorCode::InvalidArgument, "time_domain_emit needs L >= 8");
  const auto v_count = static_cast<std::size_t>(phi.columns());
  PrecodedStreams p = precode_streams(gamma, x, symbol, cfg.base_rate_hz);
  if (p.streams() != v_count) throw Error(ErrorCode::InvalidSpec, "precoder rows != analog columns");
  if (cfg.precompensate) p = phase_precompensate(p, v_count, cfg.base_rate_hz);
  const OversampledSignal held = dac_zoh(interleave(p), cfg.oversample);

  AntennaWaveforms out;
  out.subcarriers = x.subcarriers();
  out.streams = v_count;
  out.bandwidth_hz = cfg.base_rate_hz;
  out.per_antenna.reserve(static_cast<std::size_t>(phi.antennas()));
  std::vector<double> row(v_count);
  for (Eigen::Index n = 0; n < phi.antennas(); ++n) {
    for (std::size_t v = 0; v < v_count; ++v) {
      const auto vi = static_cast<Eigen::Index>(v);
      row[v] = phi.mask(n, vi) ? phi.phases(n, vi) : 0.0;
    }
    const FpsWaveform w = make_fps_waveform(row, cfg.base_rate_hz, cfg.oversample);
    out.per_antenna.push_back(brickwall_bandpass(fps_apply(held, w), cfg.base_rate_hz));
  }
  return out;
}

enum class HoldEqualizer {
  Exact,  ///< the sampled hold's own response (Dirichlet kernel)
  Sinc,   ///< continuous ZOH: sinc(f / f'_s) e^{-j pi f / f'_s}
};

/// In-band response of the DAC hold at subcarrier offset k (k / (V S) = f / f'_s).
inline Complex hold_response(long k, std::size_t subcarriers, std::size_t v_count, std::size_t oversample,
                             HoldEqualizer eq) {
  const double x = static_cast<double>(k) / (static_cast<double>(v_count) * static_cast<double>(subcarriers));
  const Complex delay = std::polar(1.0, -kPi * x);
  if (k == 0) return delay;
  if (eq == HoldEqualizer::Sinc) return delay * sinc(x);
  const double l = static_cast<double>(oversample);
  return delay * std::sin(kPi * x) / (l * std::sin(kPi * x / l));
}

/// Per-subcarrier values (N x 1 per subcarrier, DC-centred) carried by the
/// oracle's band-limited output, after dividing out the hold response.
inline AntennaSignals inband_subcarriers(const AntennaWaveforms& w, HoldEqualizer eq = HoldEqualizer::Exact) {
  AntennaSignals out;
  const std::size_t s_count = w.subcarriers;
  const auto n_count = static_cast<Eigen::Index>(w.per_antenna.size());
  out.per_subcarrier.assign(s_count, ComplexMatrix::Zero(n_count, 1));
  for (Eigen::Index n = 0; n < n_count; ++n) {
    const OversampledSignal& sig = w.per_antenna[static_cast<std::size_t>(n)];
    const std::size_t m = sig.samples.size();
    const Spectrum spec = fft_forward(sig.samples, sig.sample_rate_hz);
    const double to_subcarrier = 1.0 / std::sqrt(static_cast<double>(m) / static_cast<double>(s_count));
    for (std::size_t s = 0; s < s_count; ++s) {
      const long k = static_cast<long>(s) - static_cast<long>(s_count / 2);
      const auto bin = static_cast<std::size_t>((k + static_cast<long>(m)) % static_cast<long>(m));
      const Complex midpoint = std::polar(1.0, -kPi * static_cast<double>(k) / static_cast<double>(m));
      out.per_subcarrier[s](n, 0) = spec.bin_values[bin] * midpoint * to_subcarrier /
                                    hold_response(k, s_count, w.streams, sig.oversample, eq);
    }
  }
  return out;
}

/// Stacks per-subcarrier columns into one vector for error metrics.
inline std::vector<Complex> flatten(const AntennaSignals& y, Eigen::Index symbol = 0) {
  std::vector<Complex> out;
  for (const ComplexMatrix& m : y.per_subcarrier)
    for (Eigen::Index n = 0; n < m.rows(); ++n) out.push_back(m(n, symbol));
  return out;
}

}  // namespace phasemo::frontend

#endif  // PHASEMO_ORACLE_HPP
