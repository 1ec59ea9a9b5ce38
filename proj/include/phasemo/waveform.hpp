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

#ifndef PHASEMO_WAVEFORM_HPP
#define PHASEMO_WAVEFORM_HPP

// QAM mapping, OFDM (de)modulation without cyclic prefix, and EVM.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "phasemo/core.hpp"
#include "phasemo/rng.hpp"

namespace phasemo::waveform {

inline bool is_supported_order(int order) { return order == 4 || order == 16 || order == 64 || order == 256; }

inline int bits_per_symbol(int order) {
  if (!is_supported_order(order))
    throw Error(ErrorCode::UnsupportedOrder, "QAM order " + std::to_string(order) + " is not one of 4/16/64/256");
  return static_cast<int>(std::lround(std::log2(order)));
}

namespace detail {

inline unsigned gray_to_binary(unsigned g) {
  unsigned b = g;
  for (unsigned shift = g >> 1; shift != 0; shift >>= 1) b ^= shift;
  return b;
}

// bits MSB first -> PAM level in {side-1, side-3, ..., -(side-1)}; all-zero maps to the top level.
inline double pam_level(unsigned gray_value, unsigned side) {
  return static_cast<double>(side - 1) - 2.0 * static_cast<double>(gray_to_binary(gray_value));
}

}  // namespace detail

/// Gray-mapped square QAM with unit average energy. Within each symbol,
/// even-position bits select the in-phase level and odd-position bits the
/// quadrature level (first bit of each is the MSB).
inline std::vector<Complex> qam_modulate(std::span<const std::uint8_t> bits, int order) {
  const int m = bits_per_symbol(order);
  if (bits.size() % static_cast<std::size_t>(m) != 0)
    throw Error(ErrorCode::InvalidLength, "bit count is not a multiple of log2(order)");
  const auto side = static_cast<unsigned>(std::lround(std::sqrt(order)));
  const double norm = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
  std::vector<Complex> out;
  out.reserve(bits.size() / static_cast<std::size_t>(m));
  for (std::size_t base = 0; base < bits.size(); base += static_cast<std::size_t>(m)) {
    unsigned gi = 0;
    unsigned gq = 0;
    for (int b = 0; b < m; b += 2) {
      gi = (gi << 1) | (bits[base + static_cast<std::size_t>(b)] & 1U);
      gq = (gq << 1) | (bits[base + static_cast<std::size_t>(b) + 1] & 1U);
    }
    out.emplace_back(norm * detail::pam_level(gi, side), norm * detail::pam_level(gq, side));
  }
  return out;
}

/// Users' frequency-domain symbols. per_subcarrier[s] is a K x T matrix
/// (users x OFDM symbols) for subcarrier s in DC-centred order.
struct UserSymbols {
  int modulation_order = 64;
  std::vector<ComplexMatrix> per_subcarrier;

  Eigen::Index users() const { return per_subcarrier.empty() ? 0 : per_subcarrier.front().rows(); }
  std::size_t subcarriers() const { return per_subcarrier.size(); }
  Eigen::Index ofdm_symbols() const { return per_subcarrier.empty() ? 0 : per_subcarrier.front().cols(); }

  /// All symbols of one user, ordered (symbol, subcarrier).
  std::vector<Complex> user_stream(Eigen::Index user) const {
    std::vector<Complex> out;
    out.reserve(subcarriers() * static_cast<std::size_t>(ofdm_symbols()));
    for (Eigen::Index t = 0; t < ofdm_symbols(); ++t)
      for (const ComplexMatrix& m : per_subcarrier) out.push_back(m(user, t));
    return out;
  }
};

inline UserSymbols random_user_symbols(Eigen::Index users, std::size_t subcarriers, Eigen::Index ofdm_symbols,
                                       int order, SeededRng& rng) {
  if (users < 1 || subcarriers < 1 || ofdm_symbols < 1)
    throw Error(ErrorCode::InvalidLength, "user symbols need K, S, T >= 1");
  const int m = bits_per_symbol(order);
  UserSymbols x;
  x.modulation_order = order;
  x.per_subcarrier.assign(subcarriers, ComplexMatrix(users, ofdm_symbols));
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(m));
  for (Eigen::Index k = 0; k < users; ++k)
    for (Eigen::Index t = 0; t < ofdm_symbols; ++t)
      for (std::size_t s = 0; s < subcarriers; ++s) {
        for (auto& b : bits) b = rng.bit() ? 1 : 0;
        x.per_subcarrier[s](k, t) = qam_modulate(bits, order).front();
      }
  return x;
}

struct OfdmFrame {
  std::vector<Complex> time_samples;
  std::size_t subcarrier_count = 0;
  double bandwidth_hz = 0.0;

  /// One OFDM symbol spans S samples at rate B.
  double sample_rate_hz() const { return bandwidth_hz; }
};

/// One OFDM symbol from S subcarrier values in DC-centred order (unitary IFFT, no CP).
inline OfdmFrame ofdm_modulate(std::span<const Complex> centered_symbols, double bandwidth_hz) {
  if (centered_symbols.empty()) throw Error(ErrorCode::InvalidLength, "ofdm_modulate: no subcarriers");
  OfdmFrame frame;
  frame.subcarrier_count = centered_symbols.size();
  frame.bandwidth_hz = bandwidth_hz;
  frame.time_samples = fft_inverse(centered_to_fft_order(centered_symbols));
  return frame;
}

inline std::vector<Complex> ofdm_demodulate(const OfdmFrame& frame) {
  if (frame.subcarrier_count == 0 || frame.time_samples.size() != frame.subcarrier_count)
    throw Error(ErrorCode::InvalidLength, "ofdm_demodulate: sample count does not match subcarrier count");
  return fft_order_to_centered(fft_forward(frame.time_samples).bin_values);
}

/// RMS error vector magnitude against a known reference.
inline double evm_rms(std::span<const Complex> received, std::span<const Complex> reference) {
  if (received.size() != reference.size() || reference.empty())
    throw Error(ErrorCode::InvalidLength, "evm_rms: received and reference lengths differ");
  double err = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    err += std::norm(received[i] - reference[i]);
    ref += std::norm(reference[i]);
  }
  if (!(ref > 0.0)) throw Error(ErrorCode::DegenerateReference, "evm_rms: reference has zero energy");
  return std::sqrt(err / ref);
}

}  // namespace phasemo::waveform

#endif  // PHASEMO_WAVEFORM_HPP
