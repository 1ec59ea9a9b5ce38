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

#ifndef PHASEMO_CHANNEL_HPP
#define PHASEMO_CHANNEL_HPP

// Downlink channel frequency response H[k][n][s]: synthetic geometric
// multipath over a uniform linear array.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phasemo/core.hpp"
#include "phasemo/rng.hpp"

namespace phasemo::channel {

inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Users x antennas x subcarriers, row-major [k][n][s], subcarriers DC-centred.
class ChannelFrequencyResponse {
 public:
  ChannelFrequencyResponse() = default;

  ChannelFrequencyResponse(std::size_t users, std::size_t antennas, std::size_t subcarriers, double center_hz,
                           double spacing_hz, std::string meta = {})
      : k_(users), n_(antennas), s_(subcarriers), fc_hz_(center_hz), scs_hz_(spacing_hz), meta_(std::move(meta)) {
    if (users < 1 || antennas < 1 || subcarriers < 1)
      throw Error(ErrorCode::InvalidLength, "channel needs K, N, S >= 1");
    entries_.assign(k_ * n_ * s_, Complex{});
  }

  std::size_t users() const { return k_; }
  std::size_t antennas() const { return n_; }
  std::size_t subcarriers() const { return s_; }
  double center_frequency_hz() const { return fc_hz_; }
  double subcarrier_spacing_hz() const { return scs_hz_; }
  const std::string& meta() const { return meta_; }
  void set_meta(std::string meta) { meta_ = std::move(meta); }

  std::size_t index(std::size_t k, std::size_t n, std::size_t s) const { return (k * n_ + n) * s_ + s; }
  Complex& at(std::size_t k, std::size_t n, std::size_t s) { return entries_[index(k, n, s)]; }
  const Complex& at(std::size_t k, std::size_t n, std::size_t s) const { return entries_[index(k, n, s)]; }

  std::span<const Complex> entries() const { return entries_; }
  std::span<Complex> entries() { return entries_; }

  std::size_t center_subcarrier() const { return s_ / 2; }

  /// Baseband offset of subcarrier s from the carrier.
  double subcarrier_offset_hz(std::size_t s) const {
    return (static_cast<double>(s) - static_cast<double>(s_ / 2)) * scs_hz_;
  }

  /// K x N matrix for one subcarrier.
  ComplexMatrix matrix(std::size_t s) const {
    ComplexMatrix h(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(n_));
    for (std::size_t k = 0; k < k_; ++k)
      for (std::size_t n = 0; n < n_; ++n) h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) = at(k, n, s);
    return h;
  }

  std::vector<ComplexMatrix> per_subcarrier() const {
    std::vector<ComplexMatrix> out;
    out.reserve(s_);
    for (std::size_t s = 0; s < s_; ++s) out.push_back(matrix(s));
    return out;
  }

  /// Keeps only the listed antenna columns (in the given order).
  ChannelFrequencyResponse select_antennas(std::span<const std::size_t> keep) const {
    ChannelFrequencyResponse out(k_, keep.size(), s_, fc_hz_, scs_hz_, meta_);
    for (std::size_t k = 0; k < k_; ++k)
      for (std::size_t i = 0; i < keep.size(); ++i)
        for (std::size_t s = 0; s < s_; ++s) out.at(k, i, s) = at(k, keep[i], s);
    return out;
  }

  bool all_finite() const {
    for (const Complex& v : entries_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  double mean_power() const { return energy(entries_) / static_cast<double>(entries_.size()); }

  friend bool operator==(const ChannelFrequencyResponse&, const ChannelFrequencyResponse&) = default;

 private:
  std::size_t k_ = 0;
  std::size_t n_ = 0;
  std::size_t s_ = 0;
  double fc_hz_ = 0.0;
  double scs_hz_ = 0.0;
  std::string meta_;
  std::vector<Complex> entries_;
};

struct Path {
  Complex gain{1.0, 0.0};
  double angle_rad = 0.0;  ///< from broadside
  double delay_s = 0.0;
};

/// ULA steering phase of antenna n for a far-field path at angle theta.
inline Complex steering(std::size_t n, double angle_rad, double spacing_wavelengths) {
  return std::polar(1.0, kTwoPi * spacing_wavelengths * static_cast<double>(n) * std::sin(angle_rad));
}

/// H[k][n][s] = sum_p gain_p * a_n(theta_p) * exp(-j 2 pi f_s tau_p).
inline ChannelFrequencyResponse channel_from_paths(const std::vector<std::vector<Path>>& user_paths,
                                                   std::size_t antennas, double spacing_wavelengths,
                                                   std::size_t subcarriers, double center_hz, double spacing_hz) {
  ChannelFrequencyResponse h(user_paths.size(), antennas, subcarriers, center_hz, spacing_hz);
  for (std::size_t k = 0; k < user_paths.size(); ++k) {
    for (const Path& p : user_paths[k]) {
      for (std::size_t s = 0; s < subcarriers; ++s) {
        const Complex delay_term = std::polar(1.0, -kTwoPi * h.subcarrier_offset_hz(s) * p.delay_s);
        for (std::size_t n = 0; n < antennas; ++n)
          h.at(k, n, s) += p.gain * steering(n, p.angle_rad, spacing_wavelengths) * delay_term;
      }
    }
  }
  return h;
}

/// Synthetic drop: one user at distance_m, the rest uniform in the annulus
/// [min_distance_m, distance_m). Each user has a direct path at its own
/// angle (zero delay) and path_count-1 scattered paths.
struct GeometryScenario {
  std::size_t antenna_count = 64;
  double spacing_wavelengths = 0.5;
  std::size_t user_count = 8;
  std::size_t path_count = 6;
  double distance_m = 300.0;
  double min_distance_m = 20.0;
  double pathloss_exponent = 2.0;
  double center_hz = 4.2e9;
  double bandwidth_hz = 100e6;
  std::size_t subcarriers = 64;
  double max_angle_deg = 60.0;      ///< angles uniform over +-max_angle_deg
  double max_delay_samples = 4.0;   ///< scattered delays uniform over [0, max/B]
  double rician_k_db = 0.0;         ///< direct-to-scattered power ratio
  std::uint64_t seed = 1;

  double subcarrier_spacing_hz() const { return bandwidth_hz / static_cast<double>(subcarriers); }
  double wavelength_m() const { return kSpeedOfLight / center_hz; }

  void validate() const {
    if (antenna_count < 1 || user_count < 1 || path_count < 1 || subcarriers < 1)
      throw Error(ErrorCode::InvalidArgument, "scenario needs N, K, paths, S >= 1");
    if (!(spacing_wavelengths > 0.0)) throw Error(ErrorCode::InvalidArgument, "element spacing must be > 0");
    if (!(distance_m > 0.0) || !(min_distance_m > 0.0) || min_distance_m > distance_m)
      throw Error(ErrorCode::InvalidArgument, "need 0 < min_distance <= distance");
    if (!(center_hz > 0.0) || !(bandwidth_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "fc and B must be > 0");
    if (!(pathloss_exponent > 0.0)) throw Error(ErrorCode::InvalidArgument, "pathloss exponent must be > 0");
  }
};

/// Linear power gain at distance d, referenced to free space at 1 m.
inline double pathloss_gain(double distance_m, double wavelength_m, double exponent) {
  const double at_reference = std::pow(wavelength_m / (4.0 * kPi), 2.0);
  return at_reference * std::pow(distance_m, -exponent);
}

struct Drop {
  ChannelFrequencyResponse channel;
  std::vector<double> user_distances_m;
  std::vector<double> user_angles_rad;
};

inline Drop synthesize_drop(const GeometryScenario& sc) {
  sc.validate();
  SeededRng rng(derive_seed(sc.seed, {0x636861ULL}));
  const double max_angle = sc.max_angle_deg * kPi / 180.0;
  const double kr = std::pow(10.0, sc.rician_k_db / 10.0);
  const std::size_t scattered = sc.path_count - 1;
  const double direct_power = scattered == 0 ? 1.0 : kr / (kr + 1.0);
  const double scattered_power = scattered == 0 ? 0.0 : 1.0 / ((kr + 1.0) * static_cast<double>(scattered));

  Drop drop;
  std::vector<std::vector<Path>> paths(sc.user_count);
  for (std::size_t k = 0; k < sc.user_count; ++k) {
    // Every draw happens regardless of the distance so a fixed seed gives the
    // same geometry at every distance.
    const double u_radius = rng.uniform();
    const double user_angle = rng.uniform(-max_angle, max_angle);
    const double direct_phase = rng.uniform(0.0, kTwoPi);
    double radius = sc.distance_m;
    if (k > 0) {
      const double lo2 = sc.min_distance_m * sc.min_distance_m;
      const double hi2 = sc.distance_m * sc.distance_m;
      radius = std::sqrt(lo2 + u_radius * (hi2 - lo2));
    }
    const double amp = std::sqrt(pathloss_gain(radius, sc.wavelength_m(), sc.pathloss_exponent));
    paths[k].push_back(Path{amp * std::polar(std::sqrt(direct_power), direct_phase), user_angle, 0.0});
    for (std::size_t p = 0; p < scattered; ++p) {
      const double angle = rng.uniform(-max_angle, max_angle);
      const double delay = rng.uniform(0.0, sc.max_delay_samples / sc.bandwidth_hz);
      const Complex g = rng.complex_normal(scattered_power);
      paths[k].push_back(Path{amp * g, angle, delay});
    }
    drop.user_distances_m.push_back(radius);
    drop.user_angles_rad.push_back(user_angle);
  }
  drop.channel = channel_from_paths(paths, sc.antenna_count, sc.spacing_wavelengths, sc.subcarriers, sc.center_hz,
                                    sc.subcarrier_spacing_hz());
  drop.channel.set_meta("synthetic ula seed=" + std::to_string(sc.seed) +
                        " placement=uniform-annulus paths=" + std::to_string(sc.path_count));
  return drop;
}

inline ChannelFrequencyResponse synthesize_channel(const GeometryScenario& scenario) {
  return synthesize_drop(scenario).channel;
}

}  // namespace phasemo::channel

#endif  // PHASEMO_CHANNEL_HPP
