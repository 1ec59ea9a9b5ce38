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

#ifndef PHASEMO_CORE_HPP
#define PHASEMO_CORE_HPP

// Shared numeric foundations: complex matrices, the unitary FFT, sinc and the
// Moore-Penrose pseudo-inverse.
//
// Conventions used throughout the library:
//  * FFTs are unitary (1/sqrt(L) in both directions), so Parseval holds
//    without extra factors.
//  * sinc(x) = sin(pi x) / (pi x) with sinc(0) = 1.
//  * Spectra are stored in natural FFT order (bin 0 = DC). signed_bin()
//    maps an index to its baseband-equivalent offset; for even lengths the
//    Nyquist bin is reported as -L/2.
//  * Subcarrier-indexed tensors (channels, precoders, symbols) use the
//    DC-centred order instead: index s sits at offset s - floor(S/2).

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "phasemo/error.hpp"

namespace phasemo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = kPi * x;
  return std::sin(px) / px;
}

inline bool all_finite(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

/// Builds a rows x cols matrix from row-major values, rejecting NaN/Inf.
inline ComplexMatrix make_matrix(Eigen::Index rows, Eigen::Index cols, std::span<const Complex> row_major) {
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != row_major.size()) {
    throw Error(ErrorCode::InvalidLength, "matrix entry count does not match rows x cols");
  }
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row_major[static_cast<std::size_t>(r * cols + c)];
  if (!all_finite(m)) throw Error(ErrorCode::InvalidArgument, "matrix entries must be finite");
  return m;
}

inline double energy(std::span<const Complex> x) {
  double e = 0.0;
  for (const Complex& v : x) e += std::norm(v);
  return e;
}

/// sqrt(sum |a-b|^2 / sum |b|^2).
inline double relative_rms_error(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidLength, "relative_rms_error: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

inline long signed_bin(std::size_t k, std::size_t length) {
  const auto kk = static_cast<long>(k);
  const auto len = static_cast<long>(length);
  return kk < (len + 1) / 2 ? kk : kk - len;
}

/// Sampled spectrum. bin_values[k] sits at center_offset + signed_bin(k) * bin_spacing.
struct Spectrum {
  std::vector<Complex> bin_values;
  double bin_spacing = 1.0;
  double center_offset = 0.0;

  std::size_t size() const { return bin_values.size(); }
  double frequency(std::size_t k) const {
    return center_offset + static_cast<double>(signed_bin(k, bin_values.size())) * bin_spacing;
  }
};

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

}  // namespace detail

/// Unitary forward DFT. sample_rate_hz only sets the bin spacing of the result.
inline Spectrum fft_forward(std::span<const Complex> samples, double sample_rate_hz = 1.0) {
  if (samples.empty()) throw Error(ErrorCode::InvalidLength, "fft_forward: empty input");
  const std::vector<Complex> in(samples.begin(), samples.end());
  Spectrum out;
  if (in.size() == 1) {
    out.bin_values = in;  // kissfft crashes on a length-1 plan
  } else {
    detail::fft_engine().fwd(out.bin_values, in);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
  for (Complex& v : out.bin_values) v *= scale;
  out.bin_spacing = sample_rate_hz / static_cast<double>(in.size());
  return out;
}

inline std::vector<Complex> fft_inverse(std::span<const Complex> bins) {
  if (bins.empty()) throw Error(ErrorCode::InvalidLength, "fft_inverse: empty input");
  const std::vector<Complex> in(bins.begin(), bins.end());
  if (in.size() == 1) return in;
  std::vector<Complex> out;
  auto& engine = detail::fft_engine();
  engine.SetFlag(Eigen::FFT<double>::Unscaled);
  engine.inv(out, in);
  engine.ClearFlag(Eigen::FFT<double>::Unscaled);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
  for (Complex& v : out) v *= scale;
  return out;
}

inline std::vector<Complex> fft_inverse(const Spectrum& spectrum) { return fft_inverse(spectrum.bin_values); }

/// Reorders DC-centred values (index floor(L/2) = DC) into natural FFT order.
inline std::vector<Complex> centered_to_fft_order(std::span<const Complex> centered) {
  const std::size_t len = centered.size();
  const std::size_t half = len / 2;
  std::vector<Complex> out(len);
  for (std::size_t s = 0; s < len; ++s) {
    const long offset = static_cast<long>(s) - static_cast<long>(half);
    const auto k = static_cast<std::size_t>((offset + static_cast<long>(len)) % static_cast<long>(len));
    out[k] = centered[s];
  }
  return out;
}

inline std::vector<Complex> fft_order_to_centered(std::span<const Complex> natural) {
  const std::size_t len = natural.size();
  const std::size_t half = len / 2;
  std::vector<Complex> out(len);
  for (std::size_t s = 0; s < len; ++s) {
    const long offset = static_cast<long>(s) - static_cast<long>(half);
    const auto k = static_cast<std::size_t>((offset + static_cast<long>(len)) % static_cast<long>(len));
    out[s] = natural[k];
  }
  return out;
}

inline Eigen::VectorXd singular_values(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues();
}

/// Number of singular values above rel_tol * sigma_max.
inline Eigen::Index numerical_rank(const ComplexMatrix& m, double rel_tol = 1e-10) {
  if (m.size() == 0) return 0;
  const Eigen::VectorXd sv = singular_values(m);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++rank;
  return rank;
}

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// max(rows, cols) * eps * sigma_max are treated as zero.
inline ComplexMatrix pseudo_inverse(const ComplexMatrix& m) {
  if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "pseudo_inverse: empty matrix");
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace phasemo

#endif  // PHASEMO_CORE_HPP
