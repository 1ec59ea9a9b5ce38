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

#include <gtest/gtest.h>

#include <algorithm>
#include <bitset>
#include <cmath>
#include <set>
#include <vector>

#include "phasemo/core.hpp"
#include "phasemo/rng.hpp"
#include "phasemo/waveform.hpp"

namespace {

using namespace phasemo;

std::vector<Complex> random_vector(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<Complex> v(n);
  for (auto& x : v) x = rng.complex_normal();
  return v;
}

// Direct O(L^2) unitary DFT.
std::vector<Complex> naive_dft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t t = 0; t < n; ++t)
      acc += x[t] * std::polar(1.0, -kTwoPi * static_cast<double>(k * t % n) / static_cast<double>(n));
    out[k] = acc / std::sqrt(static_cast<double>(n));
  }
  return out;
}

TEST(Fft, ImpulseGivesFlatSpectrum) {
  const std::vector<Complex> x{1.0, 0.0, 0.0, 0.0};
  const auto spec = fft_forward(x);
  for (const Complex& v : spec.bin_values) EXPECT_NEAR(std::abs(v - Complex{0.5, 0.0}), 0.0, 1e-15);
}

TEST(Fft, ConstantGivesDcOnly) {
  const std::vector<Complex> x{1.0, 1.0, 1.0, 1.0};
  const auto spec = fft_forward(x);
  EXPECT_NEAR(std::abs(spec.bin_values[0] - Complex{2.0, 0.0}), 0.0, 1e-15);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(std::abs(spec.bin_values[k]), 0.0, 1e-15);
}

TEST(Fft, RandomRoundTrip) {
  const auto x = random_vector(64, 11);
  const auto back = fft_inverse(fft_forward(x));
  EXPECT_LT(relative_rms_error(back, x), 1e-12);
}

TEST(Fft, MatchesDirectDftAndParsevalForAnyLength) {
  for (std::size_t n : {1u, 2u, 3u, 7u, 12u, 64u, 100u}) {
    const auto x = random_vector(n, 100 + n);
    const auto spec = fft_forward(x);
    EXPECT_LT(relative_rms_error(spec.bin_values, naive_dft(x)), 1e-12) << "L=" << n;
    EXPECT_NEAR(energy(spec.bin_values), energy(x), 1e-12 * energy(x)) << "L=" << n;
  }
}

TEST(Fft, SingleSampleIsItsOwnTransform) {
  const std::vector<Complex> x{Complex(1.0, 2.0)};
  EXPECT_EQ(fft_forward(x).bin_values, x);
  EXPECT_EQ(fft_inverse(x), x);
}

TEST(Fft, EmptyInputIsRejected) {
  const std::vector<Complex> empty;
  try {
    fft_forward(empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLength);
  }
  EXPECT_THROW(fft_inverse(empty), Error);
}

TEST(Fft, BinFrequenciesAreSigned) {
  const auto spec = fft_forward(random_vector(8, 1), 800.0);
  EXPECT_DOUBLE_EQ(spec.bin_spacing, 100.0);
  EXPECT_DOUBLE_EQ(spec.frequency(0), 0.0);
  EXPECT_DOUBLE_EQ(spec.frequency(3), 300.0);
  EXPECT_DOUBLE_EQ(spec.frequency(4), -400.0);
  EXPECT_DOUBLE_EQ(spec.frequency(7), -100.0);
}

TEST(Fft, CentredOrderRoundTrip) {
  for (std::size_t n : {1u, 4u, 5u, 64u}) {
    const auto x = random_vector(n, 7);
    EXPECT_EQ(fft_order_to_centered(centered_to_fft_order(x)), x);
  }
  // DC sits at floor(S/2) in centred order.
  std::vector<Complex> c(5, 0.0);
  c[2] = 1.0;
  EXPECT_EQ(centered_to_fft_order(c)[0], Complex(1.0));
}

TEST(Sinc, NormalisedDefinition) {
  EXPECT_DOUBLE_EQ(sinc(0.0), 1.0);
  EXPECT_NEAR(sinc(1.0), 0.0, 1e-16);
  EXPECT_NEAR(sinc(0.5), 2.0 / kPi, 1e-15);
  EXPECT_NEAR(sinc(-2.5), sinc(2.5), 1e-16);
}

TEST(PseudoInverse, IdentityIsSelfInverse) {
  const ComplexMatrix i3 = ComplexMatrix::Identity(3, 3);
  EXPECT_LT((pseudo_inverse(i3) - i3).norm(), 1e-15);
}

TEST(PseudoInverse, DiagonalInvertsEntries) {
  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  ComplexMatrix expected = ComplexMatrix::Zero(2, 2);
  expected(0, 0) = 0.5;
  expected(1, 1) = 0.25;
  EXPECT_LT((pseudo_inverse(d) - expected).norm(), 1e-15);
}

void expect_penrose(const ComplexMatrix& a, double tol) {
  const ComplexMatrix p = pseudo_inverse(a);
  EXPECT_LT((a * p * a - a).norm(), tol);
  EXPECT_LT((p * a * p - p).norm(), tol);
  EXPECT_LT(((a * p).adjoint() - a * p).norm(), tol);
  EXPECT_LT(((p * a).adjoint() - p * a).norm(), tol);
}

TEST(PseudoInverse, FullRowRankRightInverse) {
  const std::vector<Complex> entries{{1, 2}, {0, -1}, {3, 0}, {2, 0}, {1, 1}, {-1, 4}};
  const ComplexMatrix m = make_matrix(2, 3, entries);
  EXPECT_LT((m * pseudo_inverse(m) - ComplexMatrix::Identity(2, 2)).norm(), 1e-9);
  expect_penrose(m, 1e-12);
}

TEST(PseudoInverse, PenroseConditionsOnRandomAndRankDeficient) {
  SeededRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rows = static_cast<Eigen::Index>(1 + rng.below(6));
    const auto cols = static_cast<Eigen::Index>(1 + rng.below(6));
    ComplexMatrix a(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.complex_normal();
    expect_penrose(a, 1e-10);
    if (rows > 1) {
      a.row(rows - 1) = a.row(0);
      expect_penrose(a, 1e-10);
      EXPECT_LE(numerical_rank(a), std::min(rows - 1, cols));
    }
  }
}

TEST(PseudoInverse, NumericalRank) {
  ComplexMatrix m(2, 2);
  m << Complex(1, 0), Complex(2, 0), Complex(2, 0), Complex(4, 0);
  EXPECT_EQ(numerical_rank(m), 1);
  EXPECT_EQ(numerical_rank(ComplexMatrix::Identity(4, 4)), 4);
  EXPECT_EQ(numerical_rank(ComplexMatrix::Zero(3, 3)), 0);
}

TEST(MakeMatrix, RowMajorAndShapeChecked) {
  const std::vector<Complex> e{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const ComplexMatrix m = make_matrix(2, 3, e);
  EXPECT_EQ(m(1, 0), Complex(4.0));
  EXPECT_THROW(make_matrix(2, 2, e), Error);
}

TEST(Rng, SameSeedSameStream) {
  SeededRng a(42);
  SeededRng b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DerivedSeedsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 4; ++s)
    for (std::uint64_t t = 0; t < 64; ++t) seen.insert(derive_seed(s, {t}));
  EXPECT_EQ(seen.size(), 256u);
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
}

TEST(Rng, MomentsOfDistributions) {
  SeededRng rng(9);
  const int n = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  double sc2 = 0.0;
  std::size_t below_hits = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    sc2 += std::norm(rng.complex_normal(0.25));
    below_hits += rng.below(10) == 3;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.01);
  EXPECT_NEAR(sc2 / n, 0.25, 0.003);
  EXPECT_NEAR(static_cast<double>(below_hits) / n, 0.1, 0.003);
}

std::vector<std::uint8_t> bits_of(unsigned value, int width) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) out[static_cast<std::size_t>(i)] = (value >> (width - 1 - i)) & 1U;
  return out;
}

TEST(Qam, QpskZeroBitsIsUpperRightCorner) {
  const std::vector<std::uint8_t> bits{0, 0};
  const auto sym = waveform::qam_modulate(bits, 4);
  ASSERT_EQ(sym.size(), 1u);
  EXPECT_NEAR(std::abs(sym[0] - Complex(1.0, 1.0) / std::sqrt(2.0)), 0.0, 1e-15);
}

class QamOrder : public ::testing::TestWithParam<int> {};

TEST_P(QamOrder, UnitEnergyBijectionAndGrayNeighbours) {
  const int order = GetParam();
  const int m = waveform::bits_per_symbol(order);
  std::vector<Complex> points;
  double energy_sum = 0.0;
  for (int v = 0; v < order; ++v) {
    const auto p = waveform::qam_modulate(bits_of(static_cast<unsigned>(v), m), order).front();
    points.push_back(p);
    energy_sum += std::norm(p);
  }
  EXPECT_NEAR(energy_sum / order, 1.0, 1e-12);

  std::set<std::pair<long, long>> distinct;
  for (const auto& p : points) distinct.insert({std::lround(p.real() * 1e9), std::lround(p.imag() * 1e9)});
  EXPECT_EQ(distinct.size(), static_cast<std::size_t>(order));

  // Gray: nearest neighbours differ in exactly one bit.
  double dmin = 1e9;
  for (int a = 0; a < order; ++a)
    for (int b = a + 1; b < order; ++b) dmin = std::min(dmin, std::abs(points[a] - points[b]));
  for (int a = 0; a < order; ++a)
    for (int b = a + 1; b < order; ++b)
      if (std::abs(points[a] - points[b]) < dmin * 1.0001) {
        EXPECT_EQ(std::bitset<16>(static_cast<unsigned>(a ^ b)).count(), 1u) << a << " vs " << b;
      }
}

INSTANTIATE_TEST_SUITE_P(AllOrders, QamOrder, ::testing::Values(4, 16, 64, 256));

TEST(Qam, RejectsBadOrderAndLength) {
  const std::vector<std::uint8_t> bits{0, 1, 1};
  try {
    waveform::qam_modulate(bits, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedOrder);
  }
  try {
    waveform::qam_modulate(bits, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLength);
  }
}

TEST(Ofdm, DcToneIsConstant) {
  std::vector<Complex> sym(64, 0.0);
  sym[32] = 1.0;
  const auto frame = waveform::ofdm_modulate(sym, 100e6);
  ASSERT_EQ(frame.time_samples.size(), 64u);
  for (const Complex& v : frame.time_samples) EXPECT_NEAR(std::abs(v - Complex(0.125, 0.0)), 0.0, 1e-15);
}

TEST(Ofdm, RoundTripAndZeroInput) {
  const auto x = random_vector(64, 3);
  const auto back = waveform::ofdm_demodulate(waveform::ofdm_modulate(x, 100e6));
  EXPECT_LT(relative_rms_error(back, x), 1e-12);

  const std::vector<Complex> zeros(64, 0.0);
  for (const Complex& v : waveform::ofdm_modulate(zeros, 100e6).time_samples) EXPECT_EQ(v, Complex(0.0));
}

TEST(Ofdm, DemodulateRejectsMismatchedFrame) {
  waveform::OfdmFrame f;
  f.subcarrier_count = 64;
  f.time_samples.assign(63, 0.0);
  EXPECT_THROW(waveform::ofdm_demodulate(f), Error);
}

TEST(Evm, IdentityAndScaling) {
  const auto ref = random_vector(100, 4);
  EXPECT_EQ(waveform::evm_rms(ref, ref), 0.0);
  std::vector<Complex> scaled(ref);
  for (auto& v : scaled) v *= 1.1;
  EXPECT_NEAR(waveform::evm_rms(scaled, ref), 0.1, 1e-12);
}

TEST(Evm, NoisyQpskMonteCarlo) {
  SeededRng rng(77);
  std::vector<Complex> ref;
  std::vector<Complex> rx;
  for (int i = 0; i < 10000; ++i) {
    const std::vector<std::uint8_t> b{static_cast<std::uint8_t>(rng.bit()), static_cast<std::uint8_t>(rng.bit())};
    const Complex s = waveform::qam_modulate(b, 4).front();
    ref.push_back(s);
    rx.push_back(s + rng.complex_normal(0.01));
  }
  EXPECT_NEAR(waveform::evm_rms(rx, ref), 0.1, 0.01);
}

TEST(Evm, ErrorPaths) {
  const std::vector<Complex> a(4, 1.0);
  const std::vector<Complex> b(3, 1.0);
  const std::vector<Complex> zero(4, 0.0);
  try {
    waveform::evm_rms(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidLength);
  }
  try {
    waveform::evm_rms(a, zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateReference);
  }
}

TEST(UserSymbols, ShapeAndDeterminism) {
  SeededRng a(1);
  SeededRng b(1);
  const auto x = waveform::random_user_symbols(3, 16, 2, 16, a);
  const auto y = waveform::random_user_symbols(3, 16, 2, 16, b);
  EXPECT_EQ(x.users(), 3);
  EXPECT_EQ(x.subcarriers(), 16u);
  EXPECT_EQ(x.ofdm_symbols(), 2);
  for (std::size_t s = 0; s < 16; ++s) EXPECT_EQ(x.per_subcarrier[s], y.per_subcarrier[s]);
  EXPECT_EQ(x.user_stream(1).size(), 32u);
}

}  // namespace
