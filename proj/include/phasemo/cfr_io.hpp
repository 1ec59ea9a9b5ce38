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

#ifndef PHASEMO_CFR_IO_HPP
#define PHASEMO_CFR_IO_HPP

// CFR channel file:
//   8-byte magic "CFRv0001"
//   one JSON header line: {"k":int,"n":int,"s":int,"fc_hz":float,"scs_hz":float,"meta":string}\n
//   k*n*s complex entries, row-major [k][n][s], each (re, im) as IEEE-754
//   little-endian float64.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "phasemo/channel.hpp"

namespace phasemo::channel {

inline constexpr char kCfrMagic[] = "CFRv0001";

namespace detail {

inline void put_f64_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(buf, 8);
}

inline double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void write_cfr(std::ostream& out, const ChannelFrequencyResponse& h) {
  nlohmann::ordered_json header;
  header["k"] = h.users();
  header["n"] = h.antennas();
  header["s"] = h.subcarriers();
  header["fc_hz"] = h.center_frequency_hz();
  header["scs_hz"] = h.subcarrier_spacing_hz();
  header["meta"] = h.meta();
  out.write(kCfrMagic, 8);
  out << header.dump() << '\n';
  for (const Complex& v : h.entries()) {
    detail::put_f64_le(out, v.real());
    detail::put_f64_le(out, v.imag());
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing CFR stream");
}

inline ChannelFrequencyResponse read_cfr(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCfrMagic, 8) != 0)
    throw Error(ErrorCode::FormatError, "missing CFRv0001 magic");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::FormatError, "missing JSON header line");

  std::size_t k = 0, n = 0, s = 0;
  double fc = 0.0, scs = 0.0;
  std::string meta;
  try {
    const auto header = nlohmann::json::parse(line);
    const auto dim = [&](const char* key) {
      const auto& v = header.at(key);
      if (!v.is_number_integer() || v.get<long long>() < 1)
        throw Error(ErrorCode::FormatError, std::string("header field '") + key + "' must be a positive integer");
      return v.get<std::size_t>();
    };
    k = dim("k");
    n = dim("n");
    s = dim("s");
    fc = header.at("fc_hz").get<double>();
    scs = header.at("scs_hz").get<double>();
    meta = header.at("meta").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("bad CFR header: ") + e.what());
  }

  const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t expected = k * n * s * 16;
  if (payload.size() != expected)
    throw Error(ErrorCode::TruncatedPayload, "header declares " + std::to_string(k * n * s) +
                                                 " complex entries, payload holds " +
                                                 std::to_string(payload.size()) + " bytes");
  ChannelFrequencyResponse h(k, n, s, fc, scs, meta);
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  auto entries = h.entries();
  for (std::size_t i = 0; i < entries.size(); ++i)
    entries[i] = {detail::get_f64_le(bytes + 16 * i), detail::get_f64_le(bytes + 16 * i + 8)};
  if (!h.all_finite()) throw Error(ErrorCode::FormatError, "CFR payload contains non-finite values");
  return h;
}

inline void save_cfr(const ChannelFrequencyResponse& h, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_cfr(out, h);
}

inline ChannelFrequencyResponse load_cfr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_cfr(in);
}

/// Text export, header "k,n,s,re,im". Printed with 17 significant digits but
/// the binary format remains the exact one.
inline void write_cfr_csv(std::ostream& out, const ChannelFrequencyResponse& h) {
  out << "k,n,s,re,im\n";
  char buf[96];
  for (std::size_t k = 0; k < h.users(); ++k)
    for (std::size_t n = 0; n < h.antennas(); ++n)
      for (std::size_t s = 0; s < h.subcarriers(); ++s) {
        const Complex v = h.at(k, n, s);
        std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.17g,%.17g\n", k, n, s, v.real(), v.imag());
        out << buf;
      }
}

/// Reads the CSV produced by write_cfr_csv; dimensions are inferred from the
/// largest indices and missing entries stay zero.
inline ChannelFrequencyResponse read_cfr_csv(std::istream& in, double center_hz, double spacing_hz,
                                             std::string meta = "csv import") {
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,n,s,re,im", 0) != 0)
    throw Error(ErrorCode::FormatError, "CSV channel needs header k,n,s,re,im");
  struct Row {
    std::size_t k, n, s;
    double re, im;
  };
  std::vector<Row> rows;
  std::size_t kmax = 0, nmax = 0, smax = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r{};
    std::istringstream ls(line);
    char c1, c2, c3, c4;
    if (!(ls >> r.k >> c1 >> r.n >> c2 >> r.s >> c3 >> r.re >> c4 >> r.im) || c1 != ',' || c2 != ',' || c3 != ',' ||
        c4 != ',')
      throw Error(ErrorCode::FormatError, "bad CSV channel row: " + line);
    kmax = std::max(kmax, r.k);
    nmax = std::max(nmax, r.n);
    smax = std::max(smax, r.s);
    rows.push_back(r);
  }
  if (rows.empty()) throw Error(ErrorCode::FormatError, "CSV channel has no rows");
  ChannelFrequencyResponse h(kmax + 1, nmax + 1, smax + 1, center_hz, spacing_hz, std::move(meta));
  for (const Row& r : rows) h.at(r.k, r.n, r.s) = {r.re, r.im};
  return h;
}

}  // namespace phasemo::channel

#endif  // PHASEMO_CFR_IO_HPP
