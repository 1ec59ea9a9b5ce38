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

#ifndef PHASEMO_ERROR_HPP
#define PHASEMO_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace phasemo {

enum class ErrorCode {
  InvalidLength,
  InvalidArgument,
  UnsupportedOrder,
  DegenerateReference,
  FormatError,
  TruncatedPayload,
  RankDeficient,
  GenerationFailed,
  InvalidSpec,
  AlreadyCompensated,
  AlignmentError,
  InvalidBandwidth,
  InvalidPower,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::DegenerateReference: return "DegenerateReference";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::AlreadyCompensated: return "AlreadyCompensated";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::InvalidBandwidth: return "InvalidBandwidth";
    case ErrorCode::InvalidPower: return "InvalidPower";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a stable error code. All library failures throw this
/// (or a subclass); callers switch on code() rather than parsing what().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Zero forcing failure on one subcarrier.
class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(std::size_t subcarrier)
      : Error(ErrorCode::RankDeficient,
              "effective channel is rank deficient at subcarrier " + std::to_string(subcarrier)),
        subcarrier_(subcarrier) {}

  std::size_t subcarrier() const noexcept { return subcarrier_; }

 private:
  std::size_t subcarrier_;
};

/// Configuration violation; field() is the dotted key path, e.g. "architecture.chains".
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::ConfigError, field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace phasemo

#endif  // PHASEMO_ERROR_HPP
