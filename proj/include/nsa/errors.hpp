// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace nsa {

enum class ErrorCode {
  INVALID_ARGUMENT,
  GRID_MISMATCH,
  DENSE_CAP,
  NEAR_SINGULAR,
  NO_CONTRACTION,
  NOT_NILPOTENT,
  NOT_SYMMETRIC,
  DEGENERATE_PAIRING,
  NO_STABILIZATION,
  ZERO_VECTOR,
  FIT_WINDOW,
  DUALITY_DEGENERATE,
  CLUSTER_AMBIGUOUS,
  EIGEN_REJECTED,
  CONSTRUCTION_FAILED,
  CONFIG
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nsa
