// Copyright 2026 The NACF Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <stdexcept>
#include <string>

namespace nacf {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDegenerateGeometry = 2,
  kInsufficientDecay = 3,
  kDegenerate = 4,
  kNonFinite = 5,
  kIo = 6,
  kFormat = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void Require(bool cond, const std::string& what) {
  if (!cond) Fail(ErrorCode::kInvalidArgument, what);
}

}  // namespace nacf
