// Copyright 2026 The simulmt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIMULMT_COMMON_HPP
#define SIMULMT_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace simulmt {

// Reserved token ids, shared by every vocabulary file. <wait> is only ever
// emitted on the target side.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kWaitId = 3;
inline constexpr int kUnkId = 4;
inline constexpr int kNumSpecials = 4;

class Error : public std::runtime_error {
 public:
  enum class Code {
    invalid_argument,
    io,
    parse,
    numeric,
    internal,
  };

  Error(Code code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

[[noreturn]] inline void fail(Error::Code code, const std::string& message) {
  throw Error(code, message);
}

// Numeric precision is a process-wide run mode: f32 quantizes every forward
// result through float storage, f64 keeps full doubles for oracle work.
enum class Precision { f32, f64 };

Precision precision();
void set_precision(Precision p);

// Dropout and similar stochastic ops become identities outside training mode.
bool training_mode();
void set_training_mode(bool on);

// When disabled, tensor ops do not record autodiff nodes (thread-local so
// evaluation workers can decode in parallel against shared parameters).
bool grad_enabled();
void set_grad_enabled(bool on);

struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
  ~NoGradGuard() { set_grad_enabled(prev_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

struct PrecisionGuard {
  explicit PrecisionGuard(Precision p) : prev_(precision()) { set_precision(p); }
  ~PrecisionGuard() { set_precision(prev_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  Precision prev_;
};

}  // namespace simulmt

#endif  // SIMULMT_COMMON_HPP
