// Copyright 2026 The unieval Authors.
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

#ifndef UNIEVAL_ERROR_HPP_
#define UNIEVAL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace unieval {

// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kConfig,         // bad flags / config file
  kCapability,     // model lacks grad_dot or attention
  kValidation,     // malformed or out-of-range input data
  kParse,          // unparsable record (subclass of validation for exit codes)
  kConflict,       // duplicate ids
  kTransport,      // model unavailable (adapter I/O, timeouts)
  kProtocol,       // adapter replied with something off-protocol
  kCapacity,       // input longer than the model accepts
  kNumeric,        // non-finite values, divergence
  kDegenerate,     // input that a metric cannot score (recorded, skipped)
  kContract,       // caller broke a precondition
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error kind: 2 config, 3 capability, 4 validation,
// 5 model transport, 1 anything else.
int exit_code_for(ErrorKind kind);

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace unieval

#endif  // UNIEVAL_ERROR_HPP_
