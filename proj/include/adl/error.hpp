// Copyright 2026 The adlrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADL_ERROR_HPP_
#define ADL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace adl {

// Error categories. Each maps to a distinct process exit code in the CLI
// (see exit_code_for below).
enum class errc {
  input,               // missing/unreadable/empty inputs, bad arguments
  format,              // malformed container, bad magic/version, schema mismatch
  unsupported_format,  // recognizable container but unsupported encoding
  corruption,          // truncated payload, inconsistent byte counts
  numeric,             // NaN/Inf encountered where finite values are required
};

class Error : public std::runtime_error {
 public:
  Error(errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline Error input_error(std::string msg) { return Error(errc::input, std::move(msg)); }
inline Error format_error(std::string msg) { return Error(errc::format, std::move(msg)); }
inline Error unsupported_format_error(std::string msg) {
  return Error(errc::unsupported_format, std::move(msg));
}
inline Error corruption_error(std::string msg, std::size_t byte_offset) {
  return Error(errc::corruption,
               msg + " (at byte offset " + std::to_string(byte_offset) + ")");
}
inline Error numeric_error(std::string msg) { return Error(errc::numeric, std::move(msg)); }

// Exit-code table: 0 success, 2 input, 3 format-family, 4 numeric.
inline int exit_code_for(errc code) noexcept {
  switch (code) {
    case errc::input: return 2;
    case errc::format:
    case errc::unsupported_format:
    case errc::corruption: return 3;
    case errc::numeric: return 4;
  }
  return 1;
}

}  // namespace adl

#endif  // ADL_ERROR_HPP_
