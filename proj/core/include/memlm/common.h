/* Copyright 2026 The memlm Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MEMLM_COMMON_H_
#define MEMLM_COMMON_H_

#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace memlm {

using TokenId = std::int32_t;

// Scalar types the numeric kernels are instantiated for. double is the
// gradient-checking mode, float the training/benchmark mode.
template <typename T>
concept Real = std::same_as<T, float> || std::same_as<T, double>;

// Error hierarchy. The CLI maps these onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyper-parameters or option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed or mismatched input data and artifacts.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or parameters.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (id >= V, over-length input).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// 64-bit FNV-1a, used for artifact checksums and config hashes.
class Fnv1a {
 public:
  void Update(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) {
      state_ ^= static_cast<std::uint64_t>(b);
      state_ *= 0x100000001b3ULL;
    }
  }
  void Update(std::string_view s) { Update(std::as_bytes(std::span(s.data(), s.size()))); }
  template <typename T>
  void UpdateValues(std::span<const T> values) {
    Update(std::as_bytes(values));
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

template <typename T>
std::uint64_t Checksum(std::span<const T> values) {
  Fnv1a h;
  h.UpdateValues(values);
  return h.digest();
}

std::string HexDigest(std::uint64_t v);

}  // namespace memlm

#endif  // MEMLM_COMMON_H_
