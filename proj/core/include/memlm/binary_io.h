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

// Little-endian primitives shared by the checkpoint and dictionary formats.

#ifndef MEMLM_BINARY_IO_H_
#define MEMLM_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "memlm/common.h"

namespace memlm {

static_assert(std::endian::native == std::endian::little,
              "artifact formats assume a little-endian host");

inline void WriteU64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint64_t ReadU64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw DataError("truncated input while reading u64");
  return v;
}

inline void WriteU32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

inline std::uint32_t ReadU32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw DataError("truncated input while reading u32");
  return v;
}

// Values are stored as float32 regardless of T.
template <Real T>
void WriteF32Array(std::ostream& os, std::span<const T> values) {
  std::vector<float> buf(values.begin(), values.end());
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

template <Real T>
void ReadF32Array(std::istream& is, std::span<T> out) {
  std::vector<float> buf(out.size());
  is.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!is) throw DataError("truncated input while reading float tensor");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(buf[i]);
}

}  // namespace memlm

#endif  // MEMLM_BINARY_IO_H_
