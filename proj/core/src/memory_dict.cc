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

#include "memlm/memory_dict.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "memlm/binary_io.h"
#include "memlm/model.h"

namespace memlm {

namespace {

constexpr char kDictMagic[8] = {'M', 'E', 'M', 'L', 'M', 'D', 'C', 'T'};
constexpr std::uint64_t kMemoryStream = 0x6d656d6f7279ULL;
constexpr std::uint64_t kBernoulliStream = 0x6265726eULL;

}  // namespace

void DictConfig::Validate() const {
  if (slots < 1 || vectors_per_slot < 1 || ngram_order < 1) {
    throw ConfigError("dictionary U, M and N must all be >= 1");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("dictionary alpha must lie in [0,1]");
  if (!(p_floor > 0.0 && p_floor <= p_ceil && p_ceil <= 1.0)) {
    throw ConfigError("dictionary ratio bounds must satisfy 0 < p_floor <= p_ceil <= 1");
  }
  if (fixed_ratio && !(*fixed_ratio >= 0.0 && *fixed_ratio <= 1.0)) {
    throw ConfigError("fixed update ratio must lie in [0,1]");
  }
  if (warmup_steps < 0) throw ConfigError("dictionary warmup_steps must be >= 0");
  if (!(init_std > 0.0)) throw ConfigError("dictionary init_std must be positive");
}

std::size_t HashIndex(std::span<const TokenId> window, int slots) {
  std::uint64_t sum = 0;
  for (TokenId id : window) sum += static_cast<std::uint64_t>(id);
  return static_cast<std::size_t>(sum % static_cast<std::uint64_t>(slots));
}

std::size_t SlotIndex(std::span<const TokenId> tokens, std::size_t pos, int ngram_order,
                      int slots) {
  std::uint64_t sum = 0;
  for (int back = 0; back < ngram_order; ++back) {
    const bool inside = pos >= static_cast<std::size_t>(back);
    sum += static_cast<std::uint64_t>(inside ? tokens[pos - back] : Vocabulary::kBos);
  }
  return static_cast<std::size_t>(sum % static_cast<std::uint64_t>(slots));
}

double UpdateRatio(std::uint64_t count, double p_floor, double p_ceil) {
  if (count <= 1) return p_ceil;
  const double p = 1.0 / std::log(static_cast<double>(count));
  return std::clamp(p, p_floor, p_ceil);
}

template <Real T>
void SelectContext(std::span<const T> query, std::span<const T> memory, std::span<T> c_tilde,
                   std::span<T> weights) {
  const std::size_t d = query.size(), M = weights.size();
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  for (std::size_t m = 0; m < M; ++m) {
    const T* row = memory.data() + m * d;
    T dot = 0;
    for (std::size_t j = 0; j < d; ++j) dot += row[j] * query[j];
    weights[m] = dot * scale;
  }
  SoftmaxInPlace(weights);
  std::fill(c_tilde.begin(), c_tilde.end(), T(0));
  for (std::size_t m = 0; m < M; ++m) {
    const T* row = memory.data() + m * d;
    const T w = weights[m];
    for (std::size_t j = 0; j < d; ++j) c_tilde[j] += w * row[j];
  }
}

template <Real T>
void SelectContextBackward(std::span<const T> query, std::span<const T> memory,
                           std::span<const T> weights, std::span<const T> grad_c_tilde,
                           std::span<T> grad_query, std::span<T> grad_memory) {
  const std::size_t d = query.size(), M = weights.size();
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  std::vector<T> dw(M);
  T weighted = 0;
  for (std::size_t m = 0; m < M; ++m) {
    const T* row = memory.data() + m * d;
    T dot = 0;
    for (std::size_t j = 0; j < d; ++j) dot += grad_c_tilde[j] * row[j];
    dw[m] = dot;
    weighted += weights[m] * dot;
  }
  for (std::size_t m = 0; m < M; ++m) {
    const T ds = weights[m] * (dw[m] - weighted) * scale;
    const T* row = memory.data() + m * d;
    for (std::size_t j = 0; j < d; ++j) grad_query[j] += ds * row[j];
    if (!grad_memory.empty()) {
      T* g = grad_memory.data() + m * d;
      for (std::size_t j = 0; j < d; ++j) g[j] += weights[m] * grad_c_tilde[j] + ds * query[j];
    }
  }
}

template void SelectContext<float>(std::span<const float>, std::span<const float>,
                                   std::span<float>, std::span<float>);
template void SelectContext<double>(std::span<const double>, std::span<const double>,
                                    std::span<double>, std::span<double>);
template void SelectContextBackward<float>(std::span<const float>, std::span<const float>,
                                           std::span<const float>, std::span<const float>,
                                           std::span<float>, std::span<float>);
template void SelectContextBackward<double>(std::span<const double>, std::span<const double>,
                                            std::span<const double>, std::span<const double>,
                                            std::span<double>, std::span<double>);

template <Real T>
LookupDictionary<T>::LookupDictionary(const DictConfig& config, int d_emb)
    : config_(config), d_emb_(d_emb), rng_(DeriveSeed(config.seed, kBernoulliStream)) {
  config_.Validate();
  if (d_emb < 1) throw ConfigError("dictionary d_emb must be >= 1");
  memory_.resize(static_cast<std::size_t>(config_.slots) * config_.vectors_per_slot * d_emb_);
  Reinitialize(config_.seed);
}

template <Real T>
void LookupDictionary<T>::Reinitialize(std::uint64_t seed) {
  Rng init(DeriveSeed(seed, kMemoryStream));
  for (auto& v : memory_) v = static_cast<T>(config_.init_std * StandardNormal(init));
}

template <Real T>
std::span<const T> LookupDictionary<T>::Slot(std::size_t i) const {
  if (i >= static_cast<std::size_t>(config_.slots)) {
    throw ContractViolation("dictionary slot " + std::to_string(i) + " out of range");
  }
  const std::size_t stride = static_cast<std::size_t>(config_.vectors_per_slot) * d_emb_;
  return std::span<const T>(memory_).subspan(i * stride, stride);
}

template <Real T>
std::size_t LookupDictionary<T>::Update(std::size_t slot, std::span<const T> e_next,
                                        double ratio) {
  if (!UpdatesEnabled()) return 0;
  if (slot >= static_cast<std::size_t>(config_.slots)) {
    throw ContractViolation("dictionary slot " + std::to_string(slot) + " out of range");
  }
  const std::size_t d = d_emb_, M = config_.vectors_per_slot;
  const T keep = static_cast<T>(config_.alpha);
  const T take = static_cast<T>(1.0 - config_.alpha);
  T* base = memory_.data() + slot * M * d;
  std::size_t changed = 0;
  for (std::size_t m = 0; m < M; ++m) {
    if (!Bernoulli(rng_, ratio)) continue;
    T* row = base + m * d;
    for (std::size_t j = 0; j < d; ++j) row[j] = keep * row[j] + take * e_next[j];
    ++changed;
  }
  return changed;
}

template <Real T>
double LookupDictionary<T>::RatioFor(TokenId next, const FrequencyTable& freq) const {
  if (config_.fixed_ratio) return *config_.fixed_ratio;
  return UpdateRatio(freq.count(next), config_.p_floor, config_.p_ceil);
}

template <Real T>
std::size_t LookupDictionary<T>::UpdateBatch(std::span<const Sentence> batch,
                                             std::span<const T> embedding,
                                             const FrequencyTable& freq) {
  if (mode_ != DictMode::kTraining) return 0;
  ++step_;
  if (!UpdatesEnabled()) return 0;
  const std::size_t d = d_emb_;
  std::size_t changed = 0;
  for (const auto& row : batch) {
    std::size_t len = row.size();
    while (len > 0 && row[len - 1] == Vocabulary::kPad) --len;
    for (std::size_t k = 0; k + 1 < len; ++k) {
      const TokenId next = row[k + 1];
      const std::size_t slot = SlotIndex(row, k, config_.ngram_order, config_.slots);
      changed += Update(slot, embedding.subspan(static_cast<std::size_t>(next) * d, d),
                        RatioFor(next, freq));
    }
  }
  return changed;
}

template <Real T>
void LookupDictionary<T>::Export(std::ostream& os) const {
  os.write(kDictMagic, sizeof(kDictMagic));
  WriteU64(os, static_cast<std::uint64_t>(config_.slots));
  WriteU64(os, static_cast<std::uint64_t>(config_.vectors_per_slot));
  WriteU64(os, static_cast<std::uint64_t>(d_emb_));
  WriteU64(os, static_cast<std::uint64_t>(step_));
  WriteU64(os, config_.seed);
  WriteF32Array<T>(os, memory_);
  if (!os) throw DataError("failed writing dictionary block");
}

template <Real T>
void LookupDictionary<T>::Export(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  Export(os);
}

template <Real T>
LookupDictionary<T> LookupDictionary<T>::Import(std::istream& is, const DictConfig& config) {
  char magic[sizeof(kDictMagic)];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + sizeof(magic), kDictMagic)) {
    throw DataError("not a dictionary block (bad magic)");
  }
  const auto U = ReadU64(is), M = ReadU64(is), d = ReadU64(is);
  const auto step = ReadU64(is), seed = ReadU64(is);
  if (U != static_cast<std::uint64_t>(config.slots) ||
      M != static_cast<std::uint64_t>(config.vectors_per_slot)) {
    throw DataError("dictionary block shape (U=" + std::to_string(U) + ", M=" +
                    std::to_string(M) + ") does not match config (U=" +
                    std::to_string(config.slots) + ", M=" +
                    std::to_string(config.vectors_per_slot) + ")");
  }
  DictConfig c = config;
  c.seed = seed;
  LookupDictionary out(c, static_cast<int>(d));
  ReadF32Array<T>(is, out.memory_);
  out.step_ = static_cast<std::int64_t>(step);
  return out;
}

template class LookupDictionary<float>;
template class LookupDictionary<double>;

}  // namespace memlm
