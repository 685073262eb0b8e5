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

// Memory lookup dictionary.
//
// A U x M x d_emb tensor of memory vectors. Position k of a sequence is
// mapped to slot i = (sum of the last N token ids) mod U. The slot's M
// vectors are read with single-query attention (context selection) and are
// written only through a Bernoulli-gated moving average toward the
// embedding of the token that followed k; the optimizer never touches them.

#ifndef MEMLM_MEMORY_DICT_H_
#define MEMLM_MEMORY_DICT_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "memlm/common.h"
#include "memlm/corpus.h"
#include "memlm/random.h"

namespace memlm {

struct DictConfig {
  int slots = 5000;         // U
  int vectors_per_slot = 64;  // M
  int ngram_order = 2;      // N
  double alpha = 0.5;       // weight kept by the old vector on update
  std::int64_t warmup_steps = 1000;
  double p_floor = 0.05;
  double p_ceil = 1.0;
  std::uint64_t seed = 1;
  // Fixed update probability for every token; frequency-based when unset.
  std::optional<double> fixed_ratio;
  // Adds the Transformer output back onto the selected context.
  bool residual = false;
  double init_std = 0.02;

  void Validate() const;
  bool operator==(const DictConfig&) const = default;
};

enum class DictMode { kTraining, kFrozen };

// (sum of window ids) mod U. `window` holds exactly N ids.
std::size_t HashIndex(std::span<const TokenId> window, int slots);

// Slot of position `pos` in `tokens`, with BOS filling the window left of
// position 0.
std::size_t SlotIndex(std::span<const TokenId> tokens, std::size_t pos, int ngram_order,
                      int slots);

// clamp(1 / ln(count), p_floor, p_ceil); counts <= 1 give p_ceil.
double UpdateRatio(std::uint64_t count, double p_floor, double p_ceil);

// Single-query attention over one slot:
//   weights = softmax(memory * query / sqrt(d)),  c_tilde = weights^T memory.
// `memory` is M x d row-major.
template <Real T>
void SelectContext(std::span<const T> query, std::span<const T> memory, std::span<T> c_tilde,
                   std::span<T> weights);

// Backward of SelectContext. Accumulates into grad_query and, when
// non-empty, into grad_memory (analysis only).
template <Real T>
void SelectContextBackward(std::span<const T> query, std::span<const T> memory,
                           std::span<const T> weights, std::span<const T> grad_c_tilde,
                           std::span<T> grad_query, std::span<T> grad_memory);

template <Real T>
class LookupDictionary {
 public:
  LookupDictionary(const DictConfig& config, int d_emb);

  const DictConfig& config() const { return config_; }
  int d_emb() const { return d_emb_; }
  int slots() const { return config_.slots; }
  int vectors_per_slot() const { return config_.vectors_per_slot; }

  DictMode mode() const { return mode_; }
  void set_mode(DictMode mode) { mode_ = mode; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // True when Update and UpdateBatch change memory.
  bool UpdatesEnabled() const {
    return mode_ == DictMode::kTraining && step_ > config_.warmup_steps;
  }

  std::span<const T> memory() const { return memory_; }
  std::span<T> mutable_memory() { return memory_; }
  std::span<const T> Slot(std::size_t i) const;

  // Each of the slot's M vectors independently moves to
  // alpha * d + (1 - alpha) * e_next with probability `ratio`. Returns the
  // number of vectors changed; a no-op outside training or during warmup.
  std::size_t Update(std::size_t slot, std::span<const T> e_next, double ratio);

  double RatioFor(TokenId next, const FrequencyTable& freq) const;

  // Update pass over a batch after selection and the optimizer step.
  // Increments the step counter once (training mode only), then, if updates
  // are enabled, walks rows in order and positions left to right, updating
  // the slot of each position that has a following non-PAD token.
  // `embedding` is the vocab x d_emb token table. Returns vectors changed.
  std::size_t UpdateBatch(std::span<const Sentence> batch, std::span<const T> embedding,
                          const FrequencyTable& freq);

  // Redraws memory i.i.d. normal(0, init_std) from `seed`, row-major (u,m,d).
  void Reinitialize(std::uint64_t seed);

  std::uint64_t MemoryChecksum() const { return Checksum<T>(memory_); }

  // Standalone binary block: magic, U, M, d_emb, step, seed as u64 LE,
  // then U*M*d_emb float32 LE.
  void Export(std::ostream& os) const;
  void Export(const std::filesystem::path& path) const;
  static LookupDictionary Import(std::istream& is, const DictConfig& config);

  template <Real U>
  LookupDictionary<U> Cast() const {
    LookupDictionary<U> out(config_, d_emb_);
    auto dst = out.mutable_memory();
    for (std::size_t i = 0; i < memory_.size(); ++i) dst[i] = static_cast<U>(memory_[i]);
    out.set_mode(mode_);
    out.set_step(step_);
    out.rng() = rng_;
    return out;
  }

 private:
  DictConfig config_;
  int d_emb_;
  DictMode mode_ = DictMode::kTraining;
  std::int64_t step_ = 0;
  Rng rng_;
  std::vector<T> memory_;
};

extern template class LookupDictionary<float>;
extern template class LookupDictionary<double>;

}  // namespace memlm

#endif  // MEMLM_MEMORY_DICT_H_
