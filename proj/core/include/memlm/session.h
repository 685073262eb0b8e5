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

// A training run in 32-bit mode: model, optional dictionary, optimizer,
// deterministic batch sampler, and the checkpoint format.
//
// Checkpoint layout (version 1, all integers little-endian):
//   "MEMLMCKP"            8 bytes magic
//   u32                   format version
//   u64, bytes            header length, then a JSON header holding the
//                         canonical run config, its hashes, generator and
//                         step state, tensor names/shapes in storage order,
//                         and the training frequency table
//   f32[]                 model parameters in declared order
//   f32[]                 dictionary memory (U*M*d_emb, row-major u,m,d),
//                         present when the run uses a dictionary
//   f32[], f32[]          Adam first moments, then second moments, per
//                         parameter in declared order
//   u64                   FNV-1a 64 of every preceding byte

#ifndef MEMLM_SESSION_H_
#define MEMLM_SESSION_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "memlm/corpus.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"
#include "memlm/run_config.h"
#include "memlm/trainer.h"

namespace memlm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class TrainingSession {
 public:
  // Fresh initialization. config.model.vocab_size must be set.
  TrainingSession(const RunConfig& config, FrequencyTable freq);
  TrainingSession(const TrainingSession&) = delete;
  TrainingSession& operator=(const TrainingSession&) = delete;

  // Throws DataError on bad magic, version, checksum or header.
  static std::unique_ptr<TrainingSession> Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  // The batch used for optimizer step `step` (1-based). Depends only on
  // train.seed, the step and the corpus, so resumed runs see the same data.
  std::vector<Sentence> SampleBatch(std::span<const Sentence> corpus, std::int64_t step) const;

  StepStats Step(std::span<const Sentence> corpus);

  const RunConfig& config() const { return config_; }
  const FrequencyTable& frequencies() const { return freq_; }
  TransformerLM<float>& model() { return model_; }
  const TransformerLM<float>& model() const { return model_; }
  LookupDictionary<float>* dictionary() { return dict_ ? &*dict_ : nullptr; }
  const LookupDictionary<float>* dictionary() const { return dict_ ? &*dict_ : nullptr; }
  Trainer<float>& trainer() { return trainer_; }
  std::int64_t step() const { return trainer_.optimizer().step(); }
  std::uint64_t total_dict_updates() const { return total_dict_updates_; }

 private:
  RunConfig config_;
  FrequencyTable freq_;
  TransformerLM<float> model_;
  std::optional<LookupDictionary<float>> dict_;
  Trainer<float> trainer_;
  std::uint64_t total_dict_updates_ = 0;
};

// Reads only the JSON header of a checkpoint (after verifying its checksum).
RunConfig ReadCheckpointConfig(const std::filesystem::path& path);

// Refuses `checkpoint` under `requested` when the architecture hashes differ.
void CheckCompatible(const RunConfig& checkpoint, const RunConfig& requested);

}  // namespace memlm

#endif  // MEMLM_SESSION_H_
