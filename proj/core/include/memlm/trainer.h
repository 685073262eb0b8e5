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

#ifndef MEMLM_TRAINER_H_
#define MEMLM_TRAINER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "memlm/corpus.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"

namespace memlm {

struct OptimizerConfig {
  double lr = 1e-3;  // peak learning rate, reached at the end of warmup
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double weight_decay = 0.01;  // decoupled, matrices only
  std::int64_t warmup_steps = 10000;

  void Validate() const;
  // Linear warmup to `lr`, then inverse square-root decay. Constant `lr`
  // when warmup_steps == 0.
  double LearningRate(std::int64_t step) const;
  bool operator==(const OptimizerConfig&) const = default;
};

template <Real T>
class Adam {
 public:
  Adam(const OptimizerConfig& config, std::span<const Parameter<T>> params);

  const OptimizerConfig& config() const { return config_; }
  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }

  // Advances the step counter and applies one update. Returns the rate used.
  double Step(std::span<Parameter<T>> params);

  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }

 private:
  OptimizerConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

struct StepStats {
  std::int64_t step = 0;
  double loss = 0.0;  // mean over non-PAD targets
  std::size_t targets = 0;
  double lr = 0.0;
  std::size_t dict_updates = 0;  // memory vectors changed this step
};

// One optimizer update per batch: selection with the memory as of batch
// start, cross-entropy, backward, Adam, then the dictionary update pass.
template <Real T>
class Trainer {
 public:
  Trainer(TransformerLM<T>& model, LookupDictionary<T>* dict, const FrequencyTable& freq,
          const OptimizerConfig& config, std::uint64_t dropout_seed);

  // Batch rows are framed sentences, optionally right-padded with PAD.
  // Throws NumericError, leaving all state untouched, on a non-finite loss.
  StepStats TrainStep(std::span<const Sentence> batch);

  TransformerLM<T>& model() { return model_; }
  LookupDictionary<T>* dictionary() { return dict_; }
  Adam<T>& optimizer() { return adam_; }
  const Adam<T>& optimizer() const { return adam_; }
  Rng& dropout_rng() { return dropout_rng_; }
  const Rng& dropout_rng() const { return dropout_rng_; }

 private:
  TransformerLM<T>& model_;
  LookupDictionary<T>* dict_;
  const FrequencyTable& freq_;
  Adam<T> adam_;
  Rng dropout_rng_;
};

extern template class Adam<float>;
extern template class Adam<double>;
extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace memlm

#endif  // MEMLM_TRAINER_H_
