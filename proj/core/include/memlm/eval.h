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

// Perplexity (overall and tail buckets), attention entropy and information
// gain, and gradient attribution of the dictionary memory.
//
// Perplexity stands in for recognition error rates: there is no acoustic
// model here, so "tail-1" and "tail-2" buckets restrict the average to
// target positions whose token, or whose 2-gram ending at the target, is a
// tail n-gram of the training corpus.

#ifndef MEMLM_EVAL_H_
#define MEMLM_EVAL_H_

#include <optional>
#include <span>

#include "memlm/corpus.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"

namespace memlm {

struct EvalReport {
  double overall_ppl = 0.0;
  std::size_t overall_count = 0;
  std::optional<double> tail1_ppl;  // absent when the bucket is empty
  std::size_t tail1_count = 0;
  std::optional<double> tail2_ppl;
  std::size_t tail2_count = 0;
};

// `dict` may be null (plain Transformer); otherwise it must be frozen.
template <Real T>
EvalReport Perplexity(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                      std::span<const Sentence> corpus, const TailSet* tail1 = nullptr,
                      const TailSet* tail2 = nullptr);

// -sum w ln w, with 0 ln 0 = 0.
template <Real T>
double AttentionEntropy(std::span<const T> weights);

// Mean entropy of the selection weights over every target position.
template <Real T>
double MeanAttentionEntropy(const TransformerLM<T>& model, const LookupDictionary<T>& dict,
                            std::span<const Sentence> corpus);

// Mean entropy under `random_dict` minus mean entropy under `trained_dict`,
// with the same Transformer weights and corpus.
template <Real T>
double InformationGain(const TransformerLM<T>& model, const LookupDictionary<T>& trained_dict,
                       const LookupDictionary<T>& random_dict, std::span<const Sentence> corpus);

struct GradientAttribution {
  double memory_total = 0.0;        // ||dL/dD||_F
  double memory_per_element = 0.0;  // ||dL/dD||_F / sqrt(U*M*d)
  double embedding_total = 0.0;
  double embedding_per_element = 0.0;
};

// Gradient of the batch-mean loss with respect to the memory tensor and the
// token table. Nothing is applied; model gradients are left zeroed. With
// `detach_memory` the memory path contributes no gradient.
template <Real T>
GradientAttribution ComputeGradientAttribution(TransformerLM<T>& model,
                                               const LookupDictionary<T>& dict,
                                               std::span<const Sentence> batch,
                                               bool detach_memory = false);

// dLoss/dMemory for the batch-mean loss (U*M*d), for analysis and tests.
template <Real T>
std::vector<T> MemoryGradient(TransformerLM<T>& model, const LookupDictionary<T>& dict,
                              std::span<const Sentence> batch);

// Batch-mean loss without gradients.
template <Real T>
double MeanLoss(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                std::span<const Sentence> batch);

}  // namespace memlm

#endif  // MEMLM_EVAL_H_
