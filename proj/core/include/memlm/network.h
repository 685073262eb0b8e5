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

// Full next-token pipeline for one sentence: Transformer forward, context
// selection through the dictionary, tied-embedding scores, cross-entropy,
// and (optionally) the backward pass.

#ifndef MEMLM_NETWORK_H_
#define MEMLM_NETWORK_H_

#include <span>
#include <vector>

#include "memlm/memory_dict.h"
#include "memlm/model.h"

namespace memlm {

struct SentenceOptions {
  Rng* dropout_rng = nullptr;  // non-null enables dropout
  double loss_scale = 1.0;     // scales the gradient seed (batch averaging)
  bool keep_attention = false;
};

template <Real T>
struct SentenceResult {
  double nll = 0.0;  // summed over targets
  std::size_t targets = 0;
  std::vector<double> target_logprob;
  std::vector<T> attention;  // targets x M when keep_attention and a dictionary is used
  std::vector<std::size_t> slots;
};

// Strips trailing PAD. The result must hold at least BOS and one target.
std::span<const TokenId> TrimPadding(std::span<const TokenId> row);

// Scores a framed sentence (BOS ... EOS); the dictionary, if any, is only
// read. `dict == nullptr` is the plain Transformer LM.
template <Real T>
SentenceResult<T> EvaluateSentence(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                                   std::span<const TokenId> sentence,
                                   const SentenceOptions& options = {});

// Same, then backpropagates loss_scale * nll into the model gradients.
// `memory_grad`, when non-empty (U*M*d), receives dLoss/dMemory for
// analysis; the memory itself is never optimized.
template <Real T>
SentenceResult<T> AccumulateGradients(TransformerLM<T>& model, const LookupDictionary<T>* dict,
                                      std::span<const TokenId> sentence,
                                      const SentenceOptions& options,
                                      std::span<T> memory_grad = {});

}  // namespace memlm

#endif  // MEMLM_NETWORK_H_
