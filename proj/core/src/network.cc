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

#include "memlm/network.h"

#include <algorithm>
#include <cmath>

namespace memlm {

namespace {

template <Real T>
SentenceResult<T> Run(const TransformerLM<T>& model, TransformerLM<T>* grad_model,
                      const LookupDictionary<T>* dict, std::span<const TokenId> sentence,
                      const SentenceOptions& options, std::span<T> memory_grad) {
  sentence = TrimPadding(sentence);
  const auto& cfg = model.config();
  const std::size_t d = cfg.d_emb, V = cfg.vocab_size;
  const std::size_t n = sentence.size() - 1;
  auto inputs = sentence.first(n);
  auto cache = model.Forward(inputs, options.dropout_rng);

  const std::size_t M = dict ? dict->vectors_per_slot() : 0;
  const bool residual = dict && dict->config().residual;
  if (dict && dict->d_emb() != cfg.d_emb) {
    throw ContractViolation("dictionary width does not match d_emb");
  }

  SentenceResult<T> result;
  result.targets = n;
  result.target_logprob.resize(n);
  if (dict && options.keep_attention) result.attention.resize(n * M);
  if (dict) result.slots.resize(n);

  std::vector<T> grad_output;
  if (grad_model) grad_output.assign(n * d, T(0));
  std::vector<T> c_tilde(d), weights(M);
  const T seed_scale = static_cast<T>(options.loss_scale);

  for (std::size_t t = 0; t < n; ++t) {
    const TokenId target = sentence[t + 1];
    if (target < 0 || static_cast<std::size_t>(target) >= V) {
      throw ContractViolation("target id " + std::to_string(target) + " out of range");
    }
    std::span<const T> c(cache.output.data() + t * d, d);
    std::span<const T> slot_memory;
    if (dict) {
      const std::size_t slot =
          SlotIndex(inputs, t, dict->config().ngram_order, dict->slots());
      result.slots[t] = slot;
      slot_memory = dict->Slot(slot);
      SelectContext<T>(c, slot_memory, c_tilde, weights);
      if (residual) {
        for (std::size_t j = 0; j < d; ++j) c_tilde[j] += c[j];
      }
      if (options.keep_attention) std::copy(weights.begin(), weights.end(), &result.attention[t * M]);
    } else {
      std::copy(c.begin(), c.end(), c_tilde.begin());
    }

    auto scores = model.Logits(c_tilde);
    const T mx = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (auto s : scores) sum += std::exp(static_cast<double>(s - mx));
    const double log_z = static_cast<double>(mx) + std::log(sum);
    const double logp = static_cast<double>(scores[target]) - log_z;
    result.target_logprob[t] = logp;
    result.nll -= logp;

    if (!grad_model) continue;
    for (std::size_t v = 0; v < V; ++v) {
      const double p = std::exp(static_cast<double>(scores[v]) - log_z);
      scores[v] = static_cast<T>(p) * seed_scale;
    }
    scores[target] -= seed_scale;
    auto grad_c_tilde = grad_model->LogitsBackward(c_tilde, scores);
    std::span<T> grad_c(grad_output.data() + t * d, d);
    if (dict) {
      std::span<T> grad_mem;
      if (!memory_grad.empty()) {
        grad_mem = memory_grad.subspan(result.slots[t] * M * d, M * d);
      }
      SelectContextBackward<T>(c, slot_memory, weights, grad_c_tilde, grad_c, grad_mem);
      if (residual) {
        for (std::size_t j = 0; j < d; ++j) grad_c[j] += grad_c_tilde[j];
      }
    } else {
      std::copy(grad_c_tilde.begin(), grad_c_tilde.end(), grad_c.begin());
    }
  }
  if (grad_model) grad_model->Backward(cache, grad_output);
  return result;
}

}  // namespace

std::span<const TokenId> TrimPadding(std::span<const TokenId> row) {
  std::size_t len = row.size();
  while (len > 0 && row[len - 1] == Vocabulary::kPad) --len;
  if (len < 2) throw ContractViolation("sentence needs BOS and at least one target");
  return row.first(len);
}

template <Real T>
SentenceResult<T> EvaluateSentence(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                                   std::span<const TokenId> sentence,
                                   const SentenceOptions& options) {
  return Run<T>(model, nullptr, dict, sentence, options, {});
}

template <Real T>
SentenceResult<T> AccumulateGradients(TransformerLM<T>& model, const LookupDictionary<T>* dict,
                                      std::span<const TokenId> sentence,
                                      const SentenceOptions& options, std::span<T> memory_grad) {
  return Run<T>(model, &model, dict, sentence, options, memory_grad);
}

template SentenceResult<float> EvaluateSentence(const TransformerLM<float>&,
                                                const LookupDictionary<float>*,
                                                std::span<const TokenId>, const SentenceOptions&);
template SentenceResult<double> EvaluateSentence(const TransformerLM<double>&,
                                                 const LookupDictionary<double>*,
                                                 std::span<const TokenId>,
                                                 const SentenceOptions&);
template SentenceResult<float> AccumulateGradients(TransformerLM<float>&,
                                                   const LookupDictionary<float>*,
                                                   std::span<const TokenId>,
                                                   const SentenceOptions&, std::span<float>);
template SentenceResult<double> AccumulateGradients(TransformerLM<double>&,
                                                    const LookupDictionary<double>*,
                                                    std::span<const TokenId>,
                                                    const SentenceOptions&, std::span<double>);

}  // namespace memlm
