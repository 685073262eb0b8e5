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

#include "memlm/eval.h"

#include <cmath>

#include "memlm/network.h"

namespace memlm {

namespace {

struct Bucket {
  double nll = 0.0;
  std::size_t count = 0;

  void Add(double logp) {
    nll -= logp;
    ++count;
  }
  std::optional<double> Ppl() const {
    if (count == 0) return std::nullopt;
    return std::exp(nll / static_cast<double>(count));
  }
};

}  // namespace

template <Real T>
EvalReport Perplexity(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                      std::span<const Sentence> corpus, const TailSet* tail1,
                      const TailSet* tail2) {
  if (dict && dict->mode() != DictMode::kFrozen) {
    throw ContractViolation("perplexity requires a frozen dictionary");
  }
  Bucket all, t1, t2;
  for (const auto& row : corpus) {
    auto s = TrimPadding(row);
    auto r = EvaluateSentence<T>(model, dict, s);
    for (std::size_t k = 0; k < r.targets; ++k) {
      const double lp = r.target_logprob[k];
      all.Add(lp);
      // Target k sits at position k+1 of the framed sentence.
      if (tail1 && tail1->IsTailPosition(s, k + 1)) t1.Add(lp);
      if (tail2 && tail2->IsTailPosition(s, k + 1)) t2.Add(lp);
    }
  }
  EvalReport rep;
  rep.overall_ppl = all.Ppl().value_or(0.0);
  rep.overall_count = all.count;
  rep.tail1_ppl = t1.Ppl();
  rep.tail1_count = t1.count;
  rep.tail2_ppl = t2.Ppl();
  rep.tail2_count = t2.count;
  return rep;
}

template <Real T>
double AttentionEntropy(std::span<const T> weights) {
  double h = 0.0;
  for (T w : weights) {
    if (w > T(0)) h -= static_cast<double>(w) * std::log(static_cast<double>(w));
  }
  return h;
}

template <Real T>
double MeanAttentionEntropy(const TransformerLM<T>& model, const LookupDictionary<T>& dict,
                            std::span<const Sentence> corpus) {
  SentenceOptions opts;
  opts.keep_attention = true;
  const std::size_t M = dict.vectors_per_slot();
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : corpus) {
    auto r = EvaluateSentence<T>(model, &dict, row, opts);
    for (std::size_t k = 0; k < r.targets; ++k) {
      sum += AttentionEntropy<T>(std::span<const T>(r.attention).subspan(k * M, M));
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

template <Real T>
double InformationGain(const TransformerLM<T>& model, const LookupDictionary<T>& trained_dict,
                       const LookupDictionary<T>& random_dict, std::span<const Sentence> corpus) {
  return MeanAttentionEntropy(model, random_dict, corpus) -
         MeanAttentionEntropy(model, trained_dict, corpus);
}

template <Real T>
std::vector<T> MemoryGradient(TransformerLM<T>& model, const LookupDictionary<T>& dict,
                              std::span<const Sentence> batch) {
  std::size_t targets = 0;
  for (const auto& row : batch) targets += TrimPadding(row).size() - 1;
  std::vector<T> grad(dict.memory().size(), T(0));
  SentenceOptions opts;
  opts.loss_scale = 1.0 / static_cast<double>(targets);
  model.ZeroGrad();
  for (const auto& row : batch) AccumulateGradients<T>(model, &dict, row, opts, grad);
  return grad;
}

template <Real T>
GradientAttribution ComputeGradientAttribution(TransformerLM<T>& model,
                                               const LookupDictionary<T>& dict,
                                               std::span<const Sentence> batch,
                                               bool detach_memory) {
  std::vector<T> mem_grad;
  if (detach_memory) {
    std::size_t targets = 0;
    for (const auto& row : batch) targets += TrimPadding(row).size() - 1;
    SentenceOptions opts;
    opts.loss_scale = 1.0 / static_cast<double>(targets);
    model.ZeroGrad();
    for (const auto& row : batch) AccumulateGradients<T>(model, &dict, row, opts);
    mem_grad.assign(dict.memory().size(), T(0));
  } else {
    mem_grad = MemoryGradient(model, dict, batch);
  }
  auto norm = [](std::span<const T> v) {
    double s = 0.0;
    for (T x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
  };
  GradientAttribution out;
  out.memory_total = norm(mem_grad);
  out.memory_per_element = out.memory_total / std::sqrt(static_cast<double>(mem_grad.size()));
  const auto& emb = model.embedding().grad;
  out.embedding_total = norm(emb);
  out.embedding_per_element = out.embedding_total / std::sqrt(static_cast<double>(emb.size()));
  model.ZeroGrad();
  return out;
}

template <Real T>
double MeanLoss(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                std::span<const Sentence> batch) {
  double nll = 0.0;
  std::size_t n = 0;
  for (const auto& row : batch) {
    auto r = EvaluateSentence<T>(model, dict, row);
    nll += r.nll;
    n += r.targets;
  }
  return nll / static_cast<double>(n);
}

#define MEMLM_INSTANTIATE_EVAL(T)                                                             \
  template EvalReport Perplexity<T>(const TransformerLM<T>&, const LookupDictionary<T>*,      \
                                    std::span<const Sentence>, const TailSet*, const TailSet*); \
  template double AttentionEntropy<T>(std::span<const T>);                                    \
  template double MeanAttentionEntropy<T>(const TransformerLM<T>&, const LookupDictionary<T>&, \
                                          std::span<const Sentence>);                         \
  template double InformationGain<T>(const TransformerLM<T>&, const LookupDictionary<T>&,     \
                                     const LookupDictionary<T>&, std::span<const Sentence>);  \
  template std::vector<T> MemoryGradient<T>(TransformerLM<T>&, const LookupDictionary<T>&,    \
                                            std::span<const Sentence>);                       \
  template GradientAttribution ComputeGradientAttribution<T>(                                 \
      TransformerLM<T>&, const LookupDictionary<T>&, std::span<const Sentence>, bool);        \
  template double MeanLoss<T>(const TransformerLM<T>&, const LookupDictionary<T>*,            \
                              std::span<const Sentence>);

MEMLM_INSTANTIATE_EVAL(float)
MEMLM_INSTANTIATE_EVAL(double)

#undef MEMLM_INSTANTIATE_EVAL

}  // namespace memlm
