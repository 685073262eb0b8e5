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

// Tied-embedding causal Transformer with hand-written backward pass.
//
// Block layout is pre-norm:
//   x = x + Dropout(Attention(LayerNorm(x)))
//   x = x + Dropout(FFN(LayerNorm(x)))
// followed by a final LayerNorm whose output is the contextualized
// embedding C. Output scores are embedding * c, so the token table is the
// only vocabulary-sized matrix.

#ifndef MEMLM_MODEL_H_
#define MEMLM_MODEL_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "memlm/common.h"
#include "memlm/random.h"

namespace memlm {

struct ModelConfig {
  int vocab_size = 0;
  int d_emb = 384;
  int layers = 4;
  int heads = 4;
  int d_ff = 1536;
  int max_len = 128;
  double dropout = 0.1;
  double init_std = 0.02;
  std::uint64_t seed = 1;

  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

template <Real T>
struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool decay = false;  // decoupled weight decay applies (matrices only)

  std::size_t size() const { return value.size(); }
};

// Activations kept for the backward pass of one sequence.
template <Real T>
struct BlockCache {
  std::vector<T> x_in;
  std::vector<T> ln1_xhat, ln1_rstd, ln1_out;
  std::vector<T> qkv;
  std::vector<T> probs;  // heads x n x n, causal (upper triangle zero)
  std::vector<T> att;
  std::vector<T> drop1;  // dropout scales, empty when dropout is off
  std::vector<T> x_mid;
  std::vector<T> ln2_xhat, ln2_rstd, ln2_out;
  std::vector<T> ff_pre, ff_act;
  std::vector<T> drop2;
};

template <Real T>
struct ForwardCache {
  std::size_t length = 0;
  std::vector<TokenId> tokens;
  std::vector<BlockCache<T>> blocks;
  std::vector<T> x_final;
  std::vector<T> lnf_xhat, lnf_rstd;
  std::vector<T> output;  // C, length x d_emb
};

template <Real T>
class TransformerLM {
 public:
  explicit TransformerLM(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::span<Parameter<T>> parameters() { return params_; }
  std::span<const Parameter<T>> parameters() const { return params_; }
  std::size_t num_parameters() const;

  // The shared input/output token table, vocab_size x d_emb.
  Parameter<T>& embedding() { return params_[0]; }
  const Parameter<T>& embedding() const { return params_[0]; }
  std::span<const T> EmbeddingRow(TokenId id) const;

  void ZeroGrad();

  // E[k] = token row + position row.
  std::vector<T> Embed(std::span<const TokenId> tokens) const;

  // Contextualized embeddings for `tokens` (length <= max_len). Dropout is
  // active only when `dropout_rng` is non-null.
  ForwardCache<T> Forward(std::span<const TokenId> tokens, Rng* dropout_rng = nullptr) const;

  // Accumulates parameter gradients given dLoss/dC (length x d_emb).
  void Backward(const ForwardCache<T>& cache, std::span<const T> grad_output);

  // scores = embedding * c.
  std::vector<T> Logits(std::span<const T> c) const;
  // Adds dLoss/dscores (outer) c into the embedding gradient and returns
  // dLoss/dc.
  std::vector<T> LogitsBackward(std::span<const T> c, std::span<const T> grad_scores);

  // Same architecture and values in another precision; gradients zeroed.
  template <Real U>
  TransformerLM<U> Cast() const {
    TransformerLM<U> out(config_);
    auto dst = out.parameters();
    for (std::size_t p = 0; p < params_.size(); ++p) {
      for (std::size_t i = 0; i < params_[p].value.size(); ++i) {
        dst[p].value[i] = static_cast<U>(params_[p].value[i]);
      }
    }
    return out;
  }

 private:
  struct BlockParams {
    std::size_t ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };

  std::size_t AddParam(std::string name, std::vector<std::size_t> shape, bool decay);
  void Initialize();

  ModelConfig config_;
  std::vector<Parameter<T>> params_;
  std::size_t pos_emb_ = 0;
  std::vector<BlockParams> blocks_;
  std::size_t lnf_g_ = 0, lnf_b_ = 0;
};

extern template class TransformerLM<float>;
extern template class TransformerLM<double>;

// Numerically stable in-place softmax.
template <Real T>
void SoftmaxInPlace(std::span<T> x);

}  // namespace memlm

#endif  // MEMLM_MODEL_H_
