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

#include "memlm/model.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace memlm {

namespace {

constexpr double kLayerNormEps = 1e-5;

enum class Init { kNormal, kScaledNormal, kOnes, kZeros };

// out[n x m] = in[n x k] * w[k x m] + b[m]
template <Real T>
void Linear(const T* in, const T* w, const T* b, T* out, std::size_t n, std::size_t k,
            std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    T* o = out + i * m;
    for (std::size_t j = 0; j < m; ++j) o[j] = b[j];
    const T* x = in + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T a = x[kk];
      const T* wr = w + kk * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += a * wr[j];
    }
  }
}

// din += dout * w^T, dw += in^T * dout, db += colsum(dout).
template <Real T>
void LinearBackward(const T* in, const T* w, const T* dout, T* din, T* dw, T* db, std::size_t n,
                    std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* g = dout + i * m;
    for (std::size_t j = 0; j < m; ++j) db[j] += g[j];
    const T* x = in + i * k;
    T* dx = din + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* wr = w + kk * m;
      T* dwr = dw + kk * m;
      const T a = x[kk];
      T s = 0;
      for (std::size_t j = 0; j < m; ++j) {
        s += wr[j] * g[j];
        dwr[j] += a * g[j];
      }
      dx[kk] += s;
    }
  }
}

template <Real T>
void LayerNorm(const T* x, const T* gamma, const T* beta, T* out, T* xhat, T* rstd,
               std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    const T* xr = x + i * d;
    T mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<T>(d);
    const T r = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    rstd[i] = r;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (xr[j] - mean) * r;
      xhat[i * d + j] = h;
      out[i * d + j] = gamma[j] * h + beta[j];
    }
  }
}

// dx += LayerNorm'(dy); dgamma, dbeta accumulate.
template <Real T>
void LayerNormBackward(const T* dy, const T* xhat, const T* rstd, const T* gamma, T* dgamma,
                       T* dbeta, T* dx, std::size_t n, std::size_t d) {
  std::vector<T> dxhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* g = dy + i * d;
    const T* h = xhat + i * d;
    T mean1 = 0, mean2 = 0;
    for (std::size_t j = 0; j < d; ++j) {
      dxhat[j] = g[j] * gamma[j];
      dgamma[j] += g[j] * h[j];
      dbeta[j] += g[j];
      mean1 += dxhat[j];
      mean2 += dxhat[j] * h[j];
    }
    mean1 /= static_cast<T>(d);
    mean2 /= static_cast<T>(d);
    for (std::size_t j = 0; j < d; ++j) {
      dx[i * d + j] += rstd[i] * (dxhat[j] - mean1 - h[j] * mean2);
    }
  }
}

// tanh-approximated GELU.
template <Real T>
T Gelu(T x) {
  constexpr T c = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
  return T(0.5) * x * (T(1) + std::tanh(c * (x + T(0.044715) * x * x * x)));
}

template <Real T>
T GeluGrad(T x) {
  constexpr T c = static_cast<T>(0.7978845608028654);
  const T t = std::tanh(c * (x + T(0.044715) * x * x * x));
  return T(0.5) * (T(1) + t) +
         T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * T(0.044715) * x * x);
}

template <Real T>
std::vector<T> DropoutMask(std::size_t size, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return {};
  std::vector<T> mask(size);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (auto& m : mask) m = Uniform01(*rng) < p ? T(0) : keep;
  return mask;
}

template <Real T>
void ApplyMask(std::vector<T>& x, const std::vector<T>& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] *= mask[i];
}

}  // namespace

void ModelConfig::Validate() const {
  if (vocab_size < 1 || d_emb < 1 || layers < 0 || heads < 1 || d_ff < 1 || max_len < 1) {
    throw ConfigError("model dimensions must be >= 1 (layers >= 0)");
  }
  if (d_emb % heads != 0) throw ConfigError("d_emb must be divisible by heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0,1)");
  if (!(init_std > 0.0)) throw ConfigError("init_std must be positive");
}

template <Real T>
void SoftmaxInPlace(std::span<T> x) {
  if (x.empty()) return;
  const T mx = *std::max_element(x.begin(), x.end());
  T sum = 0;
  for (auto& v : x) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : x) v /= sum;
}

template void SoftmaxInPlace<float>(std::span<float>);
template void SoftmaxInPlace<double>(std::span<double>);

template <Real T>
TransformerLM<T>::TransformerLM(const ModelConfig& config) : config_(config) {
  config_.Validate();
  const std::size_t V = config_.vocab_size, d = config_.d_emb, f = config_.d_ff;
  AddParam("tok_emb", {V, d}, true);
  pos_emb_ = AddParam("pos_emb", {static_cast<std::size_t>(config_.max_len), d}, true);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    BlockParams b{};
    b.ln1_g = AddParam(p + "ln1.g", {d}, false);
    b.ln1_b = AddParam(p + "ln1.b", {d}, false);
    b.wqkv = AddParam(p + "attn.wqkv", {d, 3 * d}, true);
    b.bqkv = AddParam(p + "attn.bqkv", {3 * d}, false);
    b.wo = AddParam(p + "attn.wo", {d, d}, true);
    b.bo = AddParam(p + "attn.bo", {d}, false);
    b.ln2_g = AddParam(p + "ln2.g", {d}, false);
    b.ln2_b = AddParam(p + "ln2.b", {d}, false);
    b.w1 = AddParam(p + "ffn.w1", {d, f}, true);
    b.b1 = AddParam(p + "ffn.b1", {f}, false);
    b.w2 = AddParam(p + "ffn.w2", {f, d}, true);
    b.b2 = AddParam(p + "ffn.b2", {d}, false);
    blocks_.push_back(b);
  }
  lnf_g_ = AddParam("lnf.g", {d}, false);
  lnf_b_ = AddParam("lnf.b", {d}, false);
  Initialize();
}

template <Real T>
std::size_t TransformerLM<T>::AddParam(std::string name, std::vector<std::size_t> shape,
                                       bool decay) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  Parameter<T> p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.value.assign(n, T(0));
  p.grad.assign(n, T(0));
  p.decay = decay;
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <Real T>
void TransformerLM<T>::Initialize() {
  Rng rng(DeriveSeed(config_.seed, 0x6d6f64656cULL));
  const double residual_scale = 1.0 / std::sqrt(2.0 * std::max(1, config_.layers));
  for (auto& p : params_) {
    const auto& n = p.name;
    Init kind = Init::kNormal;
    if (n.ends_with(".g")) {
      kind = Init::kOnes;
    } else if (n.ends_with(".b") || n.ends_with(".bqkv") || n.ends_with(".bo") ||
               n.ends_with(".b1") || n.ends_with(".b2")) {
      kind = Init::kZeros;
    } else if (n.ends_with(".wo") || n.ends_with(".w2")) {
      kind = Init::kScaledNormal;
    }
    for (auto& v : p.value) {
      switch (kind) {
        case Init::kOnes: v = T(1); break;
        case Init::kZeros: v = T(0); break;
        case Init::kNormal: v = static_cast<T>(config_.init_std * StandardNormal(rng)); break;
        case Init::kScaledNormal:
          v = static_cast<T>(config_.init_std * residual_scale * StandardNormal(rng));
          break;
      }
    }
  }
}

template <Real T>
std::size_t TransformerLM<T>::num_parameters() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <Real T>
std::span<const T> TransformerLM<T>::EmbeddingRow(TokenId id) const {
  if (id < 0 || id >= config_.vocab_size) {
    throw ContractViolation("token id " + std::to_string(id) + " >= vocab size " +
                            std::to_string(config_.vocab_size));
  }
  const std::size_t d = config_.d_emb;
  return std::span<const T>(params_[0].value).subspan(id * d, d);
}

template <Real T>
void TransformerLM<T>::ZeroGrad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
}

template <Real T>
std::vector<T> TransformerLM<T>::Embed(std::span<const TokenId> tokens) const {
  if (tokens.size() > static_cast<std::size_t>(config_.max_len)) {
    throw ContractViolation("sequence length " + std::to_string(tokens.size()) +
                            " exceeds max_len " + std::to_string(config_.max_len));
  }
  const std::size_t d = config_.d_emb;
  std::vector<T> e(tokens.size() * d);
  const auto& pos = params_[pos_emb_].value;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto row = EmbeddingRow(tokens[t]);
    for (std::size_t j = 0; j < d; ++j) e[t * d + j] = row[j] + pos[t * d + j];
  }
  return e;
}

template <Real T>
ForwardCache<T> TransformerLM<T>::Forward(std::span<const TokenId> tokens, Rng* dropout_rng) const {
  const std::size_t n = tokens.size(), d = config_.d_emb, f = config_.d_ff;
  const std::size_t H = config_.heads, dh = d / H;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  ForwardCache<T> cache;
  cache.length = n;
  cache.tokens.assign(tokens.begin(), tokens.end());
  std::vector<T> x = Embed(tokens);
  std::vector<T> tmp(n * d);

  for (const auto& bp : blocks_) {
    BlockCache<T> bc;
    const auto& P = params_;
    bc.ln1_xhat.resize(n * d);
    bc.ln1_rstd.resize(n);
    bc.ln1_out.resize(n * d);
    LayerNorm(x.data(), P[bp.ln1_g].value.data(), P[bp.ln1_b].value.data(), bc.ln1_out.data(),
              bc.ln1_xhat.data(), bc.ln1_rstd.data(), n, d);
    bc.qkv.resize(n * 3 * d);
    Linear(bc.ln1_out.data(), P[bp.wqkv].value.data(), P[bp.bqkv].value.data(), bc.qkv.data(), n,
           d, 3 * d);

    bc.probs.assign(H * n * n, T(0));
    bc.att.assign(n * d, T(0));
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < n; ++t) {
        const T* q = &bc.qkv[t * 3 * d + h * dh];
        T* pr = &bc.probs[(h * n + t) * n];
        for (std::size_t s = 0; s <= t; ++s) {
          const T* k = &bc.qkv[s * 3 * d + d + h * dh];
          T dot = 0;
          for (std::size_t j = 0; j < dh; ++j) dot += q[j] * k[j];
          pr[s] = dot * scale;
        }
        SoftmaxInPlace(std::span<T>(pr, t + 1));
        T* o = &bc.att[t * d + h * dh];
        for (std::size_t s = 0; s <= t; ++s) {
          const T* v = &bc.qkv[s * 3 * d + 2 * d + h * dh];
          for (std::size_t j = 0; j < dh; ++j) o[j] += pr[s] * v[j];
        }
      }
    }

    Linear(bc.att.data(), P[bp.wo].value.data(), P[bp.bo].value.data(), tmp.data(), n, d, d);
    bc.drop1 = DropoutMask<T>(n * d, config_.dropout, dropout_rng);
    ApplyMask(tmp, bc.drop1);
    for (std::size_t i = 0; i < n * d; ++i) x[i] += tmp[i];

    bc.ln2_xhat.resize(n * d);
    bc.ln2_rstd.resize(n);
    bc.ln2_out.resize(n * d);
    LayerNorm(x.data(), P[bp.ln2_g].value.data(), P[bp.ln2_b].value.data(), bc.ln2_out.data(),
              bc.ln2_xhat.data(), bc.ln2_rstd.data(), n, d);
    bc.ff_pre.resize(n * f);
    Linear(bc.ln2_out.data(), P[bp.w1].value.data(), P[bp.b1].value.data(), bc.ff_pre.data(), n,
           d, f);
    bc.ff_act.resize(n * f);
    for (std::size_t i = 0; i < n * f; ++i) bc.ff_act[i] = Gelu(bc.ff_pre[i]);
    Linear(bc.ff_act.data(), P[bp.w2].value.data(), P[bp.b2].value.data(), tmp.data(), n, f, d);
    bc.drop2 = DropoutMask<T>(n * d, config_.dropout, dropout_rng);
    ApplyMask(tmp, bc.drop2);
    for (std::size_t i = 0; i < n * d; ++i) x[i] += tmp[i];

    cache.blocks.push_back(std::move(bc));
  }

  cache.x_final = std::move(x);
  cache.lnf_xhat.resize(n * d);
  cache.lnf_rstd.resize(n);
  cache.output.resize(n * d);
  LayerNorm(cache.x_final.data(), params_[lnf_g_].value.data(), params_[lnf_b_].value.data(),
            cache.output.data(), cache.lnf_xhat.data(), cache.lnf_rstd.data(), n, d);
  return cache;
}

template <Real T>
void TransformerLM<T>::Backward(const ForwardCache<T>& cache, std::span<const T> grad_output) {
  const std::size_t n = cache.length, d = config_.d_emb, f = config_.d_ff;
  const std::size_t H = config_.heads, dh = d / H;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  auto& P = params_;

  std::vector<T> dx(n * d, T(0));
  LayerNormBackward(grad_output.data(), cache.lnf_xhat.data(), cache.lnf_rstd.data(),
                    P[lnf_g_].value.data(), P[lnf_g_].grad.data(), P[lnf_b_].grad.data(),
                    dx.data(), n, d);

  std::vector<T> dz(n * d), dff(n * f), dln(n * d), datt(n * d), dqkv(n * 3 * d);
  for (std::size_t l = blocks_.size(); l-- > 0;) {
    const auto& bp = blocks_[l];
    const auto& bc = cache.blocks[l];

    // Feed-forward sublayer.
    dz = dx;
    ApplyMask(dz, bc.drop2);
    std::fill(dff.begin(), dff.end(), T(0));
    LinearBackward(bc.ff_act.data(), P[bp.w2].value.data(), dz.data(), dff.data(),
                   P[bp.w2].grad.data(), P[bp.b2].grad.data(), n, f, d);
    for (std::size_t i = 0; i < n * f; ++i) dff[i] *= GeluGrad(bc.ff_pre[i]);
    std::fill(dln.begin(), dln.end(), T(0));
    LinearBackward(bc.ln2_out.data(), P[bp.w1].value.data(), dff.data(), dln.data(),
                   P[bp.w1].grad.data(), P[bp.b1].grad.data(), n, d, f);
    LayerNormBackward(dln.data(), bc.ln2_xhat.data(), bc.ln2_rstd.data(),
                      P[bp.ln2_g].value.data(), P[bp.ln2_g].grad.data(), P[bp.ln2_b].grad.data(),
                      dx.data(), n, d);

    // Attention sublayer.
    dz = dx;
    ApplyMask(dz, bc.drop1);
    std::fill(datt.begin(), datt.end(), T(0));
    LinearBackward(bc.att.data(), P[bp.wo].value.data(), dz.data(), datt.data(),
                   P[bp.wo].grad.data(), P[bp.bo].grad.data(), n, d, d);
    std::fill(dqkv.begin(), dqkv.end(), T(0));
    std::vector<T> dp(n);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < n; ++t) {
        const T* pr = &bc.probs[(h * n + t) * n];
        const T* g = &datt[t * d + h * dh];
        T dot_sum = 0;
        for (std::size_t s = 0; s <= t; ++s) {
          const T* v = &bc.qkv[s * 3 * d + 2 * d + h * dh];
          T* dv = &dqkv[s * 3 * d + 2 * d + h * dh];
          T acc = 0;
          for (std::size_t j = 0; j < dh; ++j) {
            acc += g[j] * v[j];
            dv[j] += pr[s] * g[j];
          }
          dp[s] = acc;
          dot_sum += pr[s] * acc;
        }
        const T* q = &bc.qkv[t * 3 * d + h * dh];
        T* dq = &dqkv[t * 3 * d + h * dh];
        for (std::size_t s = 0; s <= t; ++s) {
          const T ds = pr[s] * (dp[s] - dot_sum) * scale;
          const T* k = &bc.qkv[s * 3 * d + d + h * dh];
          T* dk = &dqkv[s * 3 * d + d + h * dh];
          for (std::size_t j = 0; j < dh; ++j) {
            dq[j] += ds * k[j];
            dk[j] += ds * q[j];
          }
        }
      }
    }
    std::fill(dln.begin(), dln.end(), T(0));
    LinearBackward(bc.ln1_out.data(), P[bp.wqkv].value.data(), dqkv.data(), dln.data(),
                   P[bp.wqkv].grad.data(), P[bp.bqkv].grad.data(), n, d, 3 * d);
    LayerNormBackward(dln.data(), bc.ln1_xhat.data(), bc.ln1_rstd.data(),
                      P[bp.ln1_g].value.data(), P[bp.ln1_g].grad.data(), P[bp.ln1_b].grad.data(),
                      dx.data(), n, d);
  }

  auto& tok_grad = P[0].grad;
  auto& pos_grad = P[pos_emb_].grad;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t row = static_cast<std::size_t>(cache.tokens[t]) * d;
    for (std::size_t j = 0; j < d; ++j) {
      tok_grad[row + j] += dx[t * d + j];
      pos_grad[t * d + j] += dx[t * d + j];
    }
  }
}

template <Real T>
std::vector<T> TransformerLM<T>::Logits(std::span<const T> c) const {
  const std::size_t V = config_.vocab_size, d = config_.d_emb;
  std::vector<T> scores(V);
  const T* e = params_[0].value.data();
  for (std::size_t v = 0; v < V; ++v) {
    T s = 0;
    for (std::size_t j = 0; j < d; ++j) s += e[v * d + j] * c[j];
    scores[v] = s;
  }
  return scores;
}

template <Real T>
std::vector<T> TransformerLM<T>::LogitsBackward(std::span<const T> c,
                                                std::span<const T> grad_scores) {
  const std::size_t V = config_.vocab_size, d = config_.d_emb;
  std::vector<T> dc(d, T(0));
  const T* e = params_[0].value.data();
  T* de = params_[0].grad.data();
  for (std::size_t v = 0; v < V; ++v) {
    const T g = grad_scores[v];
    if (g == T(0)) continue;
    for (std::size_t j = 0; j < d; ++j) {
      dc[j] += g * e[v * d + j];
      de[v * d + j] += g * c[j];
    }
  }
  return dc;
}

template class TransformerLM<float>;
template class TransformerLM<double>;

}  // namespace memlm
