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

#include <cmath>
#include <map>

#include "gtest/gtest.h"
#include "memlm/random.h"
#include "test_util.h"

namespace memlm {
namespace {

using Matrix = std::vector<std::vector<double>>;

ModelConfig TinyConfig() {
  ModelConfig c;
  c.vocab_size = 11;
  c.d_emb = 8;
  c.layers = 2;
  c.heads = 2;
  c.d_ff = 12;
  c.max_len = 10;
  c.dropout = 0.0;
  c.init_std = 0.3;
  c.seed = 3;
  return c;
}

// Randomizes every parameter (including gains and biases) so no term of
// the forward pass is trivially zero or one.
template <Real T>
void Scramble(TransformerLM<T>& model, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : model.parameters()) {
    const bool gain = p.name.ends_with(".g");
    for (auto& v : p.value) v = static_cast<T>((gain ? 1.0 : 0.0) + 0.3 * StandardNormal(rng));
  }
}

// Straightforward re-implementation used as the forward oracle.
class ScalarTransformer {
 public:
  explicit ScalarTransformer(const TransformerLM<double>& m) : cfg_(m.config()) {
    for (const auto& p : m.parameters()) params_[p.name] = p.value;
  }

  Matrix Forward(const std::vector<TokenId>& tokens) const {
    const std::size_t n = tokens.size(), d = cfg_.d_emb;
    Matrix x(n, std::vector<double>(d));
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        x[t][j] = W("tok_emb")[tokens[t] * d + j] + W("pos_emb")[t * d + j];
      }
    }
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string p = "block" + std::to_string(l) + ".";
      Matrix h = LayerNorm(x, p + "ln1");
      Matrix qkv = Affine(h, p + "attn.wqkv", p + "attn.bqkv");
      Matrix att = Attention(qkv);
      Matrix o = Affine(att, p + "attn.wo", p + "attn.bo");
      Add(x, o);
      Matrix h2 = LayerNorm(x, p + "ln2");
      Matrix f = Affine(h2, p + "ffn.w1", p + "ffn.b1");
      for (auto& row : f) {
        for (auto& v : row) v = 0.5 * v * (1 + std::tanh(std::sqrt(2 / M_PI) * (v + 0.044715 * v * v * v)));
      }
      Add(x, Affine(f, p + "ffn.w2", p + "ffn.b2"));
    }
    return LayerNorm(x, "lnf");
  }

 private:
  const std::vector<double>& W(const std::string& name) const { return params_.at(name); }

  static void Add(Matrix& a, const Matrix& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += b[i][j];
    }
  }

  Matrix LayerNorm(const Matrix& x, const std::string& name) const {
    const auto& g = W(name + ".g");
    const auto& b = W(name + ".b");
    Matrix out = x;
    for (auto& row : out) {
      double mean = 0, var = 0;
      for (double v : row) mean += v;
      mean /= row.size();
      for (double v : row) var += (v - mean) * (v - mean);
      var /= row.size();
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = g[j] * (row[j] - mean) / std::sqrt(var + 1e-5) + b[j];
      }
    }
    return out;
  }

  Matrix Affine(const Matrix& x, const std::string& w, const std::string& b) const {
    const auto& bias = W(b);
    const std::size_t out_dim = bias.size(), in_dim = x[0].size();
    Matrix y(x.size(), std::vector<double>(out_dim));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t o = 0; o < out_dim; ++o) {
        double s = bias[o];
        for (std::size_t k = 0; k < in_dim; ++k) s += x[i][k] * W(w)[k * out_dim + o];
        y[i][o] = s;
      }
    }
    return y;
  }

  Matrix Attention(const Matrix& qkv) const {
    const std::size_t n = qkv.size(), d = cfg_.d_emb, H = cfg_.heads, dh = d / H;
    Matrix out(n, std::vector<double>(d, 0.0));
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < n; ++t) {
        std::vector<double> s(t + 1);
        double mx = -1e300;
        for (std::size_t u = 0; u <= t; ++u) {
          double dot = 0;
          for (std::size_t j = 0; j < dh; ++j) dot += qkv[t][h * dh + j] * qkv[u][d + h * dh + j];
          s[u] = dot / std::sqrt(double(dh));
          mx = std::max(mx, s[u]);
        }
        double z = 0;
        for (auto& v : s) z += (v = std::exp(v - mx));
        for (std::size_t u = 0; u <= t; ++u) {
          for (std::size_t j = 0; j < dh; ++j) {
            out[t][h * dh + j] += s[u] / z * qkv[u][2 * d + h * dh + j];
          }
        }
      }
    }
    return out;
  }

  ModelConfig cfg_;
  std::map<std::string, std::vector<double>> params_;
};

TEST(TransformerTest, ParameterLayout) {
  TransformerLM<float> m(TinyConfig());
  auto params = m.parameters();
  ASSERT_EQ(params.size(), 2u + 12u * 2u + 2u);
  EXPECT_EQ(params[0].name, "tok_emb");
  EXPECT_EQ(params[1].name, "pos_emb");
  EXPECT_EQ(params[2].name, "block0.ln1.g");
  EXPECT_EQ(params.back().name, "lnf.b");
  std::size_t total = 0;
  for (const auto& p : params) {
    std::size_t n = 1;
    for (auto s : p.shape) n *= s;
    EXPECT_EQ(n, p.size()) << p.name;
    EXPECT_EQ(p.decay, p.shape.size() == 2) << p.name;
    total += n;
  }
  EXPECT_EQ(total, m.num_parameters());
}

TEST(TransformerTest, InitializationConventions) {
  auto cfg = TinyConfig();
  cfg.init_std = 0.02;
  TransformerLM<double> m(cfg);
  for (const auto& p : m.parameters()) {
    if (p.name.ends_with(".g")) {
      for (double v : p.value) EXPECT_EQ(v, 1.0);
    } else if (p.shape.size() == 1) {
      for (double v : p.value) EXPECT_EQ(v, 0.0);
    } else {
      double ss = 0;
      for (double v : p.value) ss += v * v;
      const double sd = std::sqrt(ss / p.size());
      const double want = (p.name.ends_with(".wo") || p.name.ends_with(".w2"))
                              ? 0.02 / std::sqrt(2.0 * cfg.layers)
                              : 0.02;
      EXPECT_NEAR(sd, want, 0.35 * want) << p.name;
    }
  }
  TransformerLM<double> again(cfg);
  EXPECT_EQ(again.parameters()[0].value, m.parameters()[0].value);
}

TEST(TransformerTest, ForwardMatchesScalarOracle) {
  TransformerLM<double> m(TinyConfig());
  Scramble(m, 17);
  ScalarTransformer oracle(m);
  std::vector<TokenId> tokens = {1, 5, 7, 10, 4, 4, 2};
  auto cache = m.Forward(tokens);
  auto want = oracle.Forward(tokens);
  const std::size_t d = TinyConfig().d_emb;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      EXPECT_NEAR(cache.output[t * d + j], want[t][j], 1e-12) << t << "," << j;
    }
  }
}

TEST(TransformerTest, FloatTracksDouble) {
  TransformerLM<double> m(TinyConfig());
  Scramble(m, 18);
  auto f = m.Cast<float>();
  std::vector<TokenId> tokens = {1, 3, 9, 2};
  auto a = m.Forward(tokens);
  auto b = f.Forward(tokens);
  for (std::size_t i = 0; i < a.output.size(); ++i) EXPECT_NEAR(a.output[i], b.output[i], 1e-4);
}

TEST(TransformerTest, OutputsAreCausal) {
  TransformerLM<double> m(TinyConfig());
  Scramble(m, 19);
  std::vector<TokenId> a = {1, 5, 6, 7}, b = {1, 5, 6, 9};
  auto ca = m.Forward(a), cb = m.Forward(b);
  const std::size_t d = TinyConfig().d_emb;
  for (std::size_t i = 0; i < 3 * d; ++i) EXPECT_EQ(ca.output[i], cb.output[i]);
  bool differs = false;
  for (std::size_t i = 3 * d; i < 4 * d; ++i) differs |= ca.output[i] != cb.output[i];
  EXPECT_TRUE(differs);
}

TEST(TransformerTest, LogitsAreEmbeddingProducts) {
  TransformerLM<double> m(TinyConfig());
  Scramble(m, 20);
  std::vector<double> c(8);
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = 0.1 * j - 0.3;
  auto logits = m.Logits(c);
  ASSERT_EQ(logits.size(), 11u);
  for (TokenId v = 0; v < 11; ++v) {
    double dot = 0;
    for (std::size_t j = 0; j < 8; ++j) dot += m.EmbeddingRow(v)[j] * c[j];
    EXPECT_NEAR(logits[v], dot, 1e-14);
  }
}

TEST(TransformerTest, DropoutIsSeededAndOffWithoutGenerator) {
  auto cfg = TinyConfig();
  cfg.dropout = 0.5;
  TransformerLM<float> m(cfg);
  std::vector<TokenId> tokens = {1, 4, 5, 6, 2};
  Rng r1(1), r2(1);
  auto a = m.Forward(tokens, &r1), b = m.Forward(tokens, &r2);
  EXPECT_EQ(a.output, b.output);
  auto plain = m.Forward(tokens);
  EXPECT_NE(a.output, plain.output);
  auto cfg0 = cfg;
  cfg0.dropout = 0.0;
  TransformerLM<float> m0(cfg0);
  EXPECT_EQ(m0.Forward(tokens).output, plain.output);
}

TEST(TransformerTest, ContractViolations) {
  TransformerLM<float> m(TinyConfig());
  EXPECT_THROW(m.EmbeddingRow(11), ContractViolation);
  std::vector<TokenId> too_long(11, 4);
  EXPECT_THROW(m.Forward(too_long), ContractViolation);
  std::vector<TokenId> bad = {1, 42};
  EXPECT_THROW(m.Forward(bad), ContractViolation);
  auto cfg = TinyConfig();
  cfg.heads = 3;
  EXPECT_THROW(TransformerLM<float>{cfg}, ConfigError);
}

TEST(SoftmaxTest, StableForLargeInputs) {
  std::vector<double> x = {1000.0, 1000.0, -1000.0};
  SoftmaxInPlace<double>(x);
  EXPECT_DOUBLE_EQ(x[0], 0.5);
  EXPECT_DOUBLE_EQ(x[1], 0.5);
  EXPECT_EQ(x[2], 0.0);
}

}  // namespace
}  // namespace memlm
