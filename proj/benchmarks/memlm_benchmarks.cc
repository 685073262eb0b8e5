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

// Microbenchmarks: context selection cost against M, full forward latency
// with and without the dictionary, and the training-time update pass.

#include <vector>

#include "benchmark/benchmark.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"
#include "memlm/network.h"
#include "memlm/random.h"

namespace memlm {
namespace {

std::vector<float> Gaussian(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(StandardNormal(rng));
  return v;
}

void BM_SelectContext(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int M = static_cast<int>(state.range(1));
  auto memory = Gaussian(static_cast<std::size_t>(M) * d, 1);
  auto query = Gaussian(d, 2);
  std::vector<float> c(d), w(M);
  for (auto _ : state) {
    SelectContext<float>(query, memory, c, w);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["M"] = M;
  state.SetComplexityN(M);
}
BENCHMARK(BM_SelectContext)
    ->ArgsProduct({{384}, {16, 32, 64, 128, 256}})
    ->Complexity(benchmark::oN);

ModelConfig PaperLikeModel() {
  ModelConfig c;
  c.vocab_size = 5000;
  c.d_emb = 384;
  c.layers = 4;
  c.heads = 4;
  c.d_ff = 1536;
  c.max_len = 32;
  c.dropout = 0.0;
  return c;
}

Sentence RandomSentence(int length, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  Sentence s{Vocabulary::kBos};
  for (int k = 1; k < length; ++k) {
    s.push_back(Vocabulary::kNumReserved +
                static_cast<TokenId>(rng() % (vocab - Vocabulary::kNumReserved)));
  }
  s.push_back(Vocabulary::kEos);
  return s;
}

// range(0): 0 plain Transformer, 1 with the dictionary (U=5000, M=64).
void BM_ScoreSentence(benchmark::State& state) {
  static const TransformerLM<float> model(PaperLikeModel());
  static const LookupDictionary<float> dict = [] {
    DictConfig dc;
    dc.slots = 5000;
    dc.vectors_per_slot = 64;
    LookupDictionary<float> d(dc, 384);
    d.set_mode(DictMode::kFrozen);
    return d;
  }();
  const auto* dp = state.range(0) ? &dict : nullptr;
  const auto s = RandomSentence(24, 5000, 3);
  for (auto _ : state) {
    auto r = EvaluateSentence<float>(model, dp, s);
    benchmark::DoNotOptimize(r.nll);
  }
  state.counters["time_per_token"] = benchmark::Counter(
      static_cast<double>(s.size() - 1), benchmark::Counter::kIsIterationInvariantRate |
                                             benchmark::Counter::kInvert);
  state.SetLabel(state.range(0) ? "dictionary" : "baseline");
}
BENCHMARK(BM_ScoreSentence)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_UpdateBatch(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  DictConfig dc;
  dc.slots = 512;
  dc.vectors_per_slot = M;
  dc.warmup_steps = 0;
  LookupDictionary<float> dict(dc, 64);
  auto emb = Gaussian(200 * 64, 4);
  FrequencyTable freq(200);
  for (TokenId t = 0; t < 200; ++t) freq.Add(t, 1 + t);
  std::vector<Sentence> batch;
  for (int i = 0; i < 16; ++i) batch.push_back(RandomSentence(20, 200, 10 + i));
  for (auto _ : state) benchmark::DoNotOptimize(dict.UpdateBatch(batch, emb, freq));
}
BENCHMARK(BM_UpdateBatch)->Arg(4)->Arg(64);

}  // namespace
}  // namespace memlm

BENCHMARK_MAIN();
