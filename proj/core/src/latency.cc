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

#include "memlm/latency.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "memlm/network.h"
#include "memlm/random.h"

namespace memlm {

namespace {

using Clock = std::chrono::steady_clock;

// Keeps results observable so the timed calls are not elided.
volatile double g_sink = 0.0;

double TimePerToken(const TransformerLM<float>& model, const LookupDictionary<float>* dict,
                    const Sentence& s) {
  const auto start = Clock::now();
  auto r = EvaluateSentence<float>(model, dict, s);
  const auto stop = Clock::now();
  g_sink = g_sink + r.nll;
  const double us = std::chrono::duration<double, std::micro>(stop - start).count();
  return us / static_cast<double>(r.targets);
}

LatencyStats Summarize(const std::vector<double>& samples) {
  LatencyStats s;
  s.median_us = Median(samples);
  s.p95_us = Percentile(samples, 0.95);
  s.unreliable = s.median_us > 0.0 && s.p95_us / s.median_us > 2.0;
  return s;
}

}  // namespace

double Median(std::vector<double> values) { return Percentile(std::move(values), 0.5); }

double Percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

LatencyComparison MeasureInferenceLatency(const TransformerLM<float>& model,
                                          const LookupDictionary<float>& dict,
                                          std::span<const Sentence> corpus, int reps,
                                          int warmup) {
  for (int w = 0; w < warmup; ++w) {
    for (const auto& s : corpus) {
      TimePerToken(model, nullptr, s);
      TimePerToken(model, &dict, s);
    }
  }
  std::vector<double> base, aug;
  for (int r = 0; r < reps; ++r) {
    for (const auto& s : corpus) {
      // Alternate the order so drift affects both sides alike.
      if (r % 2 == 0) {
        base.push_back(TimePerToken(model, nullptr, s));
        aug.push_back(TimePerToken(model, &dict, s));
      } else {
        aug.push_back(TimePerToken(model, &dict, s));
        base.push_back(TimePerToken(model, nullptr, s));
      }
    }
  }
  LatencyComparison out;
  out.baseline = Summarize(base);
  out.augmented = Summarize(aug);
  out.overhead = (out.augmented.median_us - out.baseline.median_us) / out.baseline.median_us;
  return out;
}

SelectionScaling MeasureSelectionScaling(int d_emb, std::span<const int> vectors, int calls,
                                         int rounds) {
  SelectionScaling out;
  Rng rng(12345);
  for (int M : vectors) {
    std::vector<float> memory(static_cast<std::size_t>(M) * d_emb), query(d_emb);
    for (auto& v : memory) v = static_cast<float>(StandardNormal(rng));
    for (auto& v : query) v = static_cast<float>(StandardNormal(rng));
    std::vector<float> c_tilde(d_emb), weights(M);
    std::vector<double> per_round;
    for (int r = 0; r < rounds; ++r) {
      const auto start = Clock::now();
      for (int i = 0; i < calls; ++i) {
        query[i % d_emb] += 1e-6f;
        SelectContext<float>(query, memory, c_tilde, weights);
        g_sink = g_sink + c_tilde[0];
      }
      const auto stop = Clock::now();
      per_round.push_back(std::chrono::duration<double, std::nano>(stop - start).count() / calls);
    }
    out.points.push_back({M, *std::min_element(per_round.begin(), per_round.end())});
  }
  const double n = static_cast<double>(out.points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : out.points) {
    sx += p.vectors;
    sy += p.ns_per_call;
    sxx += static_cast<double>(p.vectors) * p.vectors;
    sxy += p.vectors * p.ns_per_call;
  }
  const double denom = n * sxx - sx * sx;
  out.slope_ns_per_vector = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  if (!out.points.empty()) {
    const auto& p0 = out.points.front();
    for (const auto& p : out.points) {
      const double g = (p.ns_per_call / p0.ns_per_call) /
                       (static_cast<double>(p.vectors) / static_cast<double>(p0.vectors));
      out.growth_vs_linear = std::max(out.growth_vs_linear, g);
    }
  }
  return out;
}

}  // namespace memlm
