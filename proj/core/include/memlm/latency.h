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

// Inference cost accounting: per-token latency of the plain and the
// dictionary-augmented model, and the cost of context selection versus M.
// Everything here runs on the calling thread only.

#ifndef MEMLM_LATENCY_H_
#define MEMLM_LATENCY_H_

#include <span>
#include <vector>

#include "memlm/corpus.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"

namespace memlm {

struct LatencyStats {
  double median_us = 0.0;  // per token
  double p95_us = 0.0;
  bool unreliable = false;  // p95 / median > 2
};

struct LatencyComparison {
  LatencyStats baseline;
  LatencyStats augmented;
  double overhead = 0.0;  // (augmented - baseline) / baseline, on medians
};

// Scores every sentence `reps` times with and without the dictionary
// (interleaved, after `warmup` untimed passes). Same Transformer weights.
LatencyComparison MeasureInferenceLatency(const TransformerLM<float>& model,
                                          const LookupDictionary<float>& dict,
                                          std::span<const Sentence> corpus, int reps, int warmup);

struct ScalingPoint {
  int vectors = 0;
  double ns_per_call = 0.0;
};

struct SelectionScaling {
  std::vector<ScalingPoint> points;
  double slope_ns_per_vector = 0.0;  // least-squares fit of ns against M
  // max over points of (t_i / t_0) / (M_i / M_0); <= 1 means no worse than linear.
  double growth_vs_linear = 0.0;
};

// Fastest-of-rounds cost of one SelectContext call for each M at fixed
// d_emb; the minimum is robust to scheduler noise.
SelectionScaling MeasureSelectionScaling(int d_emb, std::span<const int> vectors, int calls,
                                         int rounds = 7);

double Median(std::vector<double> values);
double Percentile(std::vector<double> values, double q);

}  // namespace memlm

#endif  // MEMLM_LATENCY_H_
