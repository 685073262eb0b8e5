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

// Hyper-parameter sweeps over dictionary size, n-gram order, vectors per
// slot and update-ratio policy. Every cell trains from scratch under the
// same budget for each seed; trends are read off per-cell medians.

#ifndef MEMLM_SWEEP_H_
#define MEMLM_SWEEP_H_

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memlm/corpus.h"
#include "memlm/eval.h"
#include "memlm/run_config.h"
#include "memlm/session.h"

namespace memlm {

struct SweepCell {
  int slots = 0;
  int ngram = 0;
  int vectors = 0;
  std::string ratio = "freq";  // "freq" or a fixed probability

  std::string Label() const;
};

struct SweepGrid {
  std::vector<int> slots;
  std::vector<int> ngram;
  std::vector<int> vectors;
  std::vector<std::string> ratios;
  std::vector<std::uint64_t> seeds;

  // Cartesian product in (slots, ngram, vectors, ratio) order.
  std::vector<SweepCell> Cells() const;
};

struct ToyData {
  std::span<const Sentence> train;
  std::span<const Sentence> valid;
  const FrequencyTable* freq = nullptr;
  const TailSet* tail1 = nullptr;
  const TailSet* tail2 = nullptr;
};

struct SeedResult {
  std::uint64_t seed = 0;
  EvalReport report;
  double information_gain = 0.0;
};

struct CellResult {
  SweepCell cell;
  std::vector<SeedResult> runs;
  std::optional<std::string> error;
  double median_overall_ppl = 0.0;
  std::optional<double> median_tail1_ppl;
  std::optional<double> median_tail2_ppl;
  double median_information_gain = 0.0;
};

// `base` with the cell's dictionary settings and all seeds set to `seed`.
RunConfig ConfigForCell(const RunConfig& base, const SweepCell& cell, std::uint64_t seed);

// Trains `config` for config.train.steps on data.train, then freezes the
// dictionary.
std::unique_ptr<TrainingSession> TrainRun(const RunConfig& config, const ToyData& data);

// A memory of the same shape and config, redrawn from a seed derived from
// the dictionary's own; the reference point for information gain.
LookupDictionary<float> RandomBaselineDictionary(const LookupDictionary<float>& trained);

// Evaluates a trained run on data.valid, including information gain
// against a re-seeded memory of the same shape.
SeedResult EvaluateRun(TrainingSession& session, const ToyData& data, std::uint64_t seed);

CellResult RunCell(const RunConfig& base, const SweepCell& cell,
                   std::span<const std::uint64_t> seeds, const ToyData& data);

using CellCallback = std::function<void(const CellResult&)>;

// Cells run on up to `jobs` threads; each cell is single-threaded. A cell
// that throws is recorded with its error and the sweep continues.
std::vector<CellResult> RunSweep(const RunConfig& base, const SweepGrid& grid,
                                 const ToyData& data, int jobs = 1,
                                 const CellCallback& on_cell = {});

}  // namespace memlm

#endif  // MEMLM_SWEEP_H_
