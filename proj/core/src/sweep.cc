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

#include "memlm/sweep.h"

#include <atomic>
#include <mutex>
#include <thread>

#include "memlm/latency.h"

namespace memlm {

namespace {

constexpr std::uint64_t kRandomMemorySalt = 0x72616e646f6dULL;

std::optional<double> MedianOf(const std::vector<SeedResult>& runs,
                               std::optional<double> EvalReport::*field) {
  std::vector<double> v;
  for (const auto& r : runs) {
    if (auto x = r.report.*field) v.push_back(*x);
  }
  if (v.empty()) return std::nullopt;
  return Median(std::move(v));
}

}  // namespace

std::string SweepCell::Label() const {
  return "U=" + std::to_string(slots) + ",N=" + std::to_string(ngram) +
         ",M=" + std::to_string(vectors) + ",ratio=" + ratio;
}

std::vector<SweepCell> SweepGrid::Cells() const {
  std::vector<SweepCell> out;
  for (int u : slots) {
    for (int n : ngram) {
      for (int m : vectors) {
        for (const auto& r : ratios) out.push_back({u, n, m, r});
      }
    }
  }
  return out;
}

LookupDictionary<float> RandomBaselineDictionary(const LookupDictionary<float>& trained) {
  LookupDictionary<float> random(trained.config(), trained.d_emb());
  random.Reinitialize(DeriveSeed(trained.config().seed, kRandomMemorySalt));
  random.set_mode(DictMode::kFrozen);
  return random;
}

RunConfig ConfigForCell(const RunConfig& base, const SweepCell& cell, std::uint64_t seed) {
  RunConfig c = base;
  c.use_dict = true;
  c.dict.slots = cell.slots;
  c.dict.ngram_order = cell.ngram;
  c.dict.vectors_per_slot = cell.vectors;
  c.Set("dict.ratio", cell.ratio);
  c.model.seed = seed;
  c.dict.seed = seed;
  c.train.seed = seed;
  return c;
}

std::unique_ptr<TrainingSession> TrainRun(const RunConfig& config, const ToyData& data) {
  auto session = std::make_unique<TrainingSession>(config, *data.freq);
  for (std::int64_t s = 0; s < config.train.steps; ++s) session->Step(data.train);
  if (auto* d = session->dictionary()) d->set_mode(DictMode::kFrozen);
  return session;
}

SeedResult EvaluateRun(TrainingSession& session, const ToyData& data, std::uint64_t seed) {
  SeedResult r;
  r.seed = seed;
  const auto* dict = session.dictionary();
  r.report = Perplexity<float>(session.model(), dict, data.valid, data.tail1, data.tail2);
  if (dict) {
    const auto random = RandomBaselineDictionary(*dict);
    r.information_gain = InformationGain<float>(session.model(), *dict, random, data.valid);
  }
  return r;
}

CellResult RunCell(const RunConfig& base, const SweepCell& cell,
                   std::span<const std::uint64_t> seeds, const ToyData& data) {
  CellResult out;
  out.cell = cell;
  try {
    for (auto seed : seeds) {
      auto cfg = ConfigForCell(base, cell, seed);
      auto session = TrainRun(cfg, data);
      out.runs.push_back(EvaluateRun(*session, data, seed));
    }
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  std::vector<double> overall, ig;
  for (const auto& r : out.runs) {
    overall.push_back(r.report.overall_ppl);
    ig.push_back(r.information_gain);
  }
  out.median_overall_ppl = Median(overall);
  out.median_information_gain = Median(ig);
  out.median_tail1_ppl = MedianOf(out.runs, &EvalReport::tail1_ppl);
  out.median_tail2_ppl = MedianOf(out.runs, &EvalReport::tail2_ppl);
  return out;
}

std::vector<CellResult> RunSweep(const RunConfig& base, const SweepGrid& grid,
                                 const ToyData& data, int jobs, const CellCallback& on_cell) {
  const auto cells = grid.Cells();
  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      results[i] = RunCell(base, cells[i], grid.seeds, data);
      if (on_cell) {
        std::lock_guard lock(callback_mu);
        on_cell(results[i]);
      }
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
  }
  return results;
}

}  // namespace memlm
