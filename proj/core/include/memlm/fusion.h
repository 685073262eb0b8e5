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

// Sequence scoring and N-best rescoring.
//
// Without a recognizer both fusion weights act on whole hypotheses:
//   combined = base_score + lambda * lm_score
// with lambda = lambda_res in rescoring mode and lambda_sf in fusion mode.
//
// N-best file format: blocks separated by blank lines, one utterance per
// block, one hypothesis per line:
//   rank<TAB>base_score<TAB>space separated tokens
// Lines starting with '#' are comments.
// Rescored output repeats those columns (hypotheses in new rank order) and
// appends lm_score and combined.

#ifndef MEMLM_FUSION_H_
#define MEMLM_FUSION_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memlm/corpus.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"

namespace memlm {

enum class FusionMode { kRescore, kShallowFusion };

struct FusionConfig {
  double lambda_sf = 0.0;
  double lambda_res = 0.0;
  // Internal LM estimation weight. Needs the recognizer's internal LM, which
  // is not available here; any non-zero value is rejected.
  double lambda_ilme = 0.0;
  FusionMode mode = FusionMode::kRescore;

  void Validate() const;
  double Weight() const { return mode == FusionMode::kRescore ? lambda_res : lambda_sf; }
};

struct Hypothesis {
  int rank = 0;
  double base_score = 0.0;
  std::vector<std::string> words;
  double lm_score = 0.0;
};

struct RankedHypothesis {
  Hypothesis hypothesis;
  double combined = 0.0;
  std::size_t input_index = 0;
};

// Sum of log p(token_{k+1} | tokens_0..k) over the framed sequence, EOS
// included. `dict` may be null; when given it must be frozen.
template <Real T>
double ScoreSequence(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                     std::span<const TokenId> tokens);

// BOS + vocabulary ids of `words` + EOS.
Sentence FrameWords(std::span<const std::string> words, const Vocabulary& vocab);

// Descending by combined score; ties go to the lower original rank, then
// to input order.
// Throws DataError on an empty list.
std::vector<RankedHypothesis> Rescore(std::span<const Hypothesis> nbest, const FusionConfig& cfg);

std::vector<std::vector<Hypothesis>> ReadNbest(std::istream& is);
void WriteRescored(std::ostream& os, const std::vector<std::vector<RankedHypothesis>>& blocks);

}  // namespace memlm

#endif  // MEMLM_FUSION_H_
