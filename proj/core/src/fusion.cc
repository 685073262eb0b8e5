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

#include "memlm/fusion.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "memlm/network.h"

namespace memlm {

void FusionConfig::Validate() const {
  if (!(lambda_sf >= 0.0) || !(lambda_res >= 0.0)) {
    throw ConfigError("fusion weights must be >= 0");
  }
  if (lambda_ilme != 0.0) {
    throw ConfigError(
        "internal LM estimation (lambda_ilme) needs the recognizer's internal LM and is not "
        "supported; set it to 0");
  }
}

template <Real T>
double ScoreSequence(const TransformerLM<T>& model, const LookupDictionary<T>* dict,
                     std::span<const TokenId> tokens) {
  if (dict && dict->mode() != DictMode::kFrozen) {
    throw ContractViolation("sequence scoring requires a frozen dictionary");
  }
  return -EvaluateSentence<T>(model, dict, tokens).nll;
}

template double ScoreSequence<float>(const TransformerLM<float>&, const LookupDictionary<float>*,
                                     std::span<const TokenId>);
template double ScoreSequence<double>(const TransformerLM<double>&,
                                      const LookupDictionary<double>*, std::span<const TokenId>);

Sentence FrameWords(std::span<const std::string> words, const Vocabulary& vocab) {
  Sentence s{Vocabulary::kBos};
  for (const auto& w : words) s.push_back(vocab.IdOf(w));
  s.push_back(Vocabulary::kEos);
  return s;
}

std::vector<RankedHypothesis> Rescore(std::span<const Hypothesis> nbest, const FusionConfig& cfg) {
  cfg.Validate();
  if (nbest.empty()) throw DataError("cannot rescore an empty N-best list");
  const double lambda = cfg.Weight();
  std::vector<RankedHypothesis> out;
  out.reserve(nbest.size());
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    const auto& h = nbest[i];
    if (!std::isfinite(h.base_score)) throw DataError("non-finite base score in N-best list");
    out.push_back({h, h.base_score + lambda * h.lm_score, i});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.combined != b.combined) return a.combined > b.combined;
    return a.hypothesis.rank < b.hypothesis.rank;
  });
  return out;
}

std::vector<std::vector<Hypothesis>> ReadNbest(std::istream& is) {
  std::vector<std::vector<Hypothesis>> blocks;
  std::vector<Hypothesis> current;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (!current.empty()) blocks.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    if (line.front() == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw DataError("N-best line " + std::to_string(lineno) +
                      ": expected rank<TAB>base_score<TAB>tokens");
    }
    Hypothesis h;
    try {
      std::size_t used = 0;
      const std::string rank = line.substr(0, t1);
      h.rank = std::stoi(rank, &used);
      if (used != rank.size()) throw std::invalid_argument(rank);
      const std::string score = line.substr(t1 + 1, t2 - t1 - 1);
      h.base_score = std::stod(score, &used);
      if (used != score.size()) throw std::invalid_argument(score);
    } catch (const std::exception&) {
      throw DataError("N-best line " + std::to_string(lineno) + ": bad rank or score");
    }
    if (!std::isfinite(h.base_score)) {
      throw DataError("N-best line " + std::to_string(lineno) + ": non-finite base score");
    }
    h.words = SplitSymbols(std::string_view(line).substr(t2 + 1), TokenizeMode::kWhitespace);
    current.push_back(std::move(h));
  }
  flush();
  return blocks;
}

void WriteRescored(std::ostream& os, const std::vector<std::vector<RankedHypothesis>>& blocks) {
  char buf[64];
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (b) os << '\n';
    for (const auto& r : blocks[b]) {
      const auto& h = r.hypothesis;
      os << h.rank << '\t';
      std::snprintf(buf, sizeof(buf), "%.17g", h.base_score);
      os << buf << '\t';
      for (std::size_t i = 0; i < h.words.size(); ++i) os << (i ? " " : "") << h.words[i];
      std::snprintf(buf, sizeof(buf), "\t%.17g", h.lm_score);
      os << buf;
      std::snprintf(buf, sizeof(buf), "\t%.17g", r.combined);
      os << buf << '\n';
    }
  }
}

}  // namespace memlm
