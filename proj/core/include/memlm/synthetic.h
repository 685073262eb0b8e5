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

// Deterministic synthetic corpora for tests, benchmarks and toy experiments.

#ifndef MEMLM_SYNTHETIC_H_
#define MEMLM_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "memlm/random.h"

namespace memlm {

// Samples ranks 0..size-1 with probability proportional to 1/(r+1)^exponent.
class ZipfSampler {
 public:
  ZipfSampler(int size, double exponent);
  int operator()(Rng& rng) const;
  double probability(int rank) const;

 private:
  std::vector<double> cdf_;
};

// Lines of whitespace-separated words "w<rank>" drawn i.i.d. from a Zipf law.
std::vector<std::string> GenerateZipfLines(int lines, int vocab, double exponent, int min_len,
                                           int max_len, std::uint64_t seed);

struct TailCorpusSpec {
  int head_words = 150;
  int tail_words = 50;
  double zipf_exponent = 1.0;
  int sentences = 4000;
  int min_len = 5;  // head words per sentence before trigger insertion
  int max_len = 12;
  double trigger_rate = 0.25;  // probability a sentence carries a trigger
  std::uint64_t seed = 7;
};

struct TailCorpus {
  std::vector<std::string> lines;
  std::vector<std::string> tail_words;
  // For tail word j: the head bigram that precedes it, and only it.
  std::vector<std::pair<std::string, std::string>> triggers;
};

// Zipf-distributed head words "h<rank>" plus tail words "t<j>" that occur
// only directly after their trigger bigram. The generator never emits a
// trigger bigram except in front of its tail word, so each tail word is
// uniquely determined by the two preceding tokens.
TailCorpus GenerateTailCorpus(const TailCorpusSpec& spec);

}  // namespace memlm

#endif  // MEMLM_SYNTHETIC_H_
