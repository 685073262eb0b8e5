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

#include "memlm/synthetic.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "memlm/common.h"

namespace memlm {

ZipfSampler::ZipfSampler(int size, double exponent) {
  if (size < 1) throw ConfigError("Zipf support must be non-empty");
  cdf_.resize(size);
  double acc = 0.0;
  for (int r = 0; r < size; ++r) {
    acc += 1.0 / std::pow(r + 1.0, exponent);
    cdf_[r] = acc;
  }
  for (auto& c : cdf_) c /= acc;
}

int ZipfSampler::operator()(Rng& rng) const {
  const double u = Uniform01(rng);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
}

double ZipfSampler::probability(int rank) const {
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

namespace {

int UniformInt(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(Uniform01(rng) * (hi - lo + 1));
}

}  // namespace

std::vector<std::string> GenerateZipfLines(int lines, int vocab, double exponent, int min_len,
                                           int max_len, std::uint64_t seed) {
  Rng rng(DeriveSeed(seed, 0x7a697066ULL));
  ZipfSampler zipf(vocab, exponent);
  std::vector<std::string> out;
  out.reserve(lines);
  for (int i = 0; i < lines; ++i) {
    const int len = UniformInt(rng, min_len, max_len);
    std::string line;
    for (int k = 0; k < len; ++k) {
      if (k) line += ' ';
      line += 'w' + std::to_string(zipf(rng));
    }
    out.push_back(std::move(line));
  }
  return out;
}

TailCorpus GenerateTailCorpus(const TailCorpusSpec& spec) {
  if (spec.head_words < 4 || spec.tail_words < 1 || spec.min_len < 2 ||
      spec.max_len < spec.min_len) {
    throw ConfigError("invalid tail corpus spec");
  }
  Rng rng(DeriveSeed(spec.seed, 0x7461696cULL));
  ZipfSampler zipf(spec.head_words, spec.zipf_exponent);

  // Trigger bigrams over the less frequent half of the head vocabulary, so
  // that suppressing them elsewhere barely perturbs the head distribution.
  TailCorpus out;
  std::set<std::pair<int, int>> used;
  std::vector<std::pair<int, int>> triggers;
  const int lo = spec.head_words / 4;
  while (static_cast<int>(triggers.size()) < spec.tail_words) {
    const int a = UniformInt(rng, lo, spec.head_words - 1);
    const int b = UniformInt(rng, lo, spec.head_words - 1);
    if (!used.insert({a, b}).second) continue;
    triggers.emplace_back(a, b);
  }
  auto head = [](int r) { return "h" + std::to_string(r); };
  for (int j = 0; j < spec.tail_words; ++j) {
    out.tail_words.push_back("t" + std::to_string(j));
    out.triggers.emplace_back(head(triggers[j].first), head(triggers[j].second));
  }

  for (int s = 0; s < spec.sentences; ++s) {
    const int len = UniformInt(rng, spec.min_len, spec.max_len);
    std::vector<int> words;  // >= 0 head rank, < 0 tail word -(j+1)
    int prev = -1;
    for (int k = 0; k < len; ++k) {
      int w = zipf(rng);
      while (prev >= 0 && used.contains({prev, w})) w = zipf(rng);
      words.push_back(w);
      prev = w;
    }
    if (Uniform01(rng) < spec.trigger_rate) {
      const int j = UniformInt(rng, 0, spec.tail_words - 1);
      int at = UniformInt(rng, 0, len);  // insertion point
      std::vector<int> event = {triggers[j].first, triggers[j].second, -(j + 1)};
      words.insert(words.begin() + at, event.begin(), event.end());
      // The word in front of the trigger may not form another trigger bigram.
      while (at > 0 && used.contains({words[at - 1], words[at]})) {
        words.erase(words.begin() + at - 1);
        --at;
      }
    }
    std::string line;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k) line += ' ';
      line += words[k] >= 0 ? head(words[k]) : out.tail_words[-words[k] - 1];
    }
    out.lines.push_back(std::move(line));
  }
  return out;
}

}  // namespace memlm
