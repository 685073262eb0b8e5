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

// Tokenization, vocabulary, corpus frequency statistics, tail n-gram
// extraction and tail-restricted error rates.

#ifndef MEMLM_CORPUS_H_
#define MEMLM_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memlm/common.h"

namespace memlm {

enum class TokenizeMode { kChar, kWhitespace };

TokenizeMode ParseTokenizeMode(std::string_view name);
std::string_view TokenizeModeName(TokenizeMode mode);

// Splits a line into symbols: UTF-8 code points (whitespace dropped) in
// char mode, runs of non-space bytes in whitespace mode.
std::vector<std::string> SplitSymbols(std::string_view text, TokenizeMode mode);

class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kUnk = 3;
  static constexpr TokenId kNumReserved = 4;

  // Only the reserved symbols.
  Vocabulary();

  // Reserved symbols followed by `tokens` in the given order. Duplicates and
  // reserved spellings are rejected.
  static Vocabulary FromTokens(std::span<const std::string> tokens);

  // Symbols ordered by descending corpus count, ties by byte order.
  static Vocabulary Build(std::span<const std::string> lines, TokenizeMode mode);

  TokenId IdOf(std::string_view token) const;  // kUnk when absent
  std::optional<TokenId> Find(std::string_view token) const;
  const std::string& TokenOf(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  std::span<const std::string> tokens() const { return tokens_; }

  // One token per line, in id order (reserved entries included).
  void Save(const std::filesystem::path& path) const;
  static Vocabulary Load(const std::filesystem::path& path);

 private:
  TokenId Add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> id_of_;
};

using Sentence = std::vector<TokenId>;
using Corpus = std::vector<Sentence>;

// Returns BOS, symbol ids (UNK for unknown symbols), EOS.
Sentence Tokenize(std::string_view text, TokenizeMode mode, const Vocabulary& vocab);

std::vector<std::string> ReadLines(const std::filesystem::path& path);
Corpus TokenizeLines(std::span<const std::string> lines, TokenizeMode mode,
                     const Vocabulary& vocab);

// Per-id occurrence counts over sentence bodies. BOS and PAD are never
// counted; EOS is.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  explicit FrequencyTable(std::size_t vocab_size) : counts_(vocab_size, 0) {}

  static FrequencyTable Build(std::span<const Sentence> corpus, std::size_t vocab_size);

  void Add(TokenId id, std::uint64_t n = 1);
  void Merge(const FrequencyTable& other);

  // Zero for ids outside the table.
  std::uint64_t count(TokenId id) const;
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return counts_.size(); }
  std::span<const std::uint64_t> counts() const { return counts_; }

  // `token_id<TAB>count` lines sorted by id, then `#TOTAL<TAB>n`.
  void Save(const std::filesystem::path& path) const;
  void Write(std::ostream& os) const;
  static FrequencyTable Load(const std::filesystem::path& path);
  static FrequencyTable Read(std::istream& is);

  bool operator==(const FrequencyTable&) const = default;

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

using Ngram = std::vector<TokenId>;

struct NgramCounts {
  int order = 1;
  std::map<Ngram, std::uint64_t> counts;
  std::uint64_t total = 0;
};

// Counts n-grams ending at every counted position (body tokens and EOS).
// For order 2 the first body token pairs with BOS.
NgramCounts CountNgrams(std::span<const Sentence> corpus, int order);
NgramCounts UnigramCounts(const FrequencyTable& freq);

class TailSet {
 public:
  TailSet() = default;
  TailSet(double threshold, int order, std::set<Ngram> members)
      : threshold_(threshold), order_(order), members_(std::move(members)) {}

  double threshold() const { return threshold_; }
  int order() const { return order_; }
  const std::set<Ngram>& members() const { return members_; }
  bool Contains(std::span<const TokenId> ngram) const;

  // Whether position `pos` of `seq` is a tail position: its token (order 1)
  // or the 2-gram ending at it (order 2) is a member. `left_context` stands
  // in for the token before position 0.
  bool IsTailPosition(std::span<const TokenId> seq, std::size_t pos,
                      TokenId left_context = Vocabulary::kBos) const;

 private:
  double threshold_ = 0.0;
  int order_ = 1;
  std::set<Ngram> members_;
};

// Least-frequent-first accumulation (ties by ascending id tuple) of observed
// n-grams while the cumulative count stays within threshold * total.
TailSet ExtractTail(const NgramCounts& counts, double threshold);
TailSet ExtractTail(const FrequencyTable& freq, double threshold);

enum class EditOp { kMatch, kSubstitution, kDeletion, kInsertion };

struct AlignedEdit {
  EditOp op;
  std::size_t ref_pos;  // for insertions: the following reference position
  std::size_t hyp_pos;  // for deletions: the following hypothesis position
};

// Minimal Levenshtein alignment. Among optimal alignments, the backtrace
// from the end prefers match > substitution > deletion > insertion.
std::vector<AlignedEdit> Align(std::span<const TokenId> ref, std::span<const TokenId> hyp);

struct TailErrorCounts {
  std::size_t tail_errors = 0;     // errors attributed to tail positions
  std::size_t tail_positions = 0;  // tail positions in the reference
  std::size_t total_errors = 0;    // all edits of the alignment
};

// `ref` and `hyp` are sentence bodies (no BOS/EOS). Substitutions and
// deletions count at their reference position; an insertion counts at the
// reference position that follows it.
TailErrorCounts CountTailErrors(std::span<const TokenId> ref, std::span<const TokenId> hyp,
                                const TailSet& tail);
double TailErrorRate(std::span<const TokenId> ref, std::span<const TokenId> hyp,
                     const TailSet& tail);

}  // namespace memlm

#endif  // MEMLM_CORPUS_H_
