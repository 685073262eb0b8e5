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

#include "memlm/corpus.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace memlm {

namespace {

const char* const kReservedSpellings[] = {"<pad>", "<s>", "</s>", "<unk>"};

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::size_t Utf8Length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // stray continuation byte: treat as its own symbol
}

bool IsCounted(TokenId id) { return id != Vocabulary::kBos && id != Vocabulary::kPad; }

}  // namespace

TokenizeMode ParseTokenizeMode(std::string_view name) {
  if (name == "char") return TokenizeMode::kChar;
  if (name == "whitespace") return TokenizeMode::kWhitespace;
  throw ConfigError("unknown tokenize mode '" + std::string(name) +
                    "' (expected char or whitespace)");
}

std::string_view TokenizeModeName(TokenizeMode mode) {
  return mode == TokenizeMode::kChar ? "char" : "whitespace";
}

std::vector<std::string> SplitSymbols(std::string_view text, TokenizeMode mode) {
  std::vector<std::string> out;
  std::size_t i = 0;
  if (mode == TokenizeMode::kWhitespace) {
    while (i < text.size()) {
      while (i < text.size() && IsSpace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t start = i;
      while (i < text.size() && !IsSpace(static_cast<unsigned char>(text[i]))) ++i;
      if (i > start) out.emplace_back(text.substr(start, i - start));
    }
    return out;
  }
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (IsSpace(c)) {
      ++i;
      continue;
    }
    std::size_t len = std::min(Utf8Length(c), text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const char* s : kReservedSpellings) Add(s);
}

TokenId Vocabulary::Add(std::string token) {
  if (id_of_.contains(token)) throw DataError("duplicate vocabulary entry '" + token + "'");
  auto id = static_cast<TokenId>(tokens_.size());
  id_of_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

Vocabulary Vocabulary::FromTokens(std::span<const std::string> tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.Add(t);
  return v;
}

Vocabulary Vocabulary::Build(std::span<const std::string> lines, TokenizeMode mode) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& line : lines) {
    for (auto& sym : SplitSymbols(line, mode)) ++counts[std::move(sym)];
  }
  for (const char* s : kReservedSpellings) counts.erase(s);
  std::vector<std::pair<std::string, std::uint64_t>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (auto& [tok, n] : sorted) v.Add(tok);
  return v;
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = id_of_.find(std::string(token));
  if (it == id_of_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::IdOf(std::string_view token) const { return Find(token).value_or(kUnk); }

const std::string& Vocabulary::TokenOf(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractViolation("token id " + std::to_string(id) + " out of vocabulary range");
  }
  return tokens_[id];
}

void Vocabulary::Save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) os << t << '\n';
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  auto lines = ReadLines(path);
  if (lines.size() < kNumReserved) throw DataError("vocabulary too short: " + path.string());
  for (TokenId i = 0; i < kNumReserved; ++i) {
    if (lines[i] != kReservedSpellings[i]) {
      throw DataError("vocabulary " + path.string() + " lacks reserved entry " +
                      kReservedSpellings[i] + " at line " + std::to_string(i + 1));
    }
  }
  return FromTokens(std::span(lines).subspan(kNumReserved));
}

Sentence Tokenize(std::string_view text, TokenizeMode mode, const Vocabulary& vocab) {
  Sentence out{Vocabulary::kBos};
  for (const auto& sym : SplitSymbols(text, mode)) out.push_back(vocab.IdOf(sym));
  out.push_back(Vocabulary::kEos);
  return out;
}

std::vector<std::string> ReadLines(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

Corpus TokenizeLines(std::span<const std::string> lines, TokenizeMode mode,
                     const Vocabulary& vocab) {
  Corpus c;
  c.reserve(lines.size());
  for (const auto& l : lines) c.push_back(Tokenize(l, mode, vocab));
  return c;
}

FrequencyTable FrequencyTable::Build(std::span<const Sentence> corpus, std::size_t vocab_size) {
  FrequencyTable t(vocab_size);
  for (const auto& s : corpus) {
    for (TokenId id : s) {
      if (IsCounted(id)) t.Add(id);
    }
  }
  return t;
}

void FrequencyTable::Add(TokenId id, std::uint64_t n) {
  if (id < 0) throw ContractViolation("negative token id");
  if (static_cast<std::size_t>(id) >= counts_.size()) counts_.resize(id + 1, 0);
  counts_[id] += n;
  total_ += n;
}

void FrequencyTable::Merge(const FrequencyTable& other) {
  if (other.counts_.size() > counts_.size()) counts_.resize(other.counts_.size(), 0);
  for (std::size_t i = 0; i < other.counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

std::uint64_t FrequencyTable::count(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= counts_.size()) return 0;
  return counts_[id];
}

void FrequencyTable::Write(std::ostream& os) const {
  for (std::size_t i = 0; i < counts_.size(); ++i) os << i << '\t' << counts_[i] << '\n';
  os << "#TOTAL\t" << total_ << '\n';
}

void FrequencyTable::Save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write frequency table " + path.string());
  Write(os);
}

FrequencyTable FrequencyTable::Read(std::istream& is) {
  FrequencyTable t;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::uint64_t> declared_total;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("frequency table line " + std::to_string(lineno) + ": missing tab");
    }
    std::string key = line.substr(0, tab);
    std::uint64_t value = 0;
    try {
      value = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError("frequency table line " + std::to_string(lineno) + ": bad count");
    }
    if (key == "#TOTAL") {
      declared_total = value;
      continue;
    }
    long long id = -1;
    try {
      id = std::stoll(key);
    } catch (const std::exception&) {
      throw DataError("frequency table line " + std::to_string(lineno) + ": bad id");
    }
    if (id < 0 || static_cast<std::size_t>(id) != t.counts_.size()) {
      throw DataError("frequency table line " + std::to_string(lineno) +
                      ": ids must be dense and sorted");
    }
    t.counts_.push_back(value);
    t.total_ += value;
  }
  if (!declared_total) throw DataError("frequency table lacks #TOTAL line");
  if (*declared_total != t.total_) throw DataError("frequency table #TOTAL does not match counts");
  return t;
}

FrequencyTable FrequencyTable::Load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read frequency table " + path.string());
  return Read(is);
}

NgramCounts CountNgrams(std::span<const Sentence> corpus, int order) {
  if (order != 1 && order != 2) throw ConfigError("n-gram order must be 1 or 2");
  NgramCounts out;
  out.order = order;
  for (const auto& s : corpus) {
    TokenId prev = Vocabulary::kBos;
    for (TokenId id : s) {
      if (!IsCounted(id)) {
        if (id == Vocabulary::kBos) prev = id;
        continue;
      }
      Ngram g = order == 1 ? Ngram{id} : Ngram{prev, id};
      ++out.counts[g];
      ++out.total;
      prev = id;
    }
  }
  return out;
}

NgramCounts UnigramCounts(const FrequencyTable& freq) {
  NgramCounts out;
  out.order = 1;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    auto c = freq.counts()[i];
    if (c > 0) out.counts[Ngram{static_cast<TokenId>(i)}] = c;
  }
  out.total = freq.total();
  return out;
}

bool TailSet::Contains(std::span<const TokenId> ngram) const {
  return members_.contains(Ngram(ngram.begin(), ngram.end()));
}

bool TailSet::IsTailPosition(std::span<const TokenId> seq, std::size_t pos,
                             TokenId left_context) const {
  if (order_ == 1) return members_.contains(Ngram{seq[pos]});
  TokenId prev = pos == 0 ? left_context : seq[pos - 1];
  return members_.contains(Ngram{prev, seq[pos]});
}

TailSet ExtractTail(const NgramCounts& counts, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("tail threshold must lie in (0,1), got " + std::to_string(threshold));
  }
  std::vector<std::pair<std::uint64_t, const Ngram*>> order;
  order.reserve(counts.counts.size());
  for (const auto& [g, c] : counts.counts) {
    if (c > 0) order.emplace_back(c, &g);
  }
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return *a.second < *b.second;
  });
  const double budget = threshold * static_cast<double>(counts.total);
  std::set<Ngram> members;
  std::uint64_t mass = 0;
  for (const auto& [c, g] : order) {
    if (static_cast<double>(mass + c) > budget) break;
    mass += c;
    members.insert(*g);
  }
  return TailSet(threshold, counts.order, std::move(members));
}

TailSet ExtractTail(const FrequencyTable& freq, double threshold) {
  return ExtractTail(UnigramCounts(freq), threshold);
}

std::vector<AlignedEdit> Align(std::span<const TokenId> ref, std::span<const TokenId> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> dist((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return dist[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<AlignedEdit> edits;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const std::size_t here = at(i, j);
    if (i > 0 && j > 0) {
      bool same = ref[i - 1] == hyp[j - 1];
      if (same && at(i - 1, j - 1) == here) {
        edits.push_back({EditOp::kMatch, i - 1, j - 1});
        --i, --j;
        continue;
      }
      if (!same && at(i - 1, j - 1) + 1 == here) {
        edits.push_back({EditOp::kSubstitution, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i - 1, j) + 1 == here) {
      edits.push_back({EditOp::kDeletion, i - 1, j});
      --i;
      continue;
    }
    edits.push_back({EditOp::kInsertion, i, j - 1});
    --j;
  }
  std::reverse(edits.begin(), edits.end());
  return edits;
}

TailErrorCounts CountTailErrors(std::span<const TokenId> ref, std::span<const TokenId> hyp,
                                const TailSet& tail) {
  TailErrorCounts out;
  std::vector<bool> is_tail(ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    is_tail[k] = tail.IsTailPosition(ref, k);
    if (is_tail[k]) ++out.tail_positions;
  }
  for (const auto& e : Align(ref, hyp)) {
    if (e.op == EditOp::kMatch) continue;
    ++out.total_errors;
    if (e.ref_pos < ref.size() && is_tail[e.ref_pos]) ++out.tail_errors;
  }
  return out;
}

double TailErrorRate(std::span<const TokenId> ref, std::span<const TokenId> hyp,
                     const TailSet& tail) {
  auto c = CountTailErrors(ref, hyp, tail);
  if (c.tail_positions == 0) return 0.0;
  return static_cast<double>(c.tail_errors) / static_cast<double>(c.tail_positions);
}

}  // namespace memlm
