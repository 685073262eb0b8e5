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

#include "memlm/session.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "memlm/binary_io.h"

namespace memlm {

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'E', 'M', 'L', 'M', 'C', 'K', 'P'};

using nlohmann::json;

RunConfig Validated(RunConfig c) {
  c.Validate();
  return c;
}

struct ParsedCheckpoint {
  json header;
  std::string payload;  // everything after the header
};

ParsedCheckpoint ReadVerified(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kCheckpointMagic) + 4 + 8 + 8 ||
      !std::equal(kCheckpointMagic, kCheckpointMagic + 8, bytes.begin())) {
    throw DataError(path.string() + " is not a memlm checkpoint (bad magic)");
  }
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  Fnv1a h;
  h.Update(std::string_view(bytes).substr(0, bytes.size() - 8));
  if (h.digest() != stored) {
    throw DataError("checkpoint " + path.string() + " failed checksum verification");
  }
  std::istringstream in(bytes.substr(8, bytes.size() - 16));
  const auto version = ReadU32(in);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto len = ReadU64(in);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header");
  ParsedCheckpoint out;
  try {
    out.header = json::parse(header);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint header: ") + e.what());
  }
  out.payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return out;
}

RunConfig ConfigFromHeader(const json& header) {
  RunConfig c;
  for (const auto& [k, v] : header.at("config").items()) c.Set(k, v.get<std::string>());
  if (HexDigest(c.Hash()) != header.at("config_hash").get<std::string>()) {
    throw DataError("checkpoint config does not match its recorded hash");
  }
  return c;
}

}  // namespace

TrainingSession::TrainingSession(const RunConfig& config, FrequencyTable freq)
    : config_(Validated(config)),
      freq_(std::move(freq)),
      model_(config_.model),
      dict_(config_.use_dict ? std::optional<LookupDictionary<float>>(
                                   std::in_place, config_.dict, config_.model.d_emb)
                             : std::nullopt),
      trainer_(model_, dict_ ? &*dict_ : nullptr, freq_, config_.optim, config_.train.seed) {}

std::vector<Sentence> TrainingSession::SampleBatch(std::span<const Sentence> corpus,
                                                   std::int64_t step) const {
  if (corpus.empty()) throw DataError("training corpus is empty");
  Rng rng(DeriveSeed(config_.train.seed ^ 0x6261746368ULL, static_cast<std::uint64_t>(step)));
  const std::size_t limit = static_cast<std::size_t>(config_.model.max_len) + 1;
  std::vector<Sentence> batch;
  std::int64_t tokens = 0;
  while (tokens < config_.train.batch_tokens) {
    const auto& s = corpus[rng() % corpus.size()];
    if (s.size() < 2) continue;
    Sentence row(s.begin(), s.begin() + std::min(s.size(), limit));
    tokens += static_cast<std::int64_t>(row.size()) - 1;
    batch.push_back(std::move(row));
  }
  return batch;
}

StepStats TrainingSession::Step(std::span<const Sentence> corpus) {
  auto batch = SampleBatch(corpus, step() + 1);
  auto stats = trainer_.TrainStep(batch);
  total_dict_updates_ += stats.dict_updates;
  return stats;
}

void TrainingSession::Save(const std::filesystem::path& path) const {
  json header;
  header["format_version"] = kCheckpointVersion;
  json cfg = json::object();
  for (const auto& [k, v] : config_.ToMap()) cfg[k] = v;
  header["config"] = cfg;
  header["config_hash"] = HexDigest(config_.Hash());
  header["architecture_hash"] = HexDigest(config_.ArchitectureHash());
  json tensors = json::array();
  for (const auto& p : model_.parameters()) tensors.push_back({{"name", p.name}, {"shape", p.shape}});
  header["tensors"] = tensors;
  json state;
  state["optimizer_step"] = trainer_.optimizer().step();
  state["dropout_rng"] = SerializeRng(trainer_.dropout_rng());
  state["total_dict_updates"] = total_dict_updates_;
  if (dict_) {
    state["dict_step"] = dict_->step();
    state["dict_mode"] = dict_->mode() == DictMode::kTraining ? "training" : "frozen";
    state["dict_rng"] = SerializeRng(dict_->rng());
    state["dict_checksum"] = HexDigest(dict_->MemoryChecksum());
  }
  header["state"] = state;
  header["has_dict"] = dict_.has_value();
  header["frequency"] = std::vector<std::uint64_t>(freq_.counts().begin(), freq_.counts().end());
  const std::string header_text = header.dump(2);

  std::ostringstream body(std::ios::binary);
  body.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  WriteU32(body, kCheckpointVersion);
  WriteU64(body, header_text.size());
  body.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& p : model_.parameters()) WriteF32Array<float>(body, p.value);
  if (dict_) WriteF32Array<float>(body, dict_->memory());
  for (const auto& m : trainer_.optimizer().first_moments()) WriteF32Array<float>(body, m);
  for (const auto& v : trainer_.optimizer().second_moments()) WriteF32Array<float>(body, v);
  std::string bytes = body.str();
  Fnv1a h;
  h.Update(bytes);

  // Write to a temporary and rename so a crash never leaves a torn file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint " + tmp.string());
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    WriteU64(os, h.digest());
    if (!os) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<TrainingSession> TrainingSession::Load(const std::filesystem::path& path) {
  auto parsed = ReadVerified(path);
  const auto& header = parsed.header;
  RunConfig config = ConfigFromHeader(header);
  FrequencyTable freq;
  for (std::size_t i = 0; const auto c : header.at("frequency").get<std::vector<std::uint64_t>>()) {
    freq.Add(static_cast<TokenId>(i++), c);
  }
  auto session = std::make_unique<TrainingSession>(config, std::move(freq));

  const auto& tensors = header.at("tensors");
  auto params = session->model_.parameters();
  if (tensors.size() != params.size()) throw DataError("checkpoint tensor count mismatch");
  std::istringstream in(parsed.payload);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (tensors[i].at("name").get<std::string>() != params[i].name ||
        tensors[i].at("shape").get<std::vector<std::size_t>>() != params[i].shape) {
      throw DataError("checkpoint tensor " + std::to_string(i) + " does not match the model");
    }
    ReadF32Array<float>(in, std::span<float>(params[i].value));
  }
  const auto& state = header.at("state");
  if (header.at("has_dict").get<bool>() != session->dict_.has_value()) {
    throw DataError("checkpoint dictionary presence does not match its config");
  }
  if (session->dict_) {
    auto& d = *session->dict_;
    ReadF32Array<float>(in, d.mutable_memory());
    d.set_step(state.at("dict_step").get<std::int64_t>());
    d.set_mode(state.at("dict_mode").get<std::string>() == "frozen" ? DictMode::kFrozen
                                                                     : DictMode::kTraining);
    d.rng() = DeserializeRng(state.at("dict_rng").get<std::string>());
  }
  auto& adam = session->trainer_.optimizer();
  for (auto& m : adam.first_moments()) ReadF32Array<float>(in, std::span<float>(m));
  for (auto& v : adam.second_moments()) ReadF32Array<float>(in, std::span<float>(v));
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint");
  adam.set_step(state.at("optimizer_step").get<std::int64_t>());
  session->trainer_.dropout_rng() = DeserializeRng(state.at("dropout_rng").get<std::string>());
  session->total_dict_updates_ = state.at("total_dict_updates").get<std::uint64_t>();
  return session;
}

RunConfig ReadCheckpointConfig(const std::filesystem::path& path) {
  return ConfigFromHeader(ReadVerified(path).header);
}

void CheckCompatible(const RunConfig& checkpoint, const RunConfig& requested) {
  if (checkpoint.ArchitectureHash() == requested.ArchitectureHash()) return;
  std::string msg = "checkpoint format v" + std::to_string(kCheckpointVersion) +
                    ": config mismatch (checkpoint architecture hash " +
                    HexDigest(checkpoint.ArchitectureHash()) + ", requested " +
                    HexDigest(requested.ArchitectureHash()) + ")";
  for (const auto& d : checkpoint.ArchitectureDiff(requested)) msg += "\n  " + d;
  throw DataError(msg);
}

}  // namespace memlm
