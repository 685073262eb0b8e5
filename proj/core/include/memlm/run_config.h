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

// Run configuration: every hyper-parameter of a training or analysis run.
//
// Text form is one `key = value` per line; `#` starts a comment. The
// canonical form lists every key in sorted order with full-precision
// numbers, and its hash identifies the run in every artifact.

#ifndef MEMLM_RUN_CONFIG_H_
#define MEMLM_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memlm/corpus.h"
#include "memlm/memory_dict.h"
#include "memlm/model.h"
#include "memlm/trainer.h"

namespace memlm {

struct TrainConfig {
  std::int64_t steps = 2000;
  std::int64_t batch_tokens = 512;  // target tokens per update
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::int64_t log_every = 1;
  std::uint64_t seed = 1;  // batch sampling and dropout

  bool operator==(const TrainConfig&) const = default;
};

struct DataConfig {
  std::string train;
  std::string valid;
  std::string vocab;
  std::string freq;
  TokenizeMode mode = TokenizeMode::kWhitespace;

  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  ModelConfig model;
  DictConfig dict;
  bool use_dict = true;  // false: plain Transformer baseline
  OptimizerConfig optim;
  TrainConfig train;
  DataConfig data;
  double tail_threshold = 0.05;
  std::string output_dir = "run";

  RunConfig();

  // Sets one key from its text value. Unknown keys and malformed values
  // throw ConfigError.
  void Set(const std::string& key, const std::string& value);
  // Applies `key=value` override strings.
  void Apply(const std::vector<std::string>& overrides);

  std::map<std::string, std::string> ToMap() const;
  std::string Canonical() const;
  std::uint64_t Hash() const;
  // Hash over the keys that fix tensor shapes and numerics (model.*, dict.*,
  // optim.*); artifacts refuse to load under a config whose value differs.
  std::uint64_t ArchitectureHash() const;
  std::vector<std::string> ArchitectureDiff(const RunConfig& other) const;

  void Validate() const;

  static RunConfig Parse(std::istream& is);
  static RunConfig ParseString(const std::string& text);
  static RunConfig Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

std::vector<std::string> ConfigKeys();

}  // namespace memlm

#endif  // MEMLM_RUN_CONFIG_H_
