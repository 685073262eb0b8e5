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

#include "memlm/run_config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace memlm {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename Int>
Int ParseInt(const std::string& key, const std::string& v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

double ParseDouble(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

bool ParseBool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::string Bool(bool b) { return b ? "true" : "false"; }

bool IsArchitectureKey(const std::string& key) {
  return key.starts_with("model.") || key.starts_with("dict.") || key.starts_with("optim.");
}

}  // namespace

RunConfig::RunConfig() = default;

void RunConfig::Set(const std::string& key, const std::string& raw) {
  const std::string v = Trim(raw);
  using Setter = std::function<void(RunConfig&, const std::string&)>;
  static const std::map<std::string, Setter> kSetters = {
      {"model.vocab_size", [](RunConfig& c, const std::string& s) { c.model.vocab_size = ParseInt<int>("model.vocab_size", s); }},
      {"model.d_emb", [](RunConfig& c, const std::string& s) { c.model.d_emb = ParseInt<int>("model.d_emb", s); }},
      {"model.layers", [](RunConfig& c, const std::string& s) { c.model.layers = ParseInt<int>("model.layers", s); }},
      {"model.heads", [](RunConfig& c, const std::string& s) { c.model.heads = ParseInt<int>("model.heads", s); }},
      {"model.d_ff", [](RunConfig& c, const std::string& s) { c.model.d_ff = ParseInt<int>("model.d_ff", s); }},
      {"model.max_len", [](RunConfig& c, const std::string& s) { c.model.max_len = ParseInt<int>("model.max_len", s); }},
      {"model.dropout", [](RunConfig& c, const std::string& s) { c.model.dropout = ParseDouble("model.dropout", s); }},
      {"model.init_std", [](RunConfig& c, const std::string& s) { c.model.init_std = ParseDouble("model.init_std", s); }},
      {"model.seed", [](RunConfig& c, const std::string& s) { c.model.seed = ParseInt<std::uint64_t>("model.seed", s); }},
      {"dict.enabled", [](RunConfig& c, const std::string& s) { c.use_dict = ParseBool("dict.enabled", s); }},
      {"dict.slots", [](RunConfig& c, const std::string& s) { c.dict.slots = ParseInt<int>("dict.slots", s); }},
      {"dict.vectors", [](RunConfig& c, const std::string& s) { c.dict.vectors_per_slot = ParseInt<int>("dict.vectors", s); }},
      {"dict.ngram", [](RunConfig& c, const std::string& s) { c.dict.ngram_order = ParseInt<int>("dict.ngram", s); }},
      {"dict.alpha", [](RunConfig& c, const std::string& s) { c.dict.alpha = ParseDouble("dict.alpha", s); }},
      {"dict.warmup_steps", [](RunConfig& c, const std::string& s) { c.dict.warmup_steps = ParseInt<std::int64_t>("dict.warmup_steps", s); }},
      {"dict.p_floor", [](RunConfig& c, const std::string& s) { c.dict.p_floor = ParseDouble("dict.p_floor", s); }},
      {"dict.p_ceil", [](RunConfig& c, const std::string& s) { c.dict.p_ceil = ParseDouble("dict.p_ceil", s); }},
      {"dict.seed", [](RunConfig& c, const std::string& s) { c.dict.seed = ParseInt<std::uint64_t>("dict.seed", s); }},
      {"dict.ratio", [](RunConfig& c, const std::string& s) {
         if (s == "freq") {
           c.dict.fixed_ratio.reset();
         } else {
           c.dict.fixed_ratio = ParseDouble("dict.ratio", s);
         }
       }},
      {"dict.residual", [](RunConfig& c, const std::string& s) { c.dict.residual = ParseBool("dict.residual", s); }},
      {"dict.init_std", [](RunConfig& c, const std::string& s) { c.dict.init_std = ParseDouble("dict.init_std", s); }},
      {"optim.lr", [](RunConfig& c, const std::string& s) { c.optim.lr = ParseDouble("optim.lr", s); }},
      {"optim.beta1", [](RunConfig& c, const std::string& s) { c.optim.beta1 = ParseDouble("optim.beta1", s); }},
      {"optim.beta2", [](RunConfig& c, const std::string& s) { c.optim.beta2 = ParseDouble("optim.beta2", s); }},
      {"optim.eps", [](RunConfig& c, const std::string& s) { c.optim.eps = ParseDouble("optim.eps", s); }},
      {"optim.weight_decay", [](RunConfig& c, const std::string& s) { c.optim.weight_decay = ParseDouble("optim.weight_decay", s); }},
      {"optim.warmup_steps", [](RunConfig& c, const std::string& s) { c.optim.warmup_steps = ParseInt<std::int64_t>("optim.warmup_steps", s); }},
      {"train.steps", [](RunConfig& c, const std::string& s) { c.train.steps = ParseInt<std::int64_t>("train.steps", s); }},
      {"train.batch_tokens", [](RunConfig& c, const std::string& s) { c.train.batch_tokens = ParseInt<std::int64_t>("train.batch_tokens", s); }},
      {"train.checkpoint_every", [](RunConfig& c, const std::string& s) { c.train.checkpoint_every = ParseInt<std::int64_t>("train.checkpoint_every", s); }},
      {"train.log_every", [](RunConfig& c, const std::string& s) { c.train.log_every = ParseInt<std::int64_t>("train.log_every", s); }},
      {"train.seed", [](RunConfig& c, const std::string& s) { c.train.seed = ParseInt<std::uint64_t>("train.seed", s); }},
      {"data.train", [](RunConfig& c, const std::string& s) { c.data.train = s; }},
      {"data.valid", [](RunConfig& c, const std::string& s) { c.data.valid = s; }},
      {"data.vocab", [](RunConfig& c, const std::string& s) { c.data.vocab = s; }},
      {"data.freq", [](RunConfig& c, const std::string& s) { c.data.freq = s; }},
      {"data.mode", [](RunConfig& c, const std::string& s) { c.data.mode = ParseTokenizeMode(s); }},
      {"tail.threshold", [](RunConfig& c, const std::string& s) { c.tail_threshold = ParseDouble("tail.threshold", s); }},
      {"output.dir", [](RunConfig& c, const std::string& s) { c.output_dir = s; }},
  };
  auto it = kSetters.find(key);
  if (it == kSetters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(*this, v);
}

void RunConfig::Apply(const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    Set(Trim(o.substr(0, eq)), o.substr(eq + 1));
  }
}

std::map<std::string, std::string> RunConfig::ToMap() const {
  std::map<std::string, std::string> m;
  m["model.vocab_size"] = std::to_string(model.vocab_size);
  m["model.d_emb"] = std::to_string(model.d_emb);
  m["model.layers"] = std::to_string(model.layers);
  m["model.heads"] = std::to_string(model.heads);
  m["model.d_ff"] = std::to_string(model.d_ff);
  m["model.max_len"] = std::to_string(model.max_len);
  m["model.dropout"] = FormatDouble(model.dropout);
  m["model.init_std"] = FormatDouble(model.init_std);
  m["model.seed"] = std::to_string(model.seed);
  m["dict.enabled"] = Bool(use_dict);
  m["dict.slots"] = std::to_string(dict.slots);
  m["dict.vectors"] = std::to_string(dict.vectors_per_slot);
  m["dict.ngram"] = std::to_string(dict.ngram_order);
  m["dict.alpha"] = FormatDouble(dict.alpha);
  m["dict.warmup_steps"] = std::to_string(dict.warmup_steps);
  m["dict.p_floor"] = FormatDouble(dict.p_floor);
  m["dict.p_ceil"] = FormatDouble(dict.p_ceil);
  m["dict.seed"] = std::to_string(dict.seed);
  m["dict.ratio"] = dict.fixed_ratio ? FormatDouble(*dict.fixed_ratio) : "freq";
  m["dict.residual"] = Bool(dict.residual);
  m["dict.init_std"] = FormatDouble(dict.init_std);
  m["optim.lr"] = FormatDouble(optim.lr);
  m["optim.beta1"] = FormatDouble(optim.beta1);
  m["optim.beta2"] = FormatDouble(optim.beta2);
  m["optim.eps"] = FormatDouble(optim.eps);
  m["optim.weight_decay"] = FormatDouble(optim.weight_decay);
  m["optim.warmup_steps"] = std::to_string(optim.warmup_steps);
  m["train.steps"] = std::to_string(train.steps);
  m["train.batch_tokens"] = std::to_string(train.batch_tokens);
  m["train.checkpoint_every"] = std::to_string(train.checkpoint_every);
  m["train.log_every"] = std::to_string(train.log_every);
  m["train.seed"] = std::to_string(train.seed);
  m["data.train"] = data.train;
  m["data.valid"] = data.valid;
  m["data.vocab"] = data.vocab;
  m["data.freq"] = data.freq;
  m["data.mode"] = std::string(TokenizeModeName(data.mode));
  m["tail.threshold"] = FormatDouble(tail_threshold);
  m["output.dir"] = output_dir;
  return m;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : RunConfig().ToMap()) keys.push_back(k);
  return keys;
}

std::string RunConfig::Canonical() const {
  std::string out;
  for (const auto& [k, v] : ToMap()) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::Hash() const {
  Fnv1a h;
  h.Update(Canonical());
  return h.digest();
}

std::uint64_t RunConfig::ArchitectureHash() const {
  Fnv1a h;
  for (const auto& [k, v] : ToMap()) {
    if (!IsArchitectureKey(k)) continue;
    h.Update(k);
    h.Update("=");
    h.Update(v);
    h.Update("\n");
  }
  return h.digest();
}

std::vector<std::string> RunConfig::ArchitectureDiff(const RunConfig& other) const {
  std::vector<std::string> diff;
  auto a = ToMap(), b = other.ToMap();
  for (const auto& [k, v] : a) {
    if (IsArchitectureKey(k) && b[k] != v) diff.push_back(k + ": " + v + " vs " + b[k]);
  }
  return diff;
}

void RunConfig::Validate() const {
  model.Validate();
  if (use_dict) dict.Validate();
  optim.Validate();
  if (train.steps < 0 || train.batch_tokens < 1 || train.checkpoint_every < 0 ||
      train.log_every < 1) {
    throw ConfigError("train.* values out of range");
  }
  if (!(tail_threshold > 0.0 && tail_threshold < 1.0)) {
    throw ConfigError("tail.threshold must lie in (0,1)");
  }
}

RunConfig RunConfig::Parse(std::istream& is) {
  RunConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    c.Set(Trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

RunConfig RunConfig::ParseString(const std::string& text) {
  std::istringstream is(text);
  return Parse(is);
}

RunConfig RunConfig::Load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read config " + path.string());
  return Parse(is);
}

void RunConfig::Save(const std::filesystem::path& path) const {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write config " + path.string());
  os << Canonical();
}

}  // namespace memlm
