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

#include "memlm/cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "memlm/corpus.h"
#include "memlm/eval.h"
#include "memlm/fusion.h"
#include "memlm/latency.h"
#include "memlm/random.h"
#include "memlm/run_config.h"
#include "memlm/session.h"
#include "memlm/sweep.h"
#include "memlm/synthetic.h"

namespace memlm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Options shared by every subcommand that takes a run configuration.
struct ConfigOptions {
  std::string config_file;
  std::vector<std::string> overrides;
};

void AddConfigOptions(CLI::App* cmd, ConfigOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "Run config file (key = value lines)");
  cmd->add_option("-s,--set", o.overrides, "Override a config key: key=value (repeatable)");
}

RunConfig LoadConfig(const ConfigOptions& o) {
  RunConfig c = o.config_file.empty() ? RunConfig() : RunConfig::Load(o.config_file);
  c.Apply(o.overrides);
  return c;
}

// jsonl: one object per line. tsv: a header row of keys on first use, then
// one row per record; nested values are written as compact JSON.
class ReportWriter {
 public:
  ReportWriter(std::string format, std::ostream& os) : format_(std::move(format)), os_(os) {
    if (format_ != "jsonl" && format_ != "tsv") {
      throw ConfigError("--format must be jsonl or tsv, got '" + format_ + "'");
    }
  }

  void Write(const json& record) {
    if (format_ == "jsonl") {
      os_ << record.dump() << '\n';
      return;
    }
    if (header_.empty()) {
      for (const auto& [k, v] : record.items()) header_.push_back(k);
      for (std::size_t i = 0; i < header_.size(); ++i) os_ << (i ? "\t" : "") << header_[i];
      os_ << '\n';
    }
    for (std::size_t i = 0; i < header_.size(); ++i) {
      if (i) os_ << '\t';
      const auto it = record.find(header_[i]);
      if (it == record.end() || it->is_null()) {
        os_ << "NA";
      } else if (it->is_string()) {
        os_ << it->get<std::string>();
      } else {
        os_ << it->dump();
      }
    }
    os_ << '\n';
  }

 private:
  std::string format_;
  std::ostream& os_;
  std::vector<std::string> header_;
};

// Destination of a report: a file when --out is set, else stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (path.empty()) return;
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw DataError("cannot write " + path);
    os_ = file_.get();
  }
  std::ostream& stream() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

json Optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Vocabulary LoadOrBuildVocab(const RunConfig& c) {
  if (!c.data.vocab.empty()) return Vocabulary::Load(c.data.vocab);
  if (c.data.train.empty()) throw ConfigError("need data.vocab or data.train");
  return Vocabulary::Build(ReadLines(c.data.train), c.data.mode);
}

Corpus LoadCorpus(const std::string& path, const RunConfig& c, const Vocabulary& vocab) {
  if (path.empty()) throw ConfigError("no corpus path configured");
  return TokenizeLines(ReadLines(path), c.data.mode, vocab);
}

void SetVocabSize(RunConfig& c, const Vocabulary& vocab) {
  const int v = static_cast<int>(vocab.size());
  if (c.model.vocab_size == 0) {
    c.model.vocab_size = v;
  } else if (c.model.vocab_size != v) {
    throw ConfigError("model.vocab_size is " + std::to_string(c.model.vocab_size) +
                      " but the vocabulary has " + std::to_string(v) + " entries");
  }
}

// ---------------------------------------------------------------- build-corpus

struct BuildCorpusOptions {
  ConfigOptions config;
  std::string train, valid, mode, out_dir = "corpus";
  std::string generate;
  int sentences = 4000;
  std::uint64_t seed = 7;
};

void WriteLines(const fs::path& path, std::span<const std::string> lines) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) os << l << '\n';
}

int BuildCorpus(const BuildCorpusOptions& o, std::ostream& out) {
  RunConfig c = LoadConfig(o.config);
  if (!o.mode.empty()) c.data.mode = ParseTokenizeMode(o.mode);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  if (!o.generate.empty()) {
    std::vector<std::string> lines;
    if (o.generate == "tail") {
      TailCorpusSpec spec;
      spec.sentences = o.sentences;
      spec.seed = o.seed;
      lines = GenerateTailCorpus(spec).lines;
    } else if (o.generate == "zipf") {
      lines = GenerateZipfLines(o.sentences, 200, 1.0, 3, 15, o.seed);
    } else {
      throw ConfigError("--generate must be tail or zipf");
    }
    const auto split = lines.size() - lines.size() / 10;
    WriteLines(dir / "train.txt", std::span(lines).first(split));
    WriteLines(dir / "valid.txt", std::span(lines).subspan(split));
    c.data.train = (dir / "train.txt").string();
    c.data.valid = (dir / "valid.txt").string();
    c.data.mode = TokenizeMode::kWhitespace;
  }
  if (!o.train.empty()) c.data.train = o.train;
  if (!o.valid.empty()) c.data.valid = o.valid;
  if (c.data.train.empty()) throw ConfigError("build-corpus needs --train or --generate");

  const auto train_lines = ReadLines(c.data.train);
  const auto vocab = Vocabulary::Build(train_lines, c.data.mode);
  const auto train = TokenizeLines(train_lines, c.data.mode, vocab);
  const auto freq = FrequencyTable::Build(train, vocab.size());
  c.data.vocab = (dir / "vocab.txt").string();
  c.data.freq = (dir / "freq.tsv").string();
  c.model.vocab_size = static_cast<int>(vocab.size());
  vocab.Save(c.data.vocab);
  freq.Save(c.data.freq);
  c.Save(dir / "config.cfg");

  std::size_t tokens = 0;
  for (const auto& s : train) tokens += s.size() - 1;
  const auto tail1 = ExtractTail(freq, c.tail_threshold);
  const auto tail2 = ExtractTail(CountNgrams(train, 2), c.tail_threshold);
  json manifest = {
      {"command", "build-corpus"},
      {"config_hash", HexDigest(c.Hash())},
      {"mode", std::string(TokenizeModeName(c.data.mode))},
      {"vocab_size", vocab.size()},
      {"train_sentences", train.size()},
      {"train_targets", tokens},
      {"freq_total", freq.total()},
      {"tail1_ngrams", tail1.members().size()},
      {"tail2_ngrams", tail2.members().size()},
      {"vocab", c.data.vocab},
      {"freq", c.data.freq},
      {"config", (dir / "config.cfg").string()},
  };
  std::ofstream(dir / "corpus.json") << manifest.dump(2) << '\n';
  out << manifest.dump() << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------------- train

struct TrainOptions {
  ConfigOptions config;
  std::string resume;
  bool no_dict = false;
};

int Train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  RunConfig c = LoadConfig(o.config);
  if (o.no_dict) c.use_dict = false;
  const fs::path dir = c.output_dir;
  fs::create_directories(dir);

  const Vocabulary vocab = LoadOrBuildVocab(c);
  if (c.data.vocab.empty()) {
    c.data.vocab = (dir / "vocab.txt").string();
    vocab.Save(c.data.vocab);
  }
  SetVocabSize(c, vocab);
  const Corpus train = LoadCorpus(c.data.train, c, vocab);
  FrequencyTable freq;
  if (!c.data.freq.empty()) {
    freq = FrequencyTable::Load(c.data.freq);
    if (freq.size() != vocab.size()) {
      throw DataError("frequency table covers " + std::to_string(freq.size()) +
                      " ids but the vocabulary has " + std::to_string(vocab.size()));
    }
  } else {
    freq = FrequencyTable::Build(train, vocab.size());
    c.data.freq = (dir / "freq.tsv").string();
    freq.Save(c.data.freq);
  }
  c.Validate();

  std::unique_ptr<TrainingSession> session;
  if (!o.resume.empty()) {
    CheckCompatible(ReadCheckpointConfig(o.resume), c);
    session = TrainingSession::Load(o.resume);
  } else {
    session = std::make_unique<TrainingSession>(c, freq);
  }
  const std::string hash = HexDigest(c.Hash());
  c.Save(dir / "config.cfg");

  std::ofstream log(dir / "train_log.jsonl", o.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot write " + (dir / "train_log.jsonl").string());
  StepStats last;
  while (session->step() < c.train.steps) {
    last = session->Step(train);
    const bool final_step = last.step == c.train.steps;
    if (last.step % c.train.log_every == 0 || final_step) {
      json rec = {{"step", last.step},
                  {"loss", last.loss},
                  {"targets", last.targets},
                  {"lr", last.lr},
                  {"dict_updates", last.dict_updates},
                  {"cumulative_dict_updates", session->total_dict_updates()},
                  {"config_hash", hash}};
      log << rec.dump() << '\n';
    }
    if (c.train.checkpoint_every > 0 && last.step % c.train.checkpoint_every == 0 &&
        !final_step) {
      session->Save(dir / ("checkpoint-" + std::to_string(last.step) + ".bin"));
    }
  }
  const fs::path ckpt = dir / "checkpoint.bin";
  session->Save(ckpt);
  if (last.step == 0) err << "train: nothing to do, checkpoint already at step " << session->step()
                          << '\n';
  json summary = {{"command", "train"},
                  {"config_hash", hash},
                  {"steps", session->step()},
                  {"final_loss", last.step ? json(last.loss) : json(nullptr)},
                  {"dictionary", session->dictionary() != nullptr},
                  {"cumulative_dict_updates", session->total_dict_updates()},
                  {"checkpoint", ckpt.string()}};
  out << summary.dump() << '\n';
  return kExitOk;
}

// ------------------------------------------------- shared checkpoint loading

struct CheckpointOptions {
  ConfigOptions config;
  std::string checkpoint;
  std::string data;
  std::string format = "jsonl";
  std::string out;
};

void AddCheckpointOptions(CLI::App* cmd, CheckpointOptions& o) {
  AddConfigOptions(cmd, o.config);
  cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  cmd->add_option("--data", o.data, "Evaluation text (default: data.valid)");
  cmd->add_option("--format", o.format, "Report format: jsonl or tsv");
  cmd->add_option("-o,--out", o.out, "Report file (default: stdout)");
}

struct Loaded {
  RunConfig config;  // requested config, checked against the checkpoint
  std::string hash;  // of the checkpoint's config
  std::unique_ptr<TrainingSession> session;
  Vocabulary vocab;
};

Loaded LoadCheckpoint(const CheckpointOptions& o) {
  Loaded l;
  const RunConfig stored = ReadCheckpointConfig(o.checkpoint);
  l.config = o.config.config_file.empty() ? stored : RunConfig::Load(o.config.config_file);
  l.config.Apply(o.config.overrides);
  if (l.config.model.vocab_size == 0) l.config.model.vocab_size = stored.model.vocab_size;
  CheckCompatible(stored, l.config);
  if (!o.data.empty()) l.config.data.valid = o.data;
  l.hash = HexDigest(stored.Hash());
  l.session = TrainingSession::Load(o.checkpoint);
  if (auto* d = l.session->dictionary()) d->set_mode(DictMode::kFrozen);
  l.vocab = LoadOrBuildVocab(l.config);
  if (static_cast<int>(l.vocab.size()) != l.config.model.vocab_size) {
    throw DataError("vocabulary size " + std::to_string(l.vocab.size()) +
                    " does not match the checkpoint's model.vocab_size " +
                    std::to_string(l.config.model.vocab_size));
  }
  return l;
}

struct Tails {
  TailSet tail1;
  std::optional<TailSet> tail2;
};

// Tail-1 from the checkpoint's training counts; tail-2 needs the training
// text to recount bigrams.
Tails BuildTails(const Loaded& l, const Corpus* train) {
  Tails t;
  t.tail1 = ExtractTail(l.session->frequencies(), l.config.tail_threshold);
  if (train) t.tail2 = ExtractTail(CountNgrams(*train, 2), l.config.tail_threshold);
  return t;
}

json ReportFields(const EvalReport& r) {
  return {{"overall_ppl", r.overall_ppl},   {"overall_count", r.overall_count},
          {"tail1_ppl", Optional(r.tail1_ppl)}, {"tail1_count", r.tail1_count},
          {"tail2_ppl", Optional(r.tail2_ppl)}, {"tail2_count", r.tail2_count}};
}

int Eval(const CheckpointOptions& o, std::ostream& out) {
  auto l = LoadCheckpoint(o);
  const Corpus valid = LoadCorpus(l.config.data.valid, l.config, l.vocab);
  std::optional<Corpus> train;
  if (!l.config.data.train.empty()) train = LoadCorpus(l.config.data.train, l.config, l.vocab);
  auto tails = BuildTails(l, train ? &*train : nullptr);
  auto rep = Perplexity<float>(l.session->model(), l.session->dictionary(), valid, &tails.tail1,
                               tails.tail2 ? &*tails.tail2 : nullptr);
  json rec = {{"command", "eval"},
              {"config_hash", l.hash},
              {"checkpoint", o.checkpoint},
              {"data", l.config.data.valid},
              {"step", l.session->step()},
              {"dictionary", l.session->dictionary() != nullptr},
              {"tail_threshold", l.config.tail_threshold}};
  rec.update(ReportFields(rep));
  Sink sink(o.out, out);
  ReportWriter(o.format, sink.stream()).Write(rec);
  return kExitOk;
}

struct AnalyzeOptions {
  CheckpointOptions ckpt;
  std::size_t batch = 64;
};

int Analyze(const AnalyzeOptions& o, std::ostream& out) {
  auto l = LoadCheckpoint(o.ckpt);
  const auto* dict = l.session->dictionary();
  if (!dict) throw DataError("analyze needs a checkpoint trained with the dictionary");
  const Corpus valid = LoadCorpus(l.config.data.valid, l.config, l.vocab);
  if (valid.empty()) throw DataError("evaluation corpus is empty");
  std::optional<Corpus> train;
  if (!l.config.data.train.empty()) train = LoadCorpus(l.config.data.train, l.config, l.vocab);
  auto tails = BuildTails(l, train ? &*train : nullptr);

  ToyData data{train ? std::span<const Sentence>(*train) : std::span<const Sentence>(), valid,
               &l.session->frequencies(), &tails.tail1, tails.tail2 ? &*tails.tail2 : nullptr};
  auto result = EvaluateRun(*l.session, data, l.config.dict.seed);
  const auto random = RandomBaselineDictionary(*dict);
  const double h_trained = MeanAttentionEntropy<float>(l.session->model(), *dict, valid);
  const double h_random = MeanAttentionEntropy<float>(l.session->model(), random, valid);
  const auto batch = std::span<const Sentence>(valid).first(std::min(o.batch, valid.size()));
  auto attr = ComputeGradientAttribution<float>(l.session->model(), *dict, batch);

  json rec = {{"command", "analyze"},
              {"config_hash", l.hash},
              {"checkpoint", o.ckpt.checkpoint},
              {"data", l.config.data.valid},
              {"vectors_per_slot", dict->vectors_per_slot()},
              {"information_gain", result.information_gain},
              {"entropy_trained", h_trained},
              {"entropy_random", h_random},
              {"memory_grad_total", attr.memory_total},
              {"memory_grad_per_element", attr.memory_per_element},
              {"embedding_grad_total", attr.embedding_total},
              {"embedding_grad_per_element", attr.embedding_per_element},
              {"attribution_sentences", batch.size()}};
  rec.update(ReportFields(result.report));
  Sink sink(o.ckpt.out, out);
  ReportWriter(o.ckpt.format, sink.stream()).Write(rec);
  return kExitOk;
}

// ----------------------------------------------------------------------- sweep

struct SweepOptions {
  ConfigOptions config;
  std::vector<int> slots = {64, 512, 4096};
  std::vector<int> ngram = {2};
  std::vector<int> vectors = {64};
  std::vector<std::string> ratios = {"freq"};
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int jobs = 1;
  std::string shard = "0/1";
  std::string format = "jsonl";
  std::string out;
};

std::pair<std::size_t, std::size_t> ParseShard(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) throw std::invalid_argument(s);
    const auto i = std::stoul(s.substr(0, slash)), n = std::stoul(s.substr(slash + 1));
    if (n == 0 || i >= n) throw std::invalid_argument(s);
    return {i, n};
  } catch (const std::exception&) {
    throw ConfigError("--shard must be i/n with 0 <= i < n, got '" + s + "'");
  }
}

int Sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  RunConfig base = LoadConfig(o.config);
  const auto [shard, shards] = ParseShard(o.shard);
  const Vocabulary vocab = LoadOrBuildVocab(base);
  SetVocabSize(base, vocab);
  const Corpus train = LoadCorpus(base.data.train, base, vocab);
  const Corpus valid = LoadCorpus(base.data.valid, base, vocab);
  const FrequencyTable freq = base.data.freq.empty() ? FrequencyTable::Build(train, vocab.size())
                                                     : FrequencyTable::Load(base.data.freq);
  const TailSet tail1 = ExtractTail(freq, base.tail_threshold);
  const TailSet tail2 = ExtractTail(CountNgrams(train, 2), base.tail_threshold);
  ToyData data{train, valid, &freq, &tail1, &tail2};

  SweepGrid grid{o.slots, o.ngram, o.vectors, o.ratios, {}};
  for (auto s : o.seeds) grid.seeds.push_back(s);
  // Validate every cell up front so a typo fails before hours of training.
  for (const auto& cell : grid.Cells()) ConfigForCell(base, cell, 1).Validate();

  // This process runs every cell whose index is congruent to the shard.
  const auto all = grid.Cells();
  std::vector<SweepCell> mine;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i % shards == shard) mine.push_back(all[i]);
  }

  Sink sink(o.out, out);
  ReportWriter writer(o.format, sink.stream());
  const std::string base_hash = HexDigest(base.Hash());
  bool any_error = false;
  auto emit = [&](const CellResult& r) {
    json runs = json::array();
    for (const auto& s : r.runs) {
      runs.push_back({{"seed", s.seed},
                      {"config_hash", HexDigest(ConfigForCell(base, r.cell, s.seed).Hash())},
                      {"overall_ppl", s.report.overall_ppl},
                      {"tail1_ppl", Optional(s.report.tail1_ppl)},
                      {"tail2_ppl", Optional(s.report.tail2_ppl)},
                      {"information_gain", s.information_gain}});
    }
    json rec = {{"command", "sweep"},
                {"config_hash", base_hash},
                {"cell", r.cell.Label()},
                {"slots", r.cell.slots},
                {"ngram", r.cell.ngram},
                {"vectors", r.cell.vectors},
                {"ratio", r.cell.ratio},
                {"error", r.error ? json(*r.error) : json(nullptr)},
                {"median_overall_ppl", r.error ? json(nullptr) : json(r.median_overall_ppl)},
                {"median_tail1_ppl", Optional(r.median_tail1_ppl)},
                {"median_tail2_ppl", Optional(r.median_tail2_ppl)},
                {"median_information_gain",
                 r.error ? json(nullptr) : json(r.median_information_gain)},
                {"runs", runs}};
    writer.Write(rec);
    sink.stream().flush();
    if (r.error) {
      any_error = true;
      err << "sweep: cell " << r.cell.Label() << " failed: " << *r.error << '\n';
    }
  };
  // RunSweep takes a grid; a shard runs its cells one by one through it.
  SweepGrid sub = grid;
  if (shards == 1) {
    RunSweep(base, grid, data, o.jobs, emit);
  } else {
    for (const auto& cell : mine) {
      sub.slots = {cell.slots};
      sub.ngram = {cell.ngram};
      sub.vectors = {cell.vectors};
      sub.ratios = {cell.ratio};
      RunSweep(base, sub, data, 1, emit);
    }
  }
  return any_error ? kExitData : kExitOk;
}

// ----------------------------------------------------------------------- bench

struct BenchOptions {
  std::string checkpoint;
  int vocab_size = 5000;
  int d_emb = 384;
  int layers = 4;
  int slots = 5000;
  int vectors = 64;
  int sentences = 16;
  int length = 24;
  int reps = 5;
  int warmup = 1;
  std::vector<int> scaling = {16, 64, 128};
  int calls = 20000;
  std::string format = "jsonl";
  std::string out;
};

int Bench(const BenchOptions& o, std::ostream& out) {
  std::unique_ptr<TrainingSession> session;
  RunConfig c;
  if (!o.checkpoint.empty()) {
    session = TrainingSession::Load(o.checkpoint);
    c = session->config();
    if (!session->dictionary()) throw DataError("bench needs a checkpoint with a dictionary");
  } else {
    c.model.vocab_size = o.vocab_size;
    c.model.d_emb = o.d_emb;
    c.model.layers = o.layers;
    c.model.heads = 4;
    c.model.d_ff = 4 * o.d_emb;
    c.model.max_len = std::max(o.length + 1, 2);
    c.model.dropout = 0.0;
    c.dict.slots = o.slots;
    c.dict.vectors_per_slot = o.vectors;
    session = std::make_unique<TrainingSession>(c, FrequencyTable(o.vocab_size));
  }
  auto* dict = session->dictionary();
  dict->set_mode(DictMode::kFrozen);

  Rng rng(DeriveSeed(c.train.seed, 0x62656e6368ULL));
  Corpus corpus;
  const int len = std::min(o.length, c.model.max_len - 1);
  for (int i = 0; i < o.sentences; ++i) {
    Sentence s{Vocabulary::kBos};
    for (int k = 1; k < len; ++k) {
      s.push_back(Vocabulary::kNumReserved +
                  static_cast<TokenId>(rng() % (c.model.vocab_size - Vocabulary::kNumReserved)));
    }
    s.push_back(Vocabulary::kEos);
    corpus.push_back(std::move(s));
  }
  const auto lat = MeasureInferenceLatency(session->model(), *dict, corpus, o.reps, o.warmup);
  const auto scaling = MeasureSelectionScaling(c.model.d_emb, o.scaling, o.calls);
  json points = json::array();
  for (const auto& p : scaling.points) {
    points.push_back({{"vectors", p.vectors}, {"ns_per_call", p.ns_per_call}});
  }
  json rec = {{"command", "bench"},
              {"config_hash", HexDigest(c.Hash())},
              {"d_emb", c.model.d_emb},
              {"layers", c.model.layers},
              {"vocab_size", c.model.vocab_size},
              {"slots", c.dict.slots},
              {"vectors", c.dict.vectors_per_slot},
              {"baseline_median_us_per_token", lat.baseline.median_us},
              {"baseline_p95_us_per_token", lat.baseline.p95_us},
              {"augmented_median_us_per_token", lat.augmented.median_us},
              {"augmented_p95_us_per_token", lat.augmented.p95_us},
              {"overhead", lat.overhead},
              {"unreliable", lat.baseline.unreliable || lat.augmented.unreliable},
              {"selection_points", points},
              {"selection_slope_ns_per_vector", scaling.slope_ns_per_vector},
              {"selection_growth_vs_linear", scaling.growth_vs_linear}};
  Sink sink(o.out, out);
  ReportWriter(o.format, sink.stream()).Write(rec);
  return kExitOk;
}

// --------------------------------------------------------------------- rescore

struct RescoreOptions {
  ConfigOptions config;
  std::string checkpoint;
  std::string nbest;
  std::string mode = "rescore";
  double lambda = 0.0;
  double lambda_ilme = 0.0;
  std::string out;
};

int RescoreCmd(const RescoreOptions& o, std::ostream& out) {
  FusionConfig fc;
  if (o.mode == "rescore") {
    fc.mode = FusionMode::kRescore;
    fc.lambda_res = o.lambda;
  } else if (o.mode == "fusion") {
    fc.mode = FusionMode::kShallowFusion;
    fc.lambda_sf = o.lambda;
  } else {
    throw ConfigError("--mode must be rescore or fusion");
  }
  fc.lambda_ilme = o.lambda_ilme;
  fc.Validate();

  CheckpointOptions co;
  co.config = o.config;
  co.checkpoint = o.checkpoint;
  auto l = LoadCheckpoint(co);
  std::ifstream in(o.nbest);
  if (!in) throw DataError("cannot read N-best file " + o.nbest);
  auto blocks = ReadNbest(in);
  std::vector<std::vector<RankedHypothesis>> ranked;
  for (auto& block : blocks) {
    for (auto& h : block) {
      const auto framed = FrameWords(h.words, l.vocab);
      if (framed.size() > static_cast<std::size_t>(l.config.model.max_len) + 1) {
        throw DataError("hypothesis longer than model.max_len: rank " + std::to_string(h.rank));
      }
      h.lm_score = ScoreSequence<float>(l.session->model(), l.session->dictionary(), framed);
    }
    ranked.push_back(Rescore(block, fc));
  }
  Sink sink(o.out, out);
  sink.stream() << "#config_hash\t" << l.hash << '\n';
  WriteRescored(sink.stream(), ranked);
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"memlm: Transformer LM with an n-gram indexed lookup dictionary", "memlm"};
  app.require_subcommand(1);

  BuildCorpusOptions bc;
  auto* build = app.add_subcommand("build-corpus", "Vocabulary, frequency table and manifest");
  AddConfigOptions(build, bc.config);
  build->add_option("--train", bc.train, "Training text, one sentence per line");
  build->add_option("--valid", bc.valid, "Validation text");
  build->add_option("--mode", bc.mode, "Tokenization: char or whitespace");
  build->add_option("--out-dir", bc.out_dir, "Output directory");
  build->add_option("--generate", bc.generate, "Write a synthetic corpus first: tail or zipf");
  build->add_option("--sentences", bc.sentences, "Synthetic corpus size");
  build->add_option("--seed", bc.seed, "Synthetic corpus seed");

  TrainOptions tr;
  auto* train = app.add_subcommand("train", "Train (or resume) a model");
  AddConfigOptions(train, tr.config);
  train->add_option("--resume", tr.resume, "Continue from this checkpoint");
  train->add_flag("--no-dict", tr.no_dict, "Plain Transformer baseline, same schedule");

  CheckpointOptions ev;
  auto* eval = app.add_subcommand("eval", "Perplexity overall and on tail buckets");
  AddCheckpointOptions(eval, ev);

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Information gain and gradient attribution");
  AddCheckpointOptions(analyze, an.ckpt);
  analyze->add_option("--batch", an.batch, "Sentences used for gradient attribution");

  SweepOptions sw;
  auto* sweep = app.add_subcommand("sweep", "Grid over U, N, M and update ratio");
  AddConfigOptions(sweep, sw.config);
  sweep->add_option("--slots", sw.slots, "Dictionary sizes U")->delimiter(',')->capture_default_str();
  sweep->add_option("--ngram", sw.ngram, "N-gram orders N")->delimiter(',')->capture_default_str();
  sweep->add_option("--vectors", sw.vectors, "Vectors per slot M")->delimiter(',')->capture_default_str();
  sweep->add_option("--ratios", sw.ratios, "Update ratios: freq or a probability")->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", sw.seeds, "Seeds per cell")->delimiter(',');
  sweep->add_option("-j,--jobs", sw.jobs, "Cells trained concurrently (threads)");
  sweep->add_option("--shard", sw.shard, "Run cells i, i+n, ... of the grid: i/n");
  sweep->add_option("--format", sw.format, "Report format: jsonl or tsv");
  sweep->add_option("-o,--out", sw.out, "Report file (default: stdout)");

  BenchOptions be;
  auto* bench = app.add_subcommand("bench", "Per-token latency with and without the dictionary");
  bench->add_option("--checkpoint", be.checkpoint, "Benchmark this model instead");
  bench->add_option("--vocab-size", be.vocab_size);
  bench->add_option("--d-emb", be.d_emb);
  bench->add_option("--layers", be.layers);
  bench->add_option("--slots", be.slots);
  bench->add_option("--vectors", be.vectors);
  bench->add_option("--sentences", be.sentences);
  bench->add_option("--length", be.length, "Tokens per synthetic sentence");
  bench->add_option("--reps", be.reps);
  bench->add_option("--warmup", be.warmup);
  bench->add_option("--scaling", be.scaling, "M values for selection scaling")->delimiter(',');
  bench->add_option("--calls", be.calls, "Selection calls per timing round");
  bench->add_option("--format", be.format, "Report format: jsonl or tsv");
  bench->add_option("-o,--out", be.out, "Report file (default: stdout)");

  RescoreOptions rs;
  auto* rescore = app.add_subcommand("rescore", "Rescore an N-best list with the LM");
  AddConfigOptions(rescore, rs.config);
  rescore->add_option("--checkpoint", rs.checkpoint, "Checkpoint file")->required();
  rescore->add_option("--nbest", rs.nbest, "N-best file")->required();
  rescore->add_option("--mode", rs.mode, "rescore or fusion");
  rescore->add_option("--lambda", rs.lambda, "LM weight");
  rescore->add_option("--lambda-ilme", rs.lambda_ilme, "Internal LM weight (must be 0)");
  rescore->add_option("-o,--out", rs.out, "Output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*build) return BuildCorpus(bc, out);
    if (*train) return Train(tr, out, err);
    if (*eval) return Eval(ev, out);
    if (*analyze) return Analyze(an, out);
    if (*sweep) return Sweep(sw, out, err);
    if (*bench) return Bench(be, out);
    if (*rescore) return RescoreCmd(rs, out);
  } catch (const ConfigError& e) {
    err << "memlm: configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "memlm: numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "memlm: data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ContractViolation& e) {
    err << "memlm: invalid input: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "memlm: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace memlm::cli
