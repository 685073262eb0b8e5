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

#include "memlm/trainer.h"

#include <algorithm>
#include <cmath>

#include "memlm/network.h"

namespace memlm {

void OptimizerConfig::Validate() const {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0,1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (warmup_steps < 0) throw ConfigError("optimizer warmup_steps must be >= 0");
}

double OptimizerConfig::LearningRate(std::int64_t step) const {
  if (step < 1) step = 1;
  if (warmup_steps == 0) return lr;
  const double s = static_cast<double>(step), w = static_cast<double>(warmup_steps);
  return lr * std::min(s / w, std::sqrt(w / s));
}

template <Real T>
Adam<T>::Adam(const OptimizerConfig& config, std::span<const Parameter<T>> params)
    : config_(config) {
  config_.Validate();
  for (const auto& p : params) {
    m_.emplace_back(p.size(), T(0));
    v_.emplace_back(p.size(), T(0));
  }
}

template <Real T>
double Adam<T>::Step(std::span<Parameter<T>> params) {
  ++step_;
  const double lr = config_.LearningRate(step_);
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const T step_size = static_cast<T>(lr / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  const T eps = static_cast<T>(config_.eps);
  const T decay = static_cast<T>(lr * config_.weight_decay);
  const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& value = params[p].value;
    const auto& grad = params[p].grad;
    auto& m = m_[p];
    auto& v = v_[p];
    const bool apply_decay = params[p].decay;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad[i];
      m[i] = tb1 * m[i] + (T(1) - tb1) * g;
      v[i] = tb2 * v[i] + (T(1) - tb2) * g * g;
      T update = step_size * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
      if (apply_decay) update += decay * value[i];
      value[i] -= update;
    }
  }
  return lr;
}

template <Real T>
Trainer<T>::Trainer(TransformerLM<T>& model, LookupDictionary<T>* dict,
                    const FrequencyTable& freq, const OptimizerConfig& config,
                    std::uint64_t dropout_seed)
    : model_(model),
      dict_(dict),
      freq_(freq),
      adam_(config, model.parameters()),
      dropout_rng_(DeriveSeed(dropout_seed, 0x64726f70ULL)) {}

template <Real T>
StepStats Trainer<T>::TrainStep(std::span<const Sentence> batch) {
  std::size_t targets = 0;
  for (const auto& row : batch) targets += TrimPadding(row).size() - 1;
  if (targets == 0) throw ContractViolation("empty batch");

  // Dropout draws are committed only if the step succeeds.
  Rng dropout = dropout_rng_;
  model_.ZeroGrad();
  SentenceOptions opts;
  opts.dropout_rng = model_.config().dropout > 0.0 ? &dropout : nullptr;
  opts.loss_scale = 1.0 / static_cast<double>(targets);
  double nll = 0.0;
  for (const auto& row : batch) nll += AccumulateGradients<T>(model_, dict_, row, opts).nll;

  StepStats stats;
  stats.loss = nll / static_cast<double>(targets);
  stats.targets = targets;
  if (!std::isfinite(stats.loss)) {
    throw NumericError("non-finite loss at step " + std::to_string(adam_.step() + 1));
  }
  dropout_rng_ = dropout;
  stats.lr = adam_.Step(model_.parameters());
  stats.step = adam_.step();
  if (dict_) {
    stats.dict_updates = dict_->UpdateBatch(batch, model_.embedding().value, freq_);
  }
  return stats;
}

template class Adam<float>;
template class Adam<double>;
template class Trainer<float>;
template class Trainer<double>;

}  // namespace memlm
