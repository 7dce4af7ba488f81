// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ordspec/corpus.hpp"
#include "ordspec/diffcore.hpp"
#include "ordspec/encoder.hpp"
#include "ordspec/heads.hpp"

namespace ordspec {

struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;
  /// Number of preceding sentences whose base-model distributions feed the head.
  int context_L = 0;

  int context_dim() const { return context_L * head.K; }
  int head_input_dim() const { return encoder.output_dim() + context_dim(); }
};

/// Encoder plus head with its vocabulary and parameters.
class Model {
 public:
  Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed,
        const diff::Matrix* pretrained = nullptr);
  /// Rebuilds a model around existing parameter values (used when loading).
  Model(ModelConfig config, Vocabulary vocab, diff::ParameterStore params);

  const ModelConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  diff::ParameterStore& params() noexcept { return params_; }
  const diff::ParameterStore& params() const noexcept { return params_; }

  std::vector<int> ids(const std::vector<std::string>& tokens) const;

  /// Graph for one sentence. `context` must have context_dim() entries (or be
  /// null, meaning zeros). With `dropout_rng` set, encoder dropout is applied.
  HeadOutput forward(diff::Tape& tape, std::span<const int> ids, const diff::Vector* context,
                     std::mt19937_64* dropout_rng = nullptr);

  /// Inference with frozen parameters.
  Prediction predict(const std::vector<std::string>& tokens,
                     const diff::Vector* context = nullptr) const;
  Prediction predict_ids(std::span<const int> ids, const diff::Vector* context = nullptr) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  diff::ParameterStore params_;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mmae = 0.0;
  double val_rho = 0.0;  // NaN when undefined
  double unlabeled_loss = 0.0;
};

/// A model plus how it was trained. Context models carry their frozen base.
struct TrainedModel {
  std::shared_ptr<Model> model;
  std::shared_ptr<const TrainedModel> base;
  std::uint64_t seed = 0;
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<EpochRecord> curve;

  const ModelConfig& config() const { return model->config(); }
};

std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const std::string& text);

/// One checkpoint file; a context model embeds its base under the "base/" prefix.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace ordspec
