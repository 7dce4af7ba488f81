// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "ordspec/corpus.hpp"
#include "ordspec/encoder.hpp"
#include "ordspec/metrics.hpp"
#include "ordspec/model.hpp"

namespace ordspec {

struct TrainConfig {
  HeadConfig head;
  EncoderConfig encoder;
  int epochs = 30;
  int batch_size = 32;
  double lr = 1e-3;
  int patience = 5;
  /// Context window used by train_with_context.
  int context_L = 2;
  std::uint64_t seed = 0;
  std::size_t min_count = 1;

  void validate() const;
};

/// Optional inputs beyond the corpora.
struct TrainResources {
  /// Pretrained vectors; the vocabulary becomes the table's vocabulary.
  const EmbeddingTable* embeddings = nullptr;
  /// Extra text whose tokens join the vocabulary (labels unused).
  const Corpus* extra_vocab = nullptr;
};

/// Sentence id -> [q(i-L); ...; q(i-1)] from a base model, zero-filled at
/// document starts.
using ContextMap = std::unordered_map<std::string, diff::Vector>;

struct Example {
  std::vector<int> ids;
  int label = 0;
  diff::Vector context;  // empty when the model takes no context
};

std::vector<Example> make_examples(const Model& model, const Corpus& corpus,
                                   const ContextMap* context = nullptr);

/// Called after every labelled mini-batch with the 0-based global batch index;
/// returns a loss to record (semi-supervised updates hook in here).
using BatchHook = std::function<double(Model& model, std::size_t batch)>;

/// Mini-batch training with early stopping on validation MMAE; the returned
/// model holds the best epoch's parameters.
TrainedModel fit(std::shared_ptr<Model> model, const std::vector<Example>& train,
                 const std::vector<Example>& val, const TrainConfig& config,
                 const BatchHook& hook = nullptr);

Vocabulary build_vocabulary(const Corpus& train, const TrainConfig& config,
                            const TrainResources& resources);
/// Fresh, initialised model for the given training data.
std::shared_ptr<Model> make_model(const Corpus& train, const TrainConfig& config,
                                  const TrainResources& resources, int context_L = 0);

TrainedModel train(const Corpus& train, const Corpus& val, const TrainConfig& config,
                   const TrainResources& resources = {});

ContextMap build_context_features(const TrainedModel& base, const Corpus& corpus, int L);

/// Two-stage model: head input is [h; context] with context from the frozen
/// base model evaluated over `context_source` (default: train and val).
TrainedModel train_with_context(const Corpus& train, const Corpus& val,
                                std::shared_ptr<const TrainedModel> base,
                                const TrainConfig& config, const Corpus* context_source = nullptr,
                                const TrainResources& resources = {});

/// Predictions for every sentence of `corpus`. Context models draw context
/// from their base over `context_source` (default: `corpus`).
std::vector<Prediction> predict_corpus(const TrainedModel& model, const Corpus& corpus,
                                       const Corpus* context_source = nullptr);

struct Evaluation {
  double mmae = 0.0;
  double rho = 0.0;  // NaN when undefined
  std::map<int, double> class_mae;
  std::vector<double> values;
};

Evaluation evaluate(const TrainedModel& model, const Corpus& corpus,
                    const Corpus* context_source = nullptr);

/// Picks alpha from `grid` by validation MMAE.
double tune_alpha(const Corpus& train, const Corpus& val, const TrainConfig& config,
                  const std::vector<double>& grid = {0.1, 0.5, 1.0, 2.0},
                  const TrainResources& resources = {});

/// epoch,train_loss,val_mmae,val_rho,unlabeled_loss
void write_training_log(std::ostream& out, const std::vector<EpochRecord>& curve);

}  // namespace ordspec
