// SPDX-License-Identifier: Apache-2.0
#include "ordspec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ordspec/errors.hpp"

namespace ordspec {

using diff::Vector;

namespace {

constexpr std::uint64_t kShuffleStream = 0x5bd1e995ULL;
constexpr std::uint64_t kDropoutStream = 0x27d4eb2fULL;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

std::pair<double, double> validate_examples(const Model& model, const std::vector<Example>& val) {
  std::vector<double> preds;
  std::vector<int> golds;
  preds.reserve(val.size());
  for (const auto& e : val) {
    preds.push_back(model.predict_ids(e.ids, e.context.size() ? &e.context : nullptr).value);
    golds.push_back(e.label);
  }
  double rho = nan();
  try {
    std::vector<double> g(golds.begin(), golds.end());
    rho = spearman(preds, g);
  } catch (const InvalidArgument&) {
  }
  return {mmae(preds, golds), rho};
}

}  // namespace

void TrainConfig::validate() const {
  head.validate();
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (patience < 1) throw InvalidArgument("patience must be >= 1");
  if (context_L < 0) throw InvalidArgument("context window must be >= 0");
  if (encoder.dropout < 0.0 || encoder.dropout >= 1.0)
    throw InvalidArgument("dropout must lie in [0,1)");
}

std::vector<Example> make_examples(const Model& model, const Corpus& corpus,
                                   const ContextMap* context) {
  std::vector<Example> out;
  out.reserve(corpus.size());
  const int cdim = model.config().context_dim();
  for (const auto& s : corpus.sentences()) {
    if (!s.label) continue;
    if (s.tokens.empty()) throw InvalidArgument("sentence " + s.id + " has no tokens");
    Example e{model.ids(s.tokens), *s.label, Vector()};
    if (cdim > 0) {
      if (!context) throw InvalidArgument("context model needs context features");
      auto it = context->find(s.id);
      if (it == context->end()) throw InvalidArgument("no context features for sentence " + s.id);
      e.context = it->second;
    }
    out.push_back(std::move(e));
  }
  return out;
}

TrainedModel fit(std::shared_ptr<Model> model, const std::vector<Example>& train,
                 const std::vector<Example>& val, const TrainConfig& config,
                 const BatchHook& hook) {
  config.validate();
  if (train.empty()) throw InvalidArgument("no labelled training sentences");
  if (val.empty()) throw InvalidArgument("validation set is empty");
  auto& params = model->params();
  const HeadConfig& head = model->config().head;
  std::mt19937_64 shuffle_rng(config.seed ^ kShuffleStream);
  std::mt19937_64 dropout_rng(config.seed ^ kDropoutStream);
  const diff::AdamConfig adam{config.lr};

  TrainedModel result;
  result.model = model;
  result.seed = config.seed;
  diff::ParameterStore best = params;
  double best_mmae = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::size_t batch_index = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0, hook_sum = 0.0;
    std::size_t hook_calls = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      params.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const Example& e = train[order[i]];
        diff::Tape tape(&params);
        auto out = model->forward(tape, e.ids, e.context.size() ? &e.context : nullptr, &dropout_rng);
        auto loss = head_loss(out, e.label, head);
        const double lv = loss.scalar();
        if (!std::isfinite(lv))
          throw DivergenceError(fmt::format("non-finite loss at epoch {} (sentence {} of batch {})",
                                            epoch, i - start, batch_index));
        loss_sum += lv;
        tape.backward(loss);
      }
      params.scale_grad(1.0 / static_cast<double>(end - start));
      diff::adam_step(params, adam);
      if (hook) {
        hook_sum += hook(*model, batch_index);
        ++hook_calls;
      }
      ++batch_index;
    }
    const auto [val_mmae, val_rho] = validate_examples(*model, val);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()), val_mmae, val_rho,
                    hook_calls ? hook_sum / static_cast<double>(hook_calls) : 0.0};
    result.curve.push_back(rec);
    spdlog::debug("epoch {} loss {:.4f} val mmae {:.4f} rho {:.4f}", epoch, rec.train_loss, val_mmae,
                  val_rho);
    result.epochs_run = epoch;
    if (val_mmae < best_mmae) {
      best_mmae = val_mmae;
      best.copy_values_from(params);
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  params.copy_values_from(best);
  return result;
}

Vocabulary build_vocabulary(const Corpus& train, const TrainConfig& config,
                            const TrainResources& resources) {
  if (resources.embeddings) return resources.embeddings->vocab;
  if (!resources.extra_vocab) return Vocabulary::build(train, config.min_count);
  // Token lists only: the two corpora may reuse document ids.
  std::vector<Sentence> text;
  text.reserve(train.size() + resources.extra_vocab->size());
  for (const Corpus* c : {&train, resources.extra_vocab})
    for (const auto& s : c->sentences()) {
      Sentence t;
      t.id = std::to_string(text.size());
      t.doc_id = t.id;
      t.tokens = s.tokens;
      text.push_back(std::move(t));
    }
  return Vocabulary::build(Corpus(std::move(text)), config.min_count);
}

std::shared_ptr<Model> make_model(const Corpus& train, const TrainConfig& config,
                                  const TrainResources& resources, int context_L) {
  ModelConfig mc{config.encoder, config.head, context_L};
  const diff::Matrix* pretrained = nullptr;
  if (resources.embeddings) {
    mc.encoder.embed_dim = resources.embeddings->dim();
    pretrained = &resources.embeddings->vectors;
  }
  return std::make_shared<Model>(mc, build_vocabulary(train, config, resources), config.seed,
                                 pretrained);
}

TrainedModel train(const Corpus& train, const Corpus& val, const TrainConfig& config,
                   const TrainResources& resources) {
  config.validate();
  auto model = make_model(train, config, resources);
  return fit(model, make_examples(*model, train), make_examples(*model, val), config);
}

ContextMap build_context_features(const TrainedModel& base, const Corpus& corpus, int L) {
  if (L < 0) throw InvalidArgument("context window must be >= 0");
  const Model& m = *base.model;
  if (!emits_distribution(m.config().head.kind))
    throw InvalidArgument("context features need a distributional base model");
  const int K = m.config().head.K;
  ContextMap out;
  for (const auto& [doc, positions] : corpus.documents()) {
    std::vector<Vector> q(positions.size());
    if (L > 0) {
      for (std::size_t j = 0; j < positions.size(); ++j) {
        const Sentence& s = corpus[positions[j]];
        q[j] = s.tokens.empty() ? Vector::Zero(K) : *m.predict(s.tokens).q;
      }
    }
    for (std::size_t j = 0; j < positions.size(); ++j) {
      const Sentence& s = corpus[positions[j]];
      Vector c = Vector::Zero(static_cast<Eigen::Index>(L) * K);
      for (int back = 1; back <= L; ++back) {
        if (s.index_in_doc < static_cast<std::size_t>(back)) continue;
        auto prev = corpus.find(doc, s.index_in_doc - back);
        if (!prev) continue;
        const auto pj = std::find(positions.begin(), positions.end(), *prev) - positions.begin();
        c.segment(static_cast<Eigen::Index>(L - back) * K, K) = q[pj];
      }
      out.emplace(s.id, std::move(c));
    }
  }
  return out;
}

TrainedModel train_with_context(const Corpus& train, const Corpus& val,
                                std::shared_ptr<const TrainedModel> base,
                                const TrainConfig& config, const Corpus* context_source,
                                const TrainResources& resources) {
  config.validate();
  if (!base) throw InvalidArgument("context training needs a base model");
  if (config.context_L < 1) throw InvalidArgument("context window must be >= 1");
  if (base->config().head.K != config.head.K)
    throw InvalidArgument("base model and context model disagree on K");
  const Corpus merged = context_source ? Corpus() : concat(train, val);
  const Corpus& source = context_source ? *context_source : merged;
  const ContextMap ctx = build_context_features(*base, source, config.context_L);
  auto model = make_model(train, config, resources, config.context_L);
  auto result = fit(model, make_examples(*model, train, &ctx), make_examples(*model, val, &ctx), config);
  result.base = std::move(base);
  return result;
}

std::vector<Prediction> predict_corpus(const TrainedModel& model, const Corpus& corpus,
                                       const Corpus* context_source) {
  const Model& m = *model.model;
  const int L = m.config().context_L;
  ContextMap ctx;
  if (L > 0) {
    if (!model.base) throw InvalidArgument("context model checkpoint has no base model");
    ctx = build_context_features(*model.base, context_source ? *context_source : corpus, L);
  }
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.sentences()) {
    const Vector* c = nullptr;
    if (L > 0) {
      auto it = ctx.find(s.id);
      if (it == ctx.end()) throw InvalidArgument("sentence " + s.id + " missing from context source");
      c = &it->second;
    }
    out.push_back(m.predict(s.tokens, c));
  }
  return out;
}

Evaluation evaluate(const TrainedModel& model, const Corpus& corpus, const Corpus* context_source) {
  const auto golds = gold_labels(corpus);
  Evaluation ev;
  for (const auto& p : predict_corpus(model, corpus, context_source)) ev.values.push_back(p.value);
  const auto row = make_eval_row("", "", ev.values, golds);
  ev.mmae = row.mmae;
  ev.rho = row.rho;
  ev.class_mae = row.class_mae;
  return ev;
}

double tune_alpha(const Corpus& train, const Corpus& val, const TrainConfig& config,
                  const std::vector<double>& grid, const TrainResources& resources) {
  if (grid.empty()) throw InvalidArgument("empty alpha grid");
  double best_alpha = grid.front(), best = std::numeric_limits<double>::infinity();
  for (double a : grid) {
    TrainConfig c = config;
    c.head.alpha = a;
    const double m = evaluate(ordspec::train(train, val, c, resources), val).mmae;
    spdlog::info("alpha {} -> validation mmae {:.4f}", a, m);
    if (m < best) {
      best = m;
      best_alpha = a;
    }
  }
  return best_alpha;
}

void write_training_log(std::ostream& out, const std::vector<EpochRecord>& curve) {
  out << "epoch,train_loss,val_mmae,val_rho,unlabeled_loss\n";
  for (const auto& r : curve) {
    out << r.epoch << ',' << fmt::format("{:.6f}", r.train_loss) << ','
        << fmt::format("{:.6f}", r.val_mmae) << ','
        << (std::isfinite(r.val_rho) ? fmt::format("{:.6f}", r.val_rho) : std::string()) << ','
        << fmt::format("{:.6f}", r.unlabeled_loss) << '\n';
  }
}

}  // namespace ordspec
