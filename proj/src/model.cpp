// SPDX-License-Identifier: Apache-2.0
#include "ordspec/model.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "ordspec/checkpoint.hpp"
#include "ordspec/errors.hpp"

namespace ordspec {

using diff::Matrix;
using diff::Var;
using json = nlohmann::json;

namespace {

constexpr const char* kBasePrefix = "base/";

}  // namespace

Model::Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed, const Matrix* pretrained)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  config_.head.validate();
  if (config_.context_L < 0) throw InvalidArgument("context window must be >= 0");
  std::mt19937_64 rng(seed);
  init_encoder_params(params_, config_.encoder, vocab_.size(), rng, pretrained);
  init_head_params(params_, config_.head, config_.head_input_dim(), rng);
}

Model::Model(ModelConfig config, Vocabulary vocab, diff::ParameterStore params)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(std::move(params)) {}

std::vector<int> Model::ids(const std::vector<std::string>& tokens) const {
  return token_ids(tokens, vocab_, config_.encoder.max_tokens);
}

HeadOutput Model::forward(diff::Tape& tape, std::span<const int> ids, const diff::Vector* context,
                          std::mt19937_64* dropout_rng) {
  if (ids.empty()) throw InvalidArgument("cannot encode an empty sentence");
  Var h = encode(tape, ids, config_.encoder);
  if (dropout_rng && config_.encoder.dropout > 0.0)
    h = diff::dropout(h, diff::dropout_mask(h.rows(), 1, config_.encoder.dropout, *dropout_rng));
  const int cdim = config_.context_dim();
  if (cdim > 0) {
    Matrix c = Matrix::Zero(cdim, 1);
    if (context) {
      if (context->size() != cdim)
        throw ShapeError("context vector has " + std::to_string(context->size()) +
                         " entries, expected " + std::to_string(cdim));
      c.col(0) = *context;
    }
    h = diff::concat({h, tape.constant(std::move(c))});
  }
  return head_forward(tape, h, config_.head);
}

Prediction Model::predict_ids(std::span<const int> ids, const diff::Vector* context) const {
  // Forward only: nothing is written to the store.
  diff::Tape tape(const_cast<diff::ParameterStore*>(&params_));
  auto out = const_cast<Model*>(this)->forward(tape, ids, context);
  return decode(out, config_.head);
}

Prediction Model::predict(const std::vector<std::string>& tokens, const diff::Vector* context) const {
  if (tokens.empty()) throw InvalidArgument("cannot predict an empty sentence");
  return predict_ids(ids(tokens), context);
}

std::string config_to_json(const ModelConfig& c) {
  json j;
  j["encoder"] = {{"kind", to_string(c.encoder.kind)},
                  {"embed_dim", c.encoder.embed_dim},
                  {"hidden", c.encoder.hidden},
                  {"max_tokens", c.encoder.max_tokens},
                  {"tune_pretrained", c.encoder.tune_pretrained},
                  {"bow_input", c.encoder.bow_input == BowInput::term_frequency ? "term_frequency"
                                                                                 : "mean_embedding"},
                  {"dropout", c.encoder.dropout}};
  j["head"] = {{"kind", to_string(c.head.kind)},
               {"K", c.head.K},
               {"alpha", c.head.alpha},
               {"sigma", c.head.sigma},
               {"bins", to_string(c.head.bins)},
               {"feed", c.head.feed == PmfFeed::log_mass ? "log_mass" : "raw_mass"}};
  j["context_L"] = c.context_L;
  return j.dump();
}

namespace {

ModelConfig config_from(const json& j) {
  ModelConfig c;
  const auto& e = j.at("encoder");
  c.encoder.kind = parse_encoder_kind(e.at("kind"));
  c.encoder.embed_dim = e.at("embed_dim");
  c.encoder.hidden = e.at("hidden");
  c.encoder.max_tokens = e.at("max_tokens");
  c.encoder.tune_pretrained = e.at("tune_pretrained");
  c.encoder.bow_input =
      e.at("bow_input") == "term_frequency" ? BowInput::term_frequency : BowInput::mean_embedding;
  c.encoder.dropout = e.at("dropout");
  const auto& h = j.at("head");
  c.head.kind = parse_head_kind(h.at("kind"));
  c.head.K = h.at("K");
  c.head.alpha = h.at("alpha");
  c.head.sigma = h.at("sigma");
  c.head.bins = parse_bin_mode(h.at("bins"));
  c.head.feed = h.at("feed") == "log_mass" ? PmfFeed::log_mass : PmfFeed::raw_mass;
  c.context_L = j.at("context_L");
  return c;
}

json header_of(const TrainedModel& m) {
  json j;
  j["format"] = "ordspec-model";
  j["config"] = json::parse(config_to_json(m.config()));
  j["vocab"] = m.model->vocab().tokens();
  j["seed"] = m.seed;
  j["epochs_run"] = m.epochs_run;
  j["best_epoch"] = m.best_epoch;
  json curve = json::array();
  for (const auto& r : m.curve) {
    curve.push_back({{"epoch", r.epoch},
                     {"train_loss", r.train_loss},
                     {"val_mmae", r.val_mmae},
                     {"val_rho", std::isfinite(r.val_rho) ? json(r.val_rho) : json(nullptr)},
                     {"unlabeled_loss", r.unlabeled_loss}});
  }
  j["curve"] = curve;
  if (m.base) j["base"] = header_of(*m.base);
  return j;
}

TrainedModel model_from(const json& j, const std::vector<std::pair<std::string, Matrix>>& tensors,
                        const std::string& prefix) {
  if (j.value("format", "") != "ordspec-model") throw UserError("not a model checkpoint");
  diff::ParameterStore params;
  for (const auto& [name, value] : tensors) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string rest = name.substr(prefix.size());
    if (rest.rfind(kBasePrefix, 0) == 0) continue;
    params.add(rest, value);
  }
  TrainedModel m;
  m.model = std::make_shared<Model>(config_from(j.at("config")),
                                    Vocabulary(j.at("vocab").get<std::vector<std::string>>()),
                                    std::move(params));
  m.seed = j.at("seed");
  m.epochs_run = j.at("epochs_run");
  m.best_epoch = j.at("best_epoch");
  for (const auto& r : j.at("curve")) {
    EpochRecord e;
    e.epoch = r.at("epoch");
    e.train_loss = r.at("train_loss");
    e.val_mmae = r.at("val_mmae");
    e.val_rho = r.at("val_rho").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                          : r.at("val_rho").get<double>();
    e.unlabeled_loss = r.at("unlabeled_loss");
    m.curve.push_back(e);
  }
  if (j.contains("base"))
    m.base = std::make_shared<TrainedModel>(model_from(j.at("base"), tensors, prefix + kBasePrefix));
  return m;
}

void collect(const TrainedModel& m, const std::string& prefix, diff::ParameterStore& out) {
  const auto& p = m.model->params();
  for (std::size_t i = 0; i < p.size(); ++i)
    out.add(prefix + p.name(diff::ParamId{i}), p.value(diff::ParamId{i}));
  if (m.base) collect(*m.base, prefix + kBasePrefix, out);
}

}  // namespace

ModelConfig config_from_json(const std::string& text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw UserError(std::string("bad model config: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  diff::ParameterStore all;
  collect(model, "", all);
  diff::write_checkpoint(path, header_of(model).dump(), all);
}

TrainedModel load_model(const std::filesystem::path& path) {
  const auto tensors = diff::read_checkpoint(path);
  try {
    return model_from(json::parse(tensors.header), tensors.tensors, "");
  } catch (const json::exception& e) {
    throw UserError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
}

}  // namespace ordspec
