// SPDX-License-Identifier: Apache-2.0
#include "ordspec/encoder.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ordspec/errors.hpp"

namespace ordspec {

using diff::Matrix;
using diff::Var;

Vocabulary::Vocabulary() { add(kUnknownToken); }

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  if (tokens.empty() || tokens.front() != kUnknownToken)
    throw InvalidArgument("vocabulary must start with the unknown token");
  for (const auto& t : tokens) {
    if (index_.count(t)) throw InvalidArgument("duplicate vocabulary token " + t);
    add(t);
  }
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t min_count) {
  std::unordered_map<std::string, std::size_t> counts;
  std::vector<std::string> order;
  for (const auto& s : corpus.sentences()) {
    for (const auto& tok : s.tokens) {
      if (counts[tok]++ == 0) order.push_back(tok);
    }
  }
  Vocabulary v;
  for (const auto& tok : order)
    if (counts[tok] >= min_count && tok != kUnknownToken) v.add(tok);
  return v;
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open embeddings file " + path.string());
  std::vector<std::string> names;
  std::map<std::string, std::size_t> row_of;
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream is(line);
    std::string token;
    if (!(is >> token)) continue;
    std::vector<double> vec;
    std::string field;
    while (is >> field) {
      try {
        std::size_t used = 0;
        vec.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError("non-numeric embedding value '" + field + "'", line_no);
      }
    }
    if (vec.empty()) throw ParseError("token '" + token + "' has no vector", line_no);
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim)
      throw ParseError("inconsistent dimension " + std::to_string(vec.size()) + " (expected " +
                           std::to_string(dim) + ")",
                       line_no);
    if (auto it = row_of.find(token); it != row_of.end()) {
      const std::string msg = "duplicate embedding for '" + token + "' at line " +
                              std::to_string(line_no) + "; keeping the last occurrence";
      spdlog::warn(msg);
      if (warnings) warnings->push_back(msg);
      rows[it->second] = std::move(vec);
      continue;
    }
    row_of[token] = rows.size();
    names.push_back(token);
    rows.push_back(std::move(vec));
  }
  if (rows.empty()) throw UserError("embeddings file " + path.string() + " is empty");

  EmbeddingTable table;
  table.vectors = Matrix::Zero(static_cast<Eigen::Index>(rows.size() + 1), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int idx = table.vocab.add(names[i]);
    for (std::size_t k = 0; k < dim; ++k)
      table.vectors(idx, static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  table.vectors.row(Vocabulary::kUnknown) =
      table.vectors.bottomRows(static_cast<Eigen::Index>(rows.size())).colwise().mean();
  return table;
}

std::string to_string(EncoderKind kind) { return kind == EncoderKind::bigru ? "bigru" : "bow"; }

EncoderKind parse_encoder_kind(const std::string& name) {
  if (name == "bigru") return EncoderKind::bigru;
  if (name == "bow") return EncoderKind::bow;
  throw InvalidArgument("unknown encoder kind " + name);
}

void init_encoder_params(diff::ParameterStore& params, const EncoderConfig& config,
                         std::size_t vocab_size, std::mt19937_64& rng, const Matrix* pretrained) {
  if (config.hidden < 1 || config.embed_dim < 1) throw InvalidArgument("encoder sizes must be >= 1");
  const auto V = static_cast<Eigen::Index>(vocab_size);
  const Eigen::Index H = config.hidden, d = config.embed_dim;
  const bool needs_embedding =
      config.kind == EncoderKind::bigru || config.bow_input == BowInput::mean_embedding;
  if (needs_embedding) {
    Matrix table;
    bool trainable = true;
    if (pretrained) {
      if (pretrained->rows() != V || pretrained->cols() != d)
        throw ShapeError("pretrained embeddings must be vocab_size x embed_dim");
      table = *pretrained;
      trainable = config.tune_pretrained;
    } else {
      table = diff::uniform(V, d, 0.1, rng);
    }
    params.add("embedding", std::move(table), trainable);
  }
  if (config.kind == EncoderKind::bigru) {
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string prefix = std::string("gru.") + dir + ".";
      params.add(prefix + "W", diff::xavier_uniform(3 * H, d, rng));
      params.add(prefix + "U", diff::xavier_uniform(3 * H, H, rng));
      params.add(prefix + "b", Matrix::Zero(3 * H, 1));
    }
  } else {
    if (config.bow_input == BowInput::term_frequency) {
      // Stored transposed (one row per token) so the product is a row gather.
      params.add("bow.W", diff::xavier_uniform(V, 2 * H, rng));
    } else {
      params.add("bow.W", diff::xavier_uniform(2 * H, d, rng));
    }
    params.add("bow.b", Matrix::Zero(2 * H, 1));
  }
}

std::vector<int> token_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                           std::size_t max_tokens, bool* truncated) {
  const std::size_t n = std::min(tokens.size(), max_tokens);
  if (truncated) *truncated = tokens.size() > max_tokens;
  if (tokens.size() > max_tokens)
    spdlog::debug("truncating sentence of {} tokens to {}", tokens.size(), max_tokens);
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.lookup(tokens[i]);
  return ids;
}

Var encode_bigru(diff::Tape& tape, std::span<const int> ids, const EncoderConfig&) {
  if (ids.empty()) throw InvalidArgument("encode_bigru: empty token list");
  auto& store = tape.store();
  Var x = diff::embedding_lookup(tape, store.id("embedding"), ids);
  Var fwd = diff::gru_sequence(x, tape.param("gru.fwd.W"), tape.param("gru.fwd.U"),
                               tape.param("gru.fwd.b"), false);
  Var bwd = diff::gru_sequence(x, tape.param("gru.bwd.W"), tape.param("gru.bwd.U"),
                               tape.param("gru.bwd.b"), true);
  return diff::concat({fwd, bwd});
}

Var encode_bow(diff::Tape& tape, std::span<const int> ids, const EncoderConfig& config) {
  if (ids.empty()) throw InvalidArgument("encode_bow: empty token list");
  auto& store = tape.store();
  Var pre;
  if (config.bow_input == BowInput::term_frequency) {
    const std::vector<double> ones(ids.size(), 1.0);
    pre = diff::embedding_bag(tape, store.id("bow.W"), ids, ones);
  } else {
    const std::vector<double> mean(ids.size(), 1.0 / static_cast<double>(ids.size()));
    Var avg = diff::embedding_bag(tape, store.id("embedding"), ids, mean);
    pre = diff::matmul(tape.param("bow.W"), avg);
  }
  return diff::tanh(diff::add(pre, tape.param("bow.b")));
}

Var encode(diff::Tape& tape, std::span<const int> ids, const EncoderConfig& config) {
  return config.kind == EncoderKind::bigru ? encode_bigru(tape, ids, config)
                                           : encode_bow(tape, ids, config);
}

diff::Vector encode_sentence(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                             const diff::ParameterStore& params, const EncoderConfig& config) {
  if (tokens.empty()) throw InvalidArgument("cannot encode an empty sentence");
  // Forward only: the tape never runs backward, so the store is not written.
  diff::Tape tape(const_cast<diff::ParameterStore*>(&params));
  const auto ids = token_ids(tokens, vocab, config.max_tokens);
  return encode(tape, ids, config).value().col(0);
}

}  // namespace ordspec
