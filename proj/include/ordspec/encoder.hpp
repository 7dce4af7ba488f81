// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ordspec/corpus.hpp"
#include "ordspec/diffcore.hpp"

namespace ordspec {

/// Token -> row index. Row 0 is reserved for unknown tokens.
class Vocabulary {
 public:
  static constexpr int kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);  // tokens[0] must be <unk>

  /// Vocabulary of every token in the corpus occurring at least min_count times,
  /// in order of first appearance.
  static Vocabulary build(const Corpus& corpus, std::size_t min_count = 1);

  int add(const std::string& token);
  int lookup(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct EmbeddingTable {
  Vocabulary vocab;
  diff::Matrix vectors;  // vocab.size() x d; row 0 (unknown) is the mean vector
  int dim() const { return static_cast<int>(vectors.cols()); }
};

/// Reads lines "token v1 ... vd". Duplicate tokens: the last occurrence wins
/// and a warning is appended to `warnings` (and logged).
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::vector<std::string>* warnings = nullptr);

enum class EncoderKind { bigru, bow };
enum class BowInput { term_frequency, mean_embedding };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::bigru;
  int embed_dim = 50;
  int hidden = 64;  // H; the sentence encoding has 2H entries
  std::size_t max_tokens = 128;
  /// Random embeddings are always trained; file-loaded ones only with this flag.
  bool tune_pretrained = false;
  BowInput bow_input = BowInput::term_frequency;
  /// Dropout on the sentence encoding during training.
  double dropout = 0.0;

  int output_dim() const { return 2 * hidden; }
};

std::string to_string(EncoderKind kind);
EncoderKind parse_encoder_kind(const std::string& name);

/// Registers encoder parameters in `params`. When `pretrained` is given it
/// initialises the embedding table (which must be vocab_size x embed_dim).
void init_encoder_params(diff::ParameterStore& params, const EncoderConfig& config,
                         std::size_t vocab_size, std::mt19937_64& rng,
                         const diff::Matrix* pretrained = nullptr);

/// Maps tokens to vocabulary rows, truncating to config.max_tokens.
std::vector<int> token_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                           std::size_t max_tokens, bool* truncated = nullptr);

/// Bidirectional GRU encoding: [forward final state; backward final state].
diff::Var encode_bigru(diff::Tape& tape, std::span<const int> ids, const EncoderConfig& config);
/// Bag-of-words encoding: tanh(W x + b), x = term frequencies or mean embedding.
diff::Var encode_bow(diff::Tape& tape, std::span<const int> ids, const EncoderConfig& config);
diff::Var encode(diff::Tape& tape, std::span<const int> ids, const EncoderConfig& config);

/// Value-level encoding with frozen parameters.
diff::Vector encode_sentence(const std::vector<std::string>& tokens, const Vocabulary& vocab,
                             const diff::ParameterStore& params, const EncoderConfig& config);

}  // namespace ordspec
