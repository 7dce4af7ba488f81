// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ordspec {

inline constexpr int kNumClasses = 7;
inline constexpr int kNumThemes = 57;

struct Sentence {
  std::string id;
  std::string doc_id;
  std::size_t index_in_doc = 0;
  std::vector<std::string> tokens;
  std::string party;
  int year = 0;
  std::optional<int> label;         // 1..7
  std::optional<int> policy_theme;  // 1..57

  bool operator==(const Sentence&) const = default;
};

/// Immutable collection of sentences plus a per-document index ordered by
/// index_in_doc. Construction validates all invariants.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Sentence> sentences);

  const std::vector<Sentence>& sentences() const noexcept { return sentences_; }
  std::size_t size() const noexcept { return sentences_.size(); }
  bool empty() const noexcept { return sentences_.empty(); }
  const Sentence& operator[](std::size_t i) const { return sentences_[i]; }

  /// doc_id -> sentence positions, ascending index_in_doc.
  const std::map<std::string, std::vector<std::size_t>>& documents() const noexcept {
    return documents_;
  }

  /// Position of the sentence at (doc_id, index_in_doc), if present.
  std::optional<std::size_t> find(const std::string& doc_id, std::size_t index_in_doc) const;
  std::optional<std::size_t> find_id(const std::string& id) const;

  std::size_t labeled_count() const;

  bool operator==(const Corpus& other) const { return sentences_ == other.sentences_; }

 private:
  std::vector<Sentence> sentences_;
  std::map<std::string, std::vector<std::size_t>> documents_;
  std::map<std::pair<std::string, std::size_t>, std::size_t> by_position_;
  std::map<std::string, std::size_t> by_id_;
};

Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// One record per line; exposed for streaming callers and tests.
std::string sentence_to_line(const Sentence& s);
Sentence sentence_from_line(const std::string& line, std::size_t line_no);

enum class SplitMode { sentence, document };

struct Split {
  Corpus train;
  Corpus test;
};

/// Uniform random partition. In sentence mode the train part has exactly
/// floor(n * train_frac) sentences (clamped to [1, n-1]); document mode
/// assigns whole documents and approximates that size.
Split split(const Corpus& corpus, double train_frac, std::uint64_t seed,
            SplitMode mode = SplitMode::sentence);

struct ClassHistogram {
  std::array<std::size_t, kNumClasses> counts{};
  std::array<double, kNumClasses> fractions{};
  std::size_t total = 0;
};

ClassHistogram class_histogram(const Corpus& corpus);

/// Class marginals of the released annotated corpus.
inline constexpr std::array<double, kNumClasses> kDefaultClassProbs = {
    0.6700, 0.0347, 0.0780, 0.0246, 0.0388, 0.0739, 0.0799};
/// Average sentence length (tokens) per class in the released corpus.
inline constexpr std::array<double, kNumClasses> kDefaultClassLengths = {
    19.5, 22.0, 23.4, 24.6, 24.8, 25.2, 28.5};

struct SynthOptions {
  std::array<double, kNumClasses> mean_length = kDefaultClassLengths;
  double length_sd = 6.0;
  /// Probability that a token is a class cue rather than background text.
  double cue_rate = 0.15;
  /// Spread (in classes) of the cue level around the true class.
  double cue_spread = 0.9;
  /// Share of the vocabulary reserved for cue words.
  double cue_vocab_share = 0.35;
  /// Probability that a sentence repeats the previous sentence's class.
  /// Labels are drawn i.i.d. first and only their order is changed, so the
  /// marginals are unaffected.
  double stickiness = 0.5;
  std::size_t doc_size = 120;
  bool labeled = true;
  std::string id_prefix = "s";
};

/// Draws synthetic sentence tokens for a class: a Normal length and a mix of
/// Zipfian background words and cue words whose level clusters around the class.
class TokenSampler {
 public:
  TokenSampler(std::size_t vocab_size, const SynthOptions& options);
  std::vector<std::string> sample(int label, std::mt19937_64& rng) const;

 private:
  SynthOptions options_;
  mutable std::discrete_distribution<std::size_t> cue_word_;
  mutable std::discrete_distribution<std::size_t> background_word_;
  mutable std::vector<std::discrete_distribution<int>> cue_level_;
};

Corpus synth_corpus(std::uint64_t seed, std::size_t n,
                    const std::array<double, kNumClasses>& class_probs = kDefaultClassProbs,
                    std::size_t vocab_size = 2000, const SynthOptions& options = {});

Corpus strip_labels(const Corpus& corpus);
Corpus labeled_only(const Corpus& corpus);
Corpus concat(const Corpus& a, const Corpus& b);
/// First `count` sentences in a seeded random order.
Corpus sample(const Corpus& corpus, std::size_t count, std::uint64_t seed);

}  // namespace ordspec
