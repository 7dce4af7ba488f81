// SPDX-License-Identifier: Apache-2.0
#include "ordspec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "ordspec/errors.hpp"

namespace ordspec {

namespace {

using ordered_json = nlohmann::ordered_json;

void validate(const Sentence& s, std::size_t line_no) {
  if (s.tokens.empty()) throw IntegrityError("sentence '" + s.id + "' has no tokens", line_no);
  if (s.label && (*s.label < 1 || *s.label > kNumClasses))
    throw IntegrityError("label " + std::to_string(*s.label) + " outside 1..7", line_no);
  if (s.policy_theme && (*s.policy_theme < 1 || *s.policy_theme > kNumThemes))
    throw IntegrityError("policy_theme " + std::to_string(*s.policy_theme) + " outside 1..57",
                         line_no);
}

}  // namespace

Corpus::Corpus(std::vector<Sentence> sentences) : sentences_(std::move(sentences)) {
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    const auto& s = sentences_[i];
    validate(s, 0);
    if (!by_position_.emplace(std::make_pair(s.doc_id, s.index_in_doc), i).second)
      throw IntegrityError("duplicate (doc_id, index_in_doc) = (" + s.doc_id + ", " +
                           std::to_string(s.index_in_doc) + ")");
    if (!by_id_.emplace(s.id, i).second) throw IntegrityError("duplicate sentence id " + s.id);
    documents_[s.doc_id].push_back(i);
  }
  for (auto& [doc, members] : documents_) {
    std::sort(members.begin(), members.end(), [this](std::size_t a, std::size_t b) {
      return sentences_[a].index_in_doc < sentences_[b].index_in_doc;
    });
  }
}

std::optional<std::size_t> Corpus::find(const std::string& doc_id, std::size_t index_in_doc) const {
  auto it = by_position_.find({doc_id, index_in_doc});
  if (it == by_position_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Corpus::find_id(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::size_t Corpus::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(sentences_.begin(), sentences_.end(),
                                                [](const Sentence& s) { return s.label.has_value(); }));
}

std::string sentence_to_line(const Sentence& s) {
  ordered_json j;
  j["id"] = s.id;
  j["doc_id"] = s.doc_id;
  j["index_in_doc"] = s.index_in_doc;
  j["tokens"] = s.tokens;
  j["party"] = s.party;
  j["year"] = s.year;
  j["label"] = s.label ? ordered_json(*s.label) : ordered_json(nullptr);
  j["policy_theme"] = s.policy_theme ? ordered_json(*s.policy_theme) : ordered_json(nullptr);
  return j.dump();
}

Sentence sentence_from_line(const std::string& line, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), line_no);
  }
  if (!j.is_object()) throw ParseError("record is not an object", line_no);
  Sentence s;
  try {
    s.id = j.at("id").get<std::string>();
    s.doc_id = j.at("doc_id").get<std::string>();
    const auto& idx = j.at("index_in_doc");
    if (!idx.is_number_integer() || idx.get<long long>() < 0)
      throw ParseError("index_in_doc must be a non-negative integer", line_no);
    s.index_in_doc = idx.get<std::size_t>();
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    s.party = j.at("party").get<std::string>();
    s.year = j.at("year").get<int>();
    if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw ParseError("label must be an integer or null", line_no);
      s.label = it->get<int>();
    }
    if (auto it = j.find("policy_theme"); it != j.end() && !it->is_null()) {
      if (!it->is_number_integer())
        throw ParseError("policy_theme must be an integer or null", line_no);
      s.policy_theme = it->get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad field: ") + e.what(), line_no);
  }
  validate(s, line_no);
  return s;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open corpus file " + path.string());
  std::vector<Sentence> sentences;
  std::map<std::pair<std::string, std::size_t>, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Sentence s = sentence_from_line(line, line_no);
    if (!seen.emplace(std::make_pair(s.doc_id, s.index_in_doc), line_no).second)
      throw IntegrityError("duplicate (doc_id, index_in_doc) = (" + s.doc_id + ", " +
                               std::to_string(s.index_in_doc) + ")",
                           line_no);
    sentences.push_back(std::move(s));
  }
  return Corpus(std::move(sentences));
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write corpus file " + path.string());
  for (const auto& s : corpus.sentences()) out << sentence_to_line(s) << '\n';
}

Split split(const Corpus& corpus, double train_frac, std::uint64_t seed, SplitMode mode) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw InvalidArgument("train_frac must lie strictly between 0 and 1");
  const std::size_t n = corpus.size();
  if (n < 2) throw InvalidArgument("split needs at least 2 sentences");
  std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_frac + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::mt19937_64 rng(seed);
  std::vector<bool> in_train(n, false);
  if (mode == SplitMode::sentence) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  } else {
    std::vector<std::string> docs;
    for (const auto& [doc, _] : corpus.documents()) docs.push_back(doc);
    if (docs.size() < 2) throw InvalidArgument("document split needs at least 2 documents");
    std::shuffle(docs.begin(), docs.end(), rng);
    std::size_t taken = 0;
    for (std::size_t d = 0; d + 1 < docs.size() && taken < n_train; ++d) {
      for (std::size_t i : corpus.documents().at(docs[d])) in_train[i] = true;
      taken += corpus.documents().at(docs[d]).size();
    }
  }
  std::vector<Sentence> train, test;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).push_back(corpus[i]);
  return {Corpus(std::move(train)), Corpus(std::move(test))};
}

ClassHistogram class_histogram(const Corpus& corpus) {
  ClassHistogram h;
  for (const auto& s : corpus.sentences()) {
    if (!s.label) continue;
    ++h.counts[static_cast<std::size_t>(*s.label - 1)];
    ++h.total;
  }
  if (h.total == 0) throw InvalidArgument("corpus has no labeled sentences");
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    h.fractions[k] = static_cast<double>(h.counts[k]) / static_cast<double>(h.total);
  return h;
}

TokenSampler::TokenSampler(std::size_t vocab_size, const SynthOptions& options) : options_(options) {
  if (vocab_size < 2 * kNumClasses + 1) throw InvalidArgument("vocab_size too small");
  // Vocabulary: cue words per class level followed by background words.
  const std::size_t cue_per_level = std::max<std::size_t>(
      1, static_cast<std::size_t>(static_cast<double>(vocab_size) * options.cue_vocab_share) / kNumClasses);
  const std::size_t background = vocab_size - cue_per_level * kNumClasses;
  auto zipf = [](std::size_t count) {
    std::vector<double> w(count);
    for (std::size_t r = 0; r < count; ++r) w[r] = 1.0 / static_cast<double>(r + 1);
    return std::discrete_distribution<std::size_t>(w.begin(), w.end());
  };
  cue_word_ = zipf(cue_per_level);
  background_word_ = zipf(background);
  for (int y = 1; y <= kNumClasses; ++y) {
    std::vector<double> w(kNumClasses);
    for (int j = 1; j <= kNumClasses; ++j) {
      const double d = static_cast<double>(j - y) / options.cue_spread;
      w[static_cast<std::size_t>(j - 1)] = std::exp(-0.5 * d * d);
    }
    cue_level_.emplace_back(w.begin(), w.end());
  }
}

std::vector<std::string> TokenSampler::sample(int y, std::mt19937_64& rng) const {
  if (y < 1 || y > kNumClasses) throw InvalidArgument("class outside 1..7");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> length(options_.mean_length[static_cast<std::size_t>(y - 1)],
                                          options_.length_sd);
  const auto len = static_cast<std::size_t>(std::clamp(std::lround(length(rng)), 3L, 127L));
  std::vector<std::string> tokens;
  tokens.reserve(len);
  auto& level = cue_level_[static_cast<std::size_t>(y - 1)];
  for (std::size_t t = 0; t < len; ++t) {
    if (unit(rng) < options_.cue_rate) {
      const int lv = level(rng) + 1;
      tokens.push_back("c" + std::to_string(lv) + "_" + std::to_string(cue_word_(rng)));
    } else {
      tokens.push_back("w" + std::to_string(background_word_(rng)));
    }
  }
  return tokens;
}

Corpus synth_corpus(std::uint64_t seed, std::size_t n,
                    const std::array<double, kNumClasses>& class_probs, std::size_t vocab_size,
                    const SynthOptions& options) {
  double total = 0.0;
  for (double p : class_probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("class probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-3) throw InvalidArgument("class probabilities must sum to 1");
  if (n < static_cast<std::size_t>(kNumClasses)) throw InvalidArgument("synth_corpus needs n >= 7");
  if (vocab_size < 2 * kNumClasses + 1) throw InvalidArgument("vocab_size too small");
  if (options.doc_size == 0) throw InvalidArgument("doc_size must be positive");

  std::mt19937_64 rng(seed);

  // Labels: i.i.d. draws, then reordered so that runs of equal classes are
  // more likely than chance.
  std::discrete_distribution<int> draw_class(class_probs.begin(), class_probs.end());
  std::array<std::size_t, kNumClasses> pool{};
  for (std::size_t i = 0; i < n; ++i) ++pool[static_cast<std::size_t>(draw_class(rng))];

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> labels;
  labels.reserve(n);
  int prev = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % options.doc_size == 0) prev = -1;
    int cls;
    if (prev >= 0 && pool[static_cast<std::size_t>(prev)] > 0 && unit(rng) < options.stickiness) {
      cls = prev;
    } else {
      std::discrete_distribution<int> remaining(pool.begin(), pool.end());
      cls = remaining(rng);
    }
    --pool[static_cast<std::size_t>(cls)];
    labels.push_back(cls + 1);
    prev = cls;
  }

  const TokenSampler sampler(vocab_size, options);

  static const std::array<const char*, 2> kParties = {"labor", "liberal"};
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    const std::size_t doc = i / options.doc_size;
    Sentence s;
    s.id = options.id_prefix + std::to_string(i);
    s.doc_id = options.id_prefix + "doc" + std::to_string(doc);
    s.index_in_doc = i % options.doc_size;
    s.party = kParties[doc % kParties.size()];
    s.year = 1980 + 3 * static_cast<int>(doc / kParties.size());
    if (options.labeled) s.label = y;

    s.tokens = sampler.sample(y, rng);
    out.push_back(std::move(s));
  }
  return Corpus(std::move(out));
}

Corpus strip_labels(const Corpus& corpus) {
  std::vector<Sentence> out = corpus.sentences();
  for (auto& s : out) s.label.reset();
  return Corpus(std::move(out));
}

Corpus labeled_only(const Corpus& corpus) {
  std::vector<Sentence> out;
  for (const auto& s : corpus.sentences())
    if (s.label) out.push_back(s);
  return Corpus(std::move(out));
}

Corpus concat(const Corpus& a, const Corpus& b) {
  std::vector<Sentence> out = a.sentences();
  out.insert(out.end(), b.sentences().begin(), b.sentences().end());
  return Corpus(std::move(out));
}

Corpus sample(const Corpus& corpus, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(count, order.size()));
  std::sort(order.begin(), order.end());
  std::vector<Sentence> out;
  for (std::size_t i : order) out.push_back(corpus[i]);
  return Corpus(std::move(out));
}

}  // namespace ordspec
