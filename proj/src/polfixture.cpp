// SPDX-License-Identifier: Apache-2.0
#include "ordspec/polfixture.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "ordspec/errors.hpp"

namespace ordspec::pol {

namespace {

constexpr int kSocialLeft[] = {3, 8, 12, 18, 25, 31, 36};
constexpr int kSocialRight[] = {5, 9, 14, 21, 27, 33};
constexpr int kEconomicLeft[] = {2, 11, 19, 24, 41, 47};
constexpr int kEconomicRight[] = {6, 15, 22, 28, 39, 44, 50};

/// Themes driving each salience area (same order as kSalienceAreas).
constexpr int kAreaThemes[5][4] = {
    {4, 12, 15, 40}, {7, 18, 22, 45}, {10, 25, 28, 52}, {6, 19, 30, 55}, {2, 39, 44, 57}};

double side_of(IdeologyCategory c) {
  switch (c) {
    case IdeologyCategory::social_right:
    case IdeologyCategory::economic_right: return 1.0;
    case IdeologyCategory::social_left:
    case IdeologyCategory::economic_left: return -1.0;
    case IdeologyCategory::none: break;
  }
  return 0.0;
}

}  // namespace

IdeologyMap default_ideology_map() {
  IdeologyMap map;
  for (int t : kSocialLeft) map.set(t, IdeologyCategory::social_left);
  for (int t : kSocialRight) map.set(t, IdeologyCategory::social_right);
  for (int t : kEconomicLeft) map.set(t, IdeologyCategory::economic_left);
  for (int t : kEconomicRight) map.set(t, IdeologyCategory::economic_right);
  return map;
}

PoliticsFixture make_politics_fixture(std::uint64_t seed, const FixtureOptions& opt) {
  if (opt.parties.size() != opt.base_positions.size())
    throw InvalidArgument("one base position per party");
  if (opt.parties.size() < 2 || opt.elections < 1) throw InvalidArgument("fixture too small");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  PoliticsFixture fx;
  fx.map = default_ideology_map();
  const TokenSampler sampler(opt.vocab_size, SynthOptions{});

  std::array<double, kNumThemes> rate{};
  for (auto& r : rate) r = 0.5 + 2.5 * unit(rng);

  std::vector<Sentence> sentences;
  std::vector<double> position(opt.parties.size());
  for (std::size_t p = 0; p < opt.parties.size(); ++p) position[p] = opt.base_positions[p];

  for (int e = 0; e < opt.elections; ++e) {
    const int year = opt.first_year + opt.year_step * e;
    for (std::size_t p = 0; p < opt.parties.size(); ++p) {
      if (e > 0) position[p] = std::clamp(position[p] + opt.drift_sd * gauss(rng), 0.05, 0.95);
      const double pos = position[p];
      const std::string doc = fmt::format("{}_{}", opt.parties[p], year);
      std::vector<std::pair<int, int>> items;  // (theme, label)
      for (int t = 1; t <= kNumThemes; ++t) {
        const double side = side_of(fx.map.at(t));
        const double lambda = rate[static_cast<std::size_t>(t - 1)] *
                              std::exp(opt.count_tilt * side * (pos - 0.5));
        const int count = std::poisson_distribution<int>(lambda)(rng);
        double mean = 3.5;
        if (side > 0) mean = 2.0 + 4.0 * pos;
        if (side < 0) mean = 2.0 + 4.0 * (1.0 - pos);
        for (int k = 0; k < count; ++k) {
          const int label = static_cast<int>(std::clamp(std::lround(mean + opt.spec_noise_sd * gauss(rng)), 1L, 7L));
          items.emplace_back(t, label);
        }
      }
      std::shuffle(items.begin(), items.end(), rng);
      for (std::size_t i = 0; i < items.size(); ++i) {
        Sentence s;
        s.id = fmt::format("{}_{}", doc, i);
        s.doc_id = doc;
        s.index_in_doc = i;
        s.tokens = sampler.sample(items[i].second, rng);
        s.party = opt.parties[p];
        s.year = year;
        s.label = items[i].second;
        s.policy_theme = items[i].first;
        sentences.push_back(std::move(s));
      }
    }
  }
  fx.manifestos = Corpus(std::move(sentences));

  // Gold: right minus left mean relative specificity.
  const auto profiles = build_profiles(fx.manifestos, fx.map);
  std::map<std::pair<int, int>, double> max_w;
  for (const auto& pr : profiles)
    for (int t = 0; t < kNumThemes; ++t)
      if (pr.specw[static_cast<std::size_t>(t)])
        max_w[{pr.year, t}] = std::max(max_w[{pr.year, t}], *pr.specw[static_cast<std::size_t>(t)]);
  for (const auto& pr : profiles) {
    double right = 0, left = 0;
    int nr = 0, nl = 0;
    for (int t = 1; t <= kNumThemes; ++t) {
      const auto& w = pr.specw[static_cast<std::size_t>(t - 1)];
      const double side = side_of(fx.map.at(t));
      if (!w || side == 0.0) continue;
      const double scale = spec_scale(*w, max_w.at({pr.year, t - 1}));
      if (side > 0) {
        right += scale;
        ++nr;
      } else {
        left += scale;
        ++nl;
      }
    }
    const double r = nr ? right / nr : 0.0, l = nl ? left / nl : 0.0;
    fx.gold.push_back({pr.party, pr.year, std::clamp(0.5 + 0.5 * (r - l), 0.0, 1.0)});
  }

  // Salience: linear in the specificity weights of a few themes plus noise.
  std::vector<std::array<double, 4>> beta(kSalienceAreas.size());
  for (auto& b : beta)
    for (auto& v : b) v = 0.5 + unit(rng);
  for (const auto& pr : profiles) {
    for (std::size_t a = 0; a < kSalienceAreas.size(); ++a) {
      double score = 1.0;
      for (int k = 0; k < 4; ++k)
        score += beta[a][static_cast<std::size_t>(k)] *
                 pr.specw[static_cast<std::size_t>(kAreaThemes[a][k] - 1)].value_or(0.0) / kNumClasses;
      score += opt.salience_noise_sd * gauss(rng);
      fx.salience.push_back({pr.party, pr.year, kSalienceAreas[a], score});
    }
  }

  if (opt.parties.size() >= 4) {
    fx.coalitions.push_back({opt.parties[2], opt.parties[3], 20});
    fx.coalitions.push_back({opt.parties[0], opt.parties[1], 2});
  }
  return fx;
}

void write_politics_fixture(const PoliticsFixture& fx, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_corpus(fx.manifestos, dir / "manifestos.jsonl");
  write_ideology_map(fx.map, dir / "ideology_map.csv");
  write_coalitions(fx.coalitions, dir / "coalitions.csv");
  write_gold_positions(fx.gold, dir / "gold_positions.csv");
  write_salience(fx.salience, dir / "salience.csv");
}

PoliticsFixture load_politics_fixture(const std::filesystem::path& dir) {
  PoliticsFixture fx;
  fx.manifestos = load_corpus(dir / "manifestos.jsonl");
  fx.map = load_ideology_map(dir / "ideology_map.csv");
  fx.coalitions = load_coalitions(dir / "coalitions.csv");
  fx.gold = load_gold_positions(dir / "gold_positions.csv");
  fx.salience = load_salience(dir / "salience.csv");
  return fx;
}

}  // namespace ordspec::pol
