// SPDX-License-Identifier: Apache-2.0
//
// Synthetic manifesto collection for the political analyses. Each party
// follows a latent left-right trajectory. Sentence specificity on mapped
// themes tracks that position (right themes get more specific as the party
// moves right, left themes as it moves left), while theme counts are nearly
// position-free. Gold positions are derived from the realised relative
// specificity scale and salience scores from specificity weights plus noise.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ordspec/corpus.hpp"
#include "ordspec/polanalysis.hpp"

namespace ordspec::pol {

struct FixtureOptions {
  std::vector<std::string> parties = {"greens", "labor", "liberal", "national"};
  std::vector<double> base_positions = {0.15, 0.4, 0.65, 0.8};
  int elections = 25;
  int first_year = 1950;
  int year_step = 3;
  double drift_sd = 0.05;
  /// Strength of the (weak) dependence of mapped-theme counts on position.
  double count_tilt = 0.4;
  double spec_noise_sd = 1.2;
  double salience_noise_sd = 0.3;
  std::size_t vocab_size = 2000;
};

struct PoliticsFixture {
  Corpus manifestos;
  IdeologyMap map;
  std::vector<CoalitionRecord> coalitions;
  std::vector<GoldPosition> gold;
  std::vector<SalienceRecord> salience;
};

inline const std::vector<std::string> kSalienceAreas = {"health", "education", "environment", "tax",
                                                        "economy"};

/// The 26-theme left/right mapping used by the fixture.
IdeologyMap default_ideology_map();

PoliticsFixture make_politics_fixture(std::uint64_t seed, const FixtureOptions& options = {});

/// manifestos.jsonl, ideology_map.csv, coalitions.csv, gold_positions.csv, salience.csv
void write_politics_fixture(const PoliticsFixture& fixture, const std::filesystem::path& dir);
PoliticsFixture load_politics_fixture(const std::filesystem::path& dir);

}  // namespace ordspec::pol
