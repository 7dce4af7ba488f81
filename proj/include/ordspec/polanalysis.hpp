// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ordspec/corpus.hpp"
#include "ordspec/pslgrid.hpp"

namespace ordspec::pol {

enum class IdeologyCategory { none, social_left, social_right, economic_left, economic_right };

std::string to_string(IdeologyCategory c);
IdeologyCategory parse_ideology_category(const std::string& name);

/// theme (1..57) -> category; unmapped themes are `none`.
class IdeologyMap {
 public:
  IdeologyMap() { categories_.fill(IdeologyCategory::none); }
  void set(int theme, IdeologyCategory category);
  IdeologyCategory at(int theme) const;
  std::size_t mapped_count() const;
  std::vector<int> themes(IdeologyCategory category) const;

 private:
  std::array<IdeologyCategory, kNumThemes> categories_{};
};

struct ManifestoProfile {
  std::string id;
  std::string party;
  int year = 0;
  std::array<std::size_t, kNumThemes> counts{};
  /// Mean specificity (1..7) per theme; absent where the theme has no sentence.
  std::array<std::optional<double>, kNumThemes> specw{};
  double socpos = 0.5;
  double econpos = 0.5;
  double pos = 0.5;
};

/// Mean of the scores (raw scale). Throws on an empty list.
double specificity_weight(const std::vector<double>& scores);
/// weight / max_weight.
double spec_scale(double weight, double max_weight);
/// (R - L) / (R + L) mapped to [0,1]; 0.5 when R + L = 0.
double rile_score(double right, double left);
/// 1 / (1 + exp(-n)).
double coalition_strength(double count);

/// Fills socpos, econpos and pos from the counts.
void rile_bootstrap(ManifestoProfile& profile, const IdeologyMap& map);

/// One profile per document with party and year. Sentences need a policy
/// theme; specificity comes from `scores` (one per sentence, e.g. model
/// predictions) or, if null, from gold labels.
std::vector<ManifestoProfile> build_profiles(const Corpus& corpus, const IdeologyMap& map,
                                             const std::vector<double>* scores = nullptr);

struct CoalitionRecord {
  std::string party_a;
  std::string party_b;
  double count = 0.0;
};

struct PslWeights {
  double prior = 1.0;
  double specificity = 1.0;   // Model I
  double overall = 1.0;       // Model II
  double coalition = 1.0;     // Model III
  double temporal = 1.0;      // Model III
  double relative = 1.0;      // Model IV
  int exponent = 1;
};

struct PslModelSet {
  bool overall = true;     // Model II
  bool global = false;     // Model III
  bool relative = false;   // Model IV
};

/// Program over Manifesto, Party, Policy, Specw, SpecScale, IdeologyMap,
/// Coalition, PreviousManifesto and SameElection with targets socpos, econpos
/// and pos. Bootstrapped positions anchor the targets as priors.
psl::Program build_psl_program(const std::vector<ManifestoProfile>& profiles, const IdeologyMap& map,
                               const std::vector<CoalitionRecord>& coalitions,
                               const PslModelSet& models, const PslWeights& weights = {});

/// Counts matrix, one row per profile.
Eigen::MatrixXd count_matrix(const std::vector<ManifestoProfile>& profiles);
/// Specificity weights (0 where absent), one row per profile.
Eigen::MatrixXd specificity_matrix(const std::vector<ManifestoProfile>& profiles);

struct PcaResult {
  std::vector<double> positions;  // min-max scaled to [0,1]
  double eigenvalue = 0.0;
  Eigen::VectorXd component;
};

/// Leading eigenvector of the covariance of `X` (centred columns) by power
/// iteration; sign makes the correlation with `reference` non-negative.
PcaResult pca_position(const Eigen::MatrixXd& X, const std::vector<double>& reference = {},
                       double tol = 1e-9, std::size_t max_iters = 100000);

struct RegressionResult {
  Eigen::VectorXd coefficients;  // intercept first
  double rss = 0.0;
  double log_likelihood = 0.0;
  bool degenerate_target = false;
};

/// Least squares with intercept (minimum-norm when rank deficient), optional
/// ridge penalty on the slopes, Gaussian plug-in log-likelihood.
RegressionResult salience_regression(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                     double ridge = 0.0);

// ---- fixture files ----------------------------------------------------------------

struct GoldPosition {
  std::string party;
  int year = 0;
  double score = 0.0;
};

struct SalienceRecord {
  std::string party;
  int year = 0;
  std::string area;
  double score = 0.0;
};

IdeologyMap load_ideology_map(const std::filesystem::path& path);
std::vector<CoalitionRecord> load_coalitions(const std::filesystem::path& path);
std::vector<GoldPosition> load_gold_positions(const std::filesystem::path& path);
std::vector<SalienceRecord> load_salience(const std::filesystem::path& path);
void write_ideology_map(const IdeologyMap& map, const std::filesystem::path& path);
void write_coalitions(const std::vector<CoalitionRecord>& rows, const std::filesystem::path& path);
void write_gold_positions(const std::vector<GoldPosition>& rows, const std::filesystem::path& path);
void write_salience(const std::vector<SalienceRecord>& rows, const std::filesystem::path& path);

// ---- pipelines ----------------------------------------------------------------------

inline const std::vector<std::string> kPositionVariants = {"bootstrap", "pca", "I+II", "I+II+III",
                                                           "I+II+III+IV"};

struct IdeologyResult {
  std::vector<ManifestoProfile> profiles;
  /// variant -> position per profile
  std::map<std::string, std::vector<double>> positions;
  /// variant -> solver convergence (PSL variants only)
  std::map<std::string, bool> converged;
};

struct IdeologyOptions {
  PslWeights weights;
  psl::MapOptions solver;
};

IdeologyResult run_ideology(const std::vector<ManifestoProfile>& profiles, const IdeologyMap& map,
                            const std::vector<CoalitionRecord>& coalitions,
                            const IdeologyOptions& options = {});

/// Positions CSV: manifesto,party,year,<variant>...
std::string ideology_csv(const IdeologyResult& result);
/// Spearman correlation of each variant against gold positions (matched on party and year).
std::map<std::string, double> score_against_gold(const IdeologyResult& result,
                                                 const std::vector<GoldPosition>& gold);

struct SalienceFit {
  std::string area;
  double loglik_counts = 0.0;
  double loglik_specificity = 0.0;
  std::size_t rows = 0;
};

std::vector<SalienceFit> run_salience(const std::vector<ManifestoProfile>& profiles,
                                      const std::vector<SalienceRecord>& salience, double ridge = 0.0);
std::string salience_csv(const std::vector<SalienceFit>& fits);

}  // namespace ordspec::pol
