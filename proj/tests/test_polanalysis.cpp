// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "ordspec/errors.hpp"
#include "ordspec/metrics.hpp"
#include "ordspec/polanalysis.hpp"

using namespace ordspec;
using namespace ordspec::pol;
namespace fs = std::filesystem;

namespace {

const fs::path kPolitics = fs::path(ORDSPEC_FIXTURE_DIR) / "politics";

IdeologyMap small_map() {
  IdeologyMap m;
  m.set(1, IdeologyCategory::economic_right);
  m.set(2, IdeologyCategory::economic_left);
  m.set(3, IdeologyCategory::social_left);
  m.set(4, IdeologyCategory::social_right);
  return m;
}

ManifestoProfile profile(const std::string& id, const std::string& party, int year,
                         std::vector<std::pair<int, double>> themes) {
  ManifestoProfile p;
  p.id = id;
  p.party = party;
  p.year = year;
  for (auto [t, w] : themes) {
    p.counts[static_cast<std::size_t>(t - 1)] = 2;
    p.specw[static_cast<std::size_t>(t - 1)] = w;
  }
  return p;
}

/// Two parties, two elections. Specificity on mapped themes:
/// lab90 {1, 2}, lab93 {2}, lib90 {1, 3}, lib93 {1}; theme 9 is unmapped.
std::vector<ManifestoProfile> four_manifestos() {
  std::vector<ManifestoProfile> ps = {
      profile("lab90", "labor", 1990, {{1, 3.0}, {2, 6.0}, {9, 4.0}}),
      profile("lab93", "labor", 1993, {{2, 5.0}}),
      profile("lib90", "liberal", 1990, {{1, 6.5}, {3, 2.0}}),
      profile("lib93", "liberal", 1993, {{1, 7.0}, {9, 1.0}}),
  };
  const IdeologyMap m = small_map();
  for (auto& p : ps) rile_bootstrap(p, m);
  return ps;
}

std::map<std::size_t, std::size_t> per_template(const psl::Instance& inst) {
  std::map<std::size_t, std::size_t> n;
  for (const auto& r : inst.rules) ++n[r.template_index];
  return n;
}

Sentence sent(const std::string& doc, std::size_t idx, const std::string& party, int year,
              std::optional<int> theme, std::optional<int> label) {
  Sentence s;
  s.id = doc + "-" + std::to_string(idx);
  s.doc_id = doc;
  s.index_in_doc = idx;
  s.tokens = {"we", "will"};
  s.party = party;
  s.year = year;
  s.policy_theme = theme;
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("specificity weight and its normalised atom") {
  CHECK(specificity_weight({2, 4, 6}) == 4.0);
  CHECK(specificity_weight({7}) == 7.0);
  CHECK_THROWS_AS(specificity_weight({}), InvalidArgument);

  auto p = profile("m", "a", 2000, {{1, 4.0}, {2, 7.0}});
  const psl::Program prog = build_psl_program({p}, small_map(), {}, {});
  const auto& specw = prog.data.at("Specw");
  CHECK(specw.at({"m", "t01"}) == doctest::Approx(4.0 / 7.0));
  CHECK(std::abs(specw.at({"m", "t01"}) - 0.5714) < 1e-4);
  CHECK(specw.at({"m", "t02"}) == 1.0);
  CHECK(specw.count({"m", "t03"}) == 0);
  CHECK(specw.size() == 2);
}

TEST_CASE("spec_scale") {
  CHECK(spec_scale(3.5, 7.0) == 0.5);
  CHECK(spec_scale(7.0, 7.0) == 1.0);
  CHECK_THROWS_AS(spec_scale(1.0, 0.0), InvalidArgument);

  // Ties at the maximum both reach 1; absent themes emit no atom.
  const std::vector<ManifestoProfile> ps = {profile("a", "x", 2000, {{1, 5.0}}),
                                            profile("b", "y", 2000, {{1, 5.0}}),
                                            profile("c", "z", 2000, {{1, 2.5}, {2, 3.0}})};
  const psl::Program prog = build_psl_program(ps, small_map(), {}, {});
  const auto& s = prog.data.at("SpecScale");
  CHECK(s.at({"a", "t01"}) == 1.0);
  CHECK(s.at({"b", "t01"}) == 1.0);
  CHECK(s.at({"c", "t01"}) == 0.5);
  CHECK(s.at({"c", "t02"}) == 1.0);
  CHECK(s.count({"a", "t02"}) == 0);
}

TEST_CASE("spec_scale lies in (0, 1] and only the election maximum attains 1") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(1.0, 7.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ManifestoProfile> ps;
    for (int i = 0; i < 6; ++i)
      ps.push_back(profile("m" + std::to_string(i), "p" + std::to_string(i), 2000 + i % 2, {{1, w(rng)}}));
    const auto prog = build_psl_program(ps, small_map(), {}, {});
    for (int year : {2000, 2001}) {
      int ones = 0;
      for (const auto& p : ps) {
        if (p.year != year) continue;
        const double v = prog.data.at("SpecScale").at({p.id, "t01"});
        REQUIRE(v > 0.0);
        REQUIRE(v <= 1.0);
        ones += v == 1.0;
      }
      REQUIRE(ones == 1);
    }
  }
}

TEST_CASE("RILE bootstrap") {
  CHECK(rile_score(10, 5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(rile_score(10, 5) - 0.6667) < 1e-4);
  CHECK(rile_score(4, 4) == 0.5);
  CHECK(rile_score(0, 9) == 0.0);
  CHECK(rile_score(0, 0) == 0.5);
  CHECK_THROWS_AS(rile_score(-1, 0), InvalidArgument);

  ManifestoProfile p;
  p.counts[0] = 10;  // economic right
  p.counts[1] = 5;   // economic left
  p.counts[2] = 3;   // social left
  p.counts[8] = 50;  // unmapped
  rile_bootstrap(p, small_map());
  CHECK(p.econpos == doctest::Approx(2.0 / 3.0));
  CHECK(p.socpos == 0.0);
  CHECK(p.pos == doctest::Approx(0.5 * ((10.0 - 8.0) / 18.0 + 1.0)));
}

TEST_CASE("RILE score is antisymmetric in left and right counts") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 500; ++trial) {
    const double r = static_cast<double>(rng() % 50), l = static_cast<double>(rng() % 50);
    REQUIRE(rile_score(r, l) + rile_score(l, r) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("coalition strength") {
  CHECK(coalition_strength(0) == 0.5);
  CHECK(coalition_strength(40) == doctest::Approx(1.0).epsilon(1e-12));
  double prev = 0.0;
  for (int n = 0; n < 30; ++n) {
    CHECK(coalition_strength(n) > prev);
    prev = coalition_strength(n);
  }
  CHECK_THROWS_AS(coalition_strength(-1), InvalidArgument);
}

TEST_CASE("ideology map") {
  IdeologyMap m = small_map();
  CHECK(m.mapped_count() == 4);
  CHECK(m.at(9) == IdeologyCategory::none);
  CHECK(m.themes(IdeologyCategory::economic_right) == std::vector<int>{1});
  CHECK_THROWS_AS(m.set(58, IdeologyCategory::social_left), InvalidArgument);
  CHECK_THROWS_AS(m.at(0), InvalidArgument);
  CHECK(parse_ideology_category(to_string(IdeologyCategory::social_right)) == IdeologyCategory::social_right);
  CHECK_THROWS_AS(parse_ideology_category("centre"), InvalidArgument);
}

TEST_CASE("profiles from a corpus") {
  const Corpus c({sent("m1", 0, "a", 2001, 1, 2), sent("m1", 1, "a", 2001, 1, 6), sent("m1", 2, "a", 2001, 3, 7),
                  sent("m1", 3, "a", 2001, std::nullopt, 1), sent("m2", 0, "b", 2001, 2, 3)});
  const auto ps = build_profiles(c, small_map());
  REQUIRE(ps.size() == 2);
  CHECK(ps[0].id == "m1");
  CHECK(ps[0].party == "a");
  CHECK(ps[0].counts[0] == 2);
  CHECK(ps[0].counts[2] == 1);
  CHECK(*ps[0].specw[0] == 4.0);
  CHECK_FALSE(ps[0].specw[1].has_value());
  CHECK(ps[0].econpos == 1.0);
  CHECK(ps[0].socpos == 0.0);
  CHECK(ps[1].econpos == 0.0);

  const std::vector<double> scores = {1.5, 2.5, 3, 3, 4};
  const auto scored = build_profiles(c, small_map(), &scores);
  CHECK(*scored[0].specw[0] == 2.0);
  const std::vector<double> short_scores = {1.0};
  CHECK_THROWS_AS(build_profiles(c, small_map(), &short_scores), InvalidArgument);

  const Corpus mixed({sent("m", 0, "a", 2001, 1, 2), sent("m", 1, "b", 2001, 1, 2)});
  CHECK_THROWS_AS(build_profiles(mixed, small_map()), IntegrityError);
}

TEST_CASE("Model I grounds one rule per manifesto holding a mapped theme") {
  const std::vector<ManifestoProfile> ps = {profile("m1", "a", 2000, {{1, 4.0}}), profile("m2", "b", 2000, {{1, 6.0}})};
  const psl::Program prog = build_psl_program(ps, small_map(), {}, PslModelSet{false, false, false});
  const auto inst = psl::ground(prog);
  std::size_t econ = 0;
  for (const auto& r : inst.rules) {
    const auto& t = prog.rules[r.template_index];
    if (t.body.size() == 4 && t.body[2].predicate == "Specw") {
      CHECK(t.head.predicate == "econpos");
      ++econ;
    }
  }
  CHECK(econ == 2);
}

TEST_CASE("grounding the four-manifesto program matches hand enumeration") {
  const auto ps = four_manifestos();
  const std::vector<CoalitionRecord> coal = {{"labor", "liberal", 1.0}};
  const PslModelSet all{true, true, true};
  const psl::Program prog = build_psl_program(ps, small_map(), coal, all);
  // Templates in order: 6 priors; Model I (socright, socleft, econright, econleft);
  // Model II (4); Model III coalition (2) and temporal (2); Model IV (4).
  REQUIRE(prog.rules.size() == 22);
  const auto n = per_template(psl::ground(prog));
  // Positive priors skip bootstrap values of 0: pos and econpos of lab93, socpos of lib90.
  for (std::size_t t : {0, 2, 4}) CHECK(n.at(t) == 3);
  for (std::size_t t : {1, 3, 5}) CHECK(n.at(t) == 4);
  CHECK(n.count(6) == 0);  // no social-right specificity
  CHECK(n.at(7) == 1);     // lib90 theme 3
  CHECK(n.at(8) == 3);     // theme 1: lab90, lib90, lib93
  CHECK(n.at(9) == 2);     // theme 2: lab90, lab93
  for (std::size_t t = 10; t < 14; ++t) CHECK(n.at(t) == 4);
  CHECK(n.at(14) == 4);  // ordered same-election pairs with a coalition
  CHECK(n.at(15) == 4);
  CHECK(n.at(16) == 2);  // lab93 <- lab90, lib93 <- lib90
  CHECK(n.at(17) == 2);
  CHECK(n.count(18) == 0);
  CHECK(n.at(19) == 1);
  CHECK(n.at(20) == 3);
  CHECK(n.at(21) == 2);

  // Without coalition data the coalition templates ground nothing.
  const auto none = per_template(psl::ground(build_psl_program(ps, small_map(), {}, all)));
  CHECK(none.count(14) == 0);
  CHECK(none.count(15) == 0);
  CHECK(none.at(16) == 2);
}

TEST_CASE("program builder validation and weights") {
  CHECK_THROWS_AS(build_psl_program({}, small_map(), {}, {}), InvalidArgument);
  PslWeights w;
  w.exponent = 2;
  w.prior = 0.0;  // zero-weight templates are left out
  const auto prog = build_psl_program(four_manifestos(), small_map(), {}, {}, w);
  for (const auto& r : prog.rules) CHECK(r.exponent == 2);
  CHECK(prog.rules.size() == 8);
}

TEST_CASE("Model IV only moves manifestos with relative-scale atoms on mapped themes") {
  auto ps = four_manifestos();
  ps.push_back(profile("grn90", "greens", 1990, {{9, 5.0}}));  // unmapped theme only
  rile_bootstrap(ps.back(), small_map());
  auto positions = [&](bool relative) {
    const auto inst = psl::ground(build_psl_program(ps, small_map(), {}, PslModelSet{true, false, relative}));
    psl::MapOptions opt;
    opt.tol = 0.0;
    const auto r = psl::map_infer(inst, opt);
    std::vector<double> out;
    for (const auto& p : ps) out.push_back(r.y[inst.index_of("pos(" + p.id + ")")]);
    return out;
  };
  const auto without = positions(false), with = positions(true);
  CHECK(std::abs(without[4] - with[4]) <= 1e-3);
  double moved = 0.0;
  for (std::size_t i = 0; i < 4; ++i) moved = std::max(moved, std::abs(without[i] - with[i]));
  CHECK(moved > 1e-3);
}

TEST_CASE("PCA: closed-form 2x2 eigenvalue") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd X(30, 2);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double a = g(rng);
      X(i, 0) = a + 0.3 * g(rng);
      X(i, 1) = 0.5 * a + 0.8 * g(rng);
    }
    const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
    const Eigen::MatrixXd C = Xc.transpose() * Xc / 29.0;
    const double tr = C(0, 0) + C(1, 1), det = C(0, 0) * C(1, 1) - C(0, 1) * C(1, 0);
    const double lambda = tr / 2 + std::sqrt(tr * tr / 4 - det);
    REQUIRE(std::abs(pca_position(X).eigenvalue - lambda) <= 1e-6);
  }
}

TEST_CASE("PCA: rank one recovers the generating scores, rows permute") {
  const std::vector<double> s = {0.3, -1.2, 2.0, 0.7, -0.1, 1.1};
  Eigen::VectorXd dir(5);
  dir << 1.0, -2.0, 0.5, 3.0, 0.0;
  Eigen::MatrixXd X(6, 5);
  for (Eigen::Index i = 0; i < 6; ++i) X.row(i) = s[static_cast<std::size_t>(i)] * dir.transpose();
  const auto r = pca_position(X, s);
  const double lo = *std::min_element(s.begin(), s.end()), hi = *std::max_element(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(r.positions[i] == doctest::Approx((s[i] - lo) / (hi - lo)));
  // Negated reference flips the orientation.
  std::vector<double> neg(s.size());
  std::transform(s.begin(), s.end(), neg.begin(), [](double v) { return -v; });
  const auto f = pca_position(X, neg);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(f.positions[i] == doctest::Approx(1.0 - r.positions[i]));

  std::mt19937_64 rng(2);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Random(12, 7);
  const auto base = pca_position(Y);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd P(12, 7);
  std::vector<double> ref(12);
  for (int i = 0; i < 12; ++i) {
    P.row(i) = Y.row(perm[static_cast<std::size_t>(i)]);
    ref[static_cast<std::size_t>(i)] = base.positions[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  const auto permuted = pca_position(P, ref);
  for (int i = 0; i < 12; ++i) CHECK(permuted.positions[static_cast<std::size_t>(i)] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-6));

  CHECK_THROWS_AS(pca_position(Eigen::MatrixXd::Ones(4, 3)), InvalidArgument);
  CHECK_THROWS_AS(pca_position(Eigen::MatrixXd::Ones(1, 3)), InvalidArgument);
}

TEST_CASE("salience regression hand fits") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  Eigen::VectorXd y(3);
  y << 0, 1, 2;
  auto r = salience_regression(X, y);
  CHECK(r.coefficients(1) == doctest::Approx(1.0));
  CHECK(r.coefficients(0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.rss == doctest::Approx(0.0).epsilon(1e-12));

  y << 0, 1, 1;
  r = salience_regression(X, y);
  CHECK(r.coefficients(1) == doctest::Approx(0.5));
  CHECK(r.coefficients(0) == doctest::Approx(1.0 / 6.0));
  CHECK(r.rss == doctest::Approx(1.0 / 6.0));
  const double ll = -1.5 * (std::log(2.0 * M_PI * (1.0 / 18.0)) + 1.0);
  CHECK(r.log_likelihood == doctest::Approx(ll).epsilon(1e-12));
  CHECK(std::abs(r.log_likelihood - 0.0785) < 1e-3);
  CHECK_FALSE(r.degenerate_target);

  y << 2, 2, 2;
  CHECK(salience_regression(X, y).degenerate_target);
  CHECK_THROWS_AS(salience_regression(Eigen::MatrixXd(1, 1), Eigen::VectorXd(1)), InvalidArgument);
  CHECK_THROWS_AS(salience_regression(X, Eigen::VectorXd(2)), InvalidArgument);
}

TEST_CASE("salience regression: wide designs and ridge") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd X(5, 12);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(rng);
  Eigen::VectorXd y(5);
  for (Eigen::Index i = 0; i < 5; ++i) y(i) = g(rng);
  const auto exact = salience_regression(X, y);
  CHECK(exact.rss < 1e-12);
  CHECK(std::isfinite(exact.log_likelihood));  // variance floor
  const auto ridged = salience_regression(X, y, 1.0);
  CHECK(ridged.rss > exact.rss);
  CHECK(ridged.coefficients.tail(12).norm() < exact.coefficients.tail(12).norm());
}

TEST_CASE("fixture files round trip") {
  const fs::path dir = fs::temp_directory_path() / "ordspec_test_pol";
  fs::create_directories(dir);
  write_ideology_map(small_map(), dir / "map.csv");
  const auto m = load_ideology_map(dir / "map.csv");
  for (int t = 1; t <= kNumThemes; ++t) REQUIRE(m.at(t) == small_map().at(t));
  write_coalitions({{"a", "b", 3}}, dir / "c.csv");
  CHECK(load_coalitions(dir / "c.csv")[0].count == 3.0);
  write_gold_positions({{"a", 1999, 0.25}}, dir / "g.csv");
  CHECK(load_gold_positions(dir / "g.csv")[0].score == 0.25);
  write_salience({{"a", 1999, "health", 1.5}}, dir / "s.csv");
  CHECK(load_salience(dir / "s.csv")[0].area == "health");
  std::ofstream(dir / "bad.csv") << "theme,category\n99,social-left\n";
  CHECK_THROWS_AS(load_ideology_map(dir / "bad.csv"), UserError);
}

TEST_CASE("bundled fixture: salience follows specificity") {
  const Corpus c = load_corpus(kPolitics / "manifestos.jsonl");
  const auto map = load_ideology_map(kPolitics / "ideology_map.csv");
  CHECK(map.mapped_count() == 26);
  const auto profiles = build_profiles(c, map);
  CHECK(profiles.size() == 100);
  const auto fits = run_salience(profiles, load_salience(kPolitics / "salience.csv"));
  REQUIRE(fits.size() == 5);
  for (const auto& f : fits) {
    CAPTURE(f.area);
    CHECK(f.loglik_specificity > f.loglik_counts);
  }
  CHECK(salience_csv(fits) == salience_csv(run_salience(profiles, load_salience(kPolitics / "salience.csv"))));
}

TEST_CASE("ideology pipeline is deterministic") {
  auto ps = four_manifestos();
  const std::vector<CoalitionRecord> coal = {{"labor", "liberal", 2.0}};
  const auto a = run_ideology(ps, small_map(), coal);
  const auto b = run_ideology(ps, small_map(), coal);
  CHECK(ideology_csv(a) == ideology_csv(b));
  CHECK(a.positions.size() == kPositionVariants.size());
  for (const auto& [v, pos] : a.positions)
    for (double x : pos) CHECK((x >= 0.0 && x <= 1.0));
}
