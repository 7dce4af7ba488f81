// SPDX-License-Identifier: Apache-2.0
#include "ordspec/polanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "ordspec/errors.hpp"
#include "ordspec/metrics.hpp"

namespace ordspec::pol {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_theme(int theme) {
  if (theme < 1 || theme > kNumThemes)
    throw InvalidArgument("policy theme " + std::to_string(theme) + " outside 1..57");
}

std::string theme_constant(int theme) { return fmt::format("t{:02d}", theme); }

const char* category_constant(IdeologyCategory c) {
  switch (c) {
    case IdeologyCategory::social_left: return "socleft";
    case IdeologyCategory::social_right: return "socright";
    case IdeologyCategory::economic_left: return "econleft";
    case IdeologyCategory::economic_right: return "econright";
    case IdeologyCategory::none: break;
  }
  return "none";
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (line_no == 1) {
      if (fields != header)
        throw ParseError(fmt::format("{}: expected header {}", path.string(), fmt::join(header, ",")), 1);
      continue;
    }
    if (fields.size() != header.size())
      throw ParseError(fmt::format("{}: expected {} fields, got {}", path.string(), header.size(),
                                   fields.size()),
                       line_no);
    rows.push_back(std::move(fields));
  }
  if (line_no == 0) throw ParseError(path.string() + ": empty file", 1);
  return rows;
}

double to_double(const std::string& s, std::size_t line, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(path.string() + ": bad number '" + s + "'", line);
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write " + path.string());
  out << text;
}

double pearson(const VectorXd& a, const VectorXd& b) {
  const VectorXd x = a.array() - a.mean(), y = b.array() - b.mean();
  const double d = std::sqrt(x.squaredNorm() * y.squaredNorm());
  return d > 0 ? x.dot(y) / d : 0.0;
}

}  // namespace

std::string to_string(IdeologyCategory c) {
  switch (c) {
    case IdeologyCategory::none: return "none";
    case IdeologyCategory::social_left: return "social-left";
    case IdeologyCategory::social_right: return "social-right";
    case IdeologyCategory::economic_left: return "economic-left";
    case IdeologyCategory::economic_right: return "economic-right";
  }
  return "none";
}

IdeologyCategory parse_ideology_category(const std::string& name) {
  for (auto c : {IdeologyCategory::none, IdeologyCategory::social_left, IdeologyCategory::social_right,
                 IdeologyCategory::economic_left, IdeologyCategory::economic_right})
    if (name == to_string(c)) return c;
  throw InvalidArgument("unknown ideology category " + name);
}

void IdeologyMap::set(int theme, IdeologyCategory category) {
  check_theme(theme);
  categories_[static_cast<std::size_t>(theme - 1)] = category;
}

IdeologyCategory IdeologyMap::at(int theme) const {
  check_theme(theme);
  return categories_[static_cast<std::size_t>(theme - 1)];
}

std::size_t IdeologyMap::mapped_count() const {
  return static_cast<std::size_t>(std::count_if(categories_.begin(), categories_.end(),
                                                [](auto c) { return c != IdeologyCategory::none; }));
}

std::vector<int> IdeologyMap::themes(IdeologyCategory category) const {
  std::vector<int> out;
  for (int t = 1; t <= kNumThemes; ++t)
    if (categories_[static_cast<std::size_t>(t - 1)] == category) out.push_back(t);
  return out;
}

double specificity_weight(const std::vector<double>& scores) {
  if (scores.empty()) throw InvalidArgument("specificity weight of an empty theme");
  double s = 0.0;
  for (double v : scores) s += v;
  return s / static_cast<double>(scores.size());
}

double spec_scale(double weight, double max_weight) {
  if (!(max_weight > 0.0)) throw InvalidArgument("spec_scale needs a positive maximum");
  return weight / max_weight;
}

double rile_score(double right, double left) {
  if (right < 0 || left < 0) throw InvalidArgument("negative theme counts");
  if (right + left == 0.0) return 0.5;
  return 0.5 * ((right - left) / (right + left) + 1.0);
}

double coalition_strength(double count) {
  if (count < 0) throw InvalidArgument("coalition count must be >= 0");
  return 1.0 / (1.0 + std::exp(-count));
}

void rile_bootstrap(ManifestoProfile& p, const IdeologyMap& map) {
  double sr = 0, sl = 0, er = 0, el = 0;
  for (int t = 1; t <= kNumThemes; ++t) {
    const double c = static_cast<double>(p.counts[static_cast<std::size_t>(t - 1)]);
    switch (map.at(t)) {
      case IdeologyCategory::social_left: sl += c; break;
      case IdeologyCategory::social_right: sr += c; break;
      case IdeologyCategory::economic_left: el += c; break;
      case IdeologyCategory::economic_right: er += c; break;
      case IdeologyCategory::none: break;
    }
  }
  p.socpos = rile_score(sr, sl);
  p.econpos = rile_score(er, el);
  p.pos = rile_score(sr + er, sl + el);
}

std::vector<ManifestoProfile> build_profiles(const Corpus& corpus, const IdeologyMap& map,
                                             const std::vector<double>* scores) {
  if (scores && scores->size() != corpus.size())
    throw InvalidArgument("need one specificity score per sentence");
  std::vector<ManifestoProfile> out;
  for (const auto& [doc, positions] : corpus.documents()) {
    ManifestoProfile p;
    p.id = doc;
    const Sentence& first = corpus[positions.front()];
    p.party = first.party;
    p.year = first.year;
    std::array<std::vector<double>, kNumThemes> per_theme;
    for (std::size_t i : positions) {
      const Sentence& s = corpus[i];
      if (s.party != p.party || s.year != p.year)
        throw IntegrityError("manifesto " + doc + " mixes parties or years");
      if (!s.policy_theme) continue;
      check_theme(*s.policy_theme);
      double score;
      if (scores) {
        score = (*scores)[i];
      } else {
        if (!s.label) throw InvalidArgument("sentence " + s.id + " has neither label nor score");
        score = *s.label;
      }
      per_theme[static_cast<std::size_t>(*s.policy_theme - 1)].push_back(score);
    }
    for (std::size_t t = 0; t < per_theme.size(); ++t) {
      p.counts[t] = per_theme[t].size();
      if (!per_theme[t].empty()) p.specw[t] = specificity_weight(per_theme[t]);
    }
    rile_bootstrap(p, map);
    out.push_back(std::move(p));
  }
  return out;
}

psl::Program build_psl_program(const std::vector<ManifestoProfile>& profiles, const IdeologyMap& map,
                               const std::vector<CoalitionRecord>& coalitions,
                               const PslModelSet& models, const PslWeights& w) {
  if (profiles.empty()) throw InvalidArgument("no manifestos");
  using psl::Role;
  psl::Program prog;
  for (const char* name : {"Manifesto", "Policy", "BootPos", "BootSoc", "BootEcon"})
    prog.declare(name, 1, Role::observed);
  for (const char* name : {"Party", "Specw", "SpecScale", "IdeologyMap", "Coalition",
                           "PreviousManifesto", "SameElection"})
    prog.declare(name, 2, Role::observed);
  for (const char* name : {"socpos", "econpos", "pos"}) prog.declare(name, 1, Role::target);

  for (int t = 1; t <= kNumThemes; ++t) {
    prog.set("Policy", {theme_constant(t)}, 1.0);
    if (map.at(t) != IdeologyCategory::none)
      prog.set("IdeologyMap", {theme_constant(t), category_constant(map.at(t))}, 1.0);
  }

  // Same-election maxima for the relative scale.
  std::map<std::pair<int, int>, double> max_w;
  for (const auto& p : profiles)
    for (int t = 0; t < kNumThemes; ++t)
      if (p.specw[static_cast<std::size_t>(t)])
        max_w[{p.year, t}] = std::max(max_w[{p.year, t}], *p.specw[static_cast<std::size_t>(t)]);

  std::map<std::string, std::vector<const ManifestoProfile*>> by_party;
  for (const auto& p : profiles) {
    prog.set("Manifesto", {p.id}, 1.0);
    prog.set("Party", {p.id, p.party}, 1.0);
    prog.set("BootPos", {p.id}, p.pos);
    prog.set("BootSoc", {p.id}, p.socpos);
    prog.set("BootEcon", {p.id}, p.econpos);
    for (int t = 1; t <= kNumThemes; ++t) {
      const auto& sw = p.specw[static_cast<std::size_t>(t - 1)];
      if (!sw) continue;
      prog.set("Specw", {p.id, theme_constant(t)}, std::clamp(*sw / kNumClasses, 0.0, 1.0));
      const double mx = max_w.at({p.year, t - 1});
      if (mx > 0) prog.set("SpecScale", {p.id, theme_constant(t)}, std::clamp(spec_scale(*sw, mx), 0.0, 1.0));
    }
    by_party[p.party].push_back(&p);
  }
  for (auto& [party, list] : by_party) {
    std::stable_sort(list.begin(), list.end(), [](auto a, auto b) { return a->year < b->year; });
    for (std::size_t i = 1; i < list.size(); ++i)
      prog.set("PreviousManifesto", {list[i]->id, list[i - 1]->id}, 1.0);
  }
  for (const auto& a : profiles)
    for (const auto& b : profiles)
      if (&a != &b && a.year == b.year) prog.set("SameElection", {a.id, b.id}, 1.0);
  for (const auto& c : coalitions) {
    const double s = coalition_strength(c.count);
    prog.set("Coalition", {c.party_a, c.party_b}, s);
    prog.set("Coalition", {c.party_b, c.party_a}, s);
  }

  auto rule = [&](double weight, const std::string& text) {
    if (weight <= 0.0) return;
    prog.add_rule(psl::parse_rule(fmt::format("{} ^{} : {}", weight, w.exponent, text)));
  };

  // Priors from the bootstrap.
  for (const auto& [boot, target] : std::vector<std::pair<std::string, std::string>>{
           {"BootPos", "pos"}, {"BootSoc", "socpos"}, {"BootEcon", "econpos"}}) {
    rule(w.prior, fmt::format("Manifesto(X) & {0}(X) -> {1}(X)", boot, target));
    rule(w.prior, fmt::format("Manifesto(X) & !{0}(X) -> !{1}(X)", boot, target));
  }
  // Model I and Model IV: specificity on left themes implies a low position.
  auto theme_rules = [&](double weight, const char* feature) {
    for (const auto& [scope, target] : std::vector<std::pair<std::string, std::string>>{
             {"soc", "socpos"}, {"econ", "econpos"}}) {
      rule(weight, fmt::format("Manifesto(X) & Policy(I) & {0}(X, I) & IdeologyMap(I, {1}right) -> {2}(X)",
                               feature, scope, target));
      rule(weight, fmt::format("Manifesto(X) & Policy(I) & {0}(X, I) & IdeologyMap(I, {1}left) -> !{2}(X)",
                               feature, scope, target));
    }
  };
  theme_rules(w.specificity, "Specw");
  if (models.overall) {
    for (const char* sub : {"socpos", "econpos"}) {
      rule(w.overall, fmt::format("Manifesto(X) & {}(X) -> pos(X)", sub));
      rule(w.overall, fmt::format("Manifesto(X) & !{}(X) -> !pos(X)", sub));
    }
  }
  if (models.global) {
    rule(w.coalition,
         "Manifesto(X) & Party(X, A) & Manifesto(Y) & Party(Y, B) & Coalition(A, B) & "
         "SameElection(X, Y) & pos(X) -> pos(Y)");
    rule(w.coalition,
         "Manifesto(X) & Party(X, A) & Manifesto(Y) & Party(Y, B) & Coalition(A, B) & "
         "SameElection(X, Y) & !pos(X) -> !pos(Y)");
    rule(w.temporal,
         "Manifesto(X) & Party(X, A) & PreviousManifesto(X, T) & Party(T, A) & pos(T) -> pos(X)");
    rule(w.temporal,
         "Manifesto(X) & Party(X, A) & PreviousManifesto(X, T) & Party(T, A) & !pos(T) -> !pos(X)");
  }
  if (models.relative) theme_rules(w.relative, "SpecScale");
  return prog;
}

MatrixXd count_matrix(const std::vector<ManifestoProfile>& profiles) {
  MatrixXd X(static_cast<Eigen::Index>(profiles.size()), kNumThemes);
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (int t = 0; t < kNumThemes; ++t)
      X(static_cast<Eigen::Index>(i), t) = static_cast<double>(profiles[i].counts[static_cast<std::size_t>(t)]);
  return X;
}

MatrixXd specificity_matrix(const std::vector<ManifestoProfile>& profiles) {
  MatrixXd X(static_cast<Eigen::Index>(profiles.size()), kNumThemes);
  for (std::size_t i = 0; i < profiles.size(); ++i)
    for (int t = 0; t < kNumThemes; ++t)
      X(static_cast<Eigen::Index>(i), t) = profiles[i].specw[static_cast<std::size_t>(t)].value_or(0.0);
  return X;
}

PcaResult pca_position(const MatrixXd& X, const std::vector<double>& reference, double tol,
                       std::size_t max_iters) {
  if (X.rows() < 2) throw InvalidArgument("PCA needs at least two rows");
  if (!reference.empty() && reference.size() != static_cast<std::size_t>(X.rows()))
    throw InvalidArgument("PCA reference has the wrong length");
  const MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const MatrixXd C = Xc.transpose() * Xc / static_cast<double>(X.rows() - 1);
  if (C.trace() <= 0.0) throw InvalidArgument("PCA on a zero-variance matrix");

  std::mt19937_64 rng(0x1234);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  VectorXd v(C.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng);
  v.normalize();
  for (std::size_t it = 0; it < max_iters; ++it) {
    VectorXd next = C * v;
    const double norm = next.norm();
    if (norm == 0.0) throw InvalidArgument("PCA power iteration collapsed");
    next /= norm;
    const double delta = (next - v).norm();
    v = next;
    if (delta < tol) break;
  }
  PcaResult r;
  r.eigenvalue = v.dot(C * v);
  VectorXd proj = Xc * v;
  if (!reference.empty()) {
    const VectorXd ref = Eigen::Map<const VectorXd>(reference.data(), static_cast<Eigen::Index>(reference.size()));
    if (pearson(proj, ref) < 0.0) {
      proj = -proj;
      v = -v;
    }
  }
  r.component = v;
  const double lo = proj.minCoeff(), hi = proj.maxCoeff();
  for (Eigen::Index i = 0; i < proj.size(); ++i)
    r.positions.push_back(hi > lo ? (proj(i) - lo) / (hi - lo) : 0.5);
  return r;
}

RegressionResult salience_regression(const MatrixXd& X, const VectorXd& y, double ridge) {
  if (X.rows() != y.size()) throw InvalidArgument("regression: row count mismatch");
  if (X.rows() < 2) throw InvalidArgument("regression needs at least two rows");
  if (ridge < 0.0) throw InvalidArgument("ridge penalty must be >= 0");
  const Eigen::Index n = X.rows();
  MatrixXd A(n, X.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(X.cols()) = X;
  RegressionResult r;
  const double mean = y.mean();
  if ((y.array() - mean).square().sum() == 0.0) {
    r.degenerate_target = true;
    spdlog::warn("salience target has zero variance");
  }
  if (ridge > 0.0) {
    MatrixXd G = A.transpose() * A;
    G.diagonal().tail(X.cols()).array() += ridge;
    r.coefficients = G.completeOrthogonalDecomposition().solve(A.transpose() * y);
  } else {
    r.coefficients = A.completeOrthogonalDecomposition().solve(y);
  }
  r.rss = (y - A * r.coefficients).squaredNorm();
  const double nd = static_cast<double>(n);
  const double sigma2 = std::max(r.rss / nd, 1e-9);
  r.log_likelihood = -0.5 * nd * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0);
  return r;
}

IdeologyMap load_ideology_map(const std::filesystem::path& path) {
  IdeologyMap map;
  std::size_t line = 1;
  for (const auto& row : read_csv(path, {"theme", "category"})) {
    ++line;
    const double t = to_double(row[0], line, path);
    try {
      map.set(static_cast<int>(t), parse_ideology_category(row[1]));
    } catch (const InvalidArgument& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
  }
  return map;
}

std::vector<CoalitionRecord> load_coalitions(const std::filesystem::path& path) {
  std::vector<CoalitionRecord> out;
  std::size_t line = 1;
  for (const auto& row : read_csv(path, {"party_a", "party_b", "count"})) {
    ++line;
    const double c = to_double(row[2], line, path);
    if (c < 0) throw ParseError(path.string() + ": negative coalition count", line);
    out.push_back({row[0], row[1], c});
  }
  return out;
}

std::vector<GoldPosition> load_gold_positions(const std::filesystem::path& path) {
  std::vector<GoldPosition> out;
  std::size_t line = 1;
  for (const auto& row : read_csv(path, {"party", "year", "score"})) {
    ++line;
    out.push_back({row[0], static_cast<int>(to_double(row[1], line, path)), to_double(row[2], line, path)});
  }
  return out;
}

std::vector<SalienceRecord> load_salience(const std::filesystem::path& path) {
  std::vector<SalienceRecord> out;
  std::size_t line = 1;
  for (const auto& row : read_csv(path, {"party", "year", "area", "score"})) {
    ++line;
    out.push_back({row[0], static_cast<int>(to_double(row[1], line, path)), row[2],
                   to_double(row[3], line, path)});
  }
  return out;
}

void write_ideology_map(const IdeologyMap& map, const std::filesystem::path& path) {
  std::string s = "theme,category\n";
  for (int t = 1; t <= kNumThemes; ++t)
    if (map.at(t) != IdeologyCategory::none) s += fmt::format("{},{}\n", t, to_string(map.at(t)));
  write_text(path, s);
}

void write_coalitions(const std::vector<CoalitionRecord>& rows, const std::filesystem::path& path) {
  std::string s = "party_a,party_b,count\n";
  for (const auto& r : rows) s += fmt::format("{},{},{}\n", r.party_a, r.party_b, r.count);
  write_text(path, s);
}

void write_gold_positions(const std::vector<GoldPosition>& rows, const std::filesystem::path& path) {
  std::string s = "party,year,score\n";
  for (const auto& r : rows) s += fmt::format("{},{},{:.6f}\n", r.party, r.year, r.score);
  write_text(path, s);
}

void write_salience(const std::vector<SalienceRecord>& rows, const std::filesystem::path& path) {
  std::string s = "party,year,area,score\n";
  for (const auto& r : rows) s += fmt::format("{},{},{},{:.6f}\n", r.party, r.year, r.area, r.score);
  write_text(path, s);
}

IdeologyResult run_ideology(const std::vector<ManifestoProfile>& profiles, const IdeologyMap& map,
                            const std::vector<CoalitionRecord>& coalitions,
                            const IdeologyOptions& options) {
  IdeologyResult r;
  r.profiles = profiles;
  std::vector<double> boot;
  for (const auto& p : profiles) boot.push_back(p.pos);
  r.positions["bootstrap"] = boot;
  r.positions["pca"] = pca_position(count_matrix(profiles), boot).positions;

  const std::vector<std::pair<std::string, PslModelSet>> variants = {
      {"I+II", {true, false, false}}, {"I+II+III", {true, true, false}}, {"I+II+III+IV", {true, true, true}}};
  for (const auto& [name, models] : variants) {
    const auto inst = psl::ground(build_psl_program(profiles, map, coalitions, models, options.weights));
    const auto res = psl::map_infer(inst, options.solver);
    if (!res.converged) spdlog::warn("{}: MAP inference hit the iteration cap", name);
    std::vector<double> pos;
    for (const auto& p : profiles) pos.push_back(res.y[inst.index_of("pos(" + p.id + ")")]);
    r.positions[name] = std::move(pos);
    r.converged[name] = res.converged;
  }
  return r;
}

std::string ideology_csv(const IdeologyResult& r) {
  std::string s = "manifesto,party,year";
  for (const auto& v : kPositionVariants) s += "," + v;
  s += "\n";
  for (std::size_t i = 0; i < r.profiles.size(); ++i) {
    const auto& p = r.profiles[i];
    s += fmt::format("{},{},{}", p.id, p.party, p.year);
    for (const auto& v : kPositionVariants) s += fmt::format(",{:.6f}", r.positions.at(v)[i]);
    s += "\n";
  }
  return s;
}

std::map<std::string, double> score_against_gold(const IdeologyResult& r,
                                                 const std::vector<GoldPosition>& gold) {
  std::map<std::pair<std::string, int>, double> lookup;
  for (const auto& g : gold) lookup[{g.party, g.year}] = g.score;
  std::vector<std::size_t> rows;
  std::vector<double> golds;
  for (std::size_t i = 0; i < r.profiles.size(); ++i) {
    auto it = lookup.find({r.profiles[i].party, r.profiles[i].year});
    if (it == lookup.end()) continue;
    rows.push_back(i);
    golds.push_back(it->second);
  }
  if (rows.size() < 2) throw InvalidArgument("fewer than two manifestos have gold positions");
  std::map<std::string, double> out;
  for (const auto& [variant, pos] : r.positions) {
    std::vector<double> pred;
    for (std::size_t i : rows) pred.push_back(pos[i]);
    out[variant] = spearman(pred, golds);
  }
  return out;
}

std::vector<SalienceFit> run_salience(const std::vector<ManifestoProfile>& profiles,
                                      const std::vector<SalienceRecord>& salience, double ridge) {
  std::map<std::pair<std::string, int>, std::size_t> row_of;
  for (std::size_t i = 0; i < profiles.size(); ++i) row_of[{profiles[i].party, profiles[i].year}] = i;
  std::vector<std::string> areas;
  std::map<std::string, std::vector<std::pair<std::size_t, double>>> by_area;
  for (const auto& s : salience) {
    auto it = row_of.find({s.party, s.year});
    if (it == row_of.end()) continue;
    if (!by_area.count(s.area)) areas.push_back(s.area);
    by_area[s.area].emplace_back(it->second, s.score);
  }
  const MatrixXd C = count_matrix(profiles), S = specificity_matrix(profiles);
  std::vector<SalienceFit> out;
  for (const auto& area : areas) {
    const auto& rows = by_area.at(area);
    MatrixXd xc(static_cast<Eigen::Index>(rows.size()), kNumThemes), xs = xc;
    VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = static_cast<Eigen::Index>(k);
      xc.row(r) = C.row(static_cast<Eigen::Index>(rows[k].first));
      xs.row(r) = S.row(static_cast<Eigen::Index>(rows[k].first));
      y(r) = rows[k].second;
    }
    SalienceFit f;
    f.area = area;
    f.rows = rows.size();
    f.loglik_counts = salience_regression(xc, y, ridge).log_likelihood;
    f.loglik_specificity = salience_regression(xs, y, ridge).log_likelihood;
    out.push_back(f);
  }
  return out;
}

std::string salience_csv(const std::vector<SalienceFit>& fits) {
  std::string s = "area,rows,loglik_counts,loglik_specificity\n";
  for (const auto& f : fits)
    s += fmt::format("{},{},{:.6f},{:.6f}\n", f.area, f.rows, f.loglik_counts, f.loglik_specificity);
  return s;
}

}  // namespace ordspec::pol
