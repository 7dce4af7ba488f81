// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ordspec/errors.hpp"
#include "ordspec/metrics.hpp"

using namespace ordspec;

namespace {

/// Independent oracle: rank by brute force (count smaller plus half the ties).
std::vector<double> oracle_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

Sentence make(const std::string& id, std::size_t idx, std::size_t len, int label) {
  Sentence s;
  s.id = id;
  s.doc_id = "d";
  s.index_in_doc = idx;
  s.tokens.assign(len, "w");
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("mmae hand values") {
  const std::vector<double> p = {1, 3, 4};
  const std::vector<int> g = {1, 1, 7};
  CHECK(mmae(p, g) == doctest::Approx(2.0).epsilon(1e-12));
  std::vector<double> ones(7, 1.0);
  std::vector<int> all = {1, 2, 3, 4, 5, 6, 7};
  CHECK(mmae(ones, all) == 3.0);
  std::vector<double> perfect(all.begin(), all.end());
  CHECK(mmae(perfect, all) == 0.0);
  CHECK_THROWS_AS(mmae(std::vector<double>{}, std::vector<int>{}), InvalidArgument);
  CHECK_THROWS_AS(mmae(std::vector<double>{1.0}, std::vector<int>{1, 2}), InvalidArgument);
  const auto per = per_class_mae(p, g);
  CHECK(per.size() == 2);
  CHECK(per.at(1) == doctest::Approx(1.0));
  CHECK(per.at(7) == doctest::Approx(3.0));
}

TEST_CASE("mmae ignores class imbalance and stays within [0, K-1]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pred(1.0, 7.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> p;
    std::vector<int> g;
    const std::size_t n = 2 + rng() % 40;
    for (std::size_t i = 0; i < n; ++i) {
      p.push_back(pred(rng));
      g.push_back(1 + static_cast<int>(rng() % 7));
    }
    const double base = mmae(p, g);
    REQUIRE(base >= 0.0);
    REQUIRE(base <= 6.0);
    const int dup = g[rng() % n];
    std::vector<double> p2 = p;
    std::vector<int> g2 = g;
    for (std::size_t i = 0; i < n; ++i)
      if (g[i] == dup) {
        p2.push_back(p[i]);
        g2.push_back(g[i]);
      }
    REQUIRE(mmae(p2, g2) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("spearman hand values") {
  const std::vector<double> a = {1, 2, 3, 4};
  std::vector<double> rev(a.rbegin(), a.rend());
  CHECK(spearman(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman(a, rev) == doctest::Approx(-1.0).epsilon(1e-12));
  const std::vector<double> p = {1, 2, 2, 4};
  CHECK(std::abs(spearman(p, a) - 0.9487) < 1e-4);
  CHECK(spearman(p, a) == doctest::Approx(3.0 / std::sqrt(10.0)).epsilon(1e-12));
  CHECK_THROWS_AS(spearman(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), InvalidArgument);
  CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
}

TEST_CASE("average ranks match a brute-force oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 30);
    for (auto& x : v) x = static_cast<double>(rng() % 6);
    const auto r = average_ranks(v);
    const auto o = oracle_ranks(v);
    for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(r[i] == doctest::Approx(o[i]));
  }
}

TEST_CASE("spearman matches the rank-Pearson oracle and ignores monotone transforms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 40;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = std::round(g(rng) * 3) / 3;
      b[i] = static_cast<double>(1 + rng() % 7);
    }
    const auto ra = oracle_ranks(a), rb = oracle_ranks(b);
    if (*std::max_element(ra.begin(), ra.end()) == *std::min_element(ra.begin(), ra.end())) continue;
    if (*std::max_element(rb.begin(), rb.end()) == *std::min_element(rb.begin(), rb.end())) continue;
    const double rho = spearman(a, b);
    REQUIRE(rho == doctest::Approx(pearson(ra, rb)).epsilon(1e-9));
    const double shift = g(rng), k = 0.5 + std::abs(g(rng));
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(k * a[i]) + shift;
    REQUIRE(spearman(t, b) == doctest::Approx(rho).epsilon(1e-9));
  }
}

TEST_CASE("length and majority baselines") {
  const Corpus c({make("a", 0, 5, 1), make("b", 1, 9, 3), make("c", 2, 20, 7)});
  const auto len = length_baseline(c);
  CHECK(len == std::vector<double>{5, 9, 20});
  CHECK(spearman(len, std::vector<double>{1, 3, 7}) == doctest::Approx(1.0));
  const Corpus flat({make("a", 0, 4, 1), make("b", 1, 4, 3), make("c", 2, 4, 7)});
  CHECK_THROWS_AS(spearman(length_baseline(flat), std::vector<double>{1, 3, 7}), InvalidArgument);
  CHECK_THROWS_AS(length_baseline(Corpus()), InvalidArgument);

  const Corpus train({make("a", 0, 3, 2), make("b", 1, 3, 2), make("c", 2, 3, 5)});
  const auto maj = majority_baseline(train, c);
  CHECK(maj == std::vector<double>{2, 2, 2});
}

TEST_CASE("evaluation rows and CSV") {
  const std::vector<double> p = {1, 1};
  const std::vector<int> g = {1, 1};
  const EvalRow row = make_eval_row("gauss", "test", p, g);
  CHECK(row.mmae == 0.0);
  CHECK(std::isnan(row.rho));
  std::ostringstream out;
  write_eval_csv(out, {row});
  CHECK(out.str() == "head,split,mmae,rho,mae_1,mae_2,mae_3,mae_4,mae_5,mae_6,mae_7\n"
                     "gauss,test,0.000000,,0.000000,,,,,,\n");
}
