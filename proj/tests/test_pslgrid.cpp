// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "ordspec/errors.hpp"
#include "ordspec/pslgrid.hpp"
#include "support/psl_oracle.hpp"

using namespace ordspec;
using namespace ordspec::psl;

namespace {

GroundAtom obs(double v, bool neg = false) { return GroundAtom{false, v, 0, neg}; }
GroundAtom var(std::size_t i, bool neg = false) { return GroundAtom{true, 0.0, i, neg}; }

Instance two_hinge(double w1 = 1.0, double w2 = 1.0) {
  Instance inst;
  inst.variables = {"y"};
  inst.rules.push_back(GroundRule{w1, 2, {obs(0.8)}, var(0), 0});
  inst.rules.push_back(GroundRule{w2, 2, {var(0)}, obs(0.2), 1});
  return inst;
}

std::vector<double> random_point(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> y(n);
  for (auto& v : y) v = u(rng);
  return y;
}

}  // namespace

TEST_CASE("rule potential under the Lukasiewicz relaxation") {
  const std::vector<double> none;
  GroundRule r{1.0, 1, {obs(0.9), obs(0.8)}, obs(0.2), 0};
  CHECK(rule_potential(r, none) == doctest::Approx(0.5).epsilon(1e-12));
  r.head = obs(1.0);
  CHECK(rule_potential(r, none) == 0.0);
  r = GroundRule{1.0, 1, {obs(0.3), obs(0.4)}, obs(0.0), 0};
  CHECK(rule_potential(r, none) == 0.0);
  r = GroundRule{1.0, 2, {obs(0.9), obs(0.8, true)}, obs(0.0), 0};  // 0.9 & 0.2 -> body 0.1
  CHECK(rule_potential(r, none) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(truth(var(0, true), std::vector<double>{0.3}) == doctest::Approx(0.7));
  CHECK_THROWS_AS(rule_potential(GroundRule{1.0, 1, {var(3)}, obs(0), 0}, std::vector<double>{0.5}),
                  InvalidArgument);
}

TEST_CASE("energy") {
  Instance inst;
  inst.variables = {"y"};
  inst.rules.push_back(GroundRule{1.0, 1, {obs(0.9), obs(0.8)}, var(0), 0});
  CHECK(energy(inst, std::vector<double>{0.2}) == doctest::Approx(0.5));
  CHECK(energy(inst, std::vector<double>{1.0}) == 0.0);
  double prev = energy(inst, std::vector<double>{0.0});
  for (int k = 1; k <= 100; ++k) {
    const double e = energy(inst, std::vector<double>{k / 100.0});
    CHECK(e <= prev + 1e-15);
    prev = e;
  }
  CHECK_THROWS_AS(energy(inst, std::vector<double>{1.2}), InvalidArgument);
  CHECK_THROWS_AS(energy(inst, std::vector<double>{-0.1}), InvalidArgument);
  CHECK_THROWS_AS(energy(inst, std::vector<double>{0.1, 0.2}), InvalidArgument);
}

TEST_CASE("map inference: two opposing squared hinges meet halfway") {
  const auto r = map_infer(two_hinge());
  CHECK(r.converged);
  CHECK(std::abs(r.y[0] - 0.5) <= 1e-3);
  const auto g = testing::grid_search(two_hinge());
  CHECK(g.y[0] == doctest::Approx(0.5));
}

TEST_CASE("map inference: an unopposed rule drives its head to 1") {
  Instance inst;
  inst.variables = {"y"};
  inst.rules.push_back(GroundRule{1.0, 1, {obs(1.0)}, var(0), 0});
  const auto r = map_infer(inst);
  CHECK(r.converged);
  CHECK(r.y[0] == 1.0);
  CHECK(r.energy == 0.0);
}

TEST_CASE("map inference: iteration cap returns the best point flagged non-converged") {
  MapOptions opt;
  opt.max_iters = 3;
  opt.eta0 = 1e-3;
  opt.init = 0.0;
  const auto r = map_infer(two_hinge(), opt);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 3);
  CHECK(r.energy == doctest::Approx(energy(two_hinge(), r.y)));
}

TEST_CASE("map inference agrees with exhaustive grid search on small random programs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const Program p = testing::random_program(rng, 3);
    const Instance inst = ground(p);
    if (inst.variables.empty()) continue;
    const auto r = map_infer(inst);
    const auto g = testing::grid_search(inst);
    CAPTURE(serialize(p));
    REQUIRE(std::abs(r.energy - g.energy) <= 1e-3);
  }
}

TEST_CASE("energy is convex along random segments") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance inst = ground(testing::random_program(rng));
    if (inst.variables.empty()) continue;
    const auto a = random_point(rng, inst.variables.size()), b = random_point(rng, inst.variables.size());
    std::vector<double> mid(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
    REQUIRE(energy(inst, mid) <= 0.5 * (energy(inst, a) + energy(inst, b)) + 1e-9);
  }
}

TEST_CASE("map result is feasible and beats random feasible points") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = ground(testing::random_program(rng));
    if (inst.variables.empty()) continue;
    const auto r = map_infer(inst);
    for (double v : r.y) REQUIRE((v >= 0.0 && v <= 1.0));
    REQUIRE(r.energy == doctest::Approx(energy(inst, r.y)).epsilon(1e-12));
    for (int k = 0; k < 1000; ++k) REQUIRE(r.energy <= energy(inst, random_point(rng, inst.variables.size())) + 1e-9);
  }
}

TEST_CASE("scaling every weight leaves the minimiser in place") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance inst = ground(testing::random_program(rng, 4, true));
    Instance scaled = inst;
    const double c = 0.5 + static_cast<double>(rng() % 30) / 10.0;
    for (auto& r : scaled.rules) r.weight *= c;
    MapOptions opt;
    opt.tol = 0.0;  // run to the iteration cap
    const auto a = map_infer(inst, opt), b = map_infer(scaled, opt);
    for (std::size_t i = 0; i < a.y.size(); ++i) REQUIRE(std::abs(a.y[i] - b.y[i]) <= 1e-3);
    REQUIRE(energy(scaled, a.y) == doctest::Approx(c * energy(inst, a.y)).epsilon(1e-9));
  }
}

TEST_CASE("grounding enumerates substitutions through observed atoms") {
  const Program p = parse_program(R"(
    predicate Manifesto/1 observed
    predicate Policy/2 observed
    predicate Coalition/2 observed
    predicate Pos/1 target
    Manifesto(m1) = 1
    Manifesto(m2) = 1
    Policy(m1, tax) = 0.4
    Policy(m2, tax) = 0.7
    rule 1 : Manifesto(M) & Policy(M, tax) -> Pos(M)
    rule 2 ^2 : Coalition(M, N) & Pos(M) -> Pos(N)
  )");
  const Instance inst = ground(p);
  CHECK(inst.rules.size() == 2);
  CHECK(inst.variables == std::vector<std::string>{"Pos(m1)", "Pos(m2)"});
  for (const auto& r : inst.rules) CHECK(r.template_index == 0);
  CHECK(inst.rules[0].body[1].value == doctest::Approx(0.4));
  CHECK(inst.index_of("Pos(m2)") == 1);
  CHECK_THROWS_AS(inst.index_of("Pos(m9)"), InvalidArgument);
}

TEST_CASE("grounding: closed world, constant rules and zero-valued joins") {
  const Program p = parse_program(R"(
    predicate A/1 observed
    predicate B/1 observed
    predicate T/1 target
    A(x) = 1
    A(y) = 0
    rule 1 : A(X) & !B(X) -> T(X)
    rule 1 : A(X) -> B(X)
  )");
  const Instance inst = ground(p);
  // A(y) = 0 leaves its rules trivially satisfied; the second template has no target.
  REQUIRE(inst.rules.size() == 1);
  CHECK(inst.variables == std::vector<std::string>{"T(x)"});
  CHECK(inst.rules[0].body[1].value == 0.0);  // B(x) absent -> 0
  CHECK(inst.rules[0].body[1].negated);
}

TEST_CASE("grounding errors") {
  CHECK_THROWS_AS(ground(parse_program("predicate T/1 target\nrule 1 : U(a) -> T(a)\n")), UserError);
  CHECK_THROWS_AS(ground(parse_program("predicate A/1 observed\npredicate T/1 target\nrule 1 : A(X) -> T(Y)\n")),
                  InvalidArgument);
  CHECK_THROWS_AS(ground(parse_program("predicate A/1 observed\npredicate T/1 target\nrule 1 : A(X, Z) -> T(X)\n")),
                  UserError);
}

TEST_CASE("program text parsing and serialisation") {
  const std::string text = R"(# comment
predicate A/2 observed
predicate T/1 target
A(a, b) = 0.25
rule 1.5 ^2 : A(X, b) & !T(X) -> T(b)   # trailing comment
rule 0 : -> T(a)
)";
  const Program p = parse_program(text);
  CHECK(p.predicates.size() == 2);
  CHECK(p.rules.size() == 2);
  CHECK(p.rules[0].weight == 1.5);
  CHECK(p.rules[0].exponent == 2);
  CHECK(p.rules[0].body[1].negated);
  CHECK(p.rules[1].body.empty());
  CHECK(to_string(p.rules[0]) == "rule 1.5 ^2 : A(X, b) & !T(X) -> T(b)");
  const Program again = parse_program(serialize(p));
  CHECK(serialize(again) == serialize(p));

  auto line_of = [](const std::string& t) {
    try {
      parse_program(t);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("predicate A/1 observed\nA(x) = 2\n") == 2);
  CHECK(line_of("predicate A/1 observed\n\nrule x : A(a) -> A(a)\n") == 3);
  CHECK(line_of("predicate A/1 sideways\n") == 1);
  CHECK(line_of("predicate A/1 observed\nrule 1 ^3 : A(a) -> A(a)\n") == 2);
  CHECK(line_of("nonsense\n") == 1);
  CHECK_THROWS_AS(parse_program("predicate T/1 target\nT(a) = 0.5\n"), ParseError);
}

TEST_CASE("grid oracle reproduces hand minima") {
  Instance inst;
  inst.variables = {"a", "b"};
  // a pulled to 0.3 from both sides; b must exceed a.
  inst.rules.push_back(GroundRule{1.0, 1, {obs(0.3)}, var(0), 0});
  inst.rules.push_back(GroundRule{1.0, 1, {var(0)}, obs(0.3), 0});
  inst.rules.push_back(GroundRule{2.0, 1, {var(0)}, var(1), 0});
  inst.rules.push_back(GroundRule{0.5, 1, {var(1)}, obs(0.0), 0});
  const auto g = testing::grid_search(inst);
  CHECK(g.y[0] == doctest::Approx(0.3));
  CHECK(g.y[1] == doctest::Approx(0.3));
  CHECK(g.energy == doctest::Approx(0.15));
}
