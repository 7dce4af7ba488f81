// SPDX-License-Identifier: Apache-2.0
//
// Hinge-loss Markov random fields from weighted first-order rules.
//
// Program text, one statement per line ('#' starts a comment):
//   predicate Name/arity observed|target
//   Name(a, b) = 0.75                       observed atom value in [0,1]
//   rule 1.5 ^2 : A(X) & !B(X, Y) -> C(Y)   weight, optional exponent, body -> head
// Identifiers starting with an upper-case letter inside argument lists are
// variables; anything else is a constant. A '!' negates a literal (1 - v).

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ordspec::psl {

enum class Role { observed, target };

struct Predicate {
  std::string name;
  int arity = 0;
  Role role = Role::observed;
};

struct Literal {
  std::string predicate;
  std::vector<std::string> args;
  bool negated = false;
};

struct RuleTemplate {
  double weight = 1.0;
  int exponent = 1;
  std::vector<Literal> body;
  Literal head;
};

struct Program {
  std::map<std::string, Predicate> predicates;
  /// predicate -> argument tuple -> value
  std::map<std::string, std::map<std::vector<std::string>, double>> data;
  std::vector<RuleTemplate> rules;

  void declare(const std::string& name, int arity, Role role);
  void set(const std::string& predicate, std::vector<std::string> args, double value);
  void add_rule(RuleTemplate rule);
};

Program parse_program(const std::string& text);
/// Parses "W [^E] : body -> head" (a rule statement without the keyword).
RuleTemplate parse_rule(const std::string& text, std::size_t line = 0);
std::string to_string(const Literal& literal);
std::string to_string(const RuleTemplate& rule);
std::string serialize(const Program& program);

/// A grounded literal: either a constant truth value or a target variable.
struct GroundAtom {
  bool is_variable = false;
  double value = 0.0;        // observed truth (before negation)
  std::size_t variable = 0;  // index into the instance's variables
  bool negated = false;
};

struct GroundRule {
  double weight = 1.0;
  int exponent = 1;
  std::vector<GroundAtom> body;
  GroundAtom head;
  std::size_t template_index = 0;
};

struct Instance {
  std::vector<std::string> variables;  // "pred(a,b)", sorted
  std::vector<GroundRule> rules;

  std::size_t index_of(const std::string& atom) const;
};

/// Truth value of a grounded literal under `y`.
double truth(const GroundAtom& atom, std::span<const double> y);
/// Distance to satisfaction max(sum body - (n-1) - head, 0) raised to the exponent.
double rule_potential(const GroundRule& rule, std::span<const double> y);
/// Sum of weight * potential. Throws on assignments outside [0,1].
double energy(const Instance& instance, std::span<const double> y);

/// Enumerates substitutions through the positive observed body literals
/// (closed world: absent atoms are 0, and a 0 body atom leaves the rule
/// trivially satisfied). Rules without any target atom are constant and dropped.
Instance ground(const Program& program);

struct MapOptions {
  double tol = 1e-6;
  std::size_t max_iters = 50000;
  double eta0 = 0.5;
  double init = 0.5;
  /// Iterations without a best-energy improvement of at least tol before stopping.
  std::size_t window = 1000;
};

struct MapResult {
  std::vector<double> y;
  double energy = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Projected subgradient descent over the unit box with step eta0 / sqrt(t);
/// returns the best assignment seen.
MapResult map_infer(const Instance& instance, const MapOptions& options = {});

}  // namespace ordspec::psl
