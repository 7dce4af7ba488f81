// SPDX-License-Identifier: Apache-2.0
#include "ordspec/pslgrid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ordspec/errors.hpp"

namespace ordspec::psl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_variable(const std::string& arg) {
  return !arg.empty() && std::isupper(static_cast<unsigned char>(arg[0]));
}

bool valid_identifier(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::string atom_key(const std::string& predicate, const std::vector<std::string>& args) {
  std::string k = predicate + "(";
  for (std::size_t i = 0; i < args.size(); ++i) k += (i ? "," : "") + args[i];
  return k + ")";
}

double parse_number(const std::string& text, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("bad ") + what + " '" + text + "'", line);
  }
}

/// Parses "[!]Name(a, b)".
Literal parse_literal(std::string text, std::size_t line) {
  text = trim(text);
  Literal lit;
  if (!text.empty() && text[0] == '!') {
    lit.negated = true;
    text = trim(text.substr(1));
  }
  const auto open = text.find('('), close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open ||
      trim(text.substr(close + 1)) != "")
    throw ParseError("malformed atom '" + text + "'", line);
  lit.predicate = trim(text.substr(0, open));
  if (!valid_identifier(lit.predicate)) throw ParseError("bad predicate name '" + lit.predicate + "'", line);
  const std::string inner = trim(text.substr(open + 1, close - open - 1));
  if (!inner.empty()) {
    std::stringstream ss(inner);
    std::string arg;
    while (std::getline(ss, arg, ',')) {
      arg = trim(arg);
      if (!valid_identifier(arg)) throw ParseError("bad argument '" + arg + "'", line);
      lit.args.push_back(arg);
    }
  }
  return lit;
}

void check_literal(const Program& p, const Literal& lit) {
  auto it = p.predicates.find(lit.predicate);
  if (it == p.predicates.end()) throw InvalidArgument("undeclared predicate " + lit.predicate);
  if (static_cast<int>(lit.args.size()) != it->second.arity)
    throw InvalidArgument(fmt::format("{} expects {} arguments, got {}", lit.predicate,
                                      it->second.arity, lit.args.size()));
}

/// Linear form of a ground rule's hinge: constant + sum coef * y.
struct Linear {
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;
  double weight = 1.0;
  int exponent = 1;

  double eval(std::span<const double> y) const {
    double v = constant;
    for (const auto& [j, a] : terms) v += a * y[j];
    return v;
  }
};

Linear linearize(const GroundRule& r) {
  Linear lin;
  lin.weight = r.weight;
  lin.exponent = r.exponent;
  std::map<std::size_t, double> coef;
  auto add = [&](const GroundAtom& a, double sign) {
    // truth = negated ? 1 - v : v
    const double s = a.negated ? -sign : sign;
    if (a.negated) lin.constant += sign;
    if (a.is_variable) coef[a.variable] += s;
    else lin.constant += s * a.value;
  };
  for (const auto& a : r.body) add(a, 1.0);
  lin.constant -= static_cast<double>(r.body.size()) - 1.0;
  add(r.head, -1.0);
  for (const auto& [j, a] : coef)
    if (a != 0.0) lin.terms.emplace_back(j, a);
  return lin;
}

double hinge_energy(const std::vector<Linear>& rules, std::span<const double> y) {
  double e = 0.0;
  for (const auto& r : rules) {
    const double d = std::max(r.eval(y), 0.0);
    e += r.weight * (r.exponent == 2 ? d * d : d);
  }
  return e;
}

}  // namespace

void Program::declare(const std::string& name, int arity, Role role) {
  if (!valid_identifier(name)) throw InvalidArgument("bad predicate name '" + name + "'");
  if (arity < 0) throw InvalidArgument("negative arity for " + name);
  if (auto it = predicates.find(name); it != predicates.end()) {
    if (it->second.arity != arity || it->second.role != role)
      throw InvalidArgument("conflicting declarations of " + name);
    return;
  }
  predicates[name] = Predicate{name, arity, role};
}

void Program::set(const std::string& predicate, std::vector<std::string> args, double value) {
  Literal lit{predicate, args, false};
  check_literal(*this, lit);
  if (predicates.at(predicate).role != Role::observed)
    throw InvalidArgument("cannot give data for target predicate " + predicate);
  if (!(value >= 0.0 && value <= 1.0))
    throw InvalidArgument(fmt::format("value {} of {} outside [0,1]", value, atom_key(predicate, args)));
  data[predicate][std::move(args)] = value;
}

void Program::add_rule(RuleTemplate rule) {
  if (!std::isfinite(rule.weight) || rule.weight < 0.0)
    throw InvalidArgument("rule weight must be finite and >= 0");
  if (rule.exponent != 1 && rule.exponent != 2) throw InvalidArgument("rule exponent must be 1 or 2");
  for (const auto& l : rule.body) check_literal(*this, l);
  check_literal(*this, rule.head);
  rules.push_back(std::move(rule));
}

RuleTemplate parse_rule(const std::string& s, std::size_t line) {
  const auto colon = s.find(':');
  const auto arrow = s.find("->");
  if (colon == std::string::npos || arrow == std::string::npos || arrow < colon)
    throw ParseError("expected 'rule W [^E] : body -> head'", line);
  std::istringstream ls(s.substr(0, colon));
  std::string w, e, extra;
  if (!(ls >> w)) throw ParseError("missing rule weight", line);
  RuleTemplate r;
  r.weight = parse_number(w, line, "weight");
  if (ls >> e) {
    if (e.size() < 2 || e[0] != '^') throw ParseError("bad exponent '" + e + "'", line);
    r.exponent = static_cast<int>(parse_number(e.substr(1), line, "exponent"));
  }
  if (ls >> extra) throw ParseError("unexpected '" + extra + "'", line);
  const std::string body = trim(s.substr(colon + 1, arrow - colon - 1));
  if (!body.empty()) {
    std::size_t start = 0;
    while (true) {
      const auto amp = body.find('&', start);
      r.body.push_back(parse_literal(body.substr(start, amp - start), line));
      if (amp == std::string::npos) break;
      start = amp + 1;
    }
  }
  r.head = parse_literal(s.substr(arrow + 2), line);
  return r;
}

Program parse_program(const std::string& text) {
  Program p;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    try {
      if (s.rfind("predicate ", 0) == 0) {
        std::istringstream ls(s.substr(10));
        std::string sig, role, extra;
        if (!(ls >> sig >> role) || (ls >> extra)) throw ParseError("expected 'predicate Name/arity role'", line);
        const auto slash = sig.find('/');
        if (slash == std::string::npos) throw ParseError("missing arity in '" + sig + "'", line);
        if (role != "observed" && role != "target") throw ParseError("unknown role '" + role + "'", line);
        const double arity = parse_number(sig.substr(slash + 1), line, "arity");
        p.declare(sig.substr(0, slash), static_cast<int>(arity),
                  role == "observed" ? Role::observed : Role::target);
      } else if (s.rfind("rule ", 0) == 0) {
        RuleTemplate r = parse_rule(s.substr(5), line);
        p.add_rule(std::move(r));
      } else {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ParseError("unrecognised statement '" + s + "'", line);
        Literal lit = parse_literal(s.substr(0, eq), line);
        if (lit.negated) throw ParseError("data atoms cannot be negated", line);
        for (const auto& a : lit.args)
          if (a.empty()) throw ParseError("empty argument", line);
        p.set(lit.predicate, lit.args, parse_number(trim(s.substr(eq + 1)), line, "value"));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const UserError& e) {
      throw ParseError(e.what(), line);
    }
  }
  return p;
}

std::string to_string(const Literal& l) {
  std::string s = l.negated ? "!" : "";
  s += l.predicate + "(";
  for (std::size_t i = 0; i < l.args.size(); ++i) s += (i ? ", " : "") + l.args[i];
  return s + ")";
}

std::string to_string(const RuleTemplate& r) {
  std::string s = fmt::format("rule {:.17g}", r.weight);
  if (r.exponent != 1) s += fmt::format(" ^{}", r.exponent);
  s += " :";
  for (std::size_t i = 0; i < r.body.size(); ++i) s += (i ? " & " : " ") + to_string(r.body[i]);
  return s + " -> " + to_string(r.head);
}

std::string serialize(const Program& p) {
  std::string out;
  for (const auto& [name, pred] : p.predicates)
    out += fmt::format("predicate {}/{} {}\n", name, pred.arity,
                       pred.role == Role::observed ? "observed" : "target");
  for (const auto& [name, atoms] : p.data)
    for (const auto& [args, v] : atoms) out += fmt::format("{} = {:.17g}\n", atom_key(name, args), v);
  for (const auto& r : p.rules) out += to_string(r) + "\n";
  return out;
}

std::size_t Instance::index_of(const std::string& atom) const {
  auto it = std::lower_bound(variables.begin(), variables.end(), atom);
  if (it == variables.end() || *it != atom) throw InvalidArgument("no variable " + atom);
  return static_cast<std::size_t>(it - variables.begin());
}

double truth(const GroundAtom& a, std::span<const double> y) {
  double v = a.value;
  if (a.is_variable) {
    if (a.variable >= y.size()) throw InvalidArgument("unbound variable in ground rule");
    v = y[a.variable];
  }
  return a.negated ? 1.0 - v : v;
}

double rule_potential(const GroundRule& r, std::span<const double> y) {
  double body = 0.0;
  for (const auto& a : r.body) body += truth(a, y);
  const double n = static_cast<double>(r.body.size());
  const double b = std::max(body - (n - 1.0), 0.0);
  const double d = std::max(b - truth(r.head, y), 0.0);
  return r.exponent == 2 ? d * d : d;
}

double energy(const Instance& inst, std::span<const double> y) {
  if (y.size() != inst.variables.size()) throw InvalidArgument("assignment size mismatch");
  for (double v : y)
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("assignment outside [0,1]");
  double e = 0.0;
  for (const auto& r : inst.rules) e += r.weight * rule_potential(r, y);
  return e;
}

Instance ground(const Program& p) {
  for (const auto& r : p.rules) {
    for (const auto& l : r.body) check_literal(p, l);
    check_literal(p, r.head);
  }
  std::map<std::string, std::size_t> var_ids;  // key -> provisional id
  std::vector<std::string> keys;
  std::vector<GroundRule> rules;
  auto variable = [&](const std::string& key) {
    auto [it, inserted] = var_ids.emplace(key, keys.size());
    if (inserted) keys.push_back(key);
    return it->second;
  };

  for (std::size_t t = 0; t < p.rules.size(); ++t) {
    const RuleTemplate& tmpl = p.rules[t];
    std::vector<const Literal*> joins;
    std::set<std::string> bound;
    for (const auto& l : tmpl.body) {
      if (!l.negated && p.predicates.at(l.predicate).role == Role::observed) {
        joins.push_back(&l);
        for (const auto& a : l.args)
          if (is_variable(a)) bound.insert(a);
      }
    }
    auto check_bound = [&](const Literal& l) {
      for (const auto& a : l.args)
        if (is_variable(a) && !bound.count(a))
          throw InvalidArgument("unbound variable " + a + " in rule '" + to_string(tmpl) + "'");
    };
    for (const auto& l : tmpl.body) check_bound(l);
    check_bound(tmpl.head);

    std::map<std::string, std::string> binding;
    auto resolve = [&](const Literal& l) {
      std::vector<std::string> args;
      for (const auto& a : l.args) args.push_back(is_variable(a) ? binding.at(a) : a);
      return args;
    };
    auto emit = [&]() {
      GroundRule g;
      g.weight = tmpl.weight;
      g.exponent = tmpl.exponent;
      g.template_index = t;
      bool has_target = false;
      auto make = [&](const Literal& l) {
        GroundAtom a;
        a.negated = l.negated;
        auto args = resolve(l);
        if (p.predicates.at(l.predicate).role == Role::target) {
          a.is_variable = true;
          a.variable = variable(atom_key(l.predicate, args));
          has_target = true;
        } else if (auto d = p.data.find(l.predicate); d != p.data.end()) {
          if (auto v = d->second.find(args); v != d->second.end()) a.value = v->second;
        }
        return a;
      };
      for (const auto& l : tmpl.body) g.body.push_back(make(l));
      g.head = make(tmpl.head);
      if (has_target) rules.push_back(std::move(g));
    };
    auto join = [&](auto&& self, std::size_t depth) -> void {
      if (depth == joins.size()) {
        emit();
        return;
      }
      const Literal& l = *joins[depth];
      auto d = p.data.find(l.predicate);
      if (d == p.data.end()) return;
      for (const auto& [args, value] : d->second) {
        if (value <= 0.0) continue;
        std::vector<std::string> newly;
        bool ok = true;
        for (std::size_t i = 0; i < args.size() && ok; ++i) {
          const std::string& a = l.args[i];
          if (!is_variable(a)) {
            ok = a == args[i];
          } else if (auto it = binding.find(a); it != binding.end()) {
            ok = it->second == args[i];
          } else {
            binding[a] = args[i];
            newly.push_back(a);
          }
        }
        if (ok) self(self, depth + 1);
        for (const auto& v : newly) binding.erase(v);
      }
    };
    join(join, 0);
  }

  // Variables in lexicographic order.
  Instance inst;
  std::vector<std::size_t> remap(keys.size());
  std::size_t next = 0;
  for (const auto& [key, id] : var_ids) {
    remap[id] = next++;
    inst.variables.push_back(key);
  }
  for (auto& r : rules) {
    for (auto& a : r.body)
      if (a.is_variable) a.variable = remap[a.variable];
    if (r.head.is_variable) r.head.variable = remap[r.head.variable];
  }
  inst.rules = std::move(rules);
  return inst;
}

MapResult map_infer(const Instance& inst, const MapOptions& opt) {
  if (!(opt.eta0 > 0.0) || !(opt.tol >= 0.0)) throw InvalidArgument("bad solver options");
  const std::size_t n = inst.variables.size();
  std::vector<Linear> rules;
  rules.reserve(inst.rules.size());
  for (const auto& r : inst.rules) rules.push_back(linearize(r));

  MapResult res;
  std::vector<double> y(n, std::clamp(opt.init, 0.0, 1.0)), g(n);
  res.y = y;
  res.energy = hinge_energy(rules, y);
  double anchor = res.energy;  // best energy at the start of the current window
  std::size_t since = 0;
  for (std::size_t t = 1; t <= opt.max_iters; ++t) {
    res.iterations = t;
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& r : rules) {
      const double l = r.eval(y);
      if (l <= 0.0) continue;
      const double s = r.weight * (r.exponent == 2 ? 2.0 * l : 1.0);
      for (const auto& [j, a] : r.terms) g[j] += s * a;
    }
    const double eta = opt.eta0 / std::sqrt(static_cast<double>(t));
    bool moved = false;
    for (std::size_t j = 0; j < n; ++j) {
      const double next = std::clamp(y[j] - eta * g[j], 0.0, 1.0);
      if (next != y[j]) moved = true;
      y[j] = next;
    }
    if (!moved) {
      res.converged = true;
      if (const double e = hinge_energy(rules, y); e < res.energy) {
        res.energy = e;
        res.y = y;
      }
      break;
    }
    const double e = hinge_energy(rules, y);
    if (e < res.energy) {
      res.energy = e;
      res.y = y;
    }
    if (++since >= opt.window) {
      if (anchor - res.energy < opt.tol) {
        res.converged = true;
        break;
      }
      anchor = res.energy;
      since = 0;
    }
  }
  return res;
}

}  // namespace ordspec::psl
