// SPDX-License-Identifier: Apache-2.0
#include "ordspec/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <sstream>

#include "ordspec/errors.hpp"

namespace ordspec::diff {

namespace {

constexpr double kLogFloor = 1e-12;

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
}

void require_column(const char* op, const Matrix& a) {
  if (a.cols() != 1) throw ShapeError(std::string(op) + ": expected a column vector, got " + shape(a));
}

void require_scalar(const char* op, const Matrix& a) {
  if (a.rows() != 1 || a.cols() != 1)
    throw ShapeError(std::string(op) + ": expected a 1x1 value, got " + shape(a));
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tape& same_tape(const char* op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw ShapeError(std::string(op) + ": operands live on different tapes");
  return a.tape();
}

/// Elementwise unary primitive: y = f(x), dx = g * df(x, y).
template <class F, class D>
Var unary(Var a, F f, D df) {
  Tape& t = a.tape();
  const std::size_t ai = a.index();
  Matrix out = a.value().unaryExpr(f);
  return t.record(std::move(out), [ai, df](Tape& tape, std::size_t self) {
    const Matrix& x = tape.value(ai);
    const Matrix& y = tape.value(self);
    const Matrix& g = tape.grad(self);
    Matrix& ga = tape.grad_ref(ai);
    for (Eigen::Index i = 0; i < x.size(); ++i) ga(i) += g(i) * df(x(i), y(i));
  });
}

}  // namespace

// ---- ParameterStore ---------------------------------------------------------

ParamId ParameterStore::add(const std::string& name, Matrix init, bool trainable) {
  if (index_.count(name)) throw InvalidArgument("duplicate parameter name " + name);
  Entry e;
  e.name = name;
  e.grad = Matrix::Zero(init.rows(), init.cols());
  e.value = std::move(init);
  e.trainable = trainable;
  entries_.push_back(std::move(e));
  index_.emplace(name, entries_.size() - 1);
  return ParamId{entries_.size() - 1};
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return ParamId{it->second};
}

ParamId ParameterStore::id(std::string_view name) const {
  auto found = find(name);
  if (!found) throw InvalidArgument("unknown parameter " + std::string(name));
  return *found;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.grad.setZero();
}

void ParameterStore::scale_grad(double factor) {
  for (auto& e : entries_) e.grad *= factor;
}

bool ParameterStore::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](const Entry& e) { return e.value.allFinite(); });
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.entries_.size() != entries_.size())
    throw ShapeError("copy_values_from: parameter count mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    require_same_shape("copy_values_from", entries_[i].value, other.entries_[i].value);
    entries_[i].value = other.entries_[i].value;
  }
}

// ---- Tape -------------------------------------------------------------------

const Matrix& Var::value() const { return tape_->value(index_); }

double Var::scalar() const {
  require_scalar("scalar", value());
  return value()(0, 0);
}

Var Tape::constant(Matrix value) { return record(std::move(value), nullptr); }

Var Tape::constant_scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::param(ParamId id) {
  ParameterStore& s = store();
  Node n;
  n.external = &s.value(id);
  if (s.trainable(id)) {
    n.backward = [id](Tape& tape, std::size_t self) {
      tape.store().grad(id) += tape.grad(self);
    };
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, Backward backward) {
  Node n;
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::value(std::size_t node) const {
  const Node& n = nodes_.at(node);
  return n.external ? *n.external : n.value;
}

Matrix& Tape::grad_ref(std::size_t node) {
  Node& n = nodes_[node];
  if (n.grad.size() == 0) {
    const Matrix& v = n.external ? *n.external : n.value;
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::accumulate(std::size_t node, const Matrix& delta) {
  Matrix& g = grad_ref(node);
  require_same_shape("accumulate", g, delta);
  g += delta;
}

void Tape::backward(Var output, double seed) {
  if (&output.tape() != this) throw ShapeError("backward: output belongs to another tape");
  require_scalar("backward", output.value());
  if (backward_done_) throw std::logic_error("backward: tape already consumed");
  backward_done_ = true;
  grad_ref(output.index())(0, 0) += seed;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
}

ParameterStore& Tape::store() {
  if (!store_) throw std::logic_error("tape has no parameter store");
  return *store_;
}

// ---- primitives -------------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape("matmul", a, b);
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ " + shape(a.value()) + " * " + shape(b.value()));
  const std::size_t ai = a.index(), bi = b.index();
  Matrix out = a.value() * b.value();
  return t.record(std::move(out), [ai, bi](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    tape.grad_ref(ai).noalias() += g * tape.value(bi).transpose();
    tape.grad_ref(bi).noalias() += tape.value(ai).transpose() * g;
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape("add", a, b);
  require_same_shape("add", a.value(), b.value());
  const std::size_t ai = a.index(), bi = b.index();
  return t.record(a.value() + b.value(), [ai, bi](Tape& tape, std::size_t self) {
    tape.grad_ref(ai) += tape.grad(self);
    tape.grad_ref(bi) += tape.grad(self);
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape("sub", a, b);
  require_same_shape("sub", a.value(), b.value());
  const std::size_t ai = a.index(), bi = b.index();
  return t.record(a.value() - b.value(), [ai, bi](Tape& tape, std::size_t self) {
    tape.grad_ref(ai) += tape.grad(self);
    tape.grad_ref(bi) -= tape.grad(self);
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape("mul", a, b);
  require_same_shape("mul", a.value(), b.value());
  const std::size_t ai = a.index(), bi = b.index();
  return t.record(a.value().cwiseProduct(b.value()), [ai, bi](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    tape.grad_ref(ai) += g.cwiseProduct(tape.value(bi));
    tape.grad_ref(bi) += g.cwiseProduct(tape.value(ai));
  });
}

Var scale(Var a, double factor) {
  const std::size_t ai = a.index();
  return a.tape().record(a.value() * factor, [ai, factor](Tape& tape, std::size_t self) {
    tape.grad_ref(ai) += tape.grad(self) * factor;
  });
}

Var shift(Var a, double offset) {
  const std::size_t ai = a.index();
  Matrix out = a.value().array() + offset;
  return a.tape().record(std::move(out), [ai](Tape& tape, std::size_t self) {
    tape.grad_ref(ai) += tape.grad(self);
  });
}

Var one_minus(Var a) { return shift(scale(a, -1.0), 1.0); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& t = parts.front().tape();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (&p.tape() != &t) throw ShapeError("concat: operands live on different tapes");
    require_column("concat", p.value());
    rows += p.rows();
  }
  Matrix out(rows, 1);
  std::vector<std::size_t> idx;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    idx.push_back(p.index());
    offsets.push_back(at);
    at += p.rows();
  }
  return t.record(std::move(out), [idx, offsets](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Matrix& gp = tape.grad_ref(idx[i]);
      gp += g.middleRows(offsets[i], gp.rows());
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, Eigen::Index start, Eigen::Index length) {
  require_column("slice", a.value());
  if (start < 0 || length < 0 || start + length > a.rows())
    throw ShapeError("slice: range out of bounds for " + shape(a.value()));
  const std::size_t ai = a.index();
  Matrix out = a.value().middleRows(start, length);
  return a.tape().record(std::move(out), [ai, start, length](Tape& tape, std::size_t self) {
    tape.grad_ref(ai).middleRows(start, length) += tape.grad(self);
  });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return stable_sigmoid(x); },
               [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
  return unary(a, [](double x) { return stable_softplus(x); },
               [](double x, double) { return stable_sigmoid(x); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(std::max(x, kLogFloor)); },
               [](double x, double) { return x > kLogFloor ? 1.0 / x : 0.0; });
}

Var abs(Var a) {
  return unary(a, [](double x) { return std::abs(x); },
               [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var sqrt(Var a) {
  return unary(a, [](double x) { return std::sqrt(std::max(x, 0.0)); },
               [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

namespace {

Vector softmax_values(const Matrix& x) {
  Vector shifted = x.col(0).array() - x.maxCoeff();
  Vector e = shifted.array().exp();
  return e / e.sum();
}

Vector log_softmax_values(const Matrix& x) {
  const double m = x.maxCoeff();
  Vector shifted = x.col(0).array() - m;
  const double lse = std::log(shifted.array().exp().sum());
  return shifted.array() - lse;
}

}  // namespace

Var softmax(Var a) {
  require_column("softmax", a.value());
  const std::size_t ai = a.index();
  return a.tape().record(softmax_values(a.value()), [ai](Tape& tape, std::size_t self) {
    const Matrix& y = tape.value(self);
    const Matrix& g = tape.grad(self);
    const double gy = g.col(0).dot(y.col(0));
    tape.grad_ref(ai) += (y.array() * (g.array() - gy)).matrix();
  });
}

Var log_softmax(Var a) {
  require_column("log_softmax", a.value());
  const std::size_t ai = a.index();
  return a.tape().record(log_softmax_values(a.value()), [ai](Tape& tape, std::size_t self) {
    const Matrix& y = tape.value(self);
    const Matrix& g = tape.grad(self);
    const double gs = g.sum();
    tape.grad_ref(ai) += (g.array() - y.array().exp() * gs).matrix();
  });
}

Var div_scalar(Var a, Var s) {
  Tape& t = same_tape("div_scalar", a, s);
  require_scalar("div_scalar", s.value());
  const double sv = s.scalar();
  if (sv == 0.0) throw ShapeError("div_scalar: division by zero");
  const std::size_t ai = a.index(), si = s.index();
  return t.record(a.value() / sv, [ai, si](Tape& tape, std::size_t self) {
    const Matrix& g = tape.grad(self);
    const double s_val = tape.value(si)(0, 0);
    tape.grad_ref(ai) += g / s_val;
    tape.grad_ref(si)(0, 0) -= g.cwiseProduct(tape.value(ai)).sum() / (s_val * s_val);
  });
}

Var dot_const(Var a, const Vector& c) {
  require_column("dot_const", a.value());
  if (a.rows() != c.size()) throw ShapeError("dot_const: length mismatch");
  const std::size_t ai = a.index();
  Matrix out(1, 1);
  out(0, 0) = a.value().col(0).dot(c);
  return a.tape().record(std::move(out), [ai, c](Tape& tape, std::size_t self) {
    tape.grad_ref(ai).col(0) += tape.grad(self)(0, 0) * c;
  });
}

Var sum(Var a) {
  const std::size_t ai = a.index();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), [ai](Tape& tape, std::size_t self) {
    tape.grad_ref(ai).array() += tape.grad(self)(0, 0);
  });
}

Var cross_entropy(Var logits, const Vector& target) {
  require_column("cross_entropy", logits.value());
  if (logits.rows() != target.size()) throw ShapeError("cross_entropy: length mismatch");
  const std::size_t ai = logits.index();
  Matrix out(1, 1);
  out(0, 0) = -target.dot(log_softmax_values(logits.value()));
  return logits.tape().record(std::move(out), [ai, target](Tape& tape, std::size_t self) {
    const double g = tape.grad(self)(0, 0);
    const Vector q = softmax_values(tape.value(ai));
    tape.grad_ref(ai).col(0) += g * (q * target.sum() - target);
  });
}

Var squared_error(Var a, const Matrix& target) {
  require_same_shape("squared_error", a.value(), target);
  const std::size_t ai = a.index();
  Matrix out(1, 1);
  out(0, 0) = (a.value() - target).squaredNorm();
  return a.tape().record(std::move(out), [ai, target](Tape& tape, std::size_t self) {
    tape.grad_ref(ai) += 2.0 * tape.grad(self)(0, 0) * (tape.value(ai) - target);
  });
}

Var squared_error(Var a, double target) {
  require_scalar("squared_error", a.value());
  return squared_error(a, Matrix::Constant(1, 1, target));
}

Var absolute_error(Var a, double target) {
  require_scalar("absolute_error", a.value());
  return abs(shift(a, -target));
}

Var dropout(Var a, const Matrix& mask) {
  require_same_shape("dropout", a.value(), mask);
  const std::size_t ai = a.index();
  return a.tape().record(a.value().cwiseProduct(mask), [ai, mask](Tape& tape, std::size_t self) {
    tape.grad_ref(ai) += tape.grad(self).cwiseProduct(mask);
  });
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0,1)");
  Matrix mask(rows, cols);
  std::bernoulli_distribution drop(rate);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask(i) = drop(rng) ? 0.0 : keep;
  return mask;
}

Var embedding_lookup(Tape& tape, ParamId table, std::span<const int> ids) {
  const Matrix& tab = tape.store().value(table);
  Matrix out(tab.cols(), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= tab.rows())
      throw ShapeError("embedding_lookup: index " + std::to_string(ids[t]) + " outside table");
    out.col(static_cast<Eigen::Index>(t)) = tab.row(ids[t]).transpose();
  }
  Tape::Backward back;
  if (tape.store().trainable(table)) {
    std::vector<int> idv(ids.begin(), ids.end());
    back = [table, idv](Tape& tp, std::size_t self) {
      Matrix& g = tp.store().grad(table);
      const Matrix& go = tp.grad(self);
      for (std::size_t t = 0; t < idv.size(); ++t)
        g.row(idv[t]) += go.col(static_cast<Eigen::Index>(t)).transpose();
    };
  }
  return tape.record(std::move(out), std::move(back));
}

Var embedding_bag(Tape& tape, ParamId table, std::span<const int> ids,
                  std::span<const double> weights) {
  if (ids.size() != weights.size()) throw ShapeError("embedding_bag: ids/weights length mismatch");
  const Matrix& tab = tape.store().value(table);
  Matrix out = Matrix::Zero(tab.cols(), 1);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= tab.rows())
      throw ShapeError("embedding_bag: index " + std::to_string(ids[t]) + " outside table");
    out.col(0) += weights[t] * tab.row(ids[t]).transpose();
  }
  Tape::Backward back;
  if (tape.store().trainable(table)) {
    std::vector<int> idv(ids.begin(), ids.end());
    std::vector<double> wv(weights.begin(), weights.end());
    back = [table, idv, wv](Tape& tp, std::size_t self) {
      Matrix& g = tp.store().grad(table);
      const Matrix& go = tp.grad(self);
      for (std::size_t t = 0; t < idv.size(); ++t) g.row(idv[t]) += wv[t] * go.col(0).transpose();
    };
  }
  return tape.record(std::move(out), std::move(back));
}

Var gru_sequence(Var inputs, Var W, Var U, Var b, bool reverse) {
  Tape& t = same_tape("gru_sequence", inputs, W);
  same_tape("gru_sequence", W, U);
  same_tape("gru_sequence", U, b);
  const Matrix& X = inputs.value();
  const Matrix& w = W.value();
  const Matrix& u = U.value();
  const Matrix& bias = b.value();
  const Eigen::Index H = u.cols();
  const Eigen::Index T = X.cols();
  if (u.rows() != 3 * H) throw ShapeError("gru_sequence: U must be 3H x H, got " + shape(u));
  if (w.rows() != 3 * H || w.cols() != X.rows())
    throw ShapeError("gru_sequence: W must be 3H x d, got " + shape(w) + " for inputs " + shape(X));
  if (bias.rows() != 3 * H || bias.cols() != 1)
    throw ShapeError("gru_sequence: b must be 3H x 1, got " + shape(bias));
  if (T == 0) throw ShapeError("gru_sequence: empty input sequence");

  struct Cache {
    Matrix h_prev, z, r, n, rh;  // H x T, indexed by step
    std::vector<Eigen::Index> order;
  };
  auto cache = std::make_shared<Cache>();
  cache->h_prev.resize(H, T);
  cache->z.resize(H, T);
  cache->r.resize(H, T);
  cache->n.resize(H, T);
  cache->rh.resize(H, T);

  Matrix A = w * X;
  A.colwise() += bias.col(0);
  Vector h = Vector::Zero(H);
  Vector azr(2 * H), an(H);
  for (Eigen::Index s = 0; s < T; ++s) {
    const Eigen::Index col = reverse ? T - 1 - s : s;
    cache->order.push_back(col);
    cache->h_prev.col(s) = h;
    azr.noalias() = A.col(col).head(2 * H);
    azr.noalias() += u.topRows(2 * H) * h;
    auto z = cache->z.col(s);
    auto r = cache->r.col(s);
    for (Eigen::Index i = 0; i < H; ++i) {
      z(i) = stable_sigmoid(azr(i));
      r(i) = stable_sigmoid(azr(H + i));
    }
    cache->rh.col(s) = r.cwiseProduct(h);
    an.noalias() = A.col(col).tail(H);
    an.noalias() += u.bottomRows(H) * cache->rh.col(s);
    auto n = cache->n.col(s);
    n = an.array().tanh();
    h = z.cwiseProduct(h) + (Vector::Ones(H) - z).cwiseProduct(n);
  }

  const std::size_t xi = inputs.index(), wi = W.index(), ui = U.index(), bi = b.index();
  return t.record(h, [cache, xi, wi, ui, bi, H, T](Tape& tape, std::size_t self) {
    const Matrix& Xv = tape.value(xi);
    const Matrix& wv = tape.value(wi);
    const Matrix& uv = tape.value(ui);
    Matrix dA = Matrix::Zero(3 * H, T);
    Matrix dU = Matrix::Zero(3 * H, H);
    Vector dh = tape.grad(self).col(0);
    Vector dhp(H), dn(H), dz(H), dan(H), drh(H), dazr(2 * H);
    for (Eigen::Index s = T; s-- > 0;) {
      const Eigen::Index col = cache->order[static_cast<std::size_t>(s)];
      const auto hp = cache->h_prev.col(s);
      const auto z = cache->z.col(s);
      const auto r = cache->r.col(s);
      const auto n = cache->n.col(s);
      dn = dh.cwiseProduct(Vector::Ones(H) - z);
      dz = dh.cwiseProduct(hp - n);
      dhp = dh.cwiseProduct(z);
      dan = dn.array() * (1.0 - n.array().square());
      dA.col(col).tail(H) = dan;
      dU.bottomRows(H).noalias() += dan * cache->rh.col(s).transpose();
      drh.noalias() = uv.bottomRows(H).transpose() * dan;
      dhp += drh.cwiseProduct(r);
      dazr.head(H) = dz.array() * z.array() * (1.0 - z.array());
      dazr.tail(H) = drh.array() * hp.array() * r.array() * (1.0 - r.array());
      dA.col(col).head(2 * H) = dazr;
      dU.topRows(2 * H).noalias() += dazr * hp.transpose();
      dhp.noalias() += uv.topRows(2 * H).transpose() * dazr;
      dh = dhp;
    }
    tape.grad_ref(wi).noalias() += dA * Xv.transpose();
    tape.grad_ref(ui) += dU;
    tape.grad_ref(bi) += dA.rowwise().sum();
    tape.grad_ref(xi).noalias() += wv.transpose() * dA;
  });
}

// ---- gradient check, optimizer ----------------------------------------------

GradCheckResult gradient_check(const GraphFn& graph, ParameterStore& params, double eps, double tol,
                               std::size_t max_entries, std::uint64_t seed) {
  if (!(eps > 0.0)) throw InvalidArgument("gradient_check: eps must be positive");
  auto evaluate = [&]() {
    Tape tape(&params);
    Var out = graph(tape);
    if (out.rows() != 1 || out.cols() != 1)
      throw ShapeError("gradient_check: graph output must be scalar, got " + shape(out.value()));
    return out.scalar();
  };

  params.zero_grad();
  {
    Tape tape(&params);
    Var out = graph(tape);
    if (out.rows() != 1 || out.cols() != 1)
      throw ShapeError("gradient_check: graph output must be scalar, got " + shape(out.value()));
    tape.backward(out);
  }

  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamId id{p};
    if (!params.trainable(id)) continue;
    const Matrix analytic = params.grad(id);
    Matrix& value = params.value(id);
    std::vector<Eigen::Index> entries(static_cast<std::size_t>(value.size()));
    std::iota(entries.begin(), entries.end(), 0);
    if (max_entries > 0 && entries.size() > max_entries) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(max_entries);
    }
    double worst = 0.0;
    for (Eigen::Index i : entries) {
      const double saved = value(i);
      value(i) = saved + eps;
      const double up = evaluate();
      value(i) = saved - eps;
      const double down = evaluate();
      value(i) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic(i);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
    result.max_relative_error[params.name(id)] = worst;
    result.worst = std::max(result.worst, worst);
  }
  params.zero_grad();
  result.passed = result.worst <= tol;
  return result;
}

void adam_step(ParameterStore& params, const AdamConfig& config) {
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamId id{p};
    if (params.trainable(id) && !params.grad(id).allFinite())
      throw DivergenceError("non-finite gradient in parameter " + params.name(id));
  }
  const auto step = ++params.adam_steps();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamId id{p};
    if (!params.trainable(id)) continue;
    auto& mom = params.moments(id);
    const Matrix& g = params.grad(id);
    if (mom.m.size() == 0) {
      mom.m = Matrix::Zero(g.rows(), g.cols());
      mom.v = Matrix::Zero(g.rows(), g.cols());
    }
    mom.m = config.beta1 * mom.m + (1.0 - config.beta1) * g;
    mom.v = config.beta2 * mom.v + (1.0 - config.beta2) * g.cwiseProduct(g);
    params.value(id).array() -=
        config.lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + config.eps);
  }
}

Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = dist(rng);
  return m;
}

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return uniform(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

}  // namespace ordspec::diff
