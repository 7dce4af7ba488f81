// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over an explicit tape. Values are dense Eigen
// matrices; vectors are single columns. Every primitive records its analytic
// backward rule when it runs forward, and Tape::backward replays them in
// reverse order. Parameters live in a ParameterStore and receive gradients
// through parameter leaves (or directly, for the table lookups).

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ordspec::diff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ParamId {
  std::size_t index = 0;
  bool operator==(const ParamId&) const = default;
};

class ParameterStore {
 public:
  ParamId add(const std::string& name, Matrix init, bool trainable = true);

  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;  // throws InvalidArgument if absent
  bool contains(std::string_view name) const { return find(name).has_value(); }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& name(ParamId id) const { return entries_.at(id.index).name; }
  Matrix& value(ParamId id) { return entries_.at(id.index).value; }
  const Matrix& value(ParamId id) const { return entries_.at(id.index).value; }
  Matrix& grad(ParamId id) { return entries_.at(id.index).grad; }
  const Matrix& grad(ParamId id) const { return entries_.at(id.index).grad; }
  bool trainable(ParamId id) const { return entries_.at(id.index).trainable; }
  void set_trainable(ParamId id, bool trainable) { entries_.at(id.index).trainable = trainable; }

  void zero_grad();
  /// Multiplies every gradient buffer by `factor` (mean over a mini-batch).
  void scale_grad(double factor);
  bool all_finite() const;
  std::size_t parameter_count() const;

  /// Copies values only (used for best-checkpoint snapshots); shapes must match.
  void copy_values_from(const ParameterStore& other);

  struct AdamMoments {
    Matrix m;
    Matrix v;
  };
  AdamMoments& moments(ParamId id) { return entries_.at(id.index).moments; }
  std::uint64_t& adam_steps() noexcept { return adam_steps_; }

 private:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
    bool trainable = true;
    AdamMoments moments;
  };
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::uint64_t adam_steps_ = 0;
};

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape& tape() const { return *tape_; }
  std::size_t index() const noexcept { return index_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  /// Propagates the node's accumulated gradient to its inputs.
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(ParameterStore* store = nullptr) : store_(store) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant_scalar(double value);
  /// Leaf bound to a stored parameter; the value is referenced, not copied.
  Var param(ParamId id);
  Var param(std::string_view name) { return param(store().id(name)); }

  /// Appends a node computed by a primitive.
  Var record(Matrix value, Backward backward);

  const Matrix& value(std::size_t node) const;
  /// Gradient buffer of a node; empty until something flows into it.
  const Matrix& grad(std::size_t node) const { return nodes_.at(node).grad; }
  const Matrix& grad(Var v) const { return grad(v.index()); }
  bool has_grad(std::size_t node) const { return nodes_[node].grad.size() != 0; }
  /// Zero-initialised gradient buffer of the node's shape.
  Matrix& grad_ref(std::size_t node);
  void accumulate(std::size_t node, const Matrix& delta);

  /// Runs the backward pass from a scalar node (seed gradient `seed`).
  /// Each tape supports one backward pass.
  void backward(Var output, double seed = 1.0);

  ParameterStore& store();
  bool has_store() const noexcept { return store_ != nullptr; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix grad;
    Backward backward;
  };
  ParameterStore* store_;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var shift(Var a, double offset);
Var one_minus(Var a);
Var concat(std::span<const Var> parts);  // stacks column vectors
Var concat(std::initializer_list<Var> parts);
Var slice(Var a, Eigen::Index start, Eigen::Index length);  // rows of a column vector

Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var exp(Var a);
/// Natural log with the argument clamped at 1e-12 (zero gradient when clamped).
Var log(Var a);
Var abs(Var a);
Var square(Var a);
/// Square root of max(a, 0); the gradient at 0 is taken as 0.
Var sqrt(Var a);

Var softmax(Var a);
Var log_softmax(Var a);
/// a / s for a 1x1 node s.
Var div_scalar(Var a, Var s);
Var dot_const(Var a, const Vector& c);
Var sum(Var a);

/// -sum_k target_k * log_softmax(logits)_k, evaluated in the log domain.
Var cross_entropy(Var logits, const Vector& target);
/// sum of (a - target)^2 over entries.
Var squared_error(Var a, const Matrix& target);
Var squared_error(Var a, double target);
Var absolute_error(Var a, double target);
Var dropout(Var a, const Matrix& mask);
/// Mask with entries 0 or 1/(1-rate); rate in [0,1).
Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng);

/// Columns table.row(ids[t])^T, stacked as a d x T matrix. Gradients are
/// scattered straight into the store.
Var embedding_lookup(Tape& tape, ParamId table, std::span<const int> ids);
/// sum_t weights[t] * table.row(ids[t])^T as a column vector.
Var embedding_bag(Tape& tape, ParamId table, std::span<const int> ids,
                  std::span<const double> weights);

/// Gated recurrent unit over the columns of `inputs` (d x T), starting from a
/// zero state. Gate layout in W (3H x d), U (3H x H), b (3H x 1) is
/// [update; reset; candidate]:
///   z = sigmoid(Wz x + Uz h + bz), r = sigmoid(Wr x + Ur h + br)
///   n = tanh(Wn x + Un (r * h) + bn), h' = z * h + (1 - z) * n
/// Returns the final state (H x 1). `reverse` runs right to left.
Var gru_sequence(Var inputs, Var W, Var U, Var b, bool reverse);

// ---- gradient check, optimizer ---------------------------------------------

using GraphFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  std::map<std::string, double> max_relative_error;  // per parameter
  double worst = 0.0;
  bool passed = false;
};

/// Compares analytic gradients of a scalar graph against central differences
/// (f(theta+eps) - f(theta-eps)) / (2 eps). Relative error per entry is
/// |a - n| / max(|a|, |n|, 1e-6). If max_entries > 0, that many entries per
/// parameter are sampled (seeded) instead of checking all of them.
GradCheckResult gradient_check(const GraphFn& graph, ParameterStore& params, double eps = 1e-5,
                               double tol = 1e-4, std::size_t max_entries = 0,
                               std::uint64_t seed = 0);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected adaptive-moment update of every trainable parameter.
/// Throws DivergenceError naming the parameter if a gradient is non-finite.
void adam_step(ParameterStore& params, const AdamConfig& config = {});

Matrix xavier_uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);
Matrix uniform(Eigen::Index rows, Eigen::Index cols, double limit, std::mt19937_64& rng);

}  // namespace ordspec::diff
