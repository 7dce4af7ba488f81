// SPDX-License-Identifier: Apache-2.0
#include "ordspec/crossview.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "ordspec/errors.hpp"

namespace ordspec {

using diff::Matrix;
using diff::Var;
using diff::Vector;

namespace {

constexpr std::uint64_t kUnlabeledStream = 0x9e3779b97f4a7c15ULL;

Vector cmf(const Vector& q) {
  Vector c(q.size());
  std::partial_sum(q.data(), q.data() + q.size(), c.data());
  return c;
}

Matrix lower_ones(Eigen::Index K) {
  return Matrix::Ones(K, K).triangularView<Eigen::Lower>();
}

void check_l(int l) {
  if (l != 1 && l != 2) throw InvalidArgument("EMD norm order must be 1 or 2");
}

}  // namespace

std::string to_string(ConsensusKind kind) {
  switch (kind) {
    case ConsensusKind::mse: return "mse";
    case ConsensusKind::kld: return "kld";
    case ConsensusKind::emd: return "emd";
  }
  return "?";
}

ConsensusKind parse_consensus_kind(const std::string& name) {
  if (name == "mse") return ConsensusKind::mse;
  if (name == "kld") return ConsensusKind::kld;
  if (name == "emd") return ConsensusKind::emd;
  throw InvalidArgument("unknown consensus kind " + name);
}

void SslConfig::validate() const {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be >= 0");
  if (!(word_dropout >= 0.0 && word_dropout <= 1.0))
    throw InvalidArgument("word dropout must lie in [0,1]");
  if (interleave < 1) throw InvalidArgument("interleave must be >= 1");
  check_l(l);
}

std::vector<std::size_t> word_dropout_keep(std::size_t n, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution drop(std::clamp(rate, 0.0, 1.0));
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (!drop(rng)) keep.push_back(i);
  if (keep.empty() && n > 0) keep.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  return keep;
}

StudentView student_view(const std::vector<std::string>& tokens, const Vector& context,
                         double dropout_rate, std::uint64_t seed) {
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0))
    throw InvalidArgument("word dropout must lie in [0,1]");
  std::mt19937_64 rng(seed);
  StudentView v;
  for (std::size_t i : word_dropout_keep(tokens.size(), dropout_rate, rng)) v.tokens.push_back(tokens[i]);
  v.context = Vector::Zero(context.size());
  return v;
}

double emd(const Vector& q1, const Vector& q2, int l) {
  check_l(l);
  if (q1.size() != q2.size() || q1.size() == 0) throw InvalidArgument("emd: length mismatch");
  const Vector d = cmf(q1) - cmf(q2);
  const double K = static_cast<double>(q1.size());
  return l == 1 ? d.cwiseAbs().sum() / K : std::sqrt(d.squaredNorm() / K);
}

double kl_divergence(const Vector& p, const Vector& q) {
  if (p.size() != q.size()) throw InvalidArgument("kl: length mismatch");
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p(i) > 0.0) s += p(i) * (std::log(p(i)) - std::log(std::max(q(i), 1e-12)));
  return s;
}

double consensus_loss(const Vector& q_teacher, double fx_teacher, const Vector& q_student,
                      double fx_student, ConsensusKind kind, int l) {
  switch (kind) {
    case ConsensusKind::mse: return (fx_teacher - fx_student) * (fx_teacher - fx_student);
    case ConsensusKind::kld: return kl_divergence(q_teacher, q_student);
    case ConsensusKind::emd: return emd(q_teacher, q_student, l);
  }
  throw InvalidArgument("unknown consensus kind");
}

Var emd(Var q_student, const Vector& q_teacher, int l) {
  check_l(l);
  const Eigen::Index K = q_teacher.size();
  if (q_student.rows() != K || q_student.cols() != 1) throw ShapeError("emd: length mismatch");
  diff::Tape& tape = q_student.tape();
  Var c = diff::matmul(tape.constant(lower_ones(K)), q_student);
  Var d = diff::sub(c, tape.constant(cmf(q_teacher)));
  const double invK = 1.0 / static_cast<double>(K);
  if (l == 1) return diff::scale(diff::sum(diff::abs(d)), invK);
  return diff::sqrt(diff::scale(diff::sum(diff::square(d)), invK));
}

Var consensus_loss(const HeadOutput& student, const Vector& q_teacher, double fx_teacher,
                   ConsensusKind kind, int l) {
  switch (kind) {
    case ConsensusKind::mse: return diff::squared_error(student.value, fx_teacher);
    case ConsensusKind::kld: {
      if (!student.has_q()) throw InvalidArgument("kld consensus needs a distributional head");
      double entropy_term = 0.0;
      for (Eigen::Index i = 0; i < q_teacher.size(); ++i)
        if (q_teacher(i) > 0.0) entropy_term += q_teacher(i) * std::log(q_teacher(i));
      return diff::shift(diff::scale(diff::dot_const(student.log_q, q_teacher), -1.0), entropy_term);
    }
    case ConsensusKind::emd:
      if (!student.has_q()) throw InvalidArgument("emd consensus needs a distributional head");
      return emd(student.q, q_teacher, l);
  }
  throw InvalidArgument("unknown consensus kind");
}

double unlabeled_step(Model& student, const Model& teacher, const std::vector<Example>& batch,
                      const SslConfig& ssl, const TrainConfig& config, std::mt19937_64& rng) {
  if (batch.empty()) return 0.0;
  auto& params = student.params();
  params.zero_grad();
  double total = 0.0;
  for (const auto& e : batch) {
    const Prediction t = teacher.predict_ids(e.ids, e.context.size() ? &e.context : nullptr);
    std::vector<int> kept;
    for (std::size_t i : word_dropout_keep(e.ids.size(), ssl.word_dropout, rng)) kept.push_back(e.ids[i]);
    diff::Tape tape(&params);
    // Null context means zeros.
    auto out = student.forward(tape, kept, nullptr, &rng);
    const Vector qt = t.q ? *t.q : Vector();
    Var loss = consensus_loss(out, qt, t.value, ssl.kind, ssl.l);
    const double lv = loss.scalar();
    if (!std::isfinite(lv)) throw DivergenceError("non-finite consensus loss");
    total += lv;
    tape.backward(diff::scale(loss, ssl.beta));
  }
  params.scale_grad(1.0 / static_cast<double>(batch.size()));
  diff::adam_step(params, diff::AdamConfig{config.lr});
  return total / static_cast<double>(batch.size());
}

TrainedModel ssl_train(const Corpus& labeled, const Corpus& unlabeled, const Corpus& val,
                       const TrainConfig& config, const SslConfig& ssl,
                       const TrainResources& resources) {
  config.validate();
  ssl.validate();
  if (unlabeled.empty()) throw InvalidArgument("unlabelled corpus is empty");
  TrainResources res = resources;
  res.extra_vocab = &unlabeled;

  std::shared_ptr<const TrainedModel> teacher;
  if (!ssl.shared) teacher = std::make_shared<TrainedModel>(train(labeled, val, config, res));

  TrainConfig student_config = config;
  if (!ssl.shared) student_config.seed = config.seed + 1;
  auto model = make_model(labeled, student_config, res);

  // Unlabelled sentences as examples; their label field is unused.
  std::vector<Example> pool;
  pool.reserve(unlabeled.size());
  for (const auto& s : unlabeled.sentences()) {
    if (s.tokens.empty()) continue;
    pool.push_back(Example{model->ids(s.tokens), 0, Vector()});
  }
  if (pool.empty()) throw InvalidArgument("unlabelled corpus has no tokens");

  std::mt19937_64 rng(config.seed ^ kUnlabeledStream);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);

  BatchHook hook;
  if (ssl.beta > 0.0) {
    hook = [&](Model& student, std::size_t) {
      double sum = 0.0;
      for (int r = 0; r < ssl.interleave; ++r) {
        std::vector<Example> batch;
        while (batch.size() < bs) {
          if (cursor >= order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
          }
          batch.push_back(pool[order[cursor++]]);
        }
        const Model& t = teacher ? *teacher->model : student;
        sum += unlabeled_step(student, t, batch, ssl, student_config, rng);
      }
      return sum / ssl.interleave;
    };
  }
  auto result = fit(model, make_examples(*model, labeled), make_examples(*model, val), student_config, hook);
  spdlog::debug("ssl {} beta {}: best epoch {}", to_string(ssl.kind), ssl.beta, result.best_epoch);
  return result;
}

}  // namespace ordspec
