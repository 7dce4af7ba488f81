// SPDX-License-Identifier: Apache-2.0
//
// Cross-view semi-supervision. On unlabelled sentences a teacher sees the full
// view and a student sees a restricted view (word dropout, zeroed context);
// the student is pulled toward the teacher's output by a consensus loss.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ordspec/trainer.hpp"

namespace ordspec {

enum class ConsensusKind { mse, kld, emd };

std::string to_string(ConsensusKind kind);
ConsensusKind parse_consensus_kind(const std::string& name);

struct SslConfig {
  ConsensusKind kind = ConsensusKind::emd;
  double beta = 1.0;
  double word_dropout = 0.25;
  /// Unlabelled batches per labelled batch.
  int interleave = 1;
  /// Norm order of the cumulative-mass distance.
  int l = 2;
  /// Teacher and student share parameters; otherwise a separately trained
  /// teacher stays frozen.
  bool shared = true;

  void validate() const;
};

struct StudentView {
  std::vector<std::string> tokens;
  diff::Vector context;
};

/// Positions kept by word dropout; never empty for a non-empty sentence.
std::vector<std::size_t> word_dropout_keep(std::size_t n, double rate, std::mt19937_64& rng);
StudentView student_view(const std::vector<std::string>& tokens, const diff::Vector& context,
                         double dropout_rate, std::uint64_t seed);

/// (1/K)^(1/l) * || cmf(q1) - cmf(q2) ||_l
double emd(const diff::Vector& q1, const diff::Vector& q2, int l = 2);
/// KL(p || q) = sum p log(p / q), with 0 log 0 = 0.
double kl_divergence(const diff::Vector& p, const diff::Vector& q);
double consensus_loss(const diff::Vector& q_teacher, double fx_teacher, const diff::Vector& q_student,
                      double fx_student, ConsensusKind kind, int l = 2);

/// Graph form: teacher outputs enter as constants.
diff::Var emd(diff::Var q_student, const diff::Vector& q_teacher, int l = 2);
diff::Var consensus_loss(const HeadOutput& student, const diff::Vector& q_teacher, double fx_teacher,
                         ConsensusKind kind, int l = 2);

/// One unlabelled update on a batch: the teacher's full-view outputs are
/// computed without a backward pass, then beta * mean consensus loss is
/// minimised for the student. Returns the mean consensus loss.
double unlabeled_step(Model& student, const Model& teacher, const std::vector<Example>& batch,
                      const SslConfig& ssl, const TrainConfig& config, std::mt19937_64& rng);

/// Supervised training on `labeled` interleaved with consensus updates on
/// `unlabeled`. With beta = 0 this is exactly train(labeled, val, config)
/// with `unlabeled` added to the vocabulary.
TrainedModel ssl_train(const Corpus& labeled, const Corpus& unlabeled, const Corpus& val,
                       const TrainConfig& config, const SslConfig& ssl,
                       const TrainResources& resources = {});

}  // namespace ordspec
