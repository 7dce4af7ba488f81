// SPDX-License-Identifier: Apache-2.0
//
// Ordinal output heads. Each distributional head produces a categorical
// distribution q over classes 1..K and decodes the prediction as its
// expectation. Binomial and Poisson heads derive q from a one-parameter pmf
// sharpened by an input-conditioned temperature; the Gaussian head fits q to a
// discretised truncated normal centred on the gold class; the categorical head
// fits q to the one-hot class. All distributional heads train on
//   alpha * (f(x) - y)^2 + CE(target, q).

#pragma once

#include <optional>
#include <random>
#include <string>

#include "ordspec/diffcore.hpp"

namespace ordspec {

enum class HeadKind { binomial, poisson, gauss, categorical, regression_l2, regression_l1, classification };

/// Class bins for the Gaussian target: literal (k-1, k] or centred (k-1/2, k+1/2].
enum class BinMode { literal, centered };
/// What the temperature softmax sees for binomial/poisson heads.
enum class PmfFeed { log_mass, raw_mass };

struct HeadConfig {
  HeadKind kind = HeadKind::gauss;
  int K = 7;
  double alpha = 0.5;
  double sigma = 1.0;
  BinMode bins = BinMode::literal;
  PmfFeed feed = PmfFeed::log_mass;

  void validate() const;
};

bool is_distributional(HeadKind kind);  // binomial, poisson, gauss, categorical
bool emits_distribution(HeadKind kind);  // the above plus classification
std::string to_string(HeadKind kind);
/// Accepts canonical names and the CLI aliases reg, reg-l1, class.
HeadKind parse_head_kind(const std::string& name);
std::string to_string(BinMode mode);
BinMode parse_bin_mode(const std::string& name);

struct Prediction {
  std::optional<diff::Vector> q;
  double value = 0.0;
};

// ---- value-level operations -------------------------------------------------

/// C(K-1,k) p^k (1-p)^(K-1-k) for k = 0..K-1.
diff::Vector binomial_masses(double p, int K);
/// lambda^k e^-lambda / k! for k = 0..K-1 (not renormalised).
diff::Vector poisson_masses(double lambda, int K);
/// softmax(phi / softplus(tau_raw)).
diff::Vector temperature_softmax(const diff::Vector& phi, double tau_raw);
/// Discretised N(y, sigma^2) over the class bins, renormalised over the support.
diff::Vector gaussian_target(int y, double sigma, int K, BinMode bins = BinMode::literal);
/// sum_k q_k * k over classes 1..K.
double expectation(const diff::Vector& q);
diff::Vector class_values(int K);
diff::Vector one_hot(int y, int K);
/// Training target for distributional heads (one-hot, or Gaussian for gauss).
diff::Vector head_target(int y, const HeadConfig& config);
/// Value-level joint loss; regression/classification kinds use their baseline
/// losses with alpha ignored.
double joint_loss(const diff::Vector& q, double fx, int y, const HeadConfig& config);

// ---- graph-level heads --------------------------------------------------------

struct HeadOutput {
  diff::Var q;      // K x 1, absent for regression heads
  diff::Var log_q;  // K x 1, absent for regression heads
  diff::Var value;  // 1x1 f(x) (raw output for regression heads)
  diff::Var phi;    // pre-softmax pmf feed for binomial/poisson heads
  bool has_q() const { return q.valid(); }
};

/// Log pmf of Binomial(K-1, p), log clamped at 1e-12, as a K x 1 node of p (1x1).
diff::Var binomial_log_masses(diff::Var p, int K);
/// Log pmf of Poisson(lambda) on 0..K-1, log clamped at 1e-12.
diff::Var poisson_log_masses(diff::Var lambda, int K);

void init_head_params(diff::ParameterStore& params, const HeadConfig& config, int input_dim,
                      std::mt19937_64& rng);
HeadOutput head_forward(diff::Tape& tape, diff::Var h, const HeadConfig& config);
diff::Var head_loss(const HeadOutput& out, int y, const HeadConfig& config);
/// Decoded prediction: expectation, argmax class, or clamped regression output.
Prediction decode(const HeadOutput& out, const HeadConfig& config);

}  // namespace ordspec
