// SPDX-License-Identifier: Apache-2.0
#include "ordspec/heads.hpp"

#include <algorithm>
#include <cmath>

#include "ordspec/errors.hpp"

namespace ordspec {

using diff::Matrix;
using diff::Var;
using diff::Vector;

namespace {

constexpr double kMassFloor = 1e-12;

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double softplus_value(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Vector softmax_of(const Vector& x) {
  Vector e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

void HeadConfig::validate() const {
  if (K < 2) throw InvalidArgument("K must be >= 2");
  if (!(alpha >= 0.0)) throw InvalidArgument("alpha must be >= 0");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
}

bool is_distributional(HeadKind kind) {
  return kind == HeadKind::binomial || kind == HeadKind::poisson || kind == HeadKind::gauss ||
         kind == HeadKind::categorical;
}

bool emits_distribution(HeadKind kind) {
  return is_distributional(kind) || kind == HeadKind::classification;
}

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::binomial: return "binomial";
    case HeadKind::poisson: return "poisson";
    case HeadKind::gauss: return "gauss";
    case HeadKind::categorical: return "categorical";
    case HeadKind::regression_l2: return "reg";
    case HeadKind::regression_l1: return "reg-l1";
    case HeadKind::classification: return "class";
  }
  return "?";
}

HeadKind parse_head_kind(const std::string& name) {
  if (name == "binomial") return HeadKind::binomial;
  if (name == "poisson") return HeadKind::poisson;
  if (name == "gauss") return HeadKind::gauss;
  if (name == "categorical") return HeadKind::categorical;
  if (name == "reg" || name == "regression_l2") return HeadKind::regression_l2;
  if (name == "reg-l1" || name == "regression_l1") return HeadKind::regression_l1;
  if (name == "class" || name == "classification") return HeadKind::classification;
  throw InvalidArgument("unknown head kind " + name);
}

std::string to_string(BinMode mode) { return mode == BinMode::literal ? "literal" : "centered"; }

BinMode parse_bin_mode(const std::string& name) {
  if (name == "literal") return BinMode::literal;
  if (name == "centered") return BinMode::centered;
  throw InvalidArgument("unknown bin mode " + name);
}

Vector binomial_masses(double p, int K) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("binomial p must lie in [0,1]");
  if (K < 2) throw InvalidArgument("K must be >= 2");
  Vector m(K);
  for (int k = 0; k < K; ++k)
    m(k) = std::exp(log_choose(K - 1, k)) * std::pow(p, k) * std::pow(1.0 - p, K - 1 - k);
  return m;
}

Vector poisson_masses(double lambda, int K) {
  if (!std::isfinite(lambda)) throw InvalidArgument("poisson rate must be finite");
  if (!(lambda > 0.0)) throw InvalidArgument("poisson rate must be positive");
  if (K < 2) throw InvalidArgument("K must be >= 2");
  Vector m(K);
  for (int k = 0; k < K; ++k) m(k) = std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
  return m;
}

Vector temperature_softmax(const Vector& phi, double tau_raw) {
  if (!phi.allFinite() || !std::isfinite(tau_raw))
    throw InvalidArgument("temperature_softmax: non-finite input");
  const double tau = softplus_value(tau_raw);
  return softmax_of(phi / tau);
}

Vector gaussian_target(int y, double sigma, int K, BinMode bins) {
  if (K < 2) throw InvalidArgument("K must be >= 2");
  if (y < 1 || y > K) throw InvalidArgument("gold class " + std::to_string(y) + " outside 1..K");
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be > 0");
  const double mu = y;
  const double scale = sigma * std::sqrt(2.0);
  const double offset = bins == BinMode::literal ? 0.0 : 0.5;
  Vector m(K);
  for (int k = 1; k <= K; ++k) {
    const double hi = k + offset, lo = k - 1 + offset;
    m(k - 1) = 0.5 * (std::erf((hi - mu) / scale) - std::erf((lo - mu) / scale));
  }
  return m / m.sum();
}

Vector class_values(int K) { return Vector::LinSpaced(K, 1.0, static_cast<double>(K)); }

double expectation(const Vector& q) { return q.dot(class_values(static_cast<int>(q.size()))); }

Vector one_hot(int y, int K) {
  if (y < 1 || y > K) throw InvalidArgument("gold class " + std::to_string(y) + " outside 1..K");
  Vector t = Vector::Zero(K);
  t(y - 1) = 1.0;
  return t;
}

Vector head_target(int y, const HeadConfig& config) {
  return config.kind == HeadKind::gauss ? gaussian_target(y, config.sigma, config.K, config.bins)
                                        : one_hot(y, config.K);
}

double joint_loss(const Vector& q, double fx, int y, const HeadConfig& config) {
  config.validate();
  auto cross_entropy = [](const Vector& target, const Vector& dist) {
    return -(target.array() * dist.array().max(kMassFloor).log()).sum();
  };
  switch (config.kind) {
    case HeadKind::regression_l2: return (fx - y) * (fx - y);
    case HeadKind::regression_l1: return std::abs(fx - y);
    case HeadKind::classification: return cross_entropy(one_hot(y, config.K), q);
    default: break;
  }
  if (q.size() != config.K) throw InvalidArgument("joint_loss: q has the wrong length");
  const double squared = (fx - y) * (fx - y);
  return config.alpha * squared + cross_entropy(head_target(y, config), q);
}

Var binomial_log_masses(Var p, int K) {
  const double pv = p.scalar();
  const double lp = std::log(std::max(pv, kMassFloor));
  const double l1p = std::log(std::max(1.0 - pv, kMassFloor));
  const double floor = std::log(kMassFloor);
  Matrix out(K, 1);
  for (int k = 0; k < K; ++k)
    out(k, 0) = std::max(log_choose(K - 1, k) + k * lp + (K - 1 - k) * l1p, floor);
  const std::size_t pi = p.index();
  return p.tape().record(std::move(out), [pi, K, floor](diff::Tape& tape, std::size_t self) {
    const double pv = tape.value(pi)(0, 0);
    const Matrix& phi = tape.value(self);
    const Matrix& g = tape.grad(self);
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      if (phi(k, 0) <= floor) continue;
      double d = 0.0;
      if (pv > kMassFloor) d += k / pv;
      if (1.0 - pv > kMassFloor) d -= (K - 1 - k) / (1.0 - pv);
      acc += g(k, 0) * d;
    }
    tape.grad_ref(pi)(0, 0) += acc;
  });
}

Var poisson_log_masses(Var lambda, int K) {
  const double lv = lambda.scalar();
  if (!std::isfinite(lv)) throw InvalidArgument("poisson rate must be finite");
  const double ll = std::log(std::max(lv, kMassFloor));
  const double floor = std::log(kMassFloor);
  Matrix out(K, 1);
  for (int k = 0; k < K; ++k) out(k, 0) = std::max(k * ll - lv - std::lgamma(k + 1.0), floor);
  const std::size_t li = lambda.index();
  return lambda.tape().record(std::move(out), [li, K, floor](diff::Tape& tape, std::size_t self) {
    const double lv = tape.value(li)(0, 0);
    const Matrix& phi = tape.value(self);
    const Matrix& g = tape.grad(self);
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      if (phi(k, 0) <= floor) continue;
      acc += g(k, 0) * ((lv > kMassFloor ? k / lv : 0.0) - 1.0);
    }
    tape.grad_ref(li)(0, 0) += acc;
  });
}

void init_head_params(diff::ParameterStore& params, const HeadConfig& config, int input_dim,
                      std::mt19937_64& rng) {
  config.validate();
  const Eigen::Index in = input_dim, K = config.K;
  switch (config.kind) {
    case HeadKind::binomial:
    case HeadKind::poisson:
      params.add("head.param.W", diff::xavier_uniform(1, in, rng));
      params.add("head.param.b", Matrix::Zero(1, 1));
      params.add("head.tau.W", diff::xavier_uniform(1, in, rng));
      // softplus(log(e - 1)) = 1
      params.add("head.tau.b", Matrix::Constant(1, 1, std::log(std::exp(1.0) - 1.0)));
      break;
    case HeadKind::gauss:
    case HeadKind::categorical:
    case HeadKind::classification:
      params.add("head.W", diff::xavier_uniform(K, in, rng));
      params.add("head.b", Matrix::Zero(K, 1));
      break;
    case HeadKind::regression_l2:
    case HeadKind::regression_l1:
      params.add("head.W", diff::xavier_uniform(1, in, rng));
      params.add("head.b", Matrix::Constant(1, 1, 0.5 * (config.K + 1)));
      break;
  }
}

HeadOutput head_forward(diff::Tape& tape, Var h, const HeadConfig& config) {
  HeadOutput out;
  const Vector classes = class_values(config.K);
  auto affine = [&](const char* w, const char* b) {
    return diff::add(diff::matmul(tape.param(w), h), tape.param(b));
  };
  auto finish = [&](Var logits) {
    out.q = diff::softmax(logits);
    out.log_q = diff::log_softmax(logits);
    out.value = diff::dot_const(out.q, classes);
  };
  switch (config.kind) {
    case HeadKind::binomial:
    case HeadKind::poisson: {
      Var raw = affine("head.param.W", "head.param.b");
      Var phi = config.kind == HeadKind::binomial
                    ? binomial_log_masses(diff::sigmoid(raw), config.K)
                    : poisson_log_masses(diff::softplus(raw), config.K);
      if (config.feed == PmfFeed::raw_mass) phi = diff::exp(phi);
      out.phi = phi;
      Var tau = diff::softplus(affine("head.tau.W", "head.tau.b"));
      finish(diff::div_scalar(phi, tau));
      break;
    }
    case HeadKind::gauss:
    case HeadKind::categorical:
    case HeadKind::classification:
      finish(affine("head.W", "head.b"));
      break;
    case HeadKind::regression_l2:
    case HeadKind::regression_l1:
      out.value = affine("head.W", "head.b");
      break;
  }
  return out;
}

Var head_loss(const HeadOutput& out, int y, const HeadConfig& config) {
  switch (config.kind) {
    case HeadKind::regression_l2: return diff::squared_error(out.value, static_cast<double>(y));
    case HeadKind::regression_l1: return diff::absolute_error(out.value, static_cast<double>(y));
    case HeadKind::classification:
      return diff::scale(diff::dot_const(out.log_q, one_hot(y, config.K)), -1.0);
    default: break;
  }
  Var distributional = diff::scale(diff::dot_const(out.log_q, head_target(y, config)), -1.0);
  Var squared = diff::squared_error(out.value, static_cast<double>(y));
  return diff::add(diff::scale(squared, config.alpha), distributional);
}

Prediction decode(const HeadOutput& out, const HeadConfig& config) {
  Prediction p;
  if (out.has_q()) {
    p.q = out.q.value().col(0);
    if (config.kind == HeadKind::classification) {
      Eigen::Index best = 0;
      p.q->maxCoeff(&best);
      p.value = static_cast<double>(best + 1);
    } else {
      p.value = std::clamp(expectation(*p.q), 1.0, static_cast<double>(config.K));
    }
  } else {
    p.value = std::clamp(out.value.scalar(), 1.0, static_cast<double>(config.K));
  }
  return p;
}

}  // namespace ordspec
