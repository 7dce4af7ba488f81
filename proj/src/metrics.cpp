// SPDX-License-Identifier: Apache-2.0
#include "ordspec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "ordspec/errors.hpp"

namespace ordspec {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("prediction and gold lengths differ");
  if (a == 0) throw InvalidArgument("empty evaluation input");
}

}  // namespace

std::map<int, double> per_class_mae(std::span<const double> preds, std::span<const int> golds) {
  check_lengths(preds.size(), golds.size());
  std::map<int, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto& [sum, n] = acc[golds[i]];
    sum += std::abs(preds[i] - golds[i]);
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [k, v] : acc) out[k] = v.first / static_cast<double>(v.second);
  return out;
}

double mmae(std::span<const double> preds, std::span<const int> golds) {
  const auto per = per_class_mae(preds, golds);
  double total = 0.0;
  for (const auto& [k, v] : per) total += v;
  return total / static_cast<double>(per.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("spearman: lengths differ");
  if (a.size() < 2) throw InvalidArgument("spearman needs at least two observations");
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa <= 0.0 || sbb <= 0.0) throw InvalidArgument("spearman undefined: zero rank variance");
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> length_baseline(const Corpus& corpus) {
  if (corpus.empty()) throw InvalidArgument("length baseline on an empty corpus");
  std::vector<double> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.sentences()) out.push_back(static_cast<double>(s.tokens.size()));
  return out;
}

std::vector<double> majority_baseline(const Corpus& train, const Corpus& test) {
  const auto h = class_histogram(train);
  if (h.total == 0) throw InvalidArgument("majority baseline needs labelled training data");
  const auto best = std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin();
  return std::vector<double>(test.size(), static_cast<double>(best + 1));
}

std::vector<int> gold_labels(const Corpus& corpus) {
  std::vector<int> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus.sentences()) {
    if (!s.label) throw InvalidArgument("sentence " + s.id + " has no label");
    out.push_back(*s.label);
  }
  return out;
}

EvalRow make_eval_row(const std::string& head, const std::string& split,
                      std::span<const double> preds, std::span<const int> golds) {
  EvalRow row{head, split, mmae(preds, golds), std::numeric_limits<double>::quiet_NaN(),
              per_class_mae(preds, golds)};
  std::vector<double> g(golds.begin(), golds.end());
  try {
    row.rho = spearman(preds, g);
  } catch (const InvalidArgument&) {
  }
  return row;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows, int K) {
  out << "head,split,mmae,rho";
  for (int k = 1; k <= K; ++k) out << ",mae_" << k;
  out << '\n';
  for (const auto& r : rows) {
    out << r.head << ',' << r.split << ',' << fmt::format("{:.6f}", r.mmae) << ','
        << (std::isfinite(r.rho) ? fmt::format("{:.6f}", r.rho) : std::string());
    for (int k = 1; k <= K; ++k) {
      out << ',';
      if (auto it = r.class_mae.find(k); it != r.class_mae.end()) out << fmt::format("{:.6f}", it->second);
    }
    out << '\n';
  }
}

}  // namespace ordspec
