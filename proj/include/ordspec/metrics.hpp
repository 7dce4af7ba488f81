// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ordspec/corpus.hpp"

namespace ordspec {

/// Mean over the gold classes present of each class's mean absolute error.
double mmae(std::span<const double> preds, std::span<const int> golds);
/// Per gold class mean absolute error (absent classes omitted).
std::map<int, double> per_class_mae(std::span<const double> preds, std::span<const int> golds);
/// Pearson correlation of average-tie ranks. Throws when either side has zero
/// rank variance.
double spearman(std::span<const double> a, std::span<const double> b);
std::vector<double> average_ranks(std::span<const double> values);

/// Token count per sentence.
std::vector<double> length_baseline(const Corpus& corpus);
/// Most frequent label in `train`, repeated for each sentence in `test`.
std::vector<double> majority_baseline(const Corpus& train, const Corpus& test);

/// Labels of a fully labelled corpus.
std::vector<int> gold_labels(const Corpus& corpus);

struct EvalRow {
  std::string head;
  std::string split;
  double mmae = 0.0;
  double rho = 0.0;  // NaN when undefined
  std::map<int, double> class_mae;
};

EvalRow make_eval_row(const std::string& head, const std::string& split,
                      std::span<const double> preds, std::span<const int> golds);
/// head,split,mmae,rho,mae_1..mae_K (blank where a class is absent).
void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows, int K = kNumClasses);

}  // namespace ordspec
