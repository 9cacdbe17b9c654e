#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "recognn/dataset.hpp"

namespace recognn {

struct MetricSet {
  TaskKind task = TaskKind::classification;
  std::size_t count = 0;
  // classification
  double accuracy = 0.0;
  std::optional<double> auc_roc;  // undefined when only one class is present
  double f1 = 0.0;
  std::optional<double> average_precision;
  // regression
  double mae = 0.0;
  double mse = 0.0;

  std::string to_json() const;
};

/// Classification: `predictions` rows are class-probability vectors and
/// labels are class indices. Regression: one column of predicted values.
MetricSet compute_metrics(const Eigen::MatrixXd& predictions, const std::vector<double>& labels,
                          TaskKind task);

/// Probability that a random positive scores above a random negative, ties
/// counted half (midrank statistic). nullopt if either class is empty.
std::optional<double> auc_roc(const std::vector<double>& scores, const std::vector<bool>& positive);

/// Area under the precision-recall step function, tied scores taken as one
/// threshold. nullopt if there are no positives.
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<bool>& positive);

}  // namespace recognn
