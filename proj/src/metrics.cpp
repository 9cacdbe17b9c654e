#include "recognn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "recognn/common.hpp"

namespace recognn {

std::optional<double> auc_roc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("auc_roc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1) / 2.0) / (np * static_cast<double>(n_neg));
}

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("average_precision: length mismatch");
  const std::size_t n = scores.size();
  const auto total_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0) return std::nullopt;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) tp += positive[order[k]] ? 1 : 0;
    seen = j;
    double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

MetricSet compute_metrics(const Eigen::MatrixXd& predictions, const std::vector<double>& labels,
                          TaskKind task) {
  const auto n = labels.size();
  if (n == 0 || static_cast<std::size_t>(predictions.rows()) != n)
    throw std::invalid_argument("compute_metrics: need equal, non-zero lengths");
  MetricSet m;
  m.task = task;
  m.count = n;
  if (task == TaskKind::regression) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = predictions(static_cast<Eigen::Index>(i), 0) - labels[i];
      m.mae += std::abs(d);
      m.mse += d * d;
    }
    m.mae /= static_cast<double>(n);
    m.mse /= static_cast<double>(n);
    return m;
  }

  const auto k = static_cast<std::size_t>(predictions.cols());
  std::vector<std::size_t> y(n), pred(n);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<std::size_t>(std::llround(labels[i]));
    if (y[i] >= k) throw std::invalid_argument("compute_metrics: label outside probability columns");
    Eigen::Index arg;
    predictions.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    pred[i] = static_cast<std::size_t>(arg);
    correct += pred[i] == y[i];
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  auto f1_of = [&](std::size_t c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pred[i] == c && y[i] == c) ++tp;
      else if (pred[i] == c) ++fp;
      else if (y[i] == c) ++fn;
    }
    return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  };
  auto column = [&](std::size_t c, std::vector<double>& scores, std::vector<bool>& pos) {
    scores.resize(n);
    pos.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = predictions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      pos[i] = y[i] == c;
    }
  };

  std::vector<double> scores;
  std::vector<bool> pos;
  if (k == 2) {
    m.f1 = f1_of(1);
    column(1, scores, pos);
    m.auc_roc = auc_roc(scores, pos);
    m.average_precision = average_precision(scores, pos);
  } else {
    double f1 = 0.0, auc = 0.0, ap = 0.0;
    std::size_t auc_classes = 0, ap_classes = 0;
    for (std::size_t c = 0; c < k; ++c) {
      f1 += f1_of(c);
      column(c, scores, pos);
      if (auto a = auc_roc(scores, pos)) auc += *a, ++auc_classes;
      if (auto a = average_precision(scores, pos)) ap += *a, ++ap_classes;
    }
    m.f1 = f1 / static_cast<double>(k);
    if (auc_classes >= 2) m.auc_roc = auc / static_cast<double>(auc_classes);
    if (ap_classes > 0) m.average_precision = ap / static_cast<double>(ap_classes);
  }
  if (!m.auc_roc) warn("AUC undefined: only one class present among " + std::to_string(n) + " labels");
  return m;
}

std::string MetricSet::to_json() const {
  nlohmann::json j;
  j["count"] = count;
  if (task == TaskKind::classification) {
    j["task"] = "classification";
    j["accuracy"] = accuracy;
    j["auc_roc"] = auc_roc ? nlohmann::json(*auc_roc) : nlohmann::json(nullptr);
    j["f1"] = f1;
    j["average_precision"] = average_precision ? nlohmann::json(*average_precision) : nlohmann::json(nullptr);
  } else {
    j["task"] = "regression";
    j["mae"] = mae;
    j["mse"] = mse;
  }
  return j.dump(2) + "\n";
}

}  // namespace recognn
