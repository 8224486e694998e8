#include "fedplat/model/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "fedplat/model/mlp.hpp"

namespace fedplat::model {

util::Json to_json(const EvalMetrics& m) {
  return {{"loss", m.loss},           {"precision", m.precision}, {"recall", m.recall},
          {"f1", m.f1},               {"auprc", m.auprc},         {"n_samples", m.n_samples},
          {"threshold_used", m.threshold_used}};
}

EvalMetrics eval_metrics_from_json(const util::Json& doc) {
  EvalMetrics m;
  m.loss = doc.at("loss").get<double>();
  m.precision = doc.at("precision").get<double>();
  m.recall = doc.at("recall").get<double>();
  m.f1 = doc.at("f1").get<double>();
  m.auprc = doc.at("auprc").get<double>();
  m.n_samples = doc.at("n_samples").get<std::size_t>();
  m.threshold_used = doc.value("threshold_used", 0.5);
  return m;
}

Confusion confusion_at(std::span<const double> scores, std::span<const double> labels,
                       double threshold) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] > 0.5;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double precision_of(const Confusion& c) {
  const std::size_t predicted = c.tp + c.fp;
  return predicted == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(predicted);
}

double recall_of(const Confusion& c) {
  const std::size_t actual = c.tp + c.fn;
  return actual == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(actual);
}

double f1_of(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

double average_precision(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  const auto total_pos = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](double y) { return y > 0.5; }));
  if (total_pos == 0) {
    throw std::invalid_argument("average precision is undefined without positive labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      if (labels[order[i]] > 0.5) ++tp;
      else ++fp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

EvalMetrics score_predictions(std::span<const double> scores, std::span<const double> labels,
                              double threshold) {
  EvalMetrics m;
  m.n_samples = scores.size();
  m.threshold_used = threshold;
  m.loss = binary_cross_entropy(scores, labels);
  const Confusion c = confusion_at(scores, labels, threshold);
  m.precision = precision_of(c);
  m.recall = recall_of(c);
  m.f1 = f1_of(m.precision, m.recall);
  const bool any_positive =
      std::any_of(labels.begin(), labels.end(), [](double y) { return y > 0.5; });
  m.auprc = any_positive ? average_precision(scores, labels) : 0.0;
  return m;
}

EvalMetrics evaluate(const ModelConfig& config, const ModelWeights& weights,
                     const Dataset& data, double threshold) {
  if (data.empty()) throw std::invalid_argument("evaluation dataset is empty");
  Rng unused(0);
  const std::vector<double> scores =
      forward(config, weights, data.features, Mode::infer, unused);
  return score_predictions(scores, data.labels, threshold);
}

}  // namespace fedplat::model
