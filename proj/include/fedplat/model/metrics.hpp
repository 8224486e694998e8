#pragma once

#include <span>

#include "fedplat/model/config.hpp"
#include "fedplat/model/dataset.hpp"
#include "fedplat/model/tensor.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::model {

struct EvalMetrics {
  double loss = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auprc = 0.0;
  std::size_t n_samples = 0;
  double threshold_used = 0.5;
};

util::Json to_json(const EvalMetrics& m);
EvalMetrics eval_metrics_from_json(const util::Json& doc);

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Confusion confusion_at(std::span<const double> scores, std::span<const double> labels,
                       double threshold);

// Precision with no predicted positives is 0; recall with no positives is 0.
double precision_of(const Confusion& c);
double recall_of(const Confusion& c);
double f1_of(double precision, double recall);

// Step-wise area under the precision-recall curve. Samples are visited by
// descending score; equal scores form one threshold point.
// Throws std::invalid_argument when no label is positive.
double average_precision(std::span<const double> scores, std::span<const double> labels);

EvalMetrics score_predictions(std::span<const double> scores, std::span<const double> labels,
                              double threshold);

// Inference-mode metrics. AUPRC is 0 when the dataset has no positives.
EvalMetrics evaluate(const ModelConfig& config, const ModelWeights& weights,
                     const Dataset& data, double threshold = 0.5);

}  // namespace fedplat::model
