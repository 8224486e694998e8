#include "fedplat/cn/data_loader.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fedplat::cn {

StaticDataLoader::StaticDataLoader(model::Dataset train, model::Dataset eval)
    : train_(std::move(train)), eval_(std::move(eval)) {}

const model::Dataset& StaticDataLoader::train_data() {
  if (train_.empty()) throw model::DataError("no training data configured");
  return train_;
}

const model::Dataset& StaticDataLoader::eval_data() {
  if (eval_.empty()) throw model::DataError("no evaluation data configured");
  return eval_;
}

std::pair<model::Dataset, model::Dataset> stratified_holdout(const model::Dataset& data, double fraction,
                                                             std::uint64_t seed) {
  if (fraction < 0.0 || fraction >= 1.0) throw model::DataError("eval_fraction must be in [0, 1)");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data.labels[i] > 0.5 ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep, hold;
  for (auto* group : {&neg, &pos}) {
    std::shuffle(group->begin(), group->end(), rng);
    const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(group->size())));
    hold.insert(hold.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(n_hold));
    keep.insert(keep.end(), group->begin() + static_cast<std::ptrdiff_t>(n_hold), group->end());
  }
  std::sort(keep.begin(), keep.end());
  std::sort(hold.begin(), hold.end());
  return {data.subset(keep), data.subset(hold)};
}

DataLoaderSpec data_loader_spec_from_json(const util::Json& doc) {
  if (!doc.is_object()) throw model::DataError("data loader: expected an object");
  DataLoaderSpec spec;
  const std::string kind = doc.value("kind", "");
  if (kind == "csv") {
    spec.kind = LoaderKind::csv;
    if (!doc.contains("path")) throw model::DataError("data loader: csv needs a path");
    spec.path = doc.at("path").get<std::string>();
    if (doc.contains("eval_path")) spec.eval_path = doc.at("eval_path").get<std::string>();
    if (doc.contains("preprocess")) {
      const auto& p = doc.at("preprocess");
      if (p.is_string()) {
        if (p.get<std::string>() != "stroke") throw model::DataError("data loader: unknown preprocess preset");
      } else {
        spec.preprocess = model::preprocess_spec_from_json(p);
      }
    }
  } else if (kind == "synthetic") {
    spec.kind = LoaderKind::synthetic;
    spec.n_samples = doc.value("n_samples", spec.n_samples);
    spec.prevalence = doc.value("prevalence", spec.prevalence);
    spec.n_features = doc.value("n_features", spec.n_features);
    spec.separation = doc.value("separation", spec.separation);
  } else {
    throw model::DataError("data loader: kind must be csv or synthetic");
  }
  spec.eval_fraction = doc.value("eval_fraction", spec.eval_fraction);
  spec.seed = doc.value("seed", spec.seed);
  spec.evaluation_only = doc.value("evaluation_only", spec.evaluation_only);
  return spec;
}

std::shared_ptr<DataLoader> make_data_loader(const DataLoaderSpec& spec) {
  model::Dataset source;
  std::optional<model::Dataset> eval;
  if (spec.kind == LoaderKind::csv) {
    model::PreprocessSpec pre = spec.preprocess;
    if (spec.eval_path) {
      pre = model::fit_preprocess(spec.path, pre);
      source = model::load_csv_dataset(spec.path, pre);
      eval = model::load_csv_dataset(*spec.eval_path, pre);
    } else {
      source = model::load_csv_dataset(spec.path, pre);
    }
  } else {
    source = model::synth_dataset(spec.seed, spec.n_samples, spec.prevalence, spec.n_features,
                                  {spec.separation});
  }
  if (source.empty()) throw model::DataError("data loader: no rows loaded");
  if (eval) {
    if (spec.evaluation_only) return std::make_shared<StaticDataLoader>(model::Dataset{}, std::move(*eval));
    return std::make_shared<StaticDataLoader>(std::move(source), std::move(*eval));
  }
  if (spec.evaluation_only) return std::make_shared<StaticDataLoader>(model::Dataset{}, std::move(source));
  if (spec.eval_fraction == 0.0) {
    model::Dataset copy = source;
    return std::make_shared<StaticDataLoader>(std::move(source), std::move(copy));
  }
  auto [train, holdout] = stratified_holdout(source, spec.eval_fraction, spec.seed);
  return std::make_shared<StaticDataLoader>(std::move(train), std::move(holdout));
}

}  // namespace fedplat::cn
