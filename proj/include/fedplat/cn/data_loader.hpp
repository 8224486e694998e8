#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "fedplat/model/dataset.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::cn {

// Source of a node's local data. Loaders may throw; the node reports the
// failure instead of crashing.
class DataLoader {
 public:
  virtual ~DataLoader() = default;
  virtual bool has_train() const = 0;
  virtual const model::Dataset& train_data() = 0;
  virtual const model::Dataset& eval_data() = 0;
};

// Fixed datasets held in memory. An empty train set means evaluation only.
class StaticDataLoader : public DataLoader {
 public:
  StaticDataLoader(model::Dataset train, model::Dataset eval);

  bool has_train() const override { return !train_.empty(); }
  const model::Dataset& train_data() override;
  const model::Dataset& eval_data() override;

 private:
  model::Dataset train_;
  model::Dataset eval_;
};

enum class LoaderKind { csv, synthetic };

struct DataLoaderSpec {
  LoaderKind kind = LoaderKind::csv;
  // csv
  std::filesystem::path path;
  std::optional<std::filesystem::path> eval_path;
  model::PreprocessSpec preprocess = model::stroke_preprocess_spec();
  // synthetic
  std::size_t n_samples = 1000;
  double prevalence = 0.05;
  std::size_t n_features = 8;
  double separation = 1.0;
  // Stratified holdout taken from the source when no eval_path is given.
  // 0 evaluates on the training data.
  double eval_fraction = 0.2;
  std::uint64_t seed = 0;
  bool evaluation_only = false;  // observers
};

// {"kind": "csv", "path": ..., "eval_path"?, "preprocess"?: "stroke" | {...},
//  "eval_fraction"?, "seed"?, "evaluation_only"?}
// {"kind": "synthetic", "n_samples", "prevalence", "n_features", "separation"?, ...}
DataLoaderSpec data_loader_spec_from_json(const util::Json& doc);

// Loads everything up front so configuration errors surface at startup.
// Throws model::DataError.
std::shared_ptr<DataLoader> make_data_loader(const DataLoaderSpec& spec);

// Per-label shuffle, then the first round(fraction * n_label) rows of each
// label go to the holdout.
std::pair<model::Dataset, model::Dataset> stratified_holdout(const model::Dataset& data, double fraction,
                                                             std::uint64_t seed);

}  // namespace fedplat::cn
