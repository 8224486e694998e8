#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedplat/model/tensor.hpp"
#include "fedplat/util/json_reader.hpp"

namespace fedplat::model {

struct Dataset {
  Matrix features;
  std::vector<double> labels;  // 0.0 or 1.0
  std::vector<std::string> feature_names;
  std::size_t n_positive = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t n_features() const { return features.cols; }

  // Rows in the given order.
  Dataset subset(const std::vector<std::size_t>& rows) const;
  static Dataset concat(const std::vector<const Dataset*>& parts);
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ColumnKind { numeric, categorical, label, ignore };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> levels;           // categorical: frozen one-hot order
  std::vector<std::string> positive_values;  // label: tokens mapped to 1
  std::vector<std::string> negative_values;  // label: tokens mapped to 0
};

// How a CSV file becomes a Dataset. Statistics, when present, are frozen
// (e.g. fitted on a training split); otherwise they are computed from the
// loaded file.
struct PreprocessSpec {
  std::vector<ColumnSpec> columns;
  std::vector<std::string> missing_tokens{"N/A", ""};
  bool standardize = true;
  std::optional<std::vector<double>> medians;  // per numeric column
  std::optional<std::vector<double>> means;
  std::optional<std::vector<double>> stddevs;

  std::size_t feature_width() const;
};

util::Json to_json(const PreprocessSpec& spec);
PreprocessSpec preprocess_spec_from_json(const util::Json& doc);

// Columns of the public stroke-prediction table; 21 features after encoding.
PreprocessSpec stroke_preprocess_spec();

// Throws DataError with a line number on malformed rows, unknown columns, or
// categorical levels not in the frozen list.
Dataset load_csv_dataset(const std::filesystem::path& path, const PreprocessSpec& spec);
Dataset parse_csv_dataset(std::string_view text, const PreprocessSpec& spec);

// The spec with imputation and standardization statistics frozen from `path`.
PreprocessSpec fit_preprocess(const std::filesystem::path& path, const PreprocessSpec& spec);

// Z-score over selected columns, fitted on one set and applied to others.
// Zero-variance columns use a divisor of 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Dataset& data);
  void apply(Dataset& data) const;
};

struct ClientShard {
  Dataset data;
  std::vector<std::size_t> rows;  // indices into the source dataset
};

// Stratified k-fold partition of a dataset. Fold f is the test set of
// cross-validation run f; the remaining rows are dealt to the clients
// stratified by label, with shard sizes differing by at most one.
class DataSplit {
 public:
  const std::vector<int>& fold_assignment() const { return fold_of_row_; }
  int k_folds() const { return k_folds_; }
  std::size_t n_clients() const { return n_clients_; }

  Dataset test_set(int fold) const;
  std::vector<ClientShard> client_shards(int fold) const;
  std::vector<std::size_t> test_rows(int fold) const;

 private:
  friend DataSplit split_dataset(const Dataset&, double, int, std::size_t, std::uint64_t);
  const Dataset* source_ = nullptr;
  std::vector<int> fold_of_row_;
  int k_folds_ = 0;
  std::size_t n_clients_ = 0;
  std::uint64_t seed_ = 0;
};

// test_fraction must equal 1/k_folds. The split keeps a pointer to `data`.
DataSplit split_dataset(const Dataset& data, double test_fraction, int k_folds,
                        std::size_t n_clients, std::uint64_t seed);

struct SynthOptions {
  double separation = 1.0;  // distance between class means, in units of sigma
};

// Two isotropic Gaussians; exactly round(n_samples * prevalence) positives.
Dataset synth_dataset(std::uint64_t seed, std::size_t n_samples, double prevalence,
                      std::size_t n_features, SynthOptions options = {});

}  // namespace fedplat::model
