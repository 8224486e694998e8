#include "fedplat/model/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace fedplat::model {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.features = Matrix(rows.size(), features.cols);
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = features.row(rows.at(i));
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels[i] = labels[rows[i]];
    if (out.labels[i] > 0.5) ++out.n_positive;
  }
  return out;
}

Dataset Dataset::concat(const std::vector<const Dataset*>& parts) {
  Dataset out;
  if (parts.empty()) return out;
  out.feature_names = parts.front()->feature_names;
  std::size_t rows = 0;
  for (const Dataset* p : parts) {
    if (p->features.cols != parts.front()->features.cols) {
      throw DataError("cannot concatenate datasets with different widths");
    }
    rows += p->size();
  }
  out.features = Matrix(rows, parts.front()->features.cols);
  std::size_t at = 0;
  for (const Dataset* p : parts) {
    std::copy(p->features.data.begin(), p->features.data.end(),
              out.features.data.begin() + static_cast<std::ptrdiff_t>(at * out.features.cols));
    out.labels.insert(out.labels.end(), p->labels.begin(), p->labels.end());
    out.n_positive += p->n_positive;
    at += p->size();
  }
  return out;
}

std::size_t PreprocessSpec::feature_width() const {
  std::size_t width = 0;
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::numeric) width += 1;
    if (c.kind == ColumnKind::categorical) width += c.levels.size();
  }
  return width;
}

namespace {

const char* kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::numeric:
      return "numeric";
    case ColumnKind::categorical:
      return "categorical";
    case ColumnKind::label:
      return "label";
    case ColumnKind::ignore:
      return "ignore";
  }
  return "ignore";
}

ColumnKind kind_from_name(const std::string& s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "label") return ColumnKind::label;
  if (s == "ignore") return ColumnKind::ignore;
  throw DataError("unknown column kind: " + s);
}

}  // namespace

util::Json to_json(const PreprocessSpec& spec) {
  util::Json cols = util::Json::array();
  for (const auto& c : spec.columns) {
    util::Json col{{"name", c.name}, {"kind", kind_name(c.kind)}};
    if (c.kind == ColumnKind::categorical) col["levels"] = c.levels;
    if (c.kind == ColumnKind::label) {
      col["positive_values"] = c.positive_values;
      col["negative_values"] = c.negative_values;
    }
    cols.push_back(std::move(col));
  }
  util::Json doc{{"columns", cols},
                 {"missing_tokens", spec.missing_tokens},
                 {"standardize", spec.standardize}};
  if (spec.medians) doc["medians"] = *spec.medians;
  if (spec.means) doc["means"] = *spec.means;
  if (spec.stddevs) doc["stddevs"] = *spec.stddevs;
  return doc;
}

PreprocessSpec preprocess_spec_from_json(const util::Json& doc) {
  PreprocessSpec spec;
  for (const auto& c : doc.at("columns")) {
    ColumnSpec col;
    col.name = c.at("name").get<std::string>();
    col.kind = kind_from_name(c.at("kind").get<std::string>());
    if (col.kind == ColumnKind::categorical) {
      col.levels = c.at("levels").get<std::vector<std::string>>();
      if (col.levels.empty()) throw DataError("categorical column without levels: " + col.name);
    }
    if (col.kind == ColumnKind::label) {
      col.positive_values = c.value("positive_values", std::vector<std::string>{"1"});
      col.negative_values = c.value("negative_values", std::vector<std::string>{"0"});
    }
    spec.columns.push_back(std::move(col));
  }
  spec.missing_tokens = doc.value("missing_tokens", spec.missing_tokens);
  spec.standardize = doc.value("standardize", true);
  if (doc.contains("medians")) spec.medians = doc.at("medians").get<std::vector<double>>();
  if (doc.contains("means")) spec.means = doc.at("means").get<std::vector<double>>();
  if (doc.contains("stddevs")) spec.stddevs = doc.at("stddevs").get<std::vector<double>>();
  return spec;
}

PreprocessSpec stroke_preprocess_spec() {
  PreprocessSpec spec;
  auto numeric = [](const char* n) { return ColumnSpec{n, ColumnKind::numeric, {}, {}, {}}; };
  auto categorical = [](const char* n, std::vector<std::string> levels) {
    return ColumnSpec{n, ColumnKind::categorical, std::move(levels), {}, {}};
  };
  spec.columns = {
      {"id", ColumnKind::ignore, {}, {}, {}},
      categorical("gender", {"Male", "Female", "Other"}),
      numeric("age"),
      numeric("hypertension"),
      numeric("heart_disease"),
      categorical("ever_married", {"No", "Yes"}),
      categorical("work_type", {"children", "Govt_job", "Never_worked", "Private", "Self-employed"}),
      categorical("Residence_type", {"Rural", "Urban"}),
      numeric("avg_glucose_level"),
      numeric("bmi"),
      categorical("smoking_status", {"formerly smoked", "never smoked", "smokes", "Unknown"}),
      {"stroke", ColumnKind::label, {}, {"1"}, {"0"}},
  };
  return spec;
}

namespace {

// One CSV record; double quotes may wrap fields and "" escapes a quote.
std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

namespace {

Dataset parse_impl(std::string_view text, const PreprocessSpec& spec, PreprocessSpec* fitted) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
      }
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw DataError("CSV is empty: header row required");
  const auto header = split_record(line, line_no);

  std::map<std::string, std::size_t> declared;
  for (std::size_t i = 0; i < spec.columns.size(); ++i) declared[spec.columns[i].name] = i;
  std::vector<std::size_t> spec_of_field(header.size());
  std::vector<bool> present(spec.columns.size(), false);
  for (std::size_t f = 0; f < header.size(); ++f) {
    const std::string name = trim(header[f]);
    auto it = declared.find(name);
    if (it == declared.end()) throw DataError("line 1: unknown column '" + name + "'");
    if (present[it->second]) throw DataError("line 1: duplicate column '" + name + "'");
    present[it->second] = true;
    spec_of_field[f] = it->second;
  }
  std::size_t label_col = spec.columns.size();
  for (std::size_t i = 0; i < spec.columns.size(); ++i) {
    if (!present[i]) throw DataError("line 1: declared column '" + spec.columns[i].name + "' missing");
    if (spec.columns[i].kind == ColumnKind::label) {
      if (label_col != spec.columns.size()) throw DataError("more than one label column declared");
      label_col = i;
    }
  }
  if (label_col == spec.columns.size()) throw DataError("no label column declared");

  // Feature layout in declaration order.
  std::vector<std::size_t> offset(spec.columns.size(), 0);
  std::vector<std::size_t> numeric_index(spec.columns.size(), 0);
  std::vector<std::string> names;
  std::size_t numeric_count = 0;
  for (std::size_t i = 0; i < spec.columns.size(); ++i) {
    const auto& c = spec.columns[i];
    offset[i] = names.size();
    if (c.kind == ColumnKind::numeric) {
      numeric_index[i] = numeric_count++;
      names.push_back(c.name);
    } else if (c.kind == ColumnKind::categorical) {
      for (const auto& level : c.levels) names.push_back(c.name + "=" + level);
    }
  }
  const std::size_t width = names.size();

  auto is_missing = [&](const std::string& v) {
    return std::find(spec.missing_tokens.begin(), spec.missing_tokens.end(), v) !=
           spec.missing_tokens.end();
  };

  std::vector<double> values;  // row-major, NaN marks a missing numeric
  std::vector<double> labels;
  std::vector<std::vector<double>> observed(numeric_count);
  while (next_line()) {
    const auto fields = split_record(line, line_no);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    std::vector<double> row(width, 0.0);
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const ColumnSpec& c = spec.columns[spec_of_field[f]];
      const std::string v = trim(fields[f]);
      const std::size_t col = spec_of_field[f];
      switch (c.kind) {
        case ColumnKind::ignore:
          break;
        case ColumnKind::numeric: {
          if (is_missing(v)) {
            row[offset[col]] = std::nan("");
            break;
          }
          double x = 0.0;
          const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
          if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
            throw DataError("line " + std::to_string(line_no) + ": column '" + c.name +
                            "': cannot parse '" + v + "' as a number");
          }
          row[offset[col]] = x;
          observed[numeric_index[col]].push_back(x);
          break;
        }
        case ColumnKind::categorical: {
          auto it = std::find(c.levels.begin(), c.levels.end(), v);
          if (it == c.levels.end()) {
            throw DataError("line " + std::to_string(line_no) + ": column '" + c.name +
                            "': unknown level '" + v + "'");
          }
          row[offset[col] + static_cast<std::size_t>(it - c.levels.begin())] = 1.0;
          break;
        }
        case ColumnKind::label: {
          const auto& pos = c.positive_values;
          const auto& neg = c.negative_values;
          if (std::find(pos.begin(), pos.end(), v) != pos.end()) labels.push_back(1.0);
          else if (std::find(neg.begin(), neg.end(), v) != neg.end()) labels.push_back(0.0);
          else
            throw DataError("line " + std::to_string(line_no) + ": label '" + v +
                            "' is neither positive nor negative");
          break;
        }
      }
    }
    values.insert(values.end(), row.begin(), row.end());
  }

  std::vector<double> medians(numeric_count);
  if (spec.medians) {
    if (spec.medians->size() != numeric_count) throw DataError("frozen medians have wrong length");
    medians = *spec.medians;
  } else {
    for (std::size_t j = 0; j < numeric_count; ++j) medians[j] = median_of(observed[j]);
  }
  if (fitted) fitted->medians = medians;

  Dataset out;
  out.feature_names = names;
  out.features = Matrix(labels.size(), width);
  out.features.data = std::move(values);
  out.labels = std::move(labels);
  out.n_positive = static_cast<std::size_t>(std::count(out.labels.begin(), out.labels.end(), 1.0));
  for (std::size_t i = 0; i < spec.columns.size(); ++i) {
    if (spec.columns[i].kind != ColumnKind::numeric) continue;
    for (std::size_t r = 0; r < out.size(); ++r) {
      double& x = out.features.at(r, offset[i]);
      if (std::isnan(x)) x = medians[numeric_index[i]];
    }
  }

  if (spec.standardize) {
    std::vector<double> means(numeric_count), stddevs(numeric_count);
    if (spec.means && spec.stddevs) {
      if (spec.means->size() != numeric_count || spec.stddevs->size() != numeric_count) {
        throw DataError("frozen standardization statistics have wrong length");
      }
      means = *spec.means;
      stddevs = *spec.stddevs;
    } else {
      for (std::size_t i = 0; i < spec.columns.size(); ++i) {
        if (spec.columns[i].kind != ColumnKind::numeric) continue;
        const std::size_t j = numeric_index[i];
        double sum = 0.0;
        for (std::size_t r = 0; r < out.size(); ++r) sum += out.features.at(r, offset[i]);
        means[j] = out.empty() ? 0.0 : sum / static_cast<double>(out.size());
        double sq = 0.0;
        for (std::size_t r = 0; r < out.size(); ++r) {
          const double d = out.features.at(r, offset[i]) - means[j];
          sq += d * d;
        }
        stddevs[j] = out.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(out.size()));
      }
    }
    if (fitted) {
      fitted->means = means;
      fitted->stddevs = stddevs;
    }
    for (std::size_t i = 0; i < spec.columns.size(); ++i) {
      if (spec.columns[i].kind != ColumnKind::numeric) continue;
      const std::size_t j = numeric_index[i];
      const double scale = stddevs[j] > 0.0 ? stddevs[j] : 1.0;
      for (std::size_t r = 0; r < out.size(); ++r) {
        double& x = out.features.at(r, offset[i]);
        x = (x - means[j]) / scale;
      }
    }
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

}  // namespace

Dataset parse_csv_dataset(std::string_view text, const PreprocessSpec& spec) {
  return parse_impl(text, spec, nullptr);
}

Dataset load_csv_dataset(const std::filesystem::path& path, const PreprocessSpec& spec) {
  return parse_impl(read_text(path), spec, nullptr);
}

PreprocessSpec fit_preprocess(const std::filesystem::path& path, const PreprocessSpec& spec) {
  PreprocessSpec fitted = spec;
  parse_impl(read_text(path), spec, &fitted);
  return fitted;
}

Standardizer Standardizer::fit(const Dataset& data) {
  Standardizer s;
  const std::size_t cols = data.n_features();
  s.mean.assign(cols, 0.0);
  s.scale.assign(cols, 1.0);
  if (data.empty()) return s;
  const double n = static_cast<double>(data.size());
  for (std::size_t c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) sum += data.features.at(r, c);
    s.mean[c] = sum / n;
    double sq = 0.0;
    for (std::size_t r = 0; r < data.size(); ++r) {
      const double d = data.features.at(r, c) - s.mean[c];
      sq += d * d;
    }
    const double sd = std::sqrt(sq / n);
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Dataset& data) const {
  if (mean.size() != data.n_features()) throw DataError("standardizer width mismatch");
  for (std::size_t r = 0; r < data.size(); ++r) {
    auto row = data.features.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
}

DataSplit split_dataset(const Dataset& data, double test_fraction, int k_folds,
                        std::size_t n_clients, std::uint64_t seed) {
  if (k_folds < 2) throw DataError("k_folds must be >= 2");
  if (n_clients < 1) throw DataError("n_clients must be >= 1");
  if (std::abs(test_fraction - 1.0 / k_folds) > 1e-9) {
    throw DataError("test_fraction must equal 1/k_folds (each fold is one test set)");
  }
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data.labels[i] > 0.5 ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(k_folds)) {
    throw DataError("fewer positive samples (" + std::to_string(pos.size()) + ") than folds (" +
                    std::to_string(k_folds) + ")");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  DataSplit split;
  split.source_ = &data;
  split.k_folds_ = k_folds;
  split.n_clients_ = n_clients;
  split.seed_ = seed;
  split.fold_of_row_.assign(data.size(), 0);
  std::size_t i = 0;
  for (std::size_t r : pos) split.fold_of_row_[r] = static_cast<int>(i++ % k_folds);
  for (std::size_t r : neg) split.fold_of_row_[r] = static_cast<int>(i++ % k_folds);
  return split;
}

std::vector<std::size_t> DataSplit::test_rows(int fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < fold_of_row_.size(); ++r) {
    if (fold_of_row_[r] == fold) rows.push_back(r);
  }
  return rows;
}

Dataset DataSplit::test_set(int fold) const { return source_->subset(test_rows(fold)); }

std::vector<ClientShard> DataSplit::client_shards(int fold) const {
  if (fold < 0 || fold >= k_folds_) throw DataError("fold out of range");
  std::vector<std::size_t> pos, neg;
  for (std::size_t r = 0; r < fold_of_row_.size(); ++r) {
    if (fold_of_row_[r] == fold) continue;
    (source_->labels[r] > 0.5 ? pos : neg).push_back(r);
  }
  std::mt19937_64 rng(seed_ ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(fold + 1)));
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);

  std::vector<ClientShard> shards(n_clients_);
  std::size_t i = 0;
  for (std::size_t r : pos) shards[i++ % n_clients_].rows.push_back(r);
  for (std::size_t r : neg) shards[i++ % n_clients_].rows.push_back(r);
  for (auto& s : shards) s.data = source_->subset(s.rows);
  return shards;
}

Dataset synth_dataset(std::uint64_t seed, std::size_t n_samples, double prevalence,
                      std::size_t n_features, SynthOptions options) {
  if (!(prevalence > 0.0 && prevalence <= 0.5)) {
    throw DataError("prevalence must be in (0, 0.5]");
  }
  if (n_features == 0) throw DataError("n_features must be >= 1");
  const auto n_pos = static_cast<std::size_t>(std::llround(static_cast<double>(n_samples) * prevalence));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double shift = options.separation / std::sqrt(static_cast<double>(n_features));

  std::vector<double> labels(n_samples, 0.0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1.0);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset out;
  out.features = Matrix(n_samples, n_features);
  for (std::size_t r = 0; r < n_samples; ++r) {
    for (std::size_t c = 0; c < n_features; ++c) {
      out.features.at(r, c) = noise(rng) + (labels[r] > 0.5 ? shift : 0.0);
    }
  }
  out.labels = std::move(labels);
  out.n_positive = n_pos;
  for (std::size_t c = 0; c < n_features; ++c) out.feature_names.push_back("x" + std::to_string(c));
  return out;
}

}  // namespace fedplat::model
