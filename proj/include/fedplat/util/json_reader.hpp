#pragma once

// Field-by-field reader for JSON documents that collects every problem with
// a slash-separated path ("settings/algorithm/mu") instead of stopping at the
// first one. Unknown fields are reported by finish().

#include <nlohmann/json.hpp>

#include <initializer_list>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedplat::util {

using Json = nlohmann::json;

struct FieldError {
  std::string path;
  std::string message;

  friend bool operator==(const FieldError&, const FieldError&) = default;
};

Json to_json(const std::vector<FieldError>& errors);
std::vector<FieldError> field_errors_from_json(const Json& doc);

// Thrown by the strict from_json entry points.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

inline std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "/" + key;
}

class ObjectReader {
 public:
  ObjectReader(const Json& doc, std::string path, std::vector<FieldError>& errors);

  bool ok() const { return is_object_; }
  const std::string& path() const { return path_; }
  std::string path_of(const std::string& key) const { return join_path(path_, key); }
  bool has(const std::string& key) const;

  // Records the key as known; returns nullptr (and records an error when
  // required) if absent.
  const Json* field(const std::string& key, bool required);

  std::optional<long long> integer(const std::string& key, bool required);
  std::optional<double> number(const std::string& key, bool required);
  std::optional<bool> boolean(const std::string& key, bool required);
  std::optional<std::string> string(const std::string& key, bool required);

  template <typename Enum>
  std::optional<Enum> choice(const std::string& key, bool required,
                             std::initializer_list<std::pair<const char*, Enum>> options) {
    auto text = string(key, required);
    if (!text) return std::nullopt;
    for (const auto& [name, value] : options) {
      if (*text == name) return value;
    }
    std::string allowed;
    for (const auto& [name, value] : options) {
      allowed += allowed.empty() ? name : std::string(", ") + name;
    }
    fail(key, "unknown value '" + *text + "' (expected one of: " + allowed + ")");
    return std::nullopt;
  }

  void fail(const std::string& key, const std::string& message);
  void finish();

 private:
  const Json& doc_;
  std::string path_;
  std::vector<FieldError>& errors_;
  std::set<std::string> seen_;
  bool is_object_;
};

}  // namespace fedplat::util
