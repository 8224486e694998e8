#include "fedplat/util/json_reader.hpp"

namespace fedplat::util {

Json to_json(const std::vector<FieldError>& errors) {
  Json out = Json::array();
  for (const auto& e : errors) out.push_back({{"path", e.path}, {"message", e.message}});
  return out;
}

std::vector<FieldError> field_errors_from_json(const Json& doc) {
  std::vector<FieldError> out;
  if (!doc.is_array()) return out;
  for (const auto& e : doc) {
    out.push_back({e.value("path", std::string{}), e.value("message", std::string{})});
  }
  return out;
}

namespace {
std::string summarize(const std::vector<FieldError>& errors) {
  std::string text = "validation failed";
  for (const auto& e : errors) text += "; " + e.path + ": " + e.message;
  return text;
}
}  // namespace

ValidationError::ValidationError(std::vector<FieldError> errors)
    : std::runtime_error(summarize(errors)), errors_(std::move(errors)) {}

ObjectReader::ObjectReader(const Json& doc, std::string path,
                           std::vector<FieldError>& errors)
    : doc_(doc), path_(std::move(path)), errors_(errors), is_object_(doc.is_object()) {
  if (!is_object_) errors_.push_back({path_, "expected an object"});
}

bool ObjectReader::has(const std::string& key) const {
  return is_object_ && doc_.contains(key);
}

const Json* ObjectReader::field(const std::string& key, bool required) {
  seen_.insert(key);
  if (!is_object_) return nullptr;
  auto it = doc_.find(key);
  if (it == doc_.end() || it->is_null()) {
    if (required) errors_.push_back({path_of(key), "required field is missing"});
    return nullptr;
  }
  return &*it;
}

std::optional<long long> ObjectReader::integer(const std::string& key, bool required) {
  const Json* v = field(key, required);
  if (!v) return std::nullopt;
  if (!v->is_number_integer()) {
    fail(key, "expected an integer");
    return std::nullopt;
  }
  return v->get<long long>();
}

std::optional<double> ObjectReader::number(const std::string& key, bool required) {
  const Json* v = field(key, required);
  if (!v) return std::nullopt;
  if (!v->is_number()) {
    fail(key, "expected a number");
    return std::nullopt;
  }
  return v->get<double>();
}

std::optional<bool> ObjectReader::boolean(const std::string& key, bool required) {
  const Json* v = field(key, required);
  if (!v) return std::nullopt;
  if (!v->is_boolean()) {
    fail(key, "expected a boolean");
    return std::nullopt;
  }
  return v->get<bool>();
}

std::optional<std::string> ObjectReader::string(const std::string& key, bool required) {
  const Json* v = field(key, required);
  if (!v) return std::nullopt;
  if (!v->is_string()) {
    fail(key, "expected a string");
    return std::nullopt;
  }
  return v->get<std::string>();
}

void ObjectReader::fail(const std::string& key, const std::string& message) {
  errors_.push_back({path_of(key), message});
}

void ObjectReader::finish() {
  if (!is_object_) return;
  for (auto it = doc_.begin(); it != doc_.end(); ++it) {
    if (!seen_.count(it.key())) errors_.push_back({path_of(it.key()), "unknown field"});
  }
}

}  // namespace fedplat::util
