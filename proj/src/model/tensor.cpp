#include "fedplat/model/tensor.hpp"

#include <cstring>
#include <functional>
#include <numeric>
#include <set>

namespace fedplat::model {

std::string_view dtype_name(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

DType dtype_from_name(std::string_view name) {
  if (name == "f32") return DType::f32;
  if (name == "f64") return DType::f64;
  throw std::invalid_argument("unknown dtype: " + std::string(name));
}

std::size_t dtype_size(DType dtype) { return dtype == DType::f32 ? 4 : 8; }

std::size_t TensorBlock::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

ModelWeights::ModelWeights(std::vector<TensorBlock> blocks) : blocks_(std::move(blocks)) {
  check_invariants();
}

void ModelWeights::check_invariants() const {
  std::set<std::string> names;
  for (const auto& b : blocks_) {
    if (!names.insert(b.name).second) {
      throw std::invalid_argument("duplicate tensor block name: " + b.name);
    }
    if (b.values.size() != b.element_count()) {
      throw std::invalid_argument("tensor block " + b.name +
                                  ": value count does not match shape");
    }
    if (b.dtype != blocks_.front().dtype) {
      throw std::invalid_argument("mixed dtypes within one model");
    }
  }
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.values.size();
  return n;
}

bool ModelWeights::same_structure(const ModelWeights& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.name != b.name || a.shape != b.shape || a.dtype != b.dtype) return false;
  }
  return true;
}

void ModelWeights::require_same_structure(const ModelWeights& other,
                                          std::string_view what) const {
  if (blocks_.size() != other.blocks_.size()) {
    throw StructureMismatch(std::string(what) + ": block count " +
                            std::to_string(other.blocks_.size()) + " != " +
                            std::to_string(blocks_.size()));
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i];
    const auto& b = other.blocks_[i];
    if (a.name != b.name || a.shape != b.shape || a.dtype != b.dtype) {
      throw StructureMismatch(std::string(what) + ": block " + std::to_string(i) +
                              " ('" + b.name + "') does not match '" + a.name + "'");
    }
  }
}

ModelWeights ModelWeights::zeros_like() const {
  ModelWeights out = *this;
  for (auto& b : out.blocks_) std::fill(b.values.begin(), b.values.end(), 0.0);
  return out;
}

void ModelWeights::set_dtype(DType dtype) {
  for (auto& b : blocks_) {
    b.dtype = dtype;
    if (dtype == DType::f32) {
      for (double& v : b.values) v = static_cast<double>(static_cast<float>(v));
    }
  }
}

bool ModelWeights::bitwise_equal(const ModelWeights& other) const {
  if (!same_structure(other)) return false;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& a = blocks_[i].values;
    const auto& b = other.blocks_[i].values;
    if (!a.empty() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace fedplat::model
