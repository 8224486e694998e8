#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedplat::model {

enum class DType { f32, f64 };

std::string_view dtype_name(DType dtype);
DType dtype_from_name(std::string_view name);  // throws std::invalid_argument
std::size_t dtype_size(DType dtype);

// One named parameter tensor. Values are held as f64 in memory for every
// dtype; an f32 block holds only values that are exact images of floats, so
// the wire codec can narrow them without loss.
struct TensorBlock {
  std::string name;
  std::vector<std::size_t> shape;
  DType dtype = DType::f64;
  std::vector<double> values;

  std::size_t element_count() const;
  std::span<double> span() { return values; }
  std::span<const double> span() const { return values; }
};

class StructureMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Ordered parameter blocks. Canonical order is layer order, kernel before bias.
class ModelWeights {
 public:
  ModelWeights() = default;
  explicit ModelWeights(std::vector<TensorBlock> blocks);

  const std::vector<TensorBlock>& blocks() const { return blocks_; }
  std::vector<TensorBlock>& blocks() { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }
  TensorBlock& operator[](std::size_t i) { return blocks_[i]; }
  const TensorBlock& operator[](std::size_t i) const { return blocks_[i]; }

  std::size_t parameter_count() const;

  // Names, shapes and dtypes equal, in order.
  bool same_structure(const ModelWeights& other) const;
  // Throws StructureMismatch describing the first difference.
  void require_same_structure(const ModelWeights& other, std::string_view what) const;

  ModelWeights zeros_like() const;
  void set_dtype(DType dtype);  // narrows values when switching to f32

  // Bitwise equality of every value (NaN payloads and signed zeros included).
  bool bitwise_equal(const ModelWeights& other) const;

 private:
  void check_invariants() const;
  std::vector<TensorBlock> blocks_;
};

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

}  // namespace fedplat::model
