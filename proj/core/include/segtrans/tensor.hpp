#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace segtrans {

// Dense row-major tensor of 64-bit floats. Gradients live in a second
// Tensor owned by the Parameter or tape node, not here.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape_in);
  Tensor(std::vector<int> shape_in, std::vector<double> data_in);

  static Tensor zeros(std::vector<int> shape);
  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  size_t numel() const { return data.size(); }
  int dim(size_t axis) const { return shape[axis]; }
  size_t rank() const { return shape.size(); }
  bool is_scalar() const { return data.size() == 1; }

  double& at(size_t i) { return data[i]; }
  double at(size_t i) const { return data[i]; }
  // 2-D access; caller guarantees rank 2.
  double& at(size_t r, size_t c) { return data[r * static_cast<size_t>(shape[1]) + c]; }
  double at(size_t r, size_t c) const { return data[r * static_cast<size_t>(shape[1]) + c]; }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  std::string shape_str() const;
};

size_t shape_numel(const std::vector<int>& shape);

// A named, trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name_in, Tensor value_in)
      : name(std::move(name_in)), value(std::move(value_in)), grad(Tensor::zeros(value.shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace segtrans
