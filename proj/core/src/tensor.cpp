#include "segtrans/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace segtrans {

size_t shape_numel(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("Tensor: negative dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
  data.assign(shape_numel(shape), 0.0);
}

Tensor::Tensor(std::vector<int> shape_in, std::vector<double> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
  if (data.size() != shape_numel(shape))
    throw std::invalid_argument("Tensor: data length does not match shape");
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

std::string Tensor::shape_str() const {
  std::ostringstream ss;
  ss << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) ss << 'x';
    ss << shape[i];
  }
  ss << ']';
  return ss.str();
}

}  // namespace segtrans
