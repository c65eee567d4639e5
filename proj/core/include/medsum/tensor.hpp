#pragma once

#include <memory>
#include <string>
#include <vector>

#include "medsum/errors.hpp"

namespace medsum {

// In-memory arithmetic runs in double precision; checkpoint files store the
// parameters as little-endian 32-bit floats (see checkpoint.hpp).
using real = double;

// Dense row-major array with an accumulated-gradient buffer of the same
// shape. Plain aggregate on purpose: the tape and the model poke at values
// and grad directly.
struct Tensor {
  std::vector<int> shape;
  std::vector<real> values;
  std::vector<real> grad;

  explicit Tensor(std::vector<int> shape_in);
  Tensor(std::vector<int> shape_in, std::vector<real> values_in);

  int size() const { return static_cast<int>(values.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  bool is_scalar() const { return values.size() == 1; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }

  real& at(int i) { return values[static_cast<std::size_t>(i)]; }
  real at(int i) const { return values[static_cast<std::size_t>(i)]; }
  real& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols() + c]; }
  real at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols() + c]; }

  void zero_grad();
  bool all_finite() const;
  std::string shape_str() const;
};

using TensorRef = std::shared_ptr<Tensor>;

TensorRef make_tensor(std::vector<int> shape);
TensorRef make_tensor(std::vector<int> shape, std::vector<real> values);
TensorRef make_vector(std::vector<real> values);
TensorRef make_scalar(real v);

// Product of dimensions; throws ShapeMismatch on empty or non-positive dims.
int shape_size(const std::vector<int>& shape);

}  // namespace medsum
