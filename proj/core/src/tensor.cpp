#include "medsum/tensor.hpp"

#include <cmath>
#include <sstream>

namespace medsum {

int shape_size(const std::vector<int>& shape) {
  if (shape.empty()) throw ShapeMismatch("tensor shape must not be empty");
  long long n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeMismatch("tensor dimensions must be positive");
    n *= d;
  }
  return static_cast<int>(n);
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
  const int n = shape_size(shape);
  values.assign(static_cast<std::size_t>(n), 0.0);
  grad.assign(static_cast<std::size_t>(n), 0.0);
}

Tensor::Tensor(std::vector<int> shape_in, std::vector<real> values_in)
    : shape(std::move(shape_in)), values(std::move(values_in)) {
  const int n = shape_size(shape);
  if (static_cast<int>(values.size()) != n) {
    throw ShapeMismatch("value count " + std::to_string(values.size()) +
                        " does not match shape " + shape_str());
  }
  grad.assign(static_cast<std::size_t>(n), 0.0);
}

void Tensor::zero_grad() { grad.assign(grad.size(), 0.0); }

bool Tensor::all_finite() const {
  for (real v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

TensorRef make_tensor(std::vector<int> shape) {
  return std::make_shared<Tensor>(std::move(shape));
}

TensorRef make_tensor(std::vector<int> shape, std::vector<real> values) {
  return std::make_shared<Tensor>(std::move(shape), std::move(values));
}

TensorRef make_vector(std::vector<real> values) {
  std::vector<int> shape{static_cast<int>(values.size())};
  return std::make_shared<Tensor>(std::move(shape), std::move(values));
}

TensorRef make_scalar(real v) { return make_tensor({1}, {v}); }

}  // namespace medsum
