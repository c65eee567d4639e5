#pragma once

#include <functional>
#include <unordered_set>
#include <vector>

#include "medsum/tensor.hpp"

namespace medsum {

// Reverse-mode tape. Each op computes its output eagerly, checks it for
// non-finite values and records a closure that propagates adjoints from the
// output's grad buffer into the inputs' grad buffers. backward() replays the
// closures in exact reverse execution order. Gradients accumulate additively
// until the owner zeroes them.
//
// A tape belongs to one logical computation (one loss, one decode); tensors
// created as parameters live outside and may appear on many tapes over time.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // out[i] = sum_j W[i,j] * x[j] + b[i]
  TensorRef affine(const TensorRef& w, const TensorRef& x, const TensorRef& b);
  // out[i] = sum_j A[i,j] * x[j]
  TensorRef matvec(const TensorRef& a, const TensorRef& x);
  // out = A * B, shapes [m,k] x [k,n]
  TensorRef matmul(const TensorRef& a, const TensorRef& b);
  // out = A * B^T, shapes [m,k] x [n,k]
  TensorRef matmul_nt(const TensorRef& a, const TensorRef& b);

  TensorRef add(const TensorRef& a, const TensorRef& b);
  TensorRef mul_elem(const TensorRef& a, const TensorRef& b);
  TensorRef min_elem(const TensorRef& a, const TensorRef& b);
  TensorRef scale(const TensorRef& x, real c);
  TensorRef one_minus(const TensorRef& x);
  TensorRef tanh_elem(const TensorRef& x);
  TensorRef sigmoid_elem(const TensorRef& x);

  // Stable softmax over a vector (max subtraction). Throws NonFinite if the
  // input already contains NaN/Inf.
  TensorRef softmax(const TensorRef& x);
  // Softmax independently over each row of a matrix.
  TensorRef row_softmax(const TensorRef& m);

  // -log(max(probs[target], 1e-12)); scalar output.
  TensorRef cross_entropy(const TensorRef& probs, int target);
  // sum_i p[i] * (log p[i] - log max(q[i], 1e-12)) for a constant reference
  // distribution p; gradient flows into q only.
  TensorRef kl_from_const(const std::vector<real>& p, const TensorRef& q);

  // M + row-broadcast of v: out[i,:] = M[i,:] + v
  TensorRef add_rowvec(const TensorRef& m, const TensorRef& v);
  // out[i,j] = M[i,j] + c[i] * w[j]
  TensorRef add_outer(const TensorRef& m, const TensorRef& c, const TensorRef& w);

  // Row gather from an embedding matrix; ids validated against rows(E).
  TensorRef gather_rows(const TensorRef& e, const std::vector<int>& ids);
  TensorRef row(const TensorRef& m, int i);
  TensorRef mean_rows(const TensorRef& m);
  // sum_i alpha[i] * M[i,:]
  TensorRef weighted_rows(const TensorRef& m, const TensorRef& alpha);

  TensorRef concat(const std::vector<TensorRef>& parts);
  TensorRef sum(const TensorRef& x);
  // Elementwise sum of same-shaped tensors (used to fold per-step losses).
  TensorRef add_n(const std::vector<TensorRef>& xs);

  // Leaf registered on this tape with no producing op (constants, coverage
  // seeds). Gradients still accumulate into it so it can be inspected.
  TensorRef leaf(std::vector<int> shape);
  TensorRef leaf(std::vector<int> shape, std::vector<real> values);

  // Seeds loss->grad with 1 and replays all recorded ops backwards. The loss
  // must be a scalar produced on this tape (DetachedTensor otherwise).
  void backward(const TensorRef& loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::function<void()> back;
  };

  TensorRef record(TensorRef out, std::function<void()> back, const char* op);
  void note_output(const TensorRef& t) {
    outputs_.insert(t.get());
    owned_.push_back(t);
  }

  std::vector<Node> nodes_;
  std::unordered_set<const Tensor*> outputs_;
  std::vector<TensorRef> owned_;
};

}  // namespace medsum
