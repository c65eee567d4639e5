#include "medsum/tape.hpp"

#include <cmath>
#include <string>

namespace medsum {

namespace {

constexpr real kLogClamp = 1e-12;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ShapeMismatch(msg);
}

void check_input_finite(const TensorRef& t, const char* op) {
  if (!t->all_finite()) {
    throw NonFinite(std::string(op) + ": input contains NaN or Inf");
  }
}

}  // namespace

TensorRef Tape::record(TensorRef out, std::function<void()> back, const char* op) {
  if (!out->all_finite()) {
    throw NonFinite(std::string(op) + " produced a non-finite value");
  }
  note_output(out);
  nodes_.push_back(Node{std::move(back)});
  return out;
}

TensorRef Tape::leaf(std::vector<int> shape) {
  TensorRef t = make_tensor(std::move(shape));
  note_output(t);
  return t;
}

TensorRef Tape::leaf(std::vector<int> shape, std::vector<real> values) {
  TensorRef t = make_tensor(std::move(shape), std::move(values));
  note_output(t);
  return t;
}

TensorRef Tape::affine(const TensorRef& w, const TensorRef& x, const TensorRef& b) {
  require(w->is_matrix() && x->is_vector() && b->is_vector(),
          "affine expects W[mxn], x[n], b[m]");
  const int m = w->shape[0], n = w->shape[1];
  require(x->size() == n && b->size() == m,
          "affine shapes disagree: W" + w->shape_str() + " x" + x->shape_str() +
              " b" + b->shape_str());
  TensorRef out = make_tensor({m});
  for (int i = 0; i < m; ++i) {
    real acc = b->at(i);
    const real* wrow = w->values.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += wrow[j] * x->at(j);
    out->at(i) = acc;
  }
  auto back = [w, x, b, out, m, n]() {
    for (int i = 0; i < m; ++i) {
      const real g = out->grad[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      b->grad[static_cast<std::size_t>(i)] += g;
      real* wgrow = w->grad.data() + static_cast<std::size_t>(i) * n;
      const real* wrow = w->values.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        wgrow[j] += g * x->at(j);
        x->grad[static_cast<std::size_t>(j)] += g * wrow[j];
      }
    }
  };
  return record(std::move(out), std::move(back), "affine");
}

TensorRef Tape::matvec(const TensorRef& a, const TensorRef& x) {
  require(a->is_matrix() && x->is_vector(), "matvec expects A[mxn], x[n]");
  const int m = a->shape[0], n = a->shape[1];
  require(x->size() == n, "matvec shapes disagree: A" + a->shape_str() + " x" + x->shape_str());
  TensorRef out = make_tensor({m});
  for (int i = 0; i < m; ++i) {
    real acc = 0.0;
    const real* arow = a->values.data() + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) acc += arow[j] * x->at(j);
    out->at(i) = acc;
  }
  auto back = [a, x, out, m, n]() {
    for (int i = 0; i < m; ++i) {
      const real g = out->grad[static_cast<std::size_t>(i)];
      if (g == 0.0) continue;
      real* agrow = a->grad.data() + static_cast<std::size_t>(i) * n;
      const real* arow = a->values.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        agrow[j] += g * x->at(j);
        x->grad[static_cast<std::size_t>(j)] += g * arow[j];
      }
    }
  };
  return record(std::move(out), std::move(back), "matvec");
}

TensorRef Tape::matmul(const TensorRef& a, const TensorRef& b) {
  require(a->is_matrix() && b->is_matrix(), "matmul expects matrices");
  const int m = a->shape[0], k = a->shape[1];
  require(b->shape[0] == k,
          "matmul shapes disagree: " + a->shape_str() + " * " + b->shape_str());
  const int n = b->shape[1];
  TensorRef out = make_tensor({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      real acc = 0.0;
      for (int t = 0; t < k; ++t) acc += a->at(i, t) * b->at(t, j);
      out->at(i, j) = acc;
    }
  }
  auto back = [a, b, out, m, n, k]() {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        const real g = out->grad[static_cast<std::size_t>(i) * n + j];
        if (g == 0.0) continue;
        for (int t = 0; t < k; ++t) {
          a->grad[static_cast<std::size_t>(i) * k + t] += g * b->at(t, j);
          b->grad[static_cast<std::size_t>(t) * n + j] += g * a->at(i, t);
        }
      }
    }
  };
  return record(std::move(out), std::move(back), "matmul");
}

TensorRef Tape::matmul_nt(const TensorRef& a, const TensorRef& b) {
  require(a->is_matrix() && b->is_matrix(), "matmul_nt expects matrices");
  const int m = a->shape[0], k = a->shape[1];
  require(b->shape[1] == k,
          "matmul_nt shapes disagree: " + a->shape_str() + " * " + b->shape_str() + "^T");
  const int n = b->shape[0];
  TensorRef out = make_tensor({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      real acc = 0.0;
      for (int t = 0; t < k; ++t) acc += a->at(i, t) * b->at(j, t);
      out->at(i, j) = acc;
    }
  }
  auto back = [a, b, out, m, n, k]() {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        const real g = out->grad[static_cast<std::size_t>(i) * n + j];
        if (g == 0.0) continue;
        for (int t = 0; t < k; ++t) {
          a->grad[static_cast<std::size_t>(i) * k + t] += g * b->at(j, t);
          b->grad[static_cast<std::size_t>(j) * k + t] += g * a->at(i, t);
        }
      }
    }
  };
  return record(std::move(out), std::move(back), "matmul_nt");
}

TensorRef Tape::add(const TensorRef& a, const TensorRef& b) {
  require(a->shape == b->shape,
          "add shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
  TensorRef out = make_tensor(a->shape);
  for (int i = 0; i < a->size(); ++i) out->at(i) = a->at(i) + b->at(i);
  auto back = [a, b, out]() {
    for (int i = 0; i < out->size(); ++i) {
      const real g = out->grad[static_cast<std::size_t>(i)];
      a->grad[static_cast<std::size_t>(i)] += g;
      b->grad[static_cast<std::size_t>(i)] += g;
    }
  };
  return record(std::move(out), std::move(back), "add");
}

TensorRef Tape::mul_elem(const TensorRef& a, const TensorRef& b) {
  require(a->shape == b->shape,
          "mul_elem shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
  TensorRef out = make_tensor(a->shape);
  for (int i = 0; i < a->size(); ++i) out->at(i) = a->at(i) * b->at(i);
  auto back = [a, b, out]() {
    for (int i = 0; i < out->size(); ++i) {
      const real g = out->grad[static_cast<std::size_t>(i)];
      a->grad[static_cast<std::size_t>(i)] += g * b->at(i);
      b->grad[static_cast<std::size_t>(i)] += g * a->at(i);
    }
  };
  return record(std::move(out), std::move(back), "mul_elem");
}

TensorRef Tape::min_elem(const TensorRef& a, const TensorRef& b) {
  require(a->shape == b->shape,
          "min_elem shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
  TensorRef out = make_tensor(a->shape);
  for (int i = 0; i < a->size(); ++i) out->at(i) = std::min(a->at(i), b->at(i));
  // Subgradient at ties goes to the first argument.
  auto back = [a, b, out]() {
    for (int i = 0; i < out->size(); ++i) {
      const real g = out->grad[static_cast<std::size_t>(i)];
      if (a->at(i) <= b->at(i)) {
        a->grad[static_cast<std::size_t>(i)] += g;
      } else {
        b->grad[static_cast<std::size_t>(i)] += g;
      }
    }
  };
  return record(std::move(out), std::move(back), "min_elem");
}

TensorRef Tape::scale(const TensorRef& x, real c) {
  TensorRef out = make_tensor(x->shape);
  for (int i = 0; i < x->size(); ++i) out->at(i) = c * x->at(i);
  auto back = [x, out, c]() {
    for (int i = 0; i < out->size(); ++i) {
      x->grad[static_cast<std::size_t>(i)] += c * out->grad[static_cast<std::size_t>(i)];
    }
  };
  return record(std::move(out), std::move(back), "scale");
}

TensorRef Tape::one_minus(const TensorRef& x) {
  TensorRef out = make_tensor(x->shape);
  for (int i = 0; i < x->size(); ++i) out->at(i) = 1.0 - x->at(i);
  auto back = [x, out]() {
    for (int i = 0; i < out->size(); ++i) {
      x->grad[static_cast<std::size_t>(i)] -= out->grad[static_cast<std::size_t>(i)];
    }
  };
  return record(std::move(out), std::move(back), "one_minus");
}

TensorRef Tape::tanh_elem(const TensorRef& x) {
  TensorRef out = make_tensor(x->shape);
  for (int i = 0; i < x->size(); ++i) out->at(i) = std::tanh(x->at(i));
  auto back = [x, out]() {
    for (int i = 0; i < out->size(); ++i) {
      const real y = out->at(i);
      x->grad[static_cast<std::size_t>(i)] +=
          (1.0 - y * y) * out->grad[static_cast<std::size_t>(i)];
    }
  };
  return record(std::move(out), std::move(back), "tanh_elem");
}

TensorRef Tape::sigmoid_elem(const TensorRef& x) {
  TensorRef out = make_tensor(x->shape);
  for (int i = 0; i < x->size(); ++i) out->at(i) = 1.0 / (1.0 + std::exp(-x->at(i)));
  auto back = [x, out]() {
    for (int i = 0; i < out->size(); ++i) {
      const real y = out->at(i);
      x->grad[static_cast<std::size_t>(i)] +=
          y * (1.0 - y) * out->grad[static_cast<std::size_t>(i)];
    }
  };
  return record(std::move(out), std::move(back), "sigmoid_elem");
}

namespace {

// Writes softmax of src[0..n) into dst[0..n) with max subtraction.
void softmax_into(const real* src, real* dst, int n) {
  real mx = src[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, src[i]);
  real total = 0.0;
  for (int i = 0; i < n; ++i) {
    dst[i] = std::exp(src[i] - mx);
    total += dst[i];
  }
  for (int i = 0; i < n; ++i) dst[i] /= total;
}

// dx_i += y_i * (dy_i - sum_j dy_j y_j)
void softmax_back(const real* y, const real* dy, real* dx, int n) {
  real dot = 0.0;
  for (int i = 0; i < n; ++i) dot += dy[i] * y[i];
  for (int i = 0; i < n; ++i) dx[i] += y[i] * (dy[i] - dot);
}

}  // namespace

TensorRef Tape::softmax(const TensorRef& x) {
  require(x->is_vector() && x->size() >= 1, "softmax expects a nonempty vector");
  check_input_finite(x, "softmax");
  TensorRef out = make_tensor(x->shape);
  softmax_into(x->values.data(), out->values.data(), x->size());
  auto back = [x, out]() {
    softmax_back(out->values.data(), out->grad.data(), x->grad.data(), x->size());
  };
  return record(std::move(out), std::move(back), "softmax");
}

TensorRef Tape::row_softmax(const TensorRef& m) {
  require(m->is_matrix(), "row_softmax expects a matrix");
  check_input_finite(m, "row_softmax");
  const int rows = m->shape[0], cols = m->shape[1];
  TensorRef out = make_tensor(m->shape);
  for (int r = 0; r < rows; ++r) {
    softmax_into(m->values.data() + static_cast<std::size_t>(r) * cols,
                 out->values.data() + static_cast<std::size_t>(r) * cols, cols);
  }
  auto back = [m, out, rows, cols]() {
    for (int r = 0; r < rows; ++r) {
      const std::size_t off = static_cast<std::size_t>(r) * cols;
      softmax_back(out->values.data() + off, out->grad.data() + off,
                   m->grad.data() + off, cols);
    }
  };
  return record(std::move(out), std::move(back), "row_softmax");
}

TensorRef Tape::cross_entropy(const TensorRef& probs, int target) {
  require(probs->is_vector(), "cross_entropy expects a probability vector");
  if (target < 0 || target >= probs->size()) {
    throw TargetOutOfRange("cross_entropy target " + std::to_string(target) +
                           " out of range for " + probs->shape_str());
  }
  const real p = probs->at(target);
  const real clamped = std::max(p, kLogClamp);
  TensorRef out = make_scalar(-std::log(clamped));
  auto back = [probs, out, target, p, clamped]() {
    if (p > kLogClamp) {
      probs->grad[static_cast<std::size_t>(target)] += -out->grad[0] / clamped;
    }
  };
  return record(std::move(out), std::move(back), "cross_entropy");
}

TensorRef Tape::kl_from_const(const std::vector<real>& p, const TensorRef& q) {
  require(q->is_vector() && static_cast<int>(p.size()) == q->size(),
          "kl_from_const length mismatch");
  real acc = 0.0;
  for (int i = 0; i < q->size(); ++i) {
    if (p[static_cast<std::size_t>(i)] <= 0.0) continue;
    const real pi = p[static_cast<std::size_t>(i)];
    acc += pi * (std::log(pi) - std::log(std::max(q->at(i), kLogClamp)));
  }
  TensorRef out = make_scalar(acc);
  auto back = [p, q, out]() {
    for (int i = 0; i < q->size(); ++i) {
      const real pi = p[static_cast<std::size_t>(i)];
      if (pi <= 0.0) continue;
      const real qi = std::max(q->at(i), kLogClamp);
      if (q->at(i) > kLogClamp) {
        q->grad[static_cast<std::size_t>(i)] += out->grad[0] * (-pi / qi);
      }
    }
  };
  return record(std::move(out), std::move(back), "kl_from_const");
}

TensorRef Tape::add_rowvec(const TensorRef& m, const TensorRef& v) {
  require(m->is_matrix() && v->is_vector() && v->size() == m->shape[1],
          "add_rowvec shapes disagree: " + m->shape_str() + " + " + v->shape_str());
  const int rows = m->shape[0], cols = m->shape[1];
  TensorRef out = make_tensor(m->shape);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out->at(r, c) = m->at(r, c) + v->at(c);
  }
  auto back = [m, v, out, rows, cols]() {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const real g = out->grad[static_cast<std::size_t>(r) * cols + c];
        m->grad[static_cast<std::size_t>(r) * cols + c] += g;
        v->grad[static_cast<std::size_t>(c)] += g;
      }
    }
  };
  return record(std::move(out), std::move(back), "add_rowvec");
}

TensorRef Tape::add_outer(const TensorRef& m, const TensorRef& c, const TensorRef& w) {
  require(m->is_matrix() && c->is_vector() && w->is_vector() &&
              c->size() == m->shape[0] && w->size() == m->shape[1],
          "add_outer shapes disagree");
  const int rows = m->shape[0], cols = m->shape[1];
  TensorRef out = make_tensor(m->shape);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < cols; ++j) out->at(r, j) = m->at(r, j) + c->at(r) * w->at(j);
  }
  auto back = [m, c, w, out, rows, cols]() {
    for (int r = 0; r < rows; ++r) {
      for (int j = 0; j < cols; ++j) {
        const real g = out->grad[static_cast<std::size_t>(r) * cols + j];
        if (g == 0.0) continue;
        m->grad[static_cast<std::size_t>(r) * cols + j] += g;
        c->grad[static_cast<std::size_t>(r)] += g * w->at(j);
        w->grad[static_cast<std::size_t>(j)] += g * c->at(r);
      }
    }
  };
  return record(std::move(out), std::move(back), "add_outer");
}

TensorRef Tape::gather_rows(const TensorRef& e, const std::vector<int>& ids) {
  require(e->is_matrix(), "gather_rows expects a matrix");
  const int rows = e->shape[0], cols = e->shape[1];
  for (int id : ids) {
    if (id < 0 || id >= rows) {
      throw TokenOutOfRange("gather_rows id " + std::to_string(id) +
                            " out of range for " + e->shape_str());
    }
  }
  const int n = static_cast<int>(ids.size());
  require(n >= 1, "gather_rows needs at least one id");
  TensorRef out = make_tensor({n, cols});
  for (int t = 0; t < n; ++t) {
    const real* src = e->values.data() + static_cast<std::size_t>(ids[t]) * cols;
    real* dst = out->values.data() + static_cast<std::size_t>(t) * cols;
    for (int j = 0; j < cols; ++j) dst[j] = src[j];
  }
  auto back = [e, out, ids, cols]() {
    for (std::size_t t = 0; t < ids.size(); ++t) {
      real* dst = e->grad.data() + static_cast<std::size_t>(ids[t]) * cols;
      const real* src = out->grad.data() + t * cols;
      for (int j = 0; j < cols; ++j) dst[j] += src[j];
    }
  };
  return record(std::move(out), std::move(back), "gather_rows");
}

TensorRef Tape::row(const TensorRef& m, int i) {
  require(m->is_matrix(), "row expects a matrix");
  require(i >= 0 && i < m->shape[0], "row index out of range");
  const int cols = m->shape[1];
  TensorRef out = make_tensor({cols});
  for (int j = 0; j < cols; ++j) out->at(j) = m->at(i, j);
  auto back = [m, out, i, cols]() {
    for (int j = 0; j < cols; ++j) {
      m->grad[static_cast<std::size_t>(i) * cols + j] += out->grad[static_cast<std::size_t>(j)];
    }
  };
  return record(std::move(out), std::move(back), "row");
}

TensorRef Tape::mean_rows(const TensorRef& m) {
  require(m->is_matrix(), "mean_rows expects a matrix");
  const int rows = m->shape[0], cols = m->shape[1];
  TensorRef out = make_tensor({cols});
  for (int j = 0; j < cols; ++j) {
    real acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += m->at(r, j);
    out->at(j) = acc / rows;
  }
  auto back = [m, out, rows, cols]() {
    for (int j = 0; j < cols; ++j) {
      const real g = out->grad[static_cast<std::size_t>(j)] / rows;
      for (int r = 0; r < rows; ++r) m->grad[static_cast<std::size_t>(r) * cols + j] += g;
    }
  };
  return record(std::move(out), std::move(back), "mean_rows");
}

TensorRef Tape::weighted_rows(const TensorRef& m, const TensorRef& alpha) {
  require(m->is_matrix() && alpha->is_vector() && alpha->size() == m->shape[0],
          "weighted_rows shapes disagree: " + m->shape_str() + ", " + alpha->shape_str());
  const int rows = m->shape[0], cols = m->shape[1];
  TensorRef out = make_tensor({cols});
  for (int j = 0; j < cols; ++j) {
    real acc = 0.0;
    for (int r = 0; r < rows; ++r) acc += alpha->at(r) * m->at(r, j);
    out->at(j) = acc;
  }
  auto back = [m, alpha, out, rows, cols]() {
    for (int r = 0; r < rows; ++r) {
      const real a = alpha->at(r);
      real dot = 0.0;
      for (int j = 0; j < cols; ++j) {
        const real g = out->grad[static_cast<std::size_t>(j)];
        m->grad[static_cast<std::size_t>(r) * cols + j] += a * g;
        dot += g * m->at(r, j);
      }
      alpha->grad[static_cast<std::size_t>(r)] += dot;
    }
  };
  return record(std::move(out), std::move(back), "weighted_rows");
}

TensorRef Tape::concat(const std::vector<TensorRef>& parts) {
  require(!parts.empty(), "concat needs at least one part");
  int total = 0;
  for (const auto& p : parts) {
    require(p->is_vector(), "concat expects vectors");
    total += p->size();
  }
  TensorRef out = make_tensor({total});
  int off = 0;
  for (const auto& p : parts) {
    for (int i = 0; i < p->size(); ++i) out->at(off + i) = p->at(i);
    off += p->size();
  }
  auto back = [parts, out]() {
    int off = 0;
    for (const auto& p : parts) {
      for (int i = 0; i < p->size(); ++i) {
        p->grad[static_cast<std::size_t>(i)] += out->grad[static_cast<std::size_t>(off + i)];
      }
      off += p->size();
    }
  };
  return record(std::move(out), std::move(back), "concat");
}

TensorRef Tape::sum(const TensorRef& x) {
  real acc = 0.0;
  for (int i = 0; i < x->size(); ++i) acc += x->at(i);
  TensorRef out = make_scalar(acc);
  auto back = [x, out]() {
    const real g = out->grad[0];
    for (int i = 0; i < x->size(); ++i) x->grad[static_cast<std::size_t>(i)] += g;
  };
  return record(std::move(out), std::move(back), "sum");
}

TensorRef Tape::add_n(const std::vector<TensorRef>& xs) {
  require(!xs.empty(), "add_n needs at least one term");
  for (const auto& x : xs) {
    require(x->shape == xs[0]->shape, "add_n shapes disagree");
  }
  TensorRef out = make_tensor(xs[0]->shape);
  for (const auto& x : xs) {
    for (int i = 0; i < x->size(); ++i) out->at(i) += x->at(i);
  }
  auto back = [xs, out]() {
    for (const auto& x : xs) {
      for (int i = 0; i < x->size(); ++i) {
        x->grad[static_cast<std::size_t>(i)] += out->grad[static_cast<std::size_t>(i)];
      }
    }
  };
  return record(std::move(out), std::move(back), "add_n");
}

void Tape::backward(const TensorRef& loss) {
  if (outputs_.find(loss.get()) == outputs_.end()) {
    throw DetachedTensor("backward: tensor was not produced on this tape");
  }
  if (!loss->is_scalar()) {
    throw ShapeMismatch("backward expects a scalar loss, got " + loss->shape_str());
  }
  // Intermediate adjoints are scratch state owned by the tape; reset them so
  // that a repeated backward call contributes exactly one more gradient into
  // the (externally owned) parameter tensors.
  for (const auto& t : owned_) t->zero_grad();
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    it->back();
  }
}

}  // namespace medsum
