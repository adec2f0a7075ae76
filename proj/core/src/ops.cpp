#include "pointcam/ops.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace pointcam::autodiff {

namespace {

using detail::TensorNode;

Tensor make_op(const char* op, std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backprop) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  for (const Tensor& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->grad.assign(node->values.size(), 0.0);
    node->backprop = std::move(backprop);
    for (const Tensor& p : parents) node->parents.push_back(p.shared_node());
  }
  if (debug_checks_enabled()) {
    for (double v : node->values) {
      if (!std::isfinite(v)) {
        throw std::runtime_error(std::string(op) + " produced a non-finite value");
      }
    }
  }
  return Tensor(std::move(node));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": empty tensor");
}

void require_matrix(const Tensor& t, const char* op) {
  require_defined(t, op);
  if (t.shape().size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a matrix, got shape " +
                                shape_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const int n = a.shape()[0];
  const int k = a.shape()[1];
  const int m = b.shape()[1];
  if (b.shape()[0] != k) {
    throw std::invalid_argument("matmul: inner dimensions differ, " +
                                shape_string(a.shape()) + " x " +
                                shape_string(b.shape()));
  }
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int kk = 0; kk < k; ++kk) {
      const double aik = av[static_cast<std::size_t>(i) * k + kk];
      const double* brow = &bv[static_cast<std::size_t>(kk) * m];
      double* crow = &out[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) crow[j] += aik * brow[j];
    }
  }
  return make_op("matmul", {n, m}, std::move(out), {a, b}, [n, k, m](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    TensorNode* pb = self.parents[1].get();
    const auto& g = self.grad;
    if (pa->requires_grad) {
      const auto& bv = pb->values;
      for (int i = 0; i < n; ++i) {
        for (int kk = 0; kk < k; ++kk) {
          double acc = 0.0;
          const double* grow = &g[static_cast<std::size_t>(i) * m];
          const double* brow = &bv[static_cast<std::size_t>(kk) * m];
          for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
          pa->grad[static_cast<std::size_t>(i) * k + kk] += acc;
        }
      }
    }
    if (pb->requires_grad) {
      const auto& av = pa->values;
      for (int i = 0; i < n; ++i) {
        const double* grow = &g[static_cast<std::size_t>(i) * m];
        for (int kk = 0; kk < k; ++kk) {
          const double aik = av[static_cast<std::size_t>(i) * k + kk];
          double* dbrow = &pb->grad[static_cast<std::size_t>(kk) * m];
          for (int j = 0; j < m; ++j) dbrow[j] += aik * grow[j];
        }
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  const auto& av = a.values();
  const auto& bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    return make_op("add", a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
      TensorNode* pa = self.parents[0].get();
      TensorNode* pb = self.parents[1].get();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (pa->requires_grad) pa->grad[i] += self.grad[i];
        if (pb->requires_grad) pb->grad[i] += self.grad[i];
      }
    });
  }
  // Row broadcast: b is [1,m] or [m] stretched over the rows of a.
  const bool b_is_row = (b.shape().size() == 1 && a.shape().size() == 2 &&
                         b.shape()[0] == a.shape()[1]) ||
                        (b.shape().size() == 2 && a.shape().size() == 2 &&
                         b.shape()[0] == 1 && b.shape()[1] == a.shape()[1]);
  if (!b_is_row) {
    throw std::invalid_argument("add: incompatible shapes " + shape_string(a.shape()) +
                                " and " + shape_string(b.shape()));
  }
  const int n = a.shape()[0];
  const int m = a.shape()[1];
  std::vector<double> out(av.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      out[static_cast<std::size_t>(i) * m + j] = av[static_cast<std::size_t>(i) * m + j] + bv[j];
    }
  }
  return make_op("add", a.shape(), std::move(out), {a, b}, [n, m](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    TensorNode* pb = self.parents[1].get();
    for (int i = 0; i < n; ++i) {
      const double* grow = &self.grad[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) {
        if (pa->requires_grad) pa->grad[static_cast<std::size_t>(i) * m + j] += grow[j];
        if (pb->requires_grad) pb->grad[j] += grow[j];
      }
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mul: shapes differ, " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
  const auto& av = a.values();
  const auto& bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return make_op("mul", a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    TensorNode* pb = self.parents[1].get();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa->requires_grad) pa->grad[i] += self.grad[i] * pb->values[i];
      if (pb->requires_grad) pb->grad[i] += self.grad[i] * pa->values[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return make_op("scale", a.shape(), std::move(out), {a}, [factor](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      pa->grad[i] += self.grad[i] * factor;
    }
  });
}

Tensor relu(const Tensor& a) {
  require_defined(a, "relu");
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  }
  return make_op("relu", a.shape(), std::move(out), {a}, [](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (pa->values[i] > 0.0) pa->grad[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  require_defined(a, "sigmoid");
  std::vector<double> out(a.values().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = a.values()[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  return make_op("sigmoid", a.shape(), std::move(out), {a}, [](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double s = self.values[i];
      pa->grad[i] += self.grad[i] * s * (1.0 - s);
    }
  });
}

Tensor row_softmax(const Tensor& a) {
  require_matrix(a, "row_softmax");
  const int n = a.shape()[0];
  const int m = a.shape()[1];
  const auto& av = a.values();
  std::vector<double> out(av.size());
  for (int i = 0; i < n; ++i) {
    const double* row = &av[static_cast<std::size_t>(i) * m];
    double* orow = &out[static_cast<std::size_t>(i) * m];
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < m; ++j) {
      orow[j] = std::exp(row[j] - mx);
      denom += orow[j];
    }
    for (int j = 0; j < m; ++j) orow[j] /= denom;
  }
  return make_op("row_softmax", a.shape(), std::move(out), {a}, [n, m](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    for (int i = 0; i < n; ++i) {
      const double* y = &self.values[static_cast<std::size_t>(i) * m];
      const double* g = &self.grad[static_cast<std::size_t>(i) * m];
      double dot = 0.0;
      for (int j = 0; j < m; ++j) dot += g[j] * y[j];
      for (int j = 0; j < m; ++j) {
        pa->grad[static_cast<std::size_t>(i) * m + j] += y[j] * (g[j] - dot);
      }
    }
  });
}

Tensor max_over_rows(const Tensor& a) {
  require_matrix(a, "max_over_rows");
  const int n = a.shape()[0];
  const int m = a.shape()[1];
  const auto& av = a.values();
  std::vector<double> out(static_cast<std::size_t>(m));
  std::vector<int> argmax(static_cast<std::size_t>(m), 0);
  for (int j = 0; j < m; ++j) out[j] = av[j];
  for (int i = 1; i < n; ++i) {
    const double* row = &av[static_cast<std::size_t>(i) * m];
    for (int j = 0; j < m; ++j) {
      if (row[j] > out[j]) {
        out[j] = row[j];
        argmax[j] = i;
      }
    }
  }
  return make_op("max_over_rows", {1, m}, std::move(out), {a},
                 [m, argmax = std::move(argmax)](TensorNode& self) {
                   TensorNode* pa = self.parents[0].get();
                   for (int j = 0; j < m; ++j) {
                     pa->grad[static_cast<std::size_t>(argmax[j]) * m + j] += self.grad[j];
                   }
                 });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& idx) {
  require_matrix(a, "gather_rows");
  const int n = a.shape()[0];
  const int m = a.shape()[1];
  std::vector<double> out(idx.size() * static_cast<std::size_t>(m));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || idx[r] >= n) {
      throw std::invalid_argument("gather_rows: index " + std::to_string(idx[r]) +
                                  " out of range [0," + std::to_string(n) + ")");
    }
    const double* src = &a.values()[static_cast<std::size_t>(idx[r]) * m];
    for (int j = 0; j < m; ++j) out[r * m + j] = src[j];
  }
  return make_op("gather_rows", {static_cast<int>(idx.size()), m}, std::move(out), {a},
                 [m, idx](TensorNode& self) {
                   TensorNode* pa = self.parents[0].get();
                   for (std::size_t r = 0; r < idx.size(); ++r) {
                     const double* g = &self.grad[r * m];
                     double* dst = &pa->grad[static_cast<std::size_t>(idx[r]) * m];
                     for (int j = 0; j < m; ++j) dst[j] += g[j];
                   }
                 });
}

Tensor tile_rows(const Tensor& a, int n) {
  require_matrix(a, "tile_rows");
  if (a.shape()[0] != 1) {
    throw std::invalid_argument("tile_rows: expected a single row, got shape " +
                                shape_string(a.shape()));
  }
  if (n <= 0) throw std::invalid_argument("tile_rows: row count must be positive");
  const int m = a.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) out[static_cast<std::size_t>(i) * m + j] = a.values()[j];
  }
  return make_op("tile_rows", {n, m}, std::move(out), {a}, [n, m](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    for (int i = 0; i < n; ++i) {
      const double* g = &self.grad[static_cast<std::size_t>(i) * m];
      for (int j = 0; j < m; ++j) pa->grad[j] += g[j];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no tensors given");
  for (const Tensor& p : parts) require_matrix(p, "concat_cols");
  const int n = parts[0].shape()[0];
  int total = 0;
  std::vector<int> widths;
  for (const Tensor& p : parts) {
    if (p.shape()[0] != n) {
      throw std::invalid_argument("concat_cols: row counts differ, " +
                                  std::to_string(n) + " vs " +
                                  std::to_string(p.shape()[0]));
    }
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  std::vector<double> out(static_cast<std::size_t>(n) * total);
  int offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const int m = widths[p];
    const auto& src = parts[p].values();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        out[static_cast<std::size_t>(i) * total + offset + j] =
            src[static_cast<std::size_t>(i) * m + j];
      }
    }
    offset += m;
  }
  return make_op("concat_cols", {n, total}, std::move(out), parts,
                 [n, total, widths](TensorNode& self) {
                   int offset = 0;
                   for (std::size_t p = 0; p < self.parents.size(); ++p) {
                     TensorNode* pp = self.parents[p].get();
                     const int m = widths[p];
                     if (pp->requires_grad) {
                       for (int i = 0; i < n; ++i) {
                         const double* g =
                             &self.grad[static_cast<std::size_t>(i) * total + offset];
                         double* dst = &pp->grad[static_cast<std::size_t>(i) * m];
                         for (int j = 0; j < m; ++j) dst[j] += g[j];
                       }
                     }
                     offset += m;
                   }
                 });
}

Tensor mean(const Tensor& a) {
  require_defined(a, "mean");
  const double n = static_cast<double>(a.size());
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_op("mean", {1}, {acc / n}, {a}, [n](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    const double g = self.grad[0] / n;
    for (double& d : pa->grad) d += g;
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  return make_op("sum", {1}, {acc}, {a}, [](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    for (double& d : pa->grad) d += self.grad[0];
  });
}

Tensor mse(const Tensor& a, const Tensor& target) {
  require_defined(a, "mse");
  require_defined(target, "mse");
  if (a.shape() != target.shape()) {
    throw std::invalid_argument("mse: shapes differ, " + shape_string(a.shape()) +
                                " vs " + shape_string(target.shape()));
  }
  const double n = static_cast<double>(a.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.values()[i] - target.values()[i];
    acc += d * d;
  }
  return make_op("mse", {1}, {acc / n}, {a, target}, [n](TensorNode& self) {
    TensorNode* pa = self.parents[0].get();
    TensorNode* pt = self.parents[1].get();
    const double g = self.grad[0] * 2.0 / n;
    for (std::size_t i = 0; i < pa->values.size(); ++i) {
      const double d = g * (pa->values[i] - pt->values[i]);
      if (pa->requires_grad) pa->grad[i] += d;
      if (pt->requires_grad) pt->grad[i] -= d;
    }
  });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require_matrix(logits, "cross_entropy");
  const int n = logits.shape()[0];
  const int m = logits.shape()[1];
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " rows");
  }
  const auto& lv = logits.values();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= m) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(labels[i]) +
                                  " out of range [0," + std::to_string(m) + ")");
    }
    const double* row = &lv[static_cast<std::size_t>(i) * m];
    double mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double denom = 0.0;
    for (int j = 0; j < m; ++j) denom += std::exp(row[j] - mx);
    acc += mx + std::log(denom) - row[labels[i]];
  }
  return make_op("cross_entropy", {1}, {acc / n}, {logits},
                 [n, m, labels](TensorNode& self) {
                   TensorNode* pa = self.parents[0].get();
                   const double g = self.grad[0] / n;
                   for (int i = 0; i < n; ++i) {
                     const double* row = &pa->values[static_cast<std::size_t>(i) * m];
                     double mx = row[0];
                     for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
                     double denom = 0.0;
                     for (int j = 0; j < m; ++j) denom += std::exp(row[j] - mx);
                     double* drow = &pa->grad[static_cast<std::size_t>(i) * m];
                     for (int j = 0; j < m; ++j) {
                       const double p = std::exp(row[j] - mx) / denom;
                       drow[j] += g * (p - (j == labels[i] ? 1.0 : 0.0));
                     }
                   }
                 });
}

}  // namespace pointcam::autodiff
