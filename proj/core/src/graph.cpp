#include "segtrans/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segtrans {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw std::invalid_argument(std::string(op) + ": bad shape " + a.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str());
}

// C(m,n) += A(m,k) * B(k,n), raw row-major buffers.
void acc_ab(const double* a, size_t m, size_t k, const double* b, size_t n, double* c) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C(m,k) += A(m,n) * B(k,n)^T
void acc_abt(const double* a, size_t m, size_t n, const double* b, size_t k, double* c) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * n;
    double* crow = c + i * k;
    for (size_t j = 0; j < k; ++j) {
      const double* brow = b + j * n;
      double sum = 0.0;
      for (size_t p = 0; p < n; ++p) sum += arow[p] * brow[p];
      crow[j] += sum;
    }
  }
}

// C(k,n) += A(m,k)^T * B(m,n)
void acc_atb(const double* a, size_t m, size_t k, const double* b, size_t n, double* c) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

struct MatView {
  size_t rows = 0, cols = 0;
  bool squeeze_rows = false;  // rank-1 tensor promoted to (1,k)
  bool squeeze_cols = false;  // rank-1 tensor promoted to (k,1)
};

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

NodeId Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Graph::round_precision(Tensor& t) const {
  if (precision_ == Precision::f32)
    for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

const Tensor& Graph::value(NodeId id) const {
  return nodes_.at(static_cast<size_t>(id)).val();
}

Tensor& Graph::grad_buf(NodeId id) {
  Node& n = nodes_.at(static_cast<size_t>(id));
  if (n.grad.data.empty() && n.val().numel() > 0) n.grad = Tensor::zeros(n.val().shape);
  return n.grad;
}

NodeId Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return it->second;
  Node n;
  n.view = &p.value;
  n.parameter = &p;
  const NodeId id = push(std::move(n));
  param_nodes_.emplace(&p, id);
  return id;
}

NodeId Graph::constant(Tensor t) {
  Node n;
  n.value = std::move(t);
  return push(std::move(n));
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  MatView va, vb;
  if (ta.rank() == 2) {
    va = {static_cast<size_t>(ta.shape[0]), static_cast<size_t>(ta.shape[1])};
  } else if (ta.rank() == 1 && tb.rank() == 2) {
    va = {1, ta.numel(), true, false};
  } else {
    shape_error("matmul", ta, tb);
  }
  if (tb.rank() == 2) {
    vb = {static_cast<size_t>(tb.shape[0]), static_cast<size_t>(tb.shape[1])};
  } else if (tb.rank() == 1) {
    vb = {tb.numel(), 1, false, true};
  } else {
    shape_error("matmul", ta, tb);
  }
  if (va.cols != vb.rows) shape_error("matmul", ta, tb);

  std::vector<int> out_shape;
  if (!va.squeeze_rows) out_shape.push_back(static_cast<int>(va.rows));
  if (!vb.squeeze_cols) out_shape.push_back(static_cast<int>(vb.cols));
  if (out_shape.empty()) out_shape.push_back(1);

  Node n;
  n.value = Tensor::zeros(out_shape);
  acc_ab(ta.data.data(), va.rows, va.cols, tb.data.data(), vb.cols, n.value.data.data());
  round_precision(n.value);
  n.backward_fn = [a, b, va, vb](Graph& g, const Tensor& gout) {
    acc_abt(gout.data.data(), va.rows, vb.cols, g.value(b).data.data(), va.cols,
            g.grad_buf(a).data.data());
    acc_atb(g.value(a).data.data(), va.rows, va.cols, gout.data.data(), vb.cols,
            g.grad_buf(b).data.data());
  };
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) shape_error("add", ta, tb);
  Node n;
  n.value = ta;
  for (size_t i = 0; i < tb.numel(); ++i) n.value.data[i] += tb.data[i];
  round_precision(n.value);
  n.backward_fn = [a, b](Graph& g, const Tensor& gout) {
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i) ga.data[i] += gout.data[i];
    Tensor& gb = g.grad_buf(b);
    for (size_t i = 0; i < gout.numel(); ++i) gb.data[i] += gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::add_rowwise(NodeId m, NodeId v) {
  const Tensor& tm = value(m);
  const Tensor& tv = value(v);
  if (tm.rank() != 2 || tv.rank() != 1 || tm.shape[1] != tv.shape[0])
    shape_error("add_rowwise", tm, tv);
  const size_t rows = static_cast<size_t>(tm.shape[0]);
  const size_t cols = static_cast<size_t>(tm.shape[1]);
  Node n;
  n.value = tm;
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) n.value.data[r * cols + c] += tv.data[c];
  round_precision(n.value);
  n.backward_fn = [m, v, rows, cols](Graph& g, const Tensor& gout) {
    Tensor& gm = g.grad_buf(m);
    for (size_t i = 0; i < gout.numel(); ++i) gm.data[i] += gout.data[i];
    Tensor& gv = g.grad_buf(v);
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) gv.data[c] += gout.data[r * cols + c];
  };
  return push(std::move(n));
}

NodeId Graph::scale(NodeId a, double c) {
  const Tensor& ta = value(a);
  Node n;
  n.value = ta;
  for (double& x : n.value.data) x *= c;
  round_precision(n.value);
  n.backward_fn = [a, c](Graph& g, const Tensor& gout) {
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i) ga.data[i] += c * gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (!ta.same_shape(tb)) shape_error("mul", ta, tb);
  Node n;
  n.value = ta;
  for (size_t i = 0; i < tb.numel(); ++i) n.value.data[i] *= tb.data[i];
  round_precision(n.value);
  n.backward_fn = [a, b](Graph& g, const Tensor& gout) {
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i) ga.data[i] += gout.data[i] * vb.data[i];
    Tensor& gb = g.grad_buf(b);
    for (size_t i = 0; i < gout.numel(); ++i) gb.data[i] += gout.data[i] * va.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::one_minus(NodeId a) {
  Node n;
  n.value = value(a);
  for (double& x : n.value.data) x = 1.0 - x;
  round_precision(n.value);
  n.backward_fn = [a](Graph& g, const Tensor& gout) {
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i) ga.data[i] -= gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId a) {
  Node n;
  n.value = value(a);
  for (double& x : n.value.data) x = stable_sigmoid(x);
  round_precision(n.value);
  const NodeId self_placeholder = static_cast<NodeId>(nodes_.size());
  n.backward_fn = [a, self_placeholder](Graph& g, const Tensor& gout) {
    const Tensor& y = g.value(self_placeholder);
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i)
      ga.data[i] += gout.data[i] * y.data[i] * (1.0 - y.data[i]);
  };
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId a) {
  Node n;
  n.value = value(a);
  for (double& x : n.value.data) x = std::tanh(x);
  round_precision(n.value);
  const NodeId self_placeholder = static_cast<NodeId>(nodes_.size());
  n.backward_fn = [a, self_placeholder](Graph& g, const Tensor& gout) {
    const Tensor& y = g.value(self_placeholder);
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i)
      ga.data[i] += gout.data[i] * (1.0 - y.data[i] * y.data[i]);
  };
  return push(std::move(n));
}

NodeId Graph::relu(NodeId a) {
  Node n;
  n.value = value(a);
  for (double& x : n.value.data) x = x > 0.0 ? x : 0.0;
  round_precision(n.value);
  n.backward_fn = [a](Graph& g, const Tensor& gout) {
    const Tensor& x = g.value(a);
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i)
      if (x.data[i] > 0.0) ga.data[i] += gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::concat(const std::vector<NodeId>& xs) {
  if (xs.empty()) throw std::invalid_argument("concat: no inputs");
  size_t total = 0;
  for (NodeId x : xs) {
    if (value(x).rank() != 1) shape_error("concat", value(x));
    total += value(x).numel();
  }
  Node n;
  n.value = Tensor::zeros({static_cast<int>(total)});
  size_t off = 0;
  for (NodeId x : xs) {
    const Tensor& t = value(x);
    std::copy(t.data.begin(), t.data.end(), n.value.data.begin() + static_cast<long>(off));
    off += t.numel();
  }
  round_precision(n.value);
  n.backward_fn = [xs](Graph& g, const Tensor& gout) {
    size_t off2 = 0;
    for (NodeId x : xs) {
      Tensor& gx = g.grad_buf(x);
      for (size_t i = 0; i < gx.numel(); ++i) gx.data[i] += gout.data[off2 + i];
      off2 += gx.numel();
    }
  };
  return push(std::move(n));
}

NodeId Graph::slice(NodeId a, int begin, int end) {
  const Tensor& ta = value(a);
  if (ta.rank() != 1 || begin < 0 || end > ta.shape[0] || begin >= end)
    shape_error("slice", ta);
  Node n;
  n.value = Tensor::zeros({end - begin});
  std::copy(ta.data.begin() + begin, ta.data.begin() + end, n.value.data.begin());
  round_precision(n.value);
  n.backward_fn = [a, begin](Graph& g, const Tensor& gout) {
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i)
      ga.data[static_cast<size_t>(begin) + i] += gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::reshape(NodeId a, std::vector<int> shape) {
  const Tensor& ta = value(a);
  if (shape_numel(shape) != ta.numel()) shape_error("reshape", ta);
  Node n;
  n.value = Tensor(std::move(shape), ta.data);
  n.backward_fn = [a](Graph& g, const Tensor& gout) {
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < gout.numel(); ++i) ga.data[i] += gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::embedding_lookup(NodeId table, int row) {
  const Tensor& tt = value(table);
  if (tt.rank() != 2 || row < 0 || row >= tt.shape[0])
    throw std::invalid_argument("embedding_lookup: row " + std::to_string(row) +
                                " out of range for table " + tt.shape_str());
  const size_t cols = static_cast<size_t>(tt.shape[1]);
  Node n;
  n.value = Tensor::zeros({static_cast<int>(cols)});
  std::copy(tt.data.begin() + static_cast<long>(row * cols),
            tt.data.begin() + static_cast<long>((row + 1) * cols), n.value.data.begin());
  round_precision(n.value);
  n.backward_fn = [table, row, cols](Graph& g, const Tensor& gout) {
    Tensor& gt = g.grad_buf(table);
    double* dst = gt.data.data() + static_cast<size_t>(row) * cols;
    for (size_t i = 0; i < cols; ++i) dst[i] += gout.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias, double eps) {
  const Tensor& tx = value(x);
  const Tensor& tg = value(gain);
  const Tensor& tb = value(bias);
  if (tx.rank() < 1) shape_error("layer_norm", tx);
  const size_t d = static_cast<size_t>(tx.shape.back());
  if (tg.rank() != 1 || tb.rank() != 1 || tg.numel() != d || tb.numel() != d)
    shape_error("layer_norm", tx, tg);
  const size_t rows = tx.numel() / d;

  Node n;
  n.value = tx;
  // Keep the normalized activations for backward.
  Tensor xhat = Tensor::zeros(tx.shape);
  std::vector<double> inv_sigma(rows);
  for (size_t r = 0; r < rows; ++r) {
    const double* xp = tx.data.data() + r * d;
    double mean = 0.0;
    for (size_t i = 0; i < d; ++i) mean += xp[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (size_t i = 0; i < d; ++i) {
      const double c = xp[i] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma[r] = inv;
    double* hp = xhat.data.data() + r * d;
    double* yp = n.value.data.data() + r * d;
    for (size_t i = 0; i < d; ++i) {
      hp[i] = (xp[i] - mean) * inv;
      yp[i] = hp[i] * tg.data[i] + tb.data[i];
    }
  }
  round_precision(n.value);
  n.backward_fn = [x, gain, bias, d, rows, xhat = std::move(xhat),
                   inv_sigma = std::move(inv_sigma)](Graph& g, const Tensor& gout) {
    const Tensor& tg2 = g.value(gain);
    Tensor& gx = g.grad_buf(x);
    Tensor& gg = g.grad_buf(gain);
    Tensor& gb = g.grad_buf(bias);
    for (size_t r = 0; r < rows; ++r) {
      const double* go = gout.data.data() + r * d;
      const double* hp = xhat.data.data() + r * d;
      double* gxp = gx.data.data() + r * d;
      double mean_gy = 0.0, mean_gyh = 0.0;
      for (size_t i = 0; i < d; ++i) {
        const double gy = go[i] * tg2.data[i];
        mean_gy += gy;
        mean_gyh += gy * hp[i];
      }
      mean_gy /= static_cast<double>(d);
      mean_gyh /= static_cast<double>(d);
      for (size_t i = 0; i < d; ++i) {
        const double gy = go[i] * tg2.data[i];
        gxp[i] += inv_sigma[r] * (gy - mean_gy - hp[i] * mean_gyh);
        gg.data[i] += go[i] * hp[i];
        gb.data[i] += go[i];
      }
    }
  };
  return push(std::move(n));
}

NodeId Graph::dropout(NodeId x, double p) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (!training() || p == 0.0) return x;  // identity at inference
  if (!rng_) throw std::logic_error("dropout: training graph needs an Rng");
  const Tensor& tx = value(x);
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor mask = Tensor::zeros(tx.shape);
  for (size_t i = 0; i < mask.numel(); ++i)
    mask.data[i] = rng_->bernoulli(p) ? 0.0 : keep_scale;
  Node n;
  n.value = tx;
  for (size_t i = 0; i < tx.numel(); ++i) n.value.data[i] *= mask.data[i];
  round_precision(n.value);
  n.backward_fn = [x, mask = std::move(mask)](Graph& g, const Tensor& gout) {
    Tensor& gx = g.grad_buf(x);
    for (size_t i = 0; i < gout.numel(); ++i) gx.data[i] += gout.data[i] * mask.data[i];
  };
  return push(std::move(n));
}

NodeId Graph::token_dropout(NodeId x, double p) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("token_dropout: p must be in [0, 1)");
  if (!training() || p == 0.0) return x;
  if (!rng_) throw std::logic_error("token_dropout: training graph needs an Rng");
  if (!rng_->bernoulli(p)) return x;
  return constant(Tensor::zeros(value(x).shape));
}

NodeId Graph::softmax(NodeId x) {
  const Tensor& tx = value(x);
  if (tx.rank() != 1) shape_error("softmax", tx);
  Node n;
  n.value = tx;
  double mx = n.value.data[0];
  for (double v : n.value.data) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : n.value.data) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : n.value.data) v /= sum;
  round_precision(n.value);
  const NodeId self_placeholder = static_cast<NodeId>(nodes_.size());
  n.backward_fn = [x, self_placeholder](Graph& g, const Tensor& gout) {
    const Tensor& y = g.value(self_placeholder);
    double dot_gy = 0.0;
    for (size_t i = 0; i < gout.numel(); ++i) dot_gy += gout.data[i] * y.data[i];
    Tensor& gx = g.grad_buf(x);
    for (size_t i = 0; i < gout.numel(); ++i)
      gx.data[i] += y.data[i] * (gout.data[i] - dot_gy);
  };
  return push(std::move(n));
}

NodeId Graph::log_softmax(NodeId x) {
  const Tensor& tx = value(x);
  if (tx.rank() != 1) shape_error("log_softmax", tx);
  Node n;
  n.value = tx;
  double mx = n.value.data[0];
  for (double v : n.value.data) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : n.value.data) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : n.value.data) v -= lse;
  round_precision(n.value);
  const NodeId self_placeholder = static_cast<NodeId>(nodes_.size());
  n.backward_fn = [x, self_placeholder](Graph& g, const Tensor& gout) {
    const Tensor& y = g.value(self_placeholder);
    double sum_g = 0.0;
    for (size_t i = 0; i < gout.numel(); ++i) sum_g += gout.data[i];
    Tensor& gx = g.grad_buf(x);
    for (size_t i = 0; i < gout.numel(); ++i)
      gx.data[i] += gout.data[i] - std::exp(y.data[i]) * sum_g;
  };
  return push(std::move(n));
}

NodeId Graph::weighted_nll(NodeId logp, int target, double weight, double label_smoothing) {
  const Tensor& tl = value(logp);
  if (tl.rank() != 1) shape_error("weighted_nll", tl);
  if (target < 0 || target >= tl.shape[0])
    throw std::invalid_argument("weighted_nll: target " + std::to_string(target) +
                                " out of range for " + tl.shape_str());
  const size_t v_size = tl.numel();
  const double eps = label_smoothing;
  double val = (1.0 - eps) * tl.data[static_cast<size_t>(target)];
  if (eps > 0.0) {
    double sum = 0.0;
    for (double lp : tl.data) sum += lp;
    val += eps / static_cast<double>(v_size) * sum;
  }
  Node n;
  n.value = Tensor::scalar(-weight * val);
  round_precision(n.value);
  n.backward_fn = [logp, target, weight, eps, v_size](Graph& g, const Tensor& gout) {
    const double go = gout.data[0];
    Tensor& gl = g.grad_buf(logp);
    gl.data[static_cast<size_t>(target)] += go * (-weight) * (1.0 - eps);
    if (eps > 0.0) {
      const double c = go * (-weight) * eps / static_cast<double>(v_size);
      for (size_t i = 0; i < v_size; ++i) gl.data[i] += c;
    }
  };
  return push(std::move(n));
}

NodeId Graph::dot(NodeId a, NodeId b) {
  const Tensor& ta = value(a);
  const Tensor& tb = value(b);
  if (ta.rank() != 1 || !ta.same_shape(tb)) shape_error("dot", ta, tb);
  double sum = 0.0;
  for (size_t i = 0; i < ta.numel(); ++i) sum += ta.data[i] * tb.data[i];
  Node n;
  n.value = Tensor::scalar(sum);
  round_precision(n.value);
  n.backward_fn = [a, b](Graph& g, const Tensor& gout) {
    const double go = gout.data[0];
    const Tensor& va = g.value(a);
    const Tensor& vb = g.value(b);
    Tensor& ga = g.grad_buf(a);
    for (size_t i = 0; i < ga.numel(); ++i) ga.data[i] += go * vb.data[i];
    Tensor& gb = g.grad_buf(b);
    for (size_t i = 0; i < gb.numel(); ++i) gb.data[i] += go * va.data[i];
  };
  return push(std::move(n));
}

void Graph::backward(NodeId loss) {
  if (loss < 0 || static_cast<size_t>(loss) >= nodes_.size())
    throw std::invalid_argument("backward: bad node id");
  if (!value(loss).is_scalar())
    throw std::invalid_argument("backward: loss must be scalar, got " +
                                value(loss).shape_str());
  grad_buf(loss).data[0] = 1.0;
  for (NodeId id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.data.empty()) continue;  // not reachable from the loss
    if (n.backward_fn) n.backward_fn(*this, n.grad);
    if (n.parameter) {
      Tensor& pg = n.parameter->grad;
      for (size_t i = 0; i < pg.numel(); ++i) pg.data[i] += n.grad.data[i];
    }
  }
}

}  // namespace segtrans
