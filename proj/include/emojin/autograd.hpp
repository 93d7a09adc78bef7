#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "emojin/tensor.hpp"

// Reverse-mode autodiff over TensorT. Graphs are built per forward pass;
// parameters are long-lived nodes whose gradients accumulate across the
// samples of a batch. Everything is single-threaded and deterministic:
// accumulation order is fixed by graph construction order.

namespace emojin::nn {

template <class S>
struct VarNode {
  TensorT<S> val;
  TensorT<S> grad;  // allocated lazily, same shape as val
  bool needs_grad = false;
  std::vector<std::shared_ptr<VarNode>> parents;
  std::function<void(VarNode&)> backprop;  // adds into parents' grads

  TensorT<S>& ensure_grad() {
    if (grad.data.empty()) grad = TensorT<S>::zeros(val.shape);
    return grad;
  }
};

template <class S>
using Var = std::shared_ptr<VarNode<S>>;

template <class S>
Var<S> make_var(TensorT<S> value, bool needs_grad) {
  auto n = std::make_shared<VarNode<S>>();
  n->val = std::move(value);
  n->needs_grad = needs_grad;
  return n;
}

template <class S>
Var<S> constant(TensorT<S> value) {
  return make_var(std::move(value), false);
}

namespace detail {

template <class S>
bool track(const std::vector<Var<S>>& parents) {
  for (const auto& p : parents)
    if (p->needs_grad) return true;
  return false;
}

template <class S>
Var<S> make_op(TensorT<S> value, std::vector<Var<S>> parents,
               std::function<void(VarNode<S>&)> backprop) {
  auto n = std::make_shared<VarNode<S>>();
  n->val = std::move(value);
  n->needs_grad = track(parents);
  if (n->needs_grad) {
    n->parents = std::move(parents);
    n->backprop = std::move(backprop);
  }
  return n;
}

}  // namespace detail

// Runs backprop from a scalar root. Topological order is derived with an
// iterative DFS so deep LSTM graphs cannot overflow the stack.
template <class S>
void backward(const Var<S>& root) {
  if (root->val.size() != 1) throw ShapeMismatch("backward() root must be scalar");
  root->ensure_grad().data[0] = S(1);

  std::vector<VarNode<S>*> order;
  std::unordered_set<VarNode<S>*> seen;
  std::vector<std::pair<VarNode<S>*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      VarNode<S>* p = node->parents[next++].get();
      if (p->needs_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // order is post-order: parents before children; walk it backwards
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    VarNode<S>* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// --- elementwise and arithmetic ops ------------------------------------

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  if (!a->val.same_shape(b->val)) throw ShapeMismatch("add: shape mismatch");
  TensorT<S> out = a->val;
  for (std::int64_t i = 0; i < out.size(); ++i) out.data[i] += b->val.data[i];
  return detail::make_op<S>(std::move(out), {a, b}, [](VarNode<S>& n) {
    for (auto& p : n.parents) {
      if (!p->needs_grad) continue;
      auto& g = p->ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i];
    }
  });
}

template <class S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  if (!a->val.same_shape(b->val)) throw ShapeMismatch("mul: shape mismatch");
  TensorT<S> out = a->val;
  for (std::int64_t i = 0; i < out.size(); ++i) out.data[i] *= b->val.data[i];
  return detail::make_op<S>(std::move(out), {a, b}, [](VarNode<S>& n) {
    auto& a = n.parents[0];
    auto& b = n.parents[1];
    if (a->needs_grad) {
      auto& g = a->ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i] * b->val.data[i];
    }
    if (b->needs_grad) {
      auto& g = b->ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i] * a->val.data[i];
    }
  });
}

template <class S>
Var<S> scale(const Var<S>& a, S factor) {
  TensorT<S> out = a->val;
  for (auto& v : out.data) v *= factor;
  return detail::make_op<S>(std::move(out), {a}, [factor](VarNode<S>& n) {
    auto& g = n.parents[0]->ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += factor * n.grad.data[i];
  });
}

// out = s * v where s is a scalar variable (shape [1]).
template <class S>
Var<S> scale_by(const Var<S>& v, const Var<S>& s) {
  if (s->val.size() != 1) throw ShapeMismatch("scale_by: scalar expected");
  S f = s->val.data[0];
  TensorT<S> out = v->val;
  for (auto& x : out.data) x *= f;
  return detail::make_op<S>(std::move(out), {v, s}, [](VarNode<S>& n) {
    auto& v = n.parents[0];
    auto& s = n.parents[1];
    S f = s->val.data[0];
    if (v->needs_grad) {
      auto& g = v->ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += f * n.grad.data[i];
    }
    if (s->needs_grad) {
      S acc = 0;
      for (std::int64_t i = 0; i < n.grad.size(); ++i) acc += n.grad.data[i] * v->val.data[i];
      s->ensure_grad().data[0] += acc;
    }
  });
}

template <class S, class Fwd, class Dfn>
Var<S> pointwise(const Var<S>& a, Fwd fwd, Dfn dfn) {
  TensorT<S> out = a->val;
  for (auto& v : out.data) v = fwd(v);
  TensorT<S> saved = out;  // derivative expressed through the output
  return detail::make_op<S>(std::move(out), {a},
                            [saved, dfn](VarNode<S>& n) {
                              auto& g = n.parents[0]->ensure_grad();
                              for (std::int64_t i = 0; i < g.size(); ++i)
                                g.data[i] += dfn(saved.data[i], n.parents[0]->val.data[i]) * n.grad.data[i];
                            });
}

template <class S>
Var<S> sigmoid(const Var<S>& a) {
  return pointwise<S>(
      a, [](S x) { return S(1) / (S(1) + std::exp(-x)); },
      [](S y, S) { return y * (S(1) - y); });
}

template <class S>
Var<S> tanh_op(const Var<S>& a) {
  return pointwise<S>(
      a, [](S x) { return std::tanh(x); }, [](S y, S) { return S(1) - y * y; });
}

template <class S>
Var<S> relu(const Var<S>& a) {
  return pointwise<S>(
      a, [](S x) { return x > S(0) ? x : S(0); },
      [](S, S x) { return x > S(0) ? S(1) : S(0); });
}

// Softmax over the whole (flat) tensor.
template <class S>
Var<S> softmax(const Var<S>& a) {
  TensorT<S> out = a->val;
  S mx = *std::max_element(out.data.begin(), out.data.end());
  S sum = 0;
  for (auto& v : out.data) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : out.data) v /= sum;
  TensorT<S> saved = out;
  return detail::make_op<S>(std::move(out), {a}, [saved](VarNode<S>& n) {
    S dot = 0;
    for (std::int64_t i = 0; i < n.grad.size(); ++i) dot += n.grad.data[i] * saved.data[i];
    auto& g = n.parents[0]->ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i)
      g.data[i] += saved.data[i] * (n.grad.data[i] - dot);
  });
}

// --- matrix ops ---------------------------------------------------------

template <class S>
Var<S> matmul(const Var<S>& a, const Var<S>& b) {
  if (a->val.shape.size() != 2 || b->val.shape.size() != 2 ||
      a->val.shape[1] != b->val.shape[0])
    throw ShapeMismatch("matmul: incompatible shapes");
  int m = a->val.shape[0], k = a->val.shape[1], n = b->val.shape[1];
  TensorT<S> out = TensorT<S>::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      S av = a->val.data[static_cast<size_t>(i) * k + p];
      if (av == S(0)) continue;
      const S* brow = &b->val.data[static_cast<size_t>(p) * n];
      S* orow = &out.data[static_cast<size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return detail::make_op<S>(std::move(out), {a, b}, [m, k, n](VarNode<S>& node) {
    auto& a = node.parents[0];
    auto& b = node.parents[1];
    if (a->needs_grad) {
      auto& ga = a->ensure_grad();
      // dA = dC * B^T
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          S acc = 0;
          const S* grow = &node.grad.data[static_cast<size_t>(i) * n];
          const S* brow = &b->val.data[static_cast<size_t>(p) * n];
          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga.data[static_cast<size_t>(i) * k + p] += acc;
        }
    }
    if (b->needs_grad) {
      auto& gb = b->ensure_grad();
      // dB = A^T * dC
      for (int i = 0; i < m; ++i) {
        const S* grow = &node.grad.data[static_cast<size_t>(i) * n];
        for (int p = 0; p < k; ++p) {
          S av = a->val.data[static_cast<size_t>(i) * k + p];
          if (av == S(0)) continue;
          S* brow = &gb.data[static_cast<size_t>(p) * n];
          for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
        }
      }
    }
  });
}

// mat (m,n) + row vector (n), broadcast over rows.
template <class S>
Var<S> add_rowvec(const Var<S>& mat, const Var<S>& vec) {
  if (mat->val.shape.size() != 2 || vec->val.size() != mat->val.shape[1])
    throw ShapeMismatch("add_rowvec: shape mismatch");
  int m = mat->val.shape[0], n = mat->val.shape[1];
  TensorT<S> out = mat->val;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data[static_cast<size_t>(i) * n + j] += vec->val.data[j];
  return detail::make_op<S>(std::move(out), {mat, vec}, [m, n](VarNode<S>& node) {
    auto& mat = node.parents[0];
    auto& vec = node.parents[1];
    if (mat->needs_grad) {
      auto& g = mat->ensure_grad();
      for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += node.grad.data[i];
    }
    if (vec->needs_grad) {
      auto& g = vec->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g.data[j] += node.grad.data[static_cast<size_t>(i) * n + j];
    }
  });
}

template <class S>
Var<S> reshape(const Var<S>& a, std::vector<int> shape) {
  if (TensorT<S>::count(shape) != a->val.size()) throw ShapeMismatch("reshape: size mismatch");
  TensorT<S> out(std::move(shape), a->val.data);
  return detail::make_op<S>(std::move(out), {a}, [](VarNode<S>& n) {
    auto& g = n.parents[0]->ensure_grad();
    for (std::int64_t i = 0; i < g.size(); ++i) g.data[i] += n.grad.data[i];
  });
}

// Columns [from, to) of a 2-D tensor.
template <class S>
Var<S> slice_cols(const Var<S>& a, int from, int to) {
  if (a->val.shape.size() != 2 || from < 0 || to > a->val.shape[1] || from >= to)
    throw ShapeMismatch("slice_cols: bad range");
  int m = a->val.shape[0], n = a->val.shape[1], w = to - from;
  TensorT<S> out = TensorT<S>::zeros({m, w});
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j)
      out.data[static_cast<size_t>(i) * w + j] = a->val.data[static_cast<size_t>(i) * n + from + j];
  return detail::make_op<S>(std::move(out), {a}, [m, n, w, from](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j)
        g.data[static_cast<size_t>(i) * n + from + j] += node.grad.data[static_cast<size_t>(i) * w + j];
  });
}

// Concatenate 2-D tensors with equal row counts along columns.
template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  if (parts.empty()) throw ShapeMismatch("concat_cols: empty");
  int m = parts[0]->val.shape[0];
  int total = 0;
  for (const auto& p : parts) {
    if (p->val.shape.size() != 2 || p->val.shape[0] != m)
      throw ShapeMismatch("concat_cols: row mismatch");
    total += p->val.shape[1];
  }
  TensorT<S> out = TensorT<S>::zeros({m, total});
  int off = 0;
  for (const auto& p : parts) {
    int n = p->val.shape[1];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        out.data[static_cast<size_t>(i) * total + off + j] = p->val.data[static_cast<size_t>(i) * n + j];
    off += n;
  }
  return detail::make_op<S>(std::move(out), parts, [m, total](VarNode<S>& node) {
    int off = 0;
    for (auto& p : node.parents) {
      int n = p->val.shape[1];
      if (p->needs_grad) {
        auto& g = p->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            g.data[static_cast<size_t>(i) * n + j] += node.grad.data[static_cast<size_t>(i) * total + off + j];
      }
      off += n;
    }
  });
}

// Stack (1,D) rows into a (T,D) matrix.
template <class S>
Var<S> concat_rows(const std::vector<Var<S>>& rows) {
  if (rows.empty()) throw ShapeMismatch("concat_rows: empty");
  int d = static_cast<int>(rows[0]->val.size());
  TensorT<S> out = TensorT<S>::zeros({static_cast<int>(rows.size()), d});
  for (size_t t = 0; t < rows.size(); ++t) {
    if (rows[t]->val.size() != d) throw ShapeMismatch("concat_rows: width mismatch");
    for (int j = 0; j < d; ++j) out.data[t * d + j] = rows[t]->val.data[j];
  }
  return detail::make_op<S>(std::move(out), rows, [d](VarNode<S>& node) {
    for (size_t t = 0; t < node.parents.size(); ++t) {
      auto& p = node.parents[t];
      if (!p->needs_grad) continue;
      auto& g = p->ensure_grad();
      for (int j = 0; j < d; ++j) g.data[j] += node.grad.data[t * d + j];
    }
  });
}

// --- gathers, pooling, reductions ---------------------------------------

struct IdOutOfRange : std::runtime_error {
  explicit IdOutOfRange(const std::string& what) : std::runtime_error(what) {}
};

// Row lookup into an embedding table (V,E) -> (ids.size(), E).
template <class S>
Var<S> gather_rows(const Var<S>& table, const std::vector<int>& ids) {
  if (table->val.shape.size() != 2) throw ShapeMismatch("gather_rows: table must be 2-D");
  int v = table->val.shape[0], e = table->val.shape[1];
  TensorT<S> out = TensorT<S>::zeros({static_cast<int>(ids.size()), e});
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v)
      throw IdOutOfRange("embedding id " + std::to_string(ids[i]) + " out of range");
    for (int j = 0; j < e; ++j)
      out.data[i * e + j] = table->val.data[static_cast<size_t>(ids[i]) * e + j];
  }
  return detail::make_op<S>(std::move(out), {table}, [ids, e](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < e; ++j)
        g.data[static_cast<size_t>(ids[i]) * e + j] += node.grad.data[i * e + j];
  });
}

// im2col for a dilated 1-D convolution: (T,C) -> (T', k*C) with
// T' = T - (k-1)*dilation. Valid convolution, no implicit padding.
template <class S>
Var<S> im2col(const Var<S>& x, int kernel, int dilation) {
  int t = x->val.shape[0], c = x->val.shape[1];
  int t_out = t - (kernel - 1) * dilation;
  TensorT<S> out = TensorT<S>::zeros({t_out, kernel * c});
  for (int i = 0; i < t_out; ++i)
    for (int j = 0; j < kernel; ++j)
      for (int ch = 0; ch < c; ++ch)
        out.data[static_cast<size_t>(i) * kernel * c + j * c + ch] =
            x->val.data[static_cast<size_t>(i + j * dilation) * c + ch];
  return detail::make_op<S>(std::move(out), {x}, [t_out, kernel, dilation, c](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    for (int i = 0; i < t_out; ++i)
      for (int j = 0; j < kernel; ++j)
        for (int ch = 0; ch < c; ++ch)
          g.data[static_cast<size_t>(i + j * dilation) * c + ch] +=
              node.grad.data[static_cast<size_t>(i) * kernel * c + j * c + ch];
  });
}

// Non-overlapping temporal max pooling over rows: (T,C) -> (floor(T/pool), C).
// Ties route the gradient to the first index.
template <class S>
Var<S> maxpool_time(const Var<S>& x, int pool) {
  int t = x->val.shape[0], c = x->val.shape[1];
  int t_out = t / pool;
  TensorT<S> out = TensorT<S>::zeros({t_out, c});
  std::vector<int> argmax(static_cast<size_t>(t_out) * c);
  for (int i = 0; i < t_out; ++i)
    for (int ch = 0; ch < c; ++ch) {
      int best = i * pool;
      S bv = x->val.data[static_cast<size_t>(best) * c + ch];
      for (int j = 1; j < pool; ++j) {
        S v = x->val.data[static_cast<size_t>(i * pool + j) * c + ch];
        if (v > bv) {
          bv = v;
          best = i * pool + j;
        }
      }
      out.data[static_cast<size_t>(i) * c + ch] = bv;
      argmax[static_cast<size_t>(i) * c + ch] = best;
    }
  return detail::make_op<S>(std::move(out), {x}, [argmax, t_out, c](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    for (int i = 0; i < t_out; ++i)
      for (int ch = 0; ch < c; ++ch)
        g.data[static_cast<size_t>(argmax[static_cast<size_t>(i) * c + ch]) * c + ch] +=
            node.grad.data[static_cast<size_t>(i) * c + ch];
  });
}

// Max over all rows per column: (T,C) -> (1,C). Ties go to the first row.
template <class S>
Var<S> max_over_time(const Var<S>& x) {
  int t = x->val.shape[0], c = x->val.shape[1];
  TensorT<S> out = TensorT<S>::zeros({1, c});
  std::vector<int> argmax(c, 0);
  for (int ch = 0; ch < c; ++ch) {
    S bv = x->val.data[ch];
    for (int i = 1; i < t; ++i) {
      S v = x->val.data[static_cast<size_t>(i) * c + ch];
      if (v > bv) {
        bv = v;
        argmax[ch] = i;
      }
    }
    out.data[ch] = bv;
  }
  return detail::make_op<S>(std::move(out), {x}, [argmax, c](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    for (int ch = 0; ch < c; ++ch)
      g.data[static_cast<size_t>(argmax[ch]) * c + ch] += node.grad.data[ch];
  });
}

template <class S>
Var<S> mean_all(const Var<S>& a) {
  S acc = 0;
  for (auto v : a->val.data) acc += v;
  std::int64_t n = a->val.size();
  TensorT<S> out({1}, {acc / static_cast<S>(n)});
  return detail::make_op<S>(std::move(out), {a}, [n](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    S d = node.grad.data[0] / static_cast<S>(n);
    for (auto& v : g.data) v += d;
  });
}

template <class S>
Var<S> sum_all(const Var<S>& a) {
  S acc = 0;
  for (auto v : a->val.data) acc += v;
  TensorT<S> out({1}, {acc});
  return detail::make_op<S>(std::move(out), {a}, [](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    for (auto& v : g.data) v += node.grad.data[0];
  });
}

// --- loss nodes ----------------------------------------------------------

// Class-weighted binary cross-entropy on a probability (scalar var).
// loss = -(b*log(p) + w*(1-b)*log(1-p)), p clamped to [1e-7, 1-1e-7].
template <class S>
Var<S> bce_term(const Var<S>& p, bool positive, S negative_weight) {
  if (p->val.size() != 1) throw ShapeMismatch("bce_term: scalar prob expected");
  const S lo = S(1e-7), hi = S(1) - S(1e-7);
  S pv = std::min(hi, std::max(lo, p->val.data[0]));
  S loss = positive ? -std::log(pv) : -negative_weight * std::log(S(1) - pv);
  bool clamped = p->val.data[0] < lo || p->val.data[0] > hi;
  TensorT<S> out({1}, {loss});
  return detail::make_op<S>(std::move(out), {p},
                            [pv, positive, negative_weight, clamped](VarNode<S>& node) {
                              if (clamped) return;  // gradient is cut at the clamp
                              S d = positive ? -S(1) / pv : negative_weight / (S(1) - pv);
                              node.parents[0]->ensure_grad().data[0] += d * node.grad.data[0];
                            });
}

// Fused softmax cross-entropy against a single class index.
template <class S>
Var<S> cross_entropy_logits(const Var<S>& logits, int target) {
  std::int64_t k = logits->val.size();
  if (target < 0 || target >= k) throw IdOutOfRange("cross_entropy: class out of range");
  S mx = *std::max_element(logits->val.data.begin(), logits->val.data.end());
  S sum = 0;
  std::vector<S> soft(static_cast<size_t>(k));
  for (std::int64_t i = 0; i < k; ++i) {
    soft[i] = std::exp(logits->val.data[i] - mx);
    sum += soft[i];
  }
  for (auto& v : soft) v /= sum;
  S loss = -std::log(std::max(soft[target], S(1e-30)));
  TensorT<S> out({1}, {loss});
  return detail::make_op<S>(std::move(out), {logits}, [soft, target](VarNode<S>& node) {
    auto& g = node.parents[0]->ensure_grad();
    S up = node.grad.data[0];
    for (size_t i = 0; i < soft.size(); ++i)
      g.data[i] += up * (soft[i] - (static_cast<int>(i) == target ? S(1) : S(0)));
  });
}

}  // namespace emojin::nn
