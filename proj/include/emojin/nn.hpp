#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emojin/autograd.hpp"
#include "emojin/tensor.hpp"

namespace emojin::nn {

struct InputTooShort : std::runtime_error {
  explicit InputTooShort(const std::string& what) : std::runtime_error(what) {}
};
struct DegenerateStats : std::runtime_error {
  explicit DegenerateStats(const std::string& what) : std::runtime_error(what) {}
};

// --- parameter store -----------------------------------------------------
//
// Named trainable tensors. Ordered map so that optimizer sweeps and
// serialization are deterministic. Exclusively owned while training;
// immutable (and freely shareable) once frozen.

template <class S>
class ParamStoreT {
 public:
  Var<S> create(const std::string& name, TensorT<S> init) {
    if (params_.count(name)) throw std::runtime_error("duplicate parameter: " + name);
    auto v = make_var(std::move(init), true);
    params_[name] = v;
    return v;
  }

  const Var<S>& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
  }

  bool has(const std::string& name) const { return params_.count(name) > 0; }

  const std::map<std::string, Var<S>>& entries() const { return params_; }
  std::map<std::string, Var<S>>& entries() { return params_; }

  void zero_grads() {
    for (auto& [name, v] : params_) {
      (void)name;
      auto& g = v->ensure_grad();
      std::fill(g.data.begin(), g.data.end(), S(0));
    }
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& [name, v] : params_) {
      (void)name;
      n += v->val.size();
    }
    return n;
  }

  std::map<std::string, TensorT<S>> tensors() const {
    std::map<std::string, TensorT<S>> out;
    for (const auto& [name, v] : params_) out[name] = v->val;
    return out;
  }

  void load(const std::map<std::string, TensorT<S>>& tensors) {
    for (auto& [name, v] : params_) {
      auto it = tensors.find(name);
      if (it == tensors.end()) throw std::runtime_error("weight file misses parameter: " + name);
      if (it->second.shape != v->val.shape)
        throw ShapeMismatch("weight shape mismatch for " + name);
      v->val = it->second;
    }
  }

  template <class T2>
  ParamStoreT<T2> cast() const {
    ParamStoreT<T2> out;
    for (const auto& [name, v] : params_) out.create(name, v->val.template cast<T2>());
    return out;
  }

 private:
  std::map<std::string, Var<S>> params_;
};

using ParamStore = ParamStoreT<float>;

template <class S>
std::int64_t param_count(const std::map<std::string, TensorT<S>>& tensors) {
  std::int64_t n = 0;
  for (const auto& [name, t] : tensors) {
    (void)name;
    n += t.size();
  }
  return n;
}

// --- layers ----------------------------------------------------------------
//
// Graph builders; each returns a Var wired for backprop. PAD rows of an
// embedding table participate like any other row; masking is a model choice.

template <class S>
Var<S> embedding(const Var<S>& table, const std::vector<int>& ids) {
  return gather_rows(table, ids);
}

// Dilated valid 1-D convolution. x: (T, C_in); w: (kernel*C_in, filters);
// b: (filters). Output (T - (kernel-1)*dilation, filters).
template <class S>
Var<S> conv1d(const Var<S>& x, const Var<S>& w, const Var<S>& b, int kernel, int dilation) {
  int t = x->val.shape[0];
  int needed = (kernel - 1) * dilation + 1;
  if (t < needed)
    throw InputTooShort("conv1d: input length " + std::to_string(t) + " < " + std::to_string(needed));
  return add_rowvec(matmul(im2col(x, kernel, dilation), w), b);
}

template <class S>
Var<S> maxpool1d(const Var<S>& x, int pool) {
  if (x->val.shape[0] < pool) throw InputTooShort("maxpool1d: input shorter than pool size");
  return maxpool_time(x, pool);
}

template <class S>
Var<S> dense(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  return add_rowvec(matmul(x, w), b);
}

// --- LSTM ------------------------------------------------------------------
//
// Gate order inside the packed kernels is (input, forget, cell, output).

template <class S>
struct LstmWeights {
  Var<S> wx;  // (input_dim, 4*hidden)
  Var<S> wh;  // (hidden, 4*hidden)
  Var<S> b;   // (4*hidden)
  int hidden = 0;
};

template <class S>
LstmWeights<S> lstm_weights(ParamStoreT<S>& store, const std::string& prefix, int input_dim,
                            int hidden, std::mt19937& rng) {
  TensorT<S> wx = TensorT<S>::zeros({input_dim, 4 * hidden});
  fill_glorot(wx, rng, input_dim, 4 * hidden);
  TensorT<S> wh = TensorT<S>::zeros({hidden, 4 * hidden});
  fill_orthogonal_blocks(wh, rng);
  TensorT<S> b = TensorT<S>::zeros({4 * hidden});
  for (int i = hidden; i < 2 * hidden; ++i) b.data[i] = S(1);  // forget gate bias
  LstmWeights<S> w;
  w.wx = store.create(prefix + ".wx", std::move(wx));
  w.wh = store.create(prefix + ".wh", std::move(wh));
  w.b = store.create(prefix + ".b", std::move(b));
  w.hidden = hidden;
  return w;
}

// Standard LSTM recurrence with zero initial state over a sequence of (1,D)
// rows. reverse=true consumes the sequence right-to-left but returns outputs
// aligned with the input order.
template <class S>
std::vector<Var<S>> lstm_run(const LstmWeights<S>& w, const std::vector<Var<S>>& xs, bool reverse) {
  if (xs.empty()) throw InputTooShort("lstm: empty sequence");
  int h = w.hidden;
  std::vector<Var<S>> out(xs.size());
  Var<S> hprev = constant(TensorT<S>::zeros({1, h}));
  Var<S> cprev = constant(TensorT<S>::zeros({1, h}));
  for (size_t step = 0; step < xs.size(); ++step) {
    size_t t = reverse ? xs.size() - 1 - step : step;
    Var<S> z = add_rowvec(add(matmul(xs[t], w.wx), matmul(hprev, w.wh)), w.b);
    Var<S> gi = sigmoid(slice_cols(z, 0, h));
    Var<S> gf = sigmoid(slice_cols(z, h, 2 * h));
    Var<S> gc = tanh_op(slice_cols(z, 2 * h, 3 * h));
    Var<S> go = sigmoid(slice_cols(z, 3 * h, 4 * h));
    Var<S> c = add(mul(gf, cprev), mul(gi, gc));
    Var<S> hcur = mul(go, tanh_op(c));
    out[t] = hcur;
    hprev = hcur;
    cprev = c;
  }
  return out;
}

// Bidirectional run: per-step concat of forward and backward outputs (1,2H).
template <class S>
std::vector<Var<S>> bilstm_run(const LstmWeights<S>& fwd, const LstmWeights<S>& bwd,
                               const std::vector<Var<S>>& xs) {
  auto f = lstm_run(fwd, xs, false);
  auto b = lstm_run(bwd, xs, true);
  std::vector<Var<S>> out(xs.size());
  for (size_t t = 0; t < xs.size(); ++t) out[t] = concat_cols<S>({f[t], b[t]});
  return out;
}

// --- char-aware word features -----------------------------------------------
//
// Per-width valid convolution over character embeddings followed by
// max-over-time, concatenated across widths. Words shorter than a width
// contribute zeros for that width's filters.

template <class S>
struct CharCnnWeights {
  Var<S> char_emb;  // (char_vocab, char_dim)
  struct Branch {
    int width;
    int filters;
    Var<S> w;  // (width*char_dim, filters)
    Var<S> b;  // (filters)
  };
  std::vector<Branch> branches;
  int feature_dim = 0;
};

template <class S>
CharCnnWeights<S> char_cnn_weights(ParamStoreT<S>& store, const std::string& prefix,
                                   int char_vocab, int char_dim,
                                   const std::vector<std::pair<int, int>>& width_filters,
                                   std::mt19937& rng) {
  CharCnnWeights<S> w;
  TensorT<S> emb = TensorT<S>::zeros({char_vocab, char_dim});
  fill_uniform(emb, rng, S(-0.05), S(0.05));
  w.char_emb = store.create(prefix + ".char_emb", std::move(emb));
  for (auto [width, filters] : width_filters) {
    typename CharCnnWeights<S>::Branch br;
    br.width = width;
    br.filters = filters;
    TensorT<S> cw = TensorT<S>::zeros({width * char_dim, filters});
    fill_glorot(cw, rng, width * char_dim, filters);
    br.w = store.create(prefix + ".conv" + std::to_string(width) + ".w", std::move(cw));
    br.b = store.create(prefix + ".conv" + std::to_string(width) + ".b",
                        TensorT<S>::zeros({filters}));
    w.branches.push_back(br);
    w.feature_dim += filters;
  }
  return w;
}

template <class S>
Var<S> char_cnn(const CharCnnWeights<S>& w, const std::vector<int>& char_ids) {
  if (char_ids.empty()) throw InputTooShort("char_cnn: empty word");
  Var<S> emb = gather_rows(w.char_emb, char_ids);
  std::vector<Var<S>> features;
  for (const auto& br : w.branches) {
    if (static_cast<int>(char_ids.size()) >= br.width) {
      Var<S> conv = conv1d(emb, br.w, br.b, br.width, 1);
      features.push_back(max_over_time(conv));
    } else {
      features.push_back(constant(TensorT<S>::zeros({1, br.filters})));
    }
  }
  return concat_cols(features);
}

// --- attention ---------------------------------------------------------------

// Gated fusion of a word vector and a char-feature vector: two scalar gates
// from learned scorers, softmax-normalized, scaling the concatenation.
template <class S>
struct FeatureAttentionWeights {
  Var<S> word_scorer;  // (word_dim)
  Var<S> char_scorer;  // (char_dim)
  Var<S> bias;         // (2)
};

template <class S>
FeatureAttentionWeights<S> feature_attention_weights(ParamStoreT<S>& store,
                                                     const std::string& prefix, int word_dim,
                                                     int char_dim, std::mt19937& rng) {
  FeatureAttentionWeights<S> w;
  TensorT<S> uw = TensorT<S>::zeros({word_dim});
  fill_glorot(uw, rng, word_dim, 1);
  TensorT<S> uc = TensorT<S>::zeros({char_dim});
  fill_glorot(uc, rng, char_dim, 1);
  w.word_scorer = store.create(prefix + ".word_scorer", std::move(uw));
  w.char_scorer = store.create(prefix + ".char_scorer", std::move(uc));
  w.bias = store.create(prefix + ".bias", TensorT<S>::zeros({2}));
  return w;
}

template <class S>
Var<S> feature_attention(const FeatureAttentionWeights<S>& w, const Var<S>& word_vec,
                         const Var<S>& char_vec) {
  int wd = static_cast<int>(word_vec->val.size());
  int cd = static_cast<int>(char_vec->val.size());
  Var<S> sw = matmul(reshape(word_vec, {1, wd}), reshape(w.word_scorer, {wd, 1}));
  Var<S> sc = matmul(reshape(char_vec, {1, cd}), reshape(w.char_scorer, {cd, 1}));
  Var<S> logits = add(concat_cols<S>({sw, sc}), reshape(w.bias, {1, 2}));
  Var<S> gates = softmax(logits);
  Var<S> gw = slice_cols(gates, 0, 1);
  Var<S> gc = slice_cols(gates, 1, 2);
  return concat_cols<S>({scale_by(reshape(word_vec, {1, wd}), gw),
                         scale_by(reshape(char_vec, {1, cd}), gc)});
}

// Additive temporal attention: e_t = u . tanh(W h_t), alpha = softmax(e),
// output = sum_t alpha_t h_t.
template <class S>
struct TemporalAttentionWeights {
  Var<S> w;  // (D, A)
  Var<S> u;  // (A)
};

template <class S>
TemporalAttentionWeights<S> temporal_attention_weights(ParamStoreT<S>& store,
                                                       const std::string& prefix, int dim,
                                                       int attn_dim, std::mt19937& rng) {
  TemporalAttentionWeights<S> w;
  TensorT<S> wm = TensorT<S>::zeros({dim, attn_dim});
  fill_glorot(wm, rng, dim, attn_dim);
  TensorT<S> u = TensorT<S>::zeros({attn_dim});
  fill_glorot(u, rng, attn_dim, 1);
  w.w = store.create(prefix + ".w", std::move(wm));
  w.u = store.create(prefix + ".u", std::move(u));
  return w;
}

template <class S>
Var<S> temporal_attention(const TemporalAttentionWeights<S>& w, const Var<S>& seq) {
  int a = w.u->val.shape[0];
  Var<S> scores = matmul(tanh_op(matmul(seq, w.w)), reshape(w.u, {a, 1}));  // (T,1)
  Var<S> alpha = softmax(scores);
  int t = seq->val.shape[0];
  return matmul(reshape(alpha, {1, t}), seq);  // (1,D)
}

// --- losses -------------------------------------------------------------------

// Scaled binary cross-entropy with an explicit negative-class weight (the
// BiLSTM ablations use a configured ratio rather than the measured N/M).
// Mean over the batch.
template <class S>
Var<S> weighted_bce_fixed(const std::vector<Var<S>>& probs, const std::vector<bool>& labels,
                          S negative_weight) {
  if (probs.empty() || probs.size() != labels.size())
    throw ShapeMismatch("weighted_bce: batch mismatch");
  std::vector<Var<S>> terms;
  terms.reserve(probs.size());
  for (size_t i = 0; i < probs.size(); ++i)
    terms.push_back(bce_term(probs[i], labels[i], negative_weight));
  Var<S> total = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) total = add(total, terms[i]);
  return scale(total, S(1) / static_cast<S>(terms.size()));
}

// Negative class weighted by the boundary-to-non-boundary sample ratio N/M.
template <class S>
Var<S> weighted_bce(const std::vector<Var<S>>& probs, const std::vector<bool>& labels,
                    std::int64_t n_pos, std::int64_t n_neg) {
  if (n_neg == 0) throw DegenerateStats("weighted_bce: no negative samples (M == 0)");
  S w = static_cast<S>(static_cast<double>(n_pos) / static_cast<double>(n_neg));
  return weighted_bce_fixed(probs, labels, w);
}

template <class S>
Var<S> cross_entropy(const Var<S>& logits, int target) {
  return cross_entropy_logits(logits, target);
}

// --- optimizer ------------------------------------------------------------------

struct EpochStats {
  float loss = 0;
  float accuracy = 0;
};
using TrainHistory = std::vector<EpochStats>;

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamStore& params) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (auto& [name, v] : params.entries()) {
      auto& m = moment1_[name];
      auto& s = moment2_[name];
      if (m.data.empty()) {
        m = Tensor::zeros(v->val.shape);
        s = Tensor::zeros(v->val.shape);
      }
      const auto& g = v->grad;
      if (g.data.empty()) continue;
      for (std::int64_t i = 0; i < v->val.size(); ++i) {
        float gi = g.data[i];
        m.data[i] = cfg_.beta1 * m.data[i] + (1 - cfg_.beta1) * gi;
        s.data[i] = cfg_.beta2 * s.data[i] + (1 - cfg_.beta2) * gi * gi;
        float mhat = static_cast<float>(m.data[i] / bc1);
        float shat = static_cast<float>(s.data[i] / bc2);
        v->val.data[i] -= cfg_.lr * mhat / (std::sqrt(shat) + cfg_.eps);
      }
    }
  }

 private:
  AdamConfig cfg_;
  int t_ = 0;
  std::map<std::string, Tensor> moment1_;
  std::map<std::string, Tensor> moment2_;
};

// --- gradient checking -----------------------------------------------------------
//
// Central differences against analytic gradients, evaluated in double
// precision: with float32 arithmetic the cancellation noise at eps=1e-4
// would exceed the tolerance being verified.

using CheckStore = ParamStoreT<double>;
using CheckFn = std::function<Var<double>(CheckStore&)>;

inline double grad_check(CheckStore& params, const CheckFn& model_fn, double eps = 1e-4) {
  params.zero_grads();
  Var<double> loss = model_fn(params);
  backward(loss);
  std::map<std::string, TensorT<double>> analytic;
  for (const auto& [name, v] : params.entries()) analytic[name] = v->ensure_grad();

  double worst = 0;
  for (auto& [name, v] : params.entries()) {
    for (std::int64_t i = 0; i < v->val.size(); ++i) {
      double orig = v->val.data[i];
      v->val.data[i] = orig + eps;
      double up = model_fn(params)->val.data[0];
      v->val.data[i] = orig - eps;
      double down = model_fn(params)->val.data[0];
      v->val.data[i] = orig;
      double numeric = (up - down) / (2 * eps);
      double a = analytic[name].data[i];
      double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

// --- storage quantization ----------------------------------------------------------

struct QuantizedBlob {
  std::vector<int> shape;
  float scale = 1.0f;
  std::int8_t zero_point = 0;  // symmetric: always 0
  std::vector<std::int8_t> payload;
};

QuantizedBlob quantize8(const Tensor& t);
Tensor dequantize8(const QuantizedBlob& blob);
std::map<std::string, QuantizedBlob> quantize8(const std::map<std::string, Tensor>& tensors);
std::map<std::string, Tensor> dequantize8(const std::map<std::string, QuantizedBlob>& blobs);

// --- weight files -------------------------------------------------------------------
//
// Binary, little-endian. Magic "VMW1", u32 version, u8 quantized flag,
// u32 tensor count, then per tensor: u32 name length + bytes, u32 rank,
// u32 dims, payload (float32, or int8 payload + f32 scale + i8 zero point).

void save_weights(const std::filesystem::path& path, const std::map<std::string, Tensor>& tensors);
void save_weights_quantized(const std::filesystem::path& path,
                            const std::map<std::string, Tensor>& tensors);

struct WeightFile {
  bool quantized = false;
  std::map<std::string, Tensor> tensors;  // dequantized view when quantized
};
WeightFile load_weights(const std::filesystem::path& path);

// --- GloVe-style embedding loader ----------------------------------------------------
//
// Plain-text "word v1 v2 ... vD" lines. Rows for words missing from the
// file keep their existing initialization.

void load_pretrained_embeddings(const std::filesystem::path& path,
                                const std::vector<std::string>& id_to_word, Tensor& table);

}  // namespace emojin::nn
