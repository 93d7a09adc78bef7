#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace emojin::nn {

struct ShapeMismatch : std::runtime_error {
  explicit ShapeMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Dense row-major tensor. The runtime scalar type is float (see Tensor
// below); the double instantiation exists for gradient checking, where
// float32 rounding would swamp a 1e-4 finite-difference tolerance.
template <class S>
struct TensorT {
  std::vector<int> shape;
  std::vector<S> data;

  TensorT() = default;
  TensorT(std::vector<int> shp, std::vector<S> values)
      : shape(std::move(shp)), data(std::move(values)) {
    if (static_cast<std::int64_t>(data.size()) != count(shape))
      throw ShapeMismatch("tensor data size does not match shape");
  }

  static std::int64_t count(const std::vector<int>& shp) {
    std::int64_t n = 1;
    for (int d : shp) {
      if (d < 1) throw ShapeMismatch("tensor dims must be >= 1");
      n *= d;
    }
    return n;
  }

  static TensorT zeros(std::vector<int> shp) {
    auto n = count(shp);
    return TensorT(std::move(shp), std::vector<S>(static_cast<size_t>(n), S(0)));
  }

  static TensorT full(std::vector<int> shp, S value) {
    auto n = count(shp);
    return TensorT(std::move(shp), std::vector<S>(static_cast<size_t>(n), value));
  }

  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const {
    if (shape.size() < 2) return shape.empty() ? 1 : 1;
    std::int64_t c = 1;
    for (size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return static_cast<int>(c);
  }

  S& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  S at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const TensorT& other) const { return shape == other.shape; }

  template <class T2>
  TensorT<T2> cast() const {
    TensorT<T2> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<T2>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;

// --- initializers -----------------------------------------------------

template <class S>
void fill_uniform(TensorT<S>& t, std::mt19937& rng, S lo, S hi) {
  std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
  for (auto& v : t.data) v = static_cast<S>(dist(rng));
}

// Glorot uniform over a (fan_in, fan_out) matrix.
template <class S>
void fill_glorot(TensorT<S>& t, std::mt19937& rng, int fan_in, int fan_out) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  fill_uniform(t, rng, static_cast<S>(-limit), static_cast<S>(limit));
}

// Orthogonalizes square column blocks of a (rows, k*rows) matrix via
// modified Gram-Schmidt on Gaussian draws. Used for LSTM recurrent kernels.
template <class S>
void fill_orthogonal_blocks(TensorT<S>& t, std::mt19937& rng) {
  int n = t.shape[0];
  int total_cols = t.cols();
  if (total_cols % n != 0) throw ShapeMismatch("orthogonal init needs column blocks of size rows");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> col(n, std::vector<double>(n));
  for (int block = 0; block < total_cols / n; ++block) {
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) col[j][i] = gauss(rng);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < j; ++k) {
        double dot = 0;
        for (int i = 0; i < n; ++i) dot += col[j][i] * col[k][i];
        for (int i = 0; i < n; ++i) col[j][i] -= dot * col[k][i];
      }
      double norm = 0;
      for (int i = 0; i < n; ++i) norm += col[j][i] * col[j][i];
      norm = std::sqrt(std::max(norm, 1e-12));
      for (int i = 0; i < n; ++i) col[j][i] /= norm;
    }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        t.at(i, block * n + j) = static_cast<S>(col[j][i]);
  }
}

}  // namespace emojin::nn
