// Differentiable building blocks: masked softmax, layer normalization,
// elementwise nonlinearities, and their backward passes.
#ifndef SAKT_OPS_HPP
#define SAKT_OPS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sakt/matrix.hpp"

namespace sakt {

template <class T>
T sigmoid(T z) {
  if (z >= T{}) {
    return T(1) / (T(1) + std::exp(-z));
  }
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Row-wise softmax over unmasked entries only. mask(i,j) != 0 marks entry
// (i,j) as masked out; masked entries are exactly zero in the result.
// Stabilized by subtracting the row maximum over unmasked entries.
template <class T>
Matrix<T> masked_softmax_rows(const Matrix<T>& x, const MaskMatrix& mask) {
  if (x.rows() != mask.rows() || x.cols() != mask.cols()) {
    throw DimensionError("masked_softmax_rows: logits " + x.shape_str() +
                         " vs mask (" + std::to_string(mask.rows()) + "x" +
                         std::to_string(mask.cols()) + ")");
  }
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    T row_max = -std::numeric_limits<T>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask(i, j)) continue;
      any = true;
      row_max = std::max(row_max, x(i, j));
    }
    if (!any) {
      throw std::domain_error("masked_softmax_rows: row " + std::to_string(i) +
                              " is fully masked");
    }
    T denom{};
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask(i, j)) continue;
      const T e = std::exp(x(i, j) - row_max);
      out(i, j) = e;
      denom += e;
    }
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (!mask(i, j)) out(i, j) /= denom;
    }
  }
  return out;
}

// Given softmax outputs `a` for one row (zeros at masked entries) and the
// gradient `da` w.r.t. those outputs, writes the gradient w.r.t. the logits.
template <class T>
void softmax_row_backward(const T* a, const T* da, T* dlogits, std::size_t m) {
  T dot{};
  for (std::size_t j = 0; j < m; ++j) dot += a[j] * da[j];
  for (std::size_t j = 0; j < m; ++j) dlogits[j] = a[j] * (da[j] - dot);
}

// y = gamma * (x - mean) / sqrt(var + eps) + beta, statistics over the
// feature dimension with population variance.
template <class T>
std::vector<T> layer_norm(const std::vector<T>& x, const std::vector<T>& gamma,
                          const std::vector<T>& beta, T eps = T(1e-8)) {
  if (x.size() != gamma.size() || x.size() != beta.size()) {
    throw DimensionError("layer_norm: x, gamma, beta lengths differ");
  }
  if (!(eps > T{})) throw std::invalid_argument("layer_norm: eps must be > 0");
  const std::size_t d = x.size();
  T mean{};
  for (const T& v : x) mean += v;
  mean /= static_cast<T>(d);
  T var{};
  for (const T& v : x) var += (v - mean) * (v - mean);
  var /= static_cast<T>(d);
  const T inv_std = T(1) / std::sqrt(var + eps);
  std::vector<T> y(d);
  for (std::size_t j = 0; j < d; ++j) {
    y[j] = gamma[j] * (x[j] - mean) * inv_std + beta[j];
  }
  return y;
}

template <class T>
struct LayerNormTrace {
  Matrix<T> xhat;            // normalized input, per row
  std::vector<T> inv_std;    // 1/sqrt(var + eps), per row
};

inline constexpr double kLayerNormEps = 1e-8;

// Row-wise layer norm over an n x d matrix; gamma/beta are 1 x d.
template <class T>
Matrix<T> layer_norm_rows(const Matrix<T>& x, const Matrix<T>& gamma,
                          const Matrix<T>& beta, LayerNormTrace<T>* trace,
                          T eps = T(kLayerNormEps)) {
  if (gamma.cols() != x.cols() || beta.cols() != x.cols()) {
    throw DimensionError("layer_norm_rows: gamma/beta width != " +
                         x.shape_str());
  }
  const std::size_t n = x.rows(), d = x.cols();
  Matrix<T> y(n, d);
  if (trace) {
    trace->xhat = Matrix<T>(n, d);
    trace->inv_std.assign(n, T{});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const T* xi = x.row_ptr(i);
    T mean{};
    for (std::size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<T>(d);
    T var{};
    for (std::size_t j = 0; j < d; ++j) var += (xi[j] - mean) * (xi[j] - mean);
    var /= static_cast<T>(d);
    const T inv_std = T(1) / std::sqrt(var + eps);
    T* yi = y.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      const T xhat = (xi[j] - mean) * inv_std;
      yi[j] = gamma(0, j) * xhat + beta(0, j);
      if (trace) trace->xhat(i, j) = xhat;
    }
    if (trace) trace->inv_std[i] = inv_std;
  }
  return y;
}

// Backward of layer_norm_rows. Accumulates dgamma/dbeta, returns dx.
template <class T>
Matrix<T> layer_norm_rows_backward(const Matrix<T>& dy,
                                   const LayerNormTrace<T>& trace,
                                   const Matrix<T>& gamma, Matrix<T>& dgamma,
                                   Matrix<T>& dbeta) {
  const std::size_t n = dy.rows(), d = dy.cols();
  Matrix<T> dx(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const T* dyi = dy.row_ptr(i);
    const T* xhat = trace.xhat.row_ptr(i);
    T sum_dxhat{}, sum_dxhat_xhat{};
    for (std::size_t j = 0; j < d; ++j) {
      const T dxhat = dyi[j] * gamma(0, j);
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat[j];
      dgamma(0, j) += dyi[j] * xhat[j];
      dbeta(0, j) += dyi[j];
    }
    const T inv_d = T(1) / static_cast<T>(d);
    T* dxi = dx.row_ptr(i);
    for (std::size_t j = 0; j < d; ++j) {
      const T dxhat = dyi[j] * gamma(0, j);
      dxi[j] = trace.inv_std[i] *
               (dxhat - sum_dxhat * inv_d - xhat[j] * sum_dxhat_xhat * inv_d);
    }
  }
  return dx;
}

template <class T>
Matrix<T> relu(const Matrix<T>& x) {
  Matrix<T> y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.data()[i] = x.data()[i] > T{} ? x.data()[i] : T{};
  }
  return y;
}

}  // namespace sakt

#endif  // SAKT_OPS_HPP
