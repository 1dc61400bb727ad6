// Central-difference gradient oracle for verifying analytic backward passes.
#ifndef SAKT_GRADCHECK_HPP
#define SAKT_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>

#include "sakt/matrix.hpp"

namespace sakt {

// Entrywise (f(x + eps e) - f(x - eps e)) / (2 eps). f must be deterministic.
template <class T>
Matrix<T> finite_diff_gradient(const std::function<T(const Matrix<T>&)>& f,
                               const Matrix<T>& at, T eps = T(1e-5)) {
  Matrix<T> grad(at.rows(), at.cols());
  Matrix<T> x = at;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T orig = x.data()[i];
    x.data()[i] = orig + eps;
    const T plus = f(x);
    x.data()[i] = orig - eps;
    const T minus = f(x);
    x.data()[i] = orig;
    grad.data()[i] = (plus - minus) / (T(2) * eps);
  }
  return grad;
}

// |a - b| / max(1, |a|, |b|), maximized over entries.
template <class T>
T max_relative_error(const Matrix<T>& a, const Matrix<T>& b) {
  check_same_shape(a, b, "max_relative_error");
  T worst{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T x = a.data()[i], y = b.data()[i];
    const T denom = std::max({T(1), std::abs(x), std::abs(y)});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

}  // namespace sakt

#endif  // SAKT_GRADCHECK_HPP
