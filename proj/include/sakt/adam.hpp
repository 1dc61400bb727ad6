// Adam optimizer with bias correction.
#ifndef SAKT_ADAM_HPP
#define SAKT_ADAM_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "sakt/matrix.hpp"

namespace sakt {

template <class T>
struct AdamState {
  std::size_t step = 0;
  Matrix<T> m;
  Matrix<T> v;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  T learning_rate = T(0.001);

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, T lr)
      : m(rows, cols), v(rows, cols), learning_rate(lr) {}
};

template <class T>
void adam_step(Matrix<T>& param, const Matrix<T>& grad, AdamState<T>& state,
               const std::string& name = "param") {
  check_same_shape(param, grad, "adam_step param/grad");
  check_same_shape(param, state.m, "adam_step param/state");
  if (!grad.all_finite()) {
    throw std::runtime_error("adam_step: non-finite gradient for " + name);
  }
  state.step += 1;
  const T b1 = state.beta1, b2 = state.beta2;
  const T corr1 = T(1) - std::pow(b1, static_cast<T>(state.step));
  const T corr2 = T(1) - std::pow(b2, static_cast<T>(state.step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad.data()[i];
    T& m = state.m.data()[i];
    T& v = state.v.data()[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g * g;
    const T mhat = m / corr1;
    const T vhat = v / corr2;
    param.data()[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

}  // namespace sakt

#endif  // SAKT_ADAM_HPP
