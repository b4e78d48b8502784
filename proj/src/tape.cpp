#include "ocean/tape.hpp"

#include <cmath>

namespace ocean {

template <class T>
void adam_step(std::span<ParamBlock<T>* const> blocks, T lr, T beta1, T beta2, T eps,
               int64_t t) {
  if (t <= 0) throw std::invalid_argument("adam_step: step count is 1-based, got " +
                                          std::to_string(t));
  const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), double(t)));
  const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), double(t)));
  for (ParamBlock<T>* b : blocks) {
    const int64_t n = b->numel();
    for (int64_t i = 0; i < n; ++i) {
      const T g = b->grad[i];
      b->m[i] = beta1 * b->m[i] + (T(1) - beta1) * g;
      b->v[i] = beta2 * b->v[i] + (T(1) - beta2) * g * g;
      const T mhat = b->m[i] / bc1;
      const T vhat = b->v[i] / bc2;
      b->value[i] -= lr * mhat / (static_cast<T>(std::sqrt(static_cast<double>(vhat))) + eps);
    }
    b->zero_grad();
  }
}

template void adam_step<float>(std::span<ParamBlock<float>* const>, float, float, float,
                               float, int64_t);
template void adam_step<double>(std::span<ParamBlock<double>* const>, double, double, double,
                                double, int64_t);

template struct ParamBlock<float>;
template struct ParamBlock<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace ocean
