#include "sudoku_grpo/adamw.hpp"

#include <cmath>
#include <string>

#include "sudoku_grpo/error.hpp"

namespace sgrpo {

template <typename T>
AdamW<T>::AdamW(std::size_t n_params, AdamWHyper hyper)
    : hyper_(hyper), m_(n_params, T(0)), v_(n_params, T(0)) {}

template <typename T>
AdamW<T>::AdamW(AdamWHyper hyper, std::vector<T> first_moment, std::vector<T> second_moment,
                std::int64_t step_count)
    : hyper_(hyper),
      m_(std::move(first_moment)),
      v_(std::move(second_moment)),
      step_count_(step_count) {
  if (m_.size() != v_.size()) throw_input("adamw: moment buffers differ in size");
}

template <typename T>
void AdamW<T>::step(std::span<T> params, std::span<const T> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw_input("adamw: parameter/gradient size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw_numerical("adamw: non-finite gradient at index " + std::to_string(i) +
                      " (step " + std::to_string(step_count_ + 1) + ")");
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const T lr = static_cast<T>(hyper_.lr);
  const T decay = static_cast<T>(1.0 - hyper_.lr * hyper_.weight_decay);
  const T b1 = static_cast<T>(hyper_.beta1);
  const T b2 = static_cast<T>(hyper_.beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(hyper_.beta1, t));
  const T bc2_sqrt = static_cast<T>(std::sqrt(1.0 - std::pow(hyper_.beta2, t)));
  const T eps = static_cast<T>(hyper_.eps);
  bool finite = true;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    m_[i] = b1 * m_[i] + (T(1) - b1) * g;
    v_[i] = b2 * v_[i] + (T(1) - b2) * g * g;
    const T m_hat = m_[i] / bc1;
    const T denom = std::sqrt(v_[i]) / bc2_sqrt + eps;
    params[i] = params[i] * decay - lr * m_hat / denom;
    finite = finite && std::isfinite(params[i]);
  }
  if (!finite) throw_numerical("adamw: parameter became non-finite at step " + std::to_string(step_count_));
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace sgrpo
