#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sgrpo {

struct AdamWHyper {
  double lr = 1e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamWHyper&, const AdamWHyper&) = default;
};

// Decoupled weight decay: p <- p - lr*wd*p, then the bias-corrected Adam
// step on the first/second moment estimates. Decay applies to every tensor.
template <typename T>
class AdamW {
 public:
  AdamW(std::size_t n_params, AdamWHyper hyper);
  AdamW(AdamWHyper hyper, std::vector<T> first_moment, std::vector<T> second_moment,
        std::int64_t step_count);

  // Throws a numerical error (leaving params untouched) if any gradient is
  // NaN or infinite, or if the update produced a non-finite parameter.
  void step(std::span<T> params, std::span<const T> grads);

  const AdamWHyper& hyper() const { return hyper_; }
  void set_lr(double lr) { hyper_.lr = lr; }
  std::int64_t step_count() const { return step_count_; }
  const std::vector<T>& first_moment() const { return m_; }
  const std::vector<T>& second_moment() const { return v_; }

 private:
  AdamWHyper hyper_;
  std::vector<T> m_;
  std::vector<T> v_;
  std::int64_t step_count_ = 0;
};

extern template class AdamW<float>;
extern template class AdamW<double>;

}  // namespace sgrpo
