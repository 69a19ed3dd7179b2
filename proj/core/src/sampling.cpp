#include "sudoku_grpo/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "sudoku_grpo/error.hpp"

namespace sgrpo {

template <typename T>
TokenId argmax_token(std::span<const T> logits) {
  TokenId best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<std::size_t>(best)]) best = static_cast<TokenId>(i);
  }
  return best;
}

template <typename T>
TokenId sample_token(std::span<const T> logits, double temperature, Rng& rng) {
  if (temperature <= 0.0) return argmax_token(logits);
  double mx = -INFINITY;
  for (T z : logits) mx = std::max(mx, static_cast<double>(z) / temperature);
  std::vector<double> w(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(static_cast<double>(logits[i]) / temperature - mx);
    sum += w[i];
  }
  double u = uniform01(rng) * sum;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return static_cast<TokenId>(i);
    u -= w[i];
  }
  // Rounding left u past the last bucket: fall back to the last nonzero weight.
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) return static_cast<TokenId>(i);
  }
  return 0;
}

template <typename T>
Completion continue_completion(typename Transformer<T>::Decoder decoder,
                               const typename Transformer<T>::RowVec& logits,
                               const SamplingMode& mode, int max_new,
                               std::optional<TokenId> stop_token) {
  if (max_new < 1) throw_input("sample_completion: max_new must be >= 1");
  Completion out;
  Rng rng(mode.seed);
  typename Transformer<T>::RowVec current = logits;
  for (int i = 0; i < max_new; ++i) {
    std::span<const T> row(current.data(), static_cast<std::size_t>(current.size()));
    const TokenId tok = mode.kind == SamplingMode::Kind::kGreedy
                            ? argmax_token(row)
                            : sample_token(row, mode.temperature, rng);
    const auto lp = log_softmax(row);
    out.ids.push_back(tok);
    out.log_probs.push_back(static_cast<double>(lp[static_cast<std::size_t>(tok)]));
    if (stop_token && tok == *stop_token) {
      out.stopped_at_eos = true;
      break;
    }
    if (i + 1 == max_new || decoder.position() >= decoder.capacity()) break;
    current = decoder.step(tok);
  }
  return out;
}

template <typename T>
Completion sample_completion(const Transformer<T>& model, std::span<const TokenId> prompt,
                             const SamplingMode& mode, int max_new,
                             std::optional<TokenId> stop_token) {
  if (prompt.empty()) throw_input("sample_completion: empty prompt");
  typename Transformer<T>::Decoder decoder(model);
  for (TokenId id : prompt) decoder.step(id);
  return continue_completion<T>(decoder, decoder.logits(), mode, max_new, stop_token);
}

template TokenId argmax_token(std::span<const float>);
template TokenId argmax_token(std::span<const double>);
template TokenId sample_token(std::span<const float>, double, Rng&);
template TokenId sample_token(std::span<const double>, double, Rng&);
template Completion continue_completion<float>(Transformer<float>::Decoder,
                                               const Transformer<float>::RowVec&,
                                               const SamplingMode&, int, std::optional<TokenId>);
template Completion continue_completion<double>(Transformer<double>::Decoder,
                                                const Transformer<double>::RowVec&,
                                                const SamplingMode&, int, std::optional<TokenId>);
template Completion sample_completion(const Transformer<float>&, std::span<const TokenId>,
                                      const SamplingMode&, int, std::optional<TokenId>);
template Completion sample_completion(const Transformer<double>&, std::span<const TokenId>,
                                      const SamplingMode&, int, std::optional<TokenId>);

}  // namespace sgrpo
