#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sudoku_grpo/model.hpp"
#include "sudoku_grpo/rng.hpp"

namespace sgrpo {

struct SamplingMode {
  enum class Kind { kGreedy, kCategorical };

  Kind kind = Kind::kGreedy;
  double temperature = 1.0;
  std::uint64_t seed = 0;

  static SamplingMode greedy() { return {}; }
  static SamplingMode categorical(double temperature, std::uint64_t seed) {
    return {Kind::kCategorical, temperature, seed};
  }
};

struct Completion {
  std::vector<TokenId> ids;
  // log p(token) under the untempered policy, one per generated token.
  std::vector<double> log_probs;
  bool stopped_at_eos = false;
};

// Argmax with ties broken toward the lowest token id.
template <typename T>
TokenId argmax_token(std::span<const T> logits);

// Draws from softmax(logits / temperature). temperature <= 0 is greedy.
template <typename T>
TokenId sample_token(std::span<const T> logits, double temperature, Rng& rng);

// Continues generation from a decoder whose last step produced `logits`.
// Stops after `stop_token`, after max_new tokens, or when the context fills.
template <typename T>
Completion continue_completion(typename Transformer<T>::Decoder decoder,
                               const typename Transformer<T>::RowVec& logits,
                               const SamplingMode& mode, int max_new,
                               std::optional<TokenId> stop_token);

// Autoregressive generation after `prompt`.
template <typename T>
Completion sample_completion(const Transformer<T>& model, std::span<const TokenId> prompt,
                             const SamplingMode& mode, int max_new,
                             std::optional<TokenId> stop_token = Vocabulary::kEos);

}  // namespace sgrpo
