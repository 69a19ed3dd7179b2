#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sudoku_grpo/token_codec.hpp"

namespace sgrpo {

// Parameter and gradient storage. A fixed base alignment keeps Eigen's
// vectorized kernels on the same code path for every allocation, which the
// bit-exact determinism tests depend on.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

struct ModelConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_model = 128;
  int vocab_size = 14;
  int max_seq_len = 246;
  std::uint64_t seed = 0;

  void validate() const;

  // 4 layers / 4 heads / 128 wide.
  static ModelConfig desk(int vocab_size, int max_seq_len, std::uint64_t seed = 0);
  // 8 layers / 8 heads / 512 wide.
  static ModelConfig paper(int vocab_size, int max_seq_len, std::uint64_t seed = 0);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class TensorKind { kWeight, kBias, kGain };

struct TensorInfo {
  std::string name;
  TensorKind kind = TensorKind::kWeight;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Offsets of one pre-norm block's tensors inside the flat parameter buffer.
struct BlockOffsets {
  std::size_t ln1_g, ln1_b;
  std::size_t w_qkv, b_qkv;  // d x 3d, 3d
  std::size_t w_out, b_out;  // d x d, d
  std::size_t ln2_g, ln2_b;
  std::size_t w_fc, b_fc;      // d x 4d, 4d
  std::size_t w_proj, b_proj;  // 4d x d, d
};

// Named tensor directory over a single contiguous buffer. Shapes are a pure
// function of ModelConfig.
class ParamLayout {
 public:
  explicit ParamLayout(const ModelConfig& config);

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  std::size_t total() const { return total_; }
  const TensorInfo& find(std::string_view name) const;

  std::size_t wte() const { return wte_; }
  std::size_t wpe() const { return wpe_; }
  std::size_t lnf_g() const { return lnf_g_; }
  std::size_t lnf_b() const { return lnf_b_; }
  std::size_t head() const { return head_; }
  const BlockOffsets& block(int layer) const { return blocks_[static_cast<std::size_t>(layer)]; }

  // V*d + T*d + L*(12 d^2 + 13 d) + 2d + d*V
  static std::size_t closed_form_count(const ModelConfig& config);

 private:
  std::size_t add(std::string name, TensorKind kind, int rows, int cols);

  std::vector<TensorInfo> tensors_;
  std::vector<BlockOffsets> blocks_;
  std::size_t wte_ = 0, wpe_ = 0, lnf_g_ = 0, lnf_b_ = 0, head_ = 0;
  std::size_t total_ = 0;
};

// GPT-2 style decoder: learned absolute positions, pre-LayerNorm blocks,
// tanh-GELU MLP with 4x expansion, untied bias-free output head.
template <typename T>
class Transformer {
 public:
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

  struct BlockTape {
    Mat xhat1, h1, qkv, att_out, xhat2, h2, fc, act;
    Vec rstd1, rstd2;
    std::vector<Mat> probs;  // one S x S causal attention matrix per head
  };

  // Activations kept from a forward pass for the backward pass.
  struct Tape {
    std::vector<TokenId> ids;
    std::vector<BlockTape> blocks;
    Mat xhat_f, h_f, logits, log_probs;  // log_probs: row-wise log-softmax
    Vec rstd_f;
  };

  // Incremental decoder with per-layer key/value caches. Copyable, so a
  // prefilled prompt can be forked into several continuations.
  class Decoder {
   public:
    explicit Decoder(const Transformer& model);

    // Consumes the token at the next position; returns that position's logits.
    const RowVec& step(TokenId id);
    int position() const { return pos_; }
    int capacity() const { return model_->config().max_seq_len; }
    const RowVec& logits() const { return logits_; }

   private:
    const Transformer* model_;
    std::vector<Mat> keys_, values_;
    int pos_ = 0;
    RowVec logits_;
  };

  explicit Transformer(const ModelConfig& config);

  // normal(0, 0.02) weights and embeddings, zero biases, unit LN gains.
  void init_weights(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  AlignedVector<T>& params() { return params_; }
  const AlignedVector<T>& params() const { return params_; }
  std::size_t num_params() const { return params_.size(); }

  // Causal logits, one row per input position.
  Mat forward(std::span<const TokenId> ids) const;
  std::vector<Mat> forward_batch(const std::vector<std::vector<TokenId>>& batch) const;

  Tape forward_tape(std::span<const TokenId> ids) const;

  // Entry t (t >= 1) is log p(ids[t] | ids[<t]); entry 0 is zero.
  std::vector<T> target_log_probs(const Tape& tape) const;

  // Accumulates dL/dparams into `grads` given dL/d(target log-prob) per
  // position (same indexing as target_log_probs).
  void backward(const Tape& tape, std::span<const T> dloss_dlogp, std::span<T> grads) const;

 private:
  void check_ids(std::span<const TokenId> ids) const;

  ModelConfig config_;
  ParamLayout layout_;
  AlignedVector<T> params_;
};

template <typename T>
struct LossResult {
  T loss = 0;
  AlignedVector<T> grads;
  int n_targets = 0;
};

// Mean token cross-entropy over loss-mask positions of the batch.
template <typename T>
LossResult<T> loss_and_grads(const Transformer<T>& model, std::span<const TokenSequence> batch);

// Sum over loss-mask positions of weight * (-log p(token)). weights[i] is
// aligned with batch[i].ids; entries off the mask are ignored.
template <typename T>
LossResult<T> weighted_token_loss(const Transformer<T>& model,
                                  std::span<const TokenSequence> batch,
                                  std::span<const std::vector<T>> weights);

// Row-wise log-softmax.
template <typename T>
std::vector<T> log_softmax(std::span<const T> logits);

extern template class Transformer<float>;
extern template class Transformer<double>;

}  // namespace sgrpo
