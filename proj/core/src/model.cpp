#include "sudoku_grpo/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sudoku_grpo/error.hpp"
#include "sudoku_grpo/rng.hpp"

namespace sgrpo {
namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;
constexpr double kGeluCoeff = 0.044715;

template <typename T>
using MatT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowT = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using ConstMatMap = Eigen::Map<const MatT<T>>;
template <typename T>
using MatMap = Eigen::Map<MatT<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowT<T>>;
template <typename T>
using RowMap = Eigen::Map<RowT<T>>;

template <typename T>
T gelu(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T inner = k * (x + static_cast<T>(kGeluCoeff) * x * x * x);
  return static_cast<T>(0.5) * x * (static_cast<T>(1) + std::tanh(inner));
}

template <typename T>
T gelu_grad(T x) {
  const T k = static_cast<T>(std::sqrt(2.0 / std::numbers::pi));
  const T c = static_cast<T>(kGeluCoeff);
  const T th = std::tanh(k * (x + c * x * x * x));
  return static_cast<T>(0.5) * (static_cast<T>(1) + th) +
         static_cast<T>(0.5) * x * (static_cast<T>(1) - th * th) * k *
             (static_cast<T>(1) + static_cast<T>(3) * c * x * x);
}

template <typename T>
void layernorm_forward(const MatT<T>& x, const T* gain, const T* bias, MatT<T>& xhat,
                       VecT<T>& rstd, MatT<T>& y) {
  const auto rows = x.rows();
  const auto d = x.cols();
  ConstRowMap<T> g(gain, d);
  ConstRowMap<T> b(bias, d);
  xhat.resize(rows, d);
  y.resize(rows, d);
  rstd.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const T mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).matrix();
    const T var = centered.squaredNorm() / static_cast<T>(d);
    const T r = static_cast<T>(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    rstd(i) = r;
    xhat.row(i) = centered * r;
    y.row(i) = (xhat.row(i).array() * g.array() + b.array()).matrix();
  }
}

template <typename T>
RowT<T> layernorm_row(const RowT<T>& x, const T* gain, const T* bias) {
  const auto d = x.cols();
  const T mean = x.mean();
  RowT<T> centered = (x.array() - mean).matrix();
  const T var = centered.squaredNorm() / static_cast<T>(d);
  const T r = static_cast<T>(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
  return ((centered.array() * r) * ConstRowMap<T>(gain, d).array() +
          ConstRowMap<T>(bias, d).array())
      .matrix();
}

template <typename T>
MatT<T> layernorm_backward(const MatT<T>& dy, const MatT<T>& xhat, const VecT<T>& rstd,
                           const T* gain, T* dgain, T* dbias) {
  const auto rows = dy.rows();
  const auto d = dy.cols();
  RowMap<T>(dgain, d) += (dy.array() * xhat.array()).colwise().sum().matrix();
  RowMap<T>(dbias, d) += dy.colwise().sum();
  const MatT<T> dxhat = (dy.array().rowwise() * ConstRowMap<T>(gain, d).array()).matrix();
  MatT<T> dx(rows, d);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const T m1 = dxhat.row(i).mean();
    const T m2 = dxhat.row(i).dot(xhat.row(i)) / static_cast<T>(d);
    dx.row(i) = (rstd(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2)).matrix();
  }
  return dx;
}

// In-place softmax over the first `n` entries of a row; entries beyond are zeroed.
template <typename Row>
void causal_softmax_row(Row&& row, Eigen::Index n) {
  using T = typename std::decay_t<Row>::Scalar;
  T mx = row.head(n).maxCoeff();
  T sum = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    row(j) = std::exp(row(j) - mx);
    sum += row(j);
  }
  const T inv = static_cast<T>(1) / sum;
  for (Eigen::Index j = 0; j < n; ++j) row(j) *= inv;
  for (Eigen::Index j = n; j < row.size(); ++j) row(j) = 0;
}

}  // namespace

void ModelConfig::validate() const {
  if (n_layers < 1 || n_heads < 1 || d_model < 1 || vocab_size < 1 || max_seq_len < 1) {
    throw_input("model dimensions must all be >= 1");
  }
  if (d_model % n_heads != 0) {
    throw_input("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                std::to_string(n_heads));
  }
}

ModelConfig ModelConfig::desk(int vocab_size, int max_seq_len, std::uint64_t seed) {
  return {4, 4, 128, vocab_size, max_seq_len, seed};
}

ModelConfig ModelConfig::paper(int vocab_size, int max_seq_len, std::uint64_t seed) {
  return {8, 8, 512, vocab_size, max_seq_len, seed};
}

ParamLayout::ParamLayout(const ModelConfig& config) {
  config.validate();
  const int d = config.d_model;
  wte_ = add("wte", TensorKind::kWeight, config.vocab_size, d);
  wpe_ = add("wpe", TensorKind::kWeight, config.max_seq_len, d);
  for (int l = 0; l < config.n_layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    BlockOffsets b{};
    b.ln1_g = add(p + "ln1.gain", TensorKind::kGain, 1, d);
    b.ln1_b = add(p + "ln1.bias", TensorKind::kBias, 1, d);
    b.w_qkv = add(p + "attn.w_qkv", TensorKind::kWeight, d, 3 * d);
    b.b_qkv = add(p + "attn.b_qkv", TensorKind::kBias, 1, 3 * d);
    b.w_out = add(p + "attn.w_out", TensorKind::kWeight, d, d);
    b.b_out = add(p + "attn.b_out", TensorKind::kBias, 1, d);
    b.ln2_g = add(p + "ln2.gain", TensorKind::kGain, 1, d);
    b.ln2_b = add(p + "ln2.bias", TensorKind::kBias, 1, d);
    b.w_fc = add(p + "mlp.w_fc", TensorKind::kWeight, d, 4 * d);
    b.b_fc = add(p + "mlp.b_fc", TensorKind::kBias, 1, 4 * d);
    b.w_proj = add(p + "mlp.w_proj", TensorKind::kWeight, 4 * d, d);
    b.b_proj = add(p + "mlp.b_proj", TensorKind::kBias, 1, d);
    blocks_.push_back(b);
  }
  lnf_g_ = add("ln_f.gain", TensorKind::kGain, 1, d);
  lnf_b_ = add("ln_f.bias", TensorKind::kBias, 1, d);
  head_ = add("lm_head", TensorKind::kWeight, d, config.vocab_size);
}

std::size_t ParamLayout::add(std::string name, TensorKind kind, int rows, int cols) {
  TensorInfo info{std::move(name), kind, rows, cols, total_};
  total_ += info.size();
  tensors_.push_back(std::move(info));
  return tensors_.back().offset;
}

const TensorInfo& ParamLayout::find(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw_input("no parameter tensor named '" + std::string(name) + "'");
}

std::size_t ParamLayout::closed_form_count(const ModelConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  const std::size_t v = static_cast<std::size_t>(c.vocab_size);
  const std::size_t t = static_cast<std::size_t>(c.max_seq_len);
  const std::size_t l = static_cast<std::size_t>(c.n_layers);
  return v * d + t * d + l * (12 * d * d + 13 * d) + 2 * d + d * v;
}

template <typename T>
Transformer<T>::Transformer(const ModelConfig& config)
    : config_(config), layout_(config), params_(layout_.total(), T(0)) {
  for (const auto& t : layout_.tensors()) {
    if (t.kind == TensorKind::kGain) {
      std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size(), T(1));
    }
  }
}

template <typename T>
void Transformer<T>::init_weights(std::uint64_t seed) {
  Rng rng = make_rng(seed, "model.init");
  for (const auto& t : layout_.tensors()) {
    T* p = params_.data() + t.offset;
    for (std::size_t i = 0; i < t.size(); ++i) {
      switch (t.kind) {
        case TensorKind::kWeight: p[i] = static_cast<T>(kInitStd * standard_normal(rng)); break;
        case TensorKind::kBias: p[i] = T(0); break;
        case TensorKind::kGain: p[i] = T(1); break;
      }
    }
  }
}

template <typename T>
void Transformer<T>::check_ids(std::span<const TokenId> ids) const {
  if (ids.empty()) throw_input("forward: empty token sequence");
  if (static_cast<int>(ids.size()) > config_.max_seq_len) {
    throw_input("forward: sequence length " + std::to_string(ids.size()) +
                " exceeds max_seq_len " + std::to_string(config_.max_seq_len));
  }
  for (TokenId id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw_input("forward: token id " + std::to_string(id) + " outside vocabulary of size " +
                  std::to_string(config_.vocab_size));
    }
  }
}

template <typename T>
typename Transformer<T>::Tape Transformer<T>::forward_tape(std::span<const TokenId> ids) const {
  check_ids(ids);
  const T* p = params_.data();
  const Eigen::Index S = static_cast<Eigen::Index>(ids.size());
  const int d = config_.d_model;
  const int H = config_.n_heads;
  const int hd = d / H;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

  Tape tape;
  tape.ids.assign(ids.begin(), ids.end());
  tape.blocks.resize(static_cast<std::size_t>(config_.n_layers));

  Mat x(S, d);
  ConstMatMap<T> wte(p + layout_.wte(), config_.vocab_size, d);
  ConstMatMap<T> wpe(p + layout_.wpe(), config_.max_seq_len, d);
  for (Eigen::Index t = 0; t < S; ++t) x.row(t) = wte.row(ids[t]) + wpe.row(t);

  for (int l = 0; l < config_.n_layers; ++l) {
    BlockTape& bt = tape.blocks[static_cast<std::size_t>(l)];
    const BlockOffsets& o = layout_.block(l);

    layernorm_forward<T>(x, p + o.ln1_g, p + o.ln1_b, bt.xhat1, bt.rstd1, bt.h1);
    bt.qkv.noalias() = bt.h1 * ConstMatMap<T>(p + o.w_qkv, d, 3 * d);
    bt.qkv.rowwise() += ConstRowMap<T>(p + o.b_qkv, 3 * d);

    bt.att_out.resize(S, d);
    bt.probs.resize(static_cast<std::size_t>(H));
    for (int h = 0; h < H; ++h) {
      const auto q = bt.qkv.middleCols(h * hd, hd);
      const auto k = bt.qkv.middleCols(d + h * hd, hd);
      const auto v = bt.qkv.middleCols(2 * d + h * hd, hd);
      Mat& probs = bt.probs[static_cast<std::size_t>(h)];
      probs.noalias() = q * k.transpose();
      probs *= scale;
      for (Eigen::Index i = 0; i < S; ++i) causal_softmax_row(probs.row(i), i + 1);
      bt.att_out.middleCols(h * hd, hd).noalias() = probs * v;
    }
    x.noalias() += bt.att_out * ConstMatMap<T>(p + o.w_out, d, d);
    x.rowwise() += ConstRowMap<T>(p + o.b_out, d);

    layernorm_forward<T>(x, p + o.ln2_g, p + o.ln2_b, bt.xhat2, bt.rstd2, bt.h2);
    bt.fc.noalias() = bt.h2 * ConstMatMap<T>(p + o.w_fc, d, 4 * d);
    bt.fc.rowwise() += ConstRowMap<T>(p + o.b_fc, 4 * d);
    bt.act = bt.fc.unaryExpr([](T z) { return gelu(z); });
    x.noalias() += bt.act * ConstMatMap<T>(p + o.w_proj, 4 * d, d);
    x.rowwise() += ConstRowMap<T>(p + o.b_proj, d);
  }

  layernorm_forward<T>(x, p + layout_.lnf_g(), p + layout_.lnf_b(), tape.xhat_f, tape.rstd_f,
                       tape.h_f);
  tape.logits.noalias() = tape.h_f * ConstMatMap<T>(p + layout_.head(), d, config_.vocab_size);
  tape.log_probs.resize(S, config_.vocab_size);
  for (Eigen::Index t = 0; t < S; ++t) {
    const T mx = tape.logits.row(t).maxCoeff();
    const T lse = mx + std::log((tape.logits.row(t).array() - mx).exp().sum());
    tape.log_probs.row(t) = (tape.logits.row(t).array() - lse).matrix();
  }
  return tape;
}

template <typename T>
typename Transformer<T>::Mat Transformer<T>::forward(std::span<const TokenId> ids) const {
  return forward_tape(ids).logits;
}

template <typename T>
std::vector<typename Transformer<T>::Mat> Transformer<T>::forward_batch(
    const std::vector<std::vector<TokenId>>& batch) const {
  std::vector<Mat> out;
  out.reserve(batch.size());
  for (const auto& ids : batch) out.push_back(forward(ids));
  return out;
}

template <typename T>
std::vector<T> Transformer<T>::target_log_probs(const Tape& tape) const {
  std::vector<T> out(tape.ids.size(), T(0));
  for (std::size_t t = 1; t < tape.ids.size(); ++t) {
    out[t] = tape.log_probs(static_cast<Eigen::Index>(t - 1), tape.ids[t]);
  }
  return out;
}

template <typename T>
void Transformer<T>::backward(const Tape& tape, std::span<const T> dloss_dlogp,
                              std::span<T> grads) const {
  const Eigen::Index S = static_cast<Eigen::Index>(tape.ids.size());
  if (dloss_dlogp.size() != tape.ids.size()) throw_input("backward: coefficient length mismatch");
  if (grads.size() != params_.size()) throw_input("backward: gradient buffer size mismatch");
  const T* p = params_.data();
  T* g = grads.data();
  const int d = config_.d_model;
  const int H = config_.n_heads;
  const int hd = d / H;
  const int V = config_.vocab_size;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

  // d logp_t / d logits_{t-1} = onehot(ids[t]) - softmax(logits_{t-1})
  Mat dlogits = Mat::Zero(S, V);
  for (Eigen::Index t = 1; t < S; ++t) {
    const T c = dloss_dlogp[static_cast<std::size_t>(t)];
    if (c == T(0)) continue;
    dlogits.row(t - 1) = (-c) * tape.log_probs.row(t - 1).array().exp().matrix();
    dlogits(t - 1, tape.ids[static_cast<std::size_t>(t)]) += c;
  }

  MatMap<T>(g + layout_.head(), d, V).noalias() += tape.h_f.transpose() * dlogits;
  Mat dh = dlogits * ConstMatMap<T>(p + layout_.head(), d, V).transpose();
  Mat dx = layernorm_backward<T>(dh, tape.xhat_f, tape.rstd_f, p + layout_.lnf_g(),
                                 g + layout_.lnf_g(), g + layout_.lnf_b());

  for (int l = config_.n_layers - 1; l >= 0; --l) {
    const BlockTape& bt = tape.blocks[static_cast<std::size_t>(l)];
    const BlockOffsets& o = layout_.block(l);

    // MLP branch: x_out = x_mid + act(h2 W_fc + b_fc) W_proj + b_proj
    MatMap<T>(g + o.w_proj, 4 * d, d).noalias() += bt.act.transpose() * dx;
    RowMap<T>(g + o.b_proj, d) += dx.colwise().sum();
    Mat dfc = dx * ConstMatMap<T>(p + o.w_proj, 4 * d, d).transpose();
    dfc.array() *= bt.fc.unaryExpr([](T z) { return gelu_grad(z); }).array();
    MatMap<T>(g + o.w_fc, d, 4 * d).noalias() += bt.h2.transpose() * dfc;
    RowMap<T>(g + o.b_fc, 4 * d) += dfc.colwise().sum();
    Mat dh2 = dfc * ConstMatMap<T>(p + o.w_fc, d, 4 * d).transpose();
    dx += layernorm_backward<T>(dh2, bt.xhat2, bt.rstd2, p + o.ln2_g, g + o.ln2_g, g + o.ln2_b);

    // Attention branch: x_mid = x_in + att_out W_out + b_out
    MatMap<T>(g + o.w_out, d, d).noalias() += bt.att_out.transpose() * dx;
    RowMap<T>(g + o.b_out, d) += dx.colwise().sum();
    Mat datt = dx * ConstMatMap<T>(p + o.w_out, d, d).transpose();

    Mat dqkv(S, 3 * d);
    for (int h = 0; h < H; ++h) {
      const Mat& probs = bt.probs[static_cast<std::size_t>(h)];
      const auto q = bt.qkv.middleCols(h * hd, hd);
      const auto k = bt.qkv.middleCols(d + h * hd, hd);
      const auto v = bt.qkv.middleCols(2 * d + h * hd, hd);
      const auto dy = datt.middleCols(h * hd, hd);

      Mat dprobs = dy * v.transpose();
      dqkv.middleCols(2 * d + h * hd, hd).noalias() = probs.transpose() * dy;
      // softmax backward: dS = P o (dP - rowsum(P o dP))
      const VecT<T> inner = (probs.array() * dprobs.array()).rowwise().sum();
      Mat dscores = (probs.array() * (dprobs.array().colwise() - inner.array())).matrix();
      dscores *= scale;
      dqkv.middleCols(h * hd, hd).noalias() = dscores * k;
      dqkv.middleCols(d + h * hd, hd).noalias() = dscores.transpose() * q;
    }
    MatMap<T>(g + o.w_qkv, d, 3 * d).noalias() += bt.h1.transpose() * dqkv;
    RowMap<T>(g + o.b_qkv, 3 * d) += dqkv.colwise().sum();
    Mat dh1 = dqkv * ConstMatMap<T>(p + o.w_qkv, d, 3 * d).transpose();
    dx += layernorm_backward<T>(dh1, bt.xhat1, bt.rstd1, p + o.ln1_g, g + o.ln1_g, g + o.ln1_b);
  }

  MatMap<T> dwte(g + layout_.wte(), config_.vocab_size, d);
  MatMap<T> dwpe(g + layout_.wpe(), config_.max_seq_len, d);
  for (Eigen::Index t = 0; t < S; ++t) {
    dwte.row(tape.ids[static_cast<std::size_t>(t)]) += dx.row(t);
    dwpe.row(t) += dx.row(t);
  }
}

template <typename T>
Transformer<T>::Decoder::Decoder(const Transformer& model) : model_(&model) {
  const auto& c = model.config();
  keys_.assign(static_cast<std::size_t>(c.n_layers), Mat::Zero(c.max_seq_len, c.d_model));
  values_.assign(static_cast<std::size_t>(c.n_layers), Mat::Zero(c.max_seq_len, c.d_model));
}

template <typename T>
const typename Transformer<T>::RowVec& Transformer<T>::Decoder::step(TokenId id) {
  const Transformer& m = *model_;
  const ModelConfig& c = m.config_;
  if (pos_ >= c.max_seq_len) throw_input("decoder: context window exhausted");
  if (id < 0 || id >= c.vocab_size) throw_input("decoder: token id outside vocabulary");
  const T* p = m.params_.data();
  const ParamLayout& lay = m.layout_;
  const int d = c.d_model;
  const int H = c.n_heads;
  const int hd = d / H;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));

  RowVec x = ConstRowMap<T>(p + lay.wte() + static_cast<std::size_t>(id) * d, d) +
             ConstRowMap<T>(p + lay.wpe() + static_cast<std::size_t>(pos_) * d, d);
  const Eigen::Index n = pos_ + 1;
  for (int l = 0; l < c.n_layers; ++l) {
    const BlockOffsets& o = lay.block(l);
    Mat& keys = keys_[static_cast<std::size_t>(l)];
    Mat& values = values_[static_cast<std::size_t>(l)];

    RowVec h = layernorm_row<T>(x, p + o.ln1_g, p + o.ln1_b);
    RowVec qkv = h * ConstMatMap<T>(p + o.w_qkv, d, 3 * d);
    qkv += ConstRowMap<T>(p + o.b_qkv, 3 * d);
    keys.row(pos_) = qkv.segment(d, d);
    values.row(pos_) = qkv.segment(2 * d, d);

    RowVec att(d);
    for (int hh = 0; hh < H; ++hh) {
      RowVec scores = qkv.segment(hh * hd, hd) * keys.block(0, hh * hd, n, hd).transpose();
      scores *= scale;
      causal_softmax_row(scores, n);
      att.segment(hh * hd, hd) = scores * values.block(0, hh * hd, n, hd);
    }
    x += att * ConstMatMap<T>(p + o.w_out, d, d);
    x += ConstRowMap<T>(p + o.b_out, d);

    h = layernorm_row<T>(x, p + o.ln2_g, p + o.ln2_b);
    RowVec fc = h * ConstMatMap<T>(p + o.w_fc, d, 4 * d);
    fc += ConstRowMap<T>(p + o.b_fc, 4 * d);
    fc = fc.unaryExpr([](T z) { return gelu(z); });
    x += fc * ConstMatMap<T>(p + o.w_proj, 4 * d, d);
    x += ConstRowMap<T>(p + o.b_proj, d);
  }
  RowVec hf = layernorm_row<T>(x, p + lay.lnf_g(), p + lay.lnf_b());
  logits_ = hf * ConstMatMap<T>(p + lay.head(), d, c.vocab_size);
  ++pos_;
  return logits_;
}

template <typename T>
std::vector<T> log_softmax(std::span<const T> logits) {
  std::vector<T> out(logits.size());
  if (logits.empty()) return out;
  const T mx = *std::max_element(logits.begin(), logits.end());
  T sum = 0;
  for (T z : logits) sum += std::exp(z - mx);
  const T lse = mx + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

namespace {

int effective_length(const TokenSequence& seq) {
  int last = -1;
  for (std::size_t t = 0; t < seq.loss_mask.size(); ++t) {
    if (seq.loss_mask[t]) last = static_cast<int>(t);
  }
  return last + 1;
}

void check_sequence(const TokenSequence& seq) {
  if (seq.loss_mask.size() != seq.ids.size()) throw_input("loss mask length differs from ids");
  if (!seq.loss_mask.empty() && seq.loss_mask[0]) {
    throw_input("loss mask must be false at position 0 (no context to predict from)");
  }
}

}  // namespace

template <typename T>
LossResult<T> weighted_token_loss(const Transformer<T>& model,
                                  std::span<const TokenSequence> batch,
                                  std::span<const std::vector<T>> weights) {
  if (batch.empty()) throw_input("loss: empty batch");
  if (weights.size() != batch.size()) throw_input("loss: weights not aligned with batch");
  LossResult<T> result;
  result.grads.assign(model.num_params(), T(0));
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const TokenSequence& seq = batch[i];
    check_sequence(seq);
    if (weights[i].size() != seq.ids.size()) throw_input("loss: weight row length mismatch");
    const int len = effective_length(seq);
    if (len == 0) continue;
    std::vector<T> coeff(static_cast<std::size_t>(len), T(0));
    bool any = false;
    for (int t = 1; t < len; ++t) {
      if (!seq.loss_mask[static_cast<std::size_t>(t)]) continue;
      ++result.n_targets;
      coeff[static_cast<std::size_t>(t)] = -weights[i][static_cast<std::size_t>(t)];
      any = any || coeff[static_cast<std::size_t>(t)] != T(0);
    }
    if (!any) continue;
    auto tape = model.forward_tape(std::span<const TokenId>(seq.ids.data(), static_cast<std::size_t>(len)));
    auto logp = model.target_log_probs(tape);
    for (int t = 1; t < len; ++t) {
      total += static_cast<double>(coeff[static_cast<std::size_t>(t)]) *
               static_cast<double>(logp[static_cast<std::size_t>(t)]);
    }
    model.backward(tape, coeff, result.grads);
  }
  if (result.n_targets == 0) throw_input("loss: every position of the batch is masked");
  result.loss = static_cast<T>(total);
  return result;
}

template <typename T>
LossResult<T> loss_and_grads(const Transformer<T>& model, std::span<const TokenSequence> batch) {
  if (batch.empty()) throw_input("loss: empty batch");
  int n = 0;
  for (const auto& seq : batch) {
    check_sequence(seq);
    n += static_cast<int>(std::count(seq.loss_mask.begin(), seq.loss_mask.end(), true));
  }
  if (n == 0) throw_input("loss: every position of the batch is masked");
  const T w = static_cast<T>(1.0 / n);
  std::vector<std::vector<T>> weights;
  weights.reserve(batch.size());
  for (const auto& seq : batch) weights.emplace_back(seq.ids.size(), w);
  return weighted_token_loss<T>(model, batch, weights);
}

template class Transformer<float>;
template class Transformer<double>;

template LossResult<float> loss_and_grads(const Transformer<float>&, std::span<const TokenSequence>);
template LossResult<double> loss_and_grads(const Transformer<double>&, std::span<const TokenSequence>);
template LossResult<float> weighted_token_loss(const Transformer<float>&,
                                               std::span<const TokenSequence>,
                                               std::span<const std::vector<float>>);
template LossResult<double> weighted_token_loss(const Transformer<double>&,
                                                std::span<const TokenSequence>,
                                                std::span<const std::vector<double>>);
template std::vector<float> log_softmax(std::span<const float>);
template std::vector<double> log_softmax(std::span<const double>);

}  // namespace sgrpo
