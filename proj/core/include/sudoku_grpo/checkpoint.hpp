#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sudoku_grpo/adamw.hpp"
#include "sudoku_grpo/model.hpp"

namespace sgrpo {

// Self-describing binary container:
//   "SGRPOCKP" | u32 version | u64 header bytes | JSON header | f32 payload
// The header carries the model config, vocabulary hash, tensor directory,
// optimizer hyperparameters and step, RNG state, step counter, and free-form
// metadata. The payload is params, then first and second moments (if any),
// little-endian.
struct Checkpoint {
  ModelConfig config;
  std::string vocab_hash;
  std::vector<float> params;
  AdamWHyper optimizer;
  std::vector<float> opt_first_moment;
  std::vector<float> opt_second_moment;
  std::int64_t opt_step = 0;
  std::string rng_state;
  std::int64_t step = 0;
  std::map<std::string, std::string> metadata;

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  // SHA-256 of serialize(); identical to hashing the saved file.
  std::string content_hash() const;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint make_checkpoint(const Transformer<float>& model, const std::string& vocab_hash,
                           const AdamW<float>* optimizer = nullptr, std::int64_t step = 0);

Transformer<float> model_from_checkpoint(const Checkpoint& ckpt);

// Restores the optimizer state, or a fresh one with `fallback` when the
// checkpoint carries no moments.
AdamW<float> optimizer_from_checkpoint(const Checkpoint& ckpt, const AdamWHyper& fallback);

// Throws a provenance error when the checkpoint was trained with another vocabulary.
void require_vocab(const Checkpoint& ckpt, const Vocabulary& vocab);

}  // namespace sgrpo
