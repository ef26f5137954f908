#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "siqa/qa_input.hpp"
#include "siqa/vocabulary.hpp"

namespace siqa::ml {

/// Shape of a bidirectional transformer text encoder.
struct EncoderConfig {
  std::string name = "tiny";
  std::int64_t hidden = 64;
  std::int64_t layers = 2;
  std::int64_t heads = 4;
  std::int64_t ffn = 128;
  std::int64_t max_positions = 128;
  double dropout = 0.1;
  bool pretrained = false;  // weights came from a pretraining run

  nlohmann::ordered_json to_json() const;
  static EncoderConfig from_json(const nlohmann::ordered_json& j);
};

/// Built-in architectures: "tiny" and "small". Unknown names give nullopt.
std::optional<EncoderConfig> encoder_preset(std::string_view name);

/// Token + position embeddings, a pre-norm transformer stack and a final
/// layer norm. Sequences are [batch, time] ids with a boolean mask that is
/// true on real tokens.
class TextEncoderImpl : public torch::nn::Module {
 public:
  TextEncoderImpl(EncoderConfig config, std::int64_t vocab_size);

  torch::Tensor forward(const torch::Tensor& ids, const torch::Tensor& attention);
  /// Representation of the first position (the <s> token).
  torch::Tensor pooled(const torch::Tensor& ids, const torch::Tensor& attention);

  /// Grows the token table to new_size rows. Existing rows are kept; new
  /// rows start at the mean embedding plus small Gaussian noise.
  void resize_token_embeddings(std::int64_t new_size, std::uint64_t seed);

  std::int64_t vocab_size() const { return tokens_->weight.size(0); }
  const EncoderConfig& config() const { return config_; }
  void set_config(EncoderConfig config) { config_ = std::move(config); }
  const torch::Tensor& token_weight() const { return tokens_->weight; }

 private:
  EncoderConfig config_;
  torch::nn::Embedding tokens_{nullptr};
  torch::nn::Embedding positions_{nullptr};
  torch::nn::Dropout dropout_{nullptr};
  torch::nn::TransformerEncoder stack_{nullptr};
  torch::nn::LayerNorm norm_{nullptr};
};
TORCH_MODULE(TextEncoder);

/// Encoder plus a linear layer on the pooled representation. One output
/// gives a multiple-choice scorer, k outputs a k-way classifier.
class PooledHeadImpl : public torch::nn::Module {
 public:
  PooledHeadImpl(TextEncoder encoder, std::int64_t outputs);
  torch::Tensor forward(const torch::Tensor& ids, const torch::Tensor& attention);

  TextEncoder encoder{nullptr};

 private:
  torch::nn::Dropout dropout_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(PooledHead);

/// An encoder together with the vocabulary its embedding rows belong to.
struct EncoderBundle {
  Vocabulary vocab;
  TextEncoder encoder{nullptr};
};

/// Resolves an encoder name. A directory written by save_encoder is loaded
/// as is; a preset name yields a randomly initialized encoder whose
/// vocabulary is built from vocab_texts.
EncoderBundle load_encoder(const std::string& name, std::span<const std::string> vocab_texts, std::uint64_t seed,
                           std::optional<double> dropout = std::nullopt);
void save_encoder(const EncoderBundle& bundle, const std::filesystem::path& dir);
bool is_encoder_dir(const std::filesystem::path& dir);

/// Token ids for one sequence: <s> context remainder </s>. When the result
/// would exceed max_len, context tokens are dropped from the left.
struct EncodedSequence {
  std::vector<std::int64_t> ids;
  bool truncated = false;
};
EncodedSequence encode_sequence(const Vocabulary& vocab, const InputParts& parts, std::size_t max_len);

struct Batch {
  torch::Tensor ids;        // int64 [n, t]
  torch::Tensor attention;  // bool [n, t]
};
Batch collate(std::span<const std::vector<std::int64_t>> sequences);

struct PretrainConfig {
  int epochs = 3;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double mask_probability = 0.15;
  std::size_t max_sequence_length = 96;
  std::uint64_t seed = 0;
};

struct PretrainReport {
  std::vector<double> epoch_loss;
};

/// Masked-token pretraining on raw texts, predicting through the tied token
/// embedding matrix. Marks the bundle's config as pretrained.
PretrainReport pretrain_mlm(EncoderBundle& bundle, std::span<const std::string> texts, const PretrainConfig& config);

}  // namespace siqa::ml
