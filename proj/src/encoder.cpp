#include "siqa/encoder.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>

#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/random.hpp"
#include "siqa/training.hpp"

namespace siqa::ml {

namespace fs = std::filesystem;

nlohmann::ordered_json EncoderConfig::to_json() const {
  return {{"name", name},       {"hidden", hidden},   {"layers", layers},   {"heads", heads},
          {"ffn", ffn},         {"max_positions", max_positions},           {"dropout", dropout},
          {"pretrained", pretrained}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::ordered_json& j) {
  EncoderConfig c;
  c.name = j.at("name").get<std::string>();
  c.hidden = j.at("hidden").get<std::int64_t>();
  c.layers = j.at("layers").get<std::int64_t>();
  c.heads = j.at("heads").get<std::int64_t>();
  c.ffn = j.at("ffn").get<std::int64_t>();
  c.max_positions = j.at("max_positions").get<std::int64_t>();
  c.dropout = j.at("dropout").get<double>();
  c.pretrained = j.value("pretrained", false);
  return c;
}

std::optional<EncoderConfig> encoder_preset(std::string_view name) {
  EncoderConfig c;
  if (name == "tiny") return c;
  if (name == "small") {
    c.name = "small";
    c.hidden = 256;
    c.layers = 4;
    c.heads = 4;
    c.ffn = 1024;
    c.max_positions = 256;
    return c;
  }
  return std::nullopt;
}

TextEncoderImpl::TextEncoderImpl(EncoderConfig config, std::int64_t vocab_size) : config_(std::move(config)) {
  if (config_.hidden % config_.heads != 0)
    throw PreconditionError("encoder hidden size " + std::to_string(config_.hidden) + " is not divisible by " +
                            std::to_string(config_.heads) + " heads");
  tokens_ = register_module("tokens", torch::nn::Embedding(vocab_size, config_.hidden));
  positions_ = register_module("positions", torch::nn::Embedding(config_.max_positions, config_.hidden));
  dropout_ = register_module("dropout", torch::nn::Dropout(config_.dropout));
  auto layer = torch::nn::TransformerEncoderLayer(torch::nn::TransformerEncoderLayerOptions(config_.hidden, config_.heads)
                                                      .dim_feedforward(config_.ffn)
                                                      .dropout(config_.dropout)
                                                      .activation(torch::kGELU));
  stack_ = register_module("stack", torch::nn::TransformerEncoder(torch::nn::TransformerEncoderOptions(layer, config_.layers)));
  norm_ = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({config_.hidden})));
  torch::NoGradGuard guard;
  torch::nn::init::normal_(tokens_->weight, 0.0, 0.02);
  torch::nn::init::normal_(positions_->weight, 0.0, 0.02);
}

torch::Tensor TextEncoderImpl::forward(const torch::Tensor& ids, const torch::Tensor& attention) {
  const auto t = ids.size(1);
  if (t > config_.max_positions)
    throw PreconditionError("sequence of " + std::to_string(t) + " tokens exceeds the encoder's " +
                            std::to_string(config_.max_positions) + " positions");
  auto pos = torch::arange(t, torch::kLong).unsqueeze(0);
  auto x = dropout_(tokens_(ids) + positions_(pos));
  // The stack expects [time, batch, hidden] and a mask that is true on padding.
  x = stack_->forward(x.transpose(0, 1), /*src_mask=*/torch::Tensor(), /*src_key_padding_mask=*/attention.logical_not());
  return norm_(x.transpose(0, 1));
}

torch::Tensor TextEncoderImpl::pooled(const torch::Tensor& ids, const torch::Tensor& attention) {
  return forward(ids, attention).select(1, 0);
}

void TextEncoderImpl::resize_token_embeddings(std::int64_t new_size, std::uint64_t seed) {
  const auto old_size = vocab_size();
  if (new_size < old_size) throw PreconditionError("token embeddings cannot shrink");
  if (new_size == old_size) return;
  torch::NoGradGuard guard;
  auto old = tokens_->weight.detach();
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto noise = at::randn({new_size - old_size, config_.hidden}, gen, old.options()) * 0.02;
  auto rows = old.mean(0, /*keepdim=*/true) + noise;
  auto grown = torch::nn::Embedding(new_size, config_.hidden);
  grown->weight.copy_(torch::cat({old, rows}, 0));
  tokens_ = replace_module("tokens", grown);
}

PooledHeadImpl::PooledHeadImpl(TextEncoder enc, std::int64_t outputs) {
  encoder = register_module("encoder", std::move(enc));
  dropout_ = register_module("dropout", torch::nn::Dropout(encoder->config().dropout));
  head_ = register_module("head", torch::nn::Linear(encoder->config().hidden, outputs));
  torch::NoGradGuard guard;
  torch::nn::init::normal_(head_->weight, 0.0, 0.02);
  torch::nn::init::zeros_(head_->bias);
}

torch::Tensor PooledHeadImpl::forward(const torch::Tensor& ids, const torch::Tensor& attention) {
  return head_(dropout_(encoder->pooled(ids, attention)));
}

bool is_encoder_dir(const fs::path& dir) {
  return fs::is_regular_file(dir / "encoder.json") && fs::is_regular_file(dir / "vocab.json") &&
         fs::is_regular_file(dir / "encoder.pt");
}

EncoderBundle load_encoder(const std::string& name, std::span<const std::string> vocab_texts, std::uint64_t seed,
                           std::optional<double> dropout) {
  EncoderBundle b;
  if (is_encoder_dir(name)) {
    auto config = EncoderConfig::from_json(nlohmann::ordered_json::parse(io::read_file(fs::path(name) / "encoder.json")));
    if (dropout) config.dropout = *dropout;
    b.vocab = Vocabulary::load(fs::path(name) / "vocab.json");
    b.encoder = TextEncoder(config, static_cast<std::int64_t>(b.vocab.size()));
    torch::load(b.encoder, (fs::path(name) / "encoder.pt").string());
    return b;
  }
  auto config = encoder_preset(name);
  if (!config)
    throw Error("unknown encoder '" + name + "': expected a preset (tiny, small) or a directory with encoder.json, "
                "vocab.json and encoder.pt");
  if (dropout) config->dropout = *dropout;
  b.vocab = Vocabulary::build(vocab_texts);
  seed_runtime(derive_seed(seed, "init"));
  b.encoder = TextEncoder(*config, static_cast<std::int64_t>(b.vocab.size()));
  return b;
}

void save_encoder(const EncoderBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  io::write_file_atomic(dir / "encoder.json", bundle.encoder->config().to_json().dump(2) + "\n");
  bundle.vocab.save(dir / "vocab.json");
  torch::save(bundle.encoder, (dir / "encoder.pt").string());
}

EncodedSequence encode_sequence(const Vocabulary& vocab, const InputParts& parts, std::size_t max_len) {
  auto context = vocab.encode(parts.context);
  auto rest = vocab.encode(parts.remainder);
  if (max_len < rest.size() + 2)
    throw PreconditionError("question, tags and answer need " + std::to_string(rest.size() + 2) +
                            " tokens but the maximum sequence length is " + std::to_string(max_len));
  EncodedSequence out;
  const auto room = max_len - 2 - rest.size();
  std::size_t skip = 0;
  if (context.size() > room) {
    skip = context.size() - room;
    out.truncated = true;
  }
  out.ids.reserve(2 + context.size() - skip + rest.size());
  out.ids.push_back(Vocabulary::kBos);
  out.ids.insert(out.ids.end(), context.begin() + static_cast<std::ptrdiff_t>(skip), context.end());
  out.ids.insert(out.ids.end(), rest.begin(), rest.end());
  out.ids.push_back(Vocabulary::kEos);
  return out;
}

Batch collate(std::span<const std::vector<std::int64_t>> sequences) {
  std::size_t t = 1;
  for (const auto& s : sequences) t = std::max(t, s.size());
  const auto n = static_cast<std::int64_t>(sequences.size());
  auto ids = torch::full({n, static_cast<std::int64_t>(t)}, Vocabulary::kPad, torch::kLong);
  auto attention = torch::zeros({n, static_cast<std::int64_t>(t)}, torch::kBool);
  auto ia = ids.accessor<std::int64_t, 2>();
  auto aa = attention.accessor<bool, 2>();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& s = sequences[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < s.size(); ++k) {
      ia[i][static_cast<std::int64_t>(k)] = s[k];
      aa[i][static_cast<std::int64_t>(k)] = true;
    }
  }
  return Batch{ids, attention};
}

PretrainReport pretrain_mlm(EncoderBundle& bundle, std::span<const std::string> texts, const PretrainConfig& config) {
  if (texts.empty()) throw PreconditionError("pretraining needs at least one text");
  const auto max_len = std::min<std::size_t>(config.max_sequence_length,
                                             static_cast<std::size_t>(bundle.encoder->config().max_positions));
  std::vector<std::vector<std::int64_t>> seqs;
  seqs.reserve(texts.size());
  for (const auto& t : texts) seqs.push_back(encode_sequence(bundle.vocab, InputParts{t, ""}, max_len).ids);

  seed_runtime(derive_seed(config.seed, "pretrain-init"));
  SplitMix64 order_rng(derive_seed(config.seed, "shuffle"));
  SplitMix64 mask_rng(derive_seed(config.seed, "mask"));
  auto& enc = *bundle.encoder;
  auto optimizer = make_optimizer(enc, config.learning_rate, 0.01);
  const auto vocab_size = static_cast<std::uint64_t>(enc.vocab_size());
  const auto first_plain = static_cast<std::uint64_t>(Vocabulary::kMask) + 1;
  enc.train();

  PretrainReport report;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    auto order = shuffled_indices(seqs.size(), order_rng);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<std::vector<std::int64_t>> inputs, targets;
      for (auto k = start; k < end; ++k) {
        auto in = seqs[order[k]];
        std::vector<std::int64_t> target(in.size(), -100);
        for (std::size_t i = 0; i < in.size(); ++i) {
          if (static_cast<std::uint64_t>(in[i]) < first_plain) continue;
          if (mask_rng.below(1000000) >= static_cast<std::uint64_t>(config.mask_probability * 1e6)) continue;
          target[i] = in[i];
          const auto roll = mask_rng.below(10);
          if (roll < 8) in[i] = Vocabulary::kMask;
          else if (roll == 8) in[i] = static_cast<std::int64_t>(first_plain + mask_rng.below(vocab_size - first_plain));
        }
        inputs.push_back(std::move(in));
        targets.push_back(std::move(target));
      }
      auto batch = collate(inputs);
      auto labels = torch::full_like(batch.ids, -100);
      auto la = labels.accessor<std::int64_t, 2>();
      for (std::size_t i = 0; i < targets.size(); ++i)
        for (std::size_t k = 0; k < targets[i].size(); ++k)
          la[static_cast<std::int64_t>(i)][static_cast<std::int64_t>(k)] = targets[i][k];
      if ((labels != -100).sum().item<std::int64_t>() == 0) continue;

      auto hidden = enc.forward(batch.ids, batch.attention);
      auto logits = torch::matmul(hidden, enc.token_weight().t());
      auto loss = torch::nn::functional::cross_entropy(
          logits.reshape({-1, logits.size(-1)}), labels.reshape({-1}),
          torch::nn::functional::CrossEntropyFuncOptions().ignore_index(-100));
      require_finite(loss, "masked-token pretraining", epoch, steps);
      optimizer->zero_grad();
      loss.backward();
      torch::nn::utils::clip_grad_norm_(enc.parameters(), 1.0);
      optimizer->step();
      total += loss.item<double>();
      ++steps;
    }
    report.epoch_loss.push_back(steps ? total / static_cast<double>(steps) : 0.0);
  }
  enc.eval();
  auto config_out = enc.config();
  config_out.pretrained = true;
  enc.set_config(config_out);
  return report;
}

}  // namespace siqa::ml
