#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "siqa/encoder.hpp"
#include "siqa/qa_eval.hpp"
#include "siqa/qa_input.hpp"
#include "siqa/training.hpp"

namespace siqa::ml {

struct QATrainConfig {
  std::string encoder_name = "tiny";
  double learning_rate = 1e-5;
  std::size_t batch_size = 8;
  std::size_t gradient_accumulation = 8;
  int max_epochs = 4;
  std::uint64_t seed = 42;
  std::size_t max_sequence_length = 128;
  double weight_decay = 0.01;
  double max_grad_norm = 1.0;
  std::optional<double> dropout;

  /// True when learning rate, batch size, accumulation and epoch count lie
  /// on the default search grid.
  bool on_search_grid() const;
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static QATrainConfig from_json(const nlohmann::ordered_json& j, QATrainConfig base);
  static QATrainConfig from_json(const nlohmann::ordered_json& j) { return from_json(j, QATrainConfig()); }
};

/// Tuned configuration for a mode. Random modes reuse the
/// configuration of the mode whose tags they replace.
QATrainConfig default_config(AugmentationMode mode);

struct QAGrid {
  std::vector<double> learning_rates = {1e-5, 2e-5};
  std::vector<std::size_t> batch_sizes = {4, 8};
  std::vector<std::size_t> accumulations = {4, 8, 16};

  /// Cross product ordered by learning rate, then batch size, then
  /// accumulation, all ascending.
  std::vector<QATrainConfig> points(const QATrainConfig& base) const;
  std::size_t size() const { return learning_rates.size() * batch_sizes.size() * accumulations.size(); }
  nlohmann::ordered_json to_json() const;
  static QAGrid from_json(const nlohmann::ordered_json& j);
};

/// Scores each candidate's "<s> input </s>" sequence through the pooled
/// encoder output and a one-unit head.
class MultipleChoiceModel : public ChoiceScorer {
 public:
  MultipleChoiceModel(EncoderBundle bundle, AugmentationMode mode, std::size_t max_sequence_length);

  AugmentationMode mode() const override { return mode_; }
  std::vector<std::array<float, 3>> score(std::span<const TaggedExample> examples) override;

  /// Adds the mode's tag tokens to the vocabulary and grows the embedding
  /// table to match. Returns the number added. Throws once training began.
  std::size_t register_tag_tokens(std::uint64_t seed);
  /// Throws when a token the mode needs is missing from the vocabulary.
  void require_tag_tokens() const;
  void begin_training();
  bool training_started() const { return training_started_; }

  /// Differentiable [n, 3] scores.
  torch::Tensor forward(std::span<const TaggedExample> examples);

  std::size_t truncated_count() const { return truncated_; }
  const Vocabulary& vocab() const { return vocab_; }
  PooledHead& net() { return net_; }

  void save(const std::filesystem::path& dir) const;
  static MultipleChoiceModel load(const std::filesystem::path& dir);

 private:
  Vocabulary vocab_;
  PooledHead net_{nullptr};
  AugmentationMode mode_;
  std::size_t max_len_;
  bool training_started_ = false;
  std::size_t truncated_ = 0;
};

struct QATraining {
  MultipleChoiceModel model;
  QAEvalResult dev;
  FitResult fit;
};

/// Creates a model from config.encoder_name, registers the mode's tags and
/// fine-tunes with a softmax over the three candidate scores. The epoch with
/// the best dev accuracy is kept.
QATraining train_qa(std::span<const TaggedExample> train, std::span<const TaggedExample> dev,
                    const QATrainConfig& config, AugmentationMode mode,
                    const std::function<void(const EpochMetrics&)>& on_epoch = {});

struct TrialRecord {
  QATrainConfig config;
  std::optional<double> dev_accuracy;  // absent when the trial failed
  std::string error;
  std::filesystem::path dir;
  int best_epoch = 0;
};

struct GridResult {
  QATrainConfig best_config;
  std::optional<MultipleChoiceModel> model;
  QAEvalResult dev;
  std::vector<TrialRecord> trials;
  std::size_t best_trial = 0;
};

/// Trains every grid point and keeps the best by dev accuracy; ties go to
/// the lower learning rate, then the smaller batch, then the smaller
/// accumulation. With an output directory each trial gets its own
/// subdirectory holding config, per-epoch metrics, checkpoint and dev
/// predictions. A failing trial is recorded and skipped.
GridResult grid_search(std::span<const TaggedExample> train, std::span<const TaggedExample> dev,
                       AugmentationMode mode, const QAGrid& grid, const QATrainConfig& base,
                       const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                       const std::function<void(std::size_t, const TrialRecord&)>& on_trial = {});

std::string trial_name(std::size_t index, const QATrainConfig& config);

}  // namespace siqa::ml
