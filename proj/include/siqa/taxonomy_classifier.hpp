#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "siqa/corpus.hpp"
#include "siqa/encoder.hpp"
#include "siqa/training.hpp"

namespace siqa::ml {

struct ClassifierConfig {
  std::string encoder_name = "tiny";
  double learning_rate = 1e-5;
  std::size_t batch_size = 8;
  std::size_t gradient_accumulation = 1;
  int max_epochs = 4;
  std::size_t max_sequence_length = 128;
  std::uint64_t seed = 42;
  double weight_decay = 0.01;
  std::optional<double> dropout;  // overrides the encoder's own value

  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ClassifierConfig from_json(const nlohmann::ordered_json& j, ClassifierConfig base);
  static ClassifierConfig from_json(const nlohmann::ordered_json& j) { return from_json(j, ClassifierConfig()); }
};

using Confusion = std::array<std::array<std::size_t, 4>, 4>;  // [gold][predicted]

struct ClassifierReport {
  double dev_accuracy = 0.0;
  Confusion confusion{};
  ClassifierConfig config;
  int best_epoch = 0;
  std::vector<EpochMetrics> epochs;

  nlohmann::ordered_json to_json() const;
};

using LabeledExample = std::pair<QAExample, KnowledgeCategory>;

/// Classifier text: context, separator, question. Answers are left out.
InputParts classification_parts(const QAExample& example);
std::string encode_for_classification(const QAExample& example);

/// Four-way knowledge-category classifier over the pooled encoder output.
class CategoryClassifier {
 public:
  CategoryClassifier(EncoderBundle bundle, std::size_t max_sequence_length);

  std::vector<KnowledgeCategory> predict(std::span<const QAExample> examples);
  /// Examples whose context lost tokens to the length limit in the most
  /// recent predict call.
  std::size_t last_truncated() const { return last_truncated_; }

  void save(const std::filesystem::path& dir) const;
  static CategoryClassifier load(const std::filesystem::path& dir);

  const Vocabulary& vocab() const { return vocab_; }
  PooledHead& net() { return net_; }
  std::size_t max_sequence_length() const { return max_len_; }

  torch::Tensor logits(std::span<const QAExample> examples, std::size_t* truncated = nullptr);

 private:
  Vocabulary vocab_;
  PooledHead net_{nullptr};
  std::size_t max_len_;
  std::size_t last_truncated_ = 0;
};

struct ClassifierTraining {
  CategoryClassifier model;
  ClassifierReport report;
};

/// Fine-tunes on train and keeps the epoch with the best dev accuracy
/// (earliest on ties). The confusion matrix is computed on dev.
ClassifierTraining train_classifier(std::span<const LabeledExample> train, std::span<const LabeledExample> dev,
                                    const ClassifierConfig& config);

struct CategoryPredictions {
  std::vector<TaggedExample> examples;  // input order, category_source = Predicted
  std::size_t truncated = 0;
};

/// Labels every example. Relation tags already present are kept.
CategoryPredictions predict_categories(CategoryClassifier& model, std::span<const TaggedExample> examples,
                                       std::size_t batch_size = 64);
CategoryPredictions predict_categories(CategoryClassifier& model, std::span<const QAExample> examples,
                                       std::size_t batch_size = 64);

Confusion confusion_matrix(std::span<const KnowledgeCategory> gold, std::span<const KnowledgeCategory> predicted);

}  // namespace siqa::ml
