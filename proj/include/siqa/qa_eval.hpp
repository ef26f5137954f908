#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "siqa/corpus.hpp"
#include "siqa/qa_input.hpp"

namespace siqa {

/// Anything that assigns a score to each of the three candidates of an item.
class ChoiceScorer {
 public:
  virtual ~ChoiceScorer() = default;
  /// The augmentation mode the scorer was trained under.
  virtual AugmentationMode mode() const = 0;
  virtual std::vector<std::array<float, 3>> score(std::span<const TaggedExample> examples) = 0;
};

struct QAEvalResult {
  std::string label;  // run name shown in reports
  AugmentationMode mode = AugmentationMode::None;
  std::string split_id;  // digest of the ordered example ids
  std::string config_json;
  std::vector<std::string> example_ids;
  std::vector<int> predictions;  // 0-based
  std::vector<std::uint8_t> correctness;
  double accuracy = 0.0;

  std::size_t correct_count() const;

  std::string to_json() const;
  static QAEvalResult from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static QAEvalResult load(const std::filesystem::path& path);
};

/// Digest identifying the ordered example set a result was computed on.
std::string split_digest(std::span<const TaggedExample> examples);

/// Argmax over the three candidate scores; ties go to the lower index.
int argmax(const std::array<float, 3>& scores);

/// 0-based predicted answer per example. Throws if the scorer was trained
/// under a different mode.
std::vector<int> predict(ChoiceScorer& scorer, std::span<const TaggedExample> examples, AugmentationMode mode);

/// Scores a labeled split. accuracy equals the mean of the correctness
/// vector.
QAEvalResult evaluate(ChoiceScorer& scorer, std::span<const TaggedExample> split, AugmentationMode mode,
                      std::string label = {});

/// One digit 1-3 per line, the official submission format.
std::string format_predictions(std::span<const int> predictions);
void write_predictions(const std::filesystem::path& path, std::span<const int> predictions);

}  // namespace siqa
