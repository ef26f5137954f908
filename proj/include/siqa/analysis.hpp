#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siqa/corpus.hpp"
#include "siqa/qa_eval.hpp"

namespace siqa {

struct GroupErrorRate {
  std::string group;
  double error_rate = 0.0;  // errors / support
  std::size_t errors = 0;
  std::size_t support = 0;
};

struct ErrorRateTable {
  std::vector<GroupErrorRate> rows;
  std::vector<std::string> warnings;

  const GroupErrorRate* find(std::string_view group) const;
  std::size_t total_support() const;
  std::size_t total_errors() const;
};

/// Per-group error rate, 1 - mean(correctness) within each group. Rows follow
/// `order` when given (groups outside it are appended in first-seen order);
/// named groups with no examples are omitted with a warning.
ErrorRateTable error_rate_by_group(std::span<const std::uint8_t> correctness, std::span<const std::string> groups,
                                   std::span<const std::string> order = {});
ErrorRateTable error_rate_by_group(const QAEvalResult& result, std::span<const RelationTag> groups);
ErrorRateTable error_rate_by_group(const QAEvalResult& result, std::span<const KnowledgeCategory> groups);

struct SignificanceResult {
  double statistic = 0.0;     // paired t
  double p_value = 1.0;       // two-sided
  double p_one_sided = 1.0;   // alternative: a scores higher than b
  double mean_difference = 0.0;
  std::size_t n = 0;
  bool degenerate = false;    // zero variance of the differences
};

/// Paired t-test on per-example differences a_i - b_i with n - 1 degrees of
/// freedom.
SignificanceResult paired_significance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct McNemarResult {
  std::size_t only_a = 0;  // a correct, b wrong
  std::size_t only_b = 0;
  double p_value = 1.0;    // exact two-sided binomial
};

McNemarResult mcnemar_exact(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

enum class TagKind { Relation, Category };

/// Replaces every example's relation tag (or category label) with a uniform
/// draw from the full closed set. The draw is a function of (example id,
/// kind, seed) only.
std::vector<TaggedExample> randomize_tags(std::span<const TaggedExample> dataset, TagKind which, std::uint64_t seed);

/// Assigns a group label to examples by id. Examples of a result that are
/// not listed are left out of that grouping's table, which is how tables
/// over an annotated subset are built.
struct Grouping {
  std::string name;
  std::vector<std::string> order;
  std::vector<std::string> example_ids;
  std::vector<std::string> labels;
};

Grouping relation_grouping(std::span<const TaggedExample> examples);
/// Only examples whose category came from the given source are included.
Grouping category_grouping(std::span<const TaggedExample> examples, CategorySource source);

struct ComparisonReport {
  std::string text;
  std::string json;
};

/// Accuracy table, per-group error-rate deltas and significance against the
/// baseline (the mode None run when present). Runs are ordered by mode, then
/// label, so the report does not depend on argument order.
ComparisonReport compare_runs(std::span<const QAEvalResult> results, std::span<const Grouping> groupings = {});

}  // namespace siqa
