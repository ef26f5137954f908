#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace siqa {

/// ATOMIC if-then relation types. The x- prefix is the event's agent
/// (PersonX), the o- prefix the other participants. Other is the fallback for
/// questions no keyword rule covers.
enum class RelationTag {
  xIntent,
  xNeed,
  xAttr,
  xReact,
  xWant,
  xEffect,
  oReact,
  oWant,
  oEffect,
  Other,
};

inline constexpr std::array<RelationTag, 10> kAllRelationTags = {
    RelationTag::xIntent, RelationTag::xNeed,  RelationTag::xAttr,   RelationTag::xReact,
    RelationTag::xWant,   RelationTag::xEffect, RelationTag::oReact, RelationTag::oWant,
    RelationTag::oEffect, RelationTag::Other,
};

/// Social knowledge taxonomy.
///
///  - FeelingsAndCharacteristics: personal feelings, emotions and traits, the
///    events they trigger and the feelings an event causes.
///  - Interaction: events and obligations arising between two or more people,
///    or between individuals and groups.
///  - DailyEvents: relations between everyday events, habits and experiences;
///    the focus is the event, even when several people take part.
///  - KnowledgeNormRules: social or scientific knowledge and written rules
///    (law, careers, social identity, medical care, ...).
enum class KnowledgeCategory {
  FeelingsAndCharacteristics,
  Interaction,
  DailyEvents,
  KnowledgeNormRules,
};

inline constexpr std::array<KnowledgeCategory, 4> kAllCategories = {
    KnowledgeCategory::FeelingsAndCharacteristics,
    KnowledgeCategory::Interaction,
    KnowledgeCategory::DailyEvents,
    KnowledgeCategory::KnowledgeNormRules,
};

enum class RelationSource { Rule, Random };
enum class CategorySource { Human, Predicted, Random };

std::string_view to_string(RelationTag tag);
std::string_view to_string(KnowledgeCategory category);
std::string_view to_string(RelationSource source);
std::string_view to_string(CategorySource source);

/// Human-readable name, e.g. "Feelings and Characteristics".
std::string_view display_name(KnowledgeCategory category);

std::optional<RelationTag> parse_relation_tag(std::string_view s);
/// Accepts the canonical identifier or the display name, ignoring case,
/// spaces and punctuation.
std::optional<KnowledgeCategory> parse_category(std::string_view s);
std::optional<RelationSource> parse_relation_source(std::string_view s);
std::optional<CategorySource> parse_category_source(std::string_view s);

/// One multiple-choice item: a context, a question and three candidate
/// answers. gold_index is absent for unlabeled (leaderboard) data.
struct QAExample {
  std::string id;
  std::string context;
  std::string question;
  std::array<std::string, 3> answers;
  std::optional<int> gold_index;

  bool operator==(const QAExample&) const = default;
};

/// Throws FormatError when an invariant of QAExample does not hold.
void validate(const QAExample& example);

struct TaggedExample {
  QAExample example;
  std::optional<RelationTag> relation;
  std::optional<RelationSource> relation_source;
  std::optional<KnowledgeCategory> category;
  std::optional<CategorySource> category_source;

  void set_relation(RelationTag tag, RelationSource source) {
    relation = tag;
    relation_source = source;
  }
  void set_category(KnowledgeCategory c, CategorySource source) {
    category = c;
    category_source = source;
  }

  bool operator==(const TaggedExample&) const = default;
};

struct CategoryAnnotation {
  std::string example_id;
  KnowledgeCategory category;
  std::optional<std::string> annotator;
  // Present when the annotation file carries the full item rather than only
  // an id into the corpus.
  std::optional<QAExample> embedded;

  bool operator==(const CategoryAnnotation&) const = default;
};

/// Loads the public line-delimited release: one JSON object per line with
/// context, question, answerA, answerB, answerC. Labels come either from a
/// sidecar file (one of "1", "2", "3" per record) or from an inline "label"
/// field. Records without an "id" get "<split>:<line>"; split defaults to the
/// file stem.
std::vector<QAExample> load_socialiqa(const std::filesystem::path& data_path,
                                      const std::optional<std::filesystem::path>& labels_path = {},
                                      std::string split = {});

/// Annotation records are JSON lines with "id" (or "example_id"), "category"
/// and optionally "annotator" and the item's own fields; tab-separated
/// "id<TAB>category[<TAB>annotator]" lines are accepted as well.
std::vector<CategoryAnnotation> load_category_annotations(const std::filesystem::path& path);

/// Percent agreement between two annotators over the same id set.
double compute_agreement(std::span<const CategoryAnnotation> a, std::span<const CategoryAnnotation> b);

/// Resolves each annotation against the corpus. Annotations whose id is not in
/// the corpus fall back to their embedded item; otherwise the join fails.
std::vector<std::pair<QAExample, KnowledgeCategory>> join_annotations(
    std::span<const QAExample> corpus, std::span<const CategoryAnnotation> annotations);

std::string serialize_tagged(std::span<const TaggedExample> examples);
void save_tagged(const std::filesystem::path& path, std::span<const TaggedExample> examples);
/// Reads the tagged format. Plain release files load too, with every tag
/// absent.
std::vector<TaggedExample> load_tagged(const std::filesystem::path& path, std::string split = {});

/// Reads gold labels from a sidecar file and applies them in order.
void apply_label_file(std::vector<TaggedExample>& examples, const std::filesystem::path& labels_path);

std::vector<TaggedExample> as_tagged(std::span<const QAExample> examples);

}  // namespace siqa
