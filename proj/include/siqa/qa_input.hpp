#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "siqa/corpus.hpp"
#include "siqa/vocabulary.hpp"

namespace siqa {

/// Which tags are spliced into the multiple-choice input. The Random modes
/// have the same shape as their base mode; only the tag values differ.
enum class AugmentationMode { None, Relation, Category, Both, RandomRelation, RandomCategory };

inline constexpr AugmentationMode kAllModes[] = {AugmentationMode::None,     AugmentationMode::Relation,
                                                 AugmentationMode::Category, AugmentationMode::Both,
                                                 AugmentationMode::RandomRelation, AugmentationMode::RandomCategory};

/// "none", "relation", "category", "both", "random-relation", "random-category".
std::string_view to_string(AugmentationMode mode);
std::optional<AugmentationMode> parse_mode(std::string_view s);

bool uses_relation(AugmentationMode mode);
bool uses_category(AugmentationMode mode);

/// "[xNeed]"
std::string tag_token(RelationTag tag);
/// "[FeelingsAndCharacteristics]"
std::string label_token(KnowledgeCategory category);

/// The serialized candidate split at the only place truncation may cut: the
/// context, and everything after it.
struct InputParts {
  std::string context;
  std::string remainder;

  std::string joined() const { return context + " " + remainder; }
};

/// Layouts, with TAG/LABEL as single bracketed tokens:
///   None      Context [SEP] Question Answer
///   Relation  Context [SEP] Question TAG Answer
///   Category  Context LABEL [SEP] Question Answer
///   Both      Context LABEL [SEP] Question TAG Answer
InputParts build_input_parts(const TaggedExample& ex, int answer_index, AugmentationMode mode);
std::string build_input(const TaggedExample& ex, int answer_index, AugmentationMode mode);

/// Adds the mode's tag tokens to the vocabulary as special tokens: 10 for the
/// relation modes, 4 for the category modes, 14 for Both. Returns how many
/// were new. Throws if the vocabulary is already frozen and a token is
/// missing.
std::size_t register_tag_tokens(Vocabulary& vocab, AugmentationMode mode);

/// Throws PreconditionError naming the example and mode when the tags the
/// mode needs are absent.
void check_mode_preconditions(const TaggedExample& ex, AugmentationMode mode);

}  // namespace siqa
