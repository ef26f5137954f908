#include "siqa/qa_input.hpp"

#include "siqa/error.hpp"

namespace siqa {

std::string_view to_string(AugmentationMode mode) {
  switch (mode) {
    case AugmentationMode::None: return "none";
    case AugmentationMode::Relation: return "relation";
    case AugmentationMode::Category: return "category";
    case AugmentationMode::Both: return "both";
    case AugmentationMode::RandomRelation: return "random-relation";
    case AugmentationMode::RandomCategory: return "random-category";
  }
  return "";
}

std::optional<AugmentationMode> parse_mode(std::string_view s) {
  for (auto m : kAllModes)
    if (to_string(m) == s) return m;
  return std::nullopt;
}

bool uses_relation(AugmentationMode mode) {
  return mode == AugmentationMode::Relation || mode == AugmentationMode::Both ||
         mode == AugmentationMode::RandomRelation;
}

bool uses_category(AugmentationMode mode) {
  return mode == AugmentationMode::Category || mode == AugmentationMode::Both ||
         mode == AugmentationMode::RandomCategory;
}

std::string tag_token(RelationTag tag) { return "[" + std::string(to_string(tag)) + "]"; }

std::string label_token(KnowledgeCategory category) { return "[" + std::string(to_string(category)) + "]"; }

void check_mode_preconditions(const TaggedExample& ex, AugmentationMode mode) {
  if (uses_relation(mode) && !ex.relation)
    throw PreconditionError("example '" + ex.example.id + "' has no relation tag, required by mode " +
                            std::string(to_string(mode)));
  if (uses_category(mode) && !ex.category)
    throw PreconditionError("example '" + ex.example.id + "' has no category label, required by mode " +
                            std::string(to_string(mode)));
}

InputParts build_input_parts(const TaggedExample& ex, int answer_index, AugmentationMode mode) {
  if (answer_index < 0 || answer_index > 2)
    throw PreconditionError("answer index " + std::to_string(answer_index) + " outside {0,1,2}");
  check_mode_preconditions(ex, mode);
  const auto& e = ex.example;
  std::string rest;
  if (uses_category(mode)) rest += label_token(*ex.category) + " ";
  rest += std::string(Vocabulary::kSepToken) + " " + e.question + " ";
  if (uses_relation(mode)) rest += tag_token(*ex.relation) + " ";
  rest += e.answers[static_cast<std::size_t>(answer_index)];
  return InputParts{e.context, std::move(rest)};
}

std::string build_input(const TaggedExample& ex, int answer_index, AugmentationMode mode) {
  return build_input_parts(ex, answer_index, mode).joined();
}

std::size_t register_tag_tokens(Vocabulary& vocab, AugmentationMode mode) {
  std::size_t added = 0;
  if (uses_relation(mode))
    for (auto tag : kAllRelationTags) added += vocab.add_special(tag_token(tag));
  if (uses_category(mode))
    for (auto c : kAllCategories) added += vocab.add_special(label_token(c));
  return added;
}

}  // namespace siqa
