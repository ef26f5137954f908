#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "siqa/corpus.hpp"

namespace siqa::testing {

/// Four hand-checked items (Kendall, Alex, Kai, Taylor) with their expected
/// relation tags and categories.
struct GoldenItem {
  QAExample example;
  RelationTag relation;
  KnowledgeCategory category;
};
std::vector<GoldenItem> reference_examples();

/// Further hand-checked items (Riley/Austin noise complaint, Austin's test).
std::vector<GoldenItem> scenario_examples();

/// SocialIQA-shaped items built from templates. The gold answer's type
/// follows the question's relation (a feeling for React questions, a next
/// step for Want questions, ...), so the task is learnable, and each event
/// template carries a category.
struct SyntheticItem {
  QAExample example;
  RelationTag intended_relation;
  KnowledgeCategory category;
};
std::vector<SyntheticItem> synthetic_items(std::size_t n, std::uint64_t seed, const std::string& split = "syn");

/// Random well-formed questions (template, name, casing and punctuation
/// variations) with a matching context.
std::vector<QAExample> fuzz_questions(std::size_t n, std::uint64_t seed);

std::vector<TaggedExample> tagged_with_categories(const std::vector<SyntheticItem>& items, CategorySource source);

}  // namespace siqa::testing
