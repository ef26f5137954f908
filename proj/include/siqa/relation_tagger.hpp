#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siqa/corpus.hpp"

namespace siqa {

/// Person mentions found in a context, lowercased. Subjects are the
/// grammatical subjects of main clauses in order of appearance; objects are
/// every other person mention (objects, obliques, possessors and subjects of
/// subordinate clauses).
struct SyntacticAnalysis {
  std::vector<std::string> sentence_subjects;
  std::vector<std::string> sentence_objects;

  bool operator==(const SyntacticAnalysis&) const = default;
};

/// Provider of subject/object analysis. Implementations either return a
/// complete analysis or throw.
class ContextAnalyzer {
 public:
  virtual ~ContextAnalyzer() = default;
  virtual SyntacticAnalysis analyze(std::string_view context) const = 0;
};

/// Rule-based clause segmentation over capitalized person mentions. Clauses
/// are split at punctuation and conjunctions; a mention heading a main clause
/// is its subject.
class HeuristicAnalyzer final : public ContextAnalyzer {
 public:
  SyntacticAnalysis analyze(std::string_view context) const override;
};

/// Runs the default analyzer. Throws PreconditionError on empty context.
SyntacticAnalysis analyze_context(std::string_view context);

enum class BaseRelation { Intent, Need, Attr, React, Want, Effect };

std::string_view to_string(BaseRelation relation);
std::optional<BaseRelation> parse_base_relation(std::string_view s);

/// Patterns are lowercase word sequences; the word "..." matches any run of
/// words (possibly empty).
struct KeywordRule {
  std::vector<std::string> patterns;
  BaseRelation base_relation;
  int priority;
};

class RuleTable {
 public:
  /// Built-in lexicon.
  static const RuleTable& defaults();

  /// One rule line per phrase: "<priority> <Relation> <phrase words...>".
  /// Lines sharing a priority form one rule and must name the same relation.
  /// '#' starts a comment.
  static RuleTable parse(std::string_view config);
  static RuleTable load(const std::filesystem::path& path);

  /// Rules ordered by ascending priority.
  std::span<const KeywordRule> rules() const { return rules_; }

  std::string to_config() const;

 private:
  std::vector<KeywordRule> rules_;
};

struct RuleMatch {
  BaseRelation relation;
  const KeywordRule* rule;
  std::string pattern;
};

/// Case-insensitive, word-boundary phrase search. The lowest priority number
/// among matching rules wins; nullopt means no rule matched.
std::optional<RuleMatch> match_base_relation(std::string_view question,
                                             const RuleTable& table = RuleTable::defaults());

enum class Side { Agent, Other, Unknown };

std::string_view to_string(Side side);

struct PerspectiveResult {
  std::optional<std::string> person;
  Side side = Side::Unknown;

  bool operator==(const PerspectiveResult&) const = default;
};

/// Finds who the question asks about and whether that person is the agent of
/// the context. "Others" always resolves to the other side; a bare "you"
/// resolves to the first context subject.
PerspectiveResult resolve_perspective(std::string_view question, const SyntacticAnalysis& analysis);

RelationTag tag_relation(const QAExample& example, const SyntacticAnalysis& analysis,
                         const RuleTable& table = RuleTable::defaults());

struct TagHistogram {
  std::array<std::size_t, kAllRelationTags.size()> counts{};

  std::size_t operator[](RelationTag tag) const { return counts[static_cast<std::size_t>(tag)]; }
  std::size_t total() const;
};

struct TaggingResult {
  std::vector<TaggedExample> examples;
  TagHistogram histogram;
};

class RelationTagger {
 public:
  RelationTagger();
  RelationTagger(RuleTable rules, std::shared_ptr<const ContextAnalyzer> analyzer);

  RelationTag tag(const QAExample& example) const;

  /// Every example receives a rule-sourced tag. Existing category fields are
  /// kept. Analyzer failures are rethrown with the example id.
  TaggingResult tag_dataset(std::span<const TaggedExample> examples) const;
  TaggingResult tag_dataset(std::span<const QAExample> examples) const;

  const RuleTable& rules() const { return rules_; }

 private:
  RuleTable rules_;
  std::shared_ptr<const ContextAnalyzer> analyzer_;
};

TaggingResult tag_dataset(std::span<const QAExample> examples);

}  // namespace siqa
