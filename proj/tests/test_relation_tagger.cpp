#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cctype>

#include "siqa/error.hpp"
#include "siqa/relation_tagger.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace siqa;

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

QAExample ask(std::string context, std::string question) {
  return QAExample{"t:1", std::move(context), std::move(question), {"a", "b", "c"}, 0};
}

}  // namespace

TEST_CASE("analyze_context finds main-clause subjects") {
  auto taylor = analyze_context("Taylor taught math in the schools after studying to be a teacher for 4 years.");
  CHECK(contains(taylor.sentence_subjects, "taylor"));

  auto riley = analyze_context("Riley told Austin's landlord that Austin was making a lot of noise at late hours.");
  CHECK(riley.sentence_subjects == std::vector<std::string>{"riley"});
  CHECK(contains(riley.sentence_objects, "austin"));

  auto alex = analyze_context("Alex was no longer raising Sasha but she did give birth to Sasha.");
  CHECK(alex.sentence_subjects == std::vector<std::string>{"alex"});
  CHECK(alex.sentence_objects == std::vector<std::string>{"sasha"});
}

TEST_CASE("analyze_context handles coordination, fronted clauses and multiple sentences") {
  auto both = analyze_context("Jordan and Sasha went to the hair salon together.");
  CHECK(both.sentence_subjects == std::vector<std::string>{"jordan", "sasha"});

  auto fronted = analyze_context("When Quinn got home, Remy was already asleep.");
  CHECK(fronted.sentence_subjects == std::vector<std::string>{"remy"});
  CHECK(fronted.sentence_objects == std::vector<std::string>{"quinn"});

  auto multi = analyze_context("Casey called Jan. Later Jan visited Casey on Monday.");
  CHECK(multi.sentence_subjects == std::vector<std::string>{"casey", "jan"});
  CHECK(contains(multi.sentence_objects, "jan"));
  CHECK_FALSE(contains(multi.sentence_objects, "monday"));

  auto none = analyze_context("the dog barked at night.");
  CHECK(none.sentence_subjects.empty());
  CHECK(none.sentence_objects.empty());
}

TEST_CASE("analyze_context falls back to a clause-heading name") {
  // Every name here sits in a subordinate clause, so the first clause head
  // is used as the subject.
  auto a = analyze_context("Because Bailey was late, the meeting started without anyone.");
  CHECK(a.sentence_subjects == std::vector<std::string>{"bailey"});
  CHECK(a.sentence_objects.empty());
}

TEST_CASE("analyze_context rejects empty context") {
  CHECK_THROWS_AS(analyze_context(""), PreconditionError);
  CHECK_THROWS_AS(analyze_context("   "), PreconditionError);
}

TEST_CASE("match_base_relation") {
  auto need = match_base_relation("What does Taylor need to do before this?");
  REQUIRE(need);
  CHECK(need->relation == BaseRelation::Need);
  CHECK(need->pattern == "need to do before");

  auto attr = match_base_relation("How would you describe Kendall?");
  REQUIRE(attr);
  CHECK(attr->relation == BaseRelation::Attr);

  CHECK_FALSE(match_base_relation("Is water wet?").has_value());

  CHECK(match_base_relation("Why did Sydney do this?")->relation == BaseRelation::Intent);
  CHECK(match_base_relation("How would Others feel as a result?")->relation == BaseRelation::React);
  CHECK(match_base_relation("What will Alex want to do next?")->relation == BaseRelation::Want);
  CHECK(match_base_relation("What will happen to Austin?")->relation == BaseRelation::Effect);
  CHECK(match_base_relation("How would you see Kai as a person?")->relation == BaseRelation::Attr);
  CHECK(match_base_relation("What does Kai need?")->relation == BaseRelation::Need);
}

TEST_CASE("match_base_relation prefers phrases over single words") {
  // "want" occurs, but the multiword Need phrase has the lower priority number.
  auto m = match_base_relation("What does Riley need to do before they want to leave?");
  REQUIRE(m);
  CHECK(m->relation == BaseRelation::Need);
  CHECK(m->rule->priority == 1);
}

TEST_CASE("match_base_relation matches whole words only") {
  CHECK_FALSE(match_base_relation("Was the feeling mutual?").has_value());
  CHECK_FALSE(match_base_relation("Is this happening?").has_value());
}

TEST_CASE("resolve_perspective") {
  auto taylor = analyze_context("Taylor taught math in the schools after studying to be a teacher for 4 years.");
  CHECK(resolve_perspective("What does Taylor need to do before this?", taylor) ==
        PerspectiveResult{"taylor", Side::Agent});

  SyntacticAnalysis riley{{"riley"}, {"austin"}};
  CHECK(resolve_perspective("What will happen to Austin?", riley) == PerspectiveResult{"austin", Side::Other});

  CHECK(resolve_perspective("What will happen next?", riley) == PerspectiveResult{std::nullopt, Side::Unknown});
  CHECK(resolve_perspective("What will happen to Others?", riley) == PerspectiveResult{"others", Side::Other});
  CHECK(resolve_perspective("What will happen to Jordan?", riley) == PerspectiveResult{"jordan", Side::Unknown});
  CHECK(resolve_perspective("What will happen to Austin's landlord?", riley) ==
        PerspectiveResult{"austin", Side::Other});
}

TEST_CASE("resolve_perspective maps a bare 'you' to the context subject") {
  SyntacticAnalysis a{{"kendall"}, {}};
  CHECK(resolve_perspective("How would you describe this person?", a) == PerspectiveResult{"kendall", Side::Agent});
  // A named mention wins over "you".
  SyntacticAnalysis b{{"riley"}, {"kendall"}};
  CHECK(resolve_perspective("How would you describe Kendall?", b) == PerspectiveResult{"kendall", Side::Other});
}

TEST_CASE("reference examples get their expected tags") {
  for (const auto& item : siqa::testing::reference_examples()) {
    CAPTURE(item.example.question);
    CHECK(tag_relation(item.example, analyze_context(item.example.context)) == item.relation);
  }
  for (const auto& item : siqa::testing::scenario_examples()) {
    CAPTURE(item.example.question);
    CHECK(tag_relation(item.example, analyze_context(item.example.context)) == item.relation);
  }
}

TEST_CASE("tag_relation perspective rules") {
  const std::string ctx = "Riley told Austin's landlord that Austin was making a lot of noise at late hours.";
  auto tag = [&](const std::string& q) { return tag_relation(ask(ctx, q), analyze_context(ctx)); };
  CHECK(tag("How would Austin feel afterwards?") == RelationTag::oReact);
  CHECK(tag("What will Austin want to do next?") == RelationTag::oWant);
  CHECK(tag("What will happen to Austin?") == RelationTag::oEffect);
  CHECK(tag("How would Riley feel afterwards?") == RelationTag::xReact);
  CHECK(tag("What will Others want to do next?") == RelationTag::oWant);
  // No o-form exists for Intent, Need and Attr.
  CHECK(tag("Why did Austin do this?") == RelationTag::xIntent);
  CHECK(tag("What does Austin need to do before this?") == RelationTag::xNeed);
  CHECK(tag("How would you describe Austin?") == RelationTag::xAttr);
  // Unknown person defaults to the x-form.
  CHECK(tag("What will happen to Jordan?") == RelationTag::xEffect);
  CHECK(tag("Where is Riley now?") == RelationTag::Other);
}

TEST_CASE("rule table parsing and custom tables") {
  auto table = RuleTable::parse("# custom\n2 React feel\n1 Want would\n");
  REQUIRE(table.rules().size() == 2);
  CHECK(table.rules()[0].priority == 1);
  auto m = match_base_relation("How would Taylor feel?", table);
  REQUIRE(m);
  CHECK(m->relation == BaseRelation::Want);

  CHECK_THROWS_AS(RuleTable::parse("1 Need need\n1 Want want\n"), FormatError);
  CHECK_THROWS_AS(RuleTable::parse("1 Wish wish\n"), FormatError);
  CHECK_THROWS_AS(RuleTable::parse("one Need need\n"), FormatError);
  CHECK_THROWS_AS(RuleTable::parse("# nothing\n"), FormatError);

  const auto& defaults = RuleTable::defaults();
  auto reparsed = RuleTable::parse(defaults.to_config());
  REQUIRE(reparsed.rules().size() == defaults.rules().size());
  for (std::size_t i = 0; i < defaults.rules().size(); ++i) {
    CHECK(reparsed.rules()[i].patterns == defaults.rules()[i].patterns);
    CHECK(reparsed.rules()[i].priority == defaults.rules()[i].priority);
  }

  siqa::testing::TempDir dir;
  auto path = dir.write("rules.txt", "1 Attr describe\n");
  CHECK(RuleTable::load(path).rules().size() == 1);
}

TEST_CASE("default rule table invariants") {
  std::vector<int> priorities;
  for (const auto& r : RuleTable::defaults().rules()) {
    CHECK_FALSE(r.patterns.empty());
    priorities.push_back(r.priority);
  }
  auto sorted = priorities;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(sorted == priorities);
}

TEST_CASE("tag_dataset") {
  SUBCASE("empty input") {
    auto r = tag_dataset(std::vector<QAExample>{});
    CHECK(r.examples.empty());
    CHECK(r.histogram.total() == 0);
  }
  SUBCASE("duplicates get identical tags and histogram sums to input size") {
    auto ref = siqa::testing::reference_examples();
    std::vector<QAExample> in = {ref[3].example, ref[3].example, ref[0].example};
    auto r = tag_dataset(in);
    REQUIRE(r.examples.size() == 3);
    CHECK(r.examples[0].relation == r.examples[1].relation);
    CHECK(r.examples[0].relation_source == RelationSource::Rule);
    CHECK(r.histogram.total() == 3);
    CHECK(r.histogram[RelationTag::xNeed] == 2);
    CHECK(r.histogram[RelationTag::xAttr] == 1);
  }
  SUBCASE("categories already present are kept") {
    auto ref = siqa::testing::reference_examples();
    TaggedExample t{ref[0].example, {}, {}, {}, {}};
    t.set_category(KnowledgeCategory::FeelingsAndCharacteristics, CategorySource::Predicted);
    std::vector<TaggedExample> in = {t};
    auto r = RelationTagger().tag_dataset(in);
    CHECK(r.examples[0].category == KnowledgeCategory::FeelingsAndCharacteristics);
    CHECK(r.examples[0].relation == RelationTag::xAttr);
  }
  SUBCASE("analyzer failures carry the example id") {
    class Failing : public ContextAnalyzer {
     public:
      SyntacticAnalysis analyze(std::string_view) const override { throw Error("backend down"); }
    };
    RelationTagger tagger(RuleTable::defaults(), std::make_shared<Failing>());
    std::vector<QAExample> in = {ask("Kai ran.", "Why did Kai do this?")};
    CHECK_THROWS_WITH_AS(tagger.tag_dataset(in), doctest::Contains("'t:1'"), Error);
  }
}

TEST_CASE("totality, closed range, determinism and case-insensitivity over fuzzed questions") {
  auto questions = siqa::testing::fuzz_questions(1000, 42);
  auto first = tag_dataset(questions);
  auto second = tag_dataset(questions);
  REQUIRE(first.examples.size() == questions.size());
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const auto tag = *first.examples[i].relation;
    CHECK(std::find(kAllRelationTags.begin(), kAllRelationTags.end(), tag) != kAllRelationTags.end());
    CHECK(tag == *second.examples[i].relation);
    if (tag == RelationTag::oReact || tag == RelationTag::oWant || tag == RelationTag::oEffect) {
      auto base = match_base_relation(questions[i].question);
      REQUIRE(base);
      CHECK((base->relation == BaseRelation::React || base->relation == BaseRelation::Want ||
             base->relation == BaseRelation::Effect));
    }
    auto upper = questions[i];
    for (auto& c : upper.question) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    CAPTURE(questions[i].question);
    CHECK(tag_relation(upper, analyze_context(upper.context)) == tag);
  }
  std::size_t covered = 0;
  for (auto c : first.histogram.counts) covered += c > 0;
  CHECK(covered == kAllRelationTags.size());
}
