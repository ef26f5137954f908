#include "support/synthetic.hpp"

#include <array>
#include <cctype>

#include "siqa/random.hpp"

namespace siqa::testing {

namespace {

QAExample make(std::string id, std::string context, std::string question, std::array<std::string, 3> answers,
               int gold) {
  return QAExample{std::move(id), std::move(context), std::move(question), std::move(answers), gold};
}

constexpr std::array<const char*, 24> kNames = {
    "Taylor", "Alex",  "Kendall", "Kai",   "Riley",   "Austin", "Jordan",  "Sasha",
    "Remy",   "Carson", "Skylar", "Quinn", "Cameron", "Jesse",  "Robin",   "Tracy",
    "Lee",    "Aubrey", "Addison", "Bailey", "Casey",  "Jan",    "Sydney",  "Ash"};

struct EventTemplate {
  const char* text;  // {X} agent, {Y} other participant
  KnowledgeCategory category;
  bool has_other;
};

constexpr std::array<EventTemplate, 16> kEvents = {{
    {"{X} lost their shirt and walked around topless.", KnowledgeCategory::FeelingsAndCharacteristics, false},
    {"{X} was taking a test and found it difficult at first.", KnowledgeCategory::FeelingsAndCharacteristics, false},
    {"{X} felt nervous before the big game and could not sleep.", KnowledgeCategory::FeelingsAndCharacteristics, false},
    {"{X} laughed loudly at the joke {Y} told.", KnowledgeCategory::FeelingsAndCharacteristics, true},
    {"{X} helped {Y} move into a new apartment.", KnowledgeCategory::Interaction, true},
    {"{X} gave {Y} a ride to work in the rain.", KnowledgeCategory::Interaction, true},
    {"{X} argued with {Y} about the dinner bill.", KnowledgeCategory::Interaction, true},
    {"{X} invited {Y} to the birthday party.", KnowledgeCategory::Interaction, true},
    {"{X} went to the store to buy groceries.", KnowledgeCategory::DailyEvents, false},
    {"{X} cooked dinner at home after work.", KnowledgeCategory::DailyEvents, false},
    {"{X} took the bus to school in the morning.", KnowledgeCategory::DailyEvents, false},
    {"{X} and {Y} went to the hair salon together.", KnowledgeCategory::DailyEvents, true},
    {"{X} studied law for years and became a lawyer.", KnowledgeCategory::KnowledgeNormRules, false},
    {"{X} got a flu shot at the clinic.", KnowledgeCategory::KnowledgeNormRules, false},
    {"{X} filed the tax return before the deadline.", KnowledgeCategory::KnowledgeNormRules, false},
    {"{X} taught math in the schools after studying to be a teacher.", KnowledgeCategory::KnowledgeNormRules, false},
}};

// Answer pools by base relation; index 6 is for questions tagged Other.
constexpr std::array<std::array<const char*, 6>, 7> kAnswers = {{
    {"to be helpful", "to have fun", "to make money", "to feel better", "to be nice", "to get ahead"},
    {"get ready first", "buy supplies", "make a plan", "find the address", "save some money", "ask for permission"},
    {"kind", "generous", "lazy", "brave", "careless", "thoughtful"},
    {"happy", "sad", "proud", "embarrassed", "relieved", "angry"},
    {"go home", "say thank you", "take a nap", "call a friend", "celebrate", "apologize"},
    {"gets a reward", "gets tired", "loses money", "makes a friend", "gets in trouble", "learns a lesson"},
    {"at the park", "a student", "in the morning", "very tall", "a neighbor", "at the office"},
}};

std::size_t pool_of(RelationTag tag) {
  switch (tag) {
    case RelationTag::xIntent: return 0;
    case RelationTag::xNeed: return 1;
    case RelationTag::xAttr: return 2;
    case RelationTag::xReact:
    case RelationTag::oReact: return 3;
    case RelationTag::xWant:
    case RelationTag::oWant: return 4;
    case RelationTag::xEffect:
    case RelationTag::oEffect: return 5;
    case RelationTag::Other: return 6;
  }
  return 6;
}

std::string fill(std::string s, const std::string& x, const std::string& y) {
  for (auto [key, value] : {std::pair<std::string, std::string>{"{X}", x}, {"{Y}", y}}) {
    for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key)) s.replace(pos, key.size(), value);
  }
  return s;
}

std::string question_for(RelationTag tag, const std::string& x, const std::string& y, bool use_others) {
  const std::string who = use_others ? "Others" : y;
  switch (tag) {
    case RelationTag::xIntent: return "Why did " + x + " do this?";
    case RelationTag::xNeed: return "What does " + x + " need to do before this?";
    case RelationTag::xAttr: return "How would you describe " + x + "?";
    case RelationTag::xReact: return "How would " + x + " feel afterwards?";
    case RelationTag::xWant: return "What will " + x + " want to do next?";
    case RelationTag::xEffect: return "What will happen to " + x + "?";
    case RelationTag::oReact: return "How would " + who + " feel as a result?";
    case RelationTag::oWant: return "What will " + who + " want to do next?";
    case RelationTag::oEffect: return "What will happen to " + who + "?";
    case RelationTag::Other: return "Where is " + x + " right now?";
  }
  return {};
}

}  // namespace

std::vector<GoldenItem> reference_examples() {
  return {
      {make("ref:1", "Kendall lost their shirt and walked around topless.", "How would you describe Kendall?",
            {"ashamed", "embarrassed", "in trouble"}, 1),
       RelationTag::xAttr, KnowledgeCategory::FeelingsAndCharacteristics},
      {make("ref:2", "Alex was no longer raising Sasha but she did give birth to Sasha.",
            "What will Alex want to do next?", {"build a relationship", "Ask to visit Sasha", "Kidnap Sasha from home"},
            1),
       RelationTag::xWant, KnowledgeCategory::Interaction},
      {make("ref:3", "Kai was grounded after wrecking his mother's car so he handed back the keys.",
            "What will Kai want to do next?", {"wanted to stay out of trouble", "work hard at home", "rent out the car"},
            0),
       RelationTag::xWant, KnowledgeCategory::DailyEvents},
      {make("ref:4", "Taylor taught math in the schools after studying to be a teacher for 4 years.",
            "What does Taylor need to do before this?", {"get a certificate", "teach small children", "work in a school"},
            0),
       RelationTag::xNeed, KnowledgeCategory::KnowledgeNormRules},
  };
}

std::vector<GoldenItem> scenario_examples() {
  return {
      {make("case:1", "Riley told Austin's landlord that Austin was making a lot of noise at late hours.",
            "What does Riley need to do before this?",
            {"potentially call the police", "document incidents", "follow up with the landlord"}, 1),
       RelationTag::xNeed, KnowledgeCategory::Interaction},
      {make("case:2", "Austin was taking a test and found it difficult at first.", "How would you describe Austin?",
            {"student", "stupid", "overwhelmed"}, 2),
       RelationTag::xAttr, KnowledgeCategory::FeelingsAndCharacteristics},
  };
}

std::vector<SyntheticItem> synthetic_items(std::size_t n, std::uint64_t seed, const std::string& split) {
  SplitMix64 rng(seed);
  std::vector<SyntheticItem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ev = kEvents[rng.below(kEvents.size())];
    std::string x = kNames[rng.below(kNames.size())];
    std::string y = kNames[rng.below(kNames.size())];
    while (y == x) y = kNames[rng.below(kNames.size())];
    auto tag = kAllRelationTags[rng.below(kAllRelationTags.size())];
    const bool other_side = tag == RelationTag::oReact || tag == RelationTag::oWant || tag == RelationTag::oEffect;
    const bool use_others = other_side && (!ev.has_other || rng.below(3) == 0);

    const auto gold_pool = pool_of(tag);
    std::array<std::string, 3> answers;
    const int gold = static_cast<int>(rng.below(3));
    for (int k = 0; k < 3; ++k) {
      std::size_t pool = gold_pool;
      if (k != gold) {
        do pool = rng.below(kAnswers.size());
        while (pool == gold_pool);
      }
      answers[static_cast<std::size_t>(k)] = kAnswers[pool][rng.below(6)];
    }
    QAExample ex{split + ":" + std::to_string(i + 1), fill(ev.text, x, y), question_for(tag, x, y, use_others),
                 answers, gold};
    out.push_back(SyntheticItem{std::move(ex), tag, ev.category});
  }
  return out;
}

std::vector<QAExample> fuzz_questions(std::size_t n, std::uint64_t seed) {
  static const std::array<const char*, 16> kTemplates = {
      "Why did {X} do this?",
      "What does {X} need to do before this?",
      "How would you describe {X}?",
      "How would {X} feel afterwards?",
      "What will {X} want to do next?",
      "What will happen to {X}?",
      "How would Others feel as a result?",
      "What will Others want to do next?",
      "What will happen to Others?",
      "How would {Y} feel as a result?",
      "What will {Y} want to do next?",
      "What will happen to {Y}?",
      "What will {X} do next?",
      "Why does {X} want to see {Y}?",
      "How would you see {X} as a person?",
      "Where did {X} go?",
  };
  SplitMix64 rng(seed);
  std::vector<QAExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string x = kNames[rng.below(kNames.size())];
    std::string y = kNames[rng.below(kNames.size())];
    while (y == x) y = kNames[rng.below(kNames.size())];
    const auto& ev = kEvents[rng.below(kEvents.size())];
    std::string q = fill(kTemplates[rng.below(kTemplates.size())], x, y);
    switch (rng.below(4)) {
      case 0: break;
      case 1:
        for (auto& c : q) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        break;
      case 2: q = "  " + q + "  "; break;
      case 3:
        if (!q.empty() && q.back() == '?') q.pop_back();
        break;
    }
    std::string context = fill(ev.text, x, y);
    if (!ev.has_other && rng.below(2) == 0) context += " " + y + " watched.";
    out.push_back(QAExample{"fuzz:" + std::to_string(i + 1), context, q, {"a", "b", "c"}, 0});
  }
  return out;
}

std::vector<TaggedExample> tagged_with_categories(const std::vector<SyntheticItem>& items, CategorySource source) {
  std::vector<TaggedExample> out;
  for (const auto& it : items) {
    TaggedExample t{it.example, {}, {}, {}, {}};
    t.set_category(it.category, source);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace siqa::testing
