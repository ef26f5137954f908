#include "siqa/relation_tagger.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_set>

#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/text.hpp"

namespace siqa {

namespace {

// Checked in ascending priority order. Multiword phrases come before single
// words so that "want" cannot take over "need to do before" questions.
constexpr std::string_view kDefaultRules = R"(# priority relation phrase
1 Need need to do before
2 Intent why did
2 Intent why does
3 Want want to do
4 Effect happen to
5 Attr describe
5 Attr think of
5 Attr see ... as
6 React feel
7 Need need
8 Want want
9 Effect happen
)";

const std::unordered_set<std::string>& non_person_capitals() {
  static const std::unordered_set<std::string> kWords = {
      "the", "a", "an", "after", "before", "when", "while", "because", "since", "if", "on", "in", "at", "it",
      "they", "he", "she", "we", "i", "you", "his", "her", "their", "them", "then", "so", "but", "and", "or",
      "one", "today", "yesterday", "tomorrow", "tonight", "this", "that", "these", "those", "there", "as",
      "with", "without", "during", "once", "although", "though", "what", "who", "why", "how", "where",
      "which", "will", "would", "does", "did", "do", "is", "was", "were", "are", "can", "could", "should",
      "my", "our", "your", "its", "some", "every", "all", "last", "next", "monday", "tuesday", "wednesday",
      "thursday", "friday", "saturday", "sunday", "january", "february", "march", "april", "may", "june",
      "july", "august", "september", "october", "november", "december", "christmas", "halloween",
      "thanksgiving", "easter", "god", "mr", "mrs", "ms", "dr", "english", "spanish", "french", "american",
      "finally", "later", "eventually", "suddenly", "also", "however", "unfortunately", "luckily", "even",
      "until", "unless", "whenever", "both", "each", "many", "most", "no", "not", "other", "others", "to",
      "for", "of", "from", "by", "about", "instead", "still", "now", "here", "being", "having", "someone",
      "everyone", "nobody", "somebody", "everybody", "people", "person"};
  return kWords;
}

const std::unordered_set<std::string>& coordinators() {
  static const std::unordered_set<std::string> kWords = {"and", "but", "so", "then", "or", "yet"};
  return kWords;
}

const std::unordered_set<std::string>& subordinators() {
  static const std::unordered_set<std::string> kWords = {
      "that", "because", "after", "before", "when", "while", "since", "until", "although", "though", "if",
      "who", "which", "whom", "whose", "where", "once", "unless", "whenever", "as"};
  return kWords;
}

// Words that may precede a main-clause subject without displacing it.
const std::unordered_set<std::string>& leading_adverbs() {
  static const std::unordered_set<std::string> kWords = {
      "then", "also", "finally", "later", "yesterday", "today", "eventually", "suddenly", "soon", "still",
      "now", "tonight", "recently", "always", "never", "often", "sometimes", "immediately", "however",
      "unfortunately", "luckily", "even", "just", "only", "once"};
  return kWords;
}

bool is_punct(const std::string& w) {
  return w.size() == 1 && !std::isalnum(static_cast<unsigned char>(w[0]));
}

bool is_person_token(const std::string& w) {
  if (!text::is_capitalized(w) || w == "'s") return false;
  if (w.size() == 1) return false;
  return !non_person_capitals().count(text::to_lower(w));
}

void push_unique(std::vector<std::string>& list, const std::string& v) {
  if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(v);
}

struct Clause {
  std::vector<std::string> words;
  bool main = true;
};

std::vector<Clause> segment(const std::string& sentence) {
  std::vector<Clause> clauses(1);
  for (auto& w : text::words(sentence)) {
    auto lower = text::to_lower(w);
    if (is_punct(w) && w != "-") {
      if (w == "," || w == ";" || w == ":" || w == "(" || w == ")") {
        if (!clauses.back().words.empty()) clauses.push_back(Clause{});
      }
      continue;
    }
    if (coordinators().count(lower)) {
      if (!clauses.back().words.empty()) clauses.push_back(Clause{});
      clauses.back().main = true;
      continue;
    }
    if (subordinators().count(lower)) {
      if (!clauses.back().words.empty()) clauses.push_back(Clause{});
      clauses.back().main = false;
      continue;
    }
    clauses.back().words.push_back(std::move(w));
  }
  if (clauses.back().words.empty()) clauses.pop_back();
  return clauses;
}

std::vector<std::string> pattern_words(std::string_view pattern) {
  std::vector<std::string> out;
  std::istringstream ss{std::string(pattern)};
  std::string w;
  while (ss >> w) out.push_back(text::to_lower(w));
  return out;
}

bool match_at(const std::vector<std::string>& words, std::size_t start, const std::vector<std::string>& pat,
              std::size_t pi) {
  if (pi == pat.size()) return true;
  if (pat[pi] == "...") {
    for (std::size_t k = start; k <= words.size(); ++k)
      if (match_at(words, k, pat, pi + 1)) return true;
    return false;
  }
  if (start >= words.size() || words[start] != pat[pi]) return false;
  return match_at(words, start + 1, pat, pi + 1);
}

bool contains_phrase(const std::vector<std::string>& words, const std::vector<std::string>& pat) {
  if (pat.empty()) return false;
  for (std::size_t i = 0; i < words.size(); ++i)
    if (match_at(words, i, pat, 0)) return true;
  return false;
}

std::vector<std::string> lowered_words(std::string_view s) {
  auto ws = text::words(s);
  for (auto& w : ws) w = text::to_lower(w);
  return ws;
}

RelationTag compose(BaseRelation base, Side side) {
  const bool other = side == Side::Other;
  switch (base) {
    case BaseRelation::Intent: return RelationTag::xIntent;
    case BaseRelation::Need: return RelationTag::xNeed;
    case BaseRelation::Attr: return RelationTag::xAttr;
    case BaseRelation::React: return other ? RelationTag::oReact : RelationTag::xReact;
    case BaseRelation::Want: return other ? RelationTag::oWant : RelationTag::xWant;
    case BaseRelation::Effect: return other ? RelationTag::oEffect : RelationTag::xEffect;
  }
  return RelationTag::Other;
}

}  // namespace

SyntacticAnalysis HeuristicAnalyzer::analyze(std::string_view context) const {
  if (text::trim(context).empty()) throw PreconditionError("analyze_context: empty context");
  SyntacticAnalysis out;
  std::vector<std::string> clause_heads;
  for (const auto& sentence : text::sentences(context)) {
    for (const auto& clause : segment(sentence)) {
      const auto& ws = clause.words;
      std::optional<std::size_t> subject;
      if (clause.main) {
        for (std::size_t i = 0; i < ws.size(); ++i) {
          if (is_person_token(ws[i])) {
            // "Austin's landlord ..." heads the clause with a possessor, not a subject.
            if (i + 1 >= ws.size() || ws[i + 1] != "'s") subject = i;
            break;
          }
          auto lower = text::to_lower(ws[i]);
          if (!leading_adverbs().count(lower) && !text::is_capitalized(ws[i])) break;
        }
      }
      for (std::size_t i = 0; i < ws.size(); ++i) {
        if (!is_person_token(ws[i])) continue;
        auto mention = text::to_lower(ws[i]);
        if (i == 0) push_unique(clause_heads, mention);
        if (subject && *subject == i)
          push_unique(out.sentence_subjects, mention);
        else
          push_unique(out.sentence_objects, mention);
      }
    }
  }
  if (out.sentence_subjects.empty() && !clause_heads.empty()) {
    out.sentence_subjects.push_back(clause_heads.front());
    std::erase(out.sentence_objects, clause_heads.front());
  }
  return out;
}

SyntacticAnalysis analyze_context(std::string_view context) {
  static const HeuristicAnalyzer analyzer;
  return analyzer.analyze(context);
}

std::string_view to_string(BaseRelation relation) {
  switch (relation) {
    case BaseRelation::Intent: return "Intent";
    case BaseRelation::Need: return "Need";
    case BaseRelation::Attr: return "Attr";
    case BaseRelation::React: return "React";
    case BaseRelation::Want: return "Want";
    case BaseRelation::Effect: return "Effect";
  }
  return "";
}

std::optional<BaseRelation> parse_base_relation(std::string_view s) {
  for (auto r : {BaseRelation::Intent, BaseRelation::Need, BaseRelation::Attr, BaseRelation::React,
                 BaseRelation::Want, BaseRelation::Effect})
    if (to_string(r) == s) return r;
  return std::nullopt;
}

std::string_view to_string(Side side) {
  switch (side) {
    case Side::Agent: return "agent";
    case Side::Other: return "other";
    case Side::Unknown: return "unknown";
  }
  return "";
}

const RuleTable& RuleTable::defaults() {
  static const RuleTable table = parse(kDefaultRules);
  return table;
}

RuleTable RuleTable::parse(std::string_view config) {
  std::map<int, KeywordRule> by_priority;
  std::istringstream in{std::string(config)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = text::trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    int priority = 0;
    std::string relation;
    if (!(ls >> priority >> relation))
      throw FormatError("rule table line " + std::to_string(lineno) + ": expected '<priority> <Relation> <phrase>'");
    auto base = parse_base_relation(relation);
    if (!base) throw FormatError("rule table line " + std::to_string(lineno) + ": unknown relation '" + relation + "'");
    std::string rest;
    std::getline(ls, rest);
    auto words = pattern_words(rest);
    if (words.empty()) throw FormatError("rule table line " + std::to_string(lineno) + ": empty phrase");
    auto [it, inserted] = by_priority.try_emplace(priority, KeywordRule{{}, *base, priority});
    if (!inserted && it->second.base_relation != *base)
      throw FormatError("rule table line " + std::to_string(lineno) + ": priority " + std::to_string(priority) +
                        " already used by relation " + std::string(to_string(it->second.base_relation)));
    it->second.patterns.push_back(text::join(words, " "));
  }
  RuleTable table;
  for (auto& [_, rule] : by_priority) table.rules_.push_back(std::move(rule));
  if (table.rules_.empty()) throw FormatError("rule table has no rules");
  return table;
}

RuleTable RuleTable::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

std::string RuleTable::to_config() const {
  std::string out = "# priority relation phrase\n";
  for (const auto& rule : rules_)
    for (const auto& p : rule.patterns)
      out += std::to_string(rule.priority) + " " + std::string(to_string(rule.base_relation)) + " " + p + "\n";
  return out;
}

std::optional<RuleMatch> match_base_relation(std::string_view question, const RuleTable& table) {
  auto words = lowered_words(question);
  for (const auto& rule : table.rules())
    for (const auto& pattern : rule.patterns)
      if (contains_phrase(words, pattern_words(pattern))) return RuleMatch{rule.base_relation, &rule, pattern};
  return std::nullopt;
}

PerspectiveResult resolve_perspective(std::string_view question, const SyntacticAnalysis& analysis) {
  auto ws = text::words(question);
  auto known = [&](const std::string& m) {
    return std::find(analysis.sentence_subjects.begin(), analysis.sentence_subjects.end(), m) !=
               analysis.sentence_subjects.end() ||
           std::find(analysis.sentence_objects.begin(), analysis.sentence_objects.end(), m) !=
               analysis.sentence_objects.end();
  };
  // Mentions the context knows about win over other capitalized words, which
  // keeps the result stable when the whole question is upper-cased.
  std::optional<std::string> person;
  for (std::size_t i = 1; i < ws.size() && !person; ++i) {
    auto lower = text::to_lower(ws[i]);
    if (lower == "others") return PerspectiveResult{"others", Side::Other};
    if (text::is_capitalized(ws[i]) && known(lower)) person = lower;
  }
  for (std::size_t i = 1; i < ws.size() && !person; ++i)
    if (is_person_token(ws[i])) person = text::to_lower(ws[i]);
  if (!person) {
    const bool mentions_you = std::any_of(ws.begin(), ws.end(), [](const std::string& w) {
      return text::to_lower(w) == "you";
    });
    if (mentions_you && !analysis.sentence_subjects.empty())
      return PerspectiveResult{analysis.sentence_subjects.front(), Side::Agent};
    return PerspectiveResult{std::nullopt, Side::Unknown};
  }
  auto has = [&](const std::vector<std::string>& list) {
    return std::find(list.begin(), list.end(), *person) != list.end();
  };
  if (has(analysis.sentence_subjects)) return PerspectiveResult{person, Side::Agent};
  if (has(analysis.sentence_objects)) return PerspectiveResult{person, Side::Other};
  return PerspectiveResult{person, Side::Unknown};
}

RelationTag tag_relation(const QAExample& example, const SyntacticAnalysis& analysis, const RuleTable& table) {
  auto match = match_base_relation(example.question, table);
  if (!match) return RelationTag::Other;
  return compose(match->relation, resolve_perspective(example.question, analysis).side);
}

std::size_t TagHistogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

RelationTagger::RelationTagger() : RelationTagger(RuleTable::defaults(), std::make_shared<HeuristicAnalyzer>()) {}

RelationTagger::RelationTagger(RuleTable rules, std::shared_ptr<const ContextAnalyzer> analyzer)
    : rules_(std::move(rules)), analyzer_(std::move(analyzer)) {
  if (!analyzer_) throw PreconditionError("RelationTagger needs an analyzer");
}

RelationTag RelationTagger::tag(const QAExample& example) const {
  return tag_relation(example, analyzer_->analyze(example.context), rules_);
}

TaggingResult RelationTagger::tag_dataset(std::span<const TaggedExample> examples) const {
  TaggingResult result;
  result.examples.reserve(examples.size());
  for (const auto& t : examples) {
    RelationTag tag;
    try {
      tag = this->tag(t.example);
    } catch (const std::exception& e) {
      throw Error("tagging example '" + t.example.id + "' failed: " + e.what());
    }
    auto out = t;
    out.set_relation(tag, RelationSource::Rule);
    ++result.histogram.counts[static_cast<std::size_t>(tag)];
    result.examples.push_back(std::move(out));
  }
  return result;
}

TaggingResult RelationTagger::tag_dataset(std::span<const QAExample> examples) const {
  auto tagged = as_tagged(examples);
  return tag_dataset(std::span<const TaggedExample>(tagged));
}

TaggingResult tag_dataset(std::span<const QAExample> examples) {
  static const RelationTagger tagger;
  return tagger.tag_dataset(examples);
}

}  // namespace siqa
