#include "siqa/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/text.hpp"

namespace siqa {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 10> kRelationNames = {
    "xIntent", "xNeed", "xAttr", "xReact", "xWant", "xEffect", "oReact", "oWant", "oEffect", "Other"};
constexpr std::array<std::string_view, 4> kCategoryNames = {
    "FeelingsAndCharacteristics", "Interaction", "DailyEvents", "KnowledgeNormRules"};
constexpr std::array<std::string_view, 4> kCategoryDisplay = {
    "Feelings and Characteristics", "Interaction", "Daily Events", "Knowledge, Norm, and Rules"};
constexpr std::array<std::string_view, 3> kAnswerKeys = {"answerA", "answerB", "answerC"};

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

std::string legal_categories() {
  std::string out;
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (i) out += ", ";
    out += kCategoryNames[i];
  }
  return out;
}

std::string where(const fs::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::string required_text(const json& record, std::string_view key, const fs::path& path, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string())
    throw FormatError(where(path, line) + ": missing text field '" + std::string(key) + "'");
  auto value = text::trim(it->get<std::string>());
  if (value.empty()) throw FormatError(where(path, line) + ": empty text field '" + std::string(key) + "'");
  return value;
}

int parse_label_value(std::string_view raw, const std::string& loc) {
  auto s = text::trim(raw);
  if (s == "1" || s == "2" || s == "3") return s[0] - '1';
  throw FormatError(loc + ": label '" + s + "' is not one of 1, 2, 3");
}

std::optional<int> inline_label(const json& record, const fs::path& path, std::size_t line) {
  auto it = record.find("label");
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return parse_label_value(std::to_string(it->get<long long>()), where(path, line));
  if (it->is_string()) return parse_label_value(it->get<std::string>(), where(path, line));
  throw FormatError(where(path, line) + ": label must be a string or integer");
}

json parse_line(const std::string& line, const fs::path& path, std::size_t lineno) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(where(path, lineno) + ": malformed record: " + e.what());
  }
  if (!record.is_object()) throw FormatError(where(path, lineno) + ": record is not an object");
  return record;
}

QAExample parse_example(const json& record, const fs::path& path, std::size_t lineno, const std::string& split) {
  QAExample ex;
  if (auto it = record.find("id"); it != record.end() && it->is_string() && !text::trim(it->get<std::string>()).empty())
    ex.id = text::trim(it->get<std::string>());
  else
    ex.id = split + ":" + std::to_string(lineno);
  ex.context = required_text(record, "context", path, lineno);
  ex.question = required_text(record, "question", path, lineno);
  for (std::size_t i = 0; i < 3; ++i) ex.answers[i] = required_text(record, kAnswerKeys[i], path, lineno);
  ex.gold_index = inline_label(record, path, lineno);
  return ex;
}

std::string split_name(const fs::path& path, std::string split) {
  if (!split.empty()) return split;
  return path.stem().string();
}

void check_unique_ids(const std::vector<std::string>& ids, const fs::path& path) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw FormatError(path.string() + ": duplicate example id '" + id + "'");
}

std::vector<int> read_label_file(const fs::path& labels_path) {
  std::vector<int> labels;
  auto lines = io::read_lines(labels_path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    labels.push_back(parse_label_value(lines[i], where(labels_path, i + 1)));
  }
  return labels;
}

void merge_labels(std::vector<QAExample*>& examples, const std::vector<int>& labels, const fs::path& data_path,
                  const fs::path& labels_path) {
  if (labels.size() != examples.size())
    throw FormatError("label/data length mismatch: " + labels_path.string() + " has " + std::to_string(labels.size()) +
                      " labels, " + data_path.string() + " has " + std::to_string(examples.size()) + " records");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& ex = *examples[i];
    if (ex.gold_index && *ex.gold_index != labels[i])
      throw FormatError("record '" + ex.id + "': inline label " + std::to_string(*ex.gold_index + 1) +
                        " disagrees with " + labels_path.string() + " label " + std::to_string(labels[i] + 1));
    ex.gold_index = labels[i];
  }
}

void check_tag_pairs(const TaggedExample& t, const std::string& loc) {
  if (t.relation.has_value() != t.relation_source.has_value())
    throw FormatError(loc + ": relation and relation_source must be present together");
  if (t.category.has_value() != t.category_source.has_value())
    throw FormatError(loc + ": category and category_source must be present together");
}

template <typename T, typename Parser>
std::optional<T> optional_enum(const json& record, std::string_view key, Parser parse, const std::string& loc) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(loc + ": field '" + std::string(key) + "' must be a string");
  auto raw = it->get<std::string>();
  auto value = parse(raw);
  if (!value) throw FormatError(loc + ": unknown " + std::string(key) + " value '" + raw + "'");
  return value;
}

}  // namespace

std::string_view to_string(RelationTag tag) { return kRelationNames[static_cast<std::size_t>(tag)]; }
std::string_view to_string(KnowledgeCategory category) { return kCategoryNames[static_cast<std::size_t>(category)]; }
std::string_view display_name(KnowledgeCategory category) {
  return kCategoryDisplay[static_cast<std::size_t>(category)];
}

std::string_view to_string(RelationSource source) { return source == RelationSource::Rule ? "rule" : "random"; }

std::string_view to_string(CategorySource source) {
  switch (source) {
    case CategorySource::Human: return "human";
    case CategorySource::Predicted: return "predicted";
    case CategorySource::Random: return "random";
  }
  return "";
}

std::optional<RelationTag> parse_relation_tag(std::string_view s) {
  for (std::size_t i = 0; i < kRelationNames.size(); ++i)
    if (kRelationNames[i] == s) return static_cast<RelationTag>(i);
  return std::nullopt;
}

std::optional<KnowledgeCategory> parse_category(std::string_view s) {
  auto key = fold(s);
  if (key.empty()) return std::nullopt;
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (key == fold(kCategoryNames[i]) || key == fold(kCategoryDisplay[i])) return static_cast<KnowledgeCategory>(i);
  // Singular/plural spellings used in tables ("Daily Event", "Feeling and Characteristic").
  static const std::map<std::string, KnowledgeCategory> kAliases = {
      {"feelingandcharacteristic", KnowledgeCategory::FeelingsAndCharacteristics},
      {"feelingsandcharacteristic", KnowledgeCategory::FeelingsAndCharacteristics},
      {"dailyevent", KnowledgeCategory::DailyEvents},
      {"knowledgenormandrule", KnowledgeCategory::KnowledgeNormRules},
      {"knowledgenormrule", KnowledgeCategory::KnowledgeNormRules},
  };
  if (auto it = kAliases.find(key); it != kAliases.end()) return it->second;
  return std::nullopt;
}

std::optional<RelationSource> parse_relation_source(std::string_view s) {
  if (s == "rule") return RelationSource::Rule;
  if (s == "random") return RelationSource::Random;
  return std::nullopt;
}

std::optional<CategorySource> parse_category_source(std::string_view s) {
  if (s == "human") return CategorySource::Human;
  if (s == "predicted") return CategorySource::Predicted;
  if (s == "random") return CategorySource::Random;
  return std::nullopt;
}

void validate(const QAExample& ex) {
  auto fail = [&](const std::string& what) { throw FormatError("example '" + ex.id + "': " + what); };
  if (ex.id.empty()) throw FormatError("example with empty id");
  if (ex.context.empty()) fail("empty context");
  if (ex.question.empty()) fail("empty question");
  for (const auto& a : ex.answers)
    if (a.empty()) fail("empty answer");
  if (ex.gold_index && (*ex.gold_index < 0 || *ex.gold_index > 2)) fail("gold index outside {0,1,2}");
}

std::vector<QAExample> load_socialiqa(const fs::path& data_path, const std::optional<fs::path>& labels_path,
                                      std::string split) {
  split = split_name(data_path, std::move(split));
  auto lines = io::read_lines(data_path);
  std::vector<QAExample> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    out.push_back(parse_example(parse_line(lines[i], data_path, i + 1), data_path, i + 1, split));
  }
  if (labels_path) {
    std::vector<QAExample*> refs;
    for (auto& ex : out) refs.push_back(&ex);
    merge_labels(refs, read_label_file(*labels_path), data_path, *labels_path);
  }
  std::vector<std::string> ids;
  for (const auto& ex : out) ids.push_back(ex.id);
  check_unique_ids(ids, data_path);
  return out;
}

std::vector<CategoryAnnotation> load_category_annotations(const fs::path& path) {
  auto lines = io::read_lines(path);
  std::vector<CategoryAnnotation> out;
  std::unordered_set<std::string> seen;
  const auto split = split_name(path, {});
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto loc = where(path, i + 1);
    CategoryAnnotation ann{};
    std::string raw_category;
    if (line.front() == '{') {
      auto record = parse_line(line, path, i + 1);
      const bool has_item = record.contains("context") && record.contains("question");
      if (has_item) ann.embedded = parse_example(record, path, i + 1, split);
      std::string id;
      for (const char* key : {"example_id", "id"})
        if (auto it = record.find(key); it != record.end() && it->is_string()) {
          id = text::trim(it->get<std::string>());
          break;
        }
      if (id.empty()) {
        if (!ann.embedded) throw FormatError(loc + ": annotation without an example id");
        id = ann.embedded->id;
      }
      ann.example_id = id;
      auto it = record.find("category");
      if (it == record.end() || !it->is_string()) throw FormatError(loc + ": missing category");
      raw_category = it->get<std::string>();
      if (auto a = record.find("annotator"); a != record.end() && a->is_string()) ann.annotator = a->get<std::string>();
    } else {
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, '\t')) fields.push_back(text::trim(field));
      if (fields.size() < 2 || fields[0].empty()) throw FormatError(loc + ": expected id<TAB>category[<TAB>annotator]");
      ann.example_id = fields[0];
      raw_category = fields[1];
      if (fields.size() > 2 && !fields[2].empty()) ann.annotator = fields[2];
    }
    auto category = parse_category(raw_category);
    if (!category)
      throw FormatError(loc + ": unknown category '" + raw_category + "'; expected one of " + legal_categories());
    ann.category = *category;
    if (!seen.insert(ann.example_id).second)
      throw FormatError(loc + ": duplicate annotation for example '" + ann.example_id + "'");
    out.push_back(std::move(ann));
  }
  return out;
}

double compute_agreement(std::span<const CategoryAnnotation> a, std::span<const CategoryAnnotation> b) {
  std::map<std::string, KnowledgeCategory> left, right;
  for (const auto& x : a) left.emplace(x.example_id, x.category);
  for (const auto& x : b) right.emplace(x.example_id, x.category);
  std::vector<std::string> only;
  for (const auto& [id, _] : left)
    if (!right.count(id)) only.push_back(id);
  for (const auto& [id, _] : right)
    if (!left.count(id)) only.push_back(id);
  if (!only.empty()) {
    std::sort(only.begin(), only.end());
    throw PreconditionError("annotation id sets differ; symmetric difference: " + text::join(only, ", "));
  }
  if (left.empty()) throw PreconditionError("agreement over an empty id set is undefined");
  std::size_t same = 0;
  for (const auto& [id, cat] : left) same += (right.at(id) == cat);
  return static_cast<double>(same) / static_cast<double>(left.size());
}

std::vector<std::pair<QAExample, KnowledgeCategory>> join_annotations(std::span<const QAExample> corpus,
                                                                      std::span<const CategoryAnnotation> annotations) {
  std::unordered_map<std::string, const QAExample*> by_id;
  for (const auto& ex : corpus) by_id.emplace(ex.id, &ex);
  std::vector<std::pair<QAExample, KnowledgeCategory>> out;
  out.reserve(annotations.size());
  for (const auto& ann : annotations) {
    if (auto it = by_id.find(ann.example_id); it != by_id.end()) {
      out.emplace_back(*it->second, ann.category);
    } else if (ann.embedded) {
      out.emplace_back(*ann.embedded, ann.category);
    } else {
      throw FormatError("annotation for '" + ann.example_id + "' does not resolve to any corpus example");
    }
  }
  return out;
}

std::string serialize_tagged(std::span<const TaggedExample> examples) {
  std::string out;
  for (const auto& t : examples) {
    validate(t.example);
    check_tag_pairs(t, "example '" + t.example.id + "'");
    json record;
    record["id"] = t.example.id;
    record["context"] = t.example.context;
    record["question"] = t.example.question;
    for (std::size_t i = 0; i < 3; ++i) record[std::string(kAnswerKeys[i])] = t.example.answers[i];
    if (t.example.gold_index) record["label"] = std::to_string(*t.example.gold_index + 1);
    if (t.relation) {
      record["relation"] = std::string(to_string(*t.relation));
      record["relation_source"] = std::string(to_string(*t.relation_source));
    }
    if (t.category) {
      record["category"] = std::string(to_string(*t.category));
      record["category_source"] = std::string(to_string(*t.category_source));
    }
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_tagged(const fs::path& path, std::span<const TaggedExample> examples) {
  io::write_file_atomic(path, serialize_tagged(examples));
}

std::vector<TaggedExample> load_tagged(const fs::path& path, std::string split) {
  split = split_name(path, std::move(split));
  auto lines = io::read_lines(path);
  std::vector<TaggedExample> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto record = parse_line(lines[i], path, i + 1);
    const auto loc = where(path, i + 1);
    TaggedExample t;
    t.example = parse_example(record, path, i + 1, split);
    t.relation = optional_enum<RelationTag>(record, "relation", parse_relation_tag, loc);
    t.relation_source = optional_enum<RelationSource>(record, "relation_source", parse_relation_source, loc);
    t.category = optional_enum<KnowledgeCategory>(
        record, "category", [](std::string_view s) { return parse_category(s); }, loc);
    t.category_source = optional_enum<CategorySource>(record, "category_source", parse_category_source, loc);
    check_tag_pairs(t, loc);
    out.push_back(std::move(t));
  }
  std::vector<std::string> ids;
  for (const auto& t : out) ids.push_back(t.example.id);
  check_unique_ids(ids, path);
  return out;
}

void apply_label_file(std::vector<TaggedExample>& examples, const fs::path& labels_path) {
  std::vector<QAExample*> refs;
  for (auto& t : examples) refs.push_back(&t.example);
  merge_labels(refs, read_label_file(labels_path), fs::path("<dataset>"), labels_path);
}

std::vector<TaggedExample> as_tagged(std::span<const QAExample> examples) {
  std::vector<TaggedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(TaggedExample{ex, {}, {}, {}, {}});
  return out;
}

}  // namespace siqa
