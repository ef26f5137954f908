#include "siqa/qa_eval.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "siqa/error.hpp"
#include "siqa/io.hpp"

namespace siqa {

std::size_t QAEvalResult::correct_count() const {
  return static_cast<std::size_t>(std::count(correctness.begin(), correctness.end(), std::uint8_t{1}));
}

std::string QAEvalResult::to_json() const {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["mode"] = std::string(to_string(mode));
  j["split_id"] = split_id;
  j["accuracy"] = accuracy;
  j["n"] = correctness.size();
  j["config"] = config_json.empty() ? nlohmann::ordered_json::object() : nlohmann::ordered_json::parse(config_json);
  j["example_ids"] = example_ids;
  j["predictions"] = predictions;
  j["correctness"] = correctness;
  return j.dump(1) + "\n";
}

QAEvalResult QAEvalResult::from_json(std::string_view text) {
  auto j = nlohmann::ordered_json::parse(text);
  QAEvalResult r;
  r.label = j.at("label").get<std::string>();
  auto mode = parse_mode(j.at("mode").get<std::string>());
  if (!mode) throw FormatError("evaluation result has unknown mode " + j.at("mode").dump());
  r.mode = *mode;
  r.split_id = j.at("split_id").get<std::string>();
  r.accuracy = j.at("accuracy").get<double>();
  r.config_json = j.at("config").dump();
  r.example_ids = j.at("example_ids").get<std::vector<std::string>>();
  r.predictions = j.at("predictions").get<std::vector<int>>();
  r.correctness = j.at("correctness").get<std::vector<std::uint8_t>>();
  if (r.example_ids.size() != r.correctness.size() || r.predictions.size() != r.correctness.size())
    throw FormatError("evaluation result vectors have inconsistent lengths");
  return r;
}

void QAEvalResult::save(const std::filesystem::path& path) const { io::write_file_atomic(path, to_json()); }

QAEvalResult QAEvalResult::load(const std::filesystem::path& path) {
  try {
    return from_json(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string split_digest(std::span<const TaggedExample> examples) {
  std::string ids;
  for (const auto& t : examples) {
    ids += t.example.id;
    ids += '\n';
  }
  return io::sha256_hex(ids).substr(0, 16);
}

int argmax(const std::array<float, 3>& scores) {
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (scores[static_cast<std::size_t>(i)] > scores[static_cast<std::size_t>(best)]) best = i;
  return best;
}

std::vector<int> predict(ChoiceScorer& scorer, std::span<const TaggedExample> examples, AugmentationMode mode) {
  if (scorer.mode() != mode)
    throw PreconditionError("model was trained with mode " + std::string(to_string(scorer.mode())) +
                            " but evaluation requested mode " + std::string(to_string(mode)));
  for (const auto& t : examples) check_mode_preconditions(t, mode);
  auto scores = scorer.score(examples);
  if (scores.size() != examples.size()) throw Error("scorer returned a wrong number of score rows");
  std::vector<int> out;
  out.reserve(scores.size());
  for (const auto& s : scores) out.push_back(argmax(s));
  return out;
}

QAEvalResult evaluate(ChoiceScorer& scorer, std::span<const TaggedExample> split, AugmentationMode mode,
                      std::string label) {
  for (const auto& t : split)
    if (!t.example.gold_index) throw PreconditionError("example '" + t.example.id + "' has no gold label");
  QAEvalResult r;
  r.label = label.empty() ? std::string(to_string(mode)) : std::move(label);
  r.mode = mode;
  r.split_id = split_digest(split);
  r.predictions = predict(scorer, split, mode);
  for (std::size_t i = 0; i < split.size(); ++i) {
    r.example_ids.push_back(split[i].example.id);
    r.correctness.push_back(r.predictions[i] == *split[i].example.gold_index ? 1 : 0);
  }
  r.accuracy = split.empty() ? 0.0 : static_cast<double>(r.correct_count()) / static_cast<double>(split.size());
  return r;
}

std::string format_predictions(std::span<const int> predictions) {
  std::string out;
  for (int p : predictions) {
    if (p < 0 || p > 2) throw PreconditionError("prediction outside {0,1,2}");
    out += static_cast<char>('1' + p);
    out += '\n';
  }
  return out;
}

void write_predictions(const std::filesystem::path& path, std::span<const int> predictions) {
  io::write_file_atomic(path, format_predictions(predictions));
}

}  // namespace siqa
