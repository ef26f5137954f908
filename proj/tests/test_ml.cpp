#include <algorithm>
#include <chrono>
#include <map>

#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/qa_trainer.hpp"
#include "siqa/taxonomy_classifier.hpp"
#include "support/pretrained.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

// The tensor library brings its own CHECK macro; the test framework's wins.
#undef CHECK
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace siqa;
using namespace siqa::ml;
namespace fs = std::filesystem;

namespace {

const fs::path& encoder_dir() {
  static siqa::testing::TempDir dir;
  static auto path = siqa::testing::pretrained_tiny(dir.path() / "tiny-mlm");
  return path;
}

std::vector<TaggedExample> tagged_items(std::size_t n, std::uint64_t seed, const std::string& split = "syn") {
  std::vector<TaggedExample> out;
  for (const auto& it : siqa::testing::synthetic_items(n, seed, split)) {
    TaggedExample t{it.example, {}, {}, {}, {}};
    t.set_relation(it.intended_relation, RelationSource::Rule);
    t.set_category(it.category, CategorySource::Human);
    out.push_back(t);
  }
  return out;
}

std::vector<LabeledExample> labeled(const std::vector<TaggedExample>& data) {
  std::vector<LabeledExample> out;
  for (const auto& t : data) out.emplace_back(t.example, *t.category);
  return out;
}

// Off-grid hyperparameters: a few-step memorization run on a tiny
// encoder needs a far larger learning rate than full-size fine-tuning.
QATrainConfig smoke_config() {
  QATrainConfig c;
  c.encoder_name = encoder_dir().string();
  c.learning_rate = 1e-3;
  c.batch_size = 2;
  c.gradient_accumulation = 1;
  c.max_epochs = 4;
  c.dropout = 0.0;
  c.seed = 11;
  return c;
}

ClassifierConfig classifier_smoke_config() {
  ClassifierConfig c;
  c.encoder_name = encoder_dir().string();
  c.learning_rate = 1e-3;
  c.batch_size = 4;
  c.max_epochs = 4;
  c.dropout = 0.0;
  c.seed = 11;
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

TEST_CASE("tuned configurations and search grid") {
  CHECK(default_config(AugmentationMode::None).gradient_accumulation == 8);
  CHECK(default_config(AugmentationMode::Relation).gradient_accumulation == 8);
  CHECK(default_config(AugmentationMode::Category).gradient_accumulation == 4);
  CHECK(default_config(AugmentationMode::Both).gradient_accumulation == 16);
  for (auto m : kAllModes) {
    auto c = default_config(m);
    CHECK(c.learning_rate == 1e-5);
    CHECK(c.batch_size == 8);
    CHECK(c.on_search_grid());
  }
  CHECK_FALSE(smoke_config().on_search_grid());
  CHECK(smoke_config().to_json()["on_search_grid"] == false);

  QAGrid grid;
  auto points = grid.points(QATrainConfig{});
  REQUIRE(points.size() == 12);
  CHECK(points.front().learning_rate == 1e-5);
  CHECK(points.front().batch_size == 4);
  CHECK(points.front().gradient_accumulation == 4);
  CHECK(points[1].gradient_accumulation == 8);
  CHECK(points.back().learning_rate == 2e-5);
  for (const auto& p : points) CHECK(p.on_search_grid());

  auto back = QAGrid::from_json(grid.to_json());
  CHECK(back.size() == 12);
  CHECK_THROWS_AS(QAGrid::from_json({{"learning_rate", std::vector<double>{}}}), FormatError);
  CHECK_THROWS_AS(QATrainConfig::from_json({{"lr", 1}}), FormatError);
  auto cfg = QATrainConfig::from_json(smoke_config().to_json());
  CHECK(cfg.to_json() == smoke_config().to_json());
}

TEST_CASE("overfit smoke: 32 examples memorized within 4 epochs") {
  const auto start = std::chrono::steady_clock::now();
  auto data = tagged_items(32, 5);
  for (auto mode : {AugmentationMode::None, AugmentationMode::Relation, AugmentationMode::Category,
                    AugmentationMode::Both}) {
    auto trained = train_qa(data, data, smoke_config(), mode);
    CAPTURE(to_string(mode));
    CHECK(trained.dev.accuracy >= 0.9);
    CHECK(trained.fit.epochs.size() == 4);
  }
  auto clf = train_classifier(labeled(data), labeled(data), classifier_smoke_config());
  CHECK(clf.report.dev_accuracy >= 0.9);
  CHECK(seconds_since(start) < 600);
}

TEST_CASE("multiple-choice model properties") {
  auto train = tagged_items(32, 21);
  auto dev = tagged_items(24, 22, "dev");
  auto trained = train_qa(train, dev, smoke_config(), AugmentationMode::Relation);
  auto& model = trained.model;

  SUBCASE("accuracy equals the mean of the correctness vector") {
    std::size_t hits = 0;
    for (auto c : trained.dev.correctness) hits += c;
    CHECK(trained.dev.accuracy == static_cast<double>(hits) / static_cast<double>(dev.size()));
    CHECK(trained.fit.best_epoch >= 1);
    double best = 0;
    for (const auto& e : trained.fit.epochs) best = std::max(best, e.dev_accuracy);
    CHECK(trained.dev.accuracy == best);
  }
  SUBCASE("scores are permutation equivariant") {
    auto scores = model.score(dev);
    const std::array<std::array<int, 3>, 5> perms = {{{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (const auto& p : perms) {
      auto shuffled = dev;
      for (auto& t : shuffled) {
        auto a = t.example.answers;
        for (int k = 0; k < 3; ++k) t.example.answers[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(p[k])];
      }
      auto permuted = model.score(shuffled);
      for (std::size_t i = 0; i < dev.size(); ++i)
        for (int k = 0; k < 3; ++k)
          CHECK(permuted[i][static_cast<std::size_t>(k)] ==
                doctest::Approx(scores[i][static_cast<std::size_t>(p[k])]).epsilon(1e-5));
    }
  }
  SUBCASE("evaluation under another mode is refused") {
    CHECK_THROWS_AS(evaluate(model, dev, AugmentationMode::None), PreconditionError);
    CHECK_THROWS_AS(evaluate(model, dev, AugmentationMode::RandomRelation), PreconditionError);
  }
  SUBCASE("tag registration is closed once training started") {
    CHECK(model.training_started());
    CHECK_THROWS_AS(model.register_tag_tokens(1), PreconditionError);
  }
  SUBCASE("checkpoints reload to identical scores") {
    siqa::testing::TempDir dir;
    model.save(dir.path() / "ckpt");
    auto loaded = MultipleChoiceModel::load(dir.path() / "ckpt");
    CHECK(loaded.mode() == AugmentationMode::Relation);
    CHECK(loaded.vocab() == model.vocab());
    CHECK((loaded.score(dev) == model.score(dev)));
    CHECK_THROWS_AS(MultipleChoiceModel::load(dir.path()), Error);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  auto train = tagged_items(16, 31);
  auto dev = tagged_items(8, 32, "dev");
  auto cfg = smoke_config();
  cfg.dropout = 0.1;
  cfg.max_epochs = 2;
  auto a = train_qa(train, dev, cfg, AugmentationMode::Both);
  auto b = train_qa(train, dev, cfg, AugmentationMode::Both);
  CHECK(a.dev.predictions == b.dev.predictions);
  CHECK((a.model.score(dev) == b.model.score(dev)));
  cfg.seed = 12;
  auto c = train_qa(train, dev, cfg, AugmentationMode::Both);
  CHECK((c.model.score(dev) != a.model.score(dev)));
}

TEST_CASE("tag tokens extend the embedding table") {
  auto data = tagged_items(8, 41);
  std::vector<std::string> texts;
  for (const auto& t : data) texts.push_back(build_input(t, 0, AugmentationMode::None));
  auto bundle = load_encoder("tiny", texts, 3);
  const auto before = bundle.encoder->token_weight().clone();
  const auto old_rows = before.size(0);
  MultipleChoiceModel model(std::move(bundle), AugmentationMode::Both, 64);

  CHECK_THROWS_WITH_AS(model.forward(data), doctest::Contains("not in the vocabulary"), PreconditionError);
  CHECK(model.register_tag_tokens(9) == 14);
  CHECK(model.register_tag_tokens(9) == 0);
  const auto& after = model.net()->encoder->token_weight();
  REQUIRE(after.size(0) == old_rows + 14);
  CHECK(torch::equal(after.slice(0, 0, old_rows), before));
  auto fresh = after.slice(0, old_rows);
  auto mean = before.mean(0, true);
  CHECK((fresh - mean).abs().max().item<float>() < 0.2f);
  CHECK((fresh - mean).abs().max().item<float>() > 0.0f);
  model.begin_training();
  CHECK(model.vocab().frozen());
  CHECK(model.forward(data).sizes() == torch::IntArrayRef({8, 3}));
}

TEST_CASE("training errors") {
  auto data = tagged_items(8, 51);
  auto cfg = smoke_config();
  std::vector<TaggedExample> empty;
  CHECK_THROWS_AS(train_qa(empty, data, cfg, AugmentationMode::None), PreconditionError);

  auto untagged = data;
  untagged[3].relation.reset();
  CHECK_THROWS_WITH_AS(train_qa(untagged, data, cfg, AugmentationMode::Relation), doctest::Contains("syn:4"),
                       PreconditionError);

  cfg.learning_rate = 1e30;
  CHECK_THROWS_WITH_AS(train_qa(data, data, cfg, AugmentationMode::None), doctest::Contains("non-finite"),
                       TrainingError);

  cfg = smoke_config();
  cfg.encoder_name = "no-such-encoder";
  CHECK_THROWS_AS(train_qa(data, data, cfg, AugmentationMode::None), Error);
}

TEST_CASE("grid search") {
  auto train = tagged_items(12, 61);
  auto dev = tagged_items(8, 62, "dev");
  auto base = smoke_config();
  base.max_epochs = 1;

  SUBCASE("every trial persists its artifacts") {
    siqa::testing::TempDir dir;
    QAGrid grid{{1e-3, 5e-4}, {2}, {1}};
    auto result = grid_search(train, dev, AugmentationMode::Relation, grid, base, dir.path());
    REQUIRE(result.trials.size() == 2);
    CHECK(result.trials[0].config.learning_rate == 5e-4);  // ascending order
    for (const auto& t : result.trials) {
      CHECK(t.error.empty());
      CHECK(fs::is_regular_file(t.dir / "config.json"));
      CHECK(fs::is_regular_file(t.dir / "checkpoint" / "model.pt"));
      CHECK(io::read_lines(t.dir / "metrics.jsonl").size() == 1);
      CHECK(io::read_lines(t.dir / "dev_predictions.txt").size() == dev.size());
    }
    CHECK(fs::is_regular_file(dir.path() / "grid.json"));
    REQUIRE(result.model.has_value());
    CHECK(result.dev.accuracy == *result.trials[result.best_trial].dev_accuracy);
    for (const auto& t : result.trials) CHECK(*t.dev_accuracy <= result.dev.accuracy);
  }
  SUBCASE("a single point is returned as is") {
    QAGrid grid{{1e-3}, {2}, {1}};
    auto result = grid_search(train, dev, AugmentationMode::None, grid, base);
    CHECK(result.best_config.learning_rate == 1e-3);
    CHECK(result.trials.size() == 1);
  }
  SUBCASE("ties go to the lower learning rate, then the smaller batch, then the smaller accumulation") {
    // Steps this small leave every trial with the initial model's accuracy.
    QAGrid grid{{2e-12, 1e-12}, {4, 2}, {2, 1}};
    auto result = grid_search(train, dev, AugmentationMode::None, grid, base);
    REQUIRE(result.trials.size() == 8);
    for (const auto& t : result.trials) CHECK(*t.dev_accuracy == result.dev.accuracy);
    CHECK(result.best_config.learning_rate == 1e-12);
    CHECK(result.best_config.batch_size == 2);
    CHECK(result.best_config.gradient_accumulation == 1);
  }
  SUBCASE("a failing trial poisons only itself") {
    siqa::testing::TempDir dir;
    QAGrid grid{{1e-3, 1e30}, {2}, {1}};
    auto result = grid_search(train, dev, AugmentationMode::None, grid, base, dir.path());
    REQUIRE(result.trials.size() == 2);
    CHECK(result.trials[1].error.find("non-finite") != std::string::npos);
    CHECK_FALSE(result.trials[1].dev_accuracy.has_value());
    CHECK(fs::is_regular_file(result.trials[1].dir / "error.txt"));
    CHECK(result.best_config.learning_rate == 1e-3);
  }
  SUBCASE("all trials failing is an error") {
    QAGrid grid{{1e30}, {2}, {1}};
    CHECK_THROWS_AS(grid_search(train, dev, AugmentationMode::None, grid, base), TrainingError);
  }
}

TEST_CASE("category classifier") {
  auto train = tagged_items(160, 71);
  auto dev = tagged_items(40, 72, "dev");
  auto trained = train_classifier(labeled(train), labeled(dev), classifier_smoke_config());
  auto& model = trained.model;
  const auto& report = trained.report;

  SUBCASE("confusion matrix is consistent with the dev set") {
    std::map<KnowledgeCategory, std::size_t> counts;
    for (const auto& t : dev) ++counts[*t.category];
    std::size_t trace = 0, total = 0;
    for (std::size_t g = 0; g < 4; ++g) {
      std::size_t row = 0;
      for (std::size_t p = 0; p < 4; ++p) row += report.confusion[g][p];
      CHECK(row == counts[kAllCategories[g]]);
      trace += report.confusion[g][g];
      total += row;
    }
    CHECK(report.dev_accuracy == static_cast<double>(trace) / static_cast<double>(total));
    CHECK(report.best_epoch >= 1);
    CHECK(report.to_json()["confusion"].size() == 4);
  }
  SUBCASE("predictions keep order and existing relation tags") {
    auto out = predict_categories(model, std::span<const TaggedExample>(dev));
    REQUIRE(out.examples.size() == dev.size());
    for (std::size_t i = 0; i < dev.size(); ++i) {
      CHECK(out.examples[i].example == dev[i].example);
      CHECK(out.examples[i].relation == dev[i].relation);
      CHECK(out.examples[i].category_source == CategorySource::Predicted);
    }
    std::vector<QAExample> none;
    CHECK(predict_categories(model, std::span<const QAExample>(none)).examples.empty());
    auto again = predict_categories(model, std::span<const TaggedExample>(dev), 7);
    CHECK((again.examples == out.examples));
  }
  SUBCASE("scenario text decides the category") {
    auto kendall = siqa::testing::reference_examples()[0].example;
    std::vector<QAExample> one = {kendall};
    CHECK(model.predict(one)[0] == KnowledgeCategory::FeelingsAndCharacteristics);
  }
  SUBCASE("checkpoint round trip") {
    siqa::testing::TempDir dir;
    model.save(dir.path() / "clf");
    auto loaded = CategoryClassifier::load(dir.path() / "clf");
    std::vector<QAExample> plain;
    for (const auto& t : dev) plain.push_back(t.example);
    CHECK((loaded.predict(plain) == model.predict(plain)));
    CHECK_THROWS_AS(MultipleChoiceModel::load(dir.path() / "clf"), Error);
  }
  SUBCASE("long contexts are cut from the left and counted") {
    auto bundle = load_encoder(encoder_dir().string(), {}, 1);
    CategoryClassifier small(std::move(bundle), 14);
    std::vector<QAExample> plain;
    for (const auto& t : dev) plain.push_back(t.example);
    auto out = predict_categories(small, std::span<const QAExample>(plain));
    CHECK(out.truncated == plain.size());
    CHECK(out.examples.size() == plain.size());
  }
  SUBCASE("empty inputs are rejected") {
    std::vector<LabeledExample> empty;
    CHECK_THROWS_AS(train_classifier(empty, labeled(dev), classifier_smoke_config()), PreconditionError);
    CHECK_THROWS_AS(train_classifier(labeled(dev), empty, classifier_smoke_config()), PreconditionError);
  }
}

TEST_CASE("classifier input leaves answers out") {
  auto taylor = siqa::testing::reference_examples()[3].example;
  CHECK(encode_for_classification(taylor) ==
        "Taylor taught math in the schools after studying to be a teacher for 4 years. [SEP] What does Taylor need to "
        "do before this?");
  CHECK(encode_for_classification(taylor) == encode_for_classification(taylor));
}

TEST_CASE("sequence encoding truncates the context from the left") {
  Vocabulary v = Vocabulary::build(std::vector<std::string>{"one two three four five six what now"});
  InputParts parts{"one two three four five six", "[SEP] what now"};
  auto full = encode_sequence(v, parts, 64);
  CHECK_FALSE(full.truncated);
  CHECK(full.ids.size() == 11);
  auto cut = encode_sequence(v, parts, 8);
  CHECK(cut.truncated);
  REQUIRE(cut.ids.size() == 8);
  CHECK(v.token(cut.ids[1]) == "four");
  CHECK(v.token(cut.ids.back() - 0) == "</s>");
  CHECK_THROWS_AS(encode_sequence(v, parts, 4), PreconditionError);
}
