#include "siqa/taxonomy_classifier.hpp"

#include <algorithm>

#include "siqa/error.hpp"
#include "siqa/io.hpp"

namespace siqa::ml {

namespace fs = std::filesystem;

namespace {

constexpr const char* kKind = "category-classifier";

std::size_t category_index(KnowledgeCategory c) { return static_cast<std::size_t>(c); }

void reject_unknown_keys(const nlohmann::ordered_json& j, std::initializer_list<const char*> known,
                         const std::string& what) {
  for (const auto& [key, _] : j.items())
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end())
      throw FormatError(what + ": unknown key '" + key + "'");
}

}  // namespace

void ClassifierConfig::validate() const {
  if (!(learning_rate > 0)) throw PreconditionError("classifier learning_rate must be positive");
  if (batch_size == 0) throw PreconditionError("classifier batch_size must be positive");
  if (gradient_accumulation == 0) throw PreconditionError("classifier gradient_accumulation must be positive");
  if (max_epochs <= 0) throw PreconditionError("classifier max_epochs must be positive");
  if (max_sequence_length < 8) throw PreconditionError("classifier max_sequence_length must be at least 8");
}

nlohmann::ordered_json ClassifierConfig::to_json() const {
  nlohmann::ordered_json j = {{"encoder_name", encoder_name},
                              {"learning_rate", learning_rate},
                              {"batch_size", batch_size},
                              {"gradient_accumulation", gradient_accumulation},
                              {"max_epochs", max_epochs},
                              {"max_sequence_length", max_sequence_length},
                              {"seed", seed},
                              {"weight_decay", weight_decay}};
  j["dropout"] = dropout ? nlohmann::ordered_json(*dropout) : nlohmann::ordered_json(nullptr);
  return j;
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::ordered_json& j, ClassifierConfig c) {
  reject_unknown_keys(j,
                      {"encoder_name", "learning_rate", "batch_size", "gradient_accumulation", "max_epochs",
                       "max_sequence_length", "seed", "weight_decay", "dropout"},
                      "classifier config");
  if (j.contains("encoder_name")) c.encoder_name = j["encoder_name"].get<std::string>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("gradient_accumulation")) c.gradient_accumulation = j["gradient_accumulation"].get<std::size_t>();
  if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("max_sequence_length")) c.max_sequence_length = j["max_sequence_length"].get<std::size_t>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("dropout"))
    c.dropout = j["dropout"].is_null() ? std::nullopt : std::optional<double>(j["dropout"].get<double>());
  return c;
}

nlohmann::ordered_json ClassifierReport::to_json() const {
  nlohmann::ordered_json j;
  j["dev_accuracy"] = dev_accuracy;
  j["best_epoch"] = best_epoch;
  std::vector<std::string> names;
  for (auto c : kAllCategories) names.emplace_back(to_string(c));
  j["confusion_order"] = names;
  j["confusion"] = confusion;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : epochs) j["epochs"].push_back(e.to_json());
  j["config"] = config.to_json();
  return j;
}

InputParts classification_parts(const QAExample& example) {
  return InputParts{example.context, std::string(Vocabulary::kSepToken) + " " + example.question};
}

std::string encode_for_classification(const QAExample& example) { return classification_parts(example).joined(); }

CategoryClassifier::CategoryClassifier(EncoderBundle bundle, std::size_t max_sequence_length)
    : vocab_(std::move(bundle.vocab)),
      max_len_(std::min(max_sequence_length, static_cast<std::size_t>(bundle.encoder->config().max_positions))) {
  net_ = PooledHead(bundle.encoder, static_cast<std::int64_t>(kAllCategories.size()));
  net_->eval();
}

torch::Tensor CategoryClassifier::logits(std::span<const QAExample> examples, std::size_t* truncated) {
  std::vector<std::vector<std::int64_t>> seqs;
  seqs.reserve(examples.size());
  for (const auto& e : examples) {
    auto enc = encode_sequence(vocab_, classification_parts(e), max_len_);
    if (enc.truncated && truncated) ++*truncated;
    seqs.push_back(std::move(enc.ids));
  }
  auto batch = collate(seqs);
  return net_->forward(batch.ids, batch.attention);
}

std::vector<KnowledgeCategory> CategoryClassifier::predict(std::span<const QAExample> examples) {
  last_truncated_ = 0;
  std::vector<KnowledgeCategory> out;
  out.reserve(examples.size());
  if (examples.empty()) return out;
  torch::NoGradGuard guard;
  const bool was_training = net_->is_training();
  net_->eval();
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < examples.size(); start += kChunk) {
    auto chunk = examples.subspan(start, std::min(kChunk, examples.size() - start));
    auto best = logits(chunk, &last_truncated_).argmax(1);
    auto acc = best.accessor<std::int64_t, 1>();
    for (std::int64_t i = 0; i < acc.size(0); ++i) out.push_back(kAllCategories[static_cast<std::size_t>(acc[i])]);
  }
  if (was_training) net_->train();
  return out;
}

void CategoryClassifier::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::ordered_json meta = {{"kind", kKind},
                                 {"max_sequence_length", max_len_},
                                 {"encoder", net_->encoder->config().to_json()}};
  io::write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
  vocab_.save(dir / "vocab.json");
  torch::save(net_, (dir / "model.pt").string());
}

CategoryClassifier CategoryClassifier::load(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "model.json")) throw Error("no classifier checkpoint in " + dir.string());
  auto meta = nlohmann::ordered_json::parse(io::read_file(dir / "model.json"));
  if (meta.value("kind", "") != kKind)
    throw Error(dir.string() + " holds a '" + meta.value("kind", "") + "' checkpoint, not a category classifier");
  EncoderBundle b;
  b.vocab = Vocabulary::load(dir / "vocab.json");
  b.encoder = TextEncoder(EncoderConfig::from_json(meta.at("encoder")), static_cast<std::int64_t>(b.vocab.size()));
  CategoryClassifier model(std::move(b), meta.at("max_sequence_length").get<std::size_t>());
  torch::load(model.net_, (dir / "model.pt").string());
  model.net_->eval();
  return model;
}

Confusion confusion_matrix(std::span<const KnowledgeCategory> gold, std::span<const KnowledgeCategory> predicted) {
  if (gold.size() != predicted.size()) throw PreconditionError("confusion_matrix: length mismatch");
  Confusion m{};
  for (std::size_t i = 0; i < gold.size(); ++i) ++m[category_index(gold[i])][category_index(predicted[i])];
  return m;
}

ClassifierTraining train_classifier(std::span<const LabeledExample> train, std::span<const LabeledExample> dev,
                                    const ClassifierConfig& config) {
  config.validate();
  if (train.empty()) throw PreconditionError("train_classifier: training set is empty");
  if (dev.empty()) throw PreconditionError("train_classifier: dev set is empty");

  std::vector<std::string> texts;
  for (const auto& [ex, _] : train) texts.push_back(encode_for_classification(ex));
  auto bundle = load_encoder(config.encoder_name, texts, config.seed, config.dropout);
  bundle.vocab.freeze();
  seed_runtime(derive_seed(config.seed, "head"));
  CategoryClassifier model(std::move(bundle), config.max_sequence_length);

  std::vector<std::vector<std::int64_t>> seqs;
  std::vector<std::int64_t> labels;
  for (const auto& [ex, cat] : train) {
    seqs.push_back(encode_sequence(model.vocab(), classification_parts(ex), model.max_sequence_length()).ids);
    labels.push_back(static_cast<std::int64_t>(category_index(cat)));
  }
  std::vector<QAExample> dev_examples;
  std::vector<KnowledgeCategory> dev_gold;
  for (const auto& [ex, cat] : dev) {
    dev_examples.push_back(ex);
    dev_gold.push_back(cat);
  }

  auto batch_loss = [&](std::span<const std::size_t> idx) {
    std::vector<std::vector<std::int64_t>> chunk;
    std::vector<std::int64_t> y;
    for (auto i : idx) {
      chunk.push_back(seqs[i]);
      y.push_back(labels[i]);
    }
    auto batch = collate(chunk);
    auto out = model.net()->forward(batch.ids, batch.attention);
    return torch::nn::functional::cross_entropy(out, torch::tensor(y, torch::kLong));
  };
  auto dev_accuracy = [&] {
    auto pred = model.predict(dev_examples);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == dev_gold[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
  };

  FitOptions options;
  options.what = "category classifier";
  options.learning_rate = config.learning_rate;
  options.weight_decay = config.weight_decay;
  options.batch_size = config.batch_size;
  options.gradient_accumulation = config.gradient_accumulation;
  options.max_epochs = config.max_epochs;
  options.seed = config.seed;
  auto fitted = fit(*model.net(), seqs.size(), options, batch_loss, dev_accuracy);

  ClassifierReport report;
  report.config = config;
  report.best_epoch = fitted.best_epoch;
  report.epochs = fitted.epochs;
  auto pred = model.predict(dev_examples);
  report.confusion = confusion_matrix(dev_gold, pred);
  std::size_t trace = 0;
  for (std::size_t k = 0; k < 4; ++k) trace += report.confusion[k][k];
  report.dev_accuracy = static_cast<double>(trace) / static_cast<double>(dev_gold.size());
  return ClassifierTraining{std::move(model), std::move(report)};
}

CategoryPredictions predict_categories(CategoryClassifier& model, std::span<const TaggedExample> examples,
                                       std::size_t batch_size) {
  CategoryPredictions out;
  out.examples.assign(examples.begin(), examples.end());
  std::vector<QAExample> plain;
  for (const auto& t : examples) plain.push_back(t.example);
  for (std::size_t start = 0; start < plain.size(); start += std::max<std::size_t>(batch_size, 1)) {
    auto chunk = std::span<const QAExample>(plain).subspan(start, std::min(batch_size, plain.size() - start));
    auto labels = model.predict(chunk);
    out.truncated += model.last_truncated();
    for (std::size_t i = 0; i < labels.size(); ++i)
      out.examples[start + i].set_category(labels[i], CategorySource::Predicted);
  }
  return out;
}

CategoryPredictions predict_categories(CategoryClassifier& model, std::span<const QAExample> examples,
                                       std::size_t batch_size) {
  auto tagged = as_tagged(examples);
  return predict_categories(model, tagged, batch_size);
}

}  // namespace siqa::ml
