#include "siqa/qa_trainer.hpp"

#include <algorithm>
#include <cstdio>

#include "siqa/error.hpp"
#include "siqa/io.hpp"

namespace siqa::ml {

namespace fs = std::filesystem;

namespace {

constexpr const char* kKind = "multiple-choice";
constexpr std::size_t kScoreChunk = 32;

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

template <typename T>
bool contains(std::initializer_list<T> values, T x) {
  return std::find(values.begin(), values.end(), x) != values.end();
}

}  // namespace

bool QATrainConfig::on_search_grid() const {
  return contains({1e-5, 2e-5}, learning_rate) && contains<std::size_t>({4, 8}, batch_size) &&
         contains<std::size_t>({4, 8, 16}, gradient_accumulation) && max_epochs >= 1 && max_epochs <= 4;
}

void QATrainConfig::validate() const {
  if (!(learning_rate > 0)) throw PreconditionError("learning_rate must be positive");
  if (batch_size == 0) throw PreconditionError("batch_size must be positive");
  if (gradient_accumulation == 0) throw PreconditionError("gradient_accumulation must be positive");
  if (max_epochs <= 0) throw PreconditionError("max_epochs must be positive");
  if (max_sequence_length < 8) throw PreconditionError("max_sequence_length must be at least 8");
  if (!(max_grad_norm > 0)) throw PreconditionError("max_grad_norm must be positive");
}

nlohmann::ordered_json QATrainConfig::to_json() const {
  nlohmann::ordered_json j = {{"encoder_name", encoder_name},
                              {"learning_rate", learning_rate},
                              {"batch_size", batch_size},
                              {"gradient_accumulation", gradient_accumulation},
                              {"max_epochs", max_epochs},
                              {"seed", seed},
                              {"max_sequence_length", max_sequence_length},
                              {"weight_decay", weight_decay},
                              {"max_grad_norm", max_grad_norm}};
  j["dropout"] = dropout ? nlohmann::ordered_json(*dropout) : nlohmann::ordered_json(nullptr);
  j["optimizer"] = "adamw";
  j["warmup_steps"] = 0;
  j["on_search_grid"] = on_search_grid();
  return j;
}

QATrainConfig QATrainConfig::from_json(const nlohmann::ordered_json& j, QATrainConfig c) {
  static const std::vector<std::string> known = {
      "encoder_name", "learning_rate", "batch_size", "gradient_accumulation", "max_epochs", "seed",
      "max_sequence_length", "weight_decay", "max_grad_norm", "dropout", "optimizer", "warmup_steps",
      "on_search_grid"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw FormatError("training config: unknown key '" + key + "'");
  if (j.contains("encoder_name")) c.encoder_name = j["encoder_name"].get<std::string>();
  if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("gradient_accumulation")) c.gradient_accumulation = j["gradient_accumulation"].get<std::size_t>();
  if (j.contains("max_epochs")) c.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("max_sequence_length")) c.max_sequence_length = j["max_sequence_length"].get<std::size_t>();
  if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
  if (j.contains("max_grad_norm")) c.max_grad_norm = j["max_grad_norm"].get<double>();
  if (j.contains("dropout"))
    c.dropout = j["dropout"].is_null() ? std::nullopt : std::optional<double>(j["dropout"].get<double>());
  if (j.contains("optimizer") && j["optimizer"] != "adamw") throw FormatError("only the adamw optimizer is supported");
  if (j.contains("warmup_steps") && j["warmup_steps"] != 0) throw FormatError("warmup is not supported");
  return c;
}

QATrainConfig default_config(AugmentationMode mode) {
  QATrainConfig c;
  c.learning_rate = 1e-5;
  c.batch_size = 8;
  switch (mode) {
    case AugmentationMode::None:
    case AugmentationMode::Relation:
    case AugmentationMode::RandomRelation: c.gradient_accumulation = 8; break;
    case AugmentationMode::Category:
    case AugmentationMode::RandomCategory: c.gradient_accumulation = 4; break;
    case AugmentationMode::Both: c.gradient_accumulation = 16; break;
  }
  return c;
}

std::vector<QATrainConfig> QAGrid::points(const QATrainConfig& base) const {
  auto lrs = learning_rates;
  auto bss = batch_sizes;
  auto gas = accumulations;
  std::sort(lrs.begin(), lrs.end());
  std::sort(bss.begin(), bss.end());
  std::sort(gas.begin(), gas.end());
  std::vector<QATrainConfig> out;
  for (auto lr : lrs)
    for (auto bs : bss)
      for (auto ga : gas) {
        auto c = base;
        c.learning_rate = lr;
        c.batch_size = bs;
        c.gradient_accumulation = ga;
        out.push_back(c);
      }
  return out;
}

nlohmann::ordered_json QAGrid::to_json() const {
  return {{"learning_rate", learning_rates}, {"batch_size", batch_sizes}, {"gradient_accumulation", accumulations}};
}

QAGrid QAGrid::from_json(const nlohmann::ordered_json& j) {
  QAGrid g;
  for (const auto& [key, _] : j.items())
    if (key != "learning_rate" && key != "batch_size" && key != "gradient_accumulation")
      throw FormatError("grid: unknown key '" + key + "'");
  if (j.contains("learning_rate")) g.learning_rates = j["learning_rate"].get<std::vector<double>>();
  if (j.contains("batch_size")) g.batch_sizes = j["batch_size"].get<std::vector<std::size_t>>();
  if (j.contains("gradient_accumulation")) g.accumulations = j["gradient_accumulation"].get<std::vector<std::size_t>>();
  if (g.size() == 0) throw FormatError("grid has no points");
  return g;
}

MultipleChoiceModel::MultipleChoiceModel(EncoderBundle bundle, AugmentationMode mode, std::size_t max_sequence_length)
    : vocab_(std::move(bundle.vocab)),
      mode_(mode),
      max_len_(std::min(max_sequence_length, static_cast<std::size_t>(bundle.encoder->config().max_positions))) {
  net_ = PooledHead(bundle.encoder, 1);
  net_->eval();
}

std::size_t MultipleChoiceModel::register_tag_tokens(std::uint64_t seed) {
  if (training_started_) throw PreconditionError("tag tokens must be registered before training starts");
  const auto added = siqa::register_tag_tokens(vocab_, mode_);
  net_->encoder->resize_token_embeddings(static_cast<std::int64_t>(vocab_.size()), seed);
  return added;
}

void MultipleChoiceModel::require_tag_tokens() const {
  auto check = [&](const std::string& token) {
    if (!vocab_.is_special(token))
      throw PreconditionError("tag token " + token + " is not in the vocabulary; register tag tokens for mode " +
                              std::string(to_string(mode_)) + " before training");
  };
  if (uses_relation(mode_))
    for (auto t : kAllRelationTags) check(tag_token(t));
  if (uses_category(mode_))
    for (auto c : kAllCategories) check(label_token(c));
}

void MultipleChoiceModel::begin_training() {
  require_tag_tokens();
  vocab_.freeze();
  training_started_ = true;
}

torch::Tensor MultipleChoiceModel::forward(std::span<const TaggedExample> examples) {
  require_tag_tokens();
  std::vector<std::vector<std::int64_t>> seqs;
  seqs.reserve(examples.size() * 3);
  for (const auto& ex : examples) {
    bool cut = false;
    for (int k = 0; k < 3; ++k) {
      auto enc = encode_sequence(vocab_, build_input_parts(ex, k, mode_), max_len_);
      cut = cut || enc.truncated;
      seqs.push_back(std::move(enc.ids));
    }
    truncated_ += cut;
  }
  auto batch = collate(seqs);
  return net_->forward(batch.ids, batch.attention).view({static_cast<std::int64_t>(examples.size()), 3});
}

std::vector<std::array<float, 3>> MultipleChoiceModel::score(std::span<const TaggedExample> examples) {
  std::vector<std::array<float, 3>> out;
  out.reserve(examples.size());
  torch::NoGradGuard guard;
  const bool was_training = net_->is_training();
  net_->eval();
  for (std::size_t start = 0; start < examples.size(); start += kScoreChunk) {
    auto s = forward(examples.subspan(start, std::min(kScoreChunk, examples.size() - start))).contiguous();
    auto a = s.accessor<float, 2>();
    for (std::int64_t i = 0; i < a.size(0); ++i) out.push_back({a[i][0], a[i][1], a[i][2]});
  }
  if (was_training) net_->train();
  return out;
}

void MultipleChoiceModel::save(const fs::path& dir) const {
  fs::create_directories(dir);
  nlohmann::ordered_json meta = {{"kind", kKind},
                                 {"mode", std::string(to_string(mode_))},
                                 {"max_sequence_length", max_len_},
                                 {"encoder", net_->encoder->config().to_json()}};
  io::write_file_atomic(dir / "model.json", meta.dump(2) + "\n");
  vocab_.save(dir / "vocab.json");
  torch::save(net_, (dir / "model.pt").string());
}

MultipleChoiceModel MultipleChoiceModel::load(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "model.json")) throw Error("no multiple-choice checkpoint in " + dir.string());
  auto meta = nlohmann::ordered_json::parse(io::read_file(dir / "model.json"));
  if (meta.value("kind", "") != kKind)
    throw Error(dir.string() + " holds a '" + meta.value("kind", "") + "' checkpoint, not a multiple-choice model");
  auto mode = parse_mode(meta.at("mode").get<std::string>());
  if (!mode) throw FormatError(dir.string() + "/model.json: unknown mode");
  EncoderBundle b;
  b.vocab = Vocabulary::load(dir / "vocab.json");
  b.encoder = TextEncoder(EncoderConfig::from_json(meta.at("encoder")), static_cast<std::int64_t>(b.vocab.size()));
  MultipleChoiceModel model(std::move(b), *mode, meta.at("max_sequence_length").get<std::size_t>());
  torch::load(model.net_, (dir / "model.pt").string());
  model.net_->eval();
  model.vocab_.freeze();
  model.training_started_ = true;
  return model;
}

QATraining train_qa(std::span<const TaggedExample> train, std::span<const TaggedExample> dev,
                    const QATrainConfig& config, AugmentationMode mode,
                    const std::function<void(const EpochMetrics&)>& on_epoch) {
  config.validate();
  if (train.empty()) throw PreconditionError("train_qa: training set is empty");
  if (dev.empty()) throw PreconditionError("train_qa: dev set is empty");
  for (auto split : {train, dev})
    for (const auto& t : split) {
      check_mode_preconditions(t, mode);
      if (!t.example.gold_index) throw PreconditionError("example '" + t.example.id + "' has no gold label");
    }

  std::vector<std::string> texts;
  for (const auto& t : train)
    for (int k = 0; k < 3; ++k) texts.push_back(build_input(t, k, AugmentationMode::None));
  auto bundle = load_encoder(config.encoder_name, texts, config.seed, config.dropout);
  seed_runtime(derive_seed(config.seed, "head"));
  MultipleChoiceModel model(std::move(bundle), mode, config.max_sequence_length);
  model.register_tag_tokens(derive_seed(config.seed, "tag-embeddings"));
  model.begin_training();

  auto batch_loss = [&](std::span<const std::size_t> idx) {
    std::vector<TaggedExample> chunk;
    std::vector<std::int64_t> gold;
    for (auto i : idx) {
      chunk.push_back(train[i]);
      gold.push_back(*train[i].example.gold_index);
    }
    return torch::nn::functional::cross_entropy(model.forward(chunk), torch::tensor(gold, torch::kLong));
  };
  auto dev_accuracy = [&] { return evaluate(model, dev, mode).accuracy; };

  FitOptions options;
  options.what = "multiple-choice training (" + std::string(to_string(mode)) + ", lr " + number(config.learning_rate) +
                 ", batch " + std::to_string(config.batch_size) + ", accumulation " +
                 std::to_string(config.gradient_accumulation) + ")";
  options.learning_rate = config.learning_rate;
  options.weight_decay = config.weight_decay;
  options.max_grad_norm = config.max_grad_norm;
  options.batch_size = config.batch_size;
  options.gradient_accumulation = config.gradient_accumulation;
  options.max_epochs = config.max_epochs;
  options.seed = config.seed;
  auto fitted = fit(*model.net(), train.size(), options, batch_loss, dev_accuracy, on_epoch);

  auto result = evaluate(model, dev, mode, std::string(to_string(mode)));
  result.config_json = config.to_json().dump();
  return QATraining{std::move(model), std::move(result), std::move(fitted)};
}

std::string trial_name(std::size_t index, const QATrainConfig& config) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "trial-%02zu_lr%g_bs%zu_ga%zu", index + 1, config.learning_rate, config.batch_size,
                config.gradient_accumulation);
  return buf;
}

GridResult grid_search(std::span<const TaggedExample> train, std::span<const TaggedExample> dev,
                       AugmentationMode mode, const QAGrid& grid, const QATrainConfig& base,
                       const std::optional<fs::path>& out_dir,
                       const std::function<void(std::size_t, const TrialRecord&)>& on_trial) {
  const auto points = grid.points(base);
  if (points.empty()) throw PreconditionError("grid_search: the grid has no points");
  GridResult result;
  std::optional<double> best;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& config = points[i];
    TrialRecord record{config, std::nullopt, {}, {}, 0};
    if (out_dir) {
      record.dir = *out_dir / trial_name(i, config);
      fs::create_directories(record.dir);
      auto cj = config.to_json();
      cj["mode"] = std::string(to_string(mode));
      io::write_file_atomic(record.dir / "config.json", cj.dump(2) + "\n");
    }
    std::string metrics;
    auto on_epoch = [&](const EpochMetrics& m) {
      metrics += m.to_json().dump() + "\n";
      if (out_dir) io::write_file_atomic(record.dir / "metrics.jsonl", metrics);
    };
    try {
      auto trained = train_qa(train, dev, config, mode, on_epoch);
      record.dev_accuracy = trained.dev.accuracy;
      record.best_epoch = trained.fit.best_epoch;
      trained.dev.label = out_dir ? record.dir.filename().string() : trial_name(i, config);
      if (out_dir) {
        trained.model.save(record.dir / "checkpoint");
        trained.dev.save(record.dir / "dev_result.json");
        write_predictions(record.dir / "dev_predictions.txt", trained.dev.predictions);
      }
      if (!best || trained.dev.accuracy > *best) {
        best = trained.dev.accuracy;
        result.best_config = config;
        result.best_trial = i;
        result.dev = std::move(trained.dev);
        result.model.emplace(std::move(trained.model));
      }
    } catch (const std::exception& e) {
      record.error = e.what();
      if (out_dir) io::write_file_atomic(record.dir / "error.txt", record.error + "\n");
    }
    if (on_trial) on_trial(i, record);
    result.trials.push_back(std::move(record));
  }
  if (!best) {
    std::string why;
    for (const auto& t : result.trials) why += "\n  " + trial_name(&t - result.trials.data(), t.config) + ": " + t.error;
    throw TrainingError("grid_search: every trial failed" + why);
  }
  if (out_dir) {
    nlohmann::ordered_json summary;
    summary["mode"] = std::string(to_string(mode));
    summary["grid"] = grid.to_json();
    summary["best_trial"] = trial_name(result.best_trial, result.best_config);
    summary["best_config"] = result.best_config.to_json();
    summary["best_dev_accuracy"] = *best;
    for (std::size_t i = 0; i < result.trials.size(); ++i) {
      const auto& t = result.trials[i];
      nlohmann::ordered_json tj = {{"name", trial_name(i, t.config)},
                                   {"learning_rate", t.config.learning_rate},
                                   {"batch_size", t.config.batch_size},
                                   {"gradient_accumulation", t.config.gradient_accumulation}};
      tj["dev_accuracy"] = t.dev_accuracy ? nlohmann::ordered_json(*t.dev_accuracy) : nlohmann::ordered_json(nullptr);
      tj["best_epoch"] = t.best_epoch;
      if (!t.error.empty()) tj["error"] = t.error;
      summary["trials"].push_back(tj);
    }
    io::write_file_atomic(*out_dir / "grid.json", summary.dump(2) + "\n");
  }
  return result;
}

}  // namespace siqa::ml
