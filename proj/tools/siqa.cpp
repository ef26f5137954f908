// siqa: command-line pipeline for typed social-commonsense QA.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "siqa/analysis.hpp"
#include "siqa/corpus.hpp"
#include "siqa/encoder.hpp"
#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/manifest.hpp"
#include "siqa/qa_trainer.hpp"
#include "siqa/relation_tagger.hpp"
#include "siqa/taxonomy_classifier.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace siqa;

namespace {

constexpr const char* kDataRootEnv = "SIQA_DATA_ROOT";

/// Relative paths that do not exist here are looked up under the data root.
fs::path resolve(const fs::path& p) {
  if (p.empty() || p.is_absolute() || fs::exists(p)) return p;
  if (const char* root = std::getenv(kDataRootEnv); root && *root) {
    auto candidate = fs::path(root) / p;
    if (fs::exists(candidate)) return candidate;
  }
  return p;
}

fs::path require_input(const fs::path& p, const std::string& what) {
  auto r = resolve(p);
  if (!fs::exists(r))
    throw Error(what + " not found: " + p.string() +
                (p.is_absolute() ? "" : std::string(" (also looked under $") + kDataRootEnv + ")"));
  return r;
}

json read_config_file(const std::optional<std::string>& path) {
  if (!path) return json::object();
  auto p = require_input(*path, "config file");
  try {
    auto j = json::parse(io::read_file(p));
    if (!j.is_object()) throw FormatError(p.string() + ": config must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

/// Removes and returns a key from a config object.
std::optional<json> take(json& j, const std::string& key) {
  if (!j.contains(key)) return std::nullopt;
  json v = j[key];
  j.erase(key);
  return v;
}

/// Manifest bookkeeping, up-to-date checks and staged output for one command.
class Run {
 public:
  Run(std::string command, fs::path out, std::uint64_t seed, bool force) : out_(std::move(out)), force_(force) {
    if (out_.empty()) throw PreconditionError("--out is required");
    manifest_.command = std::move(command);
    manifest_.seed = seed;
  }

  fs::path input(const fs::path& p, const std::string& what) {
    auto r = require_input(p, what);
    if (fs::is_directory(r)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(r))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) manifest_.record_input(f);
    } else {
      manifest_.record_input(r);
    }
    return r;
  }

  json& config() { return manifest_.config; }
  json& extra() { return manifest_.extra; }

  /// True when out already holds a finished run with the same fingerprint.
  bool up_to_date() const {
    if (force_) return false;
    auto previous = RunManifest::read(out_);
    return previous && !previous->finished_at.empty() && previous->fingerprint() == manifest_.fingerprint();
  }

  const fs::path& dir() {
    if (!stage_) {
      manifest_.started_at = utc_timestamp();
      stage_.emplace(out_);
    }
    return stage_->path();
  }

  fs::path output(const std::string& relative) {
    manifest_.outputs.push_back(relative);
    auto p = dir() / relative;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    return p;
  }

  void finish() {
    dir();
    manifest_.finished_at = utc_timestamp();
    manifest_.write(stage_->path());
    stage_->commit();
    std::cout << "wrote " << out_.string() << " (fingerprint " << manifest_.fingerprint().substr(0, 12) << ")\n";
  }

  const fs::path& out() const { return out_; }

 private:
  fs::path out_;
  bool force_;
  RunManifest manifest_;
  std::optional<StagedDirectory> stage_;
};

bool skip_if_current(Run& run) {
  if (!run.up_to_date()) return false;
  std::cout << run.out().string() << " is up to date; nothing to do (use --force to rerun)\n";
  return true;
}

/// Loads a release or tagged file, applying a label sidecar given
/// explicitly or found next to the data as "<stem>-labels.lst".
std::vector<TaggedExample> load_data(Run& run, const fs::path& data, const std::optional<std::string>& labels) {
  auto path = run.input(data, "data file");
  auto examples = load_tagged(path);
  std::optional<fs::path> sidecar;
  if (labels) {
    sidecar = run.input(*labels, "label file");
  } else {
    auto guess = path.parent_path() / (path.stem().string() + "-labels.lst");
    if (fs::exists(guess)) sidecar = run.input(guess, "label file");
  }
  if (sidecar) apply_label_file(examples, *sidecar);
  return examples;
}

AugmentationMode mode_from(const std::optional<std::string>& flag, json& config, AugmentationMode fallback) {
  std::optional<std::string> name = flag;
  if (auto v = take(config, "mode"); v && !name) name = v->get<std::string>();
  if (!name) return fallback;
  auto m = parse_mode(*name);
  if (!m)
    throw PreconditionError("unknown mode '" + *name +
                            "' (expected none, relation, category, both, random-relation or random-category)");
  return *m;
}

struct TrainFlags {
  std::optional<std::string> encoder;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> grad_accum;
  std::optional<int> epochs;
  std::optional<std::size_t> max_len;
  std::optional<double> dropout;
  std::optional<std::string> grid_file;
  bool single = false;

  void add(CLI::App* app, bool with_grid) {
    app->add_option("--encoder", encoder, "Encoder preset (tiny, small) or pretrained encoder directory");
    app->add_option("--lr", lr, "Learning rate");
    app->add_option("--batch-size", batch_size, "Examples per step");
    app->add_option("--grad-accum", grad_accum, "Gradient accumulation steps");
    app->add_option("--epochs", epochs, "Maximum epochs");
    app->add_option("--max-len", max_len, "Maximum sequence length in tokens");
    app->add_option("--dropout", dropout, "Dropout override");
    if (with_grid) {
      app->add_option("--grid", grid_file, "JSON grid with learning_rate, batch_size, gradient_accumulation lists");
      app->add_flag("--single", single, "Train only the configured point instead of the grid");
    }
  }
};

ml::QATrainConfig qa_config(AugmentationMode mode, json& file, const TrainFlags& f, std::uint64_t seed) {
  auto c = ml::QATrainConfig::from_json(file, ml::default_config(mode));
  c.seed = seed;
  if (f.encoder) c.encoder_name = *f.encoder;
  if (f.lr) c.learning_rate = *f.lr;
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.grad_accum) c.gradient_accumulation = *f.grad_accum;
  if (f.epochs) c.max_epochs = *f.epochs;
  if (f.max_len) c.max_sequence_length = *f.max_len;
  if (f.dropout) c.dropout = *f.dropout;
  c.validate();
  return c;
}

/// Grid from --grid, else the config file's "grid", else the default one.
/// A single point follows from --single or from explicit hyperparameter flags.
ml::QAGrid qa_grid(Run& run, json& file, const TrainFlags& f, const ml::QATrainConfig& c) {
  auto from_file = take(file, "grid");
  if (f.single || (!f.grid_file && !from_file && (f.lr || f.batch_size || f.grad_accum)))
    return ml::QAGrid{{c.learning_rate}, {c.batch_size}, {c.gradient_accumulation}};
  if (f.grid_file) {
    auto p = run.input(*f.grid_file, "grid file");
    return ml::QAGrid::from_json(json::parse(io::read_file(p)));
  }
  if (from_file) return ml::QAGrid::from_json(*from_file);
  return ml::QAGrid{};
}

void require_random_tags(std::span<const TaggedExample> data, AugmentationMode mode, const std::string& which) {
  for (const auto& t : data) {
    bool ok = mode == AugmentationMode::RandomRelation ? t.relation_source == RelationSource::Random
                                                       : t.category_source == CategorySource::Random;
    if (!ok)
      throw PreconditionError(which + " example '" + t.example.id + "' does not carry randomized tags; mode " +
                              std::string(to_string(mode)) + " expects the output of the ablate command");
  }
}

void check_split(std::span<const TaggedExample> data, AugmentationMode mode) {
  for (const auto& t : data) check_mode_preconditions(t, mode);
}

void print_trial(std::size_t i, std::size_t total, const ml::TrialRecord& t) {
  std::cerr << "[" << i + 1 << "/" << total << "] " << ml::trial_name(i, t.config) << ": ";
  if (t.dev_accuracy)
    std::cerr << "dev accuracy " << 100.0 * *t.dev_accuracy << " (epoch " << t.best_epoch << ")\n";
  else
    std::cerr << "failed: " << t.error << "\n";
}

/// Shared tail of train-qa and ablate: grid search, best checkpoint, dev and
/// optional test predictions.
void train_and_report(Run& run, const std::vector<TaggedExample>& train, const std::vector<TaggedExample>& dev,
                      const std::optional<std::vector<TaggedExample>>& test, AugmentationMode mode,
                      const ml::QAGrid& grid, const ml::QATrainConfig& base) {
  run.config()["mode"] = std::string(to_string(mode));
  run.config()["train"] = base.to_json();
  run.config()["grid"] = grid.to_json();
  if (skip_if_current(run)) return;

  const auto trials_dir = run.output("trials");
  auto result = ml::grid_search(train, dev, mode, grid, base, trials_dir,
                                [&](std::size_t i, const ml::TrialRecord& t) { print_trial(i, grid.size(), t); });
  fs::copy_file(trials_dir / "grid.json", run.output("grid.json"));
  result.model->save(run.output("best"));
  result.dev.label = std::string(to_string(mode));
  result.dev.save(run.output("dev_result.json"));
  write_predictions(run.output("dev_predictions.txt"), result.dev.predictions);
  run.extra()["best_trial"] = ml::trial_name(result.best_trial, result.best_config);
  run.extra()["best_config"] = result.best_config.to_json();
  run.extra()["dev_accuracy"] = result.dev.accuracy;
  run.extra()["pretrained_encoder"] = ml::is_encoder_dir(base.encoder_name);
  std::size_t failed = 0;
  for (const auto& t : result.trials) failed += !t.dev_accuracy.has_value();
  run.extra()["failed_trials"] = failed;

  if (test) {
    auto preds = predict(*result.model, *test, mode);
    write_predictions(run.output("test_predictions.txt"), preds);
    bool labeled = std::all_of(test->begin(), test->end(), [](const auto& t) { return t.example.gold_index; });
    if (labeled) {
      auto r = evaluate(*result.model, *test, mode, std::string(to_string(mode)));
      r.save(run.output("test_result.json"));
      run.extra()["test_accuracy"] = r.accuracy;
    }
  }
  std::cout << "best " << ml::trial_name(result.best_trial, result.best_config) << " dev accuracy "
            << 100.0 * result.dev.accuracy << "\n";
  run.finish();
}

// ---------------------------------------------------------------- commands

struct Common {
  std::optional<std::string> config;
  std::uint64_t seed = 42;
  std::string out;
  bool force = false;

  void add(CLI::App* app) {
    app->add_option("--out", out, "Output directory")->required();
    app->add_option("--seed", seed, "Master seed");
    app->add_option("--config", config, "JSON config file; flags take precedence");
    app->add_flag("--force", force, "Rerun even when the output is up to date");
  }
};

int cmd_tag(const Common& c, const std::string& data, const std::optional<std::string>& labels,
            const std::optional<std::string>& rules_file) {
  Run run("tag", c.out, c.seed, c.force);
  auto cfg = read_config_file(c.config);
  auto examples = load_data(run, data, labels);
  std::optional<std::string> rules_path = rules_file;
  if (auto v = take(cfg, "rules"); v && !rules_path) rules_path = v->get<std::string>();
  if (!cfg.empty()) throw FormatError("tag config: unknown key '" + cfg.begin().key() + "'");
  RuleTable rules = rules_path ? RuleTable::load(run.input(*rules_path, "rule file")) : RuleTable::defaults();
  run.config()["rules"] = rules.to_config();
  if (skip_if_current(run)) return 0;

  RelationTagger tagger(rules, std::make_shared<HeuristicAnalyzer>());
  auto result = tagger.tag_dataset(examples);
  save_tagged(run.output("tagged.jsonl"), result.examples);
  json hist;
  std::cout << "relation histogram (" << result.histogram.total() << " examples)\n";
  for (auto tag : kAllRelationTags) {
    hist[std::string(to_string(tag))] = result.histogram[tag];
    std::cout << "  " << to_string(tag) << "\t" << result.histogram[tag] << "\n";
  }
  io::write_file_atomic(run.output("histogram.json"), hist.dump(2) + "\n");
  run.extra()["examples"] = result.examples.size();
  run.finish();
  return 0;
}

int cmd_agreement(const std::string& first, const std::string& second) {
  auto a = load_category_annotations(require_input(first, "annotation file"));
  auto b = load_category_annotations(require_input(second, "annotation file"));
  std::cout << "percent agreement over " << a.size() << " items: " << 100.0 * compute_agreement(a, b) << "\n";
  return 0;
}

int cmd_train_classifier(const Common& c, const std::string& train_ann, const std::string& dev_ann,
                         const std::vector<std::string>& corpora, const TrainFlags& f) {
  Run run("train-classifier", c.out, c.seed, c.force);
  auto cfg_file = read_config_file(c.config);
  auto config = ml::ClassifierConfig::from_json(cfg_file);
  config.seed = c.seed;
  if (f.encoder) config.encoder_name = *f.encoder;
  if (f.lr) config.learning_rate = *f.lr;
  if (f.batch_size) config.batch_size = *f.batch_size;
  if (f.grad_accum) config.gradient_accumulation = *f.grad_accum;
  if (f.epochs) config.max_epochs = *f.epochs;
  if (f.max_len) config.max_sequence_length = *f.max_len;
  if (f.dropout) config.dropout = *f.dropout;
  config.validate();

  std::vector<QAExample> corpus;
  for (const auto& p : corpora)
    for (auto& t : load_tagged(run.input(p, "corpus file"))) corpus.push_back(std::move(t.example));
  auto train_a = load_category_annotations(run.input(train_ann, "train annotations"));
  auto dev_a = load_category_annotations(run.input(dev_ann, "dev annotations"));
  if (ml::is_encoder_dir(config.encoder_name)) run.input(config.encoder_name, "encoder");
  run.config() = config.to_json();
  if (skip_if_current(run)) return 0;

  auto train = join_annotations(corpus, train_a);
  auto dev = join_annotations(corpus, dev_a);
  std::cerr << "training on " << train.size() << " annotated examples, selecting on " << dev.size() << "\n";
  auto trained = ml::train_classifier(train, dev, config);
  trained.model.save(run.output("checkpoint"));
  io::write_file_atomic(run.output("report.json"), trained.report.to_json().dump(2) + "\n");
  run.extra()["dev_accuracy"] = trained.report.dev_accuracy;
  run.extra()["best_epoch"] = trained.report.best_epoch;
  run.extra()["pretrained_encoder"] = ml::is_encoder_dir(config.encoder_name);
  std::cout << "dev accuracy " << 100.0 * trained.report.dev_accuracy << " (epoch " << trained.report.best_epoch
            << ")\n";
  run.finish();
  return 0;
}

int cmd_label(const Common& c, const std::string& model_dir, const std::string& data,
              const std::optional<std::string>& labels) {
  Run run("label", c.out, c.seed, c.force);
  auto dir = run.input(model_dir, "classifier checkpoint");
  if (fs::is_directory(dir / "checkpoint")) dir /= "checkpoint";
  auto examples = load_data(run, data, labels);
  if (skip_if_current(run)) return 0;

  auto model = ml::CategoryClassifier::load(dir);
  auto result = ml::predict_categories(model, std::span<const TaggedExample>(examples));
  save_tagged(run.output("labeled.jsonl"), result.examples);
  std::map<std::string, std::size_t> counts;
  for (const auto& t : result.examples) ++counts[std::string(to_string(*t.category))];
  std::cout << "labeled " << result.examples.size() << " examples\n";
  for (const auto& [k, v] : counts) std::cout << "  " << k << "\t" << v << "\n";
  if (result.truncated) std::cerr << "warning: " << result.truncated << " contexts truncated from the left\n";
  run.extra()["truncated"] = result.truncated;
  run.extra()["examples"] = result.examples.size();
  run.finish();
  return 0;
}

struct Splits {
  std::optional<std::string> data_dir, train, dev, test;

  void add(CLI::App* app) {
    app->add_option("--data", data_dir, "Directory with train.jsonl and dev.jsonl (tagged format)");
    app->add_option("--train", train, "Training file (overrides --data)");
    app->add_option("--dev", dev, "Dev file (overrides --data)");
    app->add_option("--test", test, "Optional test file; predictions are written for it");
  }

  fs::path path(const std::optional<std::string>& explicit_path, const char* name) const {
    if (explicit_path) return *explicit_path;
    if (!data_dir) throw PreconditionError(std::string("give --data or --") + name);
    return fs::path(*data_dir) / (std::string(name) + ".jsonl");
  }
};

int cmd_train_qa(const Common& c, const Splits& s, const std::optional<std::string>& mode_flag, const TrainFlags& f) {
  Run run("train-qa", c.out, c.seed, c.force);
  auto file = read_config_file(c.config);
  const auto mode = mode_from(mode_flag, file, AugmentationMode::None);
  auto grid_cfg = file;
  file.erase("grid");
  auto base = qa_config(mode, file, f, c.seed);
  auto grid = qa_grid(run, grid_cfg, f, base);
  auto train = load_data(run, s.path(s.train, "train"), std::nullopt);
  auto dev = load_data(run, s.path(s.dev, "dev"), std::nullopt);
  std::optional<std::vector<TaggedExample>> test;
  if (s.test) test = load_data(run, *s.test, std::nullopt);
  if (ml::is_encoder_dir(base.encoder_name)) run.input(base.encoder_name, "encoder");
  if (mode == AugmentationMode::RandomRelation || mode == AugmentationMode::RandomCategory) {
    require_random_tags(train, mode, "train");
    require_random_tags(dev, mode, "dev");
  }
  check_split(train, mode);
  check_split(dev, mode);
  if (test) check_split(*test, mode);
  train_and_report(run, train, dev, test, mode, grid, base);
  return 0;
}

int cmd_eval(const Common& c, const std::string& model_dir, const std::string& data,
             const std::optional<std::string>& mode_flag, const std::optional<std::string>& label) {
  Run run("eval", c.out, c.seed, c.force);
  auto dir = run.input(model_dir, "model checkpoint");
  if (fs::is_directory(dir / "best")) dir /= "best";
  auto file = read_config_file(c.config);
  auto model = ml::MultipleChoiceModel::load(dir);
  const auto mode = mode_from(mode_flag, file, model.mode());
  auto examples = load_data(run, data, std::nullopt);
  check_split(examples, mode);
  run.config()["mode"] = std::string(to_string(mode));
  if (skip_if_current(run)) return 0;

  auto preds = predict(model, examples, mode);
  write_predictions(run.output("predictions.txt"), preds);
  bool labeled = std::all_of(examples.begin(), examples.end(), [](const auto& t) { return t.example.gold_index; });
  if (labeled) {
    auto result = evaluate(model, examples, mode, label.value_or(std::string(to_string(mode))));
    result.save(run.output("result.json"));
    run.extra()["accuracy"] = result.accuracy;
    std::cout << "accuracy " << 100.0 * result.accuracy << " on " << examples.size() << " examples\n";
  } else {
    std::cout << "no gold labels; wrote predictions for " << examples.size() << " examples\n";
  }
  run.finish();
  return 0;
}

int cmd_analyze(const Common& c, const std::vector<std::string>& results, const std::string& data,
                const std::optional<std::string>& annotations) {
  Run run("analyze", c.out, c.seed, c.force);
  std::vector<QAEvalResult> loaded;
  for (const auto& r : results) loaded.push_back(QAEvalResult::load(run.input(r, "result file")));
  auto examples = load_tagged(run.input(data, "tagged data"));
  std::optional<std::vector<CategoryAnnotation>> ann;
  if (annotations) ann = load_category_annotations(run.input(*annotations, "annotations"));
  if (skip_if_current(run)) return 0;

  if (ann) {
    std::map<std::string, KnowledgeCategory> human;
    for (const auto& a : *ann) human[a.example_id] = a.category;
    std::size_t matched = 0;
    for (auto& t : examples) {
      if (auto it = human.find(t.example.id); it != human.end()) {
        t.set_category(it->second, CategorySource::Human);
        ++matched;
      } else if (t.category_source == CategorySource::Human) {
        t.category.reset();
        t.category_source.reset();
      }
    }
    if (matched == 0) throw PreconditionError("none of the annotated ids occur in " + data);
  }
  std::vector<Grouping> groups = {relation_grouping(examples)};
  auto cat = category_grouping(examples, CategorySource::Human);
  if (!cat.example_ids.empty()) groups.push_back(std::move(cat));
  else std::cerr << "note: no human category labels; the category table is skipped\n";

  auto report = compare_runs(loaded, groups);
  io::write_file_atomic(run.output("report.txt"), report.text);
  io::write_file_atomic(run.output("report.json"), report.json);
  std::cout << report.text;
  run.finish();
  return 0;
}

int cmd_ablate(const Common& c, const Splits& s, const std::string& which, const TrainFlags& f) {
  Run run("ablate", c.out, c.seed, c.force);
  if (which != "relation" && which != "category")
    throw PreconditionError("--which must be relation or category, not '" + which + "'");
  const auto kind = which == "relation" ? TagKind::Relation : TagKind::Category;
  const auto mode = kind == TagKind::Relation ? AugmentationMode::RandomRelation : AugmentationMode::RandomCategory;
  auto file = read_config_file(c.config);
  take(file, "mode");
  auto grid_cfg = file;
  file.erase("grid");
  auto base = qa_config(mode, file, f, c.seed);
  auto grid = qa_grid(run, grid_cfg, f, base);
  auto train = load_data(run, s.path(s.train, "train"), std::nullopt);
  auto dev = load_data(run, s.path(s.dev, "dev"), std::nullopt);
  std::optional<std::vector<TaggedExample>> test;
  if (s.test) test = load_data(run, *s.test, std::nullopt);
  if (ml::is_encoder_dir(base.encoder_name)) run.input(base.encoder_name, "encoder");
  run.config()["which"] = which;
  if (run.up_to_date()) {
    skip_if_current(run);
    return 0;
  }

  train = randomize_tags(train, kind, c.seed);
  dev = randomize_tags(dev, kind, c.seed);
  if (test) test = randomize_tags(*test, kind, c.seed);
  save_tagged(run.output("data/train.jsonl"), train);
  save_tagged(run.output("data/dev.jsonl"), dev);
  if (test) save_tagged(run.output("data/test.jsonl"), *test);
  train_and_report(run, train, dev, test, mode, grid, base);
  return 0;
}

int cmd_pretrain(const Common& c, const std::vector<std::string>& data, const std::string& encoder, int epochs,
                 double lr, std::size_t batch_size) {
  Run run("pretrain", c.out, c.seed, c.force);
  std::vector<std::string> texts;
  for (const auto& p : data)
    for (const auto& t : load_tagged(run.input(p, "data file"))) {
      const auto& e = t.example;
      if (e.gold_index) {
        texts.push_back(e.context + " " + e.question + " " + e.answers[static_cast<std::size_t>(*e.gold_index)]);
      } else {
        for (const auto& a : e.answers) texts.push_back(e.context + " " + e.question + " " + a);
      }
    }
  ml::PretrainConfig pc;
  pc.epochs = epochs;
  pc.learning_rate = lr;
  pc.batch_size = static_cast<int>(batch_size);
  pc.seed = c.seed;
  run.config() = {{"encoder", encoder},
                  {"epochs", epochs},
                  {"learning_rate", lr},
                  {"batch_size", batch_size},
                  {"mask_probability", pc.mask_probability},
                  {"max_sequence_length", pc.max_sequence_length}};
  if (skip_if_current(run)) return 0;

  auto bundle = ml::load_encoder(encoder, texts, c.seed);
  std::cerr << "pretraining on " << texts.size() << " texts, vocabulary " << bundle.vocab.size() << "\n";
  auto report = ml::pretrain_mlm(bundle, texts, pc);
  for (std::size_t i = 0; i < report.epoch_loss.size(); ++i)
    std::cerr << "epoch " << i + 1 << " loss " << report.epoch_loss[i] << "\n";
  ml::save_encoder(bundle, run.dir());
  for (const auto* name : {"encoder.json", "vocab.json", "encoder.pt"}) run.output(name);
  run.extra()["epoch_loss"] = report.epoch_loss;
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Typed social-commonsense QA pipeline"};
  app.require_subcommand(1);

  Common common;
  TrainFlags flags;
  Splits splits;

  std::string data;
  std::optional<std::string> labels, rules;
  auto* tag = app.add_subcommand("tag", "Assign a relation tag to every question");
  common.add(tag);
  tag->add_option("--data", data, "Release or tagged JSONL file")->required();
  tag->add_option("--labels", labels, "Label sidecar (default: <stem>-labels.lst beside the data)");
  tag->add_option("--rules", rules, "Keyword rule table");

  std::string first, second;
  auto* agreement = app.add_subcommand("agreement", "Percent agreement between two annotation files");
  agreement->add_option("first", first)->required();
  agreement->add_option("second", second)->required();

  std::string train_ann, dev_ann;
  std::vector<std::string> corpora;
  auto* train_clf = app.add_subcommand("train-classifier", "Train the knowledge-category classifier");
  common.add(train_clf);
  flags.add(train_clf, false);
  train_clf->add_option("--train", train_ann, "Training annotations")->required();
  train_clf->add_option("--dev", dev_ann, "Dev annotations")->required();
  train_clf->add_option("--data", corpora, "Corpus files the annotation ids refer to");

  std::string model_dir;
  auto* label = app.add_subcommand("label", "Predict knowledge categories for a corpus file");
  common.add(label);
  label->add_option("--model", model_dir, "Classifier run or checkpoint directory")->required();
  label->add_option("--data", data, "Release or tagged JSONL file")->required();
  label->add_option("--labels", labels, "Label sidecar");

  std::optional<std::string> mode;
  auto* train_qa = app.add_subcommand("train-qa", "Grid-search fine-tuning of the multiple-choice model");
  common.add(train_qa);
  flags.add(train_qa, true);
  splits.add(train_qa);
  train_qa->add_option("--mode", mode, "none, relation, category, both, random-relation, random-category");

  std::optional<std::string> run_label;
  auto* eval = app.add_subcommand("eval", "Score a split with a trained model");
  common.add(eval);
  eval->add_option("--model", model_dir, "train-qa run or checkpoint directory")->required();
  eval->add_option("--data", data, "Tagged JSONL file")->required();
  eval->add_option("--mode", mode, "Augmentation mode (must match training)");
  eval->add_option("--label", run_label, "Run name used in reports");

  std::vector<std::string> results;
  std::optional<std::string> annotations;
  auto* analyze = app.add_subcommand("analyze", "Accuracy, error-rate tables and significance");
  common.add(analyze);
  analyze->add_option("--results", results, "Result files from eval or train-qa")->required();
  analyze->add_option("--data", data, "Tagged file of the evaluated split")->required();
  analyze->add_option("--annotations", annotations, "Human category annotations for the split");

  std::string which;
  auto* ablate = app.add_subcommand("ablate", "Random-tag ablation: randomize tags, then train and evaluate");
  common.add(ablate);
  flags.add(ablate, true);
  splits.add(ablate);
  ablate->add_option("--which", which, "relation or category")->required();

  std::vector<std::string> texts;
  std::string encoder = "tiny";
  int epochs = 3;
  double lr = 1e-3;
  std::size_t batch = 32;
  auto* pretrain = app.add_subcommand("pretrain", "Masked-token pretraining of a small encoder");
  common.add(pretrain);
  pretrain->add_option("--data", texts, "Corpus files")->required();
  pretrain->add_option("--encoder", encoder, "Architecture preset");
  pretrain->add_option("--epochs", epochs, "Epochs");
  pretrain->add_option("--lr", lr, "Learning rate");
  pretrain->add_option("--batch-size", batch, "Batch size");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*tag) return cmd_tag(common, data, labels, rules);
    if (*agreement) return cmd_agreement(first, second);
    if (*train_clf) return cmd_train_classifier(common, train_ann, dev_ann, corpora, flags);
    if (*label) return cmd_label(common, model_dir, data, labels);
    if (*train_qa) return cmd_train_qa(common, splits, mode, flags);
    if (*eval) return cmd_eval(common, model_dir, data, mode, run_label);
    if (*analyze) return cmd_analyze(common, results, data, annotations);
    if (*ablate) return cmd_ablate(common, splits, which, flags);
    if (*pretrain) return cmd_pretrain(common, texts, encoder, epochs, lr, batch);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
