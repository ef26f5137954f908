#include "siqa/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "siqa/error.hpp"
#include "siqa/random.hpp"

namespace siqa {

namespace {

void check_binary(std::span<const std::uint8_t> v, std::string_view name) {
  for (auto x : v)
    if (x > 1) throw PreconditionError(std::string(name) + " must contain only 0/1 entries");
}

template <typename Enum, std::size_t N>
std::vector<std::string> enum_names(const std::array<Enum, N>& all) {
  std::vector<std::string> out;
  for (auto e : all) out.emplace_back(to_string(e));
  return out;
}

std::string signed_points(double points) {
  if (std::abs(points) < 0.05) return "+0.0";
  return fmt::format("{:+.1f}", points);
}

// Accuracy up is good; error rate down is good. Arrows show the direction of
// the raw number, not whether the change is good.
std::string arrow(double delta) {
  if (std::abs(delta) < 1e-12) return "=";
  return delta > 0 ? "↑" : "↓";
}

}  // namespace

const GroupErrorRate* ErrorRateTable::find(std::string_view group) const {
  for (const auto& r : rows)
    if (r.group == group) return &r;
  return nullptr;
}

std::size_t ErrorRateTable::total_support() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.support;
  return n;
}

std::size_t ErrorRateTable::total_errors() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.errors;
  return n;
}

ErrorRateTable error_rate_by_group(std::span<const std::uint8_t> correctness, std::span<const std::string> groups,
                                   std::span<const std::string> order) {
  if (correctness.size() != groups.size())
    throw PreconditionError("error_rate_by_group: " + std::to_string(correctness.size()) + " outcomes but " +
                            std::to_string(groups.size()) + " group labels");
  check_binary(correctness, "correctness");
  std::vector<std::string> keys(order.begin(), order.end());
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < keys.size(); ++i) slot.emplace(keys[i], i);
  for (const auto& g : groups)
    if (slot.emplace(g, keys.size()).second) keys.push_back(g);
  std::vector<std::size_t> support(keys.size()), errors(keys.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto k = slot.at(groups[i]);
    ++support[k];
    errors[k] += correctness[i] ? 0 : 1;
  }
  ErrorRateTable table;
  for (std::size_t k = 0; k < keys.size(); ++k) {
    if (support[k] == 0) {
      table.warnings.push_back("group '" + keys[k] + "' has no examples; omitted");
      continue;
    }
    table.rows.push_back(GroupErrorRate{keys[k], static_cast<double>(errors[k]) / static_cast<double>(support[k]),
                                        errors[k], support[k]});
  }
  return table;
}

ErrorRateTable error_rate_by_group(const QAEvalResult& result, std::span<const RelationTag> groups) {
  std::vector<std::string> labels;
  for (auto g : groups) labels.emplace_back(to_string(g));
  auto order = enum_names(kAllRelationTags);
  return error_rate_by_group(result.correctness, labels, order);
}

ErrorRateTable error_rate_by_group(const QAEvalResult& result, std::span<const KnowledgeCategory> groups) {
  std::vector<std::string> labels;
  for (auto g : groups) labels.emplace_back(to_string(g));
  auto order = enum_names(kAllCategories);
  return error_rate_by_group(result.correctness, labels, order);
}

SignificanceResult paired_significance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size())
    throw PreconditionError("paired_significance: vectors differ in length (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
  if (a.size() < 2) throw PreconditionError("paired_significance needs at least 2 paired observations");
  check_binary(a, "a");
  check_binary(b, "b");
  const auto n = a.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) - static_cast<double>(b[i]);
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = static_cast<double>(a[i]) - static_cast<double>(b[i]) - mean;
    ss += d * d;
  }
  SignificanceResult r;
  r.n = n;
  r.mean_difference = mean;
  if (ss == 0.0) {
    r.degenerate = true;
    return r;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  r.statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(n - 1));
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
  r.p_one_sided = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

McNemarResult mcnemar_exact(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw PreconditionError("mcnemar_exact: vectors differ in length");
  McNemarResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) ++r.only_a;
    if (!a[i] && b[i]) ++r.only_b;
  }
  const auto discordant = r.only_a + r.only_b;
  if (discordant == 0) return r;
  boost::math::binomial dist(static_cast<double>(discordant), 0.5);
  const double k = static_cast<double>(std::min(r.only_a, r.only_b));
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(dist, k));
  return r;
}

std::vector<TaggedExample> randomize_tags(std::span<const TaggedExample> dataset, TagKind which, std::uint64_t seed) {
  const auto stream = derive_seed(seed, which == TagKind::Relation ? "random-relation" : "random-category");
  std::vector<TaggedExample> out(dataset.begin(), dataset.end());
  for (auto& t : out) {
    SplitMix64 rng(stream ^ fnv1a64(t.example.id));
    if (which == TagKind::Relation)
      t.set_relation(kAllRelationTags[rng.below(kAllRelationTags.size())], RelationSource::Random);
    else
      t.set_category(kAllCategories[rng.below(kAllCategories.size())], CategorySource::Random);
  }
  return out;
}

Grouping relation_grouping(std::span<const TaggedExample> examples) {
  Grouping g{"relation", enum_names(kAllRelationTags), {}, {}};
  for (const auto& t : examples) {
    if (!t.relation) continue;
    g.example_ids.push_back(t.example.id);
    g.labels.emplace_back(to_string(*t.relation));
  }
  return g;
}

Grouping category_grouping(std::span<const TaggedExample> examples, CategorySource source) {
  Grouping g{"category", enum_names(kAllCategories), {}, {}};
  for (const auto& t : examples) {
    if (!t.category || t.category_source != source) continue;
    g.example_ids.push_back(t.example.id);
    g.labels.emplace_back(to_string(*t.category));
  }
  return g;
}

ComparisonReport compare_runs(std::span<const QAEvalResult> results, std::span<const Grouping> groupings) {
  if (results.empty()) throw PreconditionError("compare_runs needs at least one result");
  for (const auto& r : results)
    if (r.split_id != results.front().split_id)
      throw PreconditionError("compare_runs: results were evaluated on different splits ('" + r.label + "' on " +
                              r.split_id + ", '" + results.front().label + "' on " + results.front().split_id + ")");

  std::vector<const QAEvalResult*> runs;
  for (const auto& r : results) runs.push_back(&r);
  std::stable_sort(runs.begin(), runs.end(), [](const QAEvalResult* x, const QAEvalResult* y) {
    if (x->mode != y->mode) return x->mode < y->mode;
    return x->label < y->label;
  });
  const QAEvalResult& base = *runs.front();

  nlohmann::ordered_json j;
  j["split_id"] = base.split_id;
  j["baseline"] = base.label;
  std::string text;
  text += fmt::format("Accuracy (split {}, baseline '{}')\n", base.split_id, base.label);
  text += fmt::format("{:<36} {:<16} {:>6} {:>9} {:>8}\n", "run", "mode", "n", "accuracy", "delta");
  for (const auto* r : runs) {
    const double acc = 100.0 * r->accuracy;
    const double delta = 100.0 * (r->accuracy - base.accuracy);
    text += fmt::format("{:<36} {:<16} {:>6} {:>9.1f} {:>6} {}\n", r->label, to_string(r->mode),
                        r->correctness.size(), acc, signed_points(delta), arrow(delta));
    j["runs"].push_back({{"label", r->label},
                         {"mode", std::string(to_string(r->mode))},
                         {"n", r->correctness.size()},
                         {"accuracy", acc},
                         {"delta", delta}});
  }

  j["groupings"] = nlohmann::ordered_json::array();
  for (const auto& g : groupings) {
    if (g.example_ids.size() != g.labels.size())
      throw PreconditionError("grouping '" + g.name + "' has mismatched ids and labels");
    std::unordered_map<std::string, const std::string*> label_of;
    for (std::size_t i = 0; i < g.example_ids.size(); ++i) label_of.emplace(g.example_ids[i], &g.labels[i]);

    auto table_for = [&](const QAEvalResult& r) {
      std::vector<std::uint8_t> c;
      std::vector<std::string> labels;
      for (std::size_t i = 0; i < r.example_ids.size(); ++i)
        if (auto it = label_of.find(r.example_ids[i]); it != label_of.end()) {
          c.push_back(r.correctness[i]);
          labels.push_back(*it->second);
        }
      return error_rate_by_group(c, labels, g.order);
    };
    const auto base_table = table_for(base);
    nlohmann::ordered_json gj;
    gj["name"] = g.name;
    text += fmt::format("\nError rate by {}\n{:<36}", g.name, "run");
    for (const auto& row : base_table.rows) text += fmt::format(" {:>12}", row.group);
    text += "\n";
    text += fmt::format("{:<36}", "(support)");
    for (const auto& row : base_table.rows) text += fmt::format(" {:>12}", row.support);
    text += "\n";
    for (const auto* r : runs) {
      auto table = table_for(*r);
      nlohmann::ordered_json rj;
      rj["label"] = r->label;
      text += fmt::format("{:<36}", r->label);
      for (const auto& row : table.rows) {
        const auto* b = base_table.find(row.group);
        const double delta = b ? row.error_rate - b->error_rate : 0.0;
        text += fmt::format(" {:>10.2f} {}", row.error_rate, r == runs.front() ? " " : arrow(delta));
        rj["rows"].push_back({{"group", row.group},
                              {"error_rate", row.error_rate},
                              {"support", row.support},
                              {"delta", delta}});
      }
      text += "\n";
      gj["runs"].push_back(rj);
    }
    j["groupings"].push_back(gj);
  }

  j["significance"] = nlohmann::ordered_json::array();
  if (runs.size() > 1) {
    text += "\nSignificance against baseline (paired t over per-example correctness; exact McNemar)\n";
    text += fmt::format("{:<36} {:>9} {:>10} {:>10} {:>10}\n", "run", "t", "p(2-side)", "p(1-side)", "McNemar p");
  }
  for (std::size_t k = 1; k < runs.size(); ++k) {
    const auto& r = *runs[k];
    if (r.correctness.size() < 2) continue;
    auto t = paired_significance(r.correctness, base.correctness);
    auto m = mcnemar_exact(r.correctness, base.correctness);
    text += fmt::format("{:<36} {:>9.4f} {:>10.4f} {:>10.4f} {:>10.4f}{}\n", r.label, t.statistic, t.p_value,
                        t.p_one_sided, m.p_value, t.degenerate ? "  (degenerate: no variance)" : "");
    j["significance"].push_back({{"label", r.label},
                                 {"against", base.label},
                                 {"t", t.statistic},
                                 {"p_two_sided", t.p_value},
                                 {"p_one_sided", t.p_one_sided},
                                 {"n", t.n},
                                 {"degenerate", t.degenerate},
                                 {"mcnemar_p", m.p_value}});
  }
  return ComparisonReport{std::move(text), j.dump(1) + "\n"};
}

}  // namespace siqa
