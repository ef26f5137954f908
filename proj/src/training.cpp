#include "siqa/training.hpp"

#include <cmath>

#include "siqa/error.hpp"

namespace siqa::ml {

nlohmann::ordered_json EpochMetrics::to_json() const {
  return {{"epoch", epoch}, {"train_loss", train_loss}, {"dev_accuracy", dev_accuracy}};
}

void ParameterSnapshot::capture(const torch::nn::Module& module) {
  torch::NoGradGuard guard;
  values_.clear();
  for (const auto& p : module.parameters()) values_.push_back(p.detach().clone());
  for (const auto& b : module.buffers()) values_.push_back(b.detach().clone());
}

void ParameterSnapshot::restore(torch::nn::Module& module) const {
  torch::NoGradGuard guard;
  auto params = module.parameters();
  auto buffers = module.buffers();
  if (params.size() + buffers.size() != values_.size())
    throw Error("parameter snapshot does not match the module it is restored into");
  std::size_t k = 0;
  for (auto& p : params) p.copy_(values_[k++]);
  for (auto& b : buffers) b.copy_(values_[k++]);
}

void require_finite(const torch::Tensor& loss, const std::string& what, int epoch, std::size_t step) {
  const double v = loss.item<double>();
  if (std::isfinite(v)) return;
  throw TrainingError(what + ": non-finite loss (" + std::to_string(v) + ") at epoch " + std::to_string(epoch) +
                      ", step " + std::to_string(step) + "; lower the learning rate or check the inputs");
}

std::vector<std::size_t> shuffled_indices(std::size_t n, SplitMix64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

std::unique_ptr<torch::optim::AdamW> make_optimizer(torch::nn::Module& module, double learning_rate,
                                                    double weight_decay) {
  return std::make_unique<torch::optim::AdamW>(
      module.parameters(), torch::optim::AdamWOptions(learning_rate).weight_decay(weight_decay));
}

void seed_runtime(std::uint64_t seed) { torch::manual_seed(seed); }

FitResult fit(torch::nn::Module& module, std::size_t train_size, const FitOptions& options,
              const std::function<torch::Tensor(std::span<const std::size_t>)>& batch_loss,
              const std::function<double()>& dev_accuracy,
              const std::function<void(const EpochMetrics&)>& on_epoch) {
  if (train_size == 0) throw PreconditionError(options.what + ": training set is empty");
  if (options.batch_size == 0 || options.gradient_accumulation == 0 || options.max_epochs <= 0)
    throw PreconditionError(options.what + ": batch size, accumulation and epochs must be positive");

  seed_runtime(derive_seed(options.seed, "dropout"));
  SplitMix64 order_rng(derive_seed(options.seed, "shuffle"));
  auto optimizer = make_optimizer(module, options.learning_rate, options.weight_decay);
  ParameterSnapshot best;
  FitResult result;

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    module.train();
    const auto order = shuffled_indices(train_size, order_rng);
    double total = 0.0;
    std::size_t steps = 0, pending = 0;
    optimizer->zero_grad();
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const auto end = std::min(order.size(), start + options.batch_size);
      std::span<const std::size_t> idx(order.data() + start, end - start);
      auto loss = batch_loss(idx);
      require_finite(loss, options.what, epoch, steps);
      (loss / static_cast<double>(options.gradient_accumulation)).backward();
      total += loss.item<double>();
      ++steps;
      if (++pending == options.gradient_accumulation || end == order.size()) {
        torch::nn::utils::clip_grad_norm_(module.parameters(), options.max_grad_norm);
        optimizer->step();
        optimizer->zero_grad();
        pending = 0;
      }
    }
    module.eval();
    EpochMetrics m{epoch, total / static_cast<double>(steps), 0.0};
    {
      torch::NoGradGuard guard;
      m.dev_accuracy = dev_accuracy();
    }
    result.epochs.push_back(m);
    if (on_epoch) on_epoch(m);
    if (result.best_epoch == 0 || m.dev_accuracy > result.best_dev_accuracy) {
      result.best_epoch = epoch;
      result.best_dev_accuracy = m.dev_accuracy;
      if (epoch < options.max_epochs) best.capture(module);
      else best = ParameterSnapshot{};
    }
  }
  if (!best.empty()) best.restore(module);
  module.eval();
  return result;
}

}  // namespace siqa::ml
