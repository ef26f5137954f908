#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "siqa/random.hpp"

namespace siqa::ml {

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;

  nlohmann::ordered_json to_json() const;
};

/// Copy of every parameter and buffer, for keeping the best epoch.
class ParameterSnapshot {
 public:
  void capture(const torch::nn::Module& module);
  void restore(torch::nn::Module& module) const;
  bool empty() const { return values_.empty(); }

 private:
  std::vector<torch::Tensor> values_;
};

/// Throws TrainingError describing where a NaN or infinite loss appeared.
void require_finite(const torch::Tensor& loss, const std::string& what, int epoch, std::size_t step);

/// Fisher-Yates order of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, SplitMix64& rng);

/// AdamW with decoupled weight decay on every parameter.
std::unique_ptr<torch::optim::AdamW> make_optimizer(torch::nn::Module& module, double learning_rate,
                                                    double weight_decay);

/// Seeds the runtime's global generator (dropout, initialization).
void seed_runtime(std::uint64_t seed);

struct FitOptions {
  std::string what = "training";  // used in diagnostics
  double learning_rate = 1e-5;
  double weight_decay = 0.01;
  double max_grad_norm = 1.0;
  std::size_t batch_size = 8;
  std::size_t gradient_accumulation = 1;
  int max_epochs = 4;
  std::uint64_t seed = 0;
};

struct FitResult {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
  double best_dev_accuracy = 0.0;
};

/// Mini-batch loop shared by the classifier and the multiple-choice model.
/// batch_loss returns the mean loss over the given training indices;
/// dev_accuracy is called after every epoch with the module in eval mode.
/// The parameters of the best epoch (earliest on ties) are restored before
/// returning. A non-finite loss aborts with TrainingError.
FitResult fit(torch::nn::Module& module, std::size_t train_size, const FitOptions& options,
              const std::function<torch::Tensor(std::span<const std::size_t>)>& batch_loss,
              const std::function<double()>& dev_accuracy,
              const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace siqa::ml
