#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fewbit/qtable.hpp"

namespace fewbit {

// Row-major regression data: inputs is size() x in_dim, targets size() x out_dim.
struct Dataset {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return in_dim == 0 ? 0 : inputs.size() / in_dim; }
};

// Standard normal inputs; targets from a fixed random tanh teacher with 16
// hidden units plus N(0, 0.01^2) noise. Deterministic in the seed.
Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t n_samples, std::size_t in_dim,
                               std::size_t out_dim);

struct ExactBackward {};
struct FewbitBackward {
  std::shared_ptr<const QuantizationTable> table;
};
struct ActnnBackward {
  int bits = 2;
  std::size_t group_size = 256;
};
using BackwardMode = std::variant<ExactBackward, FewbitBackward, ActnnBackward>;

// "exact", "fewbit:3", "actnn:2"
std::string mode_label(const BackwardMode& mode);

// Bits stored per activation element (32 for exact).
int stored_bits(const BackwardMode& mode);

struct MlpConfig {
  std::vector<std::size_t> widths{8, 64, 64, 1};  // input, hidden..., output
  std::string activation = "gelu";
  BackwardMode backward = ExactBackward{};
  std::uint64_t seed = 0;
  double learning_rate = 0.05;
  std::size_t batch_size = 64;
  std::size_t steps = 2000;
  double validation_fraction = 0.2;

  void validate() const;
};

struct TrainTrace {
  std::string mode;
  std::vector<double> step_losses;  // mini-batch loss before each update
  double final_train_loss = 0.0;    // whole training split after the last step
  double final_validation_loss = 0.0;
  std::size_t activation_bytes = 0;  // peak saved-for-backward bytes over activation layers
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dense network with activations between linear layers. Weights are
// out x in row-major per layer.
class Mlp {
 public:
  Mlp(const std::vector<std::size_t>& widths, const ActivationSpec& act, std::uint64_t seed);

  struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
  };

  std::size_t num_layers() const { return weights_.size(); }
  std::vector<double>& weights(std::size_t layer) { return weights_[layer]; }
  std::vector<double>& biases(std::size_t layer) { return biases_[layer]; }
  const std::vector<double>& weights(std::size_t layer) const { return weights_[layer]; }
  const std::vector<double>& biases(std::size_t layer) const { return biases_[layer]; }

  std::vector<double> predict(std::span<const double> inputs, std::size_t n) const;

  // Mean squared error over n rows and all outputs.
  double loss(std::span<const double> inputs, std::span<const double> targets,
              std::size_t n) const;

  // Forward with the mode's save-for-backward, then backward. Returns the loss.
  // saved_bytes receives the activation-layer storage held between the passes.
  double loss_and_gradients(std::span<const double> inputs, std::span<const double> targets,
                            std::size_t n, const BackwardMode& mode, std::uint64_t rng_seed,
                            Gradients& grads, std::size_t* saved_bytes = nullptr) const;

  void apply(const Gradients& grads, double learning_rate);

 private:
  std::vector<std::size_t> widths_;
  const ActivationSpec* act_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

// Mini-batch SGD. Weight init and batch order depend only on the seed, so runs
// differing only in backward mode see identical data. Throws TrainingDiverged
// on a non-finite loss.
TrainTrace train(const MlpConfig& config, const Dataset& data);

struct ModeComparison {
  TrainTrace trace;
  int bits_per_element;
  double compression_ratio;  // 32 / bits
  double savings_percent;    // activation storage saved vs 32-bit
};

struct ComparisonReport {
  std::vector<ModeComparison> rows;
};

// Runs every mode with otherwise identical config (concurrently).
ComparisonReport compare_modes(const MlpConfig& base, const std::vector<BackwardMode>& modes,
                               const Dataset& data);

// step,mode,loss,activation_bytes rows for every trace.
void write_trace_csv(std::ostream& out, std::span<const TrainTrace> traces);
void write_summary_csv(std::ostream& out, const ComparisonReport& report);

}  // namespace fewbit
