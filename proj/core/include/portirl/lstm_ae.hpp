#ifndef PORTIRL_LSTM_AE_HPP
#define PORTIRL_LSTM_AE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "portirl/data_pipeline.hpp"
#include "portirl/port_model.hpp"

namespace portirl {

/// Sequence model: one LSTM layer feeding a tanh bottleneck. The bottleneck
/// drives a linear decoder that reconstructs the (scaled) input and a linear
/// action head with one softmax per slot.
struct LstmAeConfig {
  int input_dim = kRawFeatureCount;
  int hidden_dim = 64;
  int bottleneck_dim = 32;
  int sequence_len = 16;
  double learning_rate = 0.05;
  int epochs = 40;
  int batch_size = 8;
  std::uint64_t seed = 7;
  double reconstruction_weight = 0.1;
  double clip_norm = 5.0;
  double staytime_cap = 16.0;

  void validate() const;
};

/// Per-action weights of the weighted cross-entropy, indexed by one-hot position.
struct LossWeights {
  std::array<double, kActionCount> by_position{};

  static LossWeights defaults();
  static LossWeights uniform(double w = 1.0);
  double operator[](SlotAction a) const { return by_position[static_cast<std::size_t>(action_position(a))]; }
};

/// Offsets of each tensor inside the flat parameter vector.
struct LstmAeLayout {
  int input = 0, hidden = 0, bottleneck = 0;
  std::size_t gate_w = 0, gate_b = 0;  // [i f g o] blocks, gate_w is 4H x (I+H)
  std::size_t enc_w = 0, enc_b = 0;    // B x H
  std::size_t dec_w = 0, dec_b = 0;    // I x B
  std::size_t head_w = 0, head_b = 0;  // 190 x B
  std::size_t total = 0;

  explicit LstmAeLayout(const LstmAeConfig& cfg);
  LstmAeLayout() = default;
};

struct LstmAeParams {
  LstmAeConfig config;
  FeatureScaling scaling;
  std::vector<double> values;

  /// All-zero parameters.
  static LstmAeParams zeros(const LstmAeConfig& cfg, const FeatureScaling& scaling = {});
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, forget bias 1.
  static LstmAeParams random(const LstmAeConfig& cfg, const FeatureScaling& scaling, std::uint64_t seed);
  LstmAeLayout layout() const { return LstmAeLayout(config); }
};

class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& layer, int step);
  const std::string& layer() const { return layer_; }
  int step() const { return step_; }

 private:
  std::string layer_;
  int step_;
};

using ActionProbabilities = std::array<double, kActionVectorSize>;

struct ForwardResult {
  std::vector<std::vector<double>> bottleneck;     // one per window
  std::vector<ActionProbabilities> probabilities;  // one per window
};

/// Runs the network over already-scaled inputs, starting from a zero state.
ForwardResult forward(const LstmAeParams& params, std::span<const RawStateFeatures> inputs);

/// Weighted binary cross-entropy summed over entries:
/// -sum_i w_i (y_i log p_i + (1 - y_i) log(1 - p_i)), p clamped to [1e-12, 1 - 1e-12].
double weighted_ce_loss(std::span<const double> predicted, std::span<const double> target,
                        std::span<const double> weights);
/// Same loss over a 190-entry action vector; entry i is weighted by its action class.
double weighted_ce_loss(std::span<const double> predicted, std::span<const double> target, const LossWeights& w);

/// Per-slot class targets: position 0 (Nothing) is hot for empty slots, so
/// every block of the target is itself a distribution.
ActionProbabilities target_distribution(const JointAction& action);

/// One training sequence: scaled inputs and, where known, the action taken.
struct SequenceSample {
  std::vector<RawStateFeatures> inputs;
  std::vector<std::array<std::uint8_t, kSlotCount>> targets;  // one-hot positions per slot
  std::vector<bool> has_target;

  std::size_t target_count() const;
};

/// Chops trajectories into consecutive sequences of `cfg.sequence_len` windows,
/// keeping only windows strictly before `split_window`.
std::vector<SequenceSample> make_sequences(const std::vector<Trajectory>& trajectories,
                                           const VesselRegistry& registry, const LstmAeConfig& cfg,
                                           const FeatureScaling& scaling, WindowIndex split_window);

enum class GradientFault : std::uint8_t { None, ForgetGate };

/// Loss summed over the sample's targeted windows, with analytic gradient
/// (backpropagation through time) accumulated into `grad` when non-empty.
template <class Real>
Real sequence_loss(const LstmAeLayout& layout, std::span<const Real> params, const SequenceSample& sample,
                   const LossWeights& weights, double reconstruction_weight, std::span<Real> grad,
                   GradientFault fault = GradientFault::None);

extern template double sequence_loss<double>(const LstmAeLayout&, std::span<const double>, const SequenceSample&,
                                             const LossWeights&, double, std::span<double>, GradientFault);
extern template long double sequence_loss<long double>(const LstmAeLayout&, std::span<const long double>,
                                                       const SequenceSample&, const LossWeights&, double,
                                                       std::span<long double>, GradientFault);

struct TrainResult {
  LstmAeParams params;
  std::vector<double> epoch_loss;  // mean per-window loss on the training set after each epoch
  double initial_loss = 0.0;
  bool diverged = false;
};

/// Mean per-window loss over all samples.
double dataset_loss(const LstmAeParams& params, const std::vector<SequenceSample>& samples,
                    const LossWeights& weights);

/// Mini-batch gradient descent with global-norm clipping.
TrainResult train(const std::vector<SequenceSample>& samples, const LstmAeConfig& cfg, const FeatureScaling& scaling,
                  const LossWeights& weights);
TrainResult train(const std::vector<SequenceSample>& samples, LstmAeParams initial, const LossWeights& weights);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
};

/// Compares the analytic gradient against central finite differences on a
/// random subset of parameters, both evaluated in extended precision.
GradientCheckResult gradient_check(const LstmAeParams& params, const SequenceSample& sample,
                                   const LossWeights& weights, double epsilon = 1e-5, std::size_t sample_count = 256,
                                   std::uint64_t seed = 1, GradientFault fault = GradientFault::None);

/// Causal bottleneck encoder: the feature at a window is computed from the
/// last `sequence_len` windows ending there, from a zero initial state.
class TemporalEncoder {
 public:
  explicit TemporalEncoder(LstmAeParams params);
  int dimension() const { return params_.config.bottleneck_dim; }
  int context() const { return params_.config.sequence_len; }
  const LstmAeParams& params() const { return params_; }
  /// `history` holds raw (unscaled) features; only the last `context()` entries are used.
  std::vector<double> encode(std::span<const RawStateFeatures> history) const;

 private:
  LstmAeParams params_;
};

using FeatureKey = std::pair<int, WindowIndex>;  // (trajectory id, window)
using TemporalFeatureMap = std::map<FeatureKey, std::vector<double>>;

TemporalFeatureMap extract_features(const TemporalEncoder& encoder, const std::vector<Trajectory>& trajectories,
                                    const VesselRegistry& registry);

void save_checkpoint(const std::filesystem::path& path, const LstmAeParams& params, const LossWeights& weights);
LstmAeParams load_checkpoint(const std::filesystem::path& path);

void write_feature_file(const std::filesystem::path& path, const TemporalFeatureMap& features);
TemporalFeatureMap read_feature_file(const std::filesystem::path& path);

}  // namespace portirl

#endif  // PORTIRL_LSTM_AE_HPP
