#ifndef PORTIRL_MAXENT_IRL_HPP
#define PORTIRL_MAXENT_IRL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "portirl/port_model.hpp"
#include "portirl/slot_features.hpp"

namespace portirl {

enum class IrlMode : std::uint8_t { Exact, Factored };

/// How the state value is formed from Q. ExpectedQ is the policy-weighted
/// average of Q; LogSumExp is the usual soft maximum log Z.
enum class ValueDefinition : std::uint8_t { ExpectedQ, LogSumExp };

struct IrlConfig {
  double gamma = 0.9;
  double learning_rate = 0.1;
  int iterations = 200;
  double value_tol = 1e-10;
  int max_value_iterations = 200000;
  IrlMode mode = IrlMode::Exact;
  ValueDefinition v_definition = ValueDefinition::ExpectedQ;

  /// Defaults for the factored port model (no transition model, gamma = 0).
  static IrlConfig factored();
  void validate() const;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// R(s,a) = theta . phi(s,a).
double reward(std::span<const double> theta, std::span<const double> features);

// ---------------------------------------------------------------------------
// Exact mode: enumerable MDP with explicit features and transitions.

struct TabularAction {
  std::vector<double> features;
  std::vector<std::pair<int, double>> successors;  // (state, probability)
};

struct TabularState {
  std::vector<TabularAction> actions;
  bool terminal = false;  // value pinned at 0
};

struct TabularMdp {
  int feature_dim = 0;
  std::vector<TabularState> states;

  int state_count() const { return static_cast<int>(states.size()); }
};

struct SoftValues {
  std::vector<std::vector<double>> q;
  std::vector<double> v;
  std::vector<double> log_z;
  int iterations = 0;
  double residual = 0.0;

  double z(int state) const;
};

/// Fixed point of Q = R + gamma P V, pi = exp(Q)/Z, V from `cfg.v_definition`.
/// Synchronous sweeps starting from V = 0; `sweep_order` only sets the visiting
/// order (identity when empty) and does not change the result.
SoftValues soft_value_iteration(const TabularMdp& mdp, std::span<const double> theta, const IrlConfig& cfg,
                                std::span<const int> sweep_order = {});

/// pi(.|s) over the state's action list.
std::vector<double> policy(const SoftValues& values, int state);

struct Demonstration {
  int state = 0;
  int action = 0;
};

double log_likelihood(const TabularMdp& mdp, std::span<const Demonstration> data, std::span<const double> theta,
                      const IrlConfig& cfg);

/// Gradient through the converged fixed point: dV solves
/// dV = sum_a c(s,a) (phi + gamma P dV) by iterative accumulation.
std::vector<double> grad_log_likelihood(const TabularMdp& mdp, std::span<const Demonstration> data,
                                        std::span<const double> theta, const IrlConfig& cfg);

/// Central finite differences of log_likelihood against the analytic
/// gradient on every coordinate. Values are solved to at most 1e-13.
GradientCheckResult gradient_check(const TabularMdp& mdp, std::span<const Demonstration> data,
                                   std::span<const double> theta, const IrlConfig& cfg, double epsilon = 1e-5);

// ---------------------------------------------------------------------------
// Factored mode: one softmax per occupied slot over its legal actions.

enum class RewardKind : std::uint8_t { Linear, Mlp };

/// Reward over (slot context, slot action). Linear: one weight block of
/// context_dim per action. Mlp: shared tanh hidden layer, per-action output.
struct RewardParams {
  RewardKind kind = RewardKind::Linear;
  int context_dim = 0;
  int hidden = 32;
  std::vector<double> theta;

  static RewardParams linear(int context_dim);
  static RewardParams mlp(int context_dim, int hidden, std::uint64_t seed);
  std::size_t size() const { return theta.size(); }

  void action_rewards(std::span<const double> context, std::span<double, kActionCount> out) const;
  /// grad += sum_a coeff[a] * dR(context, a)/dtheta.
  void accumulate_gradient(std::span<const double> context, std::span<const double, kActionCount> coeff,
                           std::span<double> grad) const;
};

double reward(const RewardParams& params, std::span<const double> context, SlotAction action);

using SlotDistribution = std::array<double, kActionCount>;
using SlotDistributions = std::array<SlotDistribution, kSlotCount>;

/// Legal-masked softmax of the action rewards; illegal actions get exactly 0.
SlotDistribution masked_softmax(std::span<const double, kActionCount> scores, ActionSet legal);

struct SlotDecision {
  std::vector<double> context;
  ActionSet legal;
  SlotAction chosen = SlotAction::Nothing;
  int trajectory_id = 0;
  WindowIndex window = 0;
  int slot = 0;
};

struct FactoredDataset {
  int context_dim = 0;
  std::vector<SlotDecision> decisions;
};

double log_likelihood(const FactoredDataset& data, const RewardParams& params);
std::vector<double> grad_log_likelihood(const FactoredDataset& data, const RewardParams& params);

/// Decisions for every occupied slot of every step whose successor window
/// lies in [window_begin, window_end).
FactoredDataset build_factored_dataset(const std::vector<Trajectory>& trajectories, const SlotContextBuilder& builder,
                                       const TemporalFeatureMap& temporal, WindowIndex window_begin,
                                       WindowIndex window_end);

// ---------------------------------------------------------------------------

struct IterationLog {
  int iteration = 0;
  double log_likelihood = 0.0;
  double grad_norm = 0.0;
};

struct FitResult {
  std::vector<double> theta;  // best iterate
  std::vector<IterationLog> log;
  int best_iteration = 0;
  bool diverged = false;
};

/// Gradient ascent from theta = 0 with step lr * grad / N.
FitResult fit(const TabularMdp& mdp, std::span<const Demonstration> data, const IrlConfig& cfg);
/// Gradient ascent from `initial` (zero weights for the linear reward).
FitResult fit(const FactoredDataset& data, const RewardParams& initial, const IrlConfig& cfg);

/// Per-slot legal-masked softmax of the learned reward (gamma = 0: Q = R).
SlotDistributions predict_action_distribution(const RewardParams& params, const SlotContextBuilder& builder,
                                              const PortState& state, std::span<const double> temporal);

struct RewardCheckpoint {
  IrlConfig config;
  RewardParams params;
  SlotContextBuilder builder;
};

void save_reward(const std::filesystem::path& path, const RewardCheckpoint& checkpoint);
RewardCheckpoint load_reward(const std::filesystem::path& path);
void write_training_log(const std::filesystem::path& path, const std::vector<IterationLog>& log);

}  // namespace portirl

#endif  // PORTIRL_MAXENT_IRL_HPP
