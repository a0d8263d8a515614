#ifndef PORTIRL_FORECASTER_HPP
#define PORTIRL_FORECASTER_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "portirl/data_pipeline.hpp"
#include "portirl/lstm_ae.hpp"
#include "portirl/maxent_irl.hpp"
#include "portirl/port_model.hpp"

namespace portirl {

/// Source of per-slot action distributions. `decide` is called once per
/// window in order; stateful policies record the state as history.
class SlotPolicy {
 public:
  virtual ~SlotPolicy() = default;
  virtual SlotDistributions decide(const PortState& state) = 0;
  /// Records `state` as history without deciding.
  virtual void observe(const PortState& state) { (void)state; }
  virtual std::unique_ptr<SlotPolicy> clone() const = 0;
};

/// Learned reward policy, optionally conditioned on temporal features from
/// the states seen so far (the current state included).
class RewardPolicy final : public SlotPolicy {
 public:
  RewardPolicy(RewardParams params, SlotContextBuilder builder, std::optional<TemporalEncoder> encoder = std::nullopt);

  SlotDistributions decide(const PortState& state) override;
  void observe(const PortState& state) override;
  std::unique_ptr<SlotPolicy> clone() const override;
  void reset() { history_.clear(); }

 private:
  std::shared_ptr<const RewardParams> params_;
  std::shared_ptr<const SlotContextBuilder> builder_;
  std::shared_ptr<const TemporalEncoder> encoder_;
  std::vector<RawStateFeatures> history_;
};

/// Stateless policy backed by a function.
class FunctionPolicy final : public SlotPolicy {
 public:
  using Fn = std::function<SlotDistributions(const PortState&)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
  SlotDistributions decide(const PortState& state) override { return fn_(state); }
  std::unique_ptr<SlotPolicy> clone() const override { return std::make_unique<FunctionPolicy>(fn_); }

 private:
  Fn fn_;
};

enum class DecisionRule : std::uint8_t { Argmax, Sample };
/// Who keeps a berth claimed by several slots: HighestProbability ranks by
/// the probability of the contested action; LowestSlot by slot index only.
/// Ties always go to the lower slot index.
enum class ConflictPolicy : std::uint8_t { HighestProbability, LowestSlot };

struct ForecastConfig {
  int horizon = 1;
  DecisionRule decision_rule = DecisionRule::Argmax;
  std::uint64_t seed = 0;
  ConflictPolicy conflict_policy = ConflictPolicy::HighestProbability;

  void validate() const;
};

class ForecastError : public std::runtime_error {
 public:
  ForecastError(WindowIndex window, const std::string& what);
  WindowIndex window() const { return window_; }

 private:
  WindowIndex window_;
};

/// Turns per-slot distributions into a legal joint action: pick per slot,
/// resolve berth conflicts, then waiting-area overflow.
JointAction decide_joint(const PortState& state, const SlotDistributions& dists, const ForecastConfig& cfg,
                         std::mt19937_64& rng);

/// Drops arrivals that cannot enter after `action`: vessels still in port,
/// duplicates, and anything beyond the free incoming and waiting capacity.
std::vector<ArrivalEvent> admissible_arrivals(const PortState& state, const JointAction& action,
                                              std::span<const Imo> candidates);

/// Exogenous arrivals: vessels arriving in the given window.
using ArrivalStream = std::function<std::vector<Imo>(WindowIndex)>;
ArrivalStream no_arrivals();

/// `cfg.horizon` windows of decide -> resolve -> transition. `policy` is used
/// as is (its history advances).
Trajectory rollout(const PortState& initial, SlotPolicy& policy, const ArrivalStream& arrivals,
                   const ForecastConfig& cfg);

/// Congestion flag of the state one window ahead.
bool predict_congestion(const PortState& state, SlotPolicy& policy, const ArrivalStream& arrivals,
                        const ForecastConfig& cfg);

struct DepartureForecast {
  /// First window without the vessel (one after the state that executes
  /// LeaveSystem); nullopt when it is not predicted to leave within the horizon.
  std::optional<WindowIndex> window;
};

/// Rolls forward from the last state of `prefix` (earlier states warm the
/// policy history) and reports each vessel present in that state.
std::map<Imo, DepartureForecast> predict_departures(const std::vector<PortState>& prefix, const SlotPolicy& policy,
                                                    const ArrivalStream& arrivals, const ForecastConfig& cfg);

struct Accuracy {
  std::int64_t matches = 0;
  std::int64_t total = 0;
  /// matches / total, or nullopt on an empty denominator.
  std::optional<double> value() const;
};

/// Per-slot action matches. By default only entries whose true action is
/// not Nothing are counted.
Accuracy action_accuracy(std::span<const SlotAction> predicted, std::span<const SlotAction> truth,
                         bool include_nothing = false);
Accuracy action_accuracy(std::span<const JointAction> predicted, std::span<const JointAction> truth,
                         bool include_nothing = false);

/// Exact-equality matches of aligned event sequences.
template <class P, class T>
Accuracy event_accuracy(const P& predicted, const T& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("event sequences differ in length");
  Accuracy a;
  a.total = static_cast<std::int64_t>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (predicted[i] == truth[i]) ++a.matches;
  return a;
}

struct EvaluationConfig {
  WindowIndex split_window = 0;  // transitions into windows >= split are scored
  bool include_nothing = false;
  ForecastConfig forecast;
  int departure_horizon = 0;  // 0: rest of the segment
};

struct CongestionPoint {
  int trajectory_id = 0;
  WindowIndex window = 0;  // window being forecast
  bool predicted = false;
  bool actual = false;
};

struct DeparturePoint {
  int trajectory_id = 0;
  Imo imo = kEmpty;
  WindowIndex berth_window = 0;
  std::optional<WindowIndex> predicted;
  WindowIndex actual = 0;
};

struct EvaluationReport {
  Accuracy action;
  Accuracy congestion;
  Accuracy leave;
  SlotAction majority_action = SlotAction::Nothing;
  Accuracy action_baseline;
  bool majority_congestion = false;
  Accuracy congestion_baseline;
  std::array<std::array<std::int64_t, kActionCount>, kActionCount> confusion{};  // [true][predicted]
  std::vector<CongestionPoint> congestion_timeline;
  std::vector<DeparturePoint> departures;
};

EvaluationReport evaluate(const std::vector<Trajectory>& trajectories, const SlotPolicy& policy,
                          const EvaluationConfig& cfg);

void write_report(const std::filesystem::path& path, const EvaluationReport& report, const EvaluationConfig& cfg);
void write_congestion_csv(const std::filesystem::path& path, const EvaluationReport& report);
void write_departure_csv(const std::filesystem::path& path, const EvaluationReport& report);

}  // namespace portirl

#endif  // PORTIRL_FORECASTER_HPP
