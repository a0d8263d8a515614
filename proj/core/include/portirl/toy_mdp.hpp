#ifndef PORTIRL_TOY_MDP_HPP
#define PORTIRL_TOY_MDP_HPP

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "portirl/maxent_irl.hpp"

namespace portirl {

/// Miniature port: the same slot structure and movement rules with generic
/// counts, vessel types instead of identities and no staytime.
struct ToyMdpConfig {
  int n_berths = 2;
  int n_waiting = 2;
  int n_incoming = 1;
  int alphabet = 2;
  double arrival_probability = 0.3;
  std::size_t max_states = 1000000;

  void validate() const;
};

/// Slot kinds for toy actions.
enum class ToyMove : std::uint8_t { Nothing, Stay, GoToWaiting, GoToBerth, Leave };

struct ToySlotAction {
  ToyMove move = ToyMove::Nothing;
  int berth = -1;  // target for GoToBerth
  friend auto operator<=>(const ToySlotAction&, const ToySlotAction&) = default;
};

/// Types per slot (0 = empty): berths, then the compacted waiting queue,
/// then the compacted incoming strip.
using ToyState = std::vector<int>;
using ToyJointAction = std::vector<ToySlotAction>;

struct ToyMdp {
  ToyMdpConfig config;
  std::vector<ToyState> states;  // states[0] is the empty port
  std::vector<std::vector<ToyJointAction>> actions;
  TabularMdp tabular;
  std::map<ToyState, int> index;

  /// Feature count of the (zone, type, move) indicator encoding.
  static int feature_dim(const ToyMdpConfig& cfg);
};

/// Breadth-first enumeration of everything reachable from the empty port.
/// The empty port is terminal (value pinned at 0). Features count, per
/// joint action, the slots taking each (zone, vessel type, move) triple.
ToyMdp enumerate_toy_mdp(const ToyMdpConfig& cfg);

/// Deterministic movement followed by arrivals; returns successor states
/// with probabilities. Arrivals beyond the free capacity are turned away.
std::vector<std::pair<ToyState, double>> toy_successors(const ToyMdpConfig& cfg, const ToyState& state,
                                                        const ToyJointAction& action);

/// All legal joint actions of a toy state.
std::vector<ToyJointAction> toy_joint_actions(const ToyMdpConfig& cfg, const ToyState& state);

/// Independent count of valid toy configurations: berths hold any type or
/// nothing, and the incoming strip never holds more vessels than the free
/// waiting places.
std::size_t count_toy_states(const ToyMdpConfig& cfg);

/// Horizon-H backward recursion of the soft Bellman system starting from
/// V = 0, with terminal values held at 0.
std::vector<double> brute_force_soft_values(const TabularMdp& mdp, std::span<const double> theta, double gamma,
                                            int horizon, ValueDefinition def = ValueDefinition::ExpectedQ);

/// Samples `count` decisions by running `pi` from the empty port; episodes
/// restart at the empty port and terminal states are not recorded.
std::vector<Demonstration> sample_demonstrations(const TabularMdp& mdp, const SoftValues& pi, int count,
                                                 std::uint64_t seed, int start_state = 0);

}  // namespace portirl

#endif  // PORTIRL_TOY_MDP_HPP
