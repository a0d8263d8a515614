#ifndef PORTIRL_PORT_MODEL_HPP
#define PORTIRL_PORT_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace portirl {

// Slot layout of a port snapshot: berths first, then the waiting area, then
// the incoming strip.
inline constexpr int kBerthCount = 6;
inline constexpr int kWaitingCount = 7;
inline constexpr int kIncomingCount = 6;
inline constexpr int kSlotCount = kBerthCount + kWaitingCount + kIncomingCount;
inline constexpr int kFirstWaitingSlot = kBerthCount;
inline constexpr int kFirstIncomingSlot = kBerthCount + kWaitingCount;

inline constexpr int kActionCount = 10;
inline constexpr int kActionVectorSize = kSlotCount * kActionCount;

// Waiting-area occupancy at which a state counts as congested.
inline constexpr int kCongestionThreshold = 3;

/// IMO number of a vessel. Zero marks an empty slot.
using Imo = std::uint32_t;
inline constexpr Imo kEmpty = 0;

/// Count of fixed-width time windows since the epoch.
using WindowIndex = std::int64_t;

enum class Zone : std::uint8_t { Berth, Waiting, Incoming };

/// Position of a slot inside the 19-slot port vector.
class SlotIndex {
 public:
  constexpr SlotIndex() = default;
  constexpr explicit SlotIndex(int index) : index_(index) {}

  static constexpr SlotIndex berth(int offset) { return SlotIndex(offset); }
  static constexpr SlotIndex waiting(int offset) { return SlotIndex(kFirstWaitingSlot + offset); }
  static constexpr SlotIndex incoming(int offset) { return SlotIndex(kFirstIncomingSlot + offset); }

  constexpr int value() const { return index_; }
  constexpr bool valid() const { return index_ >= 0 && index_ < kSlotCount; }

  constexpr Zone zone() const {
    if (index_ < kFirstWaitingSlot) return Zone::Berth;
    if (index_ < kFirstIncomingSlot) return Zone::Waiting;
    return Zone::Incoming;
  }

  constexpr int offset() const {
    switch (zone()) {
      case Zone::Berth: return index_;
      case Zone::Waiting: return index_ - kFirstWaitingSlot;
      case Zone::Incoming: return index_ - kFirstIncomingSlot;
    }
    return -1;
  }

  friend constexpr bool operator==(SlotIndex, SlotIndex) = default;

 private:
  int index_ = 0;
};

/// Per-slot scheduling instruction. Values follow the published action table
/// (1-based); the one-hot position inside a 10-entry block is value - 1.
enum class SlotAction : std::uint8_t {
  Nothing = 1,
  Stay = 2,
  GoToWaiting = 3,
  GoToBerth1 = 4,
  GoToBerth2 = 5,
  GoToBerth3 = 6,
  GoToBerth4 = 7,
  GoToBerth5 = 8,
  GoToBerth6 = 9,
  LeaveSystem = 10,
};

inline constexpr std::array<SlotAction, kActionCount> kAllActions = {
    SlotAction::Nothing,    SlotAction::Stay,       SlotAction::GoToWaiting, SlotAction::GoToBerth1,
    SlotAction::GoToBerth2, SlotAction::GoToBerth3, SlotAction::GoToBerth4,  SlotAction::GoToBerth5,
    SlotAction::GoToBerth6, SlotAction::LeaveSystem};

constexpr int action_index(SlotAction a) { return static_cast<int>(a); }
constexpr int action_position(SlotAction a) { return static_cast<int>(a) - 1; }
constexpr SlotAction action_at_position(int position) { return static_cast<SlotAction>(position + 1); }

constexpr bool is_berth_move(SlotAction a) {
  return a >= SlotAction::GoToBerth1 && a <= SlotAction::GoToBerth6;
}
/// 0-based berth targeted by a GoToBerth action.
constexpr int target_berth(SlotAction a) { return static_cast<int>(a) - static_cast<int>(SlotAction::GoToBerth1); }
constexpr SlotAction go_to_berth(int berth) {
  return static_cast<SlotAction>(static_cast<int>(SlotAction::GoToBerth1) + berth);
}

std::string_view action_name(SlotAction a);
std::optional<SlotAction> action_from_index(int index);

/// Small set of slot actions backed by a bit mask.
class ActionSet {
 public:
  constexpr ActionSet() = default;
  constexpr ActionSet(std::initializer_list<SlotAction> actions) {
    for (auto a : actions) insert(a);
  }

  constexpr void insert(SlotAction a) { bits_ |= bit(a); }
  constexpr void erase(SlotAction a) { bits_ &= static_cast<std::uint16_t>(~bit(a)); }
  constexpr bool contains(SlotAction a) const { return (bits_ & bit(a)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  int size() const;
  std::vector<SlotAction> to_vector() const;
  constexpr std::uint16_t mask() const { return bits_; }

  friend constexpr bool operator==(ActionSet, ActionSet) = default;

 private:
  static constexpr std::uint16_t bit(SlotAction a) {
    return static_cast<std::uint16_t>(1u << action_position(a));
  }
  std::uint16_t bits_ = 0;
};

struct ArrivalEvent {
  Imo imo = kEmpty;
  WindowIndex window = 0;
  friend bool operator==(const ArrivalEvent&, const ArrivalEvent&) = default;
};

/// Snapshot of the port during one time window.
struct PortState {
  std::array<Imo, kSlotCount> slots{};
  /// Windows the occupant has spent in its current slot (0 for empty slots).
  std::array<int, kSlotCount> staytimes{};
  WindowIndex window = 0;

  Imo at(SlotIndex s) const { return slots[static_cast<std::size_t>(s.value())]; }
  bool occupied(int slot) const { return slots[static_cast<std::size_t>(slot)] != kEmpty; }
  bool empty() const;
  int occupied_count() const;
  int berth_count() const;
  int incoming_count() const;
  std::optional<int> find(Imo imo) const;

  friend bool operator==(const PortState&, const PortState&) = default;
};

struct JointAction {
  std::array<SlotAction, kSlotCount> actions;

  JointAction() { actions.fill(SlotAction::Nothing); }
  SlotAction& operator[](int slot) { return actions[static_cast<std::size_t>(slot)]; }
  SlotAction operator[](int slot) const { return actions[static_cast<std::size_t>(slot)]; }

  friend bool operator==(const JointAction&, const JointAction&) = default;
};

enum class ViolationKind : std::uint8_t {
  IllegalSlotAction,
  BerthConflict,
  WaitingOverflow,
  BadArrival,
};

struct Violation {
  int slot = -1;
  ViolationKind kind = ViolationKind::IllegalSlotAction;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

class TransitionError : public std::runtime_error {
 public:
  explicit TransitionError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(int block, const std::string& what);
  int block() const { return block_; }

 private:
  int block_;
};

ActionSet legal_actions(const PortState& state, SlotIndex slot);

ValidationReport validate_joint_action(const PortState& state, const JointAction& action);

/// Applies a validated joint action and places the exogenous arrivals of the
/// next window. Throws TransitionError on any violated precondition.
PortState apply_transition(const PortState& state, const JointAction& action,
                           std::span<const ArrivalEvent> arrivals);

/// Waiting-area occupancy left after the movers of `action` have moved.
int waiting_after_movement(const PortState& state, const JointAction& action);

std::array<double, kActionVectorSize> encode_action(const JointAction& action);
JointAction decode_action(std::span<const double> encoded);

int waiting_count(const PortState& state);
bool is_congested(const PortState& state);

/// Checks every structural PortState invariant; returns the violated ones.
std::vector<std::string> check_invariants(const PortState& state);

}  // namespace portirl

#endif  // PORTIRL_PORT_MODEL_HPP
