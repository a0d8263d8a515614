#include "portirl/port_model.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <unordered_set>

namespace portirl {

namespace {

constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "Nothing",    "Stay",       "GoToWaiting", "GoToBerth1", "GoToBerth2",
    "GoToBerth3", "GoToBerth4", "GoToBerth5",  "GoToBerth6", "LeaveSystem"};

std::string slot_label(int slot) {
  std::ostringstream os;
  os << "slot " << slot;
  return os.str();
}

void add(ValidationReport& report, int slot, ViolationKind kind, std::string message) {
  report.violations.push_back(Violation{slot, kind, std::move(message)});
}

}  // namespace

std::string_view action_name(SlotAction a) {
  return kActionNames[static_cast<std::size_t>(action_position(a))];
}

std::optional<SlotAction> action_from_index(int index) {
  if (index < 1 || index > kActionCount) return std::nullopt;
  return static_cast<SlotAction>(index);
}

int ActionSet::size() const { return std::popcount(bits_); }

std::vector<SlotAction> ActionSet::to_vector() const {
  std::vector<SlotAction> out;
  for (auto a : kAllActions)
    if (contains(a)) out.push_back(a);
  return out;
}

bool PortState::empty() const {
  return std::all_of(slots.begin(), slots.end(), [](Imo v) { return v == kEmpty; });
}

int PortState::occupied_count() const {
  return static_cast<int>(std::count_if(slots.begin(), slots.end(), [](Imo v) { return v != kEmpty; }));
}

int PortState::berth_count() const {
  int n = 0;
  for (int i = 0; i < kBerthCount; ++i) n += occupied(i) ? 1 : 0;
  return n;
}

int PortState::incoming_count() const {
  int n = 0;
  for (int i = kFirstIncomingSlot; i < kSlotCount; ++i) n += occupied(i) ? 1 : 0;
  return n;
}

std::optional<int> PortState::find(Imo imo) const {
  if (imo == kEmpty) return std::nullopt;
  for (int i = 0; i < kSlotCount; ++i)
    if (slots[static_cast<std::size_t>(i)] == imo) return i;
  return std::nullopt;
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].message;
  }
  return os.str();
}

TransitionError::TransitionError(ValidationReport report)
    : std::runtime_error("rejected transition: " + report.summary()), report_(std::move(report)) {}

DecodeError::DecodeError(int block, const std::string& what)
    : std::runtime_error("malformed action block " + std::to_string(block) + ": " + what), block_(block) {}

int waiting_count(const PortState& state) {
  int n = 0;
  for (int i = kFirstWaitingSlot; i < kFirstIncomingSlot; ++i) n += state.occupied(i) ? 1 : 0;
  return n;
}

bool is_congested(const PortState& state) { return waiting_count(state) >= kCongestionThreshold; }

ActionSet legal_actions(const PortState& state, SlotIndex slot) {
  if (!state.occupied(slot.value())) return {SlotAction::Nothing};

  ActionSet set;
  switch (slot.zone()) {
    case Zone::Berth:
      set.insert(SlotAction::Stay);
      set.insert(SlotAction::LeaveSystem);
      return set;
    case Zone::Waiting:
      set.insert(SlotAction::Stay);
      break;
    case Zone::Incoming:
      if (waiting_count(state) < kWaitingCount) set.insert(SlotAction::GoToWaiting);
      break;
  }
  for (int b = 0; b < kBerthCount; ++b)
    if (!state.occupied(b)) set.insert(go_to_berth(b));
  return set;
}

ValidationReport validate_joint_action(const PortState& state, const JointAction& action) {
  ValidationReport report;
  std::array<int, kBerthCount> claimed;
  claimed.fill(-1);
  int waiting_after = 0;

  for (int i = 0; i < kSlotCount; ++i) {
    const SlotIndex slot(i);
    const SlotAction a = action[i];
    if (!legal_actions(state, slot).contains(a)) {
      add(report, i, ViolationKind::IllegalSlotAction,
          slot_label(i) + ": illegal action " + std::string(action_name(a)));
      continue;
    }
    if (is_berth_move(a)) {
      const int b = target_berth(a);
      if (claimed[static_cast<std::size_t>(b)] >= 0) {
        add(report, i, ViolationKind::BerthConflict,
            slot_label(i) + ": berth " + std::to_string(b + 1) + " already targeted by " +
                slot_label(claimed[static_cast<std::size_t>(b)]));
      } else {
        claimed[static_cast<std::size_t>(b)] = i;
      }
    }
    if ((slot.zone() == Zone::Waiting && a == SlotAction::Stay) || a == SlotAction::GoToWaiting) ++waiting_after;
  }
  if (waiting_after > kWaitingCount) {
    add(report, -1, ViolationKind::WaitingOverflow,
        "waiting area would hold " + std::to_string(waiting_after) + " vessels");
  }
  return report;
}

int waiting_after_movement(const PortState& state, const JointAction& action) {
  int n = 0;
  for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) {
    if (!state.occupied(i)) continue;
    const SlotAction a = action[i];
    if ((i < kFirstIncomingSlot && a == SlotAction::Stay) || a == SlotAction::GoToWaiting) ++n;
  }
  return n;
}

PortState apply_transition(const PortState& state, const JointAction& action,
                           std::span<const ArrivalEvent> arrivals) {
  ValidationReport report = validate_joint_action(state, action);
  if (arrivals.size() > static_cast<std::size_t>(kIncomingCount)) {
    add(report, -1, ViolationKind::BadArrival,
        std::to_string(arrivals.size()) + " arrivals exceed the incoming capacity");
  }
  std::unordered_set<Imo> seen;
  for (const auto& ev : arrivals) {
    if (ev.imo == kEmpty) {
      add(report, -1, ViolationKind::BadArrival, "arrival with empty imo");
    } else if (ev.window != state.window + 1) {
      add(report, -1, ViolationKind::BadArrival,
          "arrival of imo " + std::to_string(ev.imo) + " is stamped for window " + std::to_string(ev.window));
    } else if (state.find(ev.imo) && action[*state.find(ev.imo)] != SlotAction::LeaveSystem) {
      add(report, -1, ViolationKind::BadArrival, "arriving imo " + std::to_string(ev.imo) + " is still in port");
    } else if (!seen.insert(ev.imo).second) {
      add(report, -1, ViolationKind::BadArrival, "imo " + std::to_string(ev.imo) + " arrives twice");
    }
  }
  if (!report.ok()) throw TransitionError(std::move(report));

  PortState next;
  next.window = state.window + 1;

  auto place = [&next](int slot, Imo imo, int stay) {
    next.slots[static_cast<std::size_t>(slot)] = imo;
    next.staytimes[static_cast<std::size_t>(slot)] = stay;
  };

  for (int i = 0; i < kSlotCount; ++i) {
    const SlotAction a = action[i];
    const Imo imo = state.slots[static_cast<std::size_t>(i)];
    if (i < kBerthCount && a == SlotAction::Stay) place(i, imo, state.staytimes[static_cast<std::size_t>(i)] + 1);
    if (is_berth_move(a)) place(target_berth(a), imo, 1);
  }

  // Waiting area: stayers keep their relative order, then entrants in source-slot order.
  int w = kFirstWaitingSlot;
  for (int i = kFirstWaitingSlot; i < kFirstIncomingSlot; ++i)
    if (action[i] == SlotAction::Stay) place(w++, state.slots[static_cast<std::size_t>(i)], state.staytimes[static_cast<std::size_t>(i)] + 1);
  for (int i = kFirstIncomingSlot; i < kSlotCount; ++i)
    if (action[i] == SlotAction::GoToWaiting) place(w++, state.slots[static_cast<std::size_t>(i)], 1);

  // Every incoming vessel has moved on, so arrivals fill the strip from its first slot.
  int in = kFirstIncomingSlot;
  for (const auto& ev : arrivals) place(in++, ev.imo, 1);
  return next;
}

std::array<double, kActionVectorSize> encode_action(const JointAction& action) {
  std::array<double, kActionVectorSize> out{};
  for (int i = 0; i < kSlotCount; ++i) {
    const SlotAction a = action[i];
    if (a == SlotAction::Nothing) continue;
    out[static_cast<std::size_t>(i * kActionCount + action_position(a))] = 1.0;
  }
  return out;
}

JointAction decode_action(std::span<const double> encoded) {
  if (encoded.size() != static_cast<std::size_t>(kActionVectorSize))
    throw DecodeError(-1, "expected " + std::to_string(kActionVectorSize) + " values, got " +
                              std::to_string(encoded.size()));
  JointAction out;
  for (int b = 0; b < kSlotCount; ++b) {
    int hot = -1;
    for (int k = 0; k < kActionCount; ++k) {
      const double v = encoded[static_cast<std::size_t>(b * kActionCount + k)];
      if (v == 0.0) continue;
      if (v != 1.0) throw DecodeError(b, "non-binary value at position " + std::to_string(k));
      if (hot >= 0) throw DecodeError(b, "more than one bit set");
      hot = k;
    }
    out[b] = hot < 0 ? SlotAction::Nothing : action_at_position(hot);
  }
  return out;
}

std::vector<std::string> check_invariants(const PortState& state) {
  std::vector<std::string> problems;
  std::unordered_set<Imo> seen;
  bool gap = false;
  for (int i = 0; i < kSlotCount; ++i) {
    const Imo imo = state.slots[static_cast<std::size_t>(i)];
    const int stay = state.staytimes[static_cast<std::size_t>(i)];
    if (imo == kEmpty) {
      if (stay != 0) problems.push_back(slot_label(i) + ": empty slot with staytime " + std::to_string(stay));
      if (i >= kFirstWaitingSlot && i < kFirstIncomingSlot) gap = true;
      continue;
    }
    if (stay < 1) problems.push_back(slot_label(i) + ": occupant with staytime " + std::to_string(stay));
    if (!seen.insert(imo).second) problems.push_back(slot_label(i) + ": duplicate imo " + std::to_string(imo));
    if (gap && i >= kFirstWaitingSlot && i < kFirstIncomingSlot)
      problems.push_back(slot_label(i) + ": waiting area not compacted");
  }
  for (int i = kFirstIncomingSlot; i < kSlotCount; ++i)
    if (state.occupied(i) && legal_actions(state, SlotIndex(i)).empty())
      problems.push_back(slot_label(i) + ": incoming vessel has nowhere to go");
  return problems;
}

}  // namespace portirl
