#ifndef PORTIRL_TESTS_HELPERS_HPP
#define PORTIRL_TESTS_HELPERS_HPP

#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <utility>

#include "portirl/port_model.hpp"

namespace portirl::test {

/// State with the given (slot, imo) occupants, each with staytime 1.
inline PortState make_state(std::initializer_list<std::pair<int, Imo>> occupants, WindowIndex window = 100) {
  PortState s;
  s.window = window;
  for (auto [slot, imo] : occupants) {
    s.slots[static_cast<std::size_t>(slot)] = imo;
    s.staytimes[static_cast<std::size_t>(slot)] = 1;
  }
  return s;
}

/// Fresh, empty scratch directory below the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("portirl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Uniformly random legal joint action; conflicting berth moves and
/// overflowing entrants fall back to Stay / the first legal alternative.
inline JointAction random_legal_action(const PortState& s, std::mt19937_64& rng) {
  JointAction a;
  std::array<bool, kBerthCount> taken{};
  int waiting = 0;
  for (int i = kFirstWaitingSlot; i < kFirstIncomingSlot; ++i)
    if (s.occupied(i)) ++waiting;
  // Decide waiting vessels first so that entrants see the final occupancy.
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < kSlotCount; ++i) {
      const bool incoming = SlotIndex(i).zone() == Zone::Incoming;
      if ((pass == 0) == incoming || !s.occupied(i)) continue;
      auto options = legal_actions(s, SlotIndex(i)).to_vector();
      std::erase_if(options, [&](SlotAction x) {
        if (is_berth_move(x) && taken[static_cast<std::size_t>(target_berth(x))]) return true;
        return x == SlotAction::GoToWaiting && waiting >= kWaitingCount;
      });
      const SlotAction pick = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
      if (is_berth_move(pick)) {
        taken[static_cast<std::size_t>(target_berth(pick))] = true;
        if (SlotIndex(i).zone() == Zone::Waiting) --waiting;
      }
      if (pick == SlotAction::GoToWaiting) ++waiting;
      a[i] = pick;
    }
  }
  return a;
}

}  // namespace portirl::test

#endif  // PORTIRL_TESTS_HELPERS_HPP
