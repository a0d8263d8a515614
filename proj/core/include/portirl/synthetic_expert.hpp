#ifndef PORTIRL_SYNTHETIC_EXPERT_HPP
#define PORTIRL_SYNTHETIC_EXPERT_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "portirl/data_pipeline.hpp"
#include "portirl/port_model.hpp"

namespace portirl {

struct FleetConfig {
  int n_vessels = 40;
  int size_classes = 3;
  int carriers = 5;
  std::uint64_t seed = 7;

  void validate() const;
};

inline constexpr Imo kFleetFirstImo = 9100001;

/// Fleet of `n_vessels` recurring vessels with random size class and carrier.
VesselRegistry make_fleet(const FleetConfig& cfg);

/// Rule-based scheduler. Berth occupants leave once they have served their
/// size class's duration. Free berths, lowest first, go to the waiting or
/// incoming vessel with the highest priority score (lower slot on ties).
/// Remaining incoming vessels enter the waiting area.
struct ExpertRule {
  double w_size = 1.0;
  double w_carrier = 0.5;
  double w_wait = 2.0;
  /// Windows of berth service per size class (index 0 = class 1). Classes
  /// beyond the list use size + 1.
  std::vector<int> service_windows;

  int service_for(int size_class) const;
  double score(const VesselAttrs& attrs, int staytime) const;
  JointAction decide(const PortState& state, const VesselRegistry& registry) const;
  void validate() const;
};

struct SyntheticConfig {
  FleetConfig fleet;
  ExpertRule rule;
  int horizon = 2000;
  double arrival_probability = 0.26;
  std::uint64_t seed = 7;
  WindowIndex first_window = 55555;
  int window_hours = 8;

  void validate() const;
};

struct SyntheticDataset {
  VesselRegistry registry;
  std::vector<VisitRecord> visits;
  /// Every simulated window from the first arrival until the port is empty
  /// again, with the arrivals that entered each state.
  Timeline timeline;
  /// The expert's own actions between consecutive timeline states.
  std::vector<JointAction> actions;
};

/// Simulates the expert under Bernoulli arrivals (one draw per free incoming
/// slot, capped by waiting capacity) for `horizon` windows, then lets the
/// port drain without arrivals. Visit timestamps are chosen so that
/// discretizing them reproduces the timeline exactly.
SyntheticDataset generate_dataset(const SyntheticConfig& cfg);

void write_arrivals(const std::filesystem::path& path, const Timeline& timeline);

}  // namespace portirl

#endif  // PORTIRL_SYNTHETIC_EXPERT_HPP
