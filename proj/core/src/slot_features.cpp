#include "portirl/slot_features.hpp"

#include <algorithm>
#include <stdexcept>

namespace portirl {

SlotContextBuilder::SlotContextBuilder(VesselRegistry registry, FeatureScaling scaling, int temporal_dim)
    : registry_(std::move(registry)), scaling_(scaling), temporal_dim_(temporal_dim) {
  if (temporal_dim < 0) throw std::invalid_argument("temporal dimension must be non-negative");
}

int SlotContextBuilder::dimension() const { return kHandcrafted + kRawFeatureCount + temporal_dim_; }

std::vector<std::vector<double>> SlotContextBuilder::build_all(const PortState& state,
                                                               std::span<const double> temporal) const {
  if (static_cast<int>(temporal.size()) != temporal_dim_)
    throw std::invalid_argument("temporal feature has dimension " + std::to_string(temporal.size()) + ", expected " +
                                std::to_string(temporal_dim_));
  const auto scaled = scaling_.apply(expand_features(state, registry_));
  std::vector<std::vector<double>> out(kSlotCount);
  for (int i = 0; i < kSlotCount; ++i) fill(state, scaled, temporal, i, out[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<double> SlotContextBuilder::build(const PortState& state, std::span<const double> temporal,
                                              int slot) const {
  if (slot < 0 || slot >= kSlotCount) throw std::out_of_range("slot index " + std::to_string(slot));
  if (static_cast<int>(temporal.size()) != temporal_dim_)
    throw std::invalid_argument("temporal feature dimension mismatch");
  const auto scaled = scaling_.apply(expand_features(state, registry_));
  std::vector<double> out;
  fill(state, scaled, temporal, slot, out);
  return out;
}

void SlotContextBuilder::fill(const PortState& state, const RawStateFeatures& scaled, std::span<const double> temporal,
                              int slot, std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(dimension()), 0.0);
  auto at = [&](int i) -> double& { return out[static_cast<std::size_t>(i)]; };
  const auto own = static_cast<std::size_t>(3 * slot);
  const int zone = static_cast<int>(SlotIndex(slot).zone());

  int k = 0;
  at(k++) = 1.0;
  at(k + zone) = state.occupied(slot) ? 1.0 : 0.0;
  k += 3;
  for (int f = 0; f < 3; ++f) at(k + 3 * zone + f) = scaled[own + static_cast<std::size_t>(f)];
  k += 9;

  int free_berths = 0;
  for (int b = 0; b < kBerthCount; ++b) {
    const bool free = !state.occupied(b);
    at(k++) = free ? 1.0 : 0.0;
    free_berths += free ? 1 : 0;
  }
  at(k++) = free_berths / static_cast<double>(kBerthCount);
  at(k++) = waiting_count(state) / static_cast<double>(kWaitingCount);
  at(k++) = state.incoming_count() / static_cast<double>(kIncomingCount);

  // Strongest competing candidate among the other waiting and incoming vessels.
  double best[3] = {0.0, 0.0, 0.0};
  int rivals = 0;
  for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) {
    if (i == slot || !state.occupied(i)) continue;
    ++rivals;
    for (int f = 0; f < 3; ++f) best[f] = std::max(best[f], scaled[static_cast<std::size_t>(3 * i + f)]);
  }
  for (double v : best) at(k++) = v;
  at(k++) = rivals / static_cast<double>(kWaitingCount + kIncomingCount);

  for (double v : scaled) at(k++) = v;
  for (double v : temporal) at(k++) = v;
}

}  // namespace portirl
