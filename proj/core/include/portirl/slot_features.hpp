#ifndef PORTIRL_SLOT_FEATURES_HPP
#define PORTIRL_SLOT_FEATURES_HPP

#include <span>
#include <vector>

#include "portirl/data_pipeline.hpp"
#include "portirl/lstm_ae.hpp"

namespace portirl {

/// Builds the per-slot context vector x(s, slot). The reward of a slot
/// action is read from the action's own weight block over x, so the
/// feature map of (s, slot, a) is onehot(a) (x) x.
///
/// Layout: bias; occupant zone one-hot; the occupant's size/carrier/staytime
/// repeated per zone; berth-free flags; free-berth, waiting and incoming
/// occupancy; the strongest competing candidate's attributes and the
/// competitor count; all 57 scaled raw state features; temporal features.
class SlotContextBuilder {
 public:
  SlotContextBuilder() = default;
  SlotContextBuilder(VesselRegistry registry, FeatureScaling scaling, int temporal_dim);

  int dimension() const;
  int temporal_dim() const { return temporal_dim_; }
  const FeatureScaling& scaling() const { return scaling_; }
  const VesselRegistry& registry() const { return registry_; }

  /// Context for every slot of `state`; rows for empty slots are still built.
  std::vector<std::vector<double>> build_all(const PortState& state, std::span<const double> temporal) const;
  std::vector<double> build(const PortState& state, std::span<const double> temporal, int slot) const;

  static constexpr int kHandcrafted = 1 + 3 + 9 + kBerthCount + 3 + 4;

 private:
  void fill(const PortState& state, const RawStateFeatures& scaled, std::span<const double> temporal, int slot,
            std::vector<double>& out) const;

  VesselRegistry registry_;
  FeatureScaling scaling_;
  int temporal_dim_ = 0;
};

}  // namespace portirl

#endif  // PORTIRL_SLOT_FEATURES_HPP
