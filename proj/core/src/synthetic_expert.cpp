#include "portirl/synthetic_expert.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>

namespace portirl {

void FleetConfig::validate() const {
  if (n_vessels < 1 || size_classes < 1 || carriers < 1)
    throw std::invalid_argument("fleet counts must be at least 1");
}

VesselRegistry make_fleet(const FleetConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> size(1, cfg.size_classes);
  std::uniform_int_distribution<int> carrier(1, cfg.carriers);
  VesselRegistry reg;
  for (int i = 0; i < cfg.n_vessels; ++i) {
    VesselAttrs a;
    a.size_class = size(rng);
    a.carrier_code = carrier(rng);
    reg.add(kFleetFirstImo + static_cast<Imo>(i), a);
  }
  return reg;
}

int ExpertRule::service_for(int size_class) const {
  const auto k = static_cast<std::size_t>(size_class - 1);
  return k < service_windows.size() ? service_windows[k] : size_class + 1;
}

double ExpertRule::score(const VesselAttrs& attrs, int staytime) const {
  return w_size * attrs.size_class + w_carrier * attrs.carrier_code + w_wait * staytime;
}

void ExpertRule::validate() const {
  for (int s : service_windows)
    if (s < 1) throw std::invalid_argument("service duration must be at least one window");
}

JointAction ExpertRule::decide(const PortState& state, const VesselRegistry& registry) const {
  auto attrs = [&](int slot) -> const VesselAttrs& {
    const VesselAttrs* a = registry.find(state.slots[static_cast<std::size_t>(slot)]);
    if (!a) throw std::invalid_argument("vessel in slot " + std::to_string(slot) + " is not in the registry");
    return *a;
  };
  JointAction ja;
  for (int b = 0; b < kBerthCount; ++b) {
    if (!state.occupied(b)) continue;
    const bool done = state.staytimes[static_cast<std::size_t>(b)] >= service_for(attrs(b).size_class);
    ja[b] = done ? SlotAction::LeaveSystem : SlotAction::Stay;
  }

  std::vector<int> candidates;
  for (int i = kFirstWaitingSlot; i < kSlotCount; ++i)
    if (state.occupied(i)) candidates.push_back(i);
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return score(attrs(a), state.staytimes[static_cast<std::size_t>(a)]) >
           score(attrs(b), state.staytimes[static_cast<std::size_t>(b)]);
  });
  std::size_t next = 0;
  for (int b = 0; b < kBerthCount && next < candidates.size(); ++b)
    if (!state.occupied(b)) ja[candidates[next++]] = go_to_berth(b);

  for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) {
    if (!state.occupied(i) || ja[i] != SlotAction::Nothing) continue;
    ja[i] = i < kFirstIncomingSlot ? SlotAction::Stay : SlotAction::GoToWaiting;
  }
  return ja;
}

void SyntheticConfig::validate() const {
  fleet.validate();
  rule.validate();
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  if (!(arrival_probability >= 0.0 && arrival_probability <= 1.0))
    throw std::invalid_argument("arrival probability must lie in [0, 1]");
  if (window_hours < 1) throw std::invalid_argument("window length must be at least one hour");
}

namespace {

struct OpenVisit {
  VisitRecord rec;
  WindowIndex arrival_window = 0;
  WindowIndex berth_first = 0;
};

}  // namespace

SyntheticDataset generate_dataset(const SyntheticConfig& cfg) {
  cfg.validate();
  SyntheticDataset out;
  out.registry = make_fleet(cfg.fleet);
  const auto fleet = out.registry.sorted();
  const Timestamp wsec = static_cast<Timestamp>(cfg.window_hours) * 3600;

  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution arrive(cfg.arrival_probability);
  std::uniform_int_distribution<Timestamp> jitter(0, 1200);

  std::map<Imo, OpenVisit> open;
  std::vector<PortState> states;
  std::vector<std::vector<ArrivalEvent>> arrivals;
  std::vector<JointAction> actions;

  PortState s;
  s.window = cfg.first_window;
  states.push_back(s);
  arrivals.emplace_back();
  for (WindowIndex k = 0;; ++k) {
    const bool generating = k < cfg.horizon;
    if (!generating && s.empty()) break;
    const JointAction ja = cfg.rule.decide(s, out.registry);

    std::vector<ArrivalEvent> events;
    if (generating) {
      const int cap = std::min(kIncomingCount, kWaitingCount - waiting_after_movement(s, ja));
      int wanted = 0;
      for (int j = 0; j < kIncomingCount; ++j) wanted += arrive(rng) ? 1 : 0;
      std::vector<Imo> pool;
      for (const auto& [imo, attrs] : fleet) {
        const auto slot = s.find(imo);
        if (!slot || ja[*slot] == SlotAction::LeaveSystem) pool.push_back(imo);
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      const int n = std::min({wanted, cap, static_cast<int>(pool.size())});
      for (int j = 0; j < n; ++j) events.push_back({pool[static_cast<std::size_t>(j)], s.window + 1});
    }

    // Close visits that leave now, open visits for the newcomers.
    for (int b = 0; b < kBerthCount; ++b) {
      if (ja[b] != SlotAction::LeaveSystem) continue;
      auto node = open.extract(s.slots[static_cast<std::size_t>(b)]);
      VisitRecord& r = node.mapped().rec;
      r.berth_exit_ts = s.window * wsec + 3600 + jitter(rng) * 16;
      out.visits.push_back(r);
    }
    for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) {
      if (!is_berth_move(ja[i])) continue;
      OpenVisit& v = open.at(s.slots[static_cast<std::size_t>(i)]);
      const WindowIndex first = s.window + 1;
      v.rec.berth_id = target_berth(ja[i]) + 1;
      v.rec.berth_enter_ts = first * wsec + jitter(rng);
      if (first > v.arrival_window + 1) {
        v.rec.waiting_enter_ts = (v.arrival_window + 1) * wsec + jitter(rng);
        v.rec.waiting_exit_ts = v.rec.berth_enter_ts;
      }
    }
    for (std::size_t j = 0; j < events.size(); ++j) {
      OpenVisit v;
      v.rec.imo = events[j].imo;
      v.arrival_window = events[j].window;
      v.rec.arrival_ts = events[j].window * wsec + 1800 * static_cast<Timestamp>(j + 1) + jitter(rng);
      open[events[j].imo] = v;
    }

    s = apply_transition(s, ja, events);
    actions.push_back(ja);
    states.push_back(s);
    arrivals.push_back(std::move(events));
  }

  // Drop the empty lead-in before the first arrival.
  std::size_t lead = 0;
  while (lead < states.size() && states[lead].empty()) ++lead;
  if (lead == states.size()) return out;
  out.timeline.states.assign(states.begin() + static_cast<std::ptrdiff_t>(lead), states.end());
  out.timeline.arrivals.assign(arrivals.begin() + static_cast<std::ptrdiff_t>(lead), arrivals.end());
  out.actions.assign(actions.begin() + static_cast<std::ptrdiff_t>(lead), actions.end());

  std::sort(out.visits.begin(), out.visits.end(), [](const VisitRecord& a, const VisitRecord& b) {
    return a.arrival_ts != b.arrival_ts ? a.arrival_ts < b.arrival_ts : a.imo < b.imo;
  });
  return out;
}

void write_arrivals(const std::filesystem::path& path, const Timeline& timeline) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "window,imo\n";
  for (const auto& list : timeline.arrivals)
    for (const auto& e : list) out << e.window << ',' << e.imo << '\n';
}

}  // namespace portirl
