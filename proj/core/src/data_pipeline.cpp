#include "portirl/data_pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "portirl/csv.hpp"

namespace portirl {

namespace {

using ColumnMap = std::map<std::string, std::size_t, std::less<>>;

ColumnMap parse_header(std::string_view header_line, std::string_view expected, const std::filesystem::path& path) {
  ColumnMap columns;
  const auto names = csv::split(header_line);
  for (std::size_t i = 0; i < names.size(); ++i) columns.emplace(std::string(names[i]), i);
  std::vector<std::string> missing;
  for (auto name : csv::split(expected))
    if (!columns.contains(name)) missing.emplace_back(name);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw DataError(path.string() + ": missing columns: " + list);
  }
  return columns;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

Timestamp floor_div(Timestamp a, Timestamp b) {
  Timestamp q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Timestamp ceil_div(Timestamp a, Timestamp b) { return -floor_div(-a, b); }

}  // namespace

void VesselRegistry::add(Imo imo, VesselAttrs attrs) {
  attrs_[imo] = attrs;
  max_size_ = std::max(max_size_, attrs.size_class);
  max_carrier_ = std::max(max_carrier_, attrs.carrier_code);
}

const VesselAttrs* VesselRegistry::find(Imo imo) const {
  auto it = attrs_.find(imo);
  return it == attrs_.end() ? nullptr : &it->second;
}

std::vector<std::pair<Imo, VesselAttrs>> VesselRegistry::sorted() const {
  std::vector<std::pair<Imo, VesselAttrs>> out(attrs_.begin(), attrs_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void WindowingConfig::validate() const {
  if (window_hours <= 0) throw std::invalid_argument("window_hours must be positive");
  if (empty_span_prune_windows < 2) throw std::invalid_argument("empty_span_prune_windows must be at least 2");
}

WindowIndex window_of(Timestamp ts, const WindowingConfig& cfg) { return floor_div(ts, cfg.window_seconds()); }

VisitLoad load_visits(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  VisitLoad out;
  std::string line;
  if (!csv::read_line(in, line) || line.empty()) throw DataError(path.string() + ": missing header");
  const ColumnMap cols = parse_header(line, kVisitsHeader, path);
  const std::size_t width = cols.size();

  std::int64_t lineno = 1;
  while (csv::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    auto reject = [&](const std::string& why) { out.diagnostics.push_back({lineno, why}); };
    if (fields.size() != width) {
      reject("expected " + std::to_string(width) + " fields, got " + std::to_string(fields.size()));
      continue;
    }
    auto field = [&](std::string_view name) { return fields[cols.find(name)->second]; };
    auto required = [&](std::string_view name) -> std::optional<std::int64_t> {
      auto v = csv::parse_int(field(name));
      if (!v) reject("bad or missing " + std::string(name));
      return v;
    };

    const auto imo = required("imo");
    const auto arrival = required("arrival_ts");
    const auto benter = required("berth_enter_ts");
    const auto bexit = required("berth_exit_ts");
    const auto berth = required("berth_id");
    if (!imo || !arrival || !benter || !bexit || !berth) continue;

    VisitRecord rec;
    if (*imo <= 0 || *imo > 0xffffffffLL) {
      reject("imo must be a positive 32-bit integer");
      continue;
    }
    rec.imo = static_cast<Imo>(*imo);
    rec.arrival_ts = *arrival;
    rec.berth_enter_ts = *benter;
    rec.berth_exit_ts = *bexit;
    if (*berth < 1 || *berth > kBerthCount) {
      reject("berth_id " + std::to_string(*berth) + " outside [1," + std::to_string(kBerthCount) + "]");
      continue;
    }
    rec.berth_id = static_cast<int>(*berth);

    const auto wenter_field = field("waiting_enter_ts");
    const auto wexit_field = field("waiting_exit_ts");
    if (wenter_field.empty() != wexit_field.empty()) {
      reject("waiting interval needs both ends");
      continue;
    }
    if (!wenter_field.empty()) {
      rec.waiting_enter_ts = csv::parse_int(wenter_field);
      rec.waiting_exit_ts = csv::parse_int(wexit_field);
      if (!rec.waiting_enter_ts || !rec.waiting_exit_ts) {
        reject("bad waiting timestamps");
        continue;
      }
    }

    if (rec.arrival_ts > rec.berth_enter_ts) {
      reject("arrival_ts after berth_enter_ts");
      continue;
    }
    if (rec.berth_enter_ts >= rec.berth_exit_ts) {
      reject("berth_exit_ts not after berth_enter_ts");
      continue;
    }
    if (rec.waiting_enter_ts &&
        !(rec.arrival_ts <= *rec.waiting_enter_ts && *rec.waiting_enter_ts <= *rec.waiting_exit_ts &&
          *rec.waiting_exit_ts <= rec.berth_enter_ts)) {
      reject("waiting interval must lie between arrival and berth entry");
      continue;
    }
    out.records.push_back(rec);
  }
  if (out.records.empty() && out.diagnostics.empty()) out.warnings.push_back(path.string() + ": no visit records");
  std::stable_sort(out.records.begin(), out.records.end(), [](const VisitRecord& a, const VisitRecord& b) {
    return a.arrival_ts != b.arrival_ts ? a.arrival_ts < b.arrival_ts : a.imo < b.imo;
  });
  return out;
}

RegistryLoad load_registry(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  RegistryLoad out;
  std::string line;
  if (!csv::read_line(in, line) || line.empty()) throw DataError(path.string() + ": missing header");
  const ColumnMap cols = parse_header(line, kRegistryHeader, path);
  std::int64_t lineno = 1;
  while (csv::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != cols.size()) {
      out.diagnostics.push_back({lineno, "wrong field count"});
      continue;
    }
    const auto imo = csv::parse_int(fields[cols.find("imo")->second]);
    const auto size = csv::parse_int(fields[cols.find("size_class")->second]);
    const auto carrier = csv::parse_int(fields[cols.find("carrier_code")->second]);
    if (!imo || !size || !carrier || *imo <= 0 || *size < 0 || *carrier < 0) {
      out.diagnostics.push_back({lineno, "bad registry row"});
      continue;
    }
    if (out.registry.contains(static_cast<Imo>(*imo))) {
      out.diagnostics.push_back({lineno, "duplicate imo " + std::to_string(*imo)});
      continue;
    }
    out.registry.add(static_cast<Imo>(*imo), {static_cast<int>(*size), static_cast<int>(*carrier)});
  }
  return out;
}

void write_visits(const std::filesystem::path& path, const std::vector<VisitRecord>& visits) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << kVisitsHeader << '\n';
  for (const auto& v : visits) {
    out << v.imo << ',' << v.arrival_ts << ',';
    if (v.waiting_enter_ts) out << *v.waiting_enter_ts;
    out << ',';
    if (v.waiting_exit_ts) out << *v.waiting_exit_ts;
    out << ',' << v.berth_enter_ts << ',' << v.berth_exit_ts << ',' << v.berth_id << '\n';
  }
}

void write_registry(const std::filesystem::path& path, const VesselRegistry& registry) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << kRegistryHeader << '\n';
  for (const auto& [imo, attrs] : registry.sorted())
    out << imo << ',' << attrs.size_class << ',' << attrs.carrier_code << '\n';
}

namespace {

struct VesselPlan {
  const VisitRecord* visit = nullptr;
  WindowIndex incoming = 0;
  WindowIndex berth_first = 0;
  WindowIndex berth_last = 0;
};

}  // namespace

Timeline discretize(const std::vector<VisitRecord>& visits, const VesselRegistry& registry,
                    const WindowingConfig& cfg) {
  cfg.validate();
  Timeline timeline;
  if (visits.empty()) return timeline;

  const Timestamp wsec = cfg.window_seconds();
  std::vector<VesselPlan> plans;
  plans.reserve(visits.size());
  for (const auto& v : visits) {
    if (!registry.contains(v.imo))
      throw DataError("imo " + std::to_string(v.imo) + " has no registry entry", window_of(v.arrival_ts, cfg));
    VesselPlan p;
    p.visit = &v;
    p.incoming = window_of(v.arrival_ts, cfg);
    p.berth_first = std::max(window_of(v.berth_enter_ts, cfg), p.incoming + 1);
    p.berth_last = p.berth_first + (ceil_div(v.berth_exit_ts, wsec) - floor_div(v.berth_enter_ts, wsec)) - 1;
    plans.push_back(p);
  }

  // Per-berth order: raw overlap is fatal, quantisation collisions are pushed back.
  std::array<std::vector<VesselPlan*>, kBerthCount> by_berth;
  for (auto& p : plans) by_berth[static_cast<std::size_t>(p.visit->berth_id - 1)].push_back(&p);
  for (auto& queue : by_berth) {
    std::stable_sort(queue.begin(), queue.end(), [](const VesselPlan* a, const VesselPlan* b) {
      return a->visit->berth_enter_ts < b->visit->berth_enter_ts;
    });
    for (std::size_t k = 1; k < queue.size(); ++k) {
      VesselPlan& prev = *queue[k - 1];
      VesselPlan& cur = *queue[k];
      if (cur.visit->berth_enter_ts < prev.visit->berth_exit_ts) {
        throw DataError("berth double-occupancy on berth " + std::to_string(cur.visit->berth_id) + " in window " +
                            std::to_string(window_of(cur.visit->berth_enter_ts, cfg)) + " (imo " +
                            std::to_string(prev.visit->imo) + " and " + std::to_string(cur.visit->imo) + ")",
                        window_of(cur.visit->berth_enter_ts, cfg));
      }
      if (cur.berth_first < prev.berth_last + 2) {
        const WindowIndex shift = prev.berth_last + 2 - cur.berth_first;
        cur.berth_first += shift;
        cur.berth_last += shift;
      }
    }
  }

  // A vessel may not be in port twice at once.
  {
    std::vector<const VesselPlan*> order;
    for (const auto& p : plans) order.push_back(&p);
    std::stable_sort(order.begin(), order.end(), [](const VesselPlan* a, const VesselPlan* b) {
      return a->visit->imo != b->visit->imo ? a->visit->imo < b->visit->imo : a->incoming < b->incoming;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (order[k]->visit->imo == order[k - 1]->visit->imo && order[k]->incoming <= order[k - 1]->berth_last) {
        throw DataError("imo " + std::to_string(order[k]->visit->imo) + " has overlapping visits in window " +
                            std::to_string(order[k]->incoming),
                        order[k]->incoming);
      }
    }
  }

  WindowIndex first = plans.front().incoming;
  WindowIndex last = plans.front().berth_last;
  for (const auto& p : plans) {
    first = std::min(first, p.incoming);
    last = std::max(last, p.berth_last);
  }

  // Arrival order inside a window: timestamp, then imo.
  std::map<WindowIndex, std::vector<const VesselPlan*>> arrivals_by_window;
  for (const auto& p : plans) arrivals_by_window[p.incoming].push_back(&p);
  for (auto& [w, list] : arrivals_by_window) {
    std::stable_sort(list.begin(), list.end(), [](const VesselPlan* a, const VesselPlan* b) {
      return a->visit->arrival_ts != b->visit->arrival_ts ? a->visit->arrival_ts < b->visit->arrival_ts
                                                          : a->visit->imo < b->visit->imo;
    });
  }

  // Active berth blocks keyed by window range; a sweep keeps it linear-ish.
  std::vector<const VesselPlan*> by_start;
  for (const auto& p : plans) by_start.push_back(&p);
  std::sort(by_start.begin(), by_start.end(),
            [](const VesselPlan* a, const VesselPlan* b) { return a->incoming < b->incoming; });

  std::vector<const VesselPlan*> active;  // vessels in port, any phase
  std::size_t next_plan = 0;
  PortState prev;
  const std::size_t window_count = static_cast<std::size_t>(last + 2 - first);
  timeline.states.reserve(window_count);
  timeline.arrivals.reserve(window_count);

  for (WindowIndex w = first; w <= last + 1; ++w) {
    while (next_plan < by_start.size() && by_start[next_plan]->incoming == w) active.push_back(by_start[next_plan++]);
    std::erase_if(active, [w](const VesselPlan* p) { return p->berth_last < w; });

    PortState s;
    s.window = w;
    auto put = [&s](int slot, Imo imo, WindowIndex stay) {
      s.slots[static_cast<std::size_t>(slot)] = imo;
      s.staytimes[static_cast<std::size_t>(slot)] = static_cast<int>(stay);
    };

    std::unordered_map<Imo, const VesselPlan*> phase;
    for (const auto* p : active) phase.emplace(p->visit->imo, p);

    for (const auto* p : active) {
      if (p->berth_first <= w && w <= p->berth_last) {
        const int slot = p->visit->berth_id - 1;
        if (s.occupied(slot))
          throw DataError("berth double-occupancy on berth " + std::to_string(slot + 1) + " in window " +
                              std::to_string(w),
                          w);
        put(slot, p->visit->imo, w - p->berth_first + 1);
      }
    }

    std::vector<const VesselPlan*> waiting;
    auto in_waiting = [w](const VesselPlan* p) { return p->incoming < w && w < p->berth_first; };
    // Previous waiting occupants keep their order; former incoming vessels follow in slot order.
    for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) {
      if (!prev.occupied(i) || prev.window != w - 1) continue;
      auto it = phase.find(prev.slots[static_cast<std::size_t>(i)]);
      if (it != phase.end() && in_waiting(it->second)) waiting.push_back(it->second);
    }
    for (const auto* p : active)
      if (in_waiting(p) && std::find(waiting.begin(), waiting.end(), p) == waiting.end()) waiting.push_back(p);
    if (waiting.size() > static_cast<std::size_t>(kWaitingCount))
      throw DataError(std::to_string(waiting.size()) + " vessels waiting simultaneously in window " +
                          std::to_string(w) + " (capacity " + std::to_string(kWaitingCount) + ")",
                      w);
    for (std::size_t k = 0; k < waiting.size(); ++k)
      put(kFirstWaitingSlot + static_cast<int>(k), waiting[k]->visit->imo, w - waiting[k]->incoming);

    std::vector<ArrivalEvent> arrivals;
    if (auto it = arrivals_by_window.find(w); it != arrivals_by_window.end()) {
      if (it->second.size() > static_cast<std::size_t>(kIncomingCount))
        throw DataError(std::to_string(it->second.size()) + " vessels incoming simultaneously in window " +
                            std::to_string(w) + " (capacity " + std::to_string(kIncomingCount) + ")",
                        w);
      int slot = kFirstIncomingSlot;
      for (const auto* p : it->second) {
        put(slot++, p->visit->imo, 1);
        arrivals.push_back({p->visit->imo, w});
      }
    }
    timeline.states.push_back(s);
    timeline.arrivals.push_back(std::move(arrivals));
    prev = s;
  }
  return timeline;
}

std::vector<Timeline> prune_empty_spans(const Timeline& timeline, const WindowingConfig& cfg) {
  cfg.validate();
  std::vector<Timeline> segments;
  const auto& states = timeline.states;
  const std::size_t n = states.size();
  Timeline current;
  auto flush = [&segments, &current]() {
    const bool has_vessel =
        std::any_of(current.states.begin(), current.states.end(), [](const PortState& s) { return !s.empty(); });
    if (has_vessel) segments.push_back(std::move(current));
    current = Timeline{};
  };
  auto push = [&](std::size_t k) {
    current.states.push_back(states[k]);
    current.arrivals.push_back(k < timeline.arrivals.size() ? timeline.arrivals[k] : std::vector<ArrivalEvent>{});
  };

  std::size_t k = 0;
  while (k < n) {
    if (!states[k].empty()) {
      push(k++);
      continue;
    }
    std::size_t run_end = k;
    while (run_end < n && states[run_end].empty()) ++run_end;
    const std::size_t run = run_end - k;
    if (run >= static_cast<std::size_t>(cfg.empty_span_prune_windows)) {
      if (!current.states.empty()) push(k);
      flush();
    } else {
      for (std::size_t j = k; j < run_end; ++j) push(j);
    }
    k = run_end;
  }
  flush();
  return segments;
}

std::vector<ArrivalEvent> Trajectory::arrivals(std::size_t t) const {
  std::vector<ArrivalEvent> out;
  const PortState& next = states.at(t + 1);
  for (int i = kFirstIncomingSlot; i < kSlotCount; ++i)
    if (next.occupied(i)) out.push_back({next.slots[static_cast<std::size_t>(i)], next.window});
  return out;
}

InferenceError::InferenceError(WindowIndex window, int slot, const std::string& what)
    : std::runtime_error("window " + std::to_string(window) + ", slot " + std::to_string(slot) + ": " + what),
      window_(window),
      slot_(slot) {}

Trajectory infer_actions(const std::vector<PortState>& segment, int id) {
  Trajectory traj;
  traj.id = id;
  traj.states = segment;
  for (std::size_t t = 0; t + 1 < segment.size(); ++t) {
    const PortState& cur = segment[t];
    const PortState& nxt = segment[t + 1];
    if (nxt.window != cur.window + 1)
      throw InferenceError(cur.window, -1, "next state is window " + std::to_string(nxt.window));
    JointAction action;
    for (int i = 0; i < kSlotCount; ++i) {
      if (!cur.occupied(i)) continue;
      const SlotIndex from(i);
      const auto to = nxt.find(cur.slots[static_cast<std::size_t>(i)]);
      SlotAction a;
      if (!to || SlotIndex(*to).zone() == Zone::Incoming) {
        a = SlotAction::LeaveSystem;  // re-appearing in the incoming strip is a new visit
      } else {
        const SlotIndex dest(*to);
        if (dest.zone() == Zone::Berth) {
          a = (from.zone() == Zone::Berth && dest == from) ? SlotAction::Stay : go_to_berth(dest.offset());
        } else {
          a = from.zone() == Zone::Waiting ? SlotAction::Stay : SlotAction::GoToWaiting;
        }
      }
      if (!legal_actions(cur, from).contains(a))
        throw InferenceError(cur.window, i, "unexplainable move (" + std::string(action_name(a)) + " is illegal)");
      action[i] = a;
    }
    traj.actions.push_back(action);

    const auto arrivals = traj.arrivals(t);
    PortState replayed;
    try {
      replayed = apply_transition(cur, action, arrivals);
    } catch (const TransitionError& e) {
      const auto& v = e.report().violations;
      throw InferenceError(cur.window, v.empty() ? -1 : v.front().slot, e.what());
    }
    if (!(replayed == nxt)) {
      int bad = -1;
      for (int i = 0; i < kSlotCount && bad < 0; ++i)
        if (replayed.slots[static_cast<std::size_t>(i)] != nxt.slots[static_cast<std::size_t>(i)] ||
            replayed.staytimes[static_cast<std::size_t>(i)] != nxt.staytimes[static_cast<std::size_t>(i)])
          bad = i;
      throw InferenceError(nxt.window, bad, "state cannot be reproduced from the previous window");
    }
  }
  return traj;
}

std::optional<std::string> replay_mismatch(const Trajectory& trajectory) {
  if (trajectory.states.size() != trajectory.actions.size() + 1)
    return "trajectory has " + std::to_string(trajectory.states.size()) + " states and " +
           std::to_string(trajectory.actions.size()) + " actions";
  for (std::size_t t = 0; t < trajectory.actions.size(); ++t) {
    try {
      const PortState next = apply_transition(trajectory.states[t], trajectory.actions[t], trajectory.arrivals(t));
      if (!(next == trajectory.states[t + 1]))
        return "window " + std::to_string(trajectory.states[t + 1].window) + " not reproduced";
    } catch (const TransitionError& e) {
      return "window " + std::to_string(trajectory.states[t].window) + ": " + e.what();
    }
  }
  return std::nullopt;
}

RawStateFeatures expand_features(const PortState& state, const VesselRegistry& registry) {
  RawStateFeatures out{};
  for (int i = 0; i < kSlotCount; ++i) {
    const Imo imo = state.slots[static_cast<std::size_t>(i)];
    if (imo == kEmpty) continue;
    const VesselAttrs* attrs = registry.find(imo);
    if (!attrs)
      throw DataError("slot " + std::to_string(i) + " holds imo " + std::to_string(imo) + " with no registry entry",
                      state.window);
    const auto base = static_cast<std::size_t>(3 * i);
    out[base] = attrs->size_class;
    out[base + 1] = attrs->carrier_code;
    out[base + 2] = state.staytimes[static_cast<std::size_t>(i)];
  }
  return out;
}

FeatureScaling FeatureScaling::from_registry(const VesselRegistry& registry, double staytime_cap) {
  FeatureScaling s;
  s.size_max = std::max(1, registry.max_size_class());
  s.carrier_max = std::max(1, registry.max_carrier_code());
  s.staytime_cap = staytime_cap;
  return s;
}

RawStateFeatures FeatureScaling::apply(const RawStateFeatures& raw) const {
  RawStateFeatures out{};
  for (std::size_t i = 0; i < raw.size(); i += 3) {
    out[i] = raw[i] / size_max;
    out[i + 1] = raw[i + 1] / carrier_max;
    out[i + 2] = std::min(raw[i + 2], staytime_cap) / staytime_cap;
  }
  return out;
}

}  // namespace portirl
