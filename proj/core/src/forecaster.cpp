#include "portirl/forecaster.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

namespace portirl {

RewardPolicy::RewardPolicy(RewardParams params, SlotContextBuilder builder, std::optional<TemporalEncoder> encoder)
    : params_(std::make_shared<const RewardParams>(std::move(params))),
      builder_(std::make_shared<const SlotContextBuilder>(std::move(builder))) {
  const int want = encoder ? encoder->dimension() : 0;
  if (builder_->temporal_dim() != want)
    throw std::invalid_argument("context builder expects " + std::to_string(builder_->temporal_dim()) +
                                " temporal features but the encoder provides " + std::to_string(want));
  if (params_->context_dim != builder_->dimension())
    throw std::invalid_argument("reward parameters do not match the context dimension");
  if (encoder) encoder_ = std::make_shared<const TemporalEncoder>(std::move(*encoder));
}

void RewardPolicy::observe(const PortState& state) {
  if (!encoder_) return;
  history_.push_back(expand_features(state, builder_->registry()));
  const auto keep = static_cast<std::size_t>(encoder_->context());
  if (history_.size() > keep) history_.erase(history_.begin(), history_.end() - static_cast<std::ptrdiff_t>(keep));
}

SlotDistributions RewardPolicy::decide(const PortState& state) {
  observe(state);
  const std::vector<double> temporal = encoder_ ? encoder_->encode(history_) : std::vector<double>{};
  return predict_action_distribution(*params_, *builder_, state, temporal);
}

std::unique_ptr<SlotPolicy> RewardPolicy::clone() const { return std::make_unique<RewardPolicy>(*this); }

void ForecastConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("forecast horizon must be at least 1");
}

ForecastError::ForecastError(WindowIndex window, const std::string& what)
    : std::runtime_error("window " + std::to_string(window) + ": " + what), window_(window) {}

namespace {

double prob(const SlotDistributions& d, int slot, SlotAction a) {
  return d[static_cast<std::size_t>(slot)][static_cast<std::size_t>(action_position(a))];
}

SlotAction pick(const PortState& state, const SlotDistributions& dists, int slot, ActionSet options,
                const ForecastConfig& cfg, std::mt19937_64& rng) {
  if (options.empty())
    throw ForecastError(state.window, "slot " + std::to_string(slot) + " has no remaining legal action");
  if (cfg.decision_rule == DecisionRule::Argmax) {
    SlotAction best = SlotAction::Nothing;
    double best_p = -1.0;
    for (SlotAction a : kAllActions)
      if (options.contains(a) && prob(dists, slot, a) > best_p) {
        best = a;
        best_p = prob(dists, slot, a);
      }
    return best;
  }
  double total = 0.0;
  for (SlotAction a : kAllActions)
    if (options.contains(a)) total += prob(dists, slot, a);
  const auto list = options.to_vector();
  if (!(total > 0.0)) {
    std::uniform_int_distribution<std::size_t> u(0, list.size() - 1);
    return list[u(rng)];
  }
  double r = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (SlotAction a : list) {
    r -= prob(dists, slot, a);
    if (r < 0.0) return a;
  }
  return list.back();
}

int waiting_load(const PortState& state, const JointAction& ja) {
  int n = 0;
  for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) {
    const SlotAction a = ja[i];
    if ((i < kFirstIncomingSlot && a == SlotAction::Stay) || (i >= kFirstIncomingSlot && a == SlotAction::GoToWaiting))
      ++n;
  }
  (void)state;
  return n;
}

}  // namespace

JointAction decide_joint(const PortState& state, const SlotDistributions& dists, const ForecastConfig& cfg,
                         std::mt19937_64& rng) {
  JointAction ja;
  std::array<ActionSet, kSlotCount> options{};
  for (int i = 0; i < kSlotCount; ++i) {
    if (!state.occupied(i)) continue;
    options[static_cast<std::size_t>(i)] = legal_actions(state, SlotIndex(i));
    ja[i] = pick(state, dists, i, options[static_cast<std::size_t>(i)], cfg, rng);
  }

  // Berth conflicts: the strongest claimant keeps the berth, the others re-decide.
  for (bool changed = true; changed;) {
    changed = false;
    for (int b = 0; b < kBerthCount; ++b) {
      const SlotAction target = go_to_berth(b);
      std::vector<int> claimants;
      for (int i = 0; i < kSlotCount; ++i)
        if (ja[i] == target) claimants.push_back(i);
      if (claimants.size() < 2) continue;
      int winner = claimants.front();
      if (cfg.conflict_policy == ConflictPolicy::HighestProbability)
        for (int i : claimants)
          if (prob(dists, i, target) > prob(dists, winner, target)) winner = i;
      for (int i : claimants) {
        if (i == winner) continue;
        auto& opt = options[static_cast<std::size_t>(i)];
        opt.erase(target);
        ja[i] = pick(state, dists, i, opt, cfg, rng);
        changed = true;
      }
    }
  }

  // Waiting overflow: the least confident entrant gives up its place.
  while (waiting_load(state, ja) > kWaitingCount) {
    int loser = -1;
    for (int i = kFirstIncomingSlot; i < kSlotCount; ++i) {
      if (ja[i] != SlotAction::GoToWaiting) continue;
      if (loser < 0 || prob(dists, i, SlotAction::GoToWaiting) <= prob(dists, loser, SlotAction::GoToWaiting))
        loser = i;
    }
    if (loser < 0) throw ForecastError(state.window, "waiting area overflow without entrants");
    auto& opt = options[static_cast<std::size_t>(loser)];
    opt.erase(SlotAction::GoToWaiting);
    for (int i = 0; i < kSlotCount; ++i)
      if (is_berth_move(ja[i])) opt.erase(ja[i]);
    if (opt.empty())
      throw ForecastError(state.window, "waiting area overflow cannot be resolved for slot " + std::to_string(loser));
    ja[loser] = pick(state, dists, loser, opt, cfg, rng);
  }

  const auto report = validate_joint_action(state, ja);
  if (!report.ok()) throw ForecastError(state.window, "resolved action is invalid: " + report.summary());
  return ja;
}

std::vector<ArrivalEvent> admissible_arrivals(const PortState& state, const JointAction& action,
                                              std::span<const Imo> candidates) {
  const int capacity = std::min(kIncomingCount, kWaitingCount - waiting_after_movement(state, action));
  std::vector<ArrivalEvent> out;
  std::set<Imo> seen;
  for (Imo imo : candidates) {
    if (static_cast<int>(out.size()) >= capacity) break;
    if (imo == kEmpty || !seen.insert(imo).second) continue;
    if (const auto slot = state.find(imo); slot && action[*slot] != SlotAction::LeaveSystem) continue;
    out.push_back({imo, state.window + 1});
  }
  return out;
}

ArrivalStream no_arrivals() {
  return [](WindowIndex) { return std::vector<Imo>{}; };
}

namespace {

PortState step(const PortState& state, SlotPolicy& policy, const ArrivalStream& arrivals, const ForecastConfig& cfg,
               std::mt19937_64& rng, JointAction& action) {
  action = decide_joint(state, policy.decide(state), cfg, rng);
  const auto incoming = arrivals(state.window + 1);
  const auto events = admissible_arrivals(state, action, incoming);
  PortState next = apply_transition(state, action, events);
  if (const auto problems = check_invariants(next); !problems.empty())
    throw ForecastError(next.window, "rollout state violates invariants: " + problems.front());
  return next;
}

}  // namespace

Trajectory rollout(const PortState& initial, SlotPolicy& policy, const ArrivalStream& arrivals,
                   const ForecastConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  Trajectory t;
  t.states.push_back(initial);
  for (int h = 0; h < cfg.horizon; ++h) {
    JointAction a;
    PortState next = step(t.states.back(), policy, arrivals, cfg, rng, a);
    t.actions.push_back(a);
    t.states.push_back(std::move(next));
  }
  return t;
}

bool predict_congestion(const PortState& state, SlotPolicy& policy, const ArrivalStream& arrivals,
                        const ForecastConfig& cfg) {
  ForecastConfig one = cfg;
  one.horizon = 1;
  return is_congested(rollout(state, policy, arrivals, one).states.back());
}

namespace {

// Rolls forward until every tracked vessel has left or the horizon ends.
void track_departures(const PortState& initial, SlotPolicy& policy, const ArrivalStream& arrivals,
                      const ForecastConfig& cfg, int horizon, std::map<Imo, DepartureForecast>& tracked) {
  std::mt19937_64 rng(cfg.seed);
  std::size_t open = tracked.size();
  PortState s = initial;
  for (int h = 0; h < horizon && open > 0; ++h) {
    JointAction a;
    PortState next = step(s, policy, arrivals, cfg, rng, a);
    for (int i = 0; i < kSlotCount; ++i) {
      if (a[i] != SlotAction::LeaveSystem) continue;
      const auto it = tracked.find(s.slots[static_cast<std::size_t>(i)]);
      if (it != tracked.end() && !it->second.window) {
        it->second.window = s.window + 1;
        --open;
      }
    }
    s = std::move(next);
  }
}

}  // namespace

std::map<Imo, DepartureForecast> predict_departures(const std::vector<PortState>& prefix, const SlotPolicy& policy,
                                                    const ArrivalStream& arrivals, const ForecastConfig& cfg) {
  cfg.validate();
  std::map<Imo, DepartureForecast> out;
  if (prefix.empty()) return out;
  auto p = policy.clone();
  for (std::size_t k = 0; k + 1 < prefix.size(); ++k) p->observe(prefix[k]);
  for (Imo imo : prefix.back().slots)
    if (imo != kEmpty) out[imo] = {};
  track_departures(prefix.back(), *p, arrivals, cfg, cfg.horizon, out);
  return out;
}

std::optional<double> Accuracy::value() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(matches) / static_cast<double>(total);
}

Accuracy action_accuracy(std::span<const SlotAction> predicted, std::span<const SlotAction> truth,
                         bool include_nothing) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("action sequences differ in length");
  Accuracy a;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!include_nothing && truth[i] == SlotAction::Nothing) continue;
    ++a.total;
    if (predicted[i] == truth[i]) ++a.matches;
  }
  return a;
}

Accuracy action_accuracy(std::span<const JointAction> predicted, std::span<const JointAction> truth,
                         bool include_nothing) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("action sequences differ in length");
  Accuracy a;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const auto r = action_accuracy(predicted[t].actions, truth[t].actions, include_nothing);
    a.matches += r.matches;
    a.total += r.total;
  }
  return a;
}

EvaluationReport evaluate(const std::vector<Trajectory>& trajectories, const SlotPolicy& policy,
                          const EvaluationConfig& cfg) {
  cfg.forecast.validate();
  EvaluationReport rep;
  std::array<std::int64_t, kActionCount> true_counts{};
  std::int64_t congested = 0;
  std::mt19937_64 rng(cfg.forecast.seed);

  for (const auto& traj : trajectories) {
    std::map<WindowIndex, std::vector<Imo>> arriving;
    for (std::size_t t = 0; t < traj.steps(); ++t)
      for (const auto& e : traj.arrivals(t)) arriving[e.window].push_back(e.imo);
    const ArrivalStream stream = [&arriving](WindowIndex w) {
      const auto it = arriving.find(w);
      return it == arriving.end() ? std::vector<Imo>{} : it->second;
    };

    auto p = policy.clone();
    for (std::size_t t = 0; t < traj.steps(); ++t) {
      const PortState& s = traj.states[t];
      const WindowIndex target = traj.states[t + 1].window;
      if (target < cfg.split_window) {
        p->observe(s);
        continue;
      }

      // Vessels that start service now get a departure forecast.
      std::map<Imo, DepartureForecast> fresh;
      for (int b = 0; b < kBerthCount; ++b)
        if (s.occupied(b) && s.staytimes[static_cast<std::size_t>(b)] == 1) fresh[s.slots[static_cast<std::size_t>(b)]] = {};
      if (!fresh.empty()) {
        auto snapshot = p->clone();
        const int rest = static_cast<int>(traj.steps() - t);
        const int horizon = cfg.departure_horizon > 0 ? std::min(cfg.departure_horizon, rest) : rest;
        track_departures(s, *snapshot, stream, cfg.forecast, horizon, fresh);
        for (const auto& [imo, fc] : fresh) {
          const int slot = *s.find(imo);
          std::optional<WindowIndex> actual;
          for (std::size_t u = t; u < traj.steps() && !actual; ++u)
            if (traj.actions[u][slot] == SlotAction::LeaveSystem) actual = traj.states[u].window + 1;
          if (!actual) continue;
          rep.departures.push_back({traj.id, imo, s.window, fc.window, *actual});
          ++rep.leave.total;
          if (fc.window == actual) ++rep.leave.matches;
        }
      }

      const JointAction predicted = decide_joint(s, p->decide(s), cfg.forecast, rng);
      const JointAction& truth = traj.actions[t];
      for (int i = 0; i < kSlotCount; ++i) {
        if (!cfg.include_nothing && truth[i] == SlotAction::Nothing) continue;
        const auto tp = static_cast<std::size_t>(action_position(truth[i]));
        const auto pp = static_cast<std::size_t>(action_position(predicted[i]));
        ++rep.confusion[tp][pp];
        ++true_counts[tp];
        ++rep.action.total;
        if (tp == pp) ++rep.action.matches;
      }

      const bool pred_flag = waiting_after_movement(s, predicted) >= kCongestionThreshold;
      const bool actual_flag = is_congested(traj.states[t + 1]);
      rep.congestion_timeline.push_back({traj.id, target, pred_flag, actual_flag});
      ++rep.congestion.total;
      if (pred_flag == actual_flag) ++rep.congestion.matches;
      congested += actual_flag ? 1 : 0;
    }
  }

  const auto best = std::max_element(true_counts.begin(), true_counts.end());
  rep.majority_action = action_at_position(static_cast<int>(best - true_counts.begin()));
  rep.action_baseline = {*best, rep.action.total};
  rep.majority_congestion = 2 * congested > rep.congestion.total;
  rep.congestion_baseline = {rep.majority_congestion ? congested : rep.congestion.total - congested,
                             rep.congestion.total};
  return rep;
}

namespace {

nlohmann::ordered_json accuracy_json(const Accuracy& a) {
  nlohmann::ordered_json j;
  const auto v = a.value();
  j["value"] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  j["matches"] = a.matches;
  j["total"] = a.total;
  return j;
}

}  // namespace

void write_report(const std::filesystem::path& path, const EvaluationReport& r, const EvaluationConfig& cfg) {
  nlohmann::ordered_json j;
  j["split_window"] = cfg.split_window;
  j["include_nothing"] = cfg.include_nothing;
  j["action_accuracy"] = accuracy_json(r.action);
  j["congestion_accuracy"] = accuracy_json(r.congestion);
  j["leave_accuracy"] = accuracy_json(r.leave);
  j["baselines"] = {{"majority_action", action_name(r.majority_action)},
                    {"action_accuracy", accuracy_json(r.action_baseline)},
                    {"majority_congestion", r.majority_congestion},
                    {"congestion_accuracy", accuracy_json(r.congestion_baseline)}};
  auto labels = nlohmann::ordered_json::array();
  for (SlotAction a : kAllActions) labels.push_back(action_name(a));
  j["confusion"] = {{"labels", labels}, {"counts", r.confusion}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_congestion_csv(const std::filesystem::path& path, const EvaluationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trajectory_id,window,predicted,actual\n";
  for (const auto& p : r.congestion_timeline)
    out << p.trajectory_id << ',' << p.window << ',' << int{p.predicted} << ',' << int{p.actual} << '\n';
}

void write_departure_csv(const std::filesystem::path& path, const EvaluationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "trajectory_id,imo,berth_window,predicted_departure,actual_departure\n";
  for (const auto& d : r.departures) {
    out << d.trajectory_id << ',' << d.imo << ',' << d.berth_window << ',';
    if (d.predicted) out << *d.predicted;
    out << ',' << d.actual << '\n';
  }
}

}  // namespace portirl
