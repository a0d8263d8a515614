#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "portirl/csv.hpp"
#include "portirl/data_pipeline.hpp"

namespace portirl {

std::array<double, kActionCount> ActionHistogram::frequencies() const {
  std::array<double, kActionCount> f{};
  const auto total = total_non_nothing();
  if (total == 0) return f;
  for (int k = 1; k < kActionCount; ++k)
    f[static_cast<std::size_t>(k)] = static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(total);
  return f;
}

std::int64_t ActionHistogram::total_non_nothing() const {
  std::int64_t total = 0;
  for (int k = 1; k < kActionCount; ++k) total += counts[static_cast<std::size_t>(k)];
  return total;
}

ActionHistogram action_histogram(const std::vector<Trajectory>& trajectories) {
  ActionHistogram h;
  for (const auto& traj : trajectories)
    for (const auto& joint : traj.actions)
      for (auto a : joint.actions) ++h.counts[static_cast<std::size_t>(action_position(a))];
  return h;
}

DurationHistogram stay_duration_histogram(const std::vector<Trajectory>& trajectories, int window_hours,
                                          int bucket_hours) {
  DurationHistogram h;
  h.bucket_hours = bucket_hours;
  for (const auto& traj : trajectories) {
    // Windows present per visit; a visit completes when the vessel takes LeaveSystem.
    std::unordered_map<Imo, int> present;
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const PortState& s = traj.states[t];
      for (int i = 0; i < kSlotCount; ++i) {
        if (!s.occupied(i)) continue;
        const Imo imo = s.slots[static_cast<std::size_t>(i)];
        ++present[imo];
        if (t < traj.actions.size() && traj.actions[t][i] == SlotAction::LeaveSystem) {
          const auto hours = static_cast<std::size_t>(present[imo] * window_hours);
          const auto bucket = hours / static_cast<std::size_t>(bucket_hours);
          if (h.counts.size() <= bucket) h.counts.resize(bucket + 1, 0);
          ++h.counts[bucket];
          present.erase(imo);
        }
      }
    }
  }
  return h;
}

StatsOutput emit_stats(const std::vector<Trajectory>& trajectories, const std::filesystem::path& dir,
                       int window_hours) {
  StatsOutput out;
  std::filesystem::create_directories(dir);
  const ActionHistogram actions = action_histogram(trajectories);
  if (actions.total_non_nothing() == 0) out.warnings.push_back("empty dataset: no vessel actions to count");
  {
    std::ofstream f(dir / "action_frequencies.csv");
    f << "action_index,action,count,frequency\n";
    const auto freq = actions.frequencies();
    for (int k = 1; k < kActionCount; ++k) {
      const SlotAction a = action_at_position(k);
      f << action_index(a) << ',' << action_name(a) << ',' << actions.counts[static_cast<std::size_t>(k)] << ','
        << csv::format_double(freq[static_cast<std::size_t>(k)]) << '\n';
    }
  }
  const DurationHistogram stays = stay_duration_histogram(trajectories, window_hours, window_hours);
  if (stays.counts.empty()) out.warnings.push_back("empty dataset: no completed visits");
  {
    std::ofstream f(dir / "stay_durations.csv");
    f << "bucket_lo_hours,bucket_hi_hours,count,log_count\n";
    for (std::size_t k = 0; k < stays.counts.size(); ++k) {
      const auto c = stays.counts[k];
      if (c == 0) continue;
      f << k * static_cast<std::size_t>(stays.bucket_hours) << ',' << (k + 1) * static_cast<std::size_t>(stays.bucket_hours)
        << ',' << c << ',' << csv::format_double(std::log(static_cast<double>(c))) << '\n';
    }
  }
  return out;
}

WindowIndex chronological_split(const std::vector<Trajectory>& trajectories, double fraction) {
  WindowIndex lo = 0, hi = 0;
  bool any = false;
  for (const auto& t : trajectories) {
    if (t.states.empty()) continue;
    if (!any) {
      lo = t.states.front().window;
      hi = t.states.back().window;
      any = true;
    }
    lo = std::min(lo, t.states.front().window);
    hi = std::max(hi, t.states.back().window);
  }
  if (!any) return 0;
  const double span = static_cast<double>(hi - lo + 1);
  return lo + static_cast<WindowIndex>(std::floor(span * std::clamp(fraction, 0.0, 1.0)));
}

}  // namespace portirl
