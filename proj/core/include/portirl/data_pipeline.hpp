#ifndef PORTIRL_DATA_PIPELINE_HPP
#define PORTIRL_DATA_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "portirl/port_model.hpp"

namespace portirl {

inline constexpr int kRawFeatureCount = 3 * kSlotCount;

using Timestamp = std::int64_t;  // epoch seconds, UTC

/// One port call as recorded in the visits file.
struct VisitRecord {
  Imo imo = kEmpty;
  Timestamp arrival_ts = 0;
  std::optional<Timestamp> waiting_enter_ts;
  std::optional<Timestamp> waiting_exit_ts;
  Timestamp berth_enter_ts = 0;
  Timestamp berth_exit_ts = 0;
  int berth_id = 1;  // 1-based

  friend bool operator==(const VisitRecord&, const VisitRecord&) = default;
};

struct VesselAttrs {
  int size_class = 0;
  int carrier_code = 0;
  friend bool operator==(const VesselAttrs&, const VesselAttrs&) = default;
};

class VesselRegistry {
 public:
  void add(Imo imo, VesselAttrs attrs);
  const VesselAttrs* find(Imo imo) const;
  bool contains(Imo imo) const { return find(imo) != nullptr; }
  std::size_t size() const { return attrs_.size(); }
  int max_size_class() const { return max_size_; }
  int max_carrier_code() const { return max_carrier_; }
  /// Entries sorted by imo.
  std::vector<std::pair<Imo, VesselAttrs>> sorted() const;

 private:
  std::unordered_map<Imo, VesselAttrs> attrs_;
  int max_size_ = 0;
  int max_carrier_ = 0;
};

struct WindowingConfig {
  int window_hours = 8;
  /// Fully-empty runs at least this long are cut out (21 windows = one week).
  int empty_span_prune_windows = 21;

  Timestamp window_seconds() const { return static_cast<Timestamp>(window_hours) * 3600; }
  void validate() const;
};

WindowIndex window_of(Timestamp ts, const WindowingConfig& cfg);

/// Row-level problem found while loading a CSV file.
struct Diagnostic {
  std::int64_t line = 0;
  std::string message;
};

/// Fatal, file- or window-level data problem.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::optional<WindowIndex> window = std::nullopt)
      : std::runtime_error(what), window_(window) {}
  std::optional<WindowIndex> window() const { return window_; }

 private:
  std::optional<WindowIndex> window_;
};

struct VisitLoad {
  std::vector<VisitRecord> records;
  std::vector<Diagnostic> diagnostics;
  std::vector<std::string> warnings;
};

struct RegistryLoad {
  VesselRegistry registry;
  std::vector<Diagnostic> diagnostics;
};

inline constexpr std::string_view kVisitsHeader =
    "imo,arrival_ts,waiting_enter_ts,waiting_exit_ts,berth_enter_ts,berth_exit_ts,berth_id";
inline constexpr std::string_view kRegistryHeader = "imo,size_class,carrier_code";

VisitLoad load_visits(const std::filesystem::path& path);
RegistryLoad load_registry(const std::filesystem::path& path);
void write_visits(const std::filesystem::path& path, const std::vector<VisitRecord>& visits);
void write_registry(const std::filesystem::path& path, const VesselRegistry& registry);

/// Contiguous run of window snapshots. arrivals[k] are the vessels that
/// appear in states[k]'s incoming strip.
struct Timeline {
  std::vector<PortState> states;
  std::vector<std::vector<ArrivalEvent>> arrivals;
};

/// Projects visits onto the window grid. Each vessel spends exactly its
/// arrival window in the incoming strip, then waits until its berth block,
/// which spans the windows overlapping its berth interval. A berth block
/// that would start the window right after its berth was vacated is pushed
/// back one window. The timeline ends with one empty state.
Timeline discretize(const std::vector<VisitRecord>& visits, const VesselRegistry& registry,
                    const WindowingConfig& cfg);

/// Cuts fully-empty runs of at least cfg.empty_span_prune_windows windows.
/// The first empty state of a cut run is kept as the terminal state of the
/// preceding segment, so departures into the gap stay observable.
std::vector<Timeline> prune_empty_spans(const Timeline& timeline, const WindowingConfig& cfg);

/// Expert demonstration: states[t] --actions[t]--> states[t+1].
struct Trajectory {
  int id = 0;
  std::vector<PortState> states;
  std::vector<JointAction> actions;

  std::size_t steps() const { return actions.size(); }
  /// Arrival events that move states[t] to states[t+1].
  std::vector<ArrivalEvent> arrivals(std::size_t t) const;
};

class InferenceError : public std::runtime_error {
 public:
  InferenceError(WindowIndex window, int slot, const std::string& what);
  WindowIndex window() const { return window_; }
  int slot() const { return slot_; }

 private:
  WindowIndex window_;
  int slot_;
};

Trajectory infer_actions(const std::vector<PortState>& segment, int id);

/// Replays a trajectory through apply_transition; returns the first
/// mismatch, or nullopt when every stored state is reproduced exactly.
std::optional<std::string> replay_mismatch(const Trajectory& trajectory);

using RawStateFeatures = std::array<double, kRawFeatureCount>;

/// [size_1, carrier_1, staytime_1, ..., size_19, carrier_19, staytime_19].
RawStateFeatures expand_features(const PortState& state, const VesselRegistry& registry);

/// Scales raw features into [0,1]: size and carrier by registry maxima,
/// staytime by a cap.
struct FeatureScaling {
  double size_max = 1.0;
  double carrier_max = 1.0;
  double staytime_cap = 16.0;

  static FeatureScaling from_registry(const VesselRegistry& registry, double staytime_cap = 16.0);
  RawStateFeatures apply(const RawStateFeatures& raw) const;
};

/// Trajectory files: one per segment, 19 rows per window.
inline constexpr std::string_view kTrajectoryHeader = "window,slot,imo,action_index,staytime";
void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory read_trajectory(const std::filesystem::path& path, int id);
void write_trajectory_dir(const std::filesystem::path& dir, const std::vector<Trajectory>& trajectories);
std::vector<Trajectory> read_trajectory_dir(const std::filesystem::path& dir);

struct ActionHistogram {
  /// Counts per action position (0 = Nothing).
  std::array<std::int64_t, kActionCount> counts{};
  /// Relative frequencies over the nine non-Nothing actions.
  std::array<double, kActionCount> frequencies() const;
  std::int64_t total_non_nothing() const;
};

struct DurationHistogram {
  int bucket_hours = 8;
  std::vector<std::int64_t> counts;  // bucket k covers [k*h, (k+1)*h) hours
};

ActionHistogram action_histogram(const std::vector<Trajectory>& trajectories);

/// Time in port per completed visit, bucketed by `bucket_hours`.
DurationHistogram stay_duration_histogram(const std::vector<Trajectory>& trajectories, int window_hours,
                                          int bucket_hours);

struct StatsOutput {
  std::vector<std::string> warnings;
};

/// Writes action_frequencies.csv and stay_durations.csv into `dir`.
StatsOutput emit_stats(const std::vector<Trajectory>& trajectories, const std::filesystem::path& dir,
                       int window_hours);

/// Earliest window such that `fraction` of the covered window range lies before it.
WindowIndex chronological_split(const std::vector<Trajectory>& trajectories, double fraction);

}  // namespace portirl

#endif  // PORTIRL_DATA_PIPELINE_HPP
