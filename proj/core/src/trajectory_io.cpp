#include <algorithm>
#include <cstdio>
#include <fstream>

#include "portirl/csv.hpp"
#include "portirl/data_pipeline.hpp"

namespace portirl {

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << kTrajectoryHeader << '\n';
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    const PortState& s = trajectory.states[t];
    for (int i = 0; i < kSlotCount; ++i) {
      out << s.window << ',' << i << ',' << s.slots[static_cast<std::size_t>(i)] << ',';
      if (t < trajectory.actions.size()) {
        const SlotAction a = trajectory.actions[t][i];
        // Empty slots are written as 0 rather than the Nothing index.
        out << (s.occupied(i) ? action_index(a) : 0);
      }
      out << ',' << s.staytimes[static_cast<std::size_t>(i)] << '\n';
    }
  }
}

Trajectory read_trajectory(const std::filesystem::path& path, int id) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!csv::read_line(in, line) || line != kTrajectoryHeader)
    throw DataError(path.string() + ": expected header '" + std::string(kTrajectoryHeader) + "'");

  Trajectory traj;
  traj.id = id;
  PortState state;
  JointAction action;
  bool has_action = false;
  int expected_slot = 0;
  std::int64_t lineno = 1;
  bool closed = false;

  while (csv::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + why);
    };
    if (closed) fail("rows after the final window");
    const auto f = csv::split(line);
    if (f.size() != 5) fail("expected 5 fields");
    const auto window = csv::parse_int(f[0]);
    const auto slot = csv::parse_int(f[1]);
    const auto imo = csv::parse_int(f[2]);
    const auto stay = csv::parse_int(f[4]);
    if (!window || !slot || !imo || !stay || *imo < 0) fail("malformed row");
    if (*slot != expected_slot) fail("expected slot " + std::to_string(expected_slot));
    if (expected_slot == 0) {
      state = PortState{};
      state.window = *window;
      action = JointAction{};
      has_action = !f[3].empty();
      if (!traj.states.empty() && state.window != traj.states.back().window + 1) fail("windows not consecutive");
    } else if (*window != state.window) {
      fail("window changed mid-state");
    }
    state.slots[static_cast<std::size_t>(*slot)] = static_cast<Imo>(*imo);
    state.staytimes[static_cast<std::size_t>(*slot)] = static_cast<int>(*stay);
    if (has_action != !f[3].empty()) fail("action column must be filled for every slot of a window or none");
    if (has_action) {
      const auto idx = csv::parse_int(f[3]);
      if (!idx) fail("bad action_index");
      if (*idx == 0) {
        if (*imo != 0) fail("action_index 0 on an occupied slot");
        action[static_cast<int>(*slot)] = SlotAction::Nothing;
      } else {
        const auto a = action_from_index(static_cast<int>(*idx));
        if (!a) fail("action_index out of range");
        action[static_cast<int>(*slot)] = *a;
      }
    }
    if (++expected_slot == kSlotCount) {
      expected_slot = 0;
      traj.states.push_back(state);
      if (has_action) traj.actions.push_back(action);
      else closed = true;
    }
  }
  if (expected_slot != 0) throw DataError(path.string() + ": truncated window");
  if (!traj.states.empty() && traj.actions.size() + 1 != traj.states.size())
    throw DataError(path.string() + ": only the final window may lack actions");
  return traj;
}

void write_trajectory_dir(const std::filesystem::path& dir, const std::vector<Trajectory>& trajectories) {
  std::filesystem::create_directories(dir);
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().filename().string().starts_with("segment_")) std::filesystem::remove(entry.path());
  for (const auto& traj : trajectories) {
    char name[32];
    std::snprintf(name, sizeof name, "segment_%04d.csv", traj.id);
    write_trajectory(dir / name, traj);
  }
}

std::vector<Trajectory> read_trajectory_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("missing trajectory directory " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("segment_") && name.ends_with(".csv")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Trajectory> out;
  for (const auto& f : files) {
    const auto stem = f.stem().string().substr(8);
    const auto id = csv::parse_int(stem);
    out.push_back(read_trajectory(f, id ? static_cast<int>(*id) : static_cast<int>(out.size())));
  }
  return out;
}

}  // namespace portirl
