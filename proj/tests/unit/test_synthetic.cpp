#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "portirl/csv.hpp"
#include "portirl/synthetic_expert.hpp"

using namespace portirl;

namespace {

SyntheticConfig short_run(std::uint64_t seed = 7) {
  SyntheticConfig c;
  c.horizon = 400;
  c.seed = seed;
  c.fleet.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("synthetic_expert") {
  TEST_CASE("fleet") {
    FleetConfig fc;
    const auto reg = make_fleet(fc);
    CHECK(reg.size() == 40);
    for (const auto& [imo, a] : reg.sorted()) {
      CHECK(imo >= kFleetFirstImo);
      CHECK(imo < kFleetFirstImo + 40);
      CHECK((a.size_class >= 1 && a.size_class <= 3));
      CHECK((a.carrier_code >= 1 && a.carrier_code <= 5));
    }
    fc.n_vessels = 0;
    CHECK_THROWS(fc.validate());
  }

  TEST_CASE("same seed, same dataset") {
    const auto a = generate_dataset(short_run());
    const auto b = generate_dataset(short_run());
    CHECK(a.visits == b.visits);
    CHECK(a.timeline.states == b.timeline.states);
    CHECK(a.actions == b.actions);
    const auto c = generate_dataset(short_run(8));
    CHECK_FALSE(c.visits == a.visits);
  }

  TEST_CASE("visits reproduce the simulated timeline") {
    const auto ds = generate_dataset(short_run());
    REQUIRE_FALSE(ds.visits.empty());
    const auto tl = discretize(ds.visits, ds.registry, WindowingConfig{});
    CHECK(tl.states == ds.timeline.states);
    const auto t = infer_actions(tl.states, 0);
    CHECK(t.actions == ds.actions);
    CHECK_FALSE(replay_mismatch(t).has_value());
    for (std::size_t k = 0; k < t.actions.size(); ++k) CHECK(validate_joint_action(t.states[k], t.actions[k]).ok());
    CHECK(ds.timeline.states.back().empty());
  }

  TEST_CASE("fixed service duration") {
    auto c = short_run();
    c.rule.service_windows = {3, 3, 3};
    const auto ds = generate_dataset(c);
    std::map<std::pair<Imo, WindowIndex>, int> stays;  // (imo, first berth window) -> length
    for (std::size_t k = 0; k < ds.timeline.states.size(); ++k) {
      const auto& s = ds.timeline.states[k];
      for (int b = 0; b < kBerthCount; ++b) {
        if (!s.occupied(b)) continue;
        const WindowIndex start = s.window - s.staytimes[static_cast<std::size_t>(b)] + 1;
        stays[{s.slots[static_cast<std::size_t>(b)], start}] = s.staytimes[static_cast<std::size_t>(b)];
      }
    }
    REQUIRE_FALSE(stays.empty());
    for (const auto& [key, len] : stays) CHECK(len == 3);
  }

  TEST_CASE("no arrivals, no traffic") {
    auto c = short_run();
    c.arrival_probability = 0.0;
    const auto ds = generate_dataset(c);
    CHECK(ds.visits.empty());
    for (const auto& s : ds.timeline.states) CHECK(s.empty());
  }

  TEST_CASE("the expert rule is deterministic and legal") {
    const auto ds = generate_dataset(short_run());
    const ExpertRule rule;
    for (std::size_t k = 0; k + 1 < ds.timeline.states.size(); ++k) {
      const auto& s = ds.timeline.states[k];
      const auto a = rule.decide(s, ds.registry);
      CHECK(a == rule.decide(s, ds.registry));
      CHECK(a == ds.actions[k]);
      CHECK(validate_joint_action(s, a).ok());
    }
  }

  TEST_CASE("priority score") {
    const ExpertRule rule;
    CHECK(rule.score({2, 4}, 3) == doctest::Approx(1.0 * 2 + 0.5 * 4 + 2.0 * 3));
    CHECK(rule.service_for(1) == 2);
    CHECK(rule.service_for(3) == 4);
    ExpertRule bad;
    bad.service_windows = {0};
    CHECK_THROWS(bad.validate());
  }

  TEST_CASE("arrivals file") {
    const auto ds = generate_dataset(short_run());
    const auto dir = test::scratch_dir("arrivals");
    write_arrivals(dir / "a.csv", ds.timeline);
    std::ifstream in(dir / "a.csv");
    std::string line;
    REQUIRE(csv::read_line(in, line));
    CHECK(line == "window,imo");
    std::size_t rows = 0, expected = 0;
    while (csv::read_line(in, line)) ++rows;
    for (const auto& a : ds.timeline.arrivals) expected += a.size();
    CHECK(rows == expected);
    CHECK(rows == ds.visits.size());
  }
}
