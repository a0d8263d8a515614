#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "portirl/forecaster.hpp"
#include "portirl/synthetic_expert.hpp"

using namespace portirl;
using portirl::test::make_state;

namespace {

// Puts probability `p` on the preferred action of each slot (when legal) and
// spreads the rest evenly over the other legal actions.
SlotDistributions preference(const PortState& s, const std::array<SlotAction, kSlotCount>& want,
                             const std::array<double, kSlotCount>& p) {
  SlotDistributions d{};
  for (int i = 0; i < kSlotCount; ++i) {
    auto& row = d[static_cast<std::size_t>(i)];
    const auto legal = legal_actions(s, SlotIndex(i));
    const SlotAction w = want[static_cast<std::size_t>(i)];
    if (legal.size() == 1 || !legal.contains(w)) {
      for (auto a : legal.to_vector()) row[static_cast<std::size_t>(action_position(a))] = 1.0 / legal.size();
      continue;
    }
    const double rest = (1.0 - p[static_cast<std::size_t>(i)]) / (legal.size() - 1);
    for (auto a : legal.to_vector()) row[static_cast<std::size_t>(action_position(a))] = a == w ? p[static_cast<std::size_t>(i)] : rest;
  }
  return d;
}

// Every occupant prefers `a` whenever it is legal.
FunctionPolicy always(SlotAction a) {
  return FunctionPolicy([a](const PortState& s) {
    std::array<SlotAction, kSlotCount> want;
    want.fill(a);
    std::array<double, kSlotCount> p;
    p.fill(0.9);
    return preference(s, want, p);
  });
}

FunctionPolicy expert_policy(const ExpertRule& rule, const VesselRegistry& reg) {
  return FunctionPolicy([rule, reg](const PortState& s) {
    const JointAction a = rule.decide(s, reg);
    SlotDistributions d{};
    for (int i = 0; i < kSlotCount; ++i) d[static_cast<std::size_t>(i)][static_cast<std::size_t>(action_position(a[i]))] = 1.0;
    return d;
  });
}

}  // namespace

TEST_SUITE("forecaster") {
  TEST_CASE("empty rollout stays empty") {
    auto pol = always(SlotAction::Stay);
    ForecastConfig c;
    c.horizon = 5;
    const auto t = rollout(PortState{}, pol, no_arrivals(), c);
    CHECK(t.states.size() == 6);
    for (const auto& s : t.states) CHECK(s.empty());
    for (const auto& a : t.actions) CHECK(a == JointAction{});
  }

  TEST_CASE("berth conflicts") {
    auto s = make_state({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {6, 10}, {7, 11}});
    std::array<SlotAction, kSlotCount> want;
    want.fill(SlotAction::Stay);
    want[6] = want[7] = SlotAction::GoToBerth6;
    std::array<double, kSlotCount> p;
    p.fill(0.9);
    std::mt19937_64 rng(0);
    ForecastConfig c;

    SUBCASE("higher probability wins, loser re-decides") {
      p[6] = 0.7;
      p[7] = 0.8;
      const auto a = decide_joint(s, preference(s, want, p), c, rng);
      CHECK(a[7] == SlotAction::GoToBerth6);
      CHECK(a[6] == SlotAction::Stay);
    }
    SUBCASE("ties go to the lower slot") {
      const auto a = decide_joint(s, preference(s, want, p), c, rng);
      CHECK(a[6] == SlotAction::GoToBerth6);
      CHECK(a[7] == SlotAction::Stay);
    }
    SUBCASE("lowest-slot policy ignores probabilities") {
      p[6] = 0.6;
      c.conflict_policy = ConflictPolicy::LowestSlot;
      const auto a = decide_joint(s, preference(s, want, p), c, rng);
      CHECK(a[6] == SlotAction::GoToBerth6);
      CHECK(a[7] == SlotAction::Stay);
    }
  }

  TEST_CASE("waiting overflow sends the least confident entrant elsewhere") {
    auto s = make_state({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {6, 10}, {7, 11}, {8, 12}, {9, 13}, {10, 14}, {11, 15},
                         {13, 20}, {14, 21}});
    std::array<SlotAction, kSlotCount> want;
    want.fill(SlotAction::Stay);
    want[13] = want[14] = SlotAction::GoToWaiting;
    std::array<double, kSlotCount> p;
    p.fill(0.9);
    p[14] = 0.6;
    std::mt19937_64 rng(0);
    const auto a = decide_joint(s, preference(s, want, p), ForecastConfig{}, rng);
    CHECK(a[13] == SlotAction::GoToWaiting);
    CHECK(a[14] == SlotAction::GoToBerth6);
    CHECK(validate_joint_action(s, a).ok());
  }

  TEST_CASE("congestion forecast") {
    auto stay = always(SlotAction::Stay);
    ForecastConfig c;
    SUBCASE("five waiting vessels stay") {
      auto s = make_state({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 10}, {10, 11}});
      CHECK(predict_congestion(s, stay, no_arrivals(), c));
    }
    SUBCASE("empty port") { CHECK_FALSE(predict_congestion(PortState{}, stay, no_arrivals(), c)); }
    SUBCASE("two waiting plus an entrant") {
      auto s = make_state({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}, {13, 9}});
      auto wait = always(SlotAction::GoToWaiting);
      CHECK(predict_congestion(s, wait, no_arrivals(), c));
    }
    SUBCASE("identity with a one-window rollout") {
      std::mt19937_64 rng(4);
      auto sampler = always(SlotAction::GoToBerth2);
      PortState s;
      for (int t = 0; t < 200; ++t) {
        ForecastConfig one;
        auto arrivals = [t](WindowIndex) { return std::vector<Imo>{static_cast<Imo>(100 + t)}; };
        CHECK(predict_congestion(s, sampler, arrivals, one) ==
              is_congested(rollout(s, sampler, arrivals, one).states.back()));
        const auto a = test::random_legal_action(s, rng);
        s = apply_transition(s, a, admissible_arrivals(s, a, std::vector<Imo>{static_cast<Imo>(1 + t % 40), static_cast<Imo>(41 + t % 40)}));
      }
    }
  }

  TEST_CASE("departure forecast") {
    ForecastConfig c;
    c.horizon = 10;
    auto s = make_state({{0, 5}}, 50);
    SUBCASE("immediate leave means the next window") {
      auto leave = always(SlotAction::LeaveSystem);
      const auto d = predict_departures({s}, leave, no_arrivals(), c);
      REQUIRE(d.count(5) == 1);
      CHECK(d.at(5).window == 51);
    }
    SUBCASE("never leaving is unresolved") {
      auto stay = always(SlotAction::Stay);
      const auto d = predict_departures({s}, stay, no_arrivals(), c);
      CHECK_FALSE(d.at(5).window.has_value());
    }
  }

  TEST_CASE("rollouts are reproducible") {
    const auto base = make_state({{0, 1}, {6, 2}, {7, 3}, {13, 4}, {14, 5}});
    auto pol = FunctionPolicy([](const PortState& s) {
      std::array<SlotAction, kSlotCount> want;
      want.fill(SlotAction::LeaveSystem);
      for (int i = kFirstWaitingSlot; i < kSlotCount; ++i) want[static_cast<std::size_t>(i)] = go_to_berth(i % kBerthCount);
      std::array<double, kSlotCount> p;
      p.fill(0.5);
      return preference(s, want, p);
    });
    auto arrivals = [](WindowIndex w) { return std::vector<Imo>{static_cast<Imo>(10 + w % 20)}; };
    for (auto rule : {DecisionRule::Argmax, DecisionRule::Sample}) {
      ForecastConfig c;
      c.horizon = 40;
      c.decision_rule = rule;
      c.seed = 9;
      const auto a = rollout(base, pol, arrivals, c);
      const auto b = rollout(base, pol, arrivals, c);
      CHECK(a.states == b.states);
      CHECK(a.actions == b.actions);
      CHECK_FALSE(replay_mismatch(a).has_value());
    }
  }

  TEST_CASE("admissible arrivals") {
    auto s = make_state({{0, 1}, {6, 2}, {7, 3}, {8, 4}, {9, 5}, {10, 6}});
    JointAction a;
    a[0] = SlotAction::LeaveSystem;
    for (int i = 6; i <= 10; ++i) a[i] = SlotAction::Stay;
    const std::vector<Imo> cand{1, 2, 7, 7, 8, 9};
    const auto adm = admissible_arrivals(s, a, cand);
    // 1 has left and may return; 2 is still waiting; 7 once; two free waiting places.
    REQUIRE(adm.size() == 2);
    CHECK(adm[0].imo == 1);
    CHECK(adm[1].imo == 7);
    CHECK(adm[0].window == 101);
  }

  TEST_CASE("accuracy metrics") {
    using A = SlotAction;
    const std::vector<A> truth{A::Stay, A::GoToWaiting, A::LeaveSystem, A::GoToBerth2};
    CHECK(action_accuracy(truth, truth).value() == 1.0);
    const std::vector<A> pred{A::Stay, A::GoToWaiting, A::Stay, A::GoToBerth2};
    const auto acc = action_accuracy(pred, truth);
    CHECK(acc.matches == 3);
    CHECK(acc.total == 4);
    CHECK(acc.value() == 0.75);

    const std::vector<A> t2{A::Nothing, A::Stay}, p2{A::Nothing, A::LeaveSystem};
    CHECK(action_accuracy(p2, t2).total == 1);
    CHECK(action_accuracy(p2, t2, true).total == 2);
    CHECK(action_accuracy(p2, t2, true).value() == 0.5);
    CHECK_FALSE(action_accuracy(std::vector<A>{A::Nothing}, std::vector<A>{A::Nothing}).value().has_value());
    CHECK_THROWS(action_accuracy(pred, t2));

    const std::vector<bool> flags{true, false, true};
    CHECK(event_accuracy(flags, flags).value() == 1.0);
    const std::vector<std::optional<WindowIndex>> dep{10, 12, std::nullopt}, actual{10, 11, 14};
    CHECK(event_accuracy(dep, actual).matches == 1);
    CHECK_FALSE(event_accuracy(std::vector<bool>{}, std::vector<bool>{}).value().has_value());
  }

  TEST_CASE("the expert's own rule scores perfectly") {
    SyntheticConfig sc;
    sc.horizon = 300;
    const auto ds = generate_dataset(sc);
    Trajectory t = infer_actions(ds.timeline.states, 0);
    REQUIRE(t.actions == ds.actions);
    auto pol = expert_policy(sc.rule, ds.registry);
    EvaluationConfig ec;
    ec.split_window = chronological_split({t}, 0.5);
    const auto rep = evaluate({t}, pol, ec);
    CHECK(rep.action.total > 0);
    CHECK(rep.action.value() == 1.0);
    CHECK(rep.congestion.value() == 1.0);
    CHECK(rep.leave.total > 0);
    CHECK(rep.leave.value() == 1.0);
    std::int64_t diag = 0, all = 0;
    for (int i = 0; i < kActionCount; ++i)
      for (int j = 0; j < kActionCount; ++j) {
        all += rep.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        if (i == j) diag += rep.confusion[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    CHECK(diag == all);
    CHECK(rep.action_baseline.total == rep.action.total);
    CHECK(rep.congestion_baseline.total == rep.congestion.total);
  }
}
