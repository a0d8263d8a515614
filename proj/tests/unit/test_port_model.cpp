#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "portirl/forecaster.hpp"
#include "portirl/port_model.hpp"

using namespace portirl;
using portirl::test::make_state;

TEST_SUITE("port_model") {
  TEST_CASE("slot index maps both ways") {
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < kSlotCount; ++i) {
      const SlotIndex s(i);
      const int z = static_cast<int>(s.zone());
      CHECK(seen.insert({z, s.offset()}).second);
      const SlotIndex back = s.zone() == Zone::Berth     ? SlotIndex::berth(s.offset())
                             : s.zone() == Zone::Waiting ? SlotIndex::waiting(s.offset())
                                                         : SlotIndex::incoming(s.offset());
      CHECK(back == s);
    }
    CHECK(SlotIndex(5).zone() == Zone::Berth);
    CHECK(SlotIndex(6).zone() == Zone::Waiting);
    CHECK(SlotIndex(13).zone() == Zone::Incoming);
  }

  TEST_CASE("action table indices") {
    CHECK(action_index(SlotAction::Nothing) == 1);
    CHECK(action_index(SlotAction::GoToWaiting) == 3);
    CHECK(action_index(SlotAction::GoToBerth4) == 7);
    CHECK(action_index(SlotAction::LeaveSystem) == 10);
    CHECK_FALSE(action_from_index(0).has_value());
    CHECK_FALSE(action_from_index(11).has_value());
    for (auto a : kAllActions) CHECK(action_from_index(action_index(a)) == a);
  }

  TEST_CASE("legal actions") {
    SUBCASE("empty slot") {
      CHECK(legal_actions(PortState{}, SlotIndex(3)) == ActionSet{SlotAction::Nothing});
    }
    SUBCASE("incoming with full berths") {
      auto s = make_state({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {13, 7}});
      CHECK(legal_actions(s, SlotIndex(13)) == ActionSet{SlotAction::GoToWaiting});
    }
    SUBCASE("waiting with berths 1 and 4 free") {
      auto s = make_state({{1, 1}, {2, 2}, {4, 3}, {5, 4}, {6, 91}});
      CHECK(legal_actions(s, SlotIndex(6)) ==
            ActionSet{SlotAction::Stay, SlotAction::GoToBerth1, SlotAction::GoToBerth4});
    }
    SUBCASE("berth occupant") {
      auto s = make_state({{2, 5}});
      CHECK(legal_actions(s, SlotIndex(2)) == ActionSet{SlotAction::Stay, SlotAction::LeaveSystem});
    }
    SUBCASE("incoming never stays") {
      auto s = make_state({{13, 5}});
      const auto set = legal_actions(s, SlotIndex(13));
      CHECK_FALSE(set.contains(SlotAction::Stay));
      CHECK_FALSE(set.contains(SlotAction::Nothing));
      CHECK(set.size() == 7);
    }
    SUBCASE("incoming with full waiting area") {
      auto s = make_state({{6, 1}, {7, 2}, {8, 3}, {9, 4}, {10, 5}, {11, 6}, {12, 7}, {13, 8}});
      CHECK_FALSE(legal_actions(s, SlotIndex(13)).contains(SlotAction::GoToWaiting));
    }
  }

  TEST_CASE("validate joint action") {
    CHECK(validate_joint_action(PortState{}, JointAction{}).ok());

    auto s = make_state({{6, 10}, {7, 11}});
    JointAction a;
    a[6] = SlotAction::GoToBerth2;
    a[7] = SlotAction::GoToBerth2;
    auto r = validate_joint_action(s, a);
    REQUIRE(r.violations.size() == 1);
    CHECK(r.violations[0].kind == ViolationKind::BerthConflict);
    CHECK(r.violations[0].slot == 7);

    auto b = make_state({{0, 10}});
    JointAction c;
    c[0] = SlotAction::GoToWaiting;
    auto r2 = validate_joint_action(b, c);
    REQUIRE(r2.violations.size() == 1);
    CHECK(r2.violations[0].kind == ViolationKind::IllegalSlotAction);
    CHECK(r2.violations[0].slot == 0);
  }

  TEST_CASE("transitions") {
    SUBCASE("empty port advances the window") {
      PortState s;
      s.window = 7;
      const auto n = apply_transition(s, JointAction{}, {});
      CHECK(n.empty());
      CHECK(n.window == 8);
    }
    SUBCASE("waiting vessel to berth 4") {
      auto s = make_state({{6, 91}});
      JointAction a;
      a[6] = SlotAction::GoToBerth4;
      const auto n = apply_transition(s, a, {});
      CHECK(n.slots[3] == 91);
      CHECK(n.staytimes[3] == 1);
      CHECK(n.slots[6] == kEmpty);
      CHECK(check_invariants(n).empty());
    }
    SUBCASE("leave plus one arrival") {
      auto s = make_state({{0, 5}});
      JointAction a;
      a[0] = SlotAction::LeaveSystem;
      const ArrivalEvent ev{77, s.window + 1};
      const auto n = apply_transition(s, a, std::span(&ev, 1));
      CHECK(n.slots[0] == kEmpty);
      CHECK(n.slots[13] == 77);
      CHECK(n.staytimes[13] == 1);
    }
    SUBCASE("stayers age, waiting area compacts") {
      auto s = make_state({{0, 1}, {6, 2}, {7, 3}, {8, 4}, {13, 5}});
      s.staytimes[0] = 4;
      s.staytimes[8] = 2;
      JointAction a;
      a[0] = SlotAction::Stay;
      a[6] = SlotAction::GoToBerth2;
      a[7] = SlotAction::Stay;
      a[8] = SlotAction::Stay;
      a[13] = SlotAction::GoToWaiting;
      const auto n = apply_transition(s, a, {});
      CHECK(n.staytimes[0] == 5);
      CHECK(n.slots[1] == 2);
      CHECK(n.slots[6] == 3);
      CHECK(n.slots[7] == 4);
      CHECK(n.staytimes[7] == 3);
      CHECK(n.slots[8] == 5);
      CHECK(n.staytimes[8] == 1);
      CHECK(n.incoming_count() == 0);
      CHECK(check_invariants(n).empty());
    }
    SUBCASE("illegal action is rejected with the violation list") {
      auto s = make_state({{0, 1}});
      JointAction a;
      a[0] = SlotAction::GoToBerth3;
      try {
        (void)apply_transition(s, a, {});
        FAIL("expected TransitionError");
      } catch (const TransitionError& e) {
        CHECK(e.report().violations.size() == 1);
      }
    }
    SUBCASE("arrival of a vessel still in port is rejected") {
      auto s = make_state({{0, 1}});
      JointAction a;
      a[0] = SlotAction::Stay;
      const ArrivalEvent ev{1, s.window + 1};
      CHECK_THROWS_AS(apply_transition(s, a, std::span(&ev, 1)), TransitionError);
    }
  }

  TEST_CASE("action encoding") {
    const auto zeros = encode_action(JointAction{});
    CHECK(std::all_of(zeros.begin(), zeros.end(), [](double v) { return v == 0.0; }));
    CHECK(decode_action(zeros) == JointAction{});

    JointAction a;
    a[0] = SlotAction::Stay;
    const auto e = encode_action(a);
    CHECK(e[1] == 1.0);
    CHECK(std::count(e.begin(), e.end(), 1.0) == 1);

    std::array<double, kActionVectorSize> v{};
    v[7 * kActionCount + 2] = 1.0;
    CHECK(decode_action(v)[7] == SlotAction::GoToWaiting);

    for (int slot = 0; slot < kSlotCount; ++slot)
      for (auto x : kAllActions) {
        JointAction j;
        j[slot] = x;
        CHECK(decode_action(encode_action(j)) == j);
      }

    std::array<double, kActionVectorSize> bad{};
    bad[4 * kActionCount + 1] = 1.0;
    bad[4 * kActionCount + 5] = 1.0;
    try {
      (void)decode_action(bad);
      FAIL("expected DecodeError");
    } catch (const DecodeError& err) {
      CHECK(err.block() == 4);
    }
    std::array<double, kActionVectorSize> frac{};
    frac[3] = 0.5;
    CHECK_THROWS_AS(decode_action(frac), DecodeError);
    CHECK_THROWS(decode_action(std::span<const double>(frac.data(), 10)));
  }

  TEST_CASE("waiting count and congestion threshold") {
    CHECK(waiting_count(PortState{}) == 0);
    CHECK_FALSE(is_congested(PortState{}));
    const auto two = make_state({{6, 1}, {7, 2}, {0, 9}, {13, 8}});
    CHECK(waiting_count(two) == 2);
    CHECK_FALSE(is_congested(two));
    const auto three = make_state({{6, 1}, {7, 2}, {8, 3}});
    CHECK(waiting_count(three) == 3);
    CHECK(is_congested(three));
    const auto full = make_state({{6, 1}, {7, 2}, {8, 3}, {9, 4}, {10, 5}, {11, 6}, {12, 7}});
    CHECK(waiting_count(full) == 7);
  }

  TEST_CASE("invariant checker catches broken states") {
    auto dup = make_state({{0, 5}, {1, 5}});
    CHECK_FALSE(check_invariants(dup).empty());
    auto gap = make_state({{7, 5}});
    CHECK_FALSE(check_invariants(gap).empty());
    PortState stale;
    stale.staytimes[2] = 3;
    CHECK_FALSE(check_invariants(stale).empty());
  }

  TEST_CASE("random legal rollouts keep every invariant and conserve vessels") {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution arrive(0.4);
    PortState s;
    Imo next_imo = 1;
    for (int t = 0; t < 2000; ++t) {
      const JointAction a = test::random_legal_action(s, rng);
      REQUIRE(validate_joint_action(s, a).ok());
      std::vector<Imo> cand;
      for (int k = 0; k < kIncomingCount; ++k)
        if (arrive(rng)) cand.push_back(next_imo++);
      const auto arrivals = admissible_arrivals(s, a, cand);
      const auto n = apply_transition(s, a, arrivals);
      REQUIRE(check_invariants(n).empty());
      int leavers = 0;
      for (int i = 0; i < kSlotCount; ++i) leavers += a[i] == SlotAction::LeaveSystem;
      CHECK(n.occupied_count() == s.occupied_count() - leavers + static_cast<int>(arrivals.size()));
      for (int i = kFirstIncomingSlot; i < kSlotCount; ++i)
        if (s.occupied(i)) {
          const auto moved = n.find(s.slots[static_cast<std::size_t>(i)]);
          CHECK((moved && *moved < kFirstIncomingSlot));
        }
      s = n;
    }
  }
}
