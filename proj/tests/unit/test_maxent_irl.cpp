#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "portirl/forecaster.hpp"
#include "portirl/maxent_irl.hpp"
#include "portirl/toy_mdp.hpp"

using namespace portirl;
using portirl::test::make_state;
using portirl::test::scratch_dir;

namespace {

IrlConfig exact(double gamma) {
  IrlConfig c;
  c.gamma = gamma;
  return c;
}

// One state, two self-looping actions with unit-vector features.
TabularMdp bandit() {
  TabularMdp m;
  m.feature_dim = 2;
  m.states.resize(1);
  m.states[0].actions = {{{1.0, 0.0}, {{0, 1.0}}}, {{0.0, 1.0}, {{0, 1.0}}}};
  return m;
}

// 0 -> 1 -> 2 (terminal), with a stochastic reset action in the middle.
TabularMdp chain() {
  TabularMdp m;
  m.feature_dim = 3;
  m.states.resize(3);
  m.states[0].actions = {{{1.0, 0.0, 0.0}, {{1, 1.0}}}, {{0.0, 1.0, 0.0}, {{0, 1.0}}}};
  m.states[1].actions = {{{0.0, 0.0, 1.0}, {{2, 1.0}}}, {{0.5, 0.5, 0.0}, {{0, 0.5}, {1, 0.5}}}};
  m.states[2].terminal = true;
  m.states[2].actions = {{{0.0, 0.0, 0.0}, {{2, 1.0}}}};
  return m;
}

std::vector<double> random_theta(int n, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> t(static_cast<std::size_t>(n));
  for (auto& v : t) v = g(rng);
  return t;
}

SlotContextBuilder port_builder(int temporal_dim = 0) {
  VesselRegistry reg;
  for (Imo i = 1; i <= 30; ++i) reg.add(i, {1 + static_cast<int>(i % 3), 1 + static_cast<int>(i % 5)});
  return SlotContextBuilder(reg, FeatureScaling::from_registry(reg), temporal_dim);
}

FactoredDataset random_factored(const SlotContextBuilder& b, int windows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FactoredDataset d;
  d.context_dim = b.dimension();
  PortState s;
  Imo next = 1;
  for (int t = 0; t < windows; ++t) {
    const JointAction a = test::random_legal_action(s, rng);
    const std::vector<double> temporal(static_cast<std::size_t>(b.temporal_dim()), 0.25);
    for (int i = 0; i < kSlotCount; ++i) {
      if (!s.occupied(i)) continue;
      d.decisions.push_back({b.build(s, temporal, i), legal_actions(s, SlotIndex(i)), a[i], 0, s.window, i});
    }
    std::vector<Imo> cand;
    if (t % 2 == 0) cand = {next, static_cast<Imo>(next % 30 + 1)};
    next = next % 30 + 1;
    s = apply_transition(s, a, admissible_arrivals(s, a, cand));
  }
  return d;
}

}  // namespace

TEST_SUITE("maxent_irl") {
  TEST_CASE("linear reward") {
    const std::vector<double> phi{0.5, -2.0, 3.0};
    CHECK(reward(std::vector<double>(3, 0.0), phi) == 0.0);
    CHECK(reward(std::vector<double>{0.0, 1.0, 0.0}, phi) == -2.0);
    const std::vector<double> t1{0.3, 0.1, -1.0}, t2{1.0, 2.0, 0.5}, t12{1.3, 2.1, -0.5};
    CHECK(reward(t12, phi) == doctest::Approx(reward(t1, phi) + reward(t2, phi)).epsilon(1e-14));
    CHECK_THROWS(reward(t1, std::vector<double>{1.0}));

    auto p = RewardParams::linear(4);
    const std::vector<double> x{1.0, 0.5, 0.0, 2.0};
    for (auto a : kAllActions) CHECK(reward(p, x, a) == 0.0);
    p.theta[static_cast<std::size_t>(action_position(SlotAction::GoToWaiting) * 4)] = 1.0;
    CHECK(reward(p, x, SlotAction::GoToWaiting) == 1.0);
    CHECK(reward(p, x, SlotAction::Stay) == 0.0);
  }

  TEST_CASE("soft values on a bandit") {
    const auto m = bandit();
    SUBCASE("zero reward") {
      const auto sv = soft_value_iteration(m, std::vector<double>{0.0, 0.0}, exact(0.0));
      CHECK(sv.q[0] == std::vector<double>{0.0, 0.0});
      CHECK(sv.z(0) == doctest::Approx(2.0));
      CHECK(policy(sv, 0) == std::vector<double>{0.5, 0.5});
      CHECK(sv.v[0] == 0.0);
    }
    SUBCASE("one unit of reward") {
      const auto sv = soft_value_iteration(m, std::vector<double>{1.0, 0.0}, exact(0.0));
      const auto pi = policy(sv, 0);
      CHECK(pi[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-14));
      CHECK(pi[0] == doctest::Approx(0.73106).epsilon(1e-5));
      CHECK(pi[1] == doctest::Approx(0.26894).epsilon(1e-5));
      CHECK(sv.v[0] == doctest::Approx(pi[0]).epsilon(1e-14));
    }
    SUBCASE("log-sum-exp value") {
      auto c = exact(0.0);
      c.v_definition = ValueDefinition::LogSumExp;
      const auto sv = soft_value_iteration(m, std::vector<double>{1.0, 0.0}, c);
      CHECK(sv.v[0] == doctest::Approx(std::log(std::exp(1.0) + 1.0)).epsilon(1e-14));
    }
  }

  TEST_CASE("chain values match the truncated-horizon oracle") {
    const auto m = chain();
    const std::vector<double> theta{0.7, -0.3, 1.1};
    for (auto def : {ValueDefinition::ExpectedQ, ValueDefinition::LogSumExp}) {
      auto c = exact(0.9);
      c.v_definition = def;
      const auto sv = soft_value_iteration(m, theta, c);
      const auto bf = brute_force_soft_values(m, theta, 0.9, 400, def);
      for (int s = 0; s < 3; ++s) CHECK(std::abs(sv.v[static_cast<std::size_t>(s)] - bf[static_cast<std::size_t>(s)]) < 1e-8);
      CHECK(sv.v[2] == 0.0);
    }
  }

  TEST_CASE("fixed point does not depend on the sweep order") {
    const auto toy = enumerate_toy_mdp({});
    const auto theta = random_theta(toy.tabular.feature_dim, 3);
    std::vector<int> forward(static_cast<std::size_t>(toy.tabular.state_count()));
    std::iota(forward.begin(), forward.end(), 0);
    std::vector<int> shuffled = forward;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(5));
    const auto a = soft_value_iteration(toy.tabular, theta, exact(0.9), forward);
    const auto b = soft_value_iteration(toy.tabular, theta, exact(0.9), shuffled);
    for (std::size_t s = 0; s < a.v.size(); ++s) CHECK(std::abs(a.v[s] - b.v[s]) < 1e-9);
  }

  TEST_CASE("policy normalization and shift invariance") {
    const auto toy = enumerate_toy_mdp({});
    const auto sv = soft_value_iteration(toy.tabular, random_theta(toy.tabular.feature_dim, 4), exact(0.9));
    for (int s = 0; s < toy.tabular.state_count(); ++s) {
      const auto pi = policy(sv, s);
      CHECK(std::accumulate(pi.begin(), pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (double p : pi) CHECK((p > 0.0 && p <= 1.0));
    }

    std::array<double, kActionCount> scores{0.3, -1.0, 2.0, 0.0, 0.5, 0.1, -0.2, 0.9, 1.4, -3.0};
    const ActionSet legal{SlotAction::Stay, SlotAction::GoToBerth1, SlotAction::GoToBerth6, SlotAction::LeaveSystem};
    const auto base = masked_softmax(scores, legal);
    auto shifted = scores;
    for (auto& x : shifted) x += 37.5;
    const auto moved = masked_softmax(shifted, legal);
    for (int a = 0; a < kActionCount; ++a) CHECK(std::abs(base[static_cast<std::size_t>(a)] - moved[static_cast<std::size_t>(a)]) < 1e-12);
    CHECK(base[0] == 0.0);
    CHECK(base[2] == 0.0);
    CHECK(std::accumulate(base.begin(), base.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    std::array<double, kActionCount> flat{};
    const auto uni = masked_softmax(flat, legal);
    CHECK(uni[1] == 0.25);
    CHECK(uni[9] == 0.25);
  }

  TEST_CASE("tabular likelihood") {
    const auto m = bandit();
    const std::vector<Demonstration> data{{0, 0}, {0, 1}, {0, 0}};
    SUBCASE("uniform policy") {
      CHECK(log_likelihood(m, data, std::vector<double>{0.0, 0.0}, exact(0.0)) ==
            doctest::Approx(-3.0 * std::log(2.0)).epsilon(1e-14));
    }
    SUBCASE("matches the policy oracle on the toy port") {
      const auto toy = enumerate_toy_mdp({});
      const auto theta = random_theta(toy.tabular.feature_dim, 8);
      const auto sv = soft_value_iteration(toy.tabular, theta, exact(0.9));
      const auto demos = sample_demonstrations(toy.tabular, sv, 80, 2);
      double oracle = 0.0;
      for (const auto& d : demos) oracle += std::log(policy(sv, d.state)[static_cast<std::size_t>(d.action)]);
      const double ll = log_likelihood(toy.tabular, demos, theta, exact(0.9));
      CHECK(std::abs(ll - oracle) < 1e-10);
      CHECK(ll <= 0.0);
    }
    SUBCASE("near-deterministic policy approaches zero") {
      const std::vector<Demonstration> firsts{{0, 0}, {0, 0}};
      const double ll = log_likelihood(m, firsts, std::vector<double>{40.0, 0.0}, exact(0.0));
      CHECK(ll <= 0.0);
      CHECK(ll > -1e-15);
    }
    SUBCASE("out-of-range demonstration is rejected") {
      const std::vector<Demonstration> bad{{0, 5}};
      CHECK_THROWS(log_likelihood(m, bad, std::vector<double>{0.0, 0.0}, exact(0.0)));
    }
  }

  TEST_CASE("tabular gradient") {
    SUBCASE("stationary when the data matches the model") {
      const std::vector<Demonstration> even{{0, 0}, {0, 1}};
      const auto g = grad_log_likelihood(bandit(), even, std::vector<double>{0.0, 0.0}, exact(0.0));
      CHECK(std::abs(g[0]) < 1e-15);
      CHECK(std::abs(g[1]) < 1e-15);
    }
    SUBCASE("finite differences on the toy port") {
      ToyMdpConfig tc;
      tc.alphabet = 1;
      const auto toy = enumerate_toy_mdp(tc);
      const auto theta = random_theta(toy.tabular.feature_dim, 6);
      const auto sv = soft_value_iteration(toy.tabular, theta, exact(0.9));
      const auto demos = sample_demonstrations(toy.tabular, sv, 30, 4);
      for (auto def : {ValueDefinition::ExpectedQ, ValueDefinition::LogSumExp}) {
        auto c = exact(0.9);
        c.v_definition = def;
        const auto r = gradient_check(toy.tabular, demos, random_theta(toy.tabular.feature_dim, 7), c);
        CHECK(r.max_relative_error < 1e-5);
      }
    }
    SUBCASE("duplicated data doubles the gradient") {
      const auto m = chain();
      std::vector<Demonstration> d{{0, 0}, {1, 1}, {1, 0}, {0, 1}};
      const auto theta = random_theta(3, 2);
      const auto g1 = grad_log_likelihood(m, d, theta, exact(0.9));
      auto dd = d;
      dd.insert(dd.end(), d.begin(), d.end());
      const auto g2 = grad_log_likelihood(m, dd, theta, exact(0.9));
      for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2[k] == doctest::Approx(2.0 * g1[k]).epsilon(1e-12));
    }
  }

  TEST_CASE("tabular fit") {
    const auto m = chain();
    const std::vector<Demonstration> d{{0, 0}, {0, 0}, {1, 0}, {0, 1}};
    SUBCASE("zero learning rate keeps theta at zero") {
      auto c = exact(0.9);
      c.learning_rate = 0.0;
      c.iterations = 5;
      const auto r = fit(m, d, c);
      CHECK(r.theta == std::vector<double>(3, 0.0));
      for (const auto& e : r.log) CHECK(e.log_likelihood == r.log.front().log_likelihood);
    }
    SUBCASE("ascent improves the likelihood") {
      auto c = exact(0.9);
      c.iterations = 50;
      const auto r = fit(m, d, c);
      CHECK(r.log.back().log_likelihood > r.log.front().log_likelihood);
      CHECK(r.log.size() == 51);
      CHECK_FALSE(r.diverged);
    }
  }

  TEST_CASE("config validation") {
    auto c = IrlConfig::factored();
    CHECK(c.gamma == 0.0);
    CHECK_NOTHROW(c.validate());
    c.gamma = 0.5;
    CHECK_THROWS(c.validate());
    auto e = exact(1.0);
    CHECK_THROWS(e.validate());
    e = exact(0.9);
    e.value_tol = 0.0;
    CHECK_THROWS(e.validate());
  }

  TEST_CASE("slot context layout") {
    const auto b = port_builder(4);
    CHECK(b.dimension() == SlotContextBuilder::kHandcrafted + kRawFeatureCount + 4);
    auto s = make_state({{0, 3}, {6, 4}, {13, 5}});
    const std::vector<double> temporal{0.1, 0.2, 0.3, 0.4};
    const auto rows = b.build_all(s, temporal);
    REQUIRE(rows.size() == static_cast<std::size_t>(kSlotCount));
    for (int i = 0; i < kSlotCount; ++i) {
      CHECK(rows[static_cast<std::size_t>(i)] == b.build(s, temporal, i));
      CHECK(rows[static_cast<std::size_t>(i)][0] == 1.0);
      CHECK(rows[static_cast<std::size_t>(i)].back() == 0.4);
    }
    CHECK(rows[0][1] == 1.0);
    CHECK(rows[6][2] == 1.0);
    CHECK(rows[13][3] == 1.0);
  }

  TEST_CASE("factored policy") {
    const auto b = port_builder();
    SUBCASE("empty port") {
      const auto p = RewardParams::linear(b.dimension());
      const auto d = predict_action_distribution(p, b, PortState{}, {});
      for (const auto& slot : d) CHECK(slot[0] == 1.0);
    }
    SUBCASE("zero weights are uniform over legal actions") {
      const auto p = RewardParams::linear(b.dimension());
      auto s = make_state({{0, 1}, {6, 2}, {13, 3}});
      const auto d = predict_action_distribution(p, b, s, {});
      for (int i = 0; i < kSlotCount; ++i) {
        const auto legal = legal_actions(s, SlotIndex(i));
        for (auto a : kAllActions) {
          const double expected = legal.contains(a) ? 1.0 / legal.size() : 0.0;
          CHECK(d[static_cast<std::size_t>(i)][static_cast<std::size_t>(action_position(a))] ==
                doctest::Approx(expected).epsilon(1e-15));
        }
      }
    }
    SUBCASE("normalized on random states and argmax stable under scaling") {
      auto p = RewardParams::linear(b.dimension());
      p.theta = random_theta(static_cast<int>(p.size()), 12);
      auto scaled = p;
      for (auto& t : scaled.theta) t *= 3.0;
      const auto data = random_factored(b, 200, 3);
      std::mt19937_64 rng(1);
      PortState s;
      for (int t = 0; t < 200; ++t) {
        const auto d = predict_action_distribution(p, b, s, {});
        const auto d3 = predict_action_distribution(scaled, b, s, {});
        for (int i = 0; i < kSlotCount; ++i) {
          const auto& row = d[static_cast<std::size_t>(i)];
          const auto& row3 = d3[static_cast<std::size_t>(i)];
          CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-9);
          CHECK(std::max_element(row.begin(), row.end()) - row.begin() ==
                std::max_element(row3.begin(), row3.end()) - row3.begin());
        }
        const auto a = test::random_legal_action(s, rng);
        s = apply_transition(s, a, admissible_arrivals(s, a, std::vector<Imo>{static_cast<Imo>(1 + t % 30)}));
      }
      CHECK_FALSE(data.decisions.empty());
    }
  }

  TEST_CASE("factored likelihood and gradient") {
    const auto b = port_builder(2);
    const auto data = random_factored(b, 40, 9);
    REQUIRE(data.decisions.size() > 20);
    SUBCASE("uniform likelihood") {
      double expected = 0.0;
      for (const auto& d : data.decisions) expected -= std::log(static_cast<double>(d.legal.size()));
      CHECK(log_likelihood(data, RewardParams::linear(b.dimension())) == doctest::Approx(expected).epsilon(1e-12));
    }
    auto check_fd = [&](RewardParams p) {
      const auto g = grad_log_likelihood(data, p);
      std::mt19937_64 rng(2);
      std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
      double worst = 0.0;
      for (int k = 0; k < 60; ++k) {
        const std::size_t i = pick(rng);
        auto hi = p, lo = p;
        hi.theta[i] += 1e-5;
        lo.theta[i] -= 1e-5;
        const double fd = (log_likelihood(data, hi) - log_likelihood(data, lo)) / 2e-5;
        const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
        // Cancellation in the likelihood difference limits the attainable agreement.
        if (std::abs(g[i]) < 1e-4 && std::abs(fd) < 1e-4) continue;
        worst = std::max(worst, std::abs(fd - g[i]) / denom);
      }
      CHECK(worst < 1e-5);
    };
    SUBCASE("linear") {
      auto p = RewardParams::linear(b.dimension());
      p.theta = random_theta(static_cast<int>(p.size()), 4, 0.2);
      check_fd(p);
    }
    SUBCASE("mlp") { check_fd(RewardParams::mlp(b.dimension(), 8, 3)); }
    SUBCASE("duplicates double the gradient") {
      auto p = RewardParams::linear(b.dimension());
      p.theta = random_theta(static_cast<int>(p.size()), 5, 0.2);
      auto twice = data;
      twice.decisions.insert(twice.decisions.end(), data.decisions.begin(), data.decisions.end());
      const auto g1 = grad_log_likelihood(data, p);
      const auto g2 = grad_log_likelihood(twice, p);
      for (std::size_t k = 0; k < g1.size(); ++k) CHECK(std::abs(g2[k] - 2.0 * g1[k]) <= 1e-10 * (1.0 + std::abs(g1[k])));
    }
    SUBCASE("fit from zero improves and lr 0 does nothing") {
      auto c = IrlConfig::factored();
      c.iterations = 30;
      const auto r = fit(data, RewardParams::linear(b.dimension()), c);
      CHECK(r.log.back().log_likelihood > r.log.front().log_likelihood);
      c.learning_rate = 0.0;
      const auto z = fit(data, RewardParams::linear(b.dimension()), c);
      CHECK(std::all_of(z.theta.begin(), z.theta.end(), [](double t) { return t == 0.0; }));
    }
  }

  TEST_CASE("reward checkpoint round-trip") {
    const auto dir = scratch_dir("reward");
    RewardCheckpoint cp{IrlConfig::factored(), RewardParams::mlp(port_builder(3).dimension(), 5, 1), port_builder(3)};
    save_reward(dir / "r.json", cp);
    const auto back = load_reward(dir / "r.json");
    CHECK(back.params.theta == cp.params.theta);
    CHECK(back.params.kind == RewardKind::Mlp);
    CHECK(back.params.hidden == 5);
    CHECK(back.builder.dimension() == cp.builder.dimension());
    CHECK(back.builder.registry().sorted() == cp.builder.registry().sorted());
    CHECK(back.config.learning_rate == cp.config.learning_rate);
  }
}
