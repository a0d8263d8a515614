#include "portirl/toy_mdp.hpp"

#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>

namespace portirl {

void ToyMdpConfig::validate() const {
  if (n_berths < 1 || n_waiting < 1 || n_incoming < 1 || alphabet < 1)
    throw std::invalid_argument("toy MDP counts must be at least 1");
  if (!(arrival_probability >= 0.0 && arrival_probability <= 1.0))
    throw std::invalid_argument("arrival probability must lie in [0, 1]");
}

int ToyMdp::feature_dim(const ToyMdpConfig& cfg) { return 6 * cfg.alphabet; }

namespace {

int waiting_of(const ToyMdpConfig& cfg, const ToyState& s) {
  int n = 0;
  for (int i = 0; i < cfg.n_waiting; ++i) n += s[static_cast<std::size_t>(cfg.n_berths + i)] != 0 ? 1 : 0;
  return n;
}

bool is_empty(const ToyState& s) {
  for (int t : s)
    if (t != 0) return false;
  return true;
}

// (zone, move) pairs that carry a feature, numbered 0..5.
int feature_index(const ToyMdpConfig& cfg, int zone, int type, ToyMove m) {
  int local = -1;
  if (zone == 0) local = m == ToyMove::Stay ? 0 : 1;
  if (zone == 1) local = m == ToyMove::Stay ? 2 : 3;
  if (zone == 2) local = m == ToyMove::GoToWaiting ? 4 : 5;
  return local * cfg.alphabet + (type - 1);
}

int zone_of(const ToyMdpConfig& cfg, int slot) {
  if (slot < cfg.n_berths) return 0;
  return slot < cfg.n_berths + cfg.n_waiting ? 1 : 2;
}

std::vector<double> toy_features(const ToyMdpConfig& cfg, const ToyState& s, const ToyJointAction& a) {
  std::vector<double> f(static_cast<std::size_t>(ToyMdp::feature_dim(cfg)), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] != 0) f[static_cast<std::size_t>(feature_index(cfg, zone_of(cfg, static_cast<int>(i)), s[i], a[i].move))] += 1.0;
  return f;
}

}  // namespace

std::vector<ToyJointAction> toy_joint_actions(const ToyMdpConfig& cfg, const ToyState& s) {
  const int slots = static_cast<int>(s.size());
  const int waiting_now = waiting_of(cfg, s);
  std::vector<std::vector<ToySlotAction>> options(s.size());
  for (int i = 0; i < slots; ++i) {
    auto& o = options[static_cast<std::size_t>(i)];
    if (s[static_cast<std::size_t>(i)] == 0) {
      o.push_back({ToyMove::Nothing, -1});
      continue;
    }
    const int zone = zone_of(cfg, i);
    if (zone == 0) {
      o.push_back({ToyMove::Stay, -1});
      o.push_back({ToyMove::Leave, -1});
      continue;
    }
    if (zone == 1) o.push_back({ToyMove::Stay, -1});
    if (zone == 2 && waiting_now < cfg.n_waiting) o.push_back({ToyMove::GoToWaiting, -1});
    for (int b = 0; b < cfg.n_berths; ++b)
      if (s[static_cast<std::size_t>(b)] == 0) o.push_back({ToyMove::GoToBerth, b});
  }

  std::vector<ToyJointAction> out;
  ToyJointAction cur(s.size());
  auto rec = [&](auto&& self, int i) -> void {
    if (i == slots) {
      std::vector<bool> taken(static_cast<std::size_t>(cfg.n_berths), false);
      int load = 0;
      for (int k = 0; k < slots; ++k) {
        const auto& a = cur[static_cast<std::size_t>(k)];
        if (a.move == ToyMove::GoToBerth) {
          if (taken[static_cast<std::size_t>(a.berth)]) return;
          taken[static_cast<std::size_t>(a.berth)] = true;
        }
        if ((zone_of(cfg, k) == 1 && a.move == ToyMove::Stay) || a.move == ToyMove::GoToWaiting) ++load;
      }
      if (load <= cfg.n_waiting) out.push_back(cur);
      return;
    }
    for (const auto& a : options[static_cast<std::size_t>(i)]) {
      cur[static_cast<std::size_t>(i)] = a;
      self(self, i + 1);
    }
  };
  rec(rec, 0);
  return out;
}

std::vector<std::pair<ToyState, double>> toy_successors(const ToyMdpConfig& cfg, const ToyState& s,
                                                        const ToyJointAction& a) {
  const auto nb = static_cast<std::size_t>(cfg.n_berths);
  const auto nw = static_cast<std::size_t>(cfg.n_waiting);
  ToyState moved(s.size(), 0);
  std::vector<int> queue;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 0) continue;
    switch (a[i].move) {
      case ToyMove::Stay:
        if (i < nb) moved[i] = s[i];
        else queue.push_back(s[i]);
        break;
      case ToyMove::GoToBerth: moved[static_cast<std::size_t>(a[i].berth)] = s[i]; break;
      default: break;
    }
  }
  // Entrants follow the stayers, in incoming order.
  for (std::size_t i = nb + nw; i < s.size(); ++i)
    if (s[i] != 0 && a[i].move == ToyMove::GoToWaiting) queue.push_back(s[i]);
  for (std::size_t k = 0; k < queue.size(); ++k) moved[nb + k] = queue[k];
  const int cap = std::min(cfg.n_incoming, cfg.n_waiting - static_cast<int>(queue.size()));

  // One draw per incoming slot: empty, or one of the vessel types.
  std::map<ToyState, double> dist;
  std::vector<int> draw(static_cast<std::size_t>(cfg.n_incoming), 0);
  auto rec = [&](auto&& self, int j, double p) -> void {
    if (p == 0.0) return;
    if (j == cfg.n_incoming) {
      ToyState next = moved;
      int placed = 0;
      for (int t : draw)
        if (t != 0 && placed < cap) next[nb + nw + static_cast<std::size_t>(placed++)] = t;
      dist[next] += p;
      return;
    }
    draw[static_cast<std::size_t>(j)] = 0;
    self(self, j + 1, p * (1.0 - cfg.arrival_probability));
    for (int t = 1; t <= cfg.alphabet; ++t) {
      draw[static_cast<std::size_t>(j)] = t;
      self(self, j + 1, p * cfg.arrival_probability / cfg.alphabet);
    }
  };
  rec(rec, 0, 1.0);
  return {dist.begin(), dist.end()};
}

ToyMdp enumerate_toy_mdp(const ToyMdpConfig& cfg) {
  cfg.validate();
  ToyMdp m;
  m.config = cfg;
  const ToyState empty(static_cast<std::size_t>(cfg.n_berths + cfg.n_waiting + cfg.n_incoming), 0);
  std::deque<int> frontier;
  auto intern = [&](const ToyState& s) {
    auto [it, fresh] = m.index.emplace(s, static_cast<int>(m.states.size()));
    if (fresh) {
      if (m.states.size() >= cfg.max_states)
        throw std::runtime_error("toy MDP exceeds " + std::to_string(cfg.max_states) + " states");
      m.states.push_back(s);
      frontier.push_back(it->second);
    }
    return it->second;
  };
  intern(empty);

  m.tabular.feature_dim = ToyMdp::feature_dim(cfg);
  while (!frontier.empty()) {
    const int id = frontier.front();
    frontier.pop_front();
    const ToyState s = m.states[static_cast<std::size_t>(id)];
    auto acts = toy_joint_actions(cfg, s);
    TabularState ts;
    ts.terminal = is_empty(s);
    for (const auto& a : acts) {
      TabularAction ta;
      ta.features = toy_features(cfg, s, a);
      for (const auto& [next, p] : toy_successors(cfg, s, a)) ta.successors.emplace_back(intern(next), p);
      ts.actions.push_back(std::move(ta));
    }
    if (m.tabular.states.size() <= static_cast<std::size_t>(id)) m.tabular.states.resize(static_cast<std::size_t>(id) + 1);
    m.tabular.states[static_cast<std::size_t>(id)] = std::move(ts);
    if (m.actions.size() <= static_cast<std::size_t>(id)) m.actions.resize(static_cast<std::size_t>(id) + 1);
    m.actions[static_cast<std::size_t>(id)] = std::move(acts);
  }
  return m;
}

std::size_t count_toy_states(const ToyMdpConfig& cfg) {
  cfg.validate();
  const int nb = cfg.n_berths, nw = cfg.n_waiting, ni = cfg.n_incoming;
  const int n = nb + nw + ni;
  std::vector<int> v(static_cast<std::size_t>(n), 0);
  std::size_t count = 0;
  for (;;) {
    bool ok = true;
    int waiting = 0, incoming = 0;
    // A zone is compacted when no vessel sits behind a gap.
    bool gap = false;
    for (int i = nb; i < nb + nw; ++i) {
      if (v[static_cast<std::size_t>(i)] == 0) gap = true;
      else if (gap) ok = false;
      else ++waiting;
    }
    gap = false;
    for (int i = nb + nw; i < n; ++i) {
      if (v[static_cast<std::size_t>(i)] == 0) gap = true;
      else if (gap) ok = false;
      else ++incoming;
    }
    if (ok && incoming <= nw - waiting) ++count;
    int k = 0;
    while (k < n && ++v[static_cast<std::size_t>(k)] > cfg.alphabet) v[static_cast<std::size_t>(k++)] = 0;
    if (k == n) break;
  }
  return count;
}

std::vector<double> brute_force_soft_values(const TabularMdp& mdp, std::span<const double> theta, double gamma,
                                            int horizon, ValueDefinition def) {
  const std::size_t n = mdp.states.size();
  std::vector<double> prev(n, 0.0), cur(n, 0.0);
  for (int h = 0; h < horizon; ++h) {
    for (std::size_t s = 0; s < n; ++s) {
      const auto& st = mdp.states[s];
      if (st.terminal) {
        cur[s] = 0.0;
        continue;
      }
      std::vector<double> q;
      double top = -INFINITY;
      for (const auto& a : st.actions) {
        double r = 0.0;
        for (std::size_t k = 0; k < theta.size(); ++k) r += theta[k] * a.features[k];
        double next = 0.0;
        for (const auto& [t, p] : a.successors) next += p * prev[static_cast<std::size_t>(t)];
        q.push_back(r + gamma * next);
        top = std::max(top, q.back());
      }
      double z = 0.0, weighted = 0.0;
      for (double qa : q) {
        const double e = std::exp(qa - top);
        z += e;
        weighted += e * qa;
      }
      cur[s] = def == ValueDefinition::LogSumExp ? top + std::log(z) : weighted / z;
    }
    std::swap(prev, cur);
  }
  return prev;
}

std::vector<Demonstration> sample_demonstrations(const TabularMdp& mdp, const SoftValues& pi, int count,
                                                 std::uint64_t seed, int start_state) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](auto weight, std::size_t n) {
    double r = u(rng);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      r -= weight(k);
      if (r < 0.0) return k;
    }
    return n - 1;
  };
  std::vector<Demonstration> out;
  int s = start_state;
  while (static_cast<int>(out.size()) < count) {
    const auto& st = mdp.states[static_cast<std::size_t>(s)];
    std::size_t a = 0;
    if (!st.terminal) {
      const auto p = policy(pi, s);
      a = draw([&](std::size_t k) { return p[k]; }, p.size());
      out.push_back({s, static_cast<int>(a)});
    }
    const auto& succ = st.actions[a].successors;
    if (succ.empty()) {
      s = start_state;
      continue;
    }
    s = succ[draw([&](std::size_t k) { return succ[k].second; }, succ.size())].first;
  }
  return out;
}

}  // namespace portirl
