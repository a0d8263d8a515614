#include "portirl/maxent_irl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace portirl {

namespace {

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void check_dimension(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(got) + ", expected " +
                                std::to_string(want));
}

// Q, log Z and V for one state from its current successor values.
void backup_state(const TabularMdp& mdp, const std::vector<std::vector<double>>& rewards, int s, double gamma,
                  ValueDefinition def, const std::vector<double>& v, std::vector<double>& q, double& log_z,
                  double& value) {
  const auto& st = mdp.states[static_cast<std::size_t>(s)];
  const auto& r = rewards[static_cast<std::size_t>(s)];
  q.resize(st.actions.size());
  for (std::size_t a = 0; a < st.actions.size(); ++a) {
    double cont = 0.0;
    for (const auto& [next, p] : st.actions[a].successors) cont += p * v[static_cast<std::size_t>(next)];
    q[a] = r[a] + gamma * cont;
  }
  log_z = log_sum_exp(q);
  if (def == ValueDefinition::LogSumExp) {
    value = log_z;
  } else {
    value = 0.0;
    for (double qa : q) value += std::exp(qa - log_z) * qa;
  }
}

std::vector<std::vector<double>> tabular_rewards(const TabularMdp& mdp, std::span<const double> theta) {
  check_dimension(theta.size(), static_cast<std::size_t>(mdp.feature_dim), "theta");
  std::vector<std::vector<double>> r(mdp.states.size());
  for (std::size_t s = 0; s < mdp.states.size(); ++s) {
    const auto& acts = mdp.states[s].actions;
    r[s].resize(acts.size());
    for (std::size_t a = 0; a < acts.size(); ++a) {
      check_dimension(acts[a].features.size(), theta.size(), "phi");
      r[s][a] = dot(theta, acts[a].features);
    }
  }
  return r;
}

void check_demonstrations(const TabularMdp& mdp, std::span<const Demonstration> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& d = data[i];
    if (d.state < 0 || d.state >= mdp.state_count() || d.action < 0 ||
        d.action >= static_cast<int>(mdp.states[static_cast<std::size_t>(d.state)].actions.size()))
      throw std::invalid_argument("demonstration " + std::to_string(i) + " (state " + std::to_string(d.state) +
                                  ", action " + std::to_string(d.action) + ") is not a legal pair");
  }
}

// Gradient of log-likelihood for the exact model, given converged values.
std::vector<double> exact_gradient(const TabularMdp& mdp, std::span<const Demonstration> data,
                                   const SoftValues& sv, const IrlConfig& cfg) {
  const auto d = static_cast<std::size_t>(mdp.feature_dim);
  const std::size_t n = mdp.states.size();

  // c(s,a) = dV(s)/dQ(s,a)
  std::vector<std::vector<double>> c(n);
  for (std::size_t s = 0; s < n; ++s) {
    if (mdp.states[s].terminal) continue;
    const auto& q = sv.q[s];
    c[s].resize(q.size());
    for (std::size_t a = 0; a < q.size(); ++a) {
      const double pi = std::exp(q[a] - sv.log_z[s]);
      c[s][a] = cfg.v_definition == ValueDefinition::LogSumExp ? pi : pi * (1.0 + q[a] - sv.v[s]);
    }
  }

  // dV(s) = sum_a c(s,a) [phi(s,a) + gamma sum_s' P dV(s')], swept in place.
  std::vector<double> dv(n * d, 0.0);
  std::vector<double> row(d);
  if (cfg.gamma == 0.0) {
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t a = 0; a < c[s].size(); ++a)
        for (std::size_t k = 0; k < d; ++k) dv[s * d + k] += c[s][a] * mdp.states[s].actions[a].features[k];
  } else {
    int sweep = 0;
    for (;; ++sweep) {
      double change = 0.0, scale = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        if (mdp.states[s].terminal) continue;
        std::fill(row.begin(), row.end(), 0.0);
        const auto& acts = mdp.states[s].actions;
        for (std::size_t a = 0; a < acts.size(); ++a) {
          const double ca = c[s][a];
          for (std::size_t k = 0; k < d; ++k) row[k] += ca * acts[a].features[k];
          for (const auto& [next, p] : acts[a].successors) {
            const double w = ca * cfg.gamma * p;
            const double* src = &dv[static_cast<std::size_t>(next) * d];
            for (std::size_t k = 0; k < d; ++k) row[k] += w * src[k];
          }
        }
        for (std::size_t k = 0; k < d; ++k) {
          change = std::max(change, std::abs(row[k] - dv[s * d + k]));
          scale = std::max(scale, std::abs(row[k]));
          dv[s * d + k] = row[k];
        }
      }
      if (!std::isfinite(change)) throw std::runtime_error("non-finite value derivative");
      if (change <= 1e-14 * std::max(1.0, scale)) break;
      if (sweep >= cfg.max_value_iterations)
        throw ConvergenceError("value derivative did not converge; residual " + std::to_string(change), change);
    }
  }

  std::vector<double> grad(d, 0.0);
  std::vector<double> dq(d), expected(d);
  for (const auto& demo : data) {
    const auto s = static_cast<std::size_t>(demo.state);
    const auto& acts = mdp.states[s].actions;
    std::fill(expected.begin(), expected.end(), 0.0);
    for (std::size_t a = 0; a < acts.size(); ++a) {
      for (std::size_t k = 0; k < d; ++k) dq[k] = acts[a].features[k];
      for (const auto& [next, p] : acts[a].successors) {
        const double w = cfg.gamma * p;
        if (w == 0.0) continue;
        for (std::size_t k = 0; k < d; ++k) dq[k] += w * dv[static_cast<std::size_t>(next) * d + k];
      }
      const double pi = std::exp(sv.q[s][a] - sv.log_z[s]);
      const bool chosen = static_cast<int>(a) == demo.action;
      for (std::size_t k = 0; k < d; ++k) {
        expected[k] += pi * dq[k];
        if (chosen) grad[k] += dq[k];
      }
    }
    for (std::size_t k = 0; k < d; ++k) grad[k] -= expected[k];
  }
  for (double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient");
  return grad;
}

template <class Eval>
FitResult ascend(std::vector<double> theta, double n, const IrlConfig& cfg, Eval&& eval) {
  FitResult r;
  r.theta = theta;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> grad;
  for (int it = 0; it <= cfg.iterations; ++it) {
    double ll = 0.0;
    try {
      ll = eval(theta, grad);
    } catch (const ConvergenceError&) {
      r.diverged = true;
      break;
    }
    const double norm = l2_norm(grad);
    if (!std::isfinite(ll) || !std::isfinite(norm)) {
      r.diverged = true;
      break;
    }
    r.log.push_back({it, ll, norm});
    if (ll > best) {
      best = ll;
      r.theta = theta;
      r.best_iteration = it;
    }
    if (it == cfg.iterations) break;
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += cfg.learning_rate * grad[k] / n;
  }
  return r;
}

// Rewards for legal actions only; other entries are left untouched.
void legal_rewards(const RewardParams& params, std::span<const double> x, ActionSet legal,
                   std::array<double, kActionCount>& out, std::vector<double>& hidden) {
  const auto dx = static_cast<std::size_t>(params.context_dim);
  const double* th = params.theta.data();
  if (params.kind == RewardKind::Linear) {
    for (int p = 0; p < kActionCount; ++p)
      if (legal.contains(action_at_position(p)))
        out[static_cast<std::size_t>(p)] = dot({th + static_cast<std::size_t>(p) * dx, dx}, x);
    return;
  }
  const auto h = static_cast<std::size_t>(params.hidden);
  hidden.resize(h);
  const double* w = th;
  const double* b = th + h * dx;
  const double* u = b + h;
  const double* beta = u + kActionCount * h;
  for (std::size_t j = 0; j < h; ++j) hidden[j] = std::tanh(dot({w + j * dx, dx}, x) + b[j]);
  for (int p = 0; p < kActionCount; ++p)
    if (legal.contains(action_at_position(p)))
      out[static_cast<std::size_t>(p)] = dot({u + static_cast<std::size_t>(p) * h, h}, hidden) + beta[p];
}

constexpr ActionSet all_actions() {
  ActionSet s;
  for (SlotAction a : kAllActions) s.insert(a);
  return s;
}

double factored_objective(const FactoredDataset& data, const RewardParams& params, std::vector<double>* grad) {
  check_dimension(static_cast<std::size_t>(data.context_dim), static_cast<std::size_t>(params.context_dim),
                  "dataset context");
  if (grad) grad->assign(params.size(), 0.0);
  std::array<double, kActionCount> scores{};
  std::array<double, kActionCount> coeff{};
  std::vector<double> hidden;
  double ll = 0.0;
  for (const auto& dec : data.decisions) {
    if (!dec.legal.contains(dec.chosen))
      throw std::invalid_argument("observed action " + std::string(action_name(dec.chosen)) +
                                  " is illegal at trajectory " + std::to_string(dec.trajectory_id) + " window " +
                                  std::to_string(dec.window) + " slot " + std::to_string(dec.slot));
    check_dimension(dec.context.size(), static_cast<std::size_t>(params.context_dim), "context");
    legal_rewards(params, dec.context, dec.legal, scores, hidden);
    const auto pi = masked_softmax(scores, dec.legal);
    const auto chosen = static_cast<std::size_t>(action_position(dec.chosen));
    ll += std::log(pi[chosen]);
    if (!grad) continue;
    for (std::size_t p = 0; p < coeff.size(); ++p) coeff[p] = (p == chosen ? 1.0 : 0.0) - pi[p];
    params.accumulate_gradient(dec.context, coeff, *grad);
  }
  return ll;
}

}  // namespace

IrlConfig IrlConfig::factored() {
  IrlConfig c;
  c.gamma = 0.0;
  c.learning_rate = 0.1;
  c.iterations = 3000;
  c.mode = IrlMode::Factored;
  return c;
}

void IrlConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning rate must be finite and non-negative");
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (!(value_tol > 0.0)) throw std::invalid_argument("value tolerance must be positive");
  if (max_value_iterations < 1) throw std::invalid_argument("max value iterations must be positive");
  if (mode == IrlMode::Factored && gamma != 0.0)
    throw std::invalid_argument("factored mode has no transition model; gamma must be 0");
}

double reward(std::span<const double> theta, std::span<const double> features) {
  check_dimension(features.size(), theta.size(), "features");
  return dot(theta, features);
}

double SoftValues::z(int state) const { return std::exp(log_z[static_cast<std::size_t>(state)]); }

SoftValues soft_value_iteration(const TabularMdp& mdp, std::span<const double> theta, const IrlConfig& cfg,
                                std::span<const int> sweep_order) {
  cfg.validate();
  const auto rewards = tabular_rewards(mdp, theta);
  const std::size_t n = mdp.states.size();
  std::vector<int> order(sweep_order.begin(), sweep_order.end());
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  }
  if (order.size() != n) throw std::invalid_argument("sweep order must list every state once");

  SoftValues sv;
  sv.v.assign(n, 0.0);
  sv.q.assign(n, {});
  sv.log_z.assign(n, 0.0);
  // Synchronous sweeps from V = 0. The expected-Q backup is not a contraction
  // and can have several fixed points; in-place sweeps may settle on one that
  // depends on the visiting order, while this is the limit of the
  // finite-horizon recursion.
  std::vector<double> q, next(n, 0.0);
  for (int it = 1;; ++it) {
    double change = 0.0;
    for (int s : order) {
      const auto si = static_cast<std::size_t>(s);
      if (mdp.states[si].terminal) continue;
      double lz = 0.0, v = 0.0;
      backup_state(mdp, rewards, s, cfg.gamma, cfg.v_definition, sv.v, q, lz, v);
      change = std::max(change, std::abs(v - sv.v[si]));
      next[si] = v;
    }
    std::swap(sv.v, next);
    sv.iterations = it;
    sv.residual = change;
    if (!std::isfinite(change)) throw ConvergenceError("soft values diverged", change);
    if (change < cfg.value_tol) break;
    if (it >= cfg.max_value_iterations)
      throw ConvergenceError("soft value iteration did not converge; residual " + std::to_string(change), change);
  }
  // Final Q, Z consistent with the converged V.
  for (std::size_t s = 0; s < n; ++s) {
    double v = 0.0;
    backup_state(mdp, rewards, static_cast<int>(s), cfg.gamma, cfg.v_definition, sv.v, sv.q[s], sv.log_z[s], v);
    if (mdp.states[s].terminal) sv.v[s] = 0.0;
  }
  return sv;
}

std::vector<double> policy(const SoftValues& values, int state) {
  const auto s = static_cast<std::size_t>(state);
  std::vector<double> pi(values.q[s].size());
  double total = 0.0;
  for (std::size_t a = 0; a < pi.size(); ++a) total += pi[a] = std::exp(values.q[s][a] - values.log_z[s]);
  for (double& p : pi) p /= total;
  return pi;
}

double log_likelihood(const TabularMdp& mdp, std::span<const Demonstration> data, std::span<const double> theta,
                      const IrlConfig& cfg) {
  check_demonstrations(mdp, data);
  const auto sv = soft_value_iteration(mdp, theta, cfg);
  double ll = 0.0;
  for (const auto& d : data) {
    const auto s = static_cast<std::size_t>(d.state);
    ll += sv.q[s][static_cast<std::size_t>(d.action)] - sv.log_z[s];
  }
  return ll;
}

std::vector<double> grad_log_likelihood(const TabularMdp& mdp, std::span<const Demonstration> data,
                                        std::span<const double> theta, const IrlConfig& cfg) {
  check_demonstrations(mdp, data);
  const auto sv = soft_value_iteration(mdp, theta, cfg);
  return exact_gradient(mdp, data, sv, cfg);
}

GradientCheckResult gradient_check(const TabularMdp& mdp, std::span<const Demonstration> data,
                                   std::span<const double> theta, const IrlConfig& cfg, double epsilon) {
  IrlConfig tight = cfg;
  tight.value_tol = std::min(cfg.value_tol, 1e-13);
  const auto analytic = grad_log_likelihood(mdp, data, theta, tight);
  std::vector<double> probe(theta.begin(), theta.end());
  GradientCheckResult r;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + epsilon;
    const double up = log_likelihood(mdp, data, probe, tight);
    probe[k] = saved - epsilon;
    const double down = log_likelihood(mdp, data, probe, tight);
    probe[k] = saved;
    const double fd = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic[k]), std::abs(fd), 1e-8});
    const double rel = std::abs(analytic[k] - fd) / denom;
    if (rel > r.max_relative_error) {
      r.max_relative_error = rel;
      r.worst_index = k;
    }
    ++r.checked;
  }
  return r;
}

RewardParams RewardParams::linear(int context_dim) {
  if (context_dim < 1) throw std::invalid_argument("context dimension must be positive");
  RewardParams p;
  p.kind = RewardKind::Linear;
  p.context_dim = context_dim;
  p.hidden = 0;
  p.theta.assign(static_cast<std::size_t>(kActionCount * context_dim), 0.0);
  return p;
}

RewardParams RewardParams::mlp(int context_dim, int hidden, std::uint64_t seed) {
  if (context_dim < 1 || hidden < 1) throw std::invalid_argument("context and hidden dimensions must be positive");
  RewardParams p;
  p.kind = RewardKind::Mlp;
  p.context_dim = context_dim;
  p.hidden = hidden;
  const auto h = static_cast<std::size_t>(hidden);
  const auto dx = static_cast<std::size_t>(context_dim);
  p.theta.assign(h * dx + h + kActionCount * h + kActionCount, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> in(-1.0 / std::sqrt(static_cast<double>(dx)),
                                            1.0 / std::sqrt(static_cast<double>(dx)));
  std::uniform_real_distribution<double> out(-1.0 / std::sqrt(static_cast<double>(h)),
                                             1.0 / std::sqrt(static_cast<double>(h)));
  for (std::size_t i = 0; i < h * dx; ++i) p.theta[i] = in(rng);
  for (std::size_t i = 0; i < kActionCount * h; ++i) p.theta[h * dx + h + i] = out(rng);
  return p;
}

void RewardParams::action_rewards(std::span<const double> context, std::span<double, kActionCount> out) const {
  check_dimension(context.size(), static_cast<std::size_t>(context_dim), "context");
  std::array<double, kActionCount> r{};
  std::vector<double> h;
  legal_rewards(*this, context, all_actions(), r, h);
  std::copy(r.begin(), r.end(), out.begin());
}

void RewardParams::accumulate_gradient(std::span<const double> x, std::span<const double, kActionCount> coeff,
                                       std::span<double> grad) const {
  check_dimension(grad.size(), theta.size(), "gradient");
  const auto dx = static_cast<std::size_t>(context_dim);
  if (kind == RewardKind::Linear) {
    for (std::size_t p = 0; p < kActionCount; ++p) {
      if (coeff[p] == 0.0) continue;
      double* g = grad.data() + p * dx;
      for (std::size_t k = 0; k < dx; ++k) g[k] += coeff[p] * x[k];
    }
    return;
  }
  const auto h = static_cast<std::size_t>(hidden);
  const double* w = theta.data();
  const double* b = w + h * dx;
  const double* u = b + h;
  std::vector<double> act(h), dh(h, 0.0);
  for (std::size_t j = 0; j < h; ++j) act[j] = std::tanh(dot({w + j * dx, dx}, x) + b[j]);
  double* gu = grad.data() + h * dx + h;
  double* gbeta = gu + kActionCount * h;
  for (std::size_t p = 0; p < kActionCount; ++p) {
    if (coeff[p] == 0.0) continue;
    for (std::size_t j = 0; j < h; ++j) {
      gu[p * h + j] += coeff[p] * act[j];
      dh[j] += coeff[p] * u[p * h + j];
    }
    gbeta[p] += coeff[p];
  }
  double* gw = grad.data();
  double* gb = gw + h * dx;
  for (std::size_t j = 0; j < h; ++j) {
    const double pre = dh[j] * (1.0 - act[j] * act[j]);
    if (pre == 0.0) continue;
    gb[j] += pre;
    for (std::size_t k = 0; k < dx; ++k) gw[j * dx + k] += pre * x[k];
  }
}

double reward(const RewardParams& params, std::span<const double> context, SlotAction action) {
  std::array<double, kActionCount> r{};
  params.action_rewards(context, r);
  return r[static_cast<std::size_t>(action_position(action))];
}

SlotDistribution masked_softmax(std::span<const double, kActionCount> scores, ActionSet legal) {
  SlotDistribution pi{};
  if (legal.empty()) {
    pi[0] = 1.0;
    return pi;
  }
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < pi.size(); ++p)
    if (legal.contains(action_at_position(static_cast<int>(p)))) m = std::max(m, scores[p]);
  double total = 0.0;
  for (std::size_t p = 0; p < pi.size(); ++p)
    if (legal.contains(action_at_position(static_cast<int>(p)))) total += pi[p] = std::exp(scores[p] - m);
  for (double& v : pi) v /= total;
  return pi;
}

double log_likelihood(const FactoredDataset& data, const RewardParams& params) {
  return factored_objective(data, params, nullptr);
}

std::vector<double> grad_log_likelihood(const FactoredDataset& data, const RewardParams& params) {
  std::vector<double> g;
  factored_objective(data, params, &g);
  for (double v : g)
    if (!std::isfinite(v)) throw std::runtime_error("non-finite gradient");
  return g;
}

FactoredDataset build_factored_dataset(const std::vector<Trajectory>& trajectories, const SlotContextBuilder& builder,
                                       const TemporalFeatureMap& temporal, WindowIndex window_begin,
                                       WindowIndex window_end) {
  FactoredDataset out;
  out.context_dim = builder.dimension();
  const std::vector<double> no_temporal;
  for (const auto& traj : trajectories) {
    for (std::size_t t = 0; t < traj.steps(); ++t) {
      const auto& state = traj.states[t];
      const WindowIndex next = traj.states[t + 1].window;
      if (next < window_begin || next >= window_end) continue;
      if (state.occupied_count() == 0) continue;
      std::span<const double> feat = no_temporal;
      if (builder.temporal_dim() > 0) {
        const auto it = temporal.find({traj.id, state.window});
        if (it == temporal.end())
          throw std::runtime_error("no temporal feature for trajectory " + std::to_string(traj.id) + " window " +
                                   std::to_string(state.window));
        feat = it->second;
      }
      auto contexts = builder.build_all(state, feat);
      for (int i = 0; i < kSlotCount; ++i) {
        if (!state.occupied(i)) continue;
        SlotDecision d;
        d.context = std::move(contexts[static_cast<std::size_t>(i)]);
        d.legal = legal_actions(state, SlotIndex(i));
        d.chosen = traj.actions[t].actions[static_cast<std::size_t>(i)];
        d.trajectory_id = traj.id;
        d.window = state.window;
        d.slot = i;
        out.decisions.push_back(std::move(d));
      }
    }
  }
  return out;
}

FitResult fit(const TabularMdp& mdp, std::span<const Demonstration> data, const IrlConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("fit needs a non-empty dataset");
  check_demonstrations(mdp, data);
  const auto n = static_cast<double>(data.size());
  return ascend(std::vector<double>(static_cast<std::size_t>(mdp.feature_dim), 0.0), n, cfg,
                [&](const std::vector<double>& theta, std::vector<double>& grad) {
                  const auto sv = soft_value_iteration(mdp, theta, cfg);
                  double ll = 0.0;
                  for (const auto& d : data) {
                    const auto s = static_cast<std::size_t>(d.state);
                    ll += sv.q[s][static_cast<std::size_t>(d.action)] - sv.log_z[s];
                  }
                  grad = exact_gradient(mdp, data, sv, cfg);
                  return ll;
                });
}

FitResult fit(const FactoredDataset& data, const RewardParams& initial, const IrlConfig& cfg) {
  cfg.validate();
  if (cfg.mode != IrlMode::Factored) throw std::invalid_argument("port datasets are fitted in factored mode");
  if (data.decisions.empty()) throw std::invalid_argument("fit needs a non-empty dataset");
  const auto n = static_cast<double>(data.decisions.size());
  RewardParams work = initial;
  return ascend(initial.theta, n, cfg, [&](const std::vector<double>& theta, std::vector<double>& grad) {
    work.theta = theta;
    return factored_objective(data, work, &grad);
  });
}

SlotDistributions predict_action_distribution(const RewardParams& params, const SlotContextBuilder& builder,
                                              const PortState& state, std::span<const double> temporal) {
  SlotDistributions out{};
  std::array<double, kActionCount> scores{};
  std::vector<double> hidden;
  std::vector<std::vector<double>> contexts;
  for (int i = 0; i < kSlotCount; ++i) {
    auto& pi = out[static_cast<std::size_t>(i)];
    if (!state.occupied(i)) {
      pi[0] = 1.0;
      continue;
    }
    if (contexts.empty()) contexts = builder.build_all(state, temporal);
    const ActionSet legal = legal_actions(state, SlotIndex(i));
    legal_rewards(params, contexts[static_cast<std::size_t>(i)], legal, scores, hidden);
    pi = masked_softmax(scores, legal);
  }
  return out;
}

}  // namespace portirl
