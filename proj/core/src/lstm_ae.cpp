#include "portirl/lstm_ae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace portirl {

namespace {

constexpr double kProbEpsilon = 1e-12;

template <class Real>
Real sigmoid(Real x) {
  using std::exp;
  if (x >= 0) return Real(1) / (Real(1) + exp(-x));
  const Real z = exp(x);
  return z / (Real(1) + z);
}

template <class Real>
bool finite_all(const Real* v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(v[i])) return false;
  return true;
}

// Scratch tensors for one sequence, stored step-major.
template <class Real>
struct Tape {
  int steps = 0;
  std::vector<Real> zin, gates, cell, tanh_cell, hidden, code, recon, prob;

  Tape(const LstmAeLayout& l, int t)
      : steps(t),
        zin(static_cast<std::size_t>(t * (l.input + l.hidden))),
        gates(static_cast<std::size_t>(t * 4 * l.hidden)),
        cell(static_cast<std::size_t>(t * l.hidden)),
        tanh_cell(static_cast<std::size_t>(t * l.hidden)),
        hidden(static_cast<std::size_t>(t * l.hidden)),
        code(static_cast<std::size_t>(t * l.bottleneck)),
        recon(static_cast<std::size_t>(t * l.input)),
        prob(static_cast<std::size_t>(t * kActionVectorSize)) {}
};

// Fills the tape. `with_heads` = false stops after the bottleneck.
template <class Real>
void run_forward(const LstmAeLayout& l, std::span<const Real> p, std::span<const RawStateFeatures> inputs,
                 Tape<Real>& tape, bool with_heads) {
  using std::exp;
  using std::tanh;
  const int I = l.input, H = l.hidden, B = l.bottleneck, Z = I + H, G = 4 * H;
  const Real* W = p.data() + l.gate_w;
  const Real* bg = p.data() + l.gate_b;
  const Real* We = p.data() + l.enc_w;
  const Real* be = p.data() + l.enc_b;
  const Real* Wd = p.data() + l.dec_w;
  const Real* bd = p.data() + l.dec_b;
  const Real* Wa = p.data() + l.head_w;
  const Real* ba = p.data() + l.head_b;

  for (int t = 0; t < tape.steps; ++t) {
    Real* z = tape.zin.data() + t * Z;
    for (int k = 0; k < I; ++k) z[k] = static_cast<Real>(inputs[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)]);
    for (int k = 0; k < H; ++k) z[I + k] = t == 0 ? Real(0) : tape.hidden[static_cast<std::size_t>((t - 1) * H + k)];

    Real* gt = tape.gates.data() + t * G;
    for (int j = 0; j < G; ++j) {
      Real a = bg[j];
      const Real* row = W + static_cast<std::size_t>(j) * Z;
      for (int k = 0; k < Z; ++k) a += row[k] * z[k];
      gt[j] = (j >= 2 * H && j < 3 * H) ? tanh(a) : sigmoid(a);
    }
    Real* c = tape.cell.data() + t * H;
    Real* tc = tape.tanh_cell.data() + t * H;
    Real* h = tape.hidden.data() + t * H;
    for (int k = 0; k < H; ++k) {
      const Real c_prev = t == 0 ? Real(0) : tape.cell[static_cast<std::size_t>((t - 1) * H + k)];
      c[k] = gt[H + k] * c_prev + gt[k] * gt[2 * H + k];
      tc[k] = tanh(c[k]);
      h[k] = gt[3 * H + k] * tc[k];
    }
    if (!finite_all(h, static_cast<std::size_t>(H))) throw NumericError("lstm", t);

    Real* e = tape.code.data() + t * B;
    for (int j = 0; j < B; ++j) {
      Real a = be[j];
      const Real* row = We + static_cast<std::size_t>(j) * H;
      for (int k = 0; k < H; ++k) a += row[k] * h[k];
      e[j] = tanh(a);
    }
    if (!finite_all(e, static_cast<std::size_t>(B))) throw NumericError("bottleneck", t);
    if (!with_heads) continue;

    Real* r = tape.recon.data() + t * I;
    for (int j = 0; j < I; ++j) {
      Real a = bd[j];
      const Real* row = Wd + static_cast<std::size_t>(j) * B;
      for (int k = 0; k < B; ++k) a += row[k] * e[k];
      r[j] = a;
    }
    if (!finite_all(r, static_cast<std::size_t>(I))) throw NumericError("decoder", t);

    Real* pr = tape.prob.data() + t * kActionVectorSize;
    for (int j = 0; j < kActionVectorSize; ++j) {
      Real a = ba[j];
      const Real* row = Wa + static_cast<std::size_t>(j) * B;
      for (int k = 0; k < B; ++k) a += row[k] * e[k];
      pr[j] = a;
    }
    for (int s = 0; s < kSlotCount; ++s) {
      Real* blk = pr + s * kActionCount;
      const Real mx = *std::max_element(blk, blk + kActionCount);
      Real sum = 0;
      for (int k = 0; k < kActionCount; ++k) sum += (blk[k] = exp(blk[k] - mx));
      for (int k = 0; k < kActionCount; ++k) blk[k] /= sum;
    }
    if (!finite_all(pr, static_cast<std::size_t>(kActionVectorSize))) throw NumericError("action_head", t);
  }
}

}  // namespace

void LstmAeConfig::validate() const {
  if (input_dim != kRawFeatureCount) throw std::invalid_argument("input_dim must be 57");
  if (hidden_dim <= 0 || bottleneck_dim <= 0) throw std::invalid_argument("layer sizes must be positive");
  if (bottleneck_dim >= hidden_dim) throw std::invalid_argument("bottleneck_dim must be smaller than hidden_dim");
  if (sequence_len < 1) throw std::invalid_argument("sequence_len must be at least 1");
  if (batch_size < 1 || epochs < 0 || learning_rate < 0) throw std::invalid_argument("bad training schedule");
}

LossWeights LossWeights::defaults() {
  LossWeights w = uniform(1.0);
  w.by_position[static_cast<std::size_t>(action_position(SlotAction::Nothing))] = 0.01;
  w.by_position[static_cast<std::size_t>(action_position(SlotAction::Stay))] = 0.1;
  w.by_position[static_cast<std::size_t>(action_position(SlotAction::LeaveSystem))] = 0.3;
  return w;
}

LossWeights LossWeights::uniform(double v) {
  LossWeights w;
  w.by_position.fill(v);
  return w;
}

LstmAeLayout::LstmAeLayout(const LstmAeConfig& cfg)
    : input(cfg.input_dim), hidden(cfg.hidden_dim), bottleneck(cfg.bottleneck_dim) {
  const auto I = static_cast<std::size_t>(input), H = static_cast<std::size_t>(hidden),
             B = static_cast<std::size_t>(bottleneck), O = static_cast<std::size_t>(kActionVectorSize);
  std::size_t at = 0;
  gate_w = at, at += 4 * H * (I + H);
  gate_b = at, at += 4 * H;
  enc_w = at, at += B * H;
  enc_b = at, at += B;
  dec_w = at, at += I * B;
  dec_b = at, at += I;
  head_w = at, at += O * B;
  head_b = at, at += O;
  total = at;
}

LstmAeParams LstmAeParams::zeros(const LstmAeConfig& cfg, const FeatureScaling& scaling) {
  cfg.validate();
  LstmAeParams p;
  p.config = cfg;
  p.scaling = scaling;
  p.values.assign(LstmAeLayout(cfg).total, 0.0);
  return p;
}

LstmAeParams LstmAeParams::random(const LstmAeConfig& cfg, const FeatureScaling& scaling, std::uint64_t seed) {
  LstmAeParams p = zeros(cfg, scaling);
  const LstmAeLayout l(cfg);
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t offset, std::size_t count, int fan_in) {
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
    for (std::size_t i = 0; i < count; ++i) p.values[offset + i] = dist(rng);
  };
  const auto I = static_cast<std::size_t>(l.input), H = static_cast<std::size_t>(l.hidden),
             B = static_cast<std::size_t>(l.bottleneck);
  fill(l.gate_w, 4 * H * (I + H), l.input + l.hidden);
  fill(l.enc_w, B * H, l.hidden);
  fill(l.dec_w, I * B, l.bottleneck);
  fill(l.head_w, static_cast<std::size_t>(kActionVectorSize) * B, l.bottleneck);
  for (std::size_t k = 0; k < H; ++k) p.values[l.gate_b + H + k] = 1.0;
  return p;
}

NumericError::NumericError(const std::string& layer, int step)
    : std::runtime_error("non-finite activation in layer '" + layer + "' at step " + std::to_string(step)),
      layer_(layer),
      step_(step) {}

ForwardResult forward(const LstmAeParams& params, std::span<const RawStateFeatures> inputs) {
  const LstmAeLayout l = params.layout();
  if (inputs.size() > static_cast<std::size_t>(params.config.sequence_len))
    throw std::invalid_argument("sequence longer than the configured sequence_len");
  Tape<double> tape(l, static_cast<int>(inputs.size()));
  run_forward<double>(l, params.values, inputs, tape, true);
  ForwardResult out;
  const auto B = static_cast<std::size_t>(l.bottleneck);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    out.bottleneck.emplace_back(tape.code.begin() + static_cast<std::ptrdiff_t>(t * B),
                                tape.code.begin() + static_cast<std::ptrdiff_t>((t + 1) * B));
    ActionProbabilities p{};
    std::copy_n(tape.prob.begin() + static_cast<std::ptrdiff_t>(t * kActionVectorSize), kActionVectorSize, p.begin());
    out.probabilities.push_back(p);
  }
  return out;
}

double weighted_ce_loss(std::span<const double> predicted, std::span<const double> target,
                        std::span<const double> weights) {
  if (predicted.size() != target.size() || predicted.size() != weights.size())
    throw std::invalid_argument("weighted_ce_loss: length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double p = std::clamp(predicted[i], kProbEpsilon, 1.0 - kProbEpsilon);
    const double y = target[i];
    loss -= weights[i] * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return loss;
}

double weighted_ce_loss(std::span<const double> predicted, std::span<const double> target, const LossWeights& w) {
  if (predicted.size() != static_cast<std::size_t>(kActionVectorSize))
    throw std::invalid_argument("weighted_ce_loss: expected a 190-entry action vector");
  std::array<double, kActionVectorSize> per_entry{};
  for (int i = 0; i < kActionVectorSize; ++i)
    per_entry[static_cast<std::size_t>(i)] = w.by_position[static_cast<std::size_t>(i % kActionCount)];
  return weighted_ce_loss(predicted, target, per_entry);
}

ActionProbabilities target_distribution(const JointAction& action) {
  ActionProbabilities y{};
  for (int s = 0; s < kSlotCount; ++s) y[static_cast<std::size_t>(s * kActionCount + action_position(action[s]))] = 1.0;
  return y;
}

std::size_t SequenceSample::target_count() const {
  return static_cast<std::size_t>(std::count(has_target.begin(), has_target.end(), true));
}

std::vector<SequenceSample> make_sequences(const std::vector<Trajectory>& trajectories,
                                           const VesselRegistry& registry, const LstmAeConfig& cfg,
                                           const FeatureScaling& scaling, WindowIndex split_window) {
  std::vector<SequenceSample> out;
  for (const auto& traj : trajectories) {
    SequenceSample cur;
    auto flush = [&]() {
      if (cur.target_count() > 0) out.push_back(std::move(cur));
      cur = SequenceSample{};
    };
    for (std::size_t t = 0; t < traj.states.size(); ++t) {
      const PortState& s = traj.states[t];
      if (s.window >= split_window) break;
      cur.inputs.push_back(scaling.apply(expand_features(s, registry)));
      std::array<std::uint8_t, kSlotCount> tgt{};
      const bool known = t < traj.actions.size() && s.window + 1 < split_window;
      if (known)
        for (int i = 0; i < kSlotCount; ++i)
          tgt[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(action_position(traj.actions[t][i]));
      cur.targets.push_back(tgt);
      cur.has_target.push_back(known);
      if (cur.inputs.size() == static_cast<std::size_t>(cfg.sequence_len)) flush();
    }
    flush();
  }
  return out;
}

// Neumaier summation; keeps finite differences of the loss clean at small steps.
template <class Real>
struct CompensatedSum {
  Real sum = 0, carry = 0;
  void add(Real x) {
    const Real t = sum + x;
    carry += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  Real value() const { return sum + carry; }
};

template <class Real>
Real sequence_loss(const LstmAeLayout& l, std::span<const Real> params, const SequenceSample& sample,
                   const LossWeights& weights, double reconstruction_weight, std::span<Real> grad,
                   GradientFault fault) {
  using std::log;
  const int T = static_cast<int>(sample.inputs.size());
  const int I = l.input, H = l.hidden, B = l.bottleneck, Z = I + H, G = 4 * H;
  Tape<Real> tape(l, T);
  run_forward<Real>(l, params, sample.inputs, tape, true);

  const Real eps = static_cast<Real>(kProbEpsilon);
  const Real lambda = static_cast<Real>(reconstruction_weight);
  CompensatedSum<Real> loss;
  const bool want_grad = !grad.empty();

  // Output-side gradients per step, filled while accumulating the loss.
  std::vector<Real> d_code(static_cast<std::size_t>(T * B), Real(0));
  const Real* Wa = params.data() + l.head_w;
  const Real* Wd = params.data() + l.dec_w;
  const Real* We = params.data() + l.enc_w;
  const Real* W = params.data() + l.gate_w;

  for (int t = 0; t < T; ++t) {
    if (!sample.has_target[static_cast<std::size_t>(t)]) continue;
    const Real* pr = tape.prob.data() + t * kActionVectorSize;
    const Real* e = tape.code.data() + t * B;
    const Real* r = tape.recon.data() + t * I;
    const auto& x = sample.inputs[static_cast<std::size_t>(t)];
    const auto& tgt = sample.targets[static_cast<std::size_t>(t)];

    std::array<Real, kActionVectorSize> d_logit{};
    for (int s = 0; s < kSlotCount; ++s) {
      const Real* p = pr + s * kActionCount;
      std::array<Real, kActionCount> dp{};
      Real dot = 0;
      for (int k = 0; k < kActionCount; ++k) {
        const Real w = static_cast<Real>(weights.by_position[static_cast<std::size_t>(k)]);
        const bool hot = tgt[static_cast<std::size_t>(s)] == k;
        const bool clamped = p[k] < eps || p[k] > Real(1) - eps;
        const Real pc = std::clamp(p[k], eps, Real(1) - eps);
        if (hot) {
          loss.add(-w * log(pc));
          dp[static_cast<std::size_t>(k)] = clamped ? Real(0) : -w / pc;
        } else {
          loss.add(-w * log(Real(1) - pc));
          dp[static_cast<std::size_t>(k)] = clamped ? Real(0) : w / (Real(1) - pc);
        }
        dot += p[k] * dp[static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < kActionCount; ++k)
        d_logit[static_cast<std::size_t>(s * kActionCount + k)] = p[k] * (dp[static_cast<std::size_t>(k)] - dot);
    }
    for (int j = 0; j < I; ++j) {
      const Real diff = r[j] - static_cast<Real>(x[static_cast<std::size_t>(j)]);
      loss.add(lambda * diff * diff);
    }
    if (!want_grad) continue;

    Real* de = d_code.data() + t * B;
    Real* gWa = grad.data() + l.head_w;
    Real* gba = grad.data() + l.head_b;
    for (int j = 0; j < kActionVectorSize; ++j) {
      const Real dl = d_logit[static_cast<std::size_t>(j)];
      if (dl == Real(0)) continue;
      gba[j] += dl;
      Real* grow = gWa + static_cast<std::size_t>(j) * B;
      const Real* row = Wa + static_cast<std::size_t>(j) * B;
      for (int k = 0; k < B; ++k) {
        grow[k] += dl * e[k];
        de[k] += dl * row[k];
      }
    }
    Real* gWd = grad.data() + l.dec_w;
    Real* gbd = grad.data() + l.dec_b;
    for (int j = 0; j < I; ++j) {
      const Real dr = Real(2) * lambda * (r[j] - static_cast<Real>(x[static_cast<std::size_t>(j)]));
      gbd[j] += dr;
      Real* grow = gWd + static_cast<std::size_t>(j) * B;
      const Real* row = Wd + static_cast<std::size_t>(j) * B;
      for (int k = 0; k < B; ++k) {
        grow[k] += dr * e[k];
        de[k] += dr * row[k];
      }
    }
  }
  if (!want_grad) return loss.value();

  // Backpropagation through time.
  std::vector<Real> dh_next(static_cast<std::size_t>(H), Real(0)), dc_next(static_cast<std::size_t>(H), Real(0));
  std::vector<Real> dh(static_cast<std::size_t>(H)), da(static_cast<std::size_t>(G));
  Real* gWe = grad.data() + l.enc_w;
  Real* gbe = grad.data() + l.enc_b;
  Real* gW = grad.data() + l.gate_w;
  Real* gbg = grad.data() + l.gate_b;

  for (int t = T - 1; t >= 0; --t) {
    const Real* e = tape.code.data() + t * B;
    const Real* h = tape.hidden.data() + t * H;
    const Real* de = d_code.data() + t * B;
    std::copy(dh_next.begin(), dh_next.end(), dh.begin());
    for (int j = 0; j < B; ++j) {
      const Real dpre = de[j] * (Real(1) - e[j] * e[j]);
      if (dpre == Real(0)) continue;
      gbe[j] += dpre;
      Real* grow = gWe + static_cast<std::size_t>(j) * H;
      const Real* row = We + static_cast<std::size_t>(j) * H;
      for (int k = 0; k < H; ++k) {
        grow[k] += dpre * h[k];
        dh[static_cast<std::size_t>(k)] += dpre * row[k];
      }
    }

    const Real* gt = tape.gates.data() + t * G;
    const Real* tc = tape.tanh_cell.data() + t * H;
    for (int k = 0; k < H; ++k) {
      const Real ig = gt[k], fg = gt[H + k], gg = gt[2 * H + k], og = gt[3 * H + k];
      const Real c_prev = t == 0 ? Real(0) : tape.cell[static_cast<std::size_t>((t - 1) * H + k)];
      const Real dhk = dh[static_cast<std::size_t>(k)];
      const Real dc = dhk * og * (Real(1) - tc[k] * tc[k]) + dc_next[static_cast<std::size_t>(k)];
      da[static_cast<std::size_t>(k)] = dc * gg * ig * (Real(1) - ig);
      Real dfa = dc * c_prev * fg * (Real(1) - fg);
      if (fault == GradientFault::ForgetGate) dfa *= Real(0.5);
      da[static_cast<std::size_t>(H + k)] = dfa;
      da[static_cast<std::size_t>(2 * H + k)] = dc * ig * (Real(1) - gg * gg);
      da[static_cast<std::size_t>(3 * H + k)] = dhk * tc[k] * og * (Real(1) - og);
      dc_next[static_cast<std::size_t>(k)] = dc * fg;
    }

    const Real* z = tape.zin.data() + t * Z;
    std::fill(dh_next.begin(), dh_next.end(), Real(0));
    for (int j = 0; j < G; ++j) {
      const Real d = da[static_cast<std::size_t>(j)];
      if (d == Real(0)) continue;
      gbg[j] += d;
      Real* grow = gW + static_cast<std::size_t>(j) * Z;
      const Real* row = W + static_cast<std::size_t>(j) * Z;
      for (int k = 0; k < Z; ++k) grow[k] += d * z[k];
      for (int k = 0; k < H; ++k) dh_next[static_cast<std::size_t>(k)] += d * row[I + k];
    }
  }
  return loss.value();
}

template double sequence_loss<double>(const LstmAeLayout&, std::span<const double>, const SequenceSample&,
                                      const LossWeights&, double, std::span<double>, GradientFault);
template long double sequence_loss<long double>(const LstmAeLayout&, std::span<const long double>,
                                                const SequenceSample&, const LossWeights&, double,
                                                std::span<long double>, GradientFault);

double dataset_loss(const LstmAeParams& params, const std::vector<SequenceSample>& samples,
                    const LossWeights& weights) {
  const LstmAeLayout l = params.layout();
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : samples) {
    total += sequence_loss<double>(l, params.values, s, weights, params.config.reconstruction_weight, {});
    count += s.target_count();
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

TrainResult train(const std::vector<SequenceSample>& samples, const LstmAeConfig& cfg, const FeatureScaling& scaling,
                  const LossWeights& weights) {
  return train(samples, LstmAeParams::random(cfg, scaling, cfg.seed), weights);
}

TrainResult train(const std::vector<SequenceSample>& samples, LstmAeParams initial, const LossWeights& weights) {
  const LstmAeConfig& cfg = initial.config;
  cfg.validate();
  if (samples.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& s : samples)
    if (s.inputs.size() > static_cast<std::size_t>(cfg.sequence_len))
      throw std::invalid_argument("train: sample longer than sequence_len");

  TrainResult result;
  result.params = std::move(initial);
  const LstmAeLayout l = result.params.layout();
  result.initial_loss = dataset_loss(result.params, samples, weights);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(l.total);
  std::vector<double> last_good = result.params.values;

  for (int epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      std::size_t count = 0;
      double batch_loss = 0.0;
      try {
        for (std::size_t k = start; k < stop; ++k) {
          const auto& s = samples[order[k]];
          batch_loss += sequence_loss<double>(l, result.params.values, s, weights, cfg.reconstruction_weight, grad);
          count += s.target_count();
        }
      } catch (const NumericError&) {
        result.diverged = true;
        break;
      }
      if (count == 0) continue;
      double norm2 = 0.0;
      const double inv = 1.0 / static_cast<double>(count);
      for (auto& g : grad) {
        g *= inv;
        norm2 += g * g;
      }
      if (!std::isfinite(batch_loss) || !std::isfinite(norm2)) {
        result.diverged = true;
        break;
      }
      const double norm = std::sqrt(norm2);
      const double scale = norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
      for (std::size_t i = 0; i < grad.size(); ++i) result.params.values[i] -= cfg.learning_rate * scale * grad[i];
    }
    double epoch_loss = std::numeric_limits<double>::quiet_NaN();
    if (!result.diverged) {
      try {
        epoch_loss = dataset_loss(result.params, samples, weights);
      } catch (const NumericError&) {
      }
    }
    if (result.diverged || !std::isfinite(epoch_loss)) {
      result.diverged = true;
      result.params.values = last_good;
      break;
    }
    result.epoch_loss.push_back(epoch_loss);
    last_good = result.params.values;
  }
  return result;
}

GradientCheckResult gradient_check(const LstmAeParams& params, const SequenceSample& sample,
                                   const LossWeights& weights, double epsilon, std::size_t sample_count,
                                   std::uint64_t seed, GradientFault fault) {
  const LstmAeLayout l = params.layout();
  std::vector<long double> theta(params.values.begin(), params.values.end());
  std::vector<long double> grad(l.total, 0.0L);
  const double lambda = params.config.reconstruction_weight;
  sequence_loss<long double>(l, theta, sample, weights, lambda, grad, fault);

  std::vector<std::size_t> indices(l.total);
  std::iota(indices.begin(), indices.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(std::min(sample_count, indices.size()));

  GradientCheckResult result;
  const long double h = epsilon;
  for (const std::size_t idx : indices) {
    const long double saved = theta[idx];
    theta[idx] = saved + h;
    const long double up = sequence_loss<long double>(l, theta, sample, weights, lambda, {});
    theta[idx] = saved - h;
    const long double down = sequence_loss<long double>(l, theta, sample, weights, lambda, {});
    theta[idx] = saved;
    const long double fd = (up - down) / (2 * h);
    const long double an = grad[idx];
    const long double denom = std::max({std::fabs(an), std::fabs(fd), 1e-8L});
    const double rel = static_cast<double>(std::fabs(an - fd) / denom);
    if (rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_index = idx;
    }
    ++result.checked;
  }
  return result;
}

TemporalEncoder::TemporalEncoder(LstmAeParams params) : params_(std::move(params)) { params_.config.validate(); }

std::vector<double> TemporalEncoder::encode(std::span<const RawStateFeatures> history) const {
  const auto L = static_cast<std::size_t>(params_.config.sequence_len);
  const auto take = std::min(L, history.size());
  std::vector<RawStateFeatures> scaled;
  scaled.reserve(take);
  for (std::size_t k = history.size() - take; k < history.size(); ++k) scaled.push_back(params_.scaling.apply(history[k]));
  const LstmAeLayout l = params_.layout();
  if (scaled.empty()) return std::vector<double>(static_cast<std::size_t>(l.bottleneck), 0.0);
  Tape<double> tape(l, static_cast<int>(scaled.size()));
  run_forward<double>(l, params_.values, scaled, tape, false);
  const auto B = static_cast<std::size_t>(l.bottleneck);
  return {tape.code.end() - static_cast<std::ptrdiff_t>(B), tape.code.end()};
}

TemporalFeatureMap extract_features(const TemporalEncoder& encoder, const std::vector<Trajectory>& trajectories,
                                    const VesselRegistry& registry) {
  TemporalFeatureMap out;
  for (const auto& traj : trajectories) {
    std::vector<RawStateFeatures> raw;
    raw.reserve(traj.states.size());
    for (const auto& s : traj.states) raw.push_back(expand_features(s, registry));
    for (std::size_t t = 0; t < raw.size(); ++t) {
      const std::span<const RawStateFeatures> history(raw.data(), t + 1);
      out.emplace(FeatureKey{traj.id, traj.states[t].window}, encoder.encode(history));
    }
  }
  return out;
}

}  // namespace portirl
