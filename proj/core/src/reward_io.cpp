#include <fstream>

#include "json.hpp"
#include "portirl/csv.hpp"
#include "portirl/maxent_irl.hpp"

namespace portirl {

namespace {

constexpr const char* kRewardFormat = "portirl-reward";
constexpr int kRewardVersion = 1;

const char* mode_name(IrlMode m) { return m == IrlMode::Exact ? "exact" : "factored"; }
const char* value_name(ValueDefinition v) { return v == ValueDefinition::ExpectedQ ? "expected_q" : "log_sum_exp"; }
const char* kind_name(RewardKind k) { return k == RewardKind::Linear ? "linear" : "mlp"; }

}  // namespace

void save_reward(const std::filesystem::path& path, const RewardCheckpoint& cp) {
  const auto& c = cp.config;
  const auto& s = cp.builder.scaling();
  nlohmann::ordered_json j;
  j["format"] = kRewardFormat;
  j["version"] = kRewardVersion;
  j["config"] = {{"gamma", c.gamma},
                 {"learning_rate", c.learning_rate},
                 {"iterations", c.iterations},
                 {"value_tol", c.value_tol},
                 {"mode", mode_name(c.mode)},
                 {"v_definition", value_name(c.v_definition)}};
  j["reward"] = {{"kind", kind_name(cp.params.kind)},
                 {"context_dim", cp.params.context_dim},
                 {"hidden", cp.params.hidden}};
  j["features"] = {{"temporal_dim", cp.builder.temporal_dim()},
                   {"scaling",
                    {{"size_max", s.size_max}, {"carrier_max", s.carrier_max}, {"staytime_cap", s.staytime_cap}}}};
  auto reg = nlohmann::ordered_json::array();
  for (const auto& [imo, a] : cp.builder.registry().sorted()) reg.push_back({imo, a.size_class, a.carrier_code});
  j["features"]["registry"] = std::move(reg);
  j["feature_dimension"] = cp.params.theta.size();
  j["theta"] = cp.params.theta;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

RewardCheckpoint load_reward(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reward checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
    if (j.value("format", "") != kRewardFormat || j.value("version", 0) != kRewardVersion)
      throw std::runtime_error(path.string() + ": not a version-1 reward checkpoint");
    RewardCheckpoint cp;
    const auto& c = j.at("config");
    cp.config.gamma = c.at("gamma");
    cp.config.learning_rate = c.at("learning_rate");
    cp.config.iterations = c.at("iterations");
    cp.config.value_tol = c.at("value_tol");
    cp.config.mode = c.at("mode") == "exact" ? IrlMode::Exact : IrlMode::Factored;
    cp.config.v_definition = c.at("v_definition") == "log_sum_exp" ? ValueDefinition::LogSumExp
                                                                   : ValueDefinition::ExpectedQ;
    cp.config.validate();
    const auto& r = j.at("reward");
    cp.params.kind = r.at("kind") == "mlp" ? RewardKind::Mlp : RewardKind::Linear;
    cp.params.context_dim = r.at("context_dim");
    cp.params.hidden = r.at("hidden");
    cp.params.theta = j.at("theta").get<std::vector<double>>();
    const auto& f = j.at("features");
    FeatureScaling scaling;
    scaling.size_max = f.at("scaling").at("size_max");
    scaling.carrier_max = f.at("scaling").at("carrier_max");
    scaling.staytime_cap = f.at("scaling").at("staytime_cap");
    VesselRegistry registry;
    for (const auto& row : f.at("registry"))
      registry.add(row.at(0).get<Imo>(), VesselAttrs{row.at(1).get<int>(), row.at(2).get<int>()});
    cp.builder = SlotContextBuilder(std::move(registry), scaling, f.at("temporal_dim").get<int>());

    const auto dx = static_cast<std::size_t>(cp.params.context_dim);
    const auto h = static_cast<std::size_t>(cp.params.hidden);
    const std::size_t want = cp.params.kind == RewardKind::Linear ? kActionCount * dx
                                                                  : h * dx + h + kActionCount * h + kActionCount;
    if (cp.params.context_dim != cp.builder.dimension() || cp.params.theta.size() != want)
      throw std::runtime_error(path.string() + ": parameter count does not match the feature layout");
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_training_log(const std::filesystem::path& path, const std::vector<IterationLog>& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,log_likelihood,grad_norm\n";
  for (const auto& e : log)
    out << e.iteration << ',' << csv::format_double(e.log_likelihood) << ',' << csv::format_double(e.grad_norm)
        << '\n';
}

}  // namespace portirl
