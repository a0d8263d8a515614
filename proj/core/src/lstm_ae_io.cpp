#include <fstream>

#include "json.hpp"
#include "portirl/csv.hpp"
#include "portirl/lstm_ae.hpp"

namespace portirl {

namespace {

constexpr const char* kCheckpointFormat = "portirl-lstm-ae";
constexpr int kCheckpointVersion = 1;

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const LstmAeParams& params, const LossWeights& weights) {
  const auto& c = params.config;
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["config"] = {{"input_dim", c.input_dim},
                 {"hidden_dim", c.hidden_dim},
                 {"bottleneck_dim", c.bottleneck_dim},
                 {"sequence_len", c.sequence_len},
                 {"learning_rate", c.learning_rate},
                 {"epochs", c.epochs},
                 {"batch_size", c.batch_size},
                 {"seed", c.seed},
                 {"reconstruction_weight", c.reconstruction_weight},
                 {"clip_norm", c.clip_norm},
                 {"staytime_cap", c.staytime_cap}};
  j["scaling"] = {{"size_max", params.scaling.size_max},
                  {"carrier_max", params.scaling.carrier_max},
                  {"staytime_cap", params.scaling.staytime_cap}};
  j["loss_weights"] = weights.by_position;
  j["parameter_count"] = params.values.size();
  j["params"] = params.values;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

LstmAeParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != kCheckpointFormat || j.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error(path.string() + ": not a version-1 LSTM-AE checkpoint");
  LstmAeParams p;
  const auto& c = j.at("config");
  p.config.input_dim = c.at("input_dim");
  p.config.hidden_dim = c.at("hidden_dim");
  p.config.bottleneck_dim = c.at("bottleneck_dim");
  p.config.sequence_len = c.at("sequence_len");
  p.config.learning_rate = c.at("learning_rate");
  p.config.epochs = c.at("epochs");
  p.config.batch_size = c.at("batch_size");
  p.config.seed = c.at("seed");
  p.config.reconstruction_weight = c.at("reconstruction_weight");
  p.config.clip_norm = c.at("clip_norm");
  p.config.staytime_cap = c.at("staytime_cap");
  p.config.validate();
  const auto& s = j.at("scaling");
  p.scaling.size_max = s.at("size_max");
  p.scaling.carrier_max = s.at("carrier_max");
  p.scaling.staytime_cap = s.at("staytime_cap");
  p.values = j.at("params").get<std::vector<double>>();
  if (p.values.size() != LstmAeLayout(p.config).total)
    throw std::runtime_error(path.string() + ": parameter count does not match the configuration");
  return p;
}

void write_feature_file(const std::filesystem::path& path, const TemporalFeatureMap& features) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::size_t dim = features.empty() ? 0 : features.begin()->second.size();
  out << "trajectory_id,window";
  for (std::size_t k = 0; k < dim; ++k) out << ",f_" << k;
  out << '\n';
  for (const auto& [key, values] : features) {
    out << key.first << ',' << key.second;
    for (double v : values) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

TemporalFeatureMap read_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file " + path.string());
  std::string line;
  if (!csv::read_line(in, line) || !line.starts_with("trajectory_id,window"))
    throw std::runtime_error(path.string() + ": bad header");
  const std::size_t dim = csv::split(line).size() - 2;
  TemporalFeatureMap out;
  std::int64_t lineno = 1;
  while (csv::read_line(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const auto id = csv::parse_int(f[0]);
    const auto w = f.size() > 1 ? csv::parse_int(f[1]) : std::nullopt;
    if (f.size() != dim + 2 || !id || !w) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto x = csv::parse_double(f[k + 2]);
      if (!x) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad value");
      v[k] = *x;
    }
    out.emplace(FeatureKey{static_cast<int>(*id), *w}, std::move(v));
  }
  return out;
}

}  // namespace portirl
