#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "json.hpp"
#include "portirl/version.hpp"

namespace portirl::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xF];
  }
  return hex;
}

RunManifest::RunManifest(std::filesystem::path out_dir) : out_dir_(std::move(out_dir)) {}

std::string RunManifest::key_for(const std::filesystem::path& p) const {
  const auto abs = std::filesystem::weakly_canonical(p);
  const auto base = std::filesystem::weakly_canonical(out_dir_);
  const auto rel = abs.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return abs.generic_string();
}

void RunManifest::load() {
  commands_.clear();
  std::ifstream in(path());
  if (!in) return;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return;  // a damaged manifest is rebuilt from scratch
  }
  if (!j.contains("commands")) return;
  for (const auto& [name, c] : j["commands"].items()) {
    CommandRecord r;
    r.config = c.value("config", std::map<std::string, std::string>{});
    r.seed = c.value("seed", std::uint64_t{0});
    r.inputs = c.value("inputs", std::map<std::string, std::string>{});
    r.outputs = c.value("outputs", std::map<std::string, std::string>{});
    commands_[name] = std::move(r);
  }
}

void RunManifest::record(const std::string& command, CommandRecord rec) { commands_[command] = std::move(rec); }

void RunManifest::save() const {
  nlohmann::ordered_json j;
  j["tool"] = "portirl";
  j["version"] = kVersionString;
  nlohmann::ordered_json cmds = nlohmann::ordered_json::object();
  for (const auto& [name, r] : commands_) {
    cmds[name] = {{"config", r.config}, {"seed", r.seed}, {"inputs", r.inputs}, {"outputs", r.outputs}};
  }
  j["commands"] = std::move(cmds);
  std::ofstream out(path());
  if (!out) throw std::runtime_error("cannot write " + path().string());
  out << j.dump(2) << '\n';
}

}  // namespace portirl::cli
