#ifndef PORTIRL_TOOLS_MANIFEST_HPP
#define PORTIRL_TOOLS_MANIFEST_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace portirl::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct CommandRecord {
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> hash
  std::map<std::string, std::string> outputs;  // path -> hash
};

/// run.json under the output directory. One entry per command; rerunning a
/// command replaces its entry. Paths inside the output directory are stored
/// relative to it so that manifests of identical runs compare equal.
class RunManifest {
 public:
  explicit RunManifest(std::filesystem::path out_dir);

  void load();
  void record(const std::string& command, CommandRecord rec);
  void save() const;
  std::filesystem::path path() const { return out_dir_ / "run.json"; }

  /// Key used for `p` inside the manifest.
  std::string key_for(const std::filesystem::path& p) const;

 private:
  std::filesystem::path out_dir_;
  std::map<std::string, CommandRecord> commands_;
};

}  // namespace portirl::cli

#endif  // PORTIRL_TOOLS_MANIFEST_HPP
