#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace betagas::cli {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Collects the files written by one subcommand and emits manifest.json.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const noexcept { return dir_; }
  /// Writes the file (replacing it) and records its hash.
  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& value);
  /// manifest.json (or `<prefix>manifest.json`) with hashes, seed and wall time.
  void write_manifest(const std::string& subcommand, const std::string& config_text, std::uint64_t seed,
                      std::size_t workers, const std::string& prefix = "") const;
  /// Hash over the sorted (name, hash) list of data files.
  std::string data_hash() const;

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> hashes_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace betagas::cli
