#include "betagas/cli/io.hpp"

#include <array>
#include <fstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include "betagas/errors.hpp"

namespace betagas::cli {

namespace fs = std::filesystem;

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) throw ConfigError("cannot create output directory " + dir_.string());
}

void OutputDir::write(const std::string& name, const std::string& content) {
  const fs::path file = dir_ / name;
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << content;
  if (!out) throw Error("failed writing " + file.string());
  hashes_[name] = sha256_hex(content);
}

void OutputDir::write_json(const std::string& name, const nlohmann::json& value) { write(name, value.dump(2) + "\n"); }

std::string OutputDir::data_hash() const {
  std::string joined;
  for (const auto& [name, hash] : hashes_) joined += name + ":" + hash + "\n";
  return sha256_hex(joined);
}

void OutputDir::write_manifest(const std::string& subcommand, const std::string& config_text, std::uint64_t seed,
                               std::size_t workers, const std::string& prefix) const {
  nlohmann::json m;
  m["tool"] = "betagas";
  m["version"] = BETAGAS_VERSION;
  m["subcommand"] = subcommand;
  m["seed"] = seed;
  m["workers"] = workers;
  m["config_sha256"] = sha256_hex(config_text);
  m["files"] = hashes_;
  m["data_sha256"] = data_hash();
  m["versions"] = {{"compiler", __VERSION__},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", BOOST_LIB_VERSION},
                   {"openssl", OPENSSL_VERSION_TEXT}};
  m["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  const fs::path file = dir_ / (prefix + "manifest.json");
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + file.string());
  out << m.dump(2) << "\n";
}

}  // namespace betagas::cli
