#include "manifest.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "deferkit/error.hpp"
#include "deferkit/version.hpp"

namespace deferkit::cli {

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("path", "cannot read " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buffer{};
  while (in) {
    in.read(buffer.data(), buffer.size());
    EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

void Manifest::input(const std::string& path) { inputs_.push_back(path); }

void Manifest::artifact(const std::string& path) { artifacts_.push_back(path); }

std::string Manifest::write(const std::string& out_dir) const {
  nlohmann::json doc;
  doc["command"] = config_.command();
  doc["version"] = kVersion;
  doc["seed"] = config_.seed();
  doc["config"] = config_.values();
  doc["inputs"] = nlohmann::json::object();
  for (const auto& p : inputs_) doc["inputs"][p] = sha256_file(p);
  doc["artifacts"] = nlohmann::json::object();
  for (const auto& p : artifacts_) doc["artifacts"][p] = sha256_file(p);
  const auto path =
      (std::filesystem::path(out_dir) / ("manifest_" + config_.command() + ".json")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("out", "cannot write " + path);
  out << doc.dump(2) << '\n';
  return path;
}

}  // namespace deferkit::cli
