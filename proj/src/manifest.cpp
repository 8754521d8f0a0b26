#include "shapprop/manifest.hpp"

#include <chrono>
#include <fstream>

#include <json.hpp>

#include "shapprop/common.hpp"
#include "shapprop/simd/kernels.hpp"

namespace shapprop {

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read file for digest: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  return h;
}

std::string fnv1a64_hex(const std::filesystem::path& path) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64_file(path)));
  return buf;
}

void write_manifest_sidecar(const RunManifest& m, const std::filesystem::path& output_file) {
  nlohmann::json j;
  j["command"] = m.command;
  j["config"] = m.config;
  j["seed"] = m.seed;
  j["versions"] = {
      {"shapprop", kVersion},
      {"model_format", kModelFormatVersion},
      {"rng", "mt19937_64"},
      {"simd_backend", kernels::backend_name()},
  };
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char ts[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(ts, sizeof(ts), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  j["timestamp_utc"] = ts;
  auto& inputs = j["inputs"] = nlohmann::json::array();
  for (const auto& [path, digest] : m.input_digests) {
    inputs.push_back({{"path", path}, {"fnv1a64", digest}});
  }
  j["outputs"] = m.outputs;

  const std::filesystem::path sidecar =
      output_file.string() + ".manifest.json";
  std::ofstream out(sidecar);
  if (!out) throw Error("cannot write manifest: " + sidecar.string());
  out << j.dump(2) << '\n';
}

}  // namespace shapprop
