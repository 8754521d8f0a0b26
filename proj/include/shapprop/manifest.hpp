#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

// Run provenance. Every CLI command writes a `<output>.manifest.json` sidecar
// next to each file it produces: the command, its effective configuration,
// the seed, library/format versions, a UTC timestamp, and FNV-1a-64 digests
// of the input files. Output CSVs themselves stay byte-identical for
// identical flags + inputs + seed; the timestamp lives only in the sidecar.

namespace shapprop {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kModelFormatVersion = 1;

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> input_digests;  // path -> fnv1a64 hex
  std::vector<std::string> outputs;
};

std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string fnv1a64_hex(const std::filesystem::path& path);

void write_manifest_sidecar(const RunManifest& m, const std::filesystem::path& output_file);

}  // namespace shapprop
