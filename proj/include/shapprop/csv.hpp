#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shapprop/common.hpp"

// CSV with a header row. Numbers are parsed and emitted locale-independently
// (std::from_chars / std::to_chars); floats are written with 9 significant
// digits so fixture files are stable across platforms.

namespace shapprop::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t cols() const { return header.size(); }
};

Table read_file(const std::filesystem::path& path);

std::string format_double(double v);

void write_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows);

// For tables with non-numeric cells (e.g. method tags); every row must match
// the header width.
void write_file_raw(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows);

}  // namespace shapprop::csv
