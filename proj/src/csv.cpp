#include "shapprop/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace shapprop::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

Table read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file: " + path.string());

  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (t.header.empty()) {
      for (auto& c : cells) t.header.push_back(trim(c));
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(t.header.size()) + " columns, got " +
                       std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      const auto* begin = cell.data();
      const auto* end = cell.data() + cell.size();
      const auto [ptr, ec] = std::from_chars(begin, end, v);
      if (ec != std::errc{} || ptr != end) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": column \"" +
                         t.header[c] + "\" holds non-numeric value \"" + cell + "\"");
      }
      row[c] = v;
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ParseError(path.string() + ": missing header row");
  return t;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, ptr);
}

void write_file(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV file: " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw DimensionMismatchError("CSV row width " + std::to_string(row.size()) +
                                   " != header width " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
}

void write_file_raw(const std::filesystem::path& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write CSV file: " + path.string());
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw DimensionMismatchError("CSV row width " + std::to_string(row.size()) +
                                   " != header width " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
}

}  // namespace shapprop::csv
