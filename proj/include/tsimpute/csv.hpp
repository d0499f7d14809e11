#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tsimpute::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file with a mandatory header row.
/// Throws std::runtime_error on unreadable files, ragged rows, or when the
/// file holds a header but no data rows.
Table read_file(const std::filesystem::path& path);

/// Writes content atomically: to a sibling temp file first, then rename.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// Round-trip-exact formatting for data values (%.17g).
std::string format_full(double v);

/// Compact formatting for report values (%.10g).
std::string format_short(double v);

std::vector<std::string> split_line(const std::string& line);

}  // namespace tsimpute::csv
