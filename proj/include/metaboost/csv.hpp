#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace metaboost::csv {

/// A parsed comma-separated file. `lines[i]` is the 1-based source line of `rows[i]`.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

/// Reads a CSV with a header row. Lines starting with '#' are comments and are
/// skipped, as are blank lines. Quoted fields may contain commas and doubled quotes.
/// Throws ParseError (with the line number) on ragged rows or unterminated quotes.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

std::string_view trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Index of `name` in `header`, matched case-insensitively after trimming.
std::optional<std::size_t> find_column(const std::vector<std::string>& header, std::string_view name);

std::optional<double> parse_double(std::string_view s);

/// Shortest text that round-trips to the same double.
std::string format_double(double v);

std::string escape(std::string_view field);

}  // namespace metaboost::csv
