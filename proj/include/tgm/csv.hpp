#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tgm {

using CsvRow = std::vector<std::string>;

/// RFC-4180 style: comma separated, double-quoted fields may contain commas,
/// line breaks and doubled quotes; CRLF or LF line ends. Blank lines are
/// skipped. Throws Error(ParseError) on an unterminated quote or stray quote.
std::vector<CsvRow> parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);
std::string render_csv_row(const CsvRow& row);

}  // namespace tgm
