#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace gosc::jsonl {

using nlohmann::json;

struct Line {
  std::size_t number;  // 1-based
  json value;
};

/// Reads line-delimited JSON. Blank lines are skipped. If the first
/// non-blank character of the stream is '[', the whole stream is parsed as a
/// single array instead and each element becomes a Line numbered from 1.
/// Malformed lines throw gosc::ParseError naming the line, unless `errors`
/// is given, in which case each failure is appended there and skipped.
std::vector<Line> read(std::istream& in, std::vector<std::string>* errors = nullptr);
std::vector<Line> read_file(const std::filesystem::path& path, std::vector<std::string>* errors = nullptr);

void write(std::ostream& out, const json& value);
void write_file(const std::filesystem::path& path, const std::vector<json>& values);

}  // namespace gosc::jsonl
