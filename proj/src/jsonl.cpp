#include "gosc/jsonl.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

#include "gosc/error.hpp"

namespace gosc::jsonl {

std::vector<Line> read(std::istream& in, std::vector<std::string>* errors) {
  std::vector<Line> out;
  std::string line;
  std::size_t number = 0;

  // Peek the first non-blank character to detect the whole-array form.
  while (in && std::isspace(in.peek())) in.get();
  if (in.peek() == '[') {
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json arr = json::parse(all, nullptr, false);
    if (arr.is_discarded() || !arr.is_array()) throw ParseError("line 1", "malformed JSON array");
    for (auto& v : arr) out.push_back({++number, std::move(v)});
    return out;
  }

  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json v = json::parse(line, nullptr, false);
    if (v.is_discarded()) {
      ParseError err("line " + std::to_string(number), "malformed JSON");
      if (!errors) throw err;
      errors->push_back(err.what());
      continue;
    }
    out.push_back({number, std::move(v)});
  }
  return out;
}

std::vector<Line> read_file(const std::filesystem::path& path, std::vector<std::string>* errors) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read(in, errors);
}

void write(std::ostream& out, const json& value) { out << value.dump() << '\n'; }

void write_file(const std::filesystem::path& path, const std::vector<json>& values) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& v : values) write(out, v);
}

}  // namespace gosc::jsonl
