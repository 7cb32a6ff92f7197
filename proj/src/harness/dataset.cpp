#include <set>

#include <nlohmann/json.hpp>

#include "scale/harness.hpp"
#include "scale/serialize.hpp"

namespace scale {
namespace {

std::string scalar_text(const nlohmann::json& value, const char* field, int line) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number()) return value.dump();
  throw ParseError("line " + std::to_string(line) + ": field \"" + field +
                   "\" must be a string or number");
}

}  // namespace

std::vector<Problem> parse_dataset(const std::string& text) {
  std::vector<Problem> out;
  std::set<std::string> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": expected an object");
    for (const char* field : {"id", "problem", "answer"}) {
      if (!j.contains(field)) {
        throw ParseError("line " + std::to_string(line_no) + ": missing field \"" + field + "\"");
      }
    }
    Problem p;
    p.id = scalar_text(j["id"], "id", line_no);
    p.statement = scalar_text(j["problem"], "problem", line_no);
    p.gold_answer = scalar_text(j["answer"], "answer", line_no);
    if (normalize_answer(*p.gold_answer).empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty answer");
    }
    if (!seen.insert(p.id).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate id \"" + p.id + "\"");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Problem> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path));
}

}  // namespace scale
