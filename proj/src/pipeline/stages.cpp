// Pure parsing and construction helpers for the SCALE stages.

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "scale/eval.hpp"
#include "scale/pipeline.hpp"

namespace scale {
namespace {

std::string trim_copy(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Length of a list marker at the start of `line` (after indentation), or 0.
// Accepts "1." / "1)" followed by whitespace or end of line, and "Step 1:",
// optionally wrapped in markdown bold.
std::size_t marker_length(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  bool bold = false;
  if (line.substr(i).starts_with("**")) {
    bold = true;
    i += 2;
  }
  std::size_t start = i;
  std::string_view rest = line.substr(i);
  if (rest.size() >= 4 && (rest.substr(0, 4) == "Step" || rest.substr(0, 4) == "step" ||
                           rest.substr(0, 4) == "STEP")) {
    i += 4;
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t digits = i;
    while (i < line.size() && is_digit(line[i])) ++i;
    if (i == digits) return 0;
    if (i < line.size() && (line[i] == ':' || line[i] == '.' || line[i] == ')')) {
      ++i;
    } else {
      return 0;
    }
  } else {
    while (i < line.size() && is_digit(line[i])) ++i;
    if (i == start || i - start > 3) return 0;
    if (i >= line.size() || (line[i] != '.' && line[i] != ')')) return 0;
    ++i;
    if (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])) &&
        !(bold && line.substr(i).starts_with("**"))) {
      return 0;
    }
  }
  if (bold && line.substr(i).starts_with("**")) i += 2;
  return i;
}

}  // namespace

Decomposition parse_decomposition(const std::string& text) {
  Decomposition out;
  out.raw_text = text;
  std::vector<std::string> steps;
  bool in_step = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (auto len = marker_length(line); len > 0) {
      steps.emplace_back(line.substr(len));
      in_step = true;
    } else if (in_step) {
      steps.back() += '\n';
      steps.back() += line;
    }
    pos = end + 1;
  }
  for (auto& step : steps) {
    std::string s = trim_copy(step);
    if (s.empty()) continue;
    out.subproblems.push_back(
        SubProblem{static_cast<int>(out.subproblems.size()) + 1, std::move(s)});
  }
  if (out.subproblems.empty()) throw ParseError("decomposition contains no numbered steps");
  return out;
}

std::optional<int> parse_judge_label(std::string_view reply, int candidates) {
  auto valid = [&](char c) -> std::optional<int> {
    int idx = std::toupper(static_cast<unsigned char>(c)) - 'A';
    if (idx >= 0 && idx < candidates) return idx;
    return std::nullopt;
  };
  auto is_label_char = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };

  // "Best: X" (last occurrence wins).
  std::optional<int> found;
  for (std::size_t pos = 0; (pos = reply.find("Best", pos)) != std::string_view::npos; ++pos) {
    std::size_t i = pos + 4;
    while (i < reply.size() && (reply[i] == ':' || reply[i] == ' ' || reply[i] == '*' ||
                                reply[i] == '(' || reply[i] == '"')) {
      ++i;
    }
    if (i < reply.size() && std::isupper(static_cast<unsigned char>(reply[i])) &&
        (i + 1 == reply.size() || !is_label_char(reply[i + 1]))) {
      if (auto idx = valid(reply[i])) found = idx;
    }
  }
  if (found) return found;

  // \boxed{X}
  for (std::size_t pos = 0; (pos = reply.find("\\boxed{", pos)) != std::string_view::npos; ++pos) {
    std::size_t i = pos + 7;
    if (i + 1 < reply.size() && reply[i + 1] == '}' &&
        std::isupper(static_cast<unsigned char>(reply[i]))) {
      if (auto idx = valid(reply[i])) found = idx;
    }
  }
  if (found) return found;

  // A bare label, possibly decorated.
  std::string bare;
  for (char c : reply) {
    if (!std::isspace(static_cast<unsigned char>(c)) &&
        std::string_view("*.()\"'").find(c) == std::string_view::npos) {
      bare += c;
    }
  }
  if (bare.size() == 1 && std::isupper(static_cast<unsigned char>(bare[0]))) return valid(bare[0]);
  return std::nullopt;
}

std::optional<double> parse_difficulty(std::string_view reply) {
  struct Literal {
    double value;
    bool has_point;
  };
  std::vector<Literal> literals;
  std::size_t i = 0;
  while (i < reply.size()) {
    bool starts_number = is_digit(reply[i]) ||
                         (reply[i] == '.' && i + 1 < reply.size() && is_digit(reply[i + 1]));
    if (!starts_number || (i > 0 && (std::isalpha(static_cast<unsigned char>(reply[i - 1])) ||
                                     is_digit(reply[i - 1])))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    bool negative = begin > 0 && reply[begin - 1] == '-' &&
                    (begin < 2 || !std::isalnum(static_cast<unsigned char>(reply[begin - 2])));
    while (i < reply.size() && is_digit(reply[i])) ++i;
    bool has_point = false;
    if (i < reply.size() && reply[i] == '.' && i + 1 < reply.size() && is_digit(reply[i + 1])) {
      has_point = true;
      ++i;
      while (i < reply.size() && is_digit(reply[i])) ++i;
    }
    double v = std::strtod(std::string(reply.substr(begin, i - begin)).c_str(), nullptr);
    literals.push_back({negative ? -v : v, has_point});
  }
  if (literals.empty()) return std::nullopt;
  auto in_range = [](const Literal& l) { return l.value >= 0.0 && l.value <= 1.0; };
  for (const auto& l : literals) {
    if (l.has_point && in_range(l)) return l.value;
  }
  for (const auto& l : literals) {
    if (in_range(l)) return l.value;
  }
  return std::clamp(literals.front().value, 0.0, 1.0);
}

ProcessingMode select_mode(double difficulty, double threshold) {
  return difficulty <= threshold ? ProcessingMode::System1 : ProcessingMode::System2;
}

std::vector<std::string> ExecutionContext::history_blocks() const {
  std::vector<std::string> blocks;
  blocks.reserve(history_.size());
  for (std::size_t j = 0; j < history_.size(); ++j) {
    const auto n = std::to_string(j + 1);
    blocks.push_back("\nSub-problem " + n + ": " + history_[j].subproblem.statement +
                     "\nSolution " + n + ":\n" + history_[j].solution.solution_text + "\n");
  }
  return blocks;
}

std::string ExecutionContext::render_history() const {
  std::string out;
  for (const auto& block : history_blocks()) out += block;
  return out;
}

std::string ExecutionContext::render() const {
  return "Problem:\n" + problem_.statement + "\n" + render_history();
}

ExecutionContext build_context(const Problem& problem, std::span<const SolvedStep> solved) {
  return ExecutionContext(problem, std::vector<SolvedStep>(solved.begin(), solved.end()));
}

std::optional<std::string> extract_boxed(std::string_view text) {
  constexpr std::string_view kBoxed = "\\boxed";
  std::optional<std::string> boxed;
  for (std::size_t pos = 0; (pos = text.find(kBoxed, pos)) != std::string_view::npos;) {
    std::size_t i = pos + kBoxed.size();
    pos = i;
    while (i < text.size() && text[i] == ' ') ++i;
    if (i >= text.size() || text[i] != '{') continue;
    int depth = 0;
    std::size_t j = i;
    for (; j < text.size(); ++j) {
      if (text[j] == '{') ++depth;
      if (text[j] == '}' && --depth == 0) break;
    }
    if (j >= text.size()) continue;  // unbalanced
    boxed = std::string(text.substr(i + 1, j - i - 1));
    pos = j + 1;
  }
  return boxed;
}

std::optional<std::string> extract_final_answer(std::string_view text) {
  auto boxed = extract_boxed(text);
  if (boxed) {
    auto normalized = normalize_answer(*boxed);
    if (!normalized.empty()) return normalized;
  }

  // Last standalone number or simple fraction.
  std::optional<std::string> last;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i]) ||
        (i > 0 && (std::isalnum(static_cast<unsigned char>(text[i - 1])) || text[i - 1] == '_' ||
                   text[i - 1] == '.' || text[i - 1] == '/'))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > 0 && text[begin - 1] == '-' &&
        (begin < 2 || !std::isalnum(static_cast<unsigned char>(text[begin - 2])))) {
      --begin;
    }
    while (i < text.size() && is_digit(text[i])) ++i;
    if (i + 1 < text.size() && (text[i] == '.' || text[i] == '/') && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) ++i;
    }
    if (i < text.size() && (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
      continue;
    }
    last = std::string(text.substr(begin, i - begin));
  }
  if (last) return normalize_answer(*last);
  return std::nullopt;
}

}  // namespace scale
