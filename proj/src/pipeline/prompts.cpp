#include <fstream>
#include <sstream>

#include "scale/pipeline.hpp"

namespace scale {
namespace {

constexpr const char* kDecompose =
    R"(Split the problem below into a few sub-problems, listed in the order they should be solved. A later sub-problem may use the results of earlier ones. Do not solve anything yet.

Problem:
{problem}

Answer with one sub-problem per line, numbered like this:
Step 1: <sub-problem>
Step 2: <sub-problem>
The final sub-problem should yield the answer to the problem.
)";

constexpr const char* kJudge =
    R"(Several candidate plans for the same problem are listed below. Pick the plan most likely to reach a correct answer: its steps should be sound and unambiguous, leave nothing out, and stay on topic.

Problem:
{problem}

{candidates}
Explain your pick in a sentence or two, then end with a line of the form:
Best: <label>
)";

constexpr const char* kAssess =
    R"(How hard is the current sub-problem, given the problem and the work done so far? Weigh the amount of computation, the mathematics it calls for, the number of reasoning steps it takes and how likely a quick attempt is to go wrong.

Problem:
{problem}
{history}
Current sub-problem: {subproblem}

First line: one decimal number from 0 (routine) to 1 (very hard). Second line: a short justification.
)";

constexpr const char* kSolve =
    R"(Work out the current sub-problem, using the results already established.

Problem:
{problem}
{history}
Current sub-problem: {subproblem}

State the result of this sub-problem. If it gives the final answer to the original problem, write that answer inside \boxed{}.
)";

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  return PromptTemplates{kDecompose, kJudge, kAssess, kSolve};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates out = defaults();
  auto load_one = [&](const char* name, std::string& slot) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) return;
    std::ostringstream ss;
    ss << in.rdbuf();
    slot = ss.str();
  };
  load_one("decompose.txt", out.decompose);
  load_one("judge.txt", out.judge);
  load_one("assess.txt", out.assess);
  load_one("solve.txt", out.solve);
  return out;
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace scale
