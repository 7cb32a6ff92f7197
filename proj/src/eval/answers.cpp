#include <algorithm>
#include <cctype>
#include <stdexcept>

#include <boost/multiprecision/cpp_int.hpp>

#include "scale/eval.hpp"

namespace scale {
namespace {

using boost::multiprecision::cpp_int;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](unsigned char c) { return std::isdigit(c); });
}

// Strips one layer of \boxed{...}, $...$, $$...$$ or \(...\) when it wraps the
// whole string. Returns false when nothing was stripped.
bool strip_wrapper(std::string_view& s) {
  constexpr std::string_view kBoxed = "\\boxed{";
  if (s.starts_with(kBoxed) && s.ends_with('}')) {
    // Only when the opening brace closes at the very end.
    int depth = 0;
    for (std::size_t i = kBoxed.size() - 1; i < s.size(); ++i) {
      if (s[i] == '{') ++depth;
      if (s[i] == '}' && --depth == 0) {
        if (i != s.size() - 1) return false;
        s = s.substr(kBoxed.size(), s.size() - kBoxed.size() - 1);
        return true;
      }
    }
    return false;
  }
  if (s.size() >= 4 && s.starts_with("$$") && s.ends_with("$$")) {
    s = s.substr(2, s.size() - 4);
    return true;
  }
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    s = s.substr(1, s.size() - 2);
    return true;
  }
  if (s.size() >= 4 && s.starts_with("\\(") && s.ends_with("\\)")) {
    s = s.substr(2, s.size() - 4);
    return true;
  }
  return false;
}

bool strip_trailing_punct(std::string_view& s) {
  bool changed = false;
  while (!s.empty() && std::string_view(".,;:!?").find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
    changed = true;
  }
  return changed;
}

std::string format_rational(cpp_int num, cpp_int den) {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  cpp_int g = boost::multiprecision::gcd(num < 0 ? cpp_int(-num) : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num == 0) return "0";
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

// cpp_int treats a leading 0 as an octal prefix.
cpp_int decimal_int(std::string digits) {
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size()));
  return digits.empty() ? cpp_int(0) : cpp_int(digits);
}

// [sign]digits
std::optional<cpp_int> parse_signed_int(std::string_view s) {
  bool neg = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  if (!all_digits(s)) return std::nullopt;
  cpp_int v = decimal_int(std::string(s));
  return neg ? cpp_int(-v) : v;
}

std::optional<std::string> numeric_canonical(std::string_view s) {
  if (auto v = parse_signed_int(s)) return format_rational(*v, 1);

  // a/b
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    auto num = parse_signed_int(trim(s.substr(0, slash)));
    auto den = parse_signed_int(trim(s.substr(slash + 1)));
    if (num && den && *den != 0) return format_rational(*num, *den);
    return std::nullopt;
  }

  // \frac{a}{b}, \dfrac{a}{b}, \tfrac{a}{b}
  for (std::string_view prefix : {"\\frac{", "\\dfrac{", "\\tfrac{"}) {
    if (!s.starts_with(prefix)) continue;
    std::string_view rest = s.substr(prefix.size());
    auto mid = rest.find("}{");
    if (mid == std::string_view::npos || !rest.ends_with('}')) return std::nullopt;
    auto num = parse_signed_int(trim(rest.substr(0, mid)));
    auto den = parse_signed_int(trim(rest.substr(mid + 2, rest.size() - mid - 3)));
    if (num && den && *den != 0) return format_rational(*num, *den);
    return std::nullopt;
  }
  if (s.starts_with("-\\frac{") || s.starts_with("-\\dfrac{")) {
    auto inner = numeric_canonical(s.substr(1));
    if (!inner) return std::nullopt;
    if (*inner == "0") return inner;
    return inner->front() == '-' ? inner->substr(1) : "-" + *inner;
  }

  // Finite decimal: [sign]digits.digits, [sign].digits or [sign]digits.
  {
    std::string_view body = s;
    bool neg = false;
    if (!body.empty() && (body.front() == '+' || body.front() == '-')) {
      neg = body.front() == '-';
      body.remove_prefix(1);
    }
    auto dot = body.find('.');
    if (dot != std::string_view::npos) {
      std::string_view whole = body.substr(0, dot);
      std::string_view frac = body.substr(dot + 1);
      if ((whole.empty() || all_digits(whole)) && (frac.empty() || all_digits(frac)) &&
          !(whole.empty() && frac.empty())) {
        cpp_int num = decimal_int(std::string(whole) + std::string(frac));
        cpp_int den = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(frac.size()));
        return format_rational(neg ? cpp_int(-num) : num, den);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string_view s = trim(text);
  for (bool changed = true; changed;) {
    changed = strip_wrapper(s);
    changed = strip_trailing_punct(s) || changed;
    s = trim(s);
  }
  if (auto numeric = numeric_canonical(s)) return *numeric;

  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

bool answers_equal(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b);
}

double pass_at_1(std::span<const bool> correct) {
  if (correct.empty()) throw std::invalid_argument("pass@1 needs at least one sample");
  auto hits = std::count(correct.begin(), correct.end(), true);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(correct.size());
}

}  // namespace scale
