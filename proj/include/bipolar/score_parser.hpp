#pragma once

#include <cctype>
#include <optional>
#include <string_view>

namespace bipolar {

// Output contract for a completion:
//
//   ws* ( "score" ws* ":"? ws* )? digits ( "." digits )? ( ws | [.,;!] )*
//
// The label is case-insensitive. The literal must lie in [0, 100]; decimals
// round half-up. Anything else (prose, signs, several numbers) is malformed.
// Total over arbitrary bytes.
inline std::optional<int> parse_score(std::string_view raw) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  std::size_t i = 0;
  const std::size_t n = raw.size();
  while (i < n && is_ws(raw[i])) ++i;

  static constexpr std::string_view kLabel = "score";
  if (n - i >= kLabel.size()) {
    bool match = true;
    for (std::size_t k = 0; k < kLabel.size(); ++k) {
      if (std::tolower(static_cast<unsigned char>(raw[i + k])) != kLabel[k]) {
        match = false;
        break;
      }
    }
    if (match) {
      i += kLabel.size();
      while (i < n && is_ws(raw[i])) ++i;
      if (i < n && raw[i] == ':') ++i;
      while (i < n && is_ws(raw[i])) ++i;
    }
  }

  if (i >= n || !is_digit(raw[i])) return std::nullopt;
  int value = 0;
  bool overflow = false;
  while (i < n && is_digit(raw[i])) {
    value = value * 10 + (raw[i] - '0');
    if (value > 100) overflow = true, value = 101;
    ++i;
  }
  int first_frac = 0;
  bool nonzero_frac = false;
  if (i + 1 < n && raw[i] == '.' && is_digit(raw[i + 1])) {
    ++i;
    first_frac = raw[i] - '0';
    while (i < n && is_digit(raw[i])) {
      if (raw[i] != '0') nonzero_frac = true;
      ++i;
    }
  }
  while (i < n && (is_ws(raw[i]) || raw[i] == '.' || raw[i] == ',' || raw[i] == ';' || raw[i] == '!')) ++i;
  if (i != n) return std::nullopt;
  if (overflow || value > 100 || (value == 100 && nonzero_frac)) return std::nullopt;
  return first_frac >= 5 ? value + 1 : value;
}

}  // namespace bipolar
