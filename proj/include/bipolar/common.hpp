#pragma once

#include <charconv>
#include <cstdio>
#include <chrono>
#include <ctime>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bipolar {

inline constexpr std::string_view kToolVersion = "0.1.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Carries every violated invariant, each prefixed with its field path.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "\n";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

// Raised when a metric's precondition does not hold (empty cell, too few models).
class MetricError : public Error {
 public:
  using Error::Error;
};

enum class Polarity { positive, negative };
enum class Role { subject, object };
enum class Frame { past, present, future };

inline constexpr Polarity kPolarities[] = {Polarity::positive, Polarity::negative};

inline std::string_view to_string(Polarity p) {
  return p == Polarity::positive ? "positive" : "negative";
}

inline std::string_view to_string(Role r) {
  return r == Role::subject ? "subject" : "object";
}

inline std::string_view to_string(Frame f) {
  switch (f) {
    case Frame::past: return "past";
    case Frame::present: return "present";
    case Frame::future: return "future";
  }
  return "present";
}

inline std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "positive" || s == "pos") return Polarity::positive;
  if (s == "negative" || s == "neg") return Polarity::negative;
  return std::nullopt;
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "subject") return Role::subject;
  if (s == "object") return Role::object;
  return std::nullopt;
}

inline std::optional<Frame> parse_frame(std::string_view s) {
  if (s == "past") return Frame::past;
  if (s == "present") return Frame::present;
  if (s == "future") return Frame::future;
  return std::nullopt;
}

// Shortest decimal text that round-trips to the same double.
inline std::string format_double(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  if (s == "-0.00") s = "0.00";
  return s;
}

inline std::string utc_now_iso8601() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) pos = s.size();
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

// Comma-separated list with blanks dropped ("a, b,,c" -> {a,b,c}).
inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  for (auto& item : split(s, ',')) {
    auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace bipolar
