#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "bipolar/common.hpp"

namespace bipolar::svg {

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) { return format_fixed2(v); }

// Human label: at most 2 decimals, trailing zeros dropped ("10", "-7.5", "0.83").
inline std::string label(double v) {
  std::string s = format_fixed2(v);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

struct Rgb {
  int r, g, b;

  std::string hex() const {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
  }
};

inline Rgb lerp(Rgb a, Rgb b, double t) {
  auto mix = [t](int x, int y) { return static_cast<int>(std::lround(x + (y - x) * t)); };
  return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Red for the first entity, blue for the second. The two ends are mirror
// images around the midpoint, so equal |bias| gives equally strong colours.
inline constexpr Rgb kEntityA{214, 96, 77};
inline constexpr Rgb kEntityB{77, 96, 214};
inline constexpr Rgb kMid{247, 247, 247};
inline constexpr Rgb kBaseline{31, 119, 180};

inline constexpr std::string_view kModelColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                                    "#e6ab02", "#a6761d", "#666666", "#17becf", "#bcbd22"};

// Builds a standalone document with a viewBox; every number is fixed 2-dp.
class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  Document& raw(std::string_view s) {
    body_ += s;
    body_ += '\n';
    return *this;
  }

  Document& line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1,
                 std::string_view extra = {}) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"";
    if (!extra.empty()) body_ += " " + std::string(extra);
    body_ += "/>\n";
    return *this;
  }

  Document& rect(double x, double y, double w, double h, std::string_view fill, std::string_view extra = {}) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
             "\" fill=\"" + std::string(fill) + "\"";
    if (!extra.empty()) body_ += " " + std::string(extra);
    body_ += "/>\n";
    return *this;
  }

  Document& text(double x, double y, std::string_view content, std::string_view anchor = "start",
                 double size = 12, std::string_view extra = {}) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" text-anchor=\"" + std::string(anchor) + "\"";
    if (!extra.empty()) body_ += " " + std::string(extra);
    body_ += ">" + escape(content) + "</text>\n";
    return *this;
  }

  std::string str() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           num(width_) + "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) +
           "\" font-family=\"sans-serif\">\n<rect x=\"0\" y=\"0\" width=\"" + num(width_) + "\" height=\"" +
           num(height_) + "\" fill=\"#ffffff\"/>\n" + body_ + "</svg>\n";
  }

 private:
  double width_;
  double height_;
  std::string body_;
};

// Marker outline for category index i: a circle, then regular polygons and
// stars with growing vertex counts, so every category gets its own shape.
inline std::string marker(std::size_t i, double cx, double cy, double r, std::string_view fill,
                          std::string_view attrs) {
  const std::string a = attrs.empty() ? std::string() : " " + std::string(attrs);
  if (i == 0)
    return "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
           std::string(fill) + "\" stroke=\"#000000\" stroke-width=\"0.50\"" + a + "/>";
  const std::size_t k = i - 1;
  const bool star = (k / 6) % 2 == 1;
  const int sides = 3 + static_cast<int>(k % 6) + static_cast<int>(k / 12);
  std::string pts;
  const int verts = star ? sides * 2 : sides;
  for (int v = 0; v < verts; ++v) {
    const double ang = -M_PI / 2 + 2 * M_PI * v / verts;
    const double rr = star && v % 2 == 1 ? r * 0.45 : r;
    if (!pts.empty()) pts += ' ';
    pts += num(cx + rr * std::cos(ang)) + "," + num(cy + rr * std::sin(ang));
  }
  return "<polygon points=\"" + pts + "\" fill=\"" + std::string(fill) +
         "\" stroke=\"#000000\" stroke-width=\"0.50\"" + a + "/>";
}

}  // namespace bipolar::svg
