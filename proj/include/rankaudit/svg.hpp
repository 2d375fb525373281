/*
 * Copyright 2026 The rankaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Minimal static SVG charts: point-and-interval panels and binned scatters.

#ifndef RANKAUDIT_SVG_HPP_
#define RANKAUDIT_SVG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace rankaudit::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return kColors[i % 6];
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // Pads the range by 5% each side and guards against empty/flat ranges.
  Range padded() const {
    Range r = *this;
    if (!(r.lo <= r.hi)) return {-1.0, 1.0};
    if (r.hi - r.lo < 1e-12) {
      r.lo -= 0.5;
      r.hi += 0.5;
    }
    const double pad = 0.05 * (r.hi - r.lo);
    return {r.lo - pad, r.hi + pad};
  }
};

// A rectangular plotting area inside the document.
struct Panel {
  double left, top, width, height;
  Range x, y;

  double px(double v) const { return left + (v - x.lo) / (x.hi - x.lo) * width; }
  double py(double v) const { return top + height - (v - y.lo) / (y.hi - y.lo) * height; }
};

class Document {
 public:
  Document(double width, double height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0, const std::string& dash = "") {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\""
          << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(stroke_width) << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << "/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r) << "\" fill=\""
          << fill << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& stroke) {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w) << "\" height=\""
          << num(h) << "\" fill=\"none\" stroke=\"" << stroke << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, const std::string& anchor = "middle",
            double size = 11.0) {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << num(size)
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s)
          << "</text>\n";
  }

  // Frame, zero line (when in range) and min/max tick labels.
  void axes(const Panel& p, const std::string& title, const std::string& xlabel,
            const std::string& ylabel) {
    rect(p.left, p.top, p.width, p.height, "#444");
    if (p.y.lo < 0.0 && p.y.hi > 0.0) {
      line(p.left, p.py(0.0), p.left + p.width, p.py(0.0), "#888", 1.0, "4,3");
    }
    text(p.left + p.width / 2, p.top - 8, title, "middle", 13.0);
    text(p.left + p.width / 2, p.top + p.height + 32, xlabel);
    text(p.left - 44, p.top + p.height / 2, ylabel, "middle");
    text(p.left - 4, p.py(p.y.hi) + 4, num(p.y.hi), "end", 9.0);
    text(p.left - 4, p.py(p.y.lo) + 4, num(p.y.lo), "end", 9.0);
    text(p.px(p.x.lo), p.top + p.height + 14, num(p.x.lo), "middle", 9.0);
    text(p.px(p.x.hi), p.top + p.height + 14, num(p.x.hi), "middle", 9.0);
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\""
        << num(height_) << "\" viewBox=\"0 0 " << num(width_) << " " << num(height_) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double width_;
  double height_;
  std::ostringstream body_;
};

}  // namespace rankaudit::svg

#endif  // RANKAUDIT_SVG_HPP_
