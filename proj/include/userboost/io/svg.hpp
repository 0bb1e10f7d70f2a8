#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace userboost::svg {

struct Series {
  std::string name;
  std::vector<double> x, y;
};

inline constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                        "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

// Plot frame with linear axes; maps data coordinates to pixels.
class Canvas {
 public:
  Canvas(const std::string& title, const std::string& xlabel, const std::string& ylabel, Range xr, Range yr,
         int width = 640, int height = 420)
      : xr_(xr), yr_(yr), w_(width), h_(height) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
         << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out_ << "<text x=\"" << w_ / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    out_ << "<text x=\"" << (kLeft + w_ - kRight) / 2 << "\" y=\"" << h_ - 8 << "\" text-anchor=\"middle\">"
         << escape(xlabel) << "</text>\n";
    out_ << "<text transform=\"translate(16," << (kTop + h_ - kBottom) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
         << escape(ylabel) << "</text>\n";
    out_ << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << w_ - kLeft - kRight << "\" height=\""
         << h_ - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = xr_.lo + (xr_.hi - xr_.lo) * i / 4.0;
      const double fy = yr_.lo + (yr_.hi - yr_.lo) * i / 4.0;
      out_ << "<text x=\"" << num(px(fx)) << "\" y=\"" << h_ - kBottom + 16 << "\" text-anchor=\"middle\">"
           << tick(fx) << "</text>\n";
      out_ << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(fy) + 4) << "\" text-anchor=\"end\">" << tick(fy)
           << "</text>\n";
      out_ << "<line x1=\"" << kLeft << "\" x2=\"" << w_ - kRight << "\" y1=\"" << num(py(fy)) << "\" y2=\""
           << num(py(fy)) << "\" stroke=\"#ddd\"/>\n";
    }
  }

  double px(double x) const { return kLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) * (w_ - kLeft - kRight); }
  double py(double y) const { return h_ - kBottom - (y - yr_.lo) / (yr_.hi - yr_.lo) * (h_ - kTop - kBottom); }
  int plot_bottom() const { return h_ - kBottom; }
  std::ostringstream& raw() { return out_; }

  void legend(const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const int y = kTop + 14 + 16 * static_cast<int>(i);
      out_ << "<rect x=\"" << w_ - kRight + 8 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
           << kPalette[i % kPalette.size()] << "\"/>\n";
      out_ << "<text x=\"" << w_ - kRight + 22 << "\" y=\"" << y << "\">" << escape(names[i]) << "</text>\n";
    }
  }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

  static constexpr int kLeft = 60, kRight = 150, kTop = 34, kBottom = 40;

 private:
  static std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
  }
  Range xr_, yr_;
  int w_, h_;
  std::ostringstream out_;
};

inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series, bool markers = true) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(title, xlabel, ylabel, xr, yr);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % kPalette.size()];
    names.push_back(s.name);
    std::string pts;
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
      pts += num(c.px(s.x[k])) + "," + num(c.py(s.y[k])) + " ";
      if (markers) {
        c.raw() << "<circle cx=\"" << num(c.px(s.x[k])) << "\" cy=\"" << num(c.py(s.y[k])) << "\" r=\"2.5\" fill=\""
                << colour << "\"/>\n";
      }
    }
    c.raw() << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"" << pts << "\"/>\n";
  }
  c.legend(names);
  return c.finish();
}

// Grouped bars: one group per category, one bar per series (x is ignored).
inline std::string bar_chart(const std::string& title, const std::string& ylabel,
                             const std::vector<std::string>& categories, const std::vector<Series>& series) {
  Range xr{0, static_cast<double>(std::max<std::size_t>(categories.size(), 1))}, yr{0, 0};
  for (const auto& s : series) {
    for (double v : s.y) yr.add(v);
  }
  yr.lo = std::min(yr.lo, 0.0);
  yr.finish();
  Canvas c(title, "", ylabel, xr, yr);
  const double group = c.px(1) - c.px(0);
  const double bar = 0.8 * group / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  std::vector<std::string> names;
  for (std::size_t i = 0; i < series.size(); ++i) {
    names.push_back(series[i].name);
    for (std::size_t k = 0; k < std::min(categories.size(), series[i].y.size()); ++k) {
      const double v = series[i].y[k];
      if (!std::isfinite(v)) continue;
      const double x = c.px(static_cast<double>(k)) + 0.1 * group + bar * static_cast<double>(i);
      const double top = c.py(std::max(v, 0.0)), base = c.py(std::min(v, 0.0));
      c.raw() << "<rect x=\"" << num(x) << "\" y=\"" << num(top) << "\" width=\"" << num(bar) << "\" height=\""
              << num(base - top) << "\" fill=\"" << kPalette[i % kPalette.size()] << "\"/>\n";
    }
  }
  for (std::size_t k = 0; k < categories.size(); ++k) {
    c.raw() << "<text x=\"" << num(c.px(static_cast<double>(k) + 0.5)) << "\" y=\"" << c.plot_bottom() + 30
            << "\" text-anchor=\"middle\">" << escape(categories[k]) << "</text>\n";
  }
  c.legend(names);
  return c.finish();
}

inline std::string scatter(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<Series>& groups) {
  Range xr, yr;
  for (const auto& s : groups) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(title, xlabel, ylabel, xr, yr);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    names.push_back(groups[i].name);
    for (std::size_t k = 0; k < std::min(groups[i].x.size(), groups[i].y.size()); ++k) {
      if (!std::isfinite(groups[i].x[k]) || !std::isfinite(groups[i].y[k])) continue;
      c.raw() << "<circle cx=\"" << num(c.px(groups[i].x[k])) << "\" cy=\"" << num(c.py(groups[i].y[k]))
              << "\" r=\"3\" fill-opacity=\"0.7\" fill=\"" << kPalette[i % kPalette.size()] << "\"/>\n";
    }
  }
  c.legend(names);
  return c.finish();
}

}  // namespace userboost::svg
