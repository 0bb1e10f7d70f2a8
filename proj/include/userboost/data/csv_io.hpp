#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "userboost/data/gesture.hpp"
#include "userboost/data/ingest.hpp"

namespace userboost {

namespace csv {

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double to_double(std::string_view s, std::size_t line_no) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw DataError("line " + std::to_string(line_no) + ": '" + tmp + "' is not a number");
  }
  return v;
}

inline long to_long(std::string_view s, std::size_t line_no) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("line " + std::to_string(line_no) + ": '" + std::string(s) +
                    "' is not an integer");
  }
  return v;
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace csv

inline constexpr std::string_view kCanonicalHeader =
    "user_id,terminal_id,label,order_index,t,ax,ay,az,gx,gy,gz";

// One row per timestep; t relative to contact, -4.00 <= t < 0.00.
inline void write_canonical_csv(std::ostream& os, std::span<const GestureWindow> windows,
                                bool with_synthetic_column = false) {
  os << kCanonicalHeader << (with_synthetic_column ? ",synthetic\n" : "\n");
  char tbuf[32];
  for (const auto& w : windows) {
    for (std::size_t k = 0; k < w.values.rows(); ++k) {
      const double t = -kWindowSeconds + static_cast<double>(k) * kSamplePeriod;
      std::snprintf(tbuf, sizeof(tbuf), "%.2f", t);
      os << w.user_id << ',' << (w.terminal_id ? std::to_string(*w.terminal_id) : "") << ','
         << to_string(w.label) << ',' << w.order_index << ',' << tbuf;
      for (std::size_t c = 0; c < w.values.cols(); ++c) os << ',' << csv::format_double(w.values(k, c));
      if (with_synthetic_column) os << ',' << (w.synthetic ? 1 : 0);
      os << '\n';
    }
  }
}

inline std::vector<GestureWindow> read_canonical_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("canonical CSV: empty input");
  line = csv::strip_cr(line);
  bool has_synthetic = false;
  if (line == std::string(kCanonicalHeader) + ",synthetic") {
    has_synthetic = true;
  } else if (line != kCanonicalHeader) {
    throw DataError("canonical CSV: unexpected header '" + line + "'");
  }
  const std::size_t n_fields = has_synthetic ? 12 : 11;

  std::vector<GestureWindow> out;
  std::vector<std::vector<double>> rows;
  GestureWindow current;
  bool open = false;
  std::size_t line_no = 1;

  auto flush = [&]() {
    if (!open) return;
    if (rows.size() != kWindowLength) {
      throw DataError("canonical CSV: window (user " + std::to_string(current.user_id) +
                      ", order " + std::to_string(current.order_index) + ") has " +
                      std::to_string(rows.size()) + " rows, expected 200");
    }
    for (std::size_t k = 0; k < kWindowLength; ++k) {
      for (std::size_t c = 0; c < kChannels; ++c) current.values(k, c) = rows[k][c];
    }
    validate_window(current);
    out.push_back(current);
    rows.clear();
    open = false;
  };

  while (std::getline(is, line)) {
    ++line_no;
    line = csv::strip_cr(line);
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != n_fields) {
      throw DataError("canonical CSV line " + std::to_string(line_no) + ": expected " +
                      std::to_string(n_fields) + " fields, got " + std::to_string(f.size()));
    }
    const int user = static_cast<int>(csv::to_long(f[0], line_no));
    const std::optional<int> terminal =
        f[1].empty() ? std::nullopt : std::optional<int>(static_cast<int>(csv::to_long(f[1], line_no)));
    const Label label = parse_label(f[2]);
    const int order = static_cast<int>(csv::to_long(f[3], line_no));
    const bool synthetic = has_synthetic && csv::to_long(f[11], line_no) != 0;

    const bool same = open && current.user_id == user && current.label == label &&
                      current.order_index == order && current.terminal_id == terminal;
    if (!same) {
      flush();
      current = GestureWindow{};
      current.user_id = user;
      current.terminal_id = terminal;
      current.label = label;
      current.order_index = order;
      current.synthetic = synthetic;
      open = true;
    }
    std::vector<double> vals(kChannels);
    for (std::size_t c = 0; c < kChannels; ++c) vals[c] = csv::to_double(f[5 + c], line_no);
    rows.push_back(std::move(vals));
  }
  flush();
  return out;
}

inline constexpr std::string_view kRawHeader = "user_id,terminal_id,label,gesture_id,t,sensor,x,y,z";

// Adapter format for raw per-sensor recordings.
inline std::vector<RawRow> read_raw_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("raw CSV: empty input");
  if (csv::strip_cr(line) != kRawHeader) {
    throw DataError("raw CSV: expected header '" + std::string(kRawHeader) + "'");
  }
  std::vector<RawRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    line = csv::strip_cr(line);
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 9) throw DataError("raw CSV line " + std::to_string(line_no) + ": expected 9 fields");
    RawRow r;
    r.user_id = static_cast<int>(csv::to_long(f[0], line_no));
    if (!f[1].empty()) r.terminal_id = static_cast<int>(csv::to_long(f[1], line_no));
    r.label = parse_label(f[2]);
    r.gesture_id = csv::to_long(f[3], line_no);
    r.t = csv::to_double(f[4], line_no);
    r.sensor = parse_sensor(f[5]);
    r.x = csv::to_double(f[6], line_no);
    r.y = csv::to_double(f[7], line_no);
    r.z = csv::to_double(f[8], line_no);
    rows.push_back(r);
  }
  return rows;
}

inline void write_raw_csv(std::ostream& os, std::span<const RawRow> rows) {
  os << kRawHeader << '\n';
  for (const auto& r : rows) {
    os << r.user_id << ',' << (r.terminal_id ? std::to_string(*r.terminal_id) : "") << ','
       << to_string(r.label) << ',' << r.gesture_id << ',' << csv::format_double(r.t) << ','
       << to_string(r.sensor) << ',' << csv::format_double(r.x) << ',' << csv::format_double(r.y)
       << ',' << csv::format_double(r.z) << '\n';
  }
}

inline std::vector<GestureWindow> load_canonical_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_canonical_csv(in);
}

inline void save_canonical_csv(const std::string& path, std::span<const GestureWindow> windows,
                               bool with_synthetic_column = false) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  write_canonical_csv(out, windows, with_synthetic_column);
}

}  // namespace userboost
