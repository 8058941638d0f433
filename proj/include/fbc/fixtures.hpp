#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbc/cglmp.hpp"
#include "fbc/detection.hpp"
#include "fbc/tomography.hpp"

namespace fbc {

struct ParseError : std::runtime_error {
  int line = 0;
  int column = 0;
  ParseError(const std::string& msg, int l, int c)
      : std::runtime_error(msg + " (line " + std::to_string(l) + ", column " +
                           std::to_string(c) + ")"),
        line(l),
        column(c) {}
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  return out;
}

inline bool is_dash(const std::string& s) { return s == "-"; }

inline double parse_number(const std::string& s, int line, int col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw ParseError("expected a number, got '" + s + "'", line, col);
  }
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fixture file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline Setting parse_setting(const std::string& s, int line, int col) {
  if (s == "1") return Setting::One;
  if (s == "2") return Setting::Two;
  if (s == "+") return Setting::Plus;
  if (s == "L") return Setting::L;
  throw ParseError("unknown setting '" + s + "'", line, col);
}

}  // namespace detail

// Table-1 fixture: header then 16 rows
//   nu, signal, idler, c(0,0), c(0,pi/2), c(pi/2,0), c(pi/2,pi/2)
// with '-' in cells outside the projection's phase configurations.
inline RawProjectionCounts parse_table1_fixture(const std::string& path) {
  const auto lines = detail::read_lines(path);
  const auto projections = build_projection_set();
  RawProjectionCounts raw;
  int seen = 0;
  bool header_skipped = false;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const auto f = detail::split_fields(line);
    const int lno = static_cast<int>(li) + 1;
    if (f.size() != 7) throw ParseError("expected 7 columns", lno, 1);
    const int nu = static_cast<int>(detail::parse_number(f[0], lno, 1));
    if (nu < 1 || nu > 16) throw ParseError("nu out of range 1..16", lno, 1);
    const auto& spec = projections[nu - 1];
    if (detail::parse_setting(f[1], lno, 2) != spec.signal ||
        detail::parse_setting(f[2], lno, 3) != spec.idler)
      throw ParseError("settings do not match the protocol for nu=" + f[0], lno, 2);
    // cell columns in config order (0,0),(0,pi/2),(pi/2,0),(pi/2,pi/2)
    static const int cell_to_config[4] = {0, 1, 2, 3};
    std::vector<bool> required(4, false);
    for (const auto& [ps, pi_] : spec.phase_configs)
      required[config_index(ps, pi_)] = true;
    for (int cell = 0; cell < 4; ++cell) {
      const std::string& field = f[3 + cell];
      const int col = 4 + cell;
      if (detail::is_dash(field)) {
        if (required[cell])
          throw ParseError("dash in a required cell for nu=" + f[0], lno, col);
        continue;
      }
      if (!required[cell])
        throw ParseError("count present in a dash cell for nu=" + f[0], lno, col);
      const double v = detail::parse_number(field, lno, col);
      if (v < 0.0) throw ParseError("negative count", lno, col);
      raw[{nu, cell_to_config[cell]}] = v;
    }
    ++seen;
  }
  if (seen != 16)
    throw std::runtime_error("table1 fixture must contain exactly 16 rows, got " +
                             std::to_string(seen));
  return raw;
}

// Table-2 fixture: header then ten rows
//   term, x, y, a, b, phi_s, phi_i, counts, std
// where the two reference rows are labeled P_max / P_min with '-' for x, y.
inline CGLMPCounts parse_table2_fixture(const std::string& path, int repeats = 3) {
  const auto lines = detail::read_lines(path);
  CGLMPCounts out;
  out.repeats = repeats;
  std::array<double, 8> stds{};
  std::array<bool, 8> have_term{};
  bool have_max = false, have_min = false, header_skipped = false;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const auto f = detail::split_fields(line);
    const int lno = static_cast<int>(li) + 1;
    if (f.size() != 9) throw ParseError("expected 9 columns", lno, 1);
    const double counts = detail::parse_number(f[7], lno, 8);
    const double std_dev = detail::parse_number(f[8], lno, 9);
    if (counts < 0.0) throw ParseError("negative count", lno, 8);
    if (f[0] == "P_max") {
      out.n_max = counts;
      out.std_max = std_dev;
      have_max = true;
      continue;
    }
    if (f[0] == "P_min") {
      out.n_min = counts;
      out.std_min = std_dev;
      have_min = true;
      continue;
    }
    int idx = -1;
    for (std::size_t t = 0; t < cglmp_terms().size(); ++t)
      if (cglmp_terms()[t].label == f[0]) idx = static_cast<int>(t);
    if (idx < 0) throw ParseError("unknown term label '" + f[0] + "'", lno, 1);
    const auto& term = cglmp_terms()[idx];
    if (static_cast<int>(detail::parse_number(f[1], lno, 2)) != term.x ||
        static_cast<int>(detail::parse_number(f[2], lno, 3)) != term.y ||
        static_cast<int>(detail::parse_number(f[3], lno, 4)) != term.a ||
        static_cast<int>(detail::parse_number(f[4], lno, 5)) != term.b)
      throw ParseError("x,y,a,b do not match term " + f[0], lno, 2);
    out.counts[idx] = counts;
    stds[idx] = std_dev;
    have_term[idx] = true;
  }
  for (bool h : have_term)
    if (!h) throw std::runtime_error("table2 fixture missing a Bell term row");
  if (!have_max || !have_min)
    throw std::runtime_error("table2 fixture missing P_max/P_min rows");
  out.stds = stds;
  return out;
}

// Coincidence tables: header then rows signal_channel, idler_channel,
// counts, accidentals.
inline CoincidenceTable parse_coincidence_fixture(const std::string& path) {
  const auto lines = detail::read_lines(path);
  CoincidenceTable table;
  bool header_skipped = false;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.empty() || line[0] == '#') continue;
    if (!header_skipped) {
      header_skipped = true;
      continue;
    }
    const auto f = detail::split_fields(line);
    const int lno = static_cast<int>(li) + 1;
    if (f.size() != 4) throw ParseError("expected 4 columns", lno, 1);
    CoincidenceRecord rec;
    rec.signal_channel = f[0];
    rec.idler_channel = f[1];
    rec.counts = detail::parse_number(f[2], lno, 3);
    rec.accidentals = detail::parse_number(f[3], lno, 4);
    if (rec.counts < 0.0) throw ParseError("negative count", lno, 3);
    table.records.push_back(rec);
  }
  return table;
}

inline std::string format_coincidence_table(const CoincidenceTable& table) {
  std::ostringstream out;
  out << "signal_channel, idler_channel, counts, accidentals\n";
  for (const auto& rec : table.records) {
    std::ostringstream row;
    row.precision(12);
    row << rec.signal_channel << ", " << rec.idler_channel << ", " << rec.counts
        << ", " << rec.accidentals << "\n";
    out << row.str();
  }
  return out.str();
}

}  // namespace fbc
