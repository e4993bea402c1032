#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bnls/config.hpp"
#include "bnls/functionals.hpp"

namespace bnls {

inline constexpr const char* kObservablesHeader = "t,mass,energy,K_mu,L_alpha2,deltaL2,gradL2,M_phiR";

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline void write_observables_csv(std::ostream& out, const std::vector<Observables>& obs) {
  out << kObservablesHeader << '\n';
  for (const auto& o : obs) {
    out << format_double(o.t) << ',' << format_double(o.mass) << ',' << format_double(o.energy) << ','
        << format_double(o.K_mu) << ',' << format_double(o.L_alpha2) << ',' << format_double(o.deltaL2) << ','
        << format_double(o.gradL2) << ',' << format_double(o.M_phiR) << '\n';
  }
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        cell += '"';
        ++k;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty input");
  t.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_csv_line(line);
    if (row.size() != t.header.size()) throw ConfigError("csv: row width does not match the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline std::vector<Observables> read_observables_csv(std::istream& in) {
  const auto t = read_csv(in);
  std::ostringstream h;
  for (std::size_t k = 0; k < t.header.size(); ++k) h << (k ? "," : "") << t.header[k];
  if (h.str() != kObservablesHeader) throw ConfigError("csv: unexpected observables header");
  std::vector<Observables> out;
  for (const auto& r : t.rows) {
    Observables o;
    double* dst[] = {&o.t, &o.mass, &o.energy, &o.K_mu, &o.L_alpha2, &o.deltaL2, &o.gradL2, &o.M_phiR};
    for (std::size_t k = 0; k < 8; ++k) *dst[k] = detail::parse_double(t.header[k], r[k]);
    out.push_back(o);
  }
  return out;
}

}  // namespace bnls
