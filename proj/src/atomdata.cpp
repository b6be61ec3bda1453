#include "rydchiral/atomdata.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "rydchiral/errors.hpp"

namespace rydchiral {

namespace {

constexpr const char* kHeader = "n,C6_GHz_um6,gamma_per_us,source";

double c6_scale() { return 1e9 / kLinewidthHz / std::pow(kWavelengthUm, 6); }
double gamma_scale() { return 1e6 / (2.0 * std::numbers::pi * kLinewidthHz); }

[[noreturn]] void schema_error(const std::string& origin, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << origin << ": line " << line << ": " << what;
  throw ConfigError(os.str());
}

template <class T>
T parse_number(const std::string& s, const std::string& origin, std::size_t line, const char* field) {
  T v{};
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) schema_error(origin, line, std::string("invalid ") + field + " '" + s + "'");
  return v;
}

}  // namespace

double c6_to_natural(double c6_ghz_um6) { return c6_ghz_um6 * c6_scale(); }
double c6_to_physical(double c6_natural) { return c6_natural / c6_scale(); }
double gamma_to_natural(double gamma_per_us) { return gamma_per_us * gamma_scale(); }
double gamma_to_physical(double gamma_natural) { return gamma_natural / gamma_scale(); }

StateTable parse_states(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) schema_error(origin, 1, "empty table");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) schema_error(origin, line_no, std::string("expected header '") + kHeader + "'");

  StateTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string field[4];
    std::size_t pos = 0;
    for (int f = 0; f < 3; ++f) {
      const std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) schema_error(origin, line_no, "expected 4 fields");
      field[f] = line.substr(pos, comma - pos);
      pos = comma + 1;
    }
    field[3] = line.substr(pos);
    RydbergState s;
    s.n = parse_number<int>(field[0], origin, line_no, "n");
    const double c6 = parse_number<double>(field[1], origin, line_no, "C6_GHz_um6");
    const double gam = parse_number<double>(field[2], origin, line_no, "gamma_per_us");
    s.source = field[3];
    if (s.n < 1) schema_error(origin, line_no, "n must be positive");
    if (!(c6 > 0.0) || !std::isfinite(c6)) schema_error(origin, line_no, "C6 must be positive for nS states");
    if (!(gam > 0.0) || !std::isfinite(gam)) schema_error(origin, line_no, "gamma must be positive");
    s.C6_GHz_um6 = c6;
    s.gamma_per_us = gam;
    s.C6 = c6_to_natural(c6);
    s.gamma = gamma_to_natural(gam);
    if (!table.rows.empty()) {
      const RydbergState& prev = table.rows.back();
      if (s.n <= prev.n) schema_error(origin, line_no, "n must be strictly increasing");
      if (!(s.gamma < prev.gamma)) {
        std::ostringstream os;
        os << "gamma not decreasing in n at row " << table.rows.size() << " (n = " << s.n << ")";
        schema_error(origin, line_no, os.str());
      }
    }
    table.rows.push_back(std::move(s));
  }
  if (table.rows.empty()) schema_error(origin, line_no, "table has no rows");
  return table;
}

StateTable load_states(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open atom table " + path.string());
  return parse_states(in, path.string());
}

void write_states(std::ostream& out, const StateTable& table) {
  out << kHeader << '\n';
  char buf[64];
  for (const RydbergState& s : table.rows) {
    out << s.n << ',';
    std::snprintf(buf, sizeof buf, "%.17g", s.C6_GHz_um6);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", s.gamma_per_us);
    out << buf << ',' << s.source << '\n';
  }
}

std::filesystem::path default_states_path() {
#ifdef RYDCHIRAL_DATA_DIR
  return std::filesystem::path(RYDCHIRAL_DATA_DIR) / "rb_ns_states.csv";
#else
  return std::filesystem::path("data") / "rb_ns_states.csv";
#endif
}

StateTable load_default_states() { return load_states(default_states_path()); }

RydbergState interpolate_state(const StateTable& table, int n) {
  if (table.rows.empty()) throw ConfigError("interpolate_state: empty table");
  if (n < table.min_n() || n > table.max_n()) {
    std::ostringstream os;
    os << "interpolate_state: n = " << n << " outside the table hull [" << table.min_n() << ", " << table.max_n()
       << "]";
    throw ConfigError(os.str());
  }
  std::size_t hi = 0;
  while (table.rows[hi].n < n) ++hi;
  if (table.rows[hi].n == n) return table.rows[hi];
  const RydbergState& a = table.rows[hi - 1];
  const RydbergState& b = table.rows[hi];
  const double f = std::log(static_cast<double>(n) / a.n) / std::log(static_cast<double>(b.n) / a.n);
  RydbergState s;
  s.n = n;
  s.C6 = std::exp(std::log(a.C6) + f * std::log(b.C6 / a.C6));
  s.gamma = std::exp(std::log(a.gamma) + f * std::log(b.gamma / a.gamma));
  s.C6_GHz_um6 = c6_to_physical(s.C6);
  s.gamma_per_us = gamma_to_physical(s.gamma);
  s.source = "log-log interpolation between n = " + std::to_string(a.n) + " and n = " + std::to_string(b.n);
  return s;
}

}  // namespace rydchiral
