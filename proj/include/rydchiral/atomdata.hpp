#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace rydchiral {

// Rb D2 line: Gamma = 2 pi 6.07 MHz, lambda = 780 nm.
inline constexpr double kLinewidthHz = 6.07e6;
inline constexpr double kWavelengthUm = 0.78;

double c6_to_natural(double c6_ghz_um6);        // -> Gamma lambda^6
double c6_to_physical(double c6_natural);       // -> GHz um^6
double gamma_to_natural(double gamma_per_us);   // -> Gamma
double gamma_to_physical(double gamma_natural); // -> 1/us

struct RydbergState {
  int n = 0;
  double C6 = 0.0;     // Gamma lambda^6
  double gamma = 0.0;  // Gamma
  double C6_GHz_um6 = 0.0;    // as tabulated
  double gamma_per_us = 0.0;  // as tabulated
  std::string source;
};

struct StateTable {
  std::vector<RydbergState> rows;

  int min_n() const { return rows.front().n; }
  int max_n() const { return rows.back().n; }
};

// CSV with header n,C6_GHz_um6,gamma_per_us,source. Rows must be strictly
// increasing in n with C6 > 0 and gamma strictly decreasing.
StateTable parse_states(std::istream& in, const std::string& origin = "<stream>");
StateTable load_states(const std::filesystem::path& path);
void write_states(std::ostream& out, const StateTable& table);

std::filesystem::path default_states_path();
StateTable load_default_states();

// Exact row or log-log interpolation between the bracketing rows.
RydbergState interpolate_state(const StateTable& table, int n);

}  // namespace rydchiral
