#include "rydchiral/runner.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "rydchiral/atomdata.hpp"
#include "rydchiral/chiral_reference.hpp"
#include "rydchiral/dipole_coupling.hpp"
#include "rydchiral/errors.hpp"
#include "rydchiral/interferometer.hpp"
#include "rydchiral/parallel.hpp"
#include "rydchiral/protocols.hpp"
#include "rydchiral/pulse_dynamics.hpp"
#include "rydchiral/steady_state.hpp"
#include "rydchiral/two_photon.hpp"

namespace rydchiral {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kCommands = {"spectrum", "g2",   "chiral-fit", "pulse",
                                            "store-retrieve", "sort", "ns-gate",    "sweep"};

// ---------------------------------------------------------------- schema

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

std::string join(const std::string& parent, const std::string& key) { return parent.empty() ? key : parent + "." + key; }

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) field_error(path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) field_error(join(path, key), "unknown field");
  }
}

const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::optional<double> opt_number(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_number()) field_error(join(path, key), "expected a number");
  const double d = v->get<double>();
  if (!std::isfinite(d)) field_error(join(path, key), "must be finite");
  return d;
}

double number(const Json& obj, const std::string& path, const char* key, double fallback) {
  return opt_number(obj, path, key).value_or(fallback);
}

double required_number(const Json& obj, const std::string& path, const char* key) {
  auto v = opt_number(obj, path, key);
  if (!v) field_error(join(path, key), "required");
  return *v;
}

std::optional<long long> opt_integer(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_number_integer()) field_error(join(path, key), "expected an integer");
  return v->get<long long>();
}

bool boolean(const Json& obj, const std::string& path, const char* key, bool fallback) {
  const Json* v = find(obj, key);
  if (!v || v->is_null()) return fallback;
  if (!v->is_boolean()) field_error(join(path, key), "expected true or false");
  return v->get<bool>();
}

std::optional<std::string> opt_string(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v || v->is_null()) return std::nullopt;
  if (!v->is_string()) field_error(join(path, key), "expected a string");
  return v->get<std::string>();
}

const Json& block(const Json& doc, const char* key) {
  static const Json empty = Json::object();
  const Json* v = find(doc, key);
  if (!v || v->is_null()) return empty;
  if (!v->is_object()) field_error(key, "expected an object");
  return *v;
}

cplx complex_value(const Json& obj, const std::string& path, const char* key, cplx fallback) {
  const Json* v = find(obj, key);
  if (!v || v->is_null()) return fallback;
  if (v->is_number()) return {v->get<double>(), 0.0};
  if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number())
    return {(*v)[0].get<double>(), (*v)[1].get<double>()};
  field_error(join(path, key), "expected a number or [re, im]");
}

// Grid given as a list or as {min, max, points}.
std::optional<std::vector<double>> opt_grid(const Json& obj, const std::string& path, const char* key) {
  const Json* v = find(obj, key);
  if (!v || v->is_null()) return std::nullopt;
  const std::string p = join(path, key);
  std::vector<double> out;
  if (v->is_array()) {
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) field_error(p + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back((*v)[i].get<double>());
    }
  } else if (v->is_object()) {
    check_keys(*v, p, {"min", "max", "points"});
    const double lo = required_number(*v, p, "min"), hi = required_number(*v, p, "max");
    const auto n = opt_integer(*v, p, "points").value_or(201);
    if (n < 2) field_error(join(p, "points"), "must be at least 2");
    if (!(hi > lo)) field_error(p, "max must exceed min");
    for (long long i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  } else {
    field_error(p, "expected a list of numbers or {min, max, points}");
  }
  if (out.empty()) field_error(p, "empty grid");
  return out;
}

void validate_document(const Json& doc) {
  check_keys(doc, "", {"command", "geometry", "drive", "mode", "interaction", "spectrum", "g2", "chiral", "pulse",
                       "storage", "retrieval", "chain", "input", "sweep", "output", "threads", "deterministic",
                       "atoms"});
  const auto cmd = opt_string(doc, "", "command");
  if (!cmd) field_error("command", "required");
  if (std::find(kCommands.begin(), kCommands.end(), *cmd) == kCommands.end())
    field_error("command", "unknown command '" + *cmd + "'");
  if (!boolean(doc, "", "deterministic", true)) field_error("deterministic", "all computations are deterministic");
  if (auto t = opt_integer(doc, "", "threads"); t && *t < 0) field_error("threads", "must be >= 0");
  check_keys(block(doc, "geometry"), "geometry", {"nside", "a", "rounded", "positions", "file"});
  check_keys(block(doc, "drive"), "drive",
             {"delta_e", "delta_r", "omega", "gamma", "n", "probe_rabi", "raman_resonance"});
  check_keys(block(doc, "mode"), "mode", {"w0", "theta_deg", "polarization"});
  check_keys(block(doc, "interaction"), "interaction", {"kind", "c6", "n", "radius", "sign"});
  check_keys(block(doc, "spectrum"), "spectrum", {"model", "delta_e"});
  check_keys(block(doc, "g2"), "g2", {"model", "delta", "delta_e"});
  check_keys(block(doc, "chiral"), "chiral", {"input", "delta", "points", "width"});
  check_keys(block(doc, "pulse"), "pulse",
             {"shape", "duration", "carrier_detuning", "amplitude", "dt", "t_begin", "t_end", "substeps", "optimize"});
  check_keys(block(doc, "storage"), "storage", {"tau"});
  check_keys(block(doc, "retrieval"), "retrieval", {"omega_max", "rise_time", "residual", "t_max"});
  check_keys(block(doc, "chain"), "chain", {"emitters"});
  check_keys(block(doc, "input"), "input", {"c0", "c1", "c2"});
  check_keys(block(doc, "sweep"), "sweep", {"command", "axis", "values", "axes"});
  check_keys(block(doc, "output"), "output", {"dir"});
}

// ---------------------------------------------------------------- builders

struct Context {
  const Json& doc;
  const StateTable* atoms;
};

ArrayGeometry build_geometry(const Json& doc) {
  const Json& g = block(doc, "geometry");
  if (auto file = opt_string(g, "geometry", "file")) {
    std::ifstream in(*file);
    if (!in) field_error("geometry.file", "cannot open " + *file);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::parse_error& e) {
      field_error("geometry.file", std::string("invalid JSON: ") + e.what());
    }
    return geometry_from_json(j);
  }
  if (find(g, "positions")) return geometry_from_json(g);
  const auto nside = opt_integer(g, "geometry", "nside");
  if (!nside) field_error("geometry.nside", "required");
  if (*nside < 1 || *nside > 101) field_error("geometry.nside", "must lie in [1, 101]");
  const double a = required_number(g, "geometry", "a");
  if (!(a > 0.0)) field_error("geometry.a", "must be positive");
  std::optional<bool> rounded;
  if (find(g, "rounded")) rounded = boolean(g, "geometry", "rounded", true);
  return build_array(static_cast<int>(*nside), a, rounded);
}

double theta_rad(const Json& doc) { return number(block(doc, "mode"), "mode", "theta_deg", 0.0) * kPi / 180.0; }

ModeVector build_mode(const Json& doc, const ArrayGeometry& geom, Direction dir = Direction::forward) {
  const Json& m = block(doc, "mode");
  const double w0 = number(m, "mode", "w0", 3.0);
  if (!(w0 > 0.0)) field_error("mode.w0", "must be positive");
  return gaussian_mode(geom, w0, theta_rad(doc), dir);
}

CVector3 build_polarization(const Json& doc) {
  const std::string p = opt_string(block(doc, "mode"), "mode", "polarization").value_or("auto");
  if (p == "circular") return polarization::circular_in_plane();
  if (p == "linear_x") return polarization::linear_x();
  if (p == "linear_y") return polarization::linear_y();
  if (p == "auto") return theta_rad(doc) == 0.0 ? polarization::circular_in_plane() : polarization::linear_y();
  field_error("mode.polarization", "expected auto, circular, linear_x or linear_y");
}

std::optional<int> rydberg_n(const Json& obj, const std::string& path) {
  auto n = opt_integer(obj, path, "n");
  if (!n) return std::nullopt;
  return static_cast<int>(*n);
}

const StateTable& table(const Context& ctx, const std::string& path) {
  if (!ctx.atoms) field_error(path, "atom table unavailable");
  return *ctx.atoms;
}

// Drive without Delta_e resolution.
DriveParams base_drive(const Context& ctx) {
  const Json& d = block(ctx.doc, "drive");
  DriveParams drive;
  drive.delta_r = number(d, "drive", "delta_r", 0.0);
  drive.omega = number(d, "drive", "omega", 0.0);
  drive.probe_rabi = number(d, "drive", "probe_rabi", 1e-3);
  drive.delta_e = number(d, "drive", "delta_e", 0.0);
  if (drive.omega < 0.0) field_error("drive.omega", "must be >= 0");
  if (!(drive.probe_rabi > 0.0)) field_error("drive.probe_rabi", "must be positive");
  if (auto g = opt_number(d, "drive", "gamma")) {
    if (*g < 0.0) field_error("drive.gamma", "must be >= 0");
    drive.gamma = *g;
  } else if (auto n = rydberg_n(d, "drive")) {
    drive.gamma = interpolate_state(table(ctx, "drive.n"), *n).gamma;
  }
  return drive;
}

// Delta_e explicit or on the Raman resonance of the mode.
DriveParams resolved_drive(const Context& ctx, const CouplingMatrix& coupling, const ModeVector& mode) {
  DriveParams drive = base_drive(ctx);
  const Json& d = block(ctx.doc, "drive");
  const bool raman = boolean(d, "drive", "raman_resonance", false);
  const bool explicit_de = opt_number(d, "drive", "delta_e").has_value();
  if (raman && explicit_de) field_error("drive", "give either delta_e or raman_resonance, not both");
  if (raman) {
    drive.delta_e = raman_resonance_delta_e(drive.delta_r, drive.omega, mode_weighted_parameters(coupling, mode).shift);
  } else if (!explicit_de) {
    field_error("drive.delta_e", "required (or set raman_resonance)");
  }
  return drive;
}

double resolve_c6(const Context& ctx) {
  const Json& in = block(ctx.doc, "interaction");
  if (auto c6 = opt_number(in, "interaction", "c6")) return *c6;
  if (auto n = rydberg_n(in, "interaction")) return interpolate_state(table(ctx, "interaction.n"), *n).C6;
  if (auto n = rydberg_n(block(ctx.doc, "drive"), "drive")) return interpolate_state(table(ctx, "drive.n"), *n).C6;
  field_error("interaction.c6", "required (or give interaction.n / drive.n)");
}

InteractionModel build_interaction(const Context& ctx, const EffectiveParams* eff) {
  const Json& in = block(ctx.doc, "interaction");
  const std::string kind = opt_string(in, "interaction", "kind").value_or("none");
  if (kind == "none") return InteractionModel::none();
  if (kind == "vdw") {
    const double sign = number(in, "interaction", "sign", 1.0);
    if (sign != 1.0 && sign != -1.0) field_error("interaction.sign", "must be +1 or -1");
    return InteractionModel::vdw(resolve_c6(ctx), sign);
  }
  if (kind == "hard") {
    if (auto r = opt_number(in, "interaction", "radius")) return InteractionModel::hard(*r);
    if (!eff) field_error("interaction.radius", "required for this command");
    return InteractionModel::hard(blockade_radius(resolve_c6(ctx), eff->collective_decay));
  }
  field_error("interaction.kind", "expected none, vdw or hard");
}

PulseSpec pulse_shape_block(const Json& doc) {
  const Json& p = block(doc, "pulse");
  PulseSpec pulse;
  try {
    pulse.shape = pulse_shape_from_string(opt_string(p, "pulse", "shape").value_or("gaussian"));
  } catch (const ConfigError&) {
    field_error("pulse.shape", "expected gaussian or square");
  }
  pulse.duration = number(p, "pulse", "duration", 1.0);
  if (!(pulse.duration > 0.0)) field_error("pulse.duration", "must be positive");
  pulse.carrier_detuning = number(p, "pulse", "carrier_detuning", 0.0);
  pulse.amplitude = number(p, "pulse", "amplitude", 1e-3);
  return pulse;
}

EmitterChain build_chain(const Json& doc) {
  const Json& c = block(doc, "chain");
  EmitterChain chain;
  const Json* list = find(c, "emitters");
  if (!list) {
    chain.emitters = {Emitter{}, Emitter{}};
    return chain;
  }
  if (!list->is_array()) field_error("chain.emitters", "expected a list");
  for (std::size_t i = 0; i < list->size(); ++i) {
    const std::string p = "chain.emitters[" + std::to_string(i) + "]";
    check_keys((*list)[i], p, {"Gamma_tilde", "gamma_tilde", "detuning"});
    Emitter e;
    e.Gamma_tilde = number((*list)[i], p, "Gamma_tilde", 1.0);
    e.gamma_tilde = number((*list)[i], p, "gamma_tilde", 0.0);
    e.detuning = number((*list)[i], p, "detuning", 0.0);
    chain.emitters.push_back(e);
  }
  if (chain.emitters.empty() || chain.emitters.size() > 2) field_error("chain.emitters", "one or two emitters");
  return chain;
}

// ---------------------------------------------------------------- output

struct OutFile {
  std::string name;
  std::string content;
};

struct Outcome {
  Json summary = Json::object();
  std::vector<OutFile> files;
};

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_number(r[i]);
    }
    out += '\n';
  }
  return out;
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- commands

Outcome cmd_spectrum(const Context& ctx) {
  const ArrayGeometry geom = build_geometry(ctx.doc);
  const ModeVector mode = build_mode(ctx.doc, geom);
  const CouplingMatrix coupling = coupling_matrix(geom, build_polarization(ctx.doc));
  const DriveParams drive = base_drive(ctx);
  const Json& s = block(ctx.doc, "spectrum");
  const std::string model = opt_string(s, "spectrum", "model").value_or("three_level");
  const CollectiveParams cp = mode_weighted_parameters(coupling, mode);
  std::vector<double> grid =
      opt_grid(s, "spectrum", "delta_e").value_or(default_spectrum_grid(drive, cp.shift, cp.decay));

  std::vector<SpectrumPoint> pts;
  std::string axis;
  if (model == "three_level") {
    pts = spectrum_3level(coupling, mode, drive, grid);
    axis = "delta_e";
  } else if (model == "two_level") {
    pts = spectrum_2level(coupling, mode, drive, grid);
    axis = "delta_bar";
  } else {
    field_error("spectrum.model", "expected three_level or two_level");
  }
  std::vector<std::vector<double>> rows;
  std::size_t best = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    rows.push_back({pts[i].detuning, pts[i].R, pts[i].T, pts[i].L});
    if (pts[i].R > pts[best].R) best = i;
  }
  Outcome o;
  o.summary = {{"model", model},
               {"points", pts.size()},
               {"R_max", pts[best].R},
               {"detuning_at_R_max", pts[best].detuning},
               {"collective_shift", cp.shift},
               {"collective_decay", cp.decay}};
  o.files.push_back({"spectrum.csv", csv({axis, "R", "T", "L"}, rows)});
  o.files.push_back({"spectrum.json", json_text(o.summary)});
  return o;
}

std::size_t pair_parallelism(std::size_t atoms, unsigned threads) {
  const double unknowns = 0.5 * static_cast<double>(atoms) * static_cast<double>(atoms);
  const double bytes = 16.0 * unknowns * unknowns;
  const double budget = 3.0 * 1024 * 1024 * 1024;
  return std::max<std::size_t>(1, std::min<std::size_t>(threads, static_cast<std::size_t>(budget / bytes)));
}

Outcome cmd_g2(const Context& ctx) {
  const ArrayGeometry geom = build_geometry(ctx.doc);
  const ModeVector mode = build_mode(ctx.doc, geom);
  const CouplingMatrix coupling = coupling_matrix(geom, build_polarization(ctx.doc));
  const Json& g = block(ctx.doc, "g2");
  const std::string model = opt_string(g, "g2", "model").value_or("two_level");
  std::vector<std::vector<double>> rows;
  const unsigned threads = static_cast<unsigned>(pair_parallelism(geom.size(), default_threads()));

  if (model == "two_level") {
    const DriveParams drive = resolved_drive(ctx, coupling, mode);
    const EffectiveParams eff = reduce_two_level(drive, coupling, mode);
    const InteractionModel inter = build_interaction(ctx, &eff);
    const double w = 5.0 * (eff.collective_decay + eff.gamma);
    const std::vector<double> delta =
        opt_grid(g, "g2", "delta").value_or(std::vector<double>{});
    std::vector<double> grid = delta;
    if (grid.empty())
      for (int i = 0; i <= 100; ++i) grid.push_back(-w + 2.0 * w * i / 100.0);
    rows.resize(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t i) {
      local_thread_limit() = 1;
      EffectiveParams e = eff;
      e.delta_bar = grid[i] - eff.collective_shift;
      const PairAmplitudes pair = pair_steady_state(geom, e, mode, inter, drive.probe_rabi);
      const G2Triple t = g2_all(pair, mode);
      rows[i] = {e.delta_bar, t.rr, t.tt, t.rt};
    });
  } else if (model == "three_level") {
    DriveParams drive = base_drive(ctx);
    const auto grid = opt_grid(g, "g2", "delta_e");
    if (!grid) field_error("g2.delta_e", "required for the three_level model");
    drive.delta_e = grid->front();
    const EffectiveParams eff = reduce_two_level(drive, coupling, mode);
    const InteractionModel inter = build_interaction(ctx, &eff);
    rows.resize(grid->size());
    parallel_for(grid->size(), threads, [&](std::size_t i) {
      local_thread_limit() = 1;
      DriveParams d = drive;
      d.delta_e = (*grid)[i];
      const PairAmplitudes pair = pair_steady_state_3level(geom, coupling, d, mode, inter);
      const G2Triple t = g2_all(pair, mode);
      rows[i] = {d.delta_e + d.delta_r - d.omega * d.omega / d.delta_e, t.rr, t.tt, t.rt};
    });
  } else {
    field_error("g2.model", "expected two_level or three_level");
  }
  Outcome o;
  o.summary = {{"model", model}, {"points", rows.size()}, {"atoms", geom.size()}};
  o.files.push_back({"g2.csv", csv({"delta_bar", "g2_rr", "g2_tt", "g2_rt"}, rows)});
  return o;
}

std::vector<std::vector<double>> read_two_column_csv(const std::string& path, const char* a, const char* b) {
  std::ifstream in(path);
  if (!in) field_error("chiral.input", "cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != std::string(a) + "," + b) field_error("chiral.input", std::string("expected header ") + a + "," + b);
  std::vector<std::vector<double>> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    double x, y;
    char tail;
    if (std::sscanf(line.c_str(), "%lf,%lf %c", &x, &y, &tail) != 2)
      field_error("chiral.input", path + ": line " + std::to_string(n) + ": expected two numbers");
    rows.push_back({x, y});
  }
  return rows;
}

Json fit_json(const WaveguideFit& f) {
  return {{"gamma_tilde", f.gamma_tilde},
          {"Gamma_tilde", f.Gamma_tilde},
          {"beta", f.beta},
          {"center", f.center},
          {"residual", f.residual}};
}

Outcome cmd_chiral_fit(const Context& ctx) {
  const Json& c = block(ctx.doc, "chiral");
  Outcome o;
  std::vector<double> delta, t;
  std::vector<cplx> amplitude;
  std::optional<EffectiveParams> eff;
  if (auto input = opt_string(c, "chiral", "input")) {
    for (const auto& r : read_two_column_csv(*input, "delta", "T")) {
      delta.push_back(r[0]);
      t.push_back(r[1]);
    }
  } else {
    const ArrayGeometry geom = build_geometry(ctx.doc);
    const ModeVector fwd = build_mode(ctx.doc, geom, Direction::forward);
    const ModeVector bwd = build_mode(ctx.doc, geom, Direction::backward);
    const CouplingMatrix coupling = coupling_matrix(geom, build_polarization(ctx.doc));
    const DriveParams drive = resolved_drive(ctx, coupling, fwd);
    eff = reduce_two_level(drive, coupling, fwd);
    if (auto grid = opt_grid(c, "chiral", "delta")) {
      delta = *grid;
    } else {
      const auto points = opt_integer(c, "chiral", "points").value_or(801);
      if (points < 8) field_error("chiral.points", "must be at least 8");
      double width = number(c, "chiral", "width", 15.0 * (eff->collective_decay + eff->gamma));
      if (!(width > 0.0)) field_error("chiral.width", "must be positive");
      for (long long i = 0; i < points; ++i) delta.push_back(-width + 2.0 * width * i / static_cast<double>(points - 1));
    }
    std::vector<std::vector<double>> rows;
    for (const ChiralPoint& p : two_sided_spectrum(*eff, fwd, bwd, delta)) {
      t.push_back(p.T);
      amplitude.push_back(p.a_amplitude);
      rows.push_back({p.delta, p.T});
    }
    o.files.push_back({"chiral_spectrum.csv", csv({"delta", "T"}, rows)});
  }
  const WaveguideFit fit = amplitude.empty() ? effective_emitter_fit(delta, t) : effective_emitter_fit(delta, amplitude);
  o.summary = fit_json(fit);
  if (eff) {
    o.summary["collective_decay"] = eff->collective_decay;
    o.summary["gamma"] = eff->gamma;
    o.summary["beta_opt"] = beta_opt(eff->collective_decay, eff->gamma);
  }
  o.files.push_back({"chiral_fit.json", json_text(o.summary)});
  return o;
}

Outcome cmd_pulse(const Context& ctx) {
  const ArrayGeometry geom = build_geometry(ctx.doc);
  const ModeVector mode = build_mode(ctx.doc, geom);
  const CouplingMatrix coupling = coupling_matrix(geom, build_polarization(ctx.doc));
  const DriveParams drive = resolved_drive(ctx, coupling, mode);
  const EffectiveParams eff = reduce_two_level(drive, coupling, mode);
  const InteractionModel inter = build_interaction(ctx, &eff);
  const WaveguideFit fit = fit_effective_emitter(eff, mode, build_mode(ctx.doc, geom, Direction::backward));

  const Json& p = block(ctx.doc, "pulse");
  PulseSpec pulse = pulse_shape_block(ctx.doc);
  const double tau = pulse.duration;
  const double width = fit.Gamma_tilde + fit.gamma_tilde;
  const double dt = number(p, "pulse", "dt", std::min(tau, 1.0 / std::max(width, eff.collective_decay)) / 60.0);
  const double t0 = number(p, "pulse", "t_begin", pulse.shape == PulseShape::gaussian ? -6.0 * tau : -tau);
  const double t1 = number(p, "pulse", "t_end", 6.0 * tau + 40.0 / width);
  pulse.grid = make_grid(t0, t1, dt);
  PulseOptions opt;
  opt.substeps = static_cast<int>(opt_integer(p, "pulse", "substeps").value_or(4));

  const TwoPhotonGrid out = propagate_weak_pulse(geom, eff, mode, inter, pulse, opt);
  EmitterChain ref;
  ref.emitters.push_back({fit.Gamma_tilde, fit.gamma_tilde, eff.delta_bar + eff.collective_shift - fit.center});
  const TwoPhotonGrid ideal = chain_scatter(ref, pulse);
  const Infidelity inf = overlap_infidelity(out, ideal);

  Outcome o;
  o.summary = {{"P1", out.P1()},       {"P2", out.P2()},       {"I1", inf.one_photon}, {"I2", inf.two_photon},
               {"gamma_tilde", fit.gamma_tilde}, {"Gamma_tilde", fit.Gamma_tilde}, {"nt", pulse.grid.count},
               {"dt", pulse.grid.dt}, {"t0", pulse.grid.t0}};
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < pulse.grid.count; ++i) {
    const cplx v = out.psi[static_cast<Eigen::Index>(i)];
    rows.push_back({pulse.grid.at(i), v.real(), v.imag()});
  }
  o.files.push_back({"psi.csv", csv({"t", "re_psi", "im_psi"}, rows)});

  static_assert(std::endian::native == std::endian::little);
  std::string bin(sizeof(std::uint64_t) + 2 * sizeof(double), '\0');
  const std::uint64_t nt = pulse.grid.count;
  std::memcpy(bin.data(), &nt, sizeof nt);
  std::memcpy(bin.data() + 8, &pulse.grid.dt, sizeof(double));
  std::memcpy(bin.data() + 16, &pulse.grid.t0, sizeof(double));
  const std::size_t payload = nt * nt * sizeof(cplx);
  const std::size_t header = bin.size();
  bin.resize(header + payload);
  // psi2 is symmetric, so column-major storage equals row-major.
  std::memcpy(bin.data() + header, out.psi2.data(), payload);
  o.files.push_back({"psi2.bin", std::move(bin)});
  o.files.push_back({"pulse.json", json_text(o.summary)});
  return o;
}

Outcome cmd_store_retrieve(const Context& ctx) {
  const ArrayGeometry geom = build_geometry(ctx.doc);
  const ModeVector mode = build_mode(ctx.doc, geom);
  const CouplingMatrix coupling = coupling_matrix(geom, build_polarization(ctx.doc));
  Json doc_copy = ctx.doc;
  DriveParams drive;
  {
    const Json& d = block(ctx.doc, "drive");
    if (!opt_number(d, "drive", "delta_e") && !find(d, "raman_resonance")) doc_copy["drive"]["raman_resonance"] = true;
    drive = resolved_drive(Context{doc_copy, ctx.atoms}, coupling, mode);
  }
  const EffectiveParams eff = reduce_two_level(drive, coupling, mode);
  const double tau = number(block(ctx.doc, "storage"), "storage", "tau", 10.0);
  if (!(tau > 0.0)) field_error("storage.tau", "must be positive");

  PulseSpec pulse;
  pulse.shape = PulseShape::square;
  pulse.duration = tau;
  pulse.amplitude = pi_pulse_amplitude(eff, mode, tau);
  const StorageState stored = pi_pulse_storage(geom, eff, mode, pulse);

  const Json& r = block(ctx.doc, "retrieval");
  const CollectiveParams cp = mode_weighted_parameters(coupling, mode);
  ControlRamp ramp = ControlRamp::readout(cp.shift, cp.decay, number(r, "retrieval", "omega_max", 4.0));
  if (auto rt = opt_number(r, "retrieval", "rise_time")) ramp.rise_time = *rt;
  ramp.gamma = drive.gamma;
  const RetrievalResult ret = eit_retrieval(stored, coupling, ramp, mode, number(r, "retrieval", "residual", 1e-6),
                                            number(r, "retrieval", "t_max", 0.0));

  Outcome o;
  o.summary = {{"P_u_final", stored.P_u}, {"eta", ret.eta},           {"amplitude", pulse.amplitude},
               {"delta_e", drive.delta_e}, {"residual", ret.residual}, {"stored_norm", stored.c.squaredNorm()}};
  std::vector<std::vector<double>> srows, rrows;
  for (std::size_t i = 0; i < stored.times.size(); ++i) srows.push_back({stored.times[i], stored.P_u_history[i]});
  for (std::size_t i = 0; i < ret.times.size(); ++i) rrows.push_back({ret.times[i], ret.emission[i]});
  o.files.push_back({"storage.csv", csv({"t", "P_u"}, srows)});
  o.files.push_back({"retrieval.csv", csv({"t", "|E_out|^2"}, rrows)});
  o.files.push_back({"store_retrieve.json", json_text(o.summary)});
  return o;
}

struct SortSetup {
  EmitterChain chain;
  PulseSpec pulse;
  std::optional<SortingResult> result;
};

SortSetup sort_setup(const Context& ctx) {
  SortSetup s;
  s.chain = build_chain(ctx.doc);
  const Json& p = block(ctx.doc, "pulse");
  s.pulse = pulse_shape_block(ctx.doc);
  const bool optimize = boolean(p, "pulse", "optimize", !find(p, "duration"));
  if (optimize) {
    SortingOptimum opt = optimize_sorting_duration(s.chain, s.pulse.shape);
    s.pulse.duration = opt.tau;
    s.result = std::move(opt.result);
  }
  s.pulse.grid = chain_grid(s.chain, s.pulse.duration);
  return s;
}

Json sorting_json(const SortingResult& r, double tau) {
  return {{"F", r.F},
          {"P", r.P},
          {"overlap_theta_timereversed", r.time_reversal_overlap},
          {"tau", tau},
          {"lambda1", r.lambda1},
          {"orthogonality", r.orthogonality},
          {"delay", r.delay}};
}

Outcome cmd_sort(const Context& ctx) {
  SortSetup s = sort_setup(ctx);
  if (!s.result) s.result = sorting_metrics(chain_scatter(s.chain, s.pulse), s.pulse);
  Outcome o;
  o.summary = sorting_json(*s.result, s.pulse.duration);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < s.pulse.grid.count; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    rows.push_back({s.pulse.grid.at(i), s.result->psi_out[k].real(), s.result->psi_out[k].imag(),
                    s.result->theta_out[k].real(), s.result->theta_out[k].imag()});
  }
  o.files.push_back({"sort_modes.csv", csv({"t", "re_psi_out", "im_psi_out", "re_theta_out", "im_theta_out"}, rows)});
  o.files.push_back({"sort.json", json_text(o.summary)});
  return o;
}

Outcome cmd_ns_gate(const Context& ctx) {
  SortSetup s = sort_setup(ctx);
  const Json& in = block(ctx.doc, "input");
  const double third = 1.0 / std::sqrt(3.0);
  const cplx c0 = complex_value(in, "input", "c0", third);
  const cplx c1 = complex_value(in, "input", "c1", third);
  const cplx c2 = complex_value(in, "input", "c2", third);
  const NsGateResult r = ns_gate_circuit(c0, c1, c2, s.chain, s.pulse);
  Outcome o;
  o.summary = sorting_json(r.sorting, s.pulse.duration);
  o.summary["gate_fidelity"] = r.gate_fidelity;
  o.summary["c0_out"] = {r.c0.real(), r.c0.imag()};
  o.summary["c1_out"] = {r.c1.real(), r.c1.imag()};
  o.summary["c2_out"] = {r.c2.real(), r.c2.imag()};
  o.files.push_back({"ns_gate.json", json_text(o.summary)});
  return o;
}

Outcome dispatch(const std::string& command, const Context& ctx) {
  if (command == "spectrum") return cmd_spectrum(ctx);
  if (command == "g2") return cmd_g2(ctx);
  if (command == "chiral-fit") return cmd_chiral_fit(ctx);
  if (command == "pulse") return cmd_pulse(ctx);
  if (command == "store-retrieve") return cmd_store_retrieve(ctx);
  if (command == "sort") return cmd_sort(ctx);
  if (command == "ns-gate") return cmd_ns_gate(ctx);
  field_error("command", "unknown command '" + command + "'");
}

// ---------------------------------------------------------------- sweep

struct Axis {
  std::string path;
  Json::json_pointer pointer;
  std::vector<double> values;
};

Axis parse_axis(const Json& doc, const Json& a, const std::string& where) {
  Axis axis;
  const auto path = opt_string(a, where, "axis");
  if (!path || path->empty()) field_error(join(where, "axis"), "required");
  axis.path = *path;
  std::string ptr;
  std::stringstream ss(*path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) field_error(join(where, "axis"), "malformed path '" + *path + "'");
    ptr += "/" + part;
  }
  axis.pointer = Json::json_pointer(ptr);
  if (doc.contains(axis.pointer) && !doc.at(axis.pointer).is_number())
    field_error(join(where, "axis"), "'" + *path + "' does not address a scalar field");
  const Json* vals = find(a, "values");
  if (!vals || !vals->is_array()) field_error(join(where, "values"), "expected a list of numbers");
  for (std::size_t i = 0; i < vals->size(); ++i) {
    if (!(*vals)[i].is_number()) field_error(join(where, "values") + "[" + std::to_string(i) + "]", "expected a number");
    axis.values.push_back((*vals)[i].get<double>());
  }
  std::sort(axis.values.begin(), axis.values.end());
  return axis;
}

bool integral_axis(const Axis& a) {
  const std::string& p = a.path;
  return p.ends_with(".n") || p.ends_with(".nside") || p.ends_with(".points") || p.ends_with(".substeps");
}

RunReport run_sweep(const RunConfig& config, const StateTable* atoms, std::vector<OutFile>& files) {
  const Json& doc = config.document;
  const Json& s = block(doc, "sweep");
  const auto inner = opt_string(s, "sweep", "command");
  if (!inner) field_error("sweep.command", "required");
  if (*inner == "sweep") field_error("sweep.command", "sweeps do not nest");
  if (std::find(kCommands.begin(), kCommands.end(), *inner) == kCommands.end())
    field_error("sweep.command", "unknown command '" + *inner + "'");

  std::vector<Axis> axes;
  if (const Json* list = find(s, "axes")) {
    if (find(s, "axis")) field_error("sweep", "give either axis/values or axes");
    if (!list->is_array()) field_error("sweep.axes", "expected a list");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string where = "sweep.axes[" + std::to_string(i) + "]";
      check_keys((*list)[i], where, {"axis", "values"});
      axes.push_back(parse_axis(doc, (*list)[i], where));
    }
  } else {
    axes.push_back(parse_axis(doc, s, "sweep"));
  }

  // Cartesian product, first axis slowest.
  std::vector<std::vector<double>> points{{}};
  for (const Axis& a : axes) {
    std::vector<std::vector<double>> next;
    for (const auto& p : points)
      for (double v : a.values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  if (axes.empty() || std::any_of(axes.begin(), axes.end(), [](const Axis& a) { return a.values.empty(); }))
    points.clear();

  RunReport report;
  if (points.empty()) {
    report.summary = {{"command", *inner}, {"points", 0}};
    return report;
  }

  std::vector<std::optional<Outcome>> results(points.size());
  std::vector<std::string> errors(points.size());
  std::vector<int> codes(points.size(), 0);
  parallel_for(points.size(), default_threads(), [&](std::size_t i) {
    local_thread_limit() = 1;
    Json d = doc;
    d["command"] = *inner;
    d.erase("sweep");
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const double v = points[i][k];
      if (integral_axis(axes[k])) d[axes[k].pointer] = static_cast<long long>(std::llround(v));
      else d[axes[k].pointer] = v;
    }
    try {
      validate_document(d);
      results[i] = dispatch(*inner, Context{d, atoms});
    } catch (const std::exception& e) {
      errors[i] = e.what();
      codes[i] = exit_code_for(e);
    }
  });

  std::vector<std::string> keys;
  std::set<std::string> seen;
  for (const auto& r : results) {
    if (!r) continue;
    for (const auto& [key, value] : r->summary.items())
      if (value.is_number() && seen.insert(key).second) keys.push_back(key);
  }
  std::vector<std::string> header;
  for (const Axis& a : axes) header.push_back(a.path);
  header.insert(header.end(), keys.begin(), keys.end());
  std::vector<std::vector<double>> rows;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!results[i]) {
      Json where = Json::object();
      for (std::size_t k = 0; k < axes.size(); ++k) where[axes[k].path] = points[i][k];
      report.failures.push_back({{"point", where}, {"error", errors[i]}, {"exit_code", codes[i]}});
      continue;
    }
    ++ok;
    std::vector<double> row = points[i];
    for (const std::string& k : keys) {
      const Json* v = find(results[i]->summary, k.c_str());
      row.push_back(v && v->is_number() ? v->get<double>() : std::nan(""));
    }
    rows.push_back(std::move(row));
  }
  if (ok > 0) files.push_back({"sweep.csv", csv(header, rows)});
  report.summary = {{"command", *inner}, {"points", points.size()}, {"succeeded", ok}};
  if (ok == 0) report.exit_code = codes.front();
  return report;
}

}  // namespace

// ---------------------------------------------------------------- public

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw ResourceError("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_atomic(const fs::path& path, std::string_view content) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create directory " + dir.string() + ": " + ec.message());
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ResourceError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw ResourceError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

ArrayGeometry geometry_from_json(const Json& j) {
  if (!j.is_object()) field_error("geometry", "expected an object");
  const auto nside = opt_integer(j, "geometry", "nside");
  if (!nside) field_error("geometry.nside", "required");
  const double a = required_number(j, "geometry", "a");
  const Json* pos = find(j, "positions");
  if (!pos || !pos->is_array()) field_error("geometry.positions", "expected a list of [x, y]");
  ArrayGeometry g;
  g.nside = static_cast<int>(*nside);
  g.lattice_constant = a;
  for (std::size_t i = 0; i < pos->size(); ++i) {
    const Json& p = (*pos)[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      field_error("geometry.positions[" + std::to_string(i) + "]", "expected [x, y]");
    g.positions.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  // Rounded unless some site lies outside the inscribed disc.
  const double half = 0.5 * (g.nside - 1);
  g.rounded = std::all_of(g.positions.begin(), g.positions.end(), [&](const Site& s) {
    const double ix = s.x / a, iy = s.y / a;
    return ix * ix + iy * iy <= half * half + 1e-9;
  });
  if (const Json* r = find(j, "rounded")) {
    if (!r->is_boolean()) field_error("geometry.rounded", "expected true or false");
    g.rounded = r->get<bool>();
  }
  validate_geometry(g);
  return g;
}

Json geometry_to_json(const ArrayGeometry& geom) {
  Json pos = Json::array();
  for (const Site& s : geom.positions) pos.push_back({s.x, s.y});
  return {{"nside", geom.nside}, {"a", geom.lattice_constant}, {"rounded", geom.rounded}, {"positions", pos}};
}

RunConfig parse_config(std::string_view text, const std::string& origin) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << origin << ":" << line << ":" << col << ": invalid JSON (" << e.what() << ")";
    throw ConfigError(os.str());
  }
  validate_document(doc);
  RunConfig c;
  c.command = doc["command"].get<std::string>();
  c.threads = static_cast<unsigned>(opt_integer(doc, "", "threads").value_or(0));
  c.output_dir = opt_string(block(doc, "output"), "output", "dir").value_or("out");
  if (const char* env = std::getenv("RYDCHIRAL_OUTPUT_DIR"); env && *env) c.output_dir = env;
  if (auto atoms = opt_string(doc, "", "atoms")) c.atoms = *atoms;
  c.document = std::move(doc);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const ResourceError*>(&e)) return 4;
  if (dynamic_cast<const NumericalError*>(&e)) return 3;
  return 3;
}

RunReport run(const RunConfig& config) {
  struct ThreadScope {
    unsigned saved;
    explicit ThreadScope(unsigned t) : saved(global_thread_limit().exchange(t)) {}
    ~ThreadScope() { global_thread_limit() = saved; }
  } scope(config.threads);

  // Every command except sort/ns-gate/chiral-fit-from-file may need the table.
  StateTable atoms;
  const StateTable* atoms_ptr = nullptr;
  try {
    atoms = config.atoms.empty() ? load_default_states() : load_states(config.atoms);
    atoms_ptr = &atoms;
  } catch (const ConfigError&) {
    if (!config.atoms.empty()) throw;
  }

  std::vector<OutFile> files;
  RunReport report;
  if (config.command == "sweep") {
    report = run_sweep(config, atoms_ptr, files);
  } else {
    Outcome o = dispatch(config.command, Context{config.document, atoms_ptr});
    report.summary = std::move(o.summary);
    files = std::move(o.files);
  }

  for (const OutFile& f : files) {
    write_atomic(config.output_dir / f.name, f.content);
    report.artifacts.push_back({f.name, sha256_hex(f.content), f.content.size()});
  }
  Json manifest = {{"version", RYDCHIRAL_VERSION},
                   {"command", config.command},
                   {"config_sha256", sha256_hex(config.document.dump())},
                   {"units", kUnitsConvention},
                   {"artifacts", Json::array()},
                   {"failures", report.failures},
                   {"summary", report.summary}};
  for (const Artifact& a : report.artifacts)
    manifest["artifacts"].push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
  write_atomic(config.output_dir / "manifest.json", json_text(manifest));
  return report;
}

}  // namespace rydchiral
