#include "rydchiral/chiral_reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "rydchiral/errors.hpp"

namespace rydchiral {

namespace {

void validate(const EmitterChain& chain) {
  if (chain.size() < 1 || chain.size() > 2) throw ConfigError("emitter chain must hold one or two emitters");
  for (const Emitter& e : chain.emitters)
    if (!(e.Gamma_tilde >= 0.0) || !(e.gamma_tilde >= 0.0)) throw ConfigError("emitter rates must be non-negative");
}

double total_rate(const Emitter& e) { return e.Gamma_tilde + e.gamma_tilde; }

// One- and two-excitation amplitudes of the cascade; the pair amplitude
// <b1 b2> exists only for two emitters.
TwoPhotonGrid scatter(const EmitterChain& chain, const TimeGrid& grid, const std::function<cplx(double)>& input,
                      int substeps) {
  validate(chain);
  if (grid.count < 2 || !(grid.dt > 0.0)) throw ConfigError("chain_scatter: empty time grid");
  if (substeps < 1) throw ConfigError("chain_scatter: substeps must be >= 1");
  double fastest = 0.0;
  for (const Emitter& e : chain.emitters) fastest = std::max(fastest, total_rate(e));
  if (grid.dt * fastest > 0.5) {
    std::ostringstream os;
    os << "chain_scatter: step-size violation, dt * Gamma_t = " << grid.dt * fastest << " > 0.5";
    throw ConfigError(os.str());
  }

  const int m = static_cast<int>(chain.size());
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(m, m);
  Eigen::VectorXcd b(m), c(m);
  for (int i = 0; i < m; ++i) {
    const Emitter& e = chain.emitters[static_cast<std::size_t>(i)];
    a(i, i) = cplx(-0.5 * total_rate(e), e.detuning);
    b[i] = c[i] = I * std::sqrt(e.Gamma_tilde);
    for (int j = 0; j < i; ++j)
      a(i, j) = -std::sqrt(e.Gamma_tilde * chain.emitters[static_cast<std::size_t>(j)].Gamma_tilde);
  }
  const bool pair = m == 2;

  // state = (x_1..x_m, p)
  auto rhs = [&](double t, const Eigen::VectorXcd& s) {
    const cplx f = input(t);
    Eigen::VectorXcd ds(s.size());
    ds.head(m) = a * s.head(m) + b * f;
    if (pair) ds[2] = (a(0, 0) + a(1, 1)) * s[2] + (b[0] * s[1] + b[1] * s[0]) * f;
    return ds;
  };

  const std::size_t nt = grid.count;
  const auto nti = static_cast<Eigen::Index>(nt);
  TwoPhotonGrid out;
  out.grid = grid;
  out.psi.resize(nti);
  Eigen::MatrixXcd d(m, nti);
  Eigen::VectorXcd s = Eigen::VectorXcd::Zero(pair ? 3 : 1);
  const double h = grid.dt / substeps;
  for (std::size_t i = 0; i < nt; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double t = grid.at(i);
    const cplx f = input(t);
    const Eigen::VectorXcd x = s.head(m);
    out.psi[ii] = f + c.cwiseProduct(x).sum();
    Eigen::VectorXcd z = f * x;
    if (pair) {
      z[0] += c[1] * s[2];
      z[1] += c[0] * s[2];
    }
    d.col(ii) = z - out.psi[ii] * x;
    if (i + 1 == nt) break;
    for (int k = 0; k < substeps; ++k) {
      const double tk = t + k * h;
      const Eigen::VectorXcd k1 = rhs(tk, s);
      const Eigen::VectorXcd k2 = rhs(tk + 0.5 * h, s + 0.5 * h * k1);
      const Eigen::VectorXcd k3 = rhs(tk + 0.5 * h, s + 0.5 * h * k2);
      const Eigen::VectorXcd k4 = rhs(tk + h, s + h * k3);
      s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }

  // psi2(t_i, t_j) = psi_i psi_j + c^T exp(A (t_i - t_j)) d_j for i >= j.
  const Eigen::MatrixXcd step = (a * grid.dt).exp();
  Eigen::MatrixXcd rows(nti, m);  // row l: c^T step^l
  Eigen::RowVectorXcd r = c.transpose();
  for (Eigen::Index l = 0; l < nti; ++l) {
    rows.row(l) = r;
    r = r * step;
  }
  out.psi2 = out.psi * out.psi.transpose();
  for (Eigen::Index j = 0; j < nti; ++j) out.psi2.col(j).tail(nti - j) += rows.topRows(nti - j) * d.col(j);
  for (Eigen::Index j = 0; j < nti; ++j)
    for (Eigen::Index i = 0; i < j; ++i) out.psi2(i, j) = out.psi2(j, i);
  return out;
}

}  // namespace

TwoPhotonGrid chain_scatter(const EmitterChain& chain, const PulseSpec& pulse, int substeps) {
  if (!(pulse.duration > 0.0)) throw ConfigError("chain_scatter: pulse duration must be positive");
  EmitterChain shifted = chain;
  for (Emitter& e : shifted.emitters) e.detuning += pulse.carrier_detuning;
  return scatter(shifted, pulse.grid, [&](double t) { return cplx(pulse.envelope(t)); }, substeps);
}

TwoPhotonGrid chain_scatter(const EmitterChain& chain, const TimeGrid& grid, const CVector& input, int substeps) {
  if (static_cast<std::size_t>(input.size()) != grid.count) throw ConfigError("chain_scatter: input/grid mismatch");
  const auto n = static_cast<long>(grid.count);
  auto at = [&](long i) { return (i < 0 || i >= n) ? cplx(0.0) : input[i]; };
  // Catmull-Rom between samples, zero outside the grid.
  auto interp = [&](double t) {
    const double u = (t - grid.t0) / grid.dt;
    const long i = static_cast<long>(std::floor(u));
    const double f = u - static_cast<double>(i);
    const cplx p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
    return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
  };
  return scatter(chain, grid, interp, substeps);
}

SortingResult sorting_metrics(const TwoPhotonGrid& grid, const PulseSpec& input) {
  const double dt = grid.grid.dt;
  const auto nt = grid.psi.size();
  if (grid.psi2.rows() != nt || grid.psi2.cols() != nt) throw ConfigError("sorting_metrics: missing two-photon grid");
  SortingResult r;
  r.P = grid.P2();
  if (!(r.P >= 1e-12)) throw NumericalError("sorting_metrics: two-photon probability below 1e-12, F undefined");
  const double p1 = grid.P1();
  if (!(p1 > 0.0)) throw NumericalError("sorting_metrics: zero one-photon output");

  // Dominant singular pair of K = psi2 dt by power iteration on K K^H.
  const CMatrix k = grid.psi2 * dt;
  CVector w = grid.psi.cwiseAbs().cast<cplx>() + CVector::Constant(nt, 1e-3);
  w.normalize();
  double mu = 0.0;
  for (int it = 0; it < 2000; ++it) {
    CVector next = k * (k.adjoint() * w);
    const double mu_new = std::real(w.dot(next));
    next.normalize();
    w = next;
    if (std::abs(mu_new - mu) <= 1e-15 * mu_new) {
      mu = mu_new;
      break;
    }
    mu = mu_new;
  }
  // Takagi phase: w^H K conj(w) = lambda e^{-2 i beta}, theta = w e^{-i beta}.
  const cplx cval = w.dot(k * w.conjugate());
  r.lambda1 = std::abs(cval);
  r.F = r.lambda1 * r.lambda1 / r.P;
  CVector theta = w * std::sqrt(cval / std::abs(cval));
  r.theta_out = theta / std::sqrt(dt);
  r.psi_out = grid.psi / std::sqrt(p1);
  r.orthogonality = std::abs(r.psi_out.dot(r.theta_out) * dt);

  // Best delay of the time-reversed input envelope.
  auto overlap = [&](double tshift) {
    cplx acc = 0.0;
    for (Eigen::Index i = 0; i < nt; ++i)
      acc += std::conj(r.theta_out[i]) * input.envelope(tshift - grid.grid.at(static_cast<std::size_t>(i)));
    return std::abs(acc * dt);
  };
  double best_t = grid.grid.t0, best = -1.0;
  const double t_lo = grid.grid.t0, t_hi = grid.grid.back();
  const int coarse = 400;
  for (int i = 0; i <= coarse; ++i) {
    // theta(t) ~ phi(T - t); T ranges over twice the grid extent.
    const double tshift = 2.0 * t_lo + (2.0 * (t_hi - t_lo)) * i / coarse;
    const double v = overlap(tshift);
    if (v > best) {
      best = v;
      best_t = tshift;
    }
  }
  double lo = best_t - (t_hi - t_lo) / coarse * 2.0, hi = best_t + (t_hi - t_lo) / coarse * 2.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    const double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    if (overlap(x1) > overlap(x2)) hi = x2;
    else lo = x1;
  }
  r.delay = 0.5 * (lo + hi);
  r.time_reversal_overlap = std::max(best, overlap(r.delay));
  return r;
}

TimeGrid chain_grid(const EmitterChain& chain, double tau) {
  validate(chain);
  double slow = std::numeric_limits<double>::infinity(), fast = 0.0;
  for (const Emitter& e : chain.emitters) {
    slow = std::min(slow, total_rate(e));
    fast = std::max(fast, total_rate(e));
  }
  if (!(slow > 0.0)) throw ConfigError("chain_grid: emitter without decay");
  const double dt = std::min(tau, 1.0 / fast) / 20.0;
  // Whole number of steps per side keeps the grid symmetric about t = 0.
  const double steps = std::ceil((5.0 * tau + 20.0 * static_cast<double>(chain.size()) / slow) / dt);
  TimeGrid g;
  g.t0 = -steps * dt;
  g.dt = dt;
  g.count = 2 * static_cast<std::size_t>(steps) + 1;
  return g;
}

namespace {

double sorting_objective(const SortingResult& s) { return s.F * (1.0 - s.orthogonality * s.orthogonality); }

}  // namespace

SortingOptimum optimize_sorting_duration(const EmitterChain& chain, PulseShape shape, double tolerance) {
  validate(chain);
  const double g0 = chain.emitters.front().Gamma_tilde;
  if (!(g0 > 0.0)) throw ConfigError("optimize_sorting_duration: first emitter has no waveguide coupling");
  auto evaluate = [&](double tau) {
    PulseSpec p;
    p.shape = shape;
    p.duration = tau;
    p.grid = chain_grid(chain, tau);
    return sorting_metrics(chain_scatter(chain, p), p);
  };
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = 0.1 / g0, hi = 20.0 / g0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  SortingResult s1 = evaluate(x1), s2 = evaluate(x2);
  while (hi - lo > tolerance / g0) {
    if (sorting_objective(s1) > sorting_objective(s2)) {
      hi = x2;
      x2 = x1;
      s2 = std::move(s1);
      x1 = hi - gr * (hi - lo);
      s1 = evaluate(x1);
    } else {
      lo = x1;
      x1 = x2;
      s1 = std::move(s2);
      x2 = lo + gr * (hi - lo);
      s2 = evaluate(x2);
    }
  }
  return sorting_objective(s1) > sorting_objective(s2) ? SortingOptimum{x1, std::move(s1)}
                                                        : SortingOptimum{x2, std::move(s2)};
}

NsGateResult ns_gate_circuit(cplx c0, cplx c1, cplx c2, const EmitterChain& chain, const PulseSpec& pulse) {
  const double norm = std::norm(c0) + std::norm(c1) + std::norm(c2);
  if (std::abs(norm - 1.0) > 1e-9) throw ConfigError("ns_gate_circuit: input amplitudes must be normalized");
  const TimeGrid& grid = pulse.grid;
  if (std::abs(grid.t0 + grid.back()) > 1e-9 * std::max(1.0, std::abs(grid.t0)))
    throw ConfigError("ns_gate_circuit: time reversal needs a grid symmetric about t = 0");
  const double dt = grid.dt;
  const auto nt = static_cast<Eigen::Index>(grid.count);

  NsGateResult out;
  const TwoPhotonGrid first = chain_scatter(chain, pulse);
  out.sorting = sorting_metrics(first, pulse);
  const SortingResult& s = out.sorting;

  // Ideal time reversal f(t) -> f*(-t) on the symmetric grid.
  auto reverse = [&](const CVector& f) {
    CVector g(nt);
    for (Eigen::Index i = 0; i < nt; ++i) g[i] = std::conj(f[nt - 1 - i]);
    return g;
  };
  const TwoPhotonGrid one = chain_scatter(chain, grid, reverse(s.psi_out));
  const TwoPhotonGrid two = chain_scatter(chain, grid, reverse(s.theta_out));

  // Target mode: delayed copy of the input envelope best matching the
  // single-photon output; a per-photon phase is a linear-optics freedom.
  auto mode_at = [&](double delay) {
    CVector m(nt);
    for (Eigen::Index i = 0; i < nt; ++i) m[i] = pulse.envelope(grid.at(static_cast<std::size_t>(i)) - delay);
    return m;
  };
  auto overlap1 = [&](double delay) { return std::abs(mode_at(delay).dot(one.psi) * dt); };
  double best_d = 0.0, best = -1.0;
  for (Eigen::Index i = 0; i < nt; i += std::max<Eigen::Index>(1, nt / 400)) {
    const double dl = grid.at(static_cast<std::size_t>(i));
    if (const double v = overlap1(dl); v > best) {
      best = v;
      best_d = dl;
    }
  }
  double lo = best_d - 2.0 * dt * std::max<Eigen::Index>(1, nt / 400), hi = best_d + 2.0 * dt * std::max<Eigen::Index>(1, nt / 400);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    const double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    if (overlap1(x1) > overlap1(x2)) hi = x2;
    else lo = x1;
  }
  const CVector m = mode_at(0.5 * (lo + hi));
  const cplx m1 = m.dot(one.psi) * dt;                                   // <m|f1>
  const cplx m2 = (m.adjoint() * two.psi2 * m.conjugate())(0) * dt * dt;  // <mm|f2>
  const cplx phase = m1 / std::abs(m1);

  const double survive1 = std::sqrt(first.P1());
  out.c0 = c0;
  out.c1 = c1 * survive1 * m1 / phase;
  // Projection onto theta theta keeps lambda_1; the pi phase is applied in
  // the two-photon path, so the target is -c2.
  out.c2 = -c2 * s.lambda1 * m2 / (phase * phase);
  const cplx overlap = std::conj(c0) * out.c0 + std::conj(c1) * out.c1 + std::conj(-c2) * out.c2;
  out.gate_fidelity = std::norm(overlap);
  return out;
}

}  // namespace rydchiral
