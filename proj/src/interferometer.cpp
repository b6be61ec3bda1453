#include "rydchiral/interferometer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "rydchiral/errors.hpp"
#include "rydchiral/parallel.hpp"

namespace rydchiral {

PortPair symmetric_port_transform(cplx forward, cplx backward, cplx emitter) {
  const double r = 1.0 / std::sqrt(2.0);
  return {r * (forward + backward) + emitter, r * (forward - backward)};
}

double displacement_signal(double dz) {
  // Round trip to the displaced array changes one arm's phase by 2 k dz.
  const double s = std::sin(0.5 * 2.0 * kWavenumber * dz);
  return s * s;
}

double displacement_signal_quadratic(double dz) { return 4.0 * kPi * kPi * dz * dz; }

std::vector<ChiralPoint> two_sided_spectrum(const EffectiveParams& eff, const ModeVector& mode_fwd,
                                            const ModeVector& mode_bwd, std::span<const double> delta) {
  const std::size_t n = eff.size();
  const CVector& uf = mode_fwd.amplitudes;
  const CVector& ub = mode_bwd.amplitudes;
  if (static_cast<std::size_t>(uf.size()) != n || static_cast<std::size_t>(ub.size()) != n)
    throw ConfigError("two_sided_spectrum: size mismatch");
  if ((uf.cwiseAbs() - ub.cwiseAbs()).cwiseAbs().maxCoeff() > 1e-12 * uf.cwiseAbs().maxCoeff())
    throw ConfigError("two_sided_spectrum: arms must illuminate the array with equal |u_j|");

  const double r = 1.0 / std::sqrt(2.0);
  const CVector w = r * (uf + ub);  // drive pattern of the symmetric input
  const CVector v = r * (uf - ub);
  const double kappa = kCouplingRate * eff.emission_factor * eff.scale();
  CMatrix base(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  base.real() = eff.J_bar;
  base.imag() = 0.5 * eff.Gam_bar;

  auto point = [&](double d, const CVector& x) {
    ChiralPoint p;
    p.delta = d;
    p.a_amplitude = 1.0 + I * kappa * w.dot(x);
    p.T = std::norm(p.a_amplitude);
    p.b_intensity = std::norm(I * kappa * v.dot(x));
    return p;
  };
  auto direct = [&](double d) {
    CMatrix m = base;
    m.diagonal().array() += cplx(d - eff.collective_shift, 0.5 * eff.gamma);
    Eigen::PartialPivLU<CMatrix> lu(m);
    if (!(lu.rcond() > 1e-14)) throw NumericalError("two_sided_spectrum: conditioning failure");
    return point(d, lu.solve(-w));
  };

  std::vector<ChiralPoint> out(delta.size());
  // Long scans: diagonalize once, each detuning is then a diagonal solve.
  if (delta.size() > 32) {
    Eigen::ComplexEigenSolver<CMatrix> es(base);
    if (es.info() == Eigen::Success) {
      Eigen::PartialPivLU<CMatrix> vlu(es.eigenvectors());
      const CVector y = vlu.solve(-w);
      const CVector lam = es.eigenvalues();
      auto spectral = [&](double d) {
        const cplx shift(d - eff.collective_shift, 0.5 * eff.gamma);
        const CVector z = y.array() / (lam.array() + shift);
        return point(d, es.eigenvectors() * z);
      };
      const double probe = delta[delta.size() / 2];
      const ChiralPoint ref = direct(probe);
      const ChiralPoint got = spectral(probe);
      if (std::abs(ref.a_amplitude - got.a_amplitude) < 1e-10 * std::max(1.0, std::abs(ref.a_amplitude))) {
        for (std::size_t i = 0; i < delta.size(); ++i) out[i] = spectral(delta[i]);
        return out;
      }
    }
  }
  parallel_for(delta.size(), default_threads(), [&](std::size_t i) { out[i] = direct(delta[i]); });
  return out;
}

double chiral_transmission(double delta, double gamma_t, double Gamma_t, double center) {
  const cplx num(2.0 * (delta - center), gamma_t - Gamma_t);
  const cplx den(2.0 * (delta - center), gamma_t + Gamma_t);
  return std::norm(num / den);
}

namespace {

struct DipFunctor : Eigen::DenseFunctor<double> {
  std::vector<double> d, t;
  DipFunctor(std::vector<double> dd, std::vector<double> tt)
      : Eigen::DenseFunctor<double>(3, static_cast<int>(dd.size())), d(std::move(dd)), t(std::move(tt)) {}

  // p = (Gt, P, c)
  int operator()(const InputType& p, ValueType& f) const {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double x = d[i] - p[2];
      f[static_cast<Eigen::Index>(i)] = 1.0 - 4.0 * p[1] / (4.0 * x * x + p[0] * p[0]) - t[i];
    }
    return 0;
  }
  int df(const InputType& p, JacobianType& jac) const {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double x = d[i] - p[2];
      const double den = 4.0 * x * x + p[0] * p[0];
      jac(r, 0) = 8.0 * p[1] * p[0] / (den * den);
      jac(r, 1) = -4.0 / den;
      jac(r, 2) = -32.0 * p[1] * x / (den * den);
    }
    return 0;
  }
};

// Complex a-port amplitude a = 1 - 2i Gt/(2x + i(Gt + gt)), p = (Gt, gt, c).
struct AmplitudeFunctor : Eigen::DenseFunctor<double> {
  std::vector<double> d;
  std::vector<cplx> a;
  AmplitudeFunctor(std::vector<double> dd, std::vector<cplx> aa)
      : Eigen::DenseFunctor<double>(3, 2 * static_cast<int>(dd.size())), d(std::move(dd)), a(std::move(aa)) {}

  int operator()(const InputType& p, ValueType& f) const {
    const auto n = static_cast<Eigen::Index>(d.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx den(2.0 * (d[i] - p[2]), p[0] + p[1]);
      const cplx r = 1.0 - 2.0 * I * p[0] / den - a[i];
      f[i] = r.real();
      f[n + i] = r.imag();
    }
    return 0;
  }
  int df(const InputType& p, JacobianType& jac) const {
    const auto n = static_cast<Eigen::Index>(d.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const cplx den(2.0 * (d[i] - p[2]), p[0] + p[1]);
      const cplx den2 = den * den;
      const cplx dG = -2.0 * I / den - 2.0 * p[0] / den2;
      const cplx dg = -2.0 * p[0] / den2;
      const cplx dc = -4.0 * I * p[0] / den2;
      for (auto [col, v] : {std::pair{0, dG}, {1, dg}, {2, dc}}) {
        jac(i, col) = v.real();
        jac(n + i, col) = v.imag();
      }
    }
    return 0;
  }
};

}  // namespace

WaveguideFit effective_emitter_fit(std::span<const double> delta, std::span<const double> T) {
  if (delta.size() != T.size()) throw ConfigError("effective_emitter_fit: sample arrays differ in length");
  if (delta.size() < 8) throw ConfigError("effective_emitter_fit: need at least 8 samples");

  // Initial guesses from the dip: depth, center and full width at half depth.
  const auto imin = static_cast<std::size_t>(std::min_element(T.begin(), T.end()) - T.begin());
  const double depth = 1.0 - T[imin];
  const double c0 = delta[imin];
  if (!(depth > 0.0)) throw NumericalError("effective_emitter_fit: no transmission dip in the samples");
  const double half = 1.0 - 0.5 * depth;
  double lo = delta.front(), hi = delta.back();
  for (std::size_t i = imin; i-- > 0;)
    if (T[i] >= half) {
      lo = delta[i] + (delta[i + 1] - delta[i]) * (T[i] - half) / (T[i] - T[i + 1]);
      break;
    }
  for (std::size_t i = imin + 1; i < T.size(); ++i)
    if (T[i] >= half) {
      hi = delta[i - 1] + (delta[i] - delta[i - 1]) * (half - T[i - 1]) / (T[i] - T[i - 1]);
      break;
    }
  const double fwhm = hi - lo;
  if (!(fwhm > 0.0)) throw NumericalError("effective_emitter_fit: could not bracket the linewidth");
  const double span_lo = *std::min_element(delta.begin(), delta.end());
  const double span_hi = *std::max_element(delta.begin(), delta.end());
  if (c0 - span_lo < fwhm || span_hi - c0 < fwhm)
    throw ConfigError("effective_emitter_fit: samples must span at least +-2 half-linewidths around the dip");

  std::vector<double> dd, tt;
  for (std::size_t i = 0; i < delta.size(); ++i)
    if (std::abs(delta[i] - c0) <= 10.0 * fwhm) {
      dd.push_back(delta[i]);
      tt.push_back(T[i]);
    }
  if (dd.size() < 8) throw ConfigError("effective_emitter_fit: fewer than 8 samples inside the fit window");

  DipFunctor f(dd, tt);
  Eigen::VectorXd p(3);
  p << fwhm, depth * fwhm * fwhm / 4.0, c0;
  Eigen::LevenbergMarquardt<DipFunctor> lm(f);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setGtol(0.0);
  lm.setMaxfev(4000);
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation) {
    std::ostringstream os;
    os << "effective_emitter_fit: no convergence (status " << static_cast<int>(status) << ", " << lm.nfev()
       << " evaluations, start width " << fwhm << ", depth " << depth << ")";
    throw NumericalError(os.str());
  }

  WaveguideFit fit;
  const double gt = std::abs(p[0]);
  const double prod = std::max(p[1], 0.0);
  const double disc = std::sqrt(std::max(gt * gt - 4.0 * prod, 0.0));
  fit.Gamma_tilde = 0.5 * (gt + disc);
  // Small root without cancellation.
  fit.gamma_tilde = fit.Gamma_tilde > 0.0 ? prod / fit.Gamma_tilde : 0.0;
  fit.beta = fit.Gamma_tilde / (fit.Gamma_tilde + fit.gamma_tilde);
  fit.center = p[2];
  Eigen::VectorXd res(static_cast<Eigen::Index>(dd.size()));
  f(p, res);
  fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(dd.size()));
  fit.evaluations = static_cast<int>(lm.nfev());
  return fit;
}

WaveguideFit effective_emitter_fit(std::span<const double> delta, std::span<const cplx> amplitude) {
  if (delta.size() != amplitude.size()) throw ConfigError("effective_emitter_fit: sample arrays differ in length");
  if (delta.size() < 8) throw ConfigError("effective_emitter_fit: need at least 8 samples");

  // Start from the peak and half-power width of |a - 1|^2 = 4 Gt^2/(4x^2 + (Gt + gt)^2).
  std::vector<double> s(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) s[i] = std::norm(amplitude[i] - 1.0);
  const auto imax = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  if (!(s[imax] > 0.0)) throw NumericalError("effective_emitter_fit: no resonance in the samples");
  const double c0 = delta[imax];
  const double half = 0.5 * s[imax];
  std::size_t lo = imax, hi = imax;
  while (lo > 0 && s[lo] > half) --lo;
  while (hi + 1 < s.size() && s[hi] > half) ++hi;
  if (s[lo] > half || s[hi] > half)
    throw ConfigError("effective_emitter_fit: samples must span at least +-2 half-linewidths around the resonance");
  const double width = delta[hi] - delta[lo];
  if (!(width > 0.0)) throw NumericalError("effective_emitter_fit: could not bracket the linewidth");

  std::vector<double> dd;
  std::vector<cplx> aa;
  for (std::size_t i = 0; i < delta.size(); ++i)
    if (std::abs(delta[i] - c0) <= 10.0 * width) {
      dd.push_back(delta[i]);
      aa.push_back(amplitude[i]);
    }
  if (dd.size() < 8) throw ConfigError("effective_emitter_fit: fewer than 8 samples inside the fit window");

  AmplitudeFunctor f(dd, aa);
  Eigen::VectorXd p(3);
  const double peak = std::sqrt(s[imax]);
  p << 0.5 * peak * width, width * (1.0 - 0.5 * peak), c0;
  Eigen::LevenbergMarquardt<AmplitudeFunctor> lm(f);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setGtol(0.0);
  lm.setMaxfev(4000);
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters ||
      status == Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation) {
    std::ostringstream os;
    os << "effective_emitter_fit: no convergence (status " << static_cast<int>(status) << ", " << lm.nfev()
       << " evaluations, start width " << width << ")";
    throw NumericalError(os.str());
  }
  WaveguideFit fit;
  fit.Gamma_tilde = p[0];
  fit.gamma_tilde = p[1];
  fit.beta = fit.Gamma_tilde / (fit.Gamma_tilde + fit.gamma_tilde);
  fit.center = p[2];
  Eigen::VectorXd res(2 * static_cast<Eigen::Index>(dd.size()));
  f(p, res);
  fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(dd.size()));
  fit.evaluations = static_cast<int>(lm.nfev());
  return fit;
}

double beta_opt(double gamma_bar_c, double gamma) {
  if (!(gamma_bar_c > 0.0) || gamma < 0.0) throw ConfigError("beta_opt: need Gamma_bar_c > 0 and gamma >= 0");
  return gamma_bar_c / (gamma_bar_c + gamma);
}

WaveguideFit fit_effective_emitter(const EffectiveParams& eff, const ModeVector& mode_fwd, const ModeVector& mode_bwd,
                                   std::size_t points, double width) {
  if (points < 8) throw ConfigError("fit_effective_emitter: needs at least 8 points");
  if (width <= 0.0) width = 15.0 * (eff.collective_decay + eff.gamma);
  if (!(width > 0.0)) throw ConfigError("fit_effective_emitter: vanishing linewidth");
  std::vector<double> delta(points);
  for (std::size_t i = 0; i < points; ++i)
    delta[i] = -width + 2.0 * width * static_cast<double>(i) / static_cast<double>(points - 1);
  const std::vector<ChiralPoint> sp = two_sided_spectrum(eff, mode_fwd, mode_bwd, delta);
  std::vector<cplx> a(points);
  for (std::size_t i = 0; i < points; ++i) a[i] = sp[i].a_amplitude;
  return effective_emitter_fit(delta, a);
}

}  // namespace rydchiral
