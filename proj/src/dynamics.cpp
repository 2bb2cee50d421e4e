#include "dlat/dynamics.hpp"

#include "dlat/errors.hpp"
#include "dlat/fft.hpp"
#include "dlat/free_operator.hpp"
#include "dlat/special.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dlat {

namespace {

void require_periodic(const LatticeBox &box, const char *what) {
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary(std::string(what) + " needs a periodic box");
}

void check_times(const std::vector<double> &times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0) || !std::isfinite(times[i]))
      throw InvalidInput("times must be finite and nonnegative");
    if (i > 0 && times[i] < times[i - 1])
      throw InvalidInput("times must be nondecreasing");
  }
}

void check_support(const Potential &V, const LatticeBox &box) {
  for (const auto &s : V.sites())
    if (!box.contains(s))
      throw InvalidInput("potential support leaves the box");
}

} // namespace

ChebyshevPropagator::ChebyshevPropagator(const LatticeBox &box, const Potential &V, double tol)
    : box_(box), V_(V), tol_(tol) {
  require_periodic(box, "Chebyshev propagator");
  check_support(V, box);
  double lo = std::min(0.0, V.min_value()), hi = 12.0 + std::max(0.0, V.max_value());
  c_ = 0.5 * (lo + hi);
  // a hair of slack keeps the spectrum of (H - c)/r inside [-1, 1]
  r_ = 0.5 * (hi - lo) * (1.0 + 1e-6) + 1e-9;
}

std::vector<cplx> ChebyshevPropagator::coefficients(double dt) const {
  double x = r_ * std::abs(dt);
  int nmax = int(std::ceil(x + 30 + 10 * std::cbrt(x)));
  auto J = bessel_j_sequence(nmax, x);
  int K = 0;
  double tail = 0.0;
  for (int k = nmax; k >= 0; --k) {
    tail += 2 * std::abs(J[k]);
    if (tail > tol_) {
      K = k;
      break;
    }
  }
  K = std::max(K, 1);
  std::vector<cplx> c(K + 1);
  // e^{-i x y} = J_0(x) + 2 sum_k (-i)^k J_k(x) T_k(y); dt < 0 flips (-i) -> i
  const cplx unit = dt >= 0 ? cplx(0, -1) : cplx(0, 1);
  cplx p = 1.0;
  for (int k = 0; k <= K; ++k) {
    c[k] = (k == 0 ? 1.0 : 2.0) * p * J[k];
    p *= unit;
  }
  return c;
}

GridFunction ChebyshevPropagator::step(const GridFunction &psi, double dt, MethodInfo *info) const {
  if (dt == 0.0)
    return psi;
  int nsub = std::max(1, int(std::ceil(r_ * std::abs(dt) / max_phase)));
  double h = dt / nsub;
  auto coef = coefficients(h);
  const cplx phase = std::polar(1.0, -c_ * h);
  GridFunction cur = psi;
  GridFunction v0(box_), v1(box_), res(box_);
  const std::size_t n = psi.size();
  for (int s = 0; s < nsub; ++s) {
    v0 = cur;
    for (std::size_t i = 0; i < n; ++i)
      res[i] = coef[0] * v0[i];
    hamiltonian_fused(v0, V_, c_, 1.0 / r_, nullptr, 0.0, v1);
    for (std::size_t i = 0; i < n; ++i)
      res[i] += coef[1] * v1[i];
    for (std::size_t k = 2; k < coef.size(); ++k) {
      // v_{k} = 2 H' v_{k-1} - v_{k-2}, written over v_{k-2}
      hamiltonian_fused(v1, V_, c_, 2.0 / r_, &v0, -1.0, v0);
      std::swap(v0, v1);
      const cplx ck = coef[k];
      cplx *R = res.data();
      const cplx *W = v1.data();
      for (std::size_t i = 0; i < n; ++i)
        R[i] += ck * W[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      cur[i] = phase * res[i];
  }
  if (info) {
    info->matvecs += long(nsub) * long(coef.size() - 1);
    info->max_degree = std::max<int>(info->max_degree, int(coef.size()) - 1);
    info->step = std::max(info->step, std::abs(h));
  }
  return cur;
}

MethodInfo evolve_schrodinger(const Potential &V, const GridFunction &psi0,
                              const std::vector<double> &times, const Observer &obs) {
  check_times(times);
  ChebyshevPropagator prop(psi0.box(), V);
  MethodInfo info;
  info.method = "chebyshev";
  info.spectrum_lo = prop.center() - prop.radius();
  info.spectrum_hi = prop.center() + prop.radius();
  const double n0 = norm(psi0);
  GridFunction cur = psi0;
  double tcur = 0.0;
  for (double t : times) {
    cur = prop.step(cur, t - tcur, &info);
    tcur = t;
    if (!cur.all_finite())
      throw DomainError("Schrodinger evolution produced non-finite values at t = " +
                        std::to_string(t));
    if (n0 > 0)
      info.charge_drift = std::max(info.charge_drift, std::abs(norm(cur) - n0) / n0);
    obs(t, cur);
  }
  return info;
}

Trajectory evolve_schrodinger(const Potential &V, const GridFunction &psi0,
                              const std::vector<double> &times) {
  Trajectory tr;
  tr.method = evolve_schrodinger(V, psi0, times, [&](double t, const GridFunction &s) {
    tr.times.push_back(t);
    tr.states.push_back(s);
  });
  return tr;
}

GridFunction kg_operator(const Potential &V, double mass, const GridFunction &u) {
  GridFunction out(u.box());
  hamiltonian_fused(u, V, -mass * mass, 1.0, nullptr, 0.0, out);
  return out;
}

double kg_energy(const Potential &V, const KGState &s) {
  double p = norm(s.pi);
  return p * p + dot(s.psi, kg_operator(V, s.mass, s.psi)).real();
}

double smallest_ritz_value(const Potential &V, double mass, const LatticeBox &box, int iters,
                           std::uint64_t seed) {
  GridFunction q = GridFunction::random(box, seed);
  for (std::size_t i = 0; i < q.size(); ++i)
    q[i] = q[i].real();
  q *= 1.0 / norm(q);
  GridFunction qprev(box);
  std::vector<double> alpha, beta;
  for (int j = 0; j < iters; ++j) {
    GridFunction w = kg_operator(V, mass, q);
    if (j > 0)
      w.axpy(-beta.back(), qprev);
    double a = dot(q, w).real();
    w.axpy(-a, q);
    alpha.push_back(a);
    double b = norm(w);
    if (b < 1e-12)
      break;
    beta.push_back(b);
    qprev = std::move(q);
    w *= 1.0 / b;
    q = std::move(w);
  }
  const auto m = Eigen::Index(alpha.size());
  Eigen::VectorXd d = Eigen::VectorXd::Map(alpha.data(), m);
  Eigen::VectorXd e = m > 1 ? Eigen::VectorXd(Eigen::VectorXd::Map(beta.data(), m - 1))
                            : Eigen::VectorXd(0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double kg_max_group_velocity(double mass) {
  const double m2 = mass * mass;
  auto v2 = [&](double a, double b, double c) {
    double s = std::sin(a) * std::sin(a) + std::sin(b) * std::sin(b) + std::sin(c) * std::sin(c);
    return s / (m2 + symbol(a, b, c));
  };
  const int n = 64;
  const double h = std::numbers::pi / n;
  double best = -1, ba = 0, bb = 0, bc = 0;
  for (int i = 0; i <= n; ++i)
    for (int j = i; j <= n; ++j)
      for (int k = j; k <= n; ++k) {
        double v = v2(i * h, j * h, k * h);
        if (v > best) {
          best = v;
          ba = i * h;
          bb = j * h;
          bc = k * h;
        }
      }
  // coordinate refinement
  double step = h;
  while (step > 1e-12) {
    bool moved = false;
    for (int ax = 0; ax < 3; ++ax)
      for (double sgn : {-1.0, 1.0}) {
        double a = ba, b = bb, c = bc;
        (ax == 0 ? a : ax == 1 ? b : c) += sgn * step;
        double v = v2(a, b, c);
        if (v > best) {
          best = v;
          ba = a;
          bb = b;
          bc = c;
          moved = true;
        }
      }
    if (!moved)
      step *= 0.5;
  }
  return std::sqrt(best);
}

MethodInfo evolve_klein_gordon(const Potential &V, const KGState &s0,
                               const std::vector<double> &times, const KGObserver &obs,
                               const KGOptions &opt) {
  check_times(times);
  const auto &box = s0.psi.box();
  require_periodic(box, "Klein-Gordon evolution");
  if (!(s0.pi.box() == box))
    throw InvalidInput("psi and pi live on different boxes");
  if (!(s0.mass > 0))
    throw InvalidInput("mass must be positive");
  check_support(V, box);
  const double m = s0.mass, m2 = m * m;
  MethodInfo info;
  const double e0 = kg_energy(V, s0);

  if (V.empty()) {
    info.method = "spectral";
    const int n = box.side();
    const auto &fft = Fft3::get(n);
    std::vector<cplx> a = s0.psi.values(), b = s0.pi.values();
    fft.exec(a, +1);
    fft.exec(b, +1);
    auto phi = symbol_grid(box);
    std::vector<double> Om(phi.size());
    for (std::size_t i = 0; i < Om.size(); ++i)
      Om[i] = std::sqrt(m2 + phi[i]);
    const double sc = 1.0 / double(box.size());
    KGState st{GridFunction(box), GridFunction(box), m};
    std::vector<cplx> pa(a.size()), pb(a.size());
    for (double t : times) {
      for (std::size_t i = 0; i < a.size(); ++i) {
        double c = std::cos(Om[i] * t), s = std::sin(Om[i] * t);
        pa[i] = (c * a[i] + (s / Om[i]) * b[i]) * sc;
        pb[i] = (-Om[i] * s * a[i] + c * b[i]) * sc;
      }
      st.psi.values() = pa;
      st.pi.values() = pb;
      fft.exec(st.psi.values(), -1);
      fft.exec(st.pi.values(), -1);
      if (e0 > 0)
        info.energy_drift = std::max(info.energy_drift, std::abs(kg_energy(V, st) - e0) / e0);
      obs(t, st);
    }
    return info;
  }

  double ritz = smallest_ritz_value(V, m, box, opt.ritz_iterations);
  if (!(ritz > 0))
    throw DomainError("-Delta + m^2 + V is not positive definite (smallest Ritz value " +
                      std::to_string(ritz) + "); the frequencies sqrt(m^2 + mu) are not real");
  info.method = "leapfrog";
  const double dt_max = opt.cfl / std::sqrt(12.0 + m2 + V.max_abs());
  KGState st = s0;
  GridFunction Kpsi = kg_operator(V, m, st.psi);
  auto denergy = [&](double dt) {
    double p = norm(st.pi), k = norm(Kpsi);
    return p * p + dot(st.psi, Kpsi).real() - 0.25 * dt * dt * k * k;
  };
  double tcur = 0.0;
  double drift = 0.0;
  const std::size_t N = box.size();
  for (double t : times) {
    double span = t - tcur;
    if (span > 0) {
      long steps = long(std::ceil(span / dt_max - 1e-12));
      double dt = span / double(steps);
      info.step = std::max(info.step, dt);
      double before = denergy(dt);
      for (long k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < N; ++i) {
          st.pi[i] -= 0.5 * dt * Kpsi[i];
          st.psi[i] += dt * st.pi[i];
        }
        hamiltonian_fused(st.psi, V, -m2, 1.0, nullptr, 0.0, Kpsi);
        for (std::size_t i = 0; i < N; ++i)
          st.pi[i] -= 0.5 * dt * Kpsi[i];
        info.matvecs += 1;
      }
      double after = denergy(dt);
      if (before != 0)
        drift += std::abs(after - before) / std::abs(before);
      tcur = t;
    }
    if (!st.psi.all_finite())
      throw DomainError("Klein-Gordon evolution produced non-finite values");
    info.energy_drift = drift;
    obs(t, st);
  }
  return info;
}

KGTrajectory evolve_klein_gordon(const Potential &V, const KGState &s0,
                                 const std::vector<double> &times, const KGOptions &opt) {
  KGTrajectory tr;
  tr.method = evolve_klein_gordon(
      V, s0, times,
      [&](double t, const KGState &s) {
        tr.times.push_back(t);
        tr.states.push_back(s);
      },
      opt);
  return tr;
}

FitResult fit_decay_exponent(const std::vector<double> &times, const std::vector<double> &values,
                             std::pair<double, double> window) {
  if (times.size() != values.size())
    throw InvalidInput("times and values differ in length");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < window.first || times[i] > window.second)
      continue;
    if (!(values[i] > 0))
      throw DomainError("nonpositive value in the fit window");
    if (!(times[i] > 0))
      throw DomainError("log-log fit needs t > 0");
    x.push_back(std::log(times[i]));
    y.push_back(std::log(values[i]));
  }
  const std::size_t n = x.size();
  if (n < 8)
    throw InvalidInput("fit window holds " + std::to_string(n) + " samples, need >= 8");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  FitResult f;
  f.slope = sxy / sxx;
  double icpt = my - f.slope * mx, ssr = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = y[i] - icpt - f.slope * x[i];
    ssr += r * r;
  }
  f.stderr_ = std::sqrt(ssr / double(n - 2) / sxx);
  f.points = int(n);
  return f;
}

double wraparound_cutoff(const LatticeBox &box, double vmax) {
  return box.side() / (2.0 * vmax);
}

DecayCurve make_decay_curve(std::vector<double> times, std::vector<double> values, double sigma,
                            const LatticeBox &box, const DecayOptions &opt) {
  DecayCurve c;
  c.times = std::move(times);
  c.values = std::move(values);
  c.sigma = sigma;
  c.in_hypothesis = sigma > opt.hypothesis_sigma;
  c.cutoff = wraparound_cutoff(box, opt.vmax);
  c.fit_window = {opt.t_fit_min, std::min(opt.t_fit_max, c.cutoff)};
  int n = 0;
  for (double t : c.times)
    n += (t >= c.fit_window.first && t <= c.fit_window.second) ? 1 : 0;
  if (n < 8) {
    std::vector<double> later;
    for (double t : c.times)
      if (t >= opt.t_fit_min)
        later.push_back(t);
    double t8 = later.size() >= 8 ? later[7] : std::max(2 * opt.t_fit_min, opt.t_fit_min + 1);
    int Lmin = int(std::ceil(t8 * opt.vmax));
    throw BoxTooSmall("fit window is empty after the wrap-around cutoff t <= " +
                          std::to_string(c.cutoff) + "; need L >= " + std::to_string(Lmin),
                      Lmin);
  }
  auto f = fit_decay_exponent(c.times, c.values, c.fit_window);
  c.fit_slope = f.slope;
  c.fit_stderr = f.stderr_;
  c.fit_points = f.points;
  return c;
}

namespace {

struct BoundPart {
  std::vector<cplx> coef;
  const std::vector<EigenPair> *pairs;

  GridFunction remainder(double t, const GridFunction &psi) const {
    GridFunction r = psi;
    for (std::size_t j = 0; j < coef.size(); ++j)
      r.axpy(-std::polar(1.0, -t * (*pairs)[j].mu) * coef[j], (*pairs)[j].u);
    return r;
  }
};

BoundPart bound_part(const std::vector<EigenPair> &pairs, const GridFunction &psi0) {
  BoundPart b{{}, &pairs};
  for (const auto &p : pairs) {
    if (!(p.u.box() == psi0.box()))
      throw InvalidInput("eigenfunction lives on a different box");
    b.coef.push_back(dot(p.u, psi0));
  }
  return b;
}

} // namespace

DecayCurve dispersive_remainder(const Trajectory &traj, const std::vector<EigenPair> &pairs,
                                double sigma, const DecayOptions &opt) {
  if (traj.states.empty() || traj.times.front() != 0.0)
    throw InvalidInput("trajectory must start at t = 0");
  auto bp = bound_part(pairs, traj.states.front());
  std::vector<double> vals;
  for (std::size_t i = 0; i < traj.times.size(); ++i)
    vals.push_back(weighted_norm(bp.remainder(traj.times[i], traj.states[i]), {-sigma}));
  return make_decay_curve(traj.times, vals, sigma, traj.states.front().box(), opt);
}

DecayCurve measure_dispersive_decay(const Potential &V, const GridFunction &psi0,
                                    const std::vector<EigenPair> &pairs,
                                    const std::vector<double> &times, double sigma,
                                    const DecayOptions &opt, MethodInfo *info) {
  auto bp = bound_part(pairs, psi0);
  std::vector<double> vals;
  auto mi = evolve_schrodinger(V, psi0, times, [&](double t, const GridFunction &s) {
    vals.push_back(weighted_norm(bp.remainder(t, s), {-sigma}));
  });
  if (info)
    *info = mi;
  return make_decay_curve(times, vals, sigma, psi0.box(), opt);
}

DecayCurve sampled_operator_decay(const Potential &V, const LatticeBox &box,
                                  const std::vector<EigenPair> &pairs,
                                  const std::vector<double> &times, double sigma, int count,
                                  std::uint64_t seed, const DecayOptions &opt) {
  if (count < 1)
    throw InvalidInput("need at least one sample state");
  std::vector<double> vmax(times.size(), 0.0);
  for (int k = 0; k < count; ++k) {
    GridFunction psi0 = GridFunction::random(box, seed + std::uint64_t(k));
    psi0 *= 1.0 / weighted_norm(psi0, {sigma});
    auto bp = bound_part(pairs, psi0);
    std::size_t i = 0;
    evolve_schrodinger(V, psi0, times, [&](double t, const GridFunction &s) {
      vmax[i] = std::max(vmax[i], weighted_norm(bp.remainder(t, s), {-sigma}));
      ++i;
    });
  }
  return make_decay_curve(times, vmax, sigma, box, opt);
}

double dominant_frequency(const std::vector<double> &times, const std::vector<cplx> &a,
                          double nu_max) {
  if (times.size() < 4 || times.size() != a.size())
    throw InvalidInput("need a uniform series of at least 4 samples");
  const double dt = times[1] - times[0];
  const double T = dt * double(times.size());
  const double dnu = 2 * std::numbers::pi / (8 * T);
  double best = -1, arg = 0;
  for (double nu = 0; nu <= nu_max; nu += dnu) {
    cplx s = 0;
    for (std::size_t n = 0; n < a.size(); ++n)
      s += a[n] * std::polar(1.0, nu * times[n]);
    if (std::abs(s) > best) {
      best = std::abs(s);
      arg = nu;
    }
  }
  return arg;
}

std::vector<double> time_grid(double t_max, double dt) {
  if (!(dt > 0) || !(t_max >= 0))
    throw InvalidInput("time grid needs dt > 0 and t_max >= 0");
  std::vector<double> t;
  long n = long(std::floor(t_max / dt + 1e-9));
  for (long k = 0; k <= n; ++k)
    t.push_back(k * dt);
  return t;
}

} // namespace dlat
