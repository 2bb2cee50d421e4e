#include "dlat/dynamics.hpp"

#include "dlat/errors.hpp"
#include "dlat/free_operator.hpp"
#include "dlat/special.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace dlat {

namespace {

/// Values of psi(tau) = e^{-i tau H} psi0 at a few sites for arbitrary tau
/// in [0, t_max], from one run of Chebyshev moments T_k(H') psi0.
class SiteHistory {
public:
  SiteHistory(const Potential &V, const GridFunction &psi0, const std::vector<Site> &sites,
              double t_max, MethodInfo &info)
      : prop_(psi0.box(), V) {
    const auto coef = prop_.coefficients(t_max);
    K_ = int(coef.size()) - 1;
    const auto &box = psi0.box();
    std::vector<std::size_t> idx;
    for (const auto &s : sites)
      idx.push_back(box.index(s));
    mom_.assign(sites.size(), std::vector<cplx>(K_ + 1));
    GridFunction v0 = psi0, v1(box);
    const double c = prop_.center(), r = prop_.radius();
    auto record = [&](int k, const GridFunction &v) {
      for (std::size_t j = 0; j < idx.size(); ++j)
        mom_[j][k] = v[idx[j]];
    };
    record(0, v0);
    hamiltonian_fused(v0, V, c, 1.0 / r, nullptr, 0.0, v1);
    record(1, v1);
    for (int k = 2; k <= K_; ++k) {
      hamiltonian_fused(v1, V, c, 2.0 / r, &v0, -1.0, v0);
      std::swap(v0, v1);
      record(k, v1);
    }
    info.method = "chebyshev-moments";
    info.max_degree = K_;
    info.matvecs += K_;
    info.spectrum_lo = c - r;
    info.spectrum_hi = c + r;
    J_.resize(K_ + 1);
  }

  /// psi(tau) at every recorded site.
  void eval(double tau, std::vector<cplx> &out) {
    const double x = prop_.radius() * tau;
    bessel_j_sequence(K_, x, J_.data());
    out.assign(mom_.size(), 0.0);
    const cplx ph = std::polar(1.0, -prop_.center() * tau);
    for (std::size_t j = 0; j < mom_.size(); ++j) {
      cplx s = 0.0, p = 1.0;
      for (int k = 0; k <= K_; ++k) {
        s += (k == 0 ? 1.0 : 2.0) * p * J_[k] * mom_[j][k];
        p *= cplx(0, -1);
      }
      out[j] = ph * s;
    }
  }

private:
  ChebyshevPropagator prop_;
  int K_ = 0;
  std::vector<std::vector<cplx>> mom_;
  std::vector<double> J_;
};

} // namespace

ScatteringResult scattering_state(const Potential &V, const GridFunction &psi0,
                                  const std::vector<EigenPair> &pairs, double t_max, double sigma,
                                  const ScatteringOptions &opt) {
  const auto &box = psi0.box();
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary("scattering state needs a periodic box");
  if (!(t_max > 0) || !std::isfinite(t_max))
    throw InvalidInput("t_max must be positive");
  if (!(opt.panel > 0) || opt.panel > 0.25)
    throw InvalidInput("panel length must lie in (0, 0.25]");
  for (const auto &s : V.sites())
    if (!box.contains(s))
      throw InvalidInput("potential support leaves the box");

  std::vector<cplx> cj;
  for (const auto &p : pairs) {
    if (!(p.u.box() == box))
      throw InvalidInput("eigenfunction lives on a different box");
    cj.push_back(dot(p.u, psi0));
  }
  GridFunction pc0 = psi0;
  for (std::size_t j = 0; j < pairs.size(); ++j)
    pc0.axpy(-cj[j], pairs[j].u);

  ScatteringResult res{GridFunction(box)};
  const int P = int(std::ceil(t_max / opt.panel - 1e-12));
  const double h = t_max / P;

  if (V.empty()) {
    res.phi_plus = pc0;
    res.remainder.sigma = sigma;
    res.remainder.cutoff = wraparound_cutoff(box, opt.fit.vmax);
    for (int p = 0; p < P; ++p) {
      res.remainder.times.push_back(p * h);
      res.remainder.values.push_back(0.0);
      res.integrand_times.push_back(p * h);
      res.integrand_norms.push_back(0.0);
    }
    res.diagnostic = "V = 0: phi_plus = psi0 and the remainder vanishes identically";
    for (double t : opt.crosscheck_times)
      res.crosscheck.push_back({t, 0.0});
    return res;
  }

  const auto &sites = V.sites();
  const std::size_t S = sites.size();
  std::vector<std::vector<cplx>> us(pairs.size(), std::vector<cplx>(S));
  for (std::size_t j = 0; j < pairs.size(); ++j)
    for (std::size_t a = 0; a < S; ++a)
      us[j][a] = pairs[j].u.at(sites[a]);

  MethodInfo info;
  SiteHistory hist(V, psi0, sites, t_max, info);
  std::vector<cplx> buf;
  auto pc_at = [&](double tau, std::vector<cplx> &out) {
    hist.eval(tau, out);
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      cplx e = std::polar(1.0, -tau * pairs[j].mu) * cj[j];
      for (std::size_t a = 0; a < S; ++a)
        out[a] -= e * us[j][a];
    }
  };

  // distinct symbol values, keyed by sorted folded mode triples
  const int n = box.side();
  const int half = n / 2;
  std::map<std::array<int, 3>, int> key;
  std::vector<std::array<int, 3>> lam;
  std::vector<int> slot(box.size());
  std::vector<int> mult;
  {
    std::size_t i = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c, ++i) {
          std::array<int, 3> t{std::min(a, n - a), std::min(b, n - b), std::min(c, n - c)};
          std::sort(t.begin(), t.end());
          auto [it, fresh] = key.try_emplace(t, int(lam.size()));
          if (fresh) {
            lam.push_back(t);
            mult.push_back(0);
          }
          slot[i] = it->second;
          ++mult[it->second];
        }
  }
  const std::size_t D = lam.size();
  std::vector<double> cosk(half + 1);
  for (int k = 0; k <= half; ++k)
    cosk[k] = std::cos(2 * std::numbers::pi * k / n);

  const bool origin_only = S == 1 && sites[0] == Site{0, 0, 0};
  // e^{i theta . s} per site, per axis
  std::vector<std::array<std::vector<cplx>, 3>> sph(S);
  for (std::size_t a = 0; a < S; ++a) {
    const int xs[3] = {sites[a].x1, sites[a].x2, sites[a].x3};
    for (int ax = 0; ax < 3; ++ax) {
      sph[a][ax].resize(n);
      for (int k = 0; k < n; ++k)
        sph[a][ax][k] = std::polar(1.0, 2 * std::numbers::pi * k * xs[ax] / n);
    }
  }
  const auto &vals = V.values();

  std::vector<cplx> G(S * D, 0.0);
  auto remainder_sq = [&]() {
    double acc = 0.0;
    if (origin_only) {
      for (std::size_t d = 0; d < D; ++d)
        acc += mult[d] * std::norm(vals[0] * G[d]);
    } else {
      std::size_t i = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c, ++i) {
            cplx s = 0.0;
            for (std::size_t q = 0; q < S; ++q)
              s += vals[q] * sph[q][0][a] * sph[q][1][b] * sph[q][2][c] * G[q * D + slot[i]];
            acc += std::norm(s);
          }
    }
    return acc / double(box.size());
  };

  const auto &gl = gauss_legendre(12);
  std::vector<double> rem(P + 1, 0.0), inorm(P + 1, 0.0);
  std::vector<cplx> E(half + 1);
  auto vnorm = [&](const std::vector<cplx> &p) {
    double s = 0.0;
    for (std::size_t a = 0; a < S; ++a)
      s += std::norm(vals[a] * p[a]);
    return std::sqrt(s);
  };
  pc_at(t_max, buf);
  inorm[P] = vnorm(buf);
  res.tail_bound = 2 * t_max * inorm[P];
  std::vector<cplx> w(S);
  for (int p = P - 1; p >= 0; --p) {
    const double t0 = p * h;
    for (std::size_t g = 0; g < gl.x.size(); ++g) {
      const double tau = t0 + 0.5 * h * (gl.x[g] + 1.0);
      const double wt = 0.5 * h * gl.w[g];
      pc_at(tau, buf);
      for (std::size_t a = 0; a < S; ++a)
        w[a] = wt * buf[a];
      for (int k = 0; k <= half; ++k)
        E[k] = std::polar(1.0, -2.0 * tau * cosk[k]);
      const cplx e6 = std::polar(1.0, 6.0 * tau);
      for (std::size_t d = 0; d < D; ++d) {
        const auto &t = lam[d];
        const cplx e = e6 * E[t[0]] * E[t[1]] * E[t[2]];
        for (std::size_t a = 0; a < S; ++a)
          G[a * D + d] += w[a] * e;
      }
    }
    pc_at(t0, buf);
    inorm[p] = vnorm(buf);
    rem[p] = std::sqrt(remainder_sq());
  }

  // phi_+ = P^c psi0 - i sum_s V_s e^{i theta s} G_s(phi(theta); 0)
  GridFunction hat = torus_transform(pc0, Direction::forward);
  {
    std::size_t i = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c, ++i) {
          cplx s = 0.0;
          for (std::size_t q = 0; q < S; ++q)
            s += vals[q] * sph[q][0][a] * sph[q][1][b] * sph[q][2][c] * G[q * D + slot[i]];
          hat[i] += cplx(0, -1) * s;
        }
  }
  res.phi_plus = torus_transform(hat, Direction::inverse);

  std::vector<double> times, values;
  for (int p = 0; p < P; ++p) {
    times.push_back(p * h);
    values.push_back(rem[p]);
  }
  for (int p = 0; p <= P; ++p) {
    res.integrand_times.push_back(p * h);
    res.integrand_norms.push_back(inorm[p]);
  }
  for (int p = 0; p < P; ++p)
    res.integral_bound += 0.5 * h * (inorm[p] + inorm[p + 1]);

  auto window_mean = [&](double f0, double f1) {
    std::size_t i0 = std::size_t(f0 * P), i1 = std::max(i0 + 1, std::size_t(f1 * P));
    double s = 0;
    for (std::size_t i = i0; i < i1; ++i)
      s += inorm[i];
    return s / double(i1 - i0);
  };
  double late = window_mean(0.9, 1.0), mid = window_mean(0.4, 0.6);
  res.tail_converged = late < mid;
  if (!res.tail_converged)
    res.diagnostic = "integrand norm ‖V P^c psi‖ is not decaying over [0, t_max] "
                     "(late mean " +
                     std::to_string(late) + " >= middle mean " + std::to_string(mid) +
                     "); the Duhamel integral is not converged";
  else
    res.diagnostic = "tail bound 2 t_max ‖V P^c psi(t_max)‖ = " + std::to_string(res.tail_bound);

  res.remainder = make_decay_curve(times, values, sigma, box, opt.fit);

  ChebyshevPropagator prop(box, V);
  GridFunction cur = psi0;
  double tc = 0;
  for (double t : opt.crosscheck_times) {
    if (t > t_max)
      continue;
    cur = prop.step(cur, t - tc);
    tc = t;
    GridFunction d = cur;
    for (std::size_t j = 0; j < pairs.size(); ++j)
      d.axpy(-std::polar(1.0, -t * pairs[j].mu) * cj[j], pairs[j].u);
    d -= free_propagator(res.phi_plus, t);
    res.crosscheck.push_back({t, norm(d)});
  }
  return res;
}

} // namespace dlat
