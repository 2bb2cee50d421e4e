#include "dlat/kernel_engine.hpp"

#include "dlat/errors.hpp"
#include "dlat/fft.hpp"
#include "dlat/special.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dlat {

namespace {
constexpr double kPi = std::numbers::pi;
}

Triple canonical(const Site &z) {
  Triple t{std::abs(z.x1), std::abs(z.x2), std::abs(z.x3)};
  std::sort(t.begin(), t.end());
  return t;
}

std::vector<Triple> canonical_triples(int R) {
  std::vector<Triple> r;
  for (int a = 0; a <= R; ++a)
    for (int b = a; b <= R; ++b)
      for (int c = b; c <= R; ++c)
        r.push_back({a, b, c});
  return r;
}

double kappa_estimate(cplx w) {
  double d = 0.0;
  if (w.real() < 0)
    d = -w.real();
  else if (w.real() > 12)
    d = w.real() - 12;
  double k1 = d > 0 ? std::acosh(1 + d / 2) : 0.0;
  double k2 = std::abs(w.imag()) / (2 * std::sqrt(3.0));
  return std::max(k1, k2);
}

std::vector<cplx> trapezoid_kernels(cplx w, const std::vector<Triple> &z, int M) {
  // The integrand is even in each theta_j, so e^{-i theta.z} reduces to a
  // product of cosines.
  std::vector<double> cs(M);
  for (int k = 0; k < M; ++k)
    cs[k] = std::cos(2 * kPi * k / M);
  std::size_t M2 = std::size_t(M) * M;
  std::vector<cplx> g(M2 * M);
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b)
      for (int c = 0; c < M; ++c)
        g[a * M2 + b * M + c] = 1.0 / (6.0 - 2 * (cs[a] + cs[b] + cs[c]) - w);
  std::vector<cplx> out(z.size());
  std::vector<double> c1(M), c2(M), c3(M);
  std::vector<cplx> s2(M);
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (int k = 0; k < M; ++k) {
      c1[k] = std::cos(2 * kPi * double(k) * z[i][0] / M);
      c2[k] = std::cos(2 * kPi * double(k) * z[i][1] / M);
      c3[k] = std::cos(2 * kPi * double(k) * z[i][2] / M);
    }
    cplx s = 0;
    for (int a = 0; a < M; ++a) {
      cplx sb = 0;
      for (int b = 0; b < M; ++b) {
        const cplx *row = &g[a * M2 + b * M];
        cplx sc = 0;
        for (int c = 0; c < M; ++c)
          sc += row[c] * c3[c];
        sb += sc * c2[b];
      }
      s += sb * c1[a];
    }
    out[i] = s / double(M2 * M);
  }
  return out;
}

std::vector<cplx> trapezoid_kernels_fft(cplx w, const std::vector<Triple> &z, int M) {
  std::vector<double> cs(M);
  for (int k = 0; k < M; ++k)
    cs[k] = std::cos(2 * kPi * k / M);
  std::size_t M2 = std::size_t(M) * M;
  std::vector<cplx> g(M2 * M);
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b)
      for (int c = 0; c < M; ++c)
        g[a * M2 + b * M + c] = 1.0 / (6.0 - 2 * (cs[a] + cs[b] + cs[c]) - w);
  Fft3::get(M).exec(g, -1);
  std::vector<cplx> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i][2] >= M / 2)
      throw InvalidInput("offset too large for the torus grid");
    out[i] = g[z[i][0] * M2 + z[i][1] * M + z[i][2]] / double(M2 * M);
  }
  return out;
}

namespace {

// Gamma(s, x) for s = 1/2 - k, k = 0..K, by downward recurrence from Gamma(1/2, x).
std::vector<double> upper_gamma_half(int K, double x) {
  std::vector<double> g(K + 1);
  double s = 0.5;
  g[0] = std::sqrt(kPi) * std::erfc(std::sqrt(x));
  for (int k = 1; k <= K; ++k) {
    s -= 1.0;
    g[k] = (g[k - 1] - std::pow(x, s) * std::exp(-x)) / s;
  }
  return g;
}

} // namespace

std::vector<double> laplace_kernels(double w, const std::vector<Triple> &z) {
  if (w > 0)
    throw DomainError("Laplace route needs omega <= 0");
  int nmax = 0;
  for (const auto &t : z)
    nmax = std::max(nmax, t[2]);
  const double a = -w;
  const double t_cap = std::max(2000.0, 1.5 * nmax * nmax + 300.0);
  double t_end = t_cap;
  bool tail = true;
  if (a > 0 && 40.0 / a <= t_cap) {
    t_end = 40.0 / a;
    tail = false;
  }
  const auto &gl = gauss_legendre(30);
  std::vector<double> out(z.size(), 0.0);
  std::vector<double> iv(nmax + 1);
  double lo = 0.0, h = a > 0 ? std::min(1.0, 1.0 / a) : 1.0;
  while (lo < t_end) {
    double hi = std::min(lo + h, t_end);
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      double t = mid + half * gl.x[q];
      double wt = half * gl.w[q] * std::exp(w * t);
      scaled_bessel_i_sequence(nmax, 2 * t, iv.data());
      for (std::size_t i = 0; i < z.size(); ++i)
        out[i] += wt * iv[z[i][0]] * iv[z[i][1]] * iv[z[i][2]];
    }
    lo = hi;
    h = lo;
  }
  if (tail) {
    // prod_j e^{-x}I_{n_j}(x) at x = 2t as (4 pi t)^{-3/2} sum_k b_k t^{-k}
    const int K = 10;
    std::vector<double> gam;
    if (a > 0)
      gam = upper_gamma_half(K, a * t_end);
    for (std::size_t i = 0; i < z.size(); ++i) {
      std::vector<double> b(K, 0.0);
      b[0] = 1.0;
      for (int j = 0; j < 3; ++j) {
        auto c = bessel_i_asymptotic_coeffs(z[i][j], K);
        std::vector<double> nb(K, 0.0);
        for (int p = 0; p < K; ++p)
          for (int q = 0; p + q < K; ++q)
            nb[p + q] += b[p] * ((q & 1) ? -1.0 : 1.0) * c[q] * std::pow(0.5, q);
        b = nb;
      }
      double s = 0.0;
      for (int k = 0; k < K; ++k) {
        double integral = a > 0 ? std::pow(a, 0.5 + k) * gam[k + 1]
                                : std::pow(t_end, -0.5 - k) / (0.5 + k);
        s += b[k] * integral;
      }
      out[i] += s * std::pow(4 * kPi, -1.5);
    }
  }
  return out;
}

Eigen::MatrixXcd time_domain_kernels(const std::vector<cplx> &omegas,
                                     const std::vector<Triple> &z) {
  const std::size_t nw = omegas.size(), nz = z.size();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nw, nz);
  if (nw == 0 || nz == 0)
    return out;
  int nmax = 0;
  for (const auto &t : z)
    nmax = std::max(nmax, t[2]);
  double fmax = 0.0;
  std::vector<double> tend(nw);
  for (std::size_t k = 0; k < nw; ++k) {
    if (!(omegas[k].imag() > 0))
      throw DomainError("time-domain route needs Im omega > 0");
    tend[k] = 34.0 / omegas[k].imag();
    fmax = std::max(fmax, std::abs(omegas[k].real() - 6.0) + 6.0);
  }
  // process omegas in order of decreasing horizon so the active set is a prefix
  std::vector<std::size_t> order(nw);
  for (std::size_t k = 0; k < nw; ++k)
    order[k] = k;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return tend[i] > tend[j]; });
  const double T = tend[order[0]];
  const double h = std::min(1.0, 12.0 / fmax);
  const auto &gl = gauss_legendre(16);

  std::vector<double> accr(nw * nz, 0.0), acci(nw * nz, 0.0);
  std::vector<double> J(nmax + 1), prod(nz);
  std::size_t active = nw;
  const long npanels = long(std::ceil(T / h));
  for (long p = 0; p < npanels; ++p) {
    double lo = p * h;
    while (active > 0 && tend[order[active - 1]] <= lo)
      --active;
    if (active == 0)
      break;
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      double t = lo + 0.5 * h * (1.0 + gl.x[q]);
      double wq = 0.5 * h * gl.w[q];
      bessel_j_sequence(nmax, 2 * t, J.data());
      for (std::size_t i = 0; i < nz; ++i)
        prod[i] = J[z[i][0]] * J[z[i][1]] * J[z[i][2]];
      for (std::size_t a = 0; a < active; ++a) {
        std::size_t k = order[a];
        cplx ph = wq * std::exp(cplx(0.0, 1.0) * (omegas[k] - 6.0) * t);
        double fr = ph.real(), fi = ph.imag();
        double *ar = &accr[k * nz], *ai = &acci[k * nz];
        for (std::size_t i = 0; i < nz; ++i) {
          ar[i] += fr * prod[i];
          ai[i] += fi * prod[i];
        }
      }
    }
  }
  static const cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (std::size_t k = 0; k < nw; ++k)
    for (std::size_t i = 0; i < nz; ++i) {
      int l1 = z[i][0] + z[i][1] + z[i][2];
      out(k, i) = cplx(0, 1) * ipow[(l1 + 4) % 4 == 0 ? 0 : l1 % 4] *
                  cplx(accr[k * nz + i], acci[k * nz + i]);
    }
  return out;
}

} // namespace dlat
