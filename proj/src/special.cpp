#include "dlat/special.hpp"

#include "dlat/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

namespace dlat {

void bessel_j_sequence(int nmax, double x, double *out) {
  if (x == 0.0) {
    out[0] = 1.0;
    for (int n = 1; n <= nmax; ++n)
      out[n] = 0.0;
    return;
  }
  out[0] = std::cyl_bessel_j(0.0, x);
  if (nmax == 0)
    return;
  out[1] = std::cyl_bessel_j(1.0, x);
  // forward recurrence is stable up to n ~ x
  int nf = std::min(nmax, int(x));
  for (int n = 1; n < nf; ++n)
    out[n + 1] = (2.0 * n / x) * out[n] - out[n - 1];
  if (nf >= nmax)
    return;
  // Miller: backward from well above max(nmax, x), normalized on the highest
  // order already known from the forward pass (or J_0 when none is).
  double big = std::max<double>(nmax, x);
  int start = int(big + 20 + 10 * std::cbrt(big)) + 1;
  int anchor = std::max(nf, 1);
  double jp1 = 0.0, j = 1e-300;
  std::vector<double> tmp(nmax + 1);
  for (int n = start; n >= 1; --n) {
    double jm1 = (2.0 * n / x) * j - jp1;
    jp1 = j;
    j = jm1;
    if (n - 1 <= nmax)
      tmp[n - 1] = j;
    // rescale to dodge overflow
    if (std::abs(j) > 1e250) {
      j *= 1e-250;
      jp1 *= 1e-250;
      for (int k = n - 1; k <= nmax; ++k)
        tmp[k] *= 1e-250;
    }
  }
  // normalize by whichever anchor value is larger in magnitude
  int ref = std::abs(out[anchor]) > std::abs(out[anchor - 1]) ? anchor : anchor - 1;
  double scale = out[ref] / tmp[ref];
  if (!std::isfinite(scale) || tmp[ref] == 0.0) {
    double s = tmp[0];
    for (int k = 2; k <= nmax; k += 2)
      s += 2 * tmp[k];
    scale = 1.0 / s;
  }
  for (int n = nf + 1; n <= nmax; ++n)
    out[n] = tmp[n] * scale;
}

std::vector<double> bessel_j_sequence(int nmax, double x) {
  std::vector<double> r(nmax + 1);
  bessel_j_sequence(nmax, x, r.data());
  return r;
}

std::vector<double> bessel_i_asymptotic_coeffs(int n, int terms) {
  std::vector<double> a(terms);
  double mu = 4.0 * n * n, c = 1.0;
  for (int k = 0; k < terms; ++k) {
    a[k] = c;
    double j = 2.0 * k + 1;
    c *= (mu - j * j) / (8.0 * (k + 1));
  }
  return a;
}

namespace {

// Asymptotic series; valid when x >> n^2.
double scaled_i_asymptotic(int n, double x) {
  double mu = 4.0 * n * n;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    double j = 2.0 * k - 1;
    term *= -(mu - j * j) / (8.0 * k * x);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum))
      break;
  }
  return sum / std::sqrt(2 * std::numbers::pi * x);
}

} // namespace

void scaled_bessel_i_sequence(int nmax, double x, double *out) {
  if (x == 0.0) {
    out[0] = 1.0;
    for (int n = 1; n <= nmax; ++n)
      out[n] = 0.0;
    return;
  }
  if (x < 600.0) {
    double e = std::exp(-x);
    for (int n = 0; n <= nmax; ++n)
      out[n] = std::cyl_bessel_i(double(n), x) * e;
    return;
  }
  if (x >= 3.0 * nmax * nmax + 600.0) {
    for (int n = 0; n <= nmax; ++n)
      out[n] = scaled_i_asymptotic(n, x);
    return;
  }
  // Miller, normalized on the asymptotic I_0 (fine for x >= 600)
  int start = nmax + int(std::sqrt(80.0 * x)) + 20;
  double ip1 = 0.0, i = 1e-300;
  std::vector<double> tmp(nmax + 1);
  for (int n = start; n >= 1; --n) {
    double im1 = (2.0 * n / x) * i + ip1;
    ip1 = i;
    i = im1;
    if (n - 1 <= nmax)
      tmp[n - 1] = i;
    if (i > 1e250) {
      i *= 1e-250;
      ip1 *= 1e-250;
      for (int k = n - 1; k <= nmax; ++k)
        tmp[k] *= 1e-250;
    }
  }
  double scale = scaled_i_asymptotic(0, x) / tmp[0];
  for (int n = 0; n <= nmax; ++n)
    out[n] = tmp[n] * scale;
}

double scaled_bessel_i(int n, double x) {
  std::vector<double> r(n + 1);
  scaled_bessel_i_sequence(n, x, r.data());
  return r[n];
}

namespace {

template <int N> QuadRule make_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto &a = G::abscissa();
  const auto &w = G::weights();
  QuadRule r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(w[i]);
      continue;
    }
    r.x.push_back(-a[i]);
    r.w.push_back(w[i]);
    r.x.push_back(a[i]);
    r.w.push_back(w[i]);
  }
  return r;
}

} // namespace

const QuadRule &gauss_legendre(int n) {
  static const QuadRule r8 = make_rule<8>(), r12 = make_rule<12>(), r16 = make_rule<16>(),
                        r20 = make_rule<20>(), r30 = make_rule<30>();
  switch (n) {
  case 8: return r8;
  case 12: return r12;
  case 16: return r16;
  case 20: return r20;
  case 30: return r30;
  default: throw InvalidInput("no Gauss-Legendre rule with " + std::to_string(n) + " nodes");
  }
}

} // namespace dlat
