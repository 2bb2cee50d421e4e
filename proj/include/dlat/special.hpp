#pragma once

#include <vector>

namespace dlat {

/// J_0(x) .. J_nmax(x), x >= 0. Forward recurrence from std J_0, J_1 where it
/// is stable (n < x), Miller's backward recurrence otherwise.
void bessel_j_sequence(int nmax, double x, double *out);
std::vector<double> bessel_j_sequence(int nmax, double x);

/// e^{-x} I_n(x) for n = 0..nmax, x >= 0.
void scaled_bessel_i_sequence(int nmax, double x, double *out);
double scaled_bessel_i(int n, double x);

/// Coefficients a_k(n) of e^{-x} I_n(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k / x^k.
std::vector<double> bessel_i_asymptotic_coeffs(int n, int terms);

struct QuadRule {
  std::vector<double> x, w;
};

/// Gauss-Legendre rule on [-1, 1]; n in {8, 12, 16, 20, 30}.
const QuadRule &gauss_legendre(int n);

} // namespace dlat
