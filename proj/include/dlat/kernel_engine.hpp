#pragma once

// Evaluation routes for the free lattice Green function
//   R0(w, z) = (2 pi)^{-3} \int_{T^3} e^{-i theta.z} / (phi(theta) - w) d theta.
// Every route works on canonical triples (|z| sorted ascending), which is all
// the kernel depends on by the octahedral symmetry.

#include "dlat/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace dlat {

using Triple = std::array<int, 3>;

Triple canonical(const Site &z);
/// All canonical triples with entries <= R.
std::vector<Triple> canonical_triples(int R);

/// Decay rate of the kernel, a proxy for how far the integrand's poles sit
/// from the real torus. Zero on the spectrum [0, 12].
double kappa_estimate(cplx omega);

/// Trapezoid rule on an M^3 torus grid, one sum per z.
std::vector<cplx> trapezoid_kernels(cplx omega, const std::vector<Triple> &z, int M);
/// Same rule, all z at once through one FFT of the sampled integrand.
/// Aliasing error ~ exp(-kappa (M - |z|)).
std::vector<cplx> trapezoid_kernels_fft(cplx omega, const std::vector<Triple> &z, int M);

/// Real omega <= 0: R0 = \int_0^inf e^{w t} prod_j e^{-2t} I_{z_j}(2t) dt.
std::vector<double> laplace_kernels(double omega, const std::vector<Triple> &z);

/// Im omega > 0 for every entry:
/// R0 = i \int_0^inf e^{i(w-6)t} i^{|z|_1} prod_j J_{z_j}(2t) dt,
/// truncated where e^{-Im(w) t} < 2e-15. Rows follow omegas, columns triples.
Eigen::MatrixXcd time_domain_kernels(const std::vector<cplx> &omegas,
                                     const std::vector<Triple> &z);

} // namespace dlat
