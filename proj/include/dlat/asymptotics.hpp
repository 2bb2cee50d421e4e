#pragma once

#include "dlat/free_operator.hpp"
#include "dlat/lattice.hpp"
#include "dlat/perturbed.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace dlat {

struct LapReport {
  double omega = 0.0;
  double sigma = 0.0;
  std::vector<double> cauchy_differences; // ||R(eps_k) - R(eps_{k+1})|| in B(sigma, -sigma)
  bool converged = false;
  double extrapolated_norm = 0.0;
  /// ||R_lim - R_lim'|| with R_lim' extrapolated without the smallest eps
  double extrapolation_gap = 0.0;
  /// ||R(w+i0) - R(w-i0)||, only when both sides were requested.
  double side_gap = -1.0;
  bool in_hypothesis = true; // sigma > 3/2
  std::string note;
};

struct LapOptions {
  bool both_sides = false;
  OperatorNormOptions norm;
  /// final gap must be below this fraction of the extrapolated norm
  double gap_fraction = 1e-4;
};

/// R(w + i eps) over the eps schedule, with the Z^3 kernel compressed to the
/// box (and V folded in through the Woodbury reduction).
LapReport lap_convergence_study(double omega, double sigma, const Potential &V,
                                const LatticeBox &box, const QuadratureSpec &q = {},
                                const LapOptions &opt = {});

using Probe = std::pair<Site, Site>;

/// All (x, y) with |x|_inf, |y|_inf <= r.
std::vector<Probe> probe_cube(int r);

struct RaySampling {
  double base = 0.0;
  cplx direction;
  std::vector<double> magnitudes;
  std::vector<Probe> probes;
  Eigen::MatrixXcd values; // magnitudes x probes
};

bool is_elliptic(double base);
cplx default_direction(double base);
/// sqrt(w - base) on the branch of the sector used at that base.
cplx sector_sqrt(double base, cplx d);

/// R(base + direction * m; x, y) for each magnitude and probe.
RaySampling resolvent_ray_samples(double base, const Potential &V, const std::vector<Probe> &probes,
                                  const std::vector<double> &magnitudes,
                                  const QuadratureSpec &q = {}, cplx direction = 0.0);

enum class PuiseuxModel { elliptic, hyperbolic };
std::string to_string(PuiseuxModel m);

struct PuiseuxFit {
  PuiseuxModel model = PuiseuxModel::elliptic;
  std::vector<cplx> c0, c_half, c1;
  double residual_norm = 0.0;
  /// log-log slope of |value - c0| against the magnitude, first probe
  double exponent_estimate = 0.0;
  std::vector<double> exponents; // one per probe
};

/// Least squares on {1, s, s^2}, s = sqrt(w - base) on the sector branch.
PuiseuxFit puiseux_fit(const RaySampling &samples, PuiseuxModel model);

struct CrosscheckRecord {
  std::vector<Probe> probes;
  std::vector<cplx> fitted;  // c0 of the perturbed ray fit
  std::vector<cplx> direct;  // Woodbury reduction over the fitted free constants
  double max_relative_difference = 0.0;
  double smin = 0.0;
};

/// Two routes to the leading constant of R at a critical value.
CrosscheckRecord perturbed_constant_crosscheck(const Potential &V, double base,
                                               const QuadratureSpec &q = {},
                                               std::vector<Probe> probes = {},
                                               std::vector<double> magnitudes = {});

/// 0.1 * 2^{-k}, k = 0..9
std::vector<double> default_magnitudes();

struct BlowUpRates {
  std::vector<double> magnitudes;
  std::vector<double> d1, d2;  // |dR/dw|, |d^2R/dw^2| by central differences along the ray
  double d1_slope = 0.0, d2_slope = 0.0; // log-log slopes against the magnitude
  double max_abs = 0.0;                  // largest |R| seen
};

/// Central differences of R(base + d m, probe) with step rel_step * m.
/// Needs m (1 + rel_step) <= 0.1 for every magnitude.
BlowUpRates differentiated_blowup_rates(double base, const Potential &V, const Probe &probe,
                                        const std::vector<double> &magnitudes,
                                        const QuadratureSpec &q = {}, double rel_step = 0.05);

/// I_l(w) = \int_0^delta (pi i - log((1-s)/(1+s))) r^l / sqrt(r - w) dr,
/// s = sqrt((r - w) / 2r), principal branches, by adaptive Gauss-Legendre.
cplx appendix_a_integral(int l, cplx omega, double delta, double tol = 1e-13);

struct AppendixAFit {
  int l = 0;
  double delta = 0.0;
  std::vector<double> y;
  std::vector<cplx> values;
  cplx constant;                    // coefficient of w^l sqrt(w)
  std::vector<cplx> analytic;       // coefficients of 1, w, ..
  double residual_norm = 0.0;
  std::vector<cplx> scaled_remainder; // (I_l - analytic fit) / (w^l sqrt w)
};

/// Samples I_l at w = i y, y log-spaced in [y_min, y_max], and fits
/// {1, w, .., w^{l+1}} plus w^l sqrt(w) (for l = 0: {1, sqrt w, w}).
AppendixAFit appendix_a_fit(int l, double delta, double y_min, double y_max, int samples = 25);

} // namespace dlat
