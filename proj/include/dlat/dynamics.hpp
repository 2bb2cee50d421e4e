#pragma once

#include "dlat/lattice.hpp"
#include "dlat/perturbed.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dlat {

struct MethodInfo {
  std::string method;
  double step = 0.0;     // largest time step actually taken
  int max_degree = 0;    // Chebyshev degree, 0 for steppers
  long matvecs = 0;
  double charge_drift = 0.0; // max relative |‖psi(t)‖ - ‖psi0‖|
  double energy_drift = 0.0; // max relative drift of the conserved energy
  double spectrum_lo = 0.0, spectrum_hi = 0.0;
};

template <class State> struct TrajectoryOf {
  std::vector<double> times;
  std::vector<State> states;
  MethodInfo method;
};

struct KGState {
  GridFunction psi, pi;
  double mass = 1.0;
};

using Trajectory = TrajectoryOf<GridFunction>;
using KGTrajectory = TrajectoryOf<KGState>;
using Observer = std::function<void(double, const GridFunction &)>;
using KGObserver = std::function<void(double, const KGState &)>;

/// e^{-i dt H} by Chebyshev expansion on [min(0, min V), 12 + max(0, max V)],
/// degree picked so the neglected Bessel tail is below `tail_tol`.
class ChebyshevPropagator {
public:
  ChebyshevPropagator(const LatticeBox &box, const Potential &V, double tail_tol = 1e-14);

  GridFunction step(const GridFunction &psi, double dt, MethodInfo *info = nullptr) const;
  double center() const { return c_; }
  double radius() const { return r_; }
  /// Expansion coefficients (2 - delta_k0)(-i)^k J_k(r dt), trimmed.
  std::vector<cplx> coefficients(double dt) const;
  /// Largest r*dt handled in one expansion before substepping.
  static constexpr double max_phase = 200.0;

private:
  LatticeBox box_;
  Potential V_;
  double tol_, c_, r_;
};

/// Streams psi(t) for each requested time (times nondecreasing, >= 0).
MethodInfo evolve_schrodinger(const Potential &V, const GridFunction &psi0,
                              const std::vector<double> &times, const Observer &obs);
Trajectory evolve_schrodinger(const Potential &V, const GridFunction &psi0,
                              const std::vector<double> &times);

struct KGOptions {
  /// leapfrog steps never exceed this fraction of 1/sqrt(12 + m^2 + max|V|)
  double cfl = 0.5;
  int ritz_iterations = 200;
};

/// -Delta + m^2 + V applied on a periodic box.
GridFunction kg_operator(const Potential &V, double mass, const GridFunction &u);
/// ‖pi‖^2 + <psi, (-Delta + m^2 + V) psi>
double kg_energy(const Potential &V, const KGState &s);
/// Smallest Lanczos Ritz value of -Delta + m^2 + V on the box.
double smallest_ritz_value(const Potential &V, double mass, const LatticeBox &box,
                           int iterations = 200, std::uint64_t seed = 7);
/// max over theta of |grad sqrt(m^2 + phi)|
double kg_max_group_velocity(double mass);

MethodInfo evolve_klein_gordon(const Potential &V, const KGState &s0,
                               const std::vector<double> &times, const KGObserver &obs,
                               const KGOptions &opt = {});
KGTrajectory evolve_klein_gordon(const Potential &V, const KGState &s0,
                                 const std::vector<double> &times, const KGOptions &opt = {});

struct DecayCurve {
  std::vector<double> times, values;
  double sigma = 0.0;
  double fit_slope = std::numeric_limits<double>::quiet_NaN();
  double fit_stderr = std::numeric_limits<double>::quiet_NaN();
  std::pair<double, double> fit_window{0.0, 0.0};
  int fit_points = 0;
  double cutoff = 0.0;   // wrap-around time actually used
  bool in_hypothesis = true;
};

struct FitResult {
  double slope = 0.0, stderr_ = 0.0;
  int points = 0;
};

/// OLS of log value on log t over samples with t in [t0, t1].
FitResult fit_decay_exponent(const std::vector<double> &times, const std::vector<double> &values,
                             std::pair<double, double> window);

constexpr double schrodinger_vmax = 3.4641016151377544; // 2 sqrt 3

/// Time for a front moving at vmax to cover half the torus, side / (2 vmax).
double wraparound_cutoff(const LatticeBox &box, double vmax = schrodinger_vmax);

struct DecayOptions {
  double t_fit_min = 5.0;
  double t_fit_max = std::numeric_limits<double>::infinity();
  double vmax = schrodinger_vmax;
  double hypothesis_sigma = 5.5;
};

/// Fits a recorded curve inside [t_fit_min, min(t_fit_max, cutoff)].
/// Throws BoxTooSmall when fewer than 8 samples survive.
DecayCurve make_decay_curve(std::vector<double> times, std::vector<double> values, double sigma,
                            const LatticeBox &box, const DecayOptions &opt = {});

/// ‖psi(t) - sum_j e^{-i t mu_j} <u_j, psi0> u_j‖ in l^2_{-sigma}.
DecayCurve dispersive_remainder(const Trajectory &traj, const std::vector<EigenPair> &pairs,
                                double sigma, const DecayOptions &opt = {});
/// Same measurement streamed, without storing the trajectory.
DecayCurve measure_dispersive_decay(const Potential &V, const GridFunction &psi0,
                                    const std::vector<EigenPair> &pairs,
                                    const std::vector<double> &times, double sigma,
                                    const DecayOptions &opt = {}, MethodInfo *info = nullptr);

/// Vector-level stand-in for the B(sigma, -sigma) decay: pointwise max of the
/// remainder over `count` random states normalized in l^2_sigma.
DecayCurve sampled_operator_decay(const Potential &V, const LatticeBox &box,
                                  const std::vector<EigenPair> &pairs,
                                  const std::vector<double> &times, double sigma, int count,
                                  std::uint64_t seed, const DecayOptions &opt = {});

/// Frequency (>= 0) of the largest peak of |sum_n a_n e^{i nu t_n}| on a
/// uniform time grid, with 8x zero padding.
double dominant_frequency(const std::vector<double> &times, const std::vector<cplx> &a,
                          double nu_max);

struct ScatteringOptions {
  double panel = 0.25;   // quadrature panel length (<= 0.25)
  DecayOptions fit;
  std::vector<double> crosscheck_times{5.0, 10.0};
};

struct ScatteringResult {
  explicit ScatteringResult(GridFunction p) : phi_plus(std::move(p)) {}
  GridFunction phi_plus;
  DecayCurve remainder;
  double tail_bound = 0.0;
  bool tail_converged = true;
  std::string diagnostic;
  std::vector<double> integrand_times, integrand_norms; // ‖V P^c psi(tau)‖
  double integral_bound = 0.0;   // \int_0^tmax ‖V P^c psi‖
  /// (t, ‖P^c psi(t) - U0(t) phi_plus‖) computed from full evolutions
  std::vector<std::pair<double, double>> crosscheck;
};

/// phi_+ = P^c psi0 - i \int_0^tmax U0(-tau) V P^c psi(tau) d tau and the
/// remainder ‖P^c psi(t) - U0(t) phi_+‖ on panel boundaries.
ScatteringResult scattering_state(const Potential &V, const GridFunction &psi0,
                                  const std::vector<EigenPair> &pairs, double t_max, double sigma,
                                  const ScatteringOptions &opt = {});

/// Uniform grid 0, dt, .., t_max (t_max included when it falls on the grid).
std::vector<double> time_grid(double t_max, double dt);

} // namespace dlat
