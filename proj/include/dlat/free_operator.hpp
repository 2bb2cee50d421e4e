#pragma once

#include "dlat/kernel_engine.hpp"
#include "dlat/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace dlat {

enum class Side { upper, lower, off_axis };

struct SpectralPoint {
  cplx omega;
  Side side = Side::off_axis;

  static SpectralPoint off_axis(cplx w) { return {w, Side::off_axis}; }
  static SpectralPoint upper(double w) { return {w, Side::upper}; }
  static SpectralPoint lower(double w) { return {w, Side::lower}; }
  /// Throws InvalidInput when side and omega disagree.
  void validate() const;
};

enum class Extrapolation { none, richardson };

/// eps_k = 0.1 * 2^{-k}, k = 0..8
std::vector<double> default_epsilons();

struct QuadratureSpec {
  int M = 128;
  std::vector<double> epsilons = default_epsilons();
  Extrapolation extrapolation = Extrapolation::richardson;

  void validate() const;
  friend bool operator==(const QuadratureSpec &, const QuadratureSpec &) = default;
};

struct KernelBlock {
  std::vector<Site> rows, cols;
  Eigen::MatrixXcd values;
  SpectralPoint at;
};

double symbol(double t1, double t2, double t3);
double symbol(const std::array<double, 3> &theta);
std::array<double, 3> symbol_gradient(const std::array<double, 3> &theta);
std::vector<double> critical_values();

/// Richardson step of the given order on the tail of a geometric eps sequence.
cplx richardson(const std::vector<cplx> &seq, const std::vector<double> &eps, double order);

/// Limit of R0(w + i eps, z) over the eps schedule.
struct BoundaryValue {
  cplx value;
  bool converged = true;
  std::vector<cplx> sequence;    // one per eps
  std::vector<double> differences; // |R_k - R_{k+1}|
};

/// Removes the eps dependence from a sequence sampled on the schedule. At the
/// hyperbolic points 4 and 8 the leading correction scales like sqrt(eps);
/// elsewhere like eps.
BoundaryValue extrapolate_boundary(double omega, std::vector<cplx> seq,
                                   const QuadratureSpec &q);

/// Boundary values at real omega in [0, 12] for many offsets; exact Laplace
/// values at the band edges 0 and 12.
std::vector<BoundaryValue> boundary_values(double omega, Side side,
                                           const std::vector<Triple> &z,
                                           const QuadratureSpec &q);

/// Kernel values for many offsets. Route: torus trapezoid when the kernel
/// decays fast enough for M (kappa*M >= 36), otherwise the Laplace (real
/// omega) or time-domain (complex omega) representation. Boundary points are
/// eps-regularized and extrapolated. Throws ConvergenceError when any
/// extrapolation fails.
std::vector<cplx> free_resolvent_kernels(const SpectralPoint &at, const std::vector<Site> &z,
                                         const QuadratureSpec &q = {});
std::vector<cplx> free_resolvent_kernels(const SpectralPoint &at, const std::vector<Triple> &z,
                                         const QuadratureSpec &q = {});
cplx free_resolvent_kernel(const SpectralPoint &at, const Site &z, const QuadratureSpec &q = {});

KernelBlock kernel_block(const SpectralPoint &at, const std::vector<Site> &rows,
                         const std::vector<Site> &cols, const QuadratureSpec &q = {});

/// Dense table z in [-R, R]^3 of an even, octahedrally symmetric kernel.
class KernelTable {
public:
  KernelTable() = default;
  KernelTable(int R, const std::vector<Triple> &triples, const std::vector<cplx> &values);

  int R() const { return R_; }
  cplx operator()(const Site &z) const;
  const std::vector<cplx> &values() const { return v_; }
  /// a*this + b*other
  KernelTable combine(cplx a, const KernelTable &other, cplx b) const;

private:
  int R_ = -1;
  std::vector<cplx> v_;
};

KernelTable make_kernel_table(const SpectralPoint &at, int R, const QuadratureSpec &q = {});

/// One table per eps of the schedule plus the extrapolated limit.
struct BoundaryTables {
  std::vector<KernelTable> per_eps;
  KernelTable limit;
  /// limit extrapolated without the smallest eps, to measure how settled it is
  KernelTable previous_limit;
  bool converged = true;
};
BoundaryTables make_boundary_tables(double omega, Side side, int R, const QuadratureSpec &q = {});

/// The Z^3 kernel restricted to the sites of a box: (Kf)(x) = sum_y K(x-y) f(y),
/// applied by zero-padded FFT convolution.
class CompressedOperator {
public:
  CompressedOperator(const LatticeBox &box, const KernelTable &K);
  GridFunction apply(const GridFunction &f) const;
  const LatticeBox &box() const { return box_; }

private:
  LatticeBox box_;
  int N_;
  std::vector<cplx> khat_;
};

/// phi on the dual grid of a periodic box, indexed like torus_transform output.
std::vector<double> symbol_grid(const LatticeBox &box);

/// Column R0_box(w) delta_0 of the box's own (periodic) resolvent.
GridFunction periodic_kernel_column(const LatticeBox &box, cplx omega);

/// Off-axis: Fourier-diagonal on the box, f_hat / (phi - w). Boundary points:
/// the extrapolated Z^3 kernel compressed to the box (the finite torus has a
/// discrete spectrum, so eps -> 0 on it has no limit).
GridFunction free_resolvent_apply(const SpectralPoint &at, const GridFunction &f,
                                  const QuadratureSpec &q = {});

/// e^{-it phi} in Fourier space.
GridFunction free_propagator(const GridFunction &psi0, double t);

} // namespace dlat
