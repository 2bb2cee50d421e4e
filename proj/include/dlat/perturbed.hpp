#pragma once

#include "dlat/free_operator.hpp"
#include "dlat/lattice.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dlat {

/// G[a][b] = R0(w, s_a - s_b) over the support of V.
struct SupportGram {
  std::vector<Site> sites;
  Eigen::MatrixXcd G;
  SpectralPoint at;
};

SupportGram support_gram(const SpectralPoint &at, const Potential &V, const QuadratureSpec &q = {});

/// Smallest singular value of I + G diag(V).
double woodbury_smin(const Eigen::MatrixXcd &G, const Potential &V);

/// u = R(w) f with R = (H0 + V - w)^{-1}, through the |supp V|-dimensional
/// system (I + G diag V) c = (R0 f)|_supp. On a periodic box and off-axis w,
/// G is taken from the box's own periodic kernel so that (H - w)u = f holds on
/// the torus; at boundary points the extrapolated Z^3 kernel is compressed to
/// the box.
GridFunction apply_resolvent(const SpectralPoint &at, const Potential &V, const GridFunction &f,
                             const QuadratureSpec &q = {});

/// Kernel entries R(x, y) of the perturbed resolvent from free kernel values.
std::vector<cplx> perturbed_kernel_entries(const Potential &V,
                                           const std::vector<std::pair<Site, Site>> &probes,
                                           const std::function<cplx(const Site &)> &R0);
/// Offsets whose free kernel values perturbed_kernel_entries will ask for.
std::vector<Site> perturbed_kernel_offsets(const Potential &V,
                                           const std::vector<std::pair<Site, Site>> &probes);

struct EigenPair {
  double mu = 0.0;
  GridFunction u;
  int multiplicity = 1;
};

/// Number of eigenvalues of H = -Delta + V on Z^3 strictly below mu < 0:
/// the negative inertia of I + L^T V L with L L^T = G(mu).
int eigenvalue_count_below(const Potential &V, double mu);

/// Default search intervals: [-100, -tol] and [12 + tol, 100], widened to
/// cover the whole numerical range of H.
std::vector<std::pair<double, double>> default_search_intervals(const Potential &V, double tol);

/// Bound states of H outside [0, 12]. Eigenvalues are bracketed by bisection on
/// the eigenvalue count; eigenfunctions u = -R0_box(mu) V c are built on `box`.
/// One EigenPair per eigenfunction; degenerate levels are orthonormalized.
std::vector<EigenPair> find_eigenvalues(const Potential &V,
                                        const std::vector<std::pair<double, double>> &search,
                                        double tol, const LatticeBox &box);
std::vector<EigenPair> find_eigenvalues(const Potential &V, double tol, const LatticeBox &box);

/// sum_j <u_j, f> u_j. Throws ValidationError unless the u_j are orthonormal.
GridFunction spectral_projection(const std::vector<EigenPair> &pairs, const GridFunction &f);

enum class Verdict { generic, degenerate, inconclusive };
std::string to_string(Verdict v);

struct GenericityEntry {
  double omega = 0.0;
  double smin = 1.0;
  double condition = 1.0;
  bool extrapolation_ok = true;
  std::string note;
};

struct GenericityReport {
  std::array<GenericityEntry, 4> entries;
  Verdict verdict = Verdict::generic;
  static constexpr double generic_threshold = 1e-6;
  static constexpr double degenerate_threshold = 1e-10;
};

Verdict classify(double smin);

/// s_min of I + G(w_k + i0) diag(V) at the four critical values (the -i0 side
/// is the complex conjugate for real V and has the same singular values).
GenericityReport genericity_check(const Potential &V, const QuadratureSpec &q = {});

} // namespace dlat
