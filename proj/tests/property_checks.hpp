#pragma once
// Property checks shared by the standalone property binary and the
// acceptance runner.

#include "dlat/dynamics.hpp"
#include "dlat/free_operator.hpp"
#include "dlat/lattice.hpp"
#include "dlat/perturbed.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

namespace props {

using dlat::cplx;
using dlat::GridFunction;
using dlat::LatticeBox;
using dlat::Potential;
using dlat::Site;

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline std::string fmt(const char *f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

inline Potential random_potential(std::mt19937_64 &rng, int n_sites, int reach, double vmin,
                                  double vmax) {
  std::uniform_int_distribution<int> pos(-reach, reach);
  std::uniform_real_distribution<double> val(vmin, vmax);
  std::vector<std::pair<Site, double>> e;
  while (int(e.size()) < n_sites) {
    Site s{pos(rng), pos(rng), pos(rng)};
    if (std::none_of(e.begin(), e.end(), [&](auto &p) { return p.first == s; }))
      e.push_back({s, val(rng)});
  }
  return Potential(e);
}

/// ‖e^{-itH} psi‖ = ‖psi‖ for random real V and random states.
inline Check unitarity() {
  double worst = 0.0;
  std::mt19937_64 rng(11);
  LatticeBox box(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto V = random_potential(rng, 1 + trial % 4, 3, -8.0, 8.0);
    auto psi = GridFunction::random(box, 100 + trial);
    dlat::ChebyshevPropagator prop(box, V);
    for (double t : {0.5, 7.0, 40.0}) {
      auto out = prop.step(psi, t);
      worst = std::max(worst, std::abs(dlat::norm(out) - dlat::norm(psi)) / dlat::norm(psi));
    }
  }
  return {"unitarity", worst < 1e-10, fmt("max relative norm change %.3e (tol 1e-10)", worst)};
}

/// <u, Delta v> = <Delta u, v> on periodic and zero boxes.
inline Check laplacian_self_adjoint() {
  double worst = 0.0;
  for (auto b : {dlat::Boundary::periodic, dlat::Boundary::zero})
    for (int L : {3, 6}) {
      LatticeBox box(L, b);
      for (int k = 0; k < 5; ++k) {
        auto u = GridFunction::random(box, 7 * k + L), v = GridFunction::random(box, 7 * k + L + 1);
        cplx a = dlat::dot(u, dlat::apply_discrete_laplacian(v));
        cplx c = dlat::dot(dlat::apply_discrete_laplacian(u), v);
        worst = std::max(worst, std::abs(a - c) / (dlat::norm(u) * dlat::norm(v)));
      }
    }
  return {"laplacian self-adjointness", worst < 1e-12, fmt("max relative asymmetry %.3e (tol 1e-12)", worst)};
}

inline Check fourier_roundtrip() {
  double worst = 0.0;
  for (int L : {2, 5, 8, 16}) {
    LatticeBox box(L);
    auto u = GridFunction::random(box, L);
    auto back = dlat::torus_transform(dlat::torus_transform(u, dlat::Direction::forward),
                                      dlat::Direction::inverse);
    back -= u;
    worst = std::max(worst, dlat::norm(back) / dlat::norm(u));
  }
  return {"Fourier roundtrip", worst < 1e-12, fmt("max relative error %.3e (tol 1e-12)", worst)};
}

inline Check projection_idempotent() {
  LatticeBox box(8);
  Potential V({{{0, 0, 0}, -10.0}, {{1, 0, 0}, -9.0}, {{0, 2, 0}, -6.0}});
  auto pairs = dlat::find_eigenvalues(V, 1e-12, box);
  auto f = GridFunction::random(box, 3);
  auto p1 = dlat::spectral_projection(pairs, f);
  auto p2 = dlat::spectral_projection(pairs, p1);
  p2 -= p1;
  double e = dlat::norm(p2) / std::max(dlat::norm(p1), 1e-300);
  return {"projection idempotence", !pairs.empty() && e < 1e-12,
          fmt("%g bound states, ‖P^2 f - P f‖/‖P f‖ = %.3e (tol 1e-12)", double(pairs.size()), e)};
}

/// R0(w, g z) = R0(w, z) for the 48 signed permutations g, on the FFT column
/// of the periodic box (a route that does not assume the symmetry).
inline Check octahedral_symmetry() {
  LatticeBox box(6);
  double worst = 0.0;
  for (cplx w : {cplx(-1.5, 0.0), cplx(3.0, 0.7), cplx(9.0, -0.4)}) {
    auto col = dlat::periodic_kernel_column(box, w);
    const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                                   {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    for (std::size_t i = 0; i < box.size(); ++i) {
      Site x = box.site(i);
      const int c[3] = {x.x1, x.x2, x.x3};
      for (const auto &p : perms)
        for (int sg = 0; sg < 8; ++sg) {
          Site y{(sg & 1 ? -1 : 1) * c[p[0]], (sg & 2 ? -1 : 1) * c[p[1]],
                 (sg & 4 ? -1 : 1) * c[p[2]]};
          worst = std::max(worst, std::abs(col.at(box.wrap(y)) - col[i]));
        }
    }
  }
  return {"octahedral kernel symmetry", worst < 1e-12, fmt("max deviation %.3e (tol 1e-12)", worst)};
}

/// log|u(x)| against |x| for a bound state is close to linear.
inline Check eigenfunction_decay() {
  LatticeBox box(10);
  auto pairs = dlat::find_eigenvalues(Potential::single({0, 0, 0}, -10.0), 1e-12, box);
  if (pairs.empty())
    return {"eigenfunction exponential decay", false, "no bound state found"};
  const auto &u = pairs.front().u;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < box.size(); ++i) {
    Site s = box.site(i);
    if (s.linf() == 0 || s.linf() > box.L() - 2)
      continue;
    double a = std::abs(u[i]);
    if (a > 1e-280) {
      x.push_back(std::sqrt(double(s.norm2())));
      y.push_back(std::log(a));
    }
  }
  const double n = double(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  double r2 = sxy * sxy / (sxx * syy), slope = sxy / sxx;
  return {"eigenfunction exponential decay", r2 > 0.9 && slope < 0,
          fmt("R^2 = %.4f, decay slope %.3f (need R^2 > 0.9)", r2, slope)};
}

inline std::vector<Check> run_all() {
  return {unitarity(), laplacian_self_adjoint(), fourier_roundtrip(), projection_idempotent(),
          octahedral_symmetry(), eigenfunction_decay()};
}

} // namespace props
