#include "dlat/asymptotics.hpp"
#include "dlat/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace dlat;

namespace {

const double pi = std::numbers::pi;

double watson_half() {
  return std::sqrt(6.0) / (192 * pi * pi * pi) * std::tgamma(1.0 / 24) * std::tgamma(5.0 / 24) *
         std::tgamma(7.0 / 24) * std::tgamma(11.0 / 24);
}

std::vector<double> logspace(double hi, double lo, int n) {
  std::vector<double> m;
  for (int k = 0; k < n; ++k)
    m.push_back(hi * std::pow(lo / hi, double(k) / (n - 1)));
  return m;
}

RaySampling synthetic(double base, cplx a, cplx b, cplx c, std::vector<double> mags) {
  RaySampling s;
  s.base = base;
  s.direction = default_direction(base);
  s.magnitudes = mags;
  s.probes = {{{0, 0, 0}, {0, 0, 0}}};
  s.values.resize(Eigen::Index(mags.size()), 1);
  for (std::size_t k = 0; k < mags.size(); ++k) {
    cplx r = sector_sqrt(base, s.direction * mags[k]);
    s.values(Eigen::Index(k), 0) = a + b * r + c * r * r;
  }
  return s;
}

} // namespace

TEST_CASE("Puiseux fit recovers synthetic coefficients") {
  const cplx a(0.25, 0.1), b(0.0, 0.08), c(-0.3, 0.2);
  auto fit = puiseux_fit(synthetic(0.0, a, b, c, default_magnitudes()), PuiseuxModel::elliptic);
  CHECK(std::abs(fit.c0[0] - a) < 1e-12);
  CHECK(std::abs(fit.c_half[0] - b) < 1e-11);
  CHECK(std::abs(fit.c1[0] - c) < 1e-10);
  CHECK(fit.residual_norm < 1e-12);
  auto pure = puiseux_fit(synthetic(0.0, a, b, 0.0, default_magnitudes()), PuiseuxModel::elliptic);
  CHECK(pure.exponent_estimate == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("Puiseux fit input checks") {
  const cplx a(1.0), b(0.1), c(0.0);
  CHECK_THROWS_AS(puiseux_fit(synthetic(0.0, a, b, c, logspace(0.1, 1e-3, 4)), PuiseuxModel::elliptic),
                  InvalidInput);
  CHECK_THROWS_AS(puiseux_fit(synthetic(0.0, a, b, c, logspace(0.1, 0.01, 8)), PuiseuxModel::elliptic),
                  InvalidInput);
  CHECK_THROWS_AS(puiseux_fit(synthetic(0.0, a, b, c, default_magnitudes()), PuiseuxModel::hyperbolic),
                  InvalidInput);
  CHECK_THROWS_AS(resolvent_ray_samples(2.0, Potential{}, probe_cube(0), default_magnitudes()),
                  InvalidInput);
  CHECK_THROWS_AS(resolvent_ray_samples(0.0, Potential{}, probe_cube(0), {0.2, 0.1}), InvalidInput);
  CHECK_THROWS_AS(resolvent_ray_samples(0.0, Potential{}, probe_cube(0), {0.01, 0.1}), InvalidInput);
  CHECK_THROWS_AS(resolvent_ray_samples(0.0, Potential{}, probe_cube(0), default_magnitudes(), {}, 1.0),
                  DomainError);
  CHECK_THROWS_AS(resolvent_ray_samples(4.0, Potential{}, probe_cube(0), default_magnitudes(), {},
                                        cplx(0.0, -1.0)),
                  DomainError);
  CHECK(probe_cube(1).size() == 27 * 27);
}

TEST_CASE("free kernel near the lower band edge") {
  auto s = resolvent_ray_samples(0.0, Potential{}, probe_cube(0), default_magnitudes());
  auto fit = puiseux_fit(s, PuiseuxModel::elliptic);
  CHECK(std::abs(fit.c0[0] - watson_half()) < 1e-4);
  // continuum-like square root term i sqrt(w) / (4 pi)
  CHECK(std::abs(fit.c_half[0] - cplx(0.0, 1.0 / (4 * pi))) < 0.02 / (4 * pi));
  CHECK(fit.exponent_estimate == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("the leading constant does not depend on the ray direction") {
  auto a = puiseux_fit(resolvent_ray_samples(0.0, Potential{}, probe_cube(0), default_magnitudes()),
                       PuiseuxModel::elliptic);
  auto b = puiseux_fit(resolvent_ray_samples(0.0, Potential{}, probe_cube(0), default_magnitudes(), {},
                                             std::polar(1.0, 2.0)),
                       PuiseuxModel::elliptic);
  CHECK(std::abs(a.c0[0] - b.c0[0]) < 1e-4);
}

TEST_CASE("kernel stays bounded at a hyperbolic critical value") {
  auto s = resolvent_ray_samples(8.0, Potential{}, probe_cube(0), default_magnitudes());
  double lo = 1e300, hi = 0;
  for (Eigen::Index k = 0; k < s.values.rows(); ++k) {
    lo = std::min(lo, std::abs(s.values(k, 0)));
    hi = std::max(hi, std::abs(s.values(k, 0)));
  }
  CHECK(hi / lo < 1.5);
  CHECK_NOTHROW(puiseux_fit(s, PuiseuxModel::hyperbolic));
}

TEST_CASE("limiting absorption study diagnostics") {
  LatticeBox box(3, Boundary::zero);
  const Potential V = Potential::single({0, 0, 0}, -1.0);
  CHECK_THROWS_AS(lap_convergence_study(4.0, 2.0, V, box), DomainError);
  CHECK_THROWS_AS(lap_convergence_study(2.0, 2.0, Potential::single({9, 0, 0}, 1.0), box),
                  InvalidInput);
  LapOptions opt;
  opt.both_sides = true;
  auto rep = lap_convergence_study(2.0, 0.0, V, box, {}, opt);
  CHECK_FALSE(rep.in_hypothesis);
  CHECK_FALSE(rep.note.empty());
  CHECK(rep.cauchy_differences.size() == QuadratureSpec{}.epsilons.size() - 1);
  CHECK(rep.extrapolated_norm > 0);
  CHECK(rep.side_gap > 0);
}

TEST_CASE("two routes to the perturbed leading constant") {
  auto rec = perturbed_constant_crosscheck(Potential::single({0, 0, 0}, -1.0), 0.0);
  CHECK(rec.max_relative_difference < 1e-3);
  CHECK(rec.smin > 0.1);
  CHECK_THROWS_AS(perturbed_constant_crosscheck(Potential::single({0, 0, 0}, -1.0 / watson_half()), 0.0),
                  NonGenericError);
}

TEST_CASE("model integral input checks and convergence") {
  CHECK_THROWS_AS(appendix_a_integral(-1, cplx(0, 1e-3), 0.5), InvalidInput);
  CHECK_THROWS_AS(appendix_a_integral(0, cplx(0, -1e-3), 0.5), DomainError);
  CHECK_THROWS_AS(appendix_a_integral(0, cplx(0, 0.3), 0.5), DomainError);
  const cplx w(0.0, 1e-3);
  auto a = appendix_a_integral(0, w, 0.5, 1e-10);
  auto b = appendix_a_integral(0, w, 0.5, 5e-11);
  CHECK(std::abs(a - b) < 1e-9);
  CHECK(std::abs(appendix_a_integral(1, w, 0.5)) < 1.0);
}

TEST_CASE("model integral square-root coefficient") {
  auto fit = appendix_a_fit(0, 0.5, 1e-5, 1e-2, 25);
  CHECK(fit.y.size() == 25);
  // the fitted sqrt(w) coefficient sits at -2 pi sqrt 2
  CHECK(std::abs(fit.constant - cplx(-2 * pi * std::sqrt(2.0), 0.0)) < 2e-2);
  CHECK_THROWS_AS(appendix_a_fit(0, 0.5, 1e-5, 1e-2, 4), InvalidInput);
  auto f1 = appendix_a_fit(1, 0.5, 1e-5, 1e-2, 25);
  CHECK(std::isfinite(std::abs(f1.constant)));
}
