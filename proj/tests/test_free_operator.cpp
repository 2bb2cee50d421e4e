#include "dlat/errors.hpp"
#include "dlat/free_operator.hpp"
#include "dlat/kernel_engine.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace dlat;

namespace {

/// Watson's integral W; the free kernel at the origin at omega = 0 is W/2.
double watson() {
  const double pi = std::numbers::pi;
  return std::sqrt(6.0) / (96 * pi * pi * pi) * std::tgamma(1.0 / 24) * std::tgamma(5.0 / 24) *
         std::tgamma(7.0 / 24) * std::tgamma(11.0 / 24);
}

/// Closed walks on Z^3 of length 0, 2, 4, 6, 8 from the origin.
cplx neumann_series(double omega) {
  const double a[] = {1, 6, 90, 1860, 44730};
  const double s = 6.0 - omega;
  cplx r = 0;
  for (int k = 0; k < 5; ++k)
    r += a[k] / std::pow(s, 2 * k + 1);
  return r;
}

} // namespace

TEST_CASE("origin kernel at the lower band edge equals half of Watson's integral") {
  auto r = free_resolvent_kernel(SpectralPoint::upper(0.0), {0, 0, 0});
  CHECK(std::abs(r - watson() / 2) < 1e-12);
  auto l = laplace_kernels(0.0, {Triple{0, 0, 0}});
  CHECK(std::abs(l[0] - watson() / 2) < 1e-12);
}

TEST_CASE("far below the band the kernel matches the closed-walk series") {
  auto r = free_resolvent_kernel(SpectralPoint::off_axis(-100.0), {0, 0, 0});
  CHECK(std::abs(r - neumann_series(-100.0)) < 1e-15);
}

TEST_CASE("independent routes agree") {
  std::vector<Triple> z = {{0, 0, 0}, {0, 0, 1}, {0, 1, 2}, {2, 2, 3}};
  SUBCASE("Laplace versus trapezoid below the band") {
    auto a = laplace_kernels(-1.0, z);
    auto b = trapezoid_kernels(-1.0, z, 96);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(std::abs(a[i] - b[i]) < 1e-10);
  }
  SUBCASE("time domain versus trapezoid off the axis") {
    cplx w(3.0, 2.0);
    auto a = time_domain_kernels({w}, z);
    auto b = trapezoid_kernels(w, z, 96);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(std::abs(a(0, Eigen::Index(i)) - b[i]) < 1e-10);
  }
  SUBCASE("FFT trapezoid versus direct trapezoid") {
    cplx w(-0.5, 0.5);
    auto a = trapezoid_kernels_fft(w, z, 48);
    auto b = trapezoid_kernels(w, z, 48);
    for (std::size_t i = 0; i < z.size(); ++i)
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("reflection through the band center") {
  // theta -> theta + pi maps phi to 12 - phi and multiplies by (-1)^{|z|_1}
  for (Site z : {Site{0, 0, 0}, Site{1, 0, 0}, Site{1, 1, 2}}) {
    auto a = free_resolvent_kernel(SpectralPoint::off_axis(14.0), z);
    auto b = free_resolvent_kernel(SpectralPoint::off_axis(-2.0), z);
    double sign = z.l1() % 2 ? 1.0 : -1.0;
    CHECK(std::abs(a - sign * b) < 1e-12);
  }
}

TEST_CASE("boundary values respect the symmetry of the density of states") {
  auto lo = free_resolvent_kernel(SpectralPoint::upper(2.0), {0, 0, 0});
  auto hi = free_resolvent_kernel(SpectralPoint::upper(10.0), {0, 0, 0});
  CHECK(lo.imag() > 0);
  CHECK(std::abs(lo.imag() - hi.imag()) < 1e-6);
  CHECK(std::abs(lo.real() + hi.real()) < 1e-6);
  auto mid = free_resolvent_kernel(SpectralPoint::upper(6.0), {0, 0, 0});
  CHECK(std::abs(mid.real()) < 1e-6);
  auto low = free_resolvent_kernel(SpectralPoint::lower(2.0), {0, 0, 0});
  CHECK(std::abs(low - std::conj(lo)) < 1e-12);
}

TEST_CASE("spectral point and quadrature validation") {
  CHECK_THROWS_AS(SpectralPoint::off_axis(3.0).validate(), DomainError);
  CHECK_THROWS_AS(SpectralPoint::upper(13.0).validate(), InvalidInput);
  CHECK_THROWS_AS(SpectralPoint::off_axis(cplx(NAN, 0)).validate(), InvalidInput);
  CHECK_NOTHROW(SpectralPoint::off_axis(cplx(3.0, 1e-3)).validate());
  CHECK_THROWS_AS(free_resolvent_kernel(SpectralPoint::off_axis(3.0), {0, 0, 0}), DomainError);
  QuadratureSpec q;
  CHECK_NOTHROW(q.validate());
  q.M = 7;
  CHECK_THROWS_AS(q.validate(), InvalidInput);
  q = {};
  q.epsilons = {0.1, 0.2, 0.05};
  CHECK_THROWS_AS(q.validate(), InvalidInput);
  q.epsilons = {0.1, 0.05};
  CHECK_THROWS_AS(q.validate(), InvalidInput);
  q.extrapolation = Extrapolation::none;
  CHECK_NOTHROW(q.validate());
}

TEST_CASE("extrapolation removes a linear eps correction") {
  QuadratureSpec q;
  std::vector<cplx> seq;
  const cplx a(0.3, 0.7), b(-2.0, 1.0);
  for (double e : q.epsilons)
    seq.push_back(a + b * e);
  auto bv = extrapolate_boundary(2.0, seq, q);
  CHECK(bv.converged);
  CHECK(std::abs(bv.value - a) < 1e-12);
  CHECK(bv.differences.size() == q.epsilons.size() - 1);
}

TEST_CASE("kernel depends only on the canonical triple") {
  CHECK(canonical({-3, 1, 0}) == Triple{0, 1, 3});
  CHECK(canonical_triples(1).size() == 4);
  auto a = free_resolvent_kernels(SpectralPoint::off_axis(cplx(5.0, 0.5)),
                                  std::vector<Site>{{1, -2, 0}, {0, 1, 2}, {-2, 0, -1}});
  CHECK(std::abs(a[0] - a[1]) < 1e-14);
  CHECK(std::abs(a[0] - a[2]) < 1e-14);
}

TEST_CASE("compressed operator equals the direct convolution") {
  LatticeBox box(2, Boundary::zero);
  const SpectralPoint at = SpectralPoint::off_axis(cplx(-1.0, 0.5));
  auto K = make_kernel_table(at, 2 * box.L());
  CompressedOperator C(box, K);
  auto f = GridFunction::random(box, 9);
  auto g = C.apply(f);
  double err = 0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    cplx s = 0;
    for (std::size_t j = 0; j < box.size(); ++j)
      s += K(box.site(i) - box.site(j)) * f[j];
    err = std::max(err, std::abs(s - g[i]));
  }
  CHECK(err < 1e-12);
  CHECK(std::abs(K({1, 2, 0}) - free_resolvent_kernel(at, {1, 2, 0})) < 1e-12);
}

TEST_CASE("off-axis apply inverts -Delta - omega on the torus") {
  LatticeBox box(4);
  auto f = GridFunction::random(box, 4);
  const cplx w(3.0, 2.0);
  auto u = free_resolvent_apply(SpectralPoint::off_axis(w), f);
  auto r = apply_discrete_laplacian(u);
  r *= -1.0;
  r.axpy(-w, u);
  r -= f;
  CHECK(norm(r) < 1e-12 * norm(f));
}

TEST_CASE("free propagator is unitary and composes") {
  LatticeBox box(4);
  auto psi = GridFunction::gaussian(box, 1.0);
  auto a = free_propagator(free_propagator(psi, 0.7), 1.3);
  auto b = free_propagator(psi, 2.0);
  CHECK(norm(a - b) < 1e-13);
  CHECK(norm(b) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(norm(free_propagator(b, -2.0) - psi) < 1e-13);
}

TEST_CASE("critical values and symbol gradient") {
  auto cv = critical_values();
  CHECK(cv.size() == 4);
  CHECK(symbol(0, 0, 0) == 0.0);
  CHECK(symbol(std::numbers::pi, std::numbers::pi, std::numbers::pi) == doctest::Approx(12.0));
  auto g = symbol_gradient({0.3, -1.0, 2.0});
  CHECK(g[0] == doctest::Approx(2 * std::sin(0.3)));
}
