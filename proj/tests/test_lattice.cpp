#include "dlat/errors.hpp"
#include "dlat/lattice.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace dlat;

TEST_CASE("site arithmetic and norms") {
  Site a{1, -2, 3}, b{0, 4, -1};
  CHECK(a + b == Site{1, 2, 2});
  CHECK(a - b == Site{1, -6, 4});
  CHECK(-a == Site{-1, 2, -3});
  CHECK(a.norm2() == 14);
  CHECK(a.l1() == 6);
  CHECK(a.linf() == 3);
}

TEST_CASE("box geometry") {
  LatticeBox p(2), z(2, Boundary::zero);
  CHECK(p.side() == 4);
  CHECK(p.size() == 64);
  CHECK(z.size() == 125);
  CHECK(p.contains({-2, 1, 1}));
  CHECK_FALSE(p.contains({2, 0, 0}));
  CHECK(z.contains({2, 0, 0}));
  CHECK(p.wrap({2, -3, 5}) == Site{-2, 1, 1});
  for (std::size_t i = 0; i < p.size(); ++i)
    CHECK(p.index(p.site(i)) == i);
  CHECK_THROWS_AS(p.index({5, 0, 0}), InvalidInput);
  CHECK_THROWS_AS(LatticeBox(0), InvalidInput);
}

TEST_CASE("grid functions validate their values") {
  LatticeBox box(1);
  CHECK_THROWS_AS(GridFunction(box, std::vector<cplx>(3)), InvalidInput);
  std::vector<cplx> v(box.size(), 1.0);
  v[2] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(GridFunction(box, v), InvalidInput);
  auto g = GridFunction::gaussian(box, 0.7);
  CHECK(norm(g) == doctest::Approx(1.0).epsilon(1e-14));
  auto d = GridFunction::delta(box, {0, 0, 0});
  CHECK(d.at({0, 0, 0}) == cplx(1.0));
  CHECK(norm(d) == 1.0);
  auto r1 = GridFunction::random(box, 5), r2 = GridFunction::random(box, 5);
  r1 -= r2;
  CHECK(norm(r1) == 0.0);
}

TEST_CASE("potential invariants") {
  CHECK_THROWS_AS(Potential({{{0, 0, 0}, 1.0}, {{0, 0, 0}, 2.0}}), InvalidInput);
  CHECK_THROWS_AS(Potential({{{0, 0, 0}, std::numeric_limits<double>::infinity()}}), InvalidInput);
  Potential V({{{0, 0, 0}, -3.0}, {{1, 0, 0}, 2.0}});
  CHECK(V.min_value() == -3.0);
  CHECK(V.max_value() == 2.0);
  CHECK(V.max_abs() == 3.0);
  CHECK(V.value_at({1, 0, 0}) == 2.0);
  CHECK(V.value_at({5, 5, 5}) == 0.0);
  Potential W = Potential::single({0, 0, 0}, -1.0);
  CHECK(W.min_value() == -1.0);
  CHECK(W.max_value() == 0.0);
}

TEST_CASE("weights and weighted norms") {
  CHECK(weight({1, 1, 1}, 2.0) == doctest::Approx(4.0));
  LatticeBox box(3);
  auto u = GridFunction::random(box, 1);
  CHECK(weighted_norm(u, {0.0}) == doctest::Approx(norm(u)).epsilon(1e-15));
  CHECK(weighted_norm(u, {-6.0}) < norm(u));
  CHECK(weighted_norm(u, {2.0}) > norm(u));
  auto bad = u;
  bad[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(weighted_norm(bad, {1.0}), InvalidInput);
}

TEST_CASE("discrete Laplacian stencil on both boundaries") {
  for (auto b : {Boundary::periodic, Boundary::zero}) {
    LatticeBox box(2, b);
    auto d = apply_discrete_laplacian(GridFunction::delta(box));
    CHECK(d.at({0, 0, 0}) == cplx(-6.0));
    CHECK(d.at({1, 0, 0}) == cplx(1.0));
    CHECK(d.at({0, -1, 0}) == cplx(1.0));
    CHECK(d.at({1, 1, 0}) == cplx(0.0));
  }
  // the periodic stencil wraps, the zero one does not
  LatticeBox p(2), z(2, Boundary::zero);
  CHECK(apply_discrete_laplacian(GridFunction::delta(p, {-2, 0, 0})).at({1, 0, 0}) == cplx(1.0));
  CHECK(apply_discrete_laplacian(GridFunction::delta(z, {-2, 0, 0})).at({2, 0, 0}) == cplx(0.0));
}

TEST_CASE("plane waves diagonalize the periodic Laplacian") {
  LatticeBox box(3);
  const int n = box.side();
  auto w = GridFunction::plane_wave(box, 1, 2, 5);
  auto lw = apply_discrete_laplacian(w);
  double phi = 0;
  for (int k : {1, 2, 5})
    phi += 4 * std::pow(std::sin(std::numbers::pi * k / n), 2);
  lw.axpy(phi, w);
  CHECK(norm(lw) < 1e-12 * norm(w));
}

TEST_CASE("fused Hamiltonian matches the composed operators, including aliasing") {
  LatticeBox box(3);
  Potential V({{{0, 0, 0}, -2.0}, {{1, 2, 0}, 1.5}});
  auto u = GridFunction::random(box, 2), prev = GridFunction::random(box, 3);
  const double shift = 1.25, a = 0.5, b = -1.0;
  auto h = apply_discrete_laplacian(u);
  h *= -1.0;
  for (const auto &[s, v] : V.entries())
    h[box.index(s)] += v * u.at(s);
  h.axpy(-shift, u);
  h *= a;
  h.axpy(b, prev);
  GridFunction out(box);
  hamiltonian_fused(u, V, shift, a, &prev, b, out);
  auto diff = out;
  diff -= h;
  CHECK(norm(diff) < 1e-13);
  hamiltonian_fused(u, V, shift, a, &prev, b, prev);
  prev -= h;
  CHECK(norm(prev) < 1e-13);
}

TEST_CASE("torus transform conventions") {
  LatticeBox box(2);
  auto d = torus_transform(GridFunction::delta(box), Direction::forward);
  for (std::size_t i = 0; i < box.size(); ++i)
    CHECK(std::abs(d[i] - 1.0) < 1e-14);
  // u_hat(theta) = sum_x u(x) e^{i theta x}
  auto s = torus_transform(GridFunction::delta(box, {1, 0, 0}), Direction::forward);
  for (std::size_t i = 0; i < box.size(); ++i) {
    auto th = dual_theta(box, i);
    CHECK(std::abs(s[i] - std::polar(1.0, th[0])) < 1e-13);
  }
  CHECK_THROWS_AS(torus_transform(GridFunction(LatticeBox(2, Boundary::zero)), Direction::forward),
                  UnsupportedBoundary);
}

TEST_CASE("weighted operator norm by power iteration") {
  LatticeBox box(3);
  // identity from l2_sigma to l2_{-sigma}: largest w^{-2 sigma} is 1 at the origin
  auto id = self_adjoint([](const GridFunction &u) { return u; });
  CHECK(weighted_operator_norm(id, {2.0}, {-2.0}, box) == doctest::Approx(1.0).epsilon(1e-6));
  // multiplication by (1 + |x|^2) from l2 to l2 has norm 1 + max |x|^2 = 28
  auto mul = self_adjoint([](const GridFunction &u) {
    auto v = u;
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] *= 1.0 + double(v.box().site(i).norm2());
    return v;
  });
  CHECK(weighted_operator_norm(mul, {0.0}, {0.0}, box) == doctest::Approx(28.0).epsilon(1e-6));
  OperatorNormOptions tight;
  tight.max_iter = 2;
  tight.tol = 1e-15;
  CHECK_THROWS_AS(weighted_operator_norm(mul, {0.0}, {0.0}, box, tight), ConvergenceError);
}
