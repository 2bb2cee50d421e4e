#include "dlat/dynamics.hpp"
#include "dlat/errors.hpp"
#include "dlat/kernel_engine.hpp"
#include "dlat/perturbed.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace dlat;

namespace {

double watson_half() {
  const double pi = std::numbers::pi;
  return std::sqrt(6.0) / (192 * pi * pi * pi) * std::tgamma(1.0 / 24) * std::tgamma(5.0 / 24) *
         std::tgamma(7.0 / 24) * std::tgamma(11.0 / 24);
}

GridFunction residual(const Potential &V, double mu, const GridFunction &u) {
  auto r = apply_discrete_laplacian(u);
  r *= -1.0;
  for (const auto &[s, v] : V.entries())
    r[u.box().index(s)] += v * u.at(s);
  r.axpy(-mu, u);
  return r;
}

} // namespace

TEST_CASE("support gram needs a support") {
  CHECK_THROWS_AS(support_gram(SpectralPoint::off_axis(-1.0), Potential{}), InvalidInput);
  auto g = support_gram(SpectralPoint::off_axis(-1.0), Potential({{{0, 0, 0}, 1.0}, {{1, 0, 0}, 2.0}}));
  CHECK(g.G.rows() == 2);
  CHECK(std::abs(g.G(0, 1) - g.G(1, 0)) < 1e-15);
}

TEST_CASE("single-site bound state") {
  const Potential V = Potential::single({0, 0, 0}, -10.0);
  LatticeBox box(8);
  auto pairs = find_eigenvalues(V, 1e-12, box);
  REQUIRE(pairs.size() == 1);
  const double mu = pairs[0].mu;
  // 1 + v R0(mu, 0) = 0
  CHECK(laplace_kernels(mu, {Triple{0, 0, 0}})[0] == doctest::Approx(0.1).epsilon(1e-10));
  // the box is large compared with the decay length, so Lanczos sees the same level
  CHECK(smallest_ritz_value(V, 0.0, box, 300) == doctest::Approx(mu).epsilon(1e-8));
  CHECK(norm(residual(V, mu, pairs[0].u)) < 1e-9);
  CHECK(eigenvalue_count_below(V, mu - 1e-6) == 0);
  CHECK(eigenvalue_count_below(V, mu + 1e-6) == 1);
}

TEST_CASE("repulsive site gives the reflected level above the band") {
  LatticeBox box(8);
  auto lo = find_eigenvalues(Potential::single({0, 0, 0}, -20.0), 1e-12, box);
  auto hi = find_eigenvalues(Potential::single({0, 0, 0}, 20.0), 1e-12, box);
  REQUIRE(lo.size() == 1);
  REQUIRE(hi.size() == 1);
  CHECK(hi[0].mu == doctest::Approx(12.0 - lo[0].mu).epsilon(1e-10));
  CHECK(norm(residual(Potential::single({0, 0, 0}, 20.0), hi[0].mu, hi[0].u)) < 1e-9);
}

TEST_CASE("bound states are orthonormal and counted within the support size") {
  const Potential V({{{0, 0, 0}, -8.0}, {{1, 0, 0}, -8.0}, {{0, 1, 0}, -8.0}, {{2, 2, 2}, 15.0}});
  LatticeBox box(8);
  auto pairs = find_eigenvalues(V, 1e-12, box);
  CHECK(pairs.size() <= V.size());
  CHECK(pairs.size() >= 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(norm(residual(V, pairs[i].mu, pairs[i].u)) < 1e-7);
    for (std::size_t j = 0; j < pairs.size(); ++j)
      CHECK(std::abs(dot(pairs[i].u, pairs[j].u) - (i == j ? 1.0 : 0.0)) < 1e-10);
  }
  auto f = GridFunction::random(box, 3);
  auto p = spectral_projection(pairs, f);
  auto pp = spectral_projection(pairs, p);
  CHECK(norm(pp - p) < 1e-12 * norm(f));
}

TEST_CASE("spectral projection rejects non-orthonormal input") {
  LatticeBox box(2);
  std::vector<EigenPair> bad{{-1.0, GridFunction::delta(box), 1},
                             {-2.0, GridFunction::delta(box), 1}};
  CHECK_THROWS_AS(spectral_projection(bad, GridFunction::random(box, 1)), ValidationError);
}

TEST_CASE("eigenvalue counting preconditions and edge collisions") {
  CHECK_THROWS_AS(eigenvalue_count_below(Potential::single({0, 0, 0}, -10.0), 0.5), DomainError);
  CHECK(eigenvalue_count_below(Potential{}, -1.0) == 0);
  const Potential V = Potential::single({0, 0, 0}, -10.0);
  LatticeBox box(4);
  auto pairs = find_eigenvalues(V, 1e-13, box);
  REQUIRE(pairs.size() == 1);
  CHECK_THROWS_AS(find_eigenvalues(V, {{pairs[0].mu, -1e-3}}, 1e-10, box), BoundaryCollision);
  CHECK_THROWS_AS(find_eigenvalues(V, 1e-10, LatticeBox(4, Boundary::zero)), UnsupportedBoundary);
}

TEST_CASE("perturbed resolvent solves (H - w) u = f on the torus") {
  LatticeBox box(4);
  const Potential V({{{0, 0, 0}, -3.0}, {{1, -1, 0}, 2.0}});
  const cplx w(2.0, 0.7);
  auto f = GridFunction::random(box, 11);
  auto u = apply_resolvent(SpectralPoint::off_axis(w), V, f);
  auto r = apply_discrete_laplacian(u);
  r *= -1.0;
  for (const auto &[s, v] : V.entries())
    r[box.index(s)] += v * u.at(s);
  r.axpy(-w, u);
  r -= f;
  CHECK(norm(r) < 1e-11 * norm(f));
}

TEST_CASE("perturbed kernel is symmetric in its arguments") {
  const Potential V({{{0, 0, 0}, -3.0}, {{1, 0, 0}, 2.0}});
  const SpectralPoint at = SpectralPoint::off_axis(cplx(-1.0, 0.3));
  auto R0 = [&](const Site &z) { return free_resolvent_kernel(at, z); };
  std::vector<std::pair<Site, Site>> probes{{{0, 0, 0}, {1, 2, 0}}, {{1, 2, 0}, {0, 0, 0}}};
  auto e = perturbed_kernel_entries(V, probes, R0);
  CHECK(std::abs(e[0] - e[1]) < 1e-14);
  CHECK_FALSE(perturbed_kernel_offsets(V, probes).empty());
}

TEST_CASE("genericity classification") {
  CHECK(classify(1e-3) == Verdict::generic);
  CHECK(classify(1e-8) == Verdict::inconclusive);
  CHECK(classify(1e-12) == Verdict::degenerate);
  CHECK(to_string(Verdict::generic) == "generic");
  // coupling at which the origin becomes a zero-energy resonance
  const double vstar = -1.0 / watson_half();
  auto rep = genericity_check(Potential::single({0, 0, 0}, vstar));
  CHECK(rep.entries[0].smin < 1e-10);
  CHECK(rep.verdict == Verdict::degenerate);
  auto ok = genericity_check(Potential::single({0, 0, 0}, -1.0));
  CHECK(ok.verdict == Verdict::generic);
  for (const auto &e : ok.entries)
    CHECK(e.smin > 1e-3);
}
