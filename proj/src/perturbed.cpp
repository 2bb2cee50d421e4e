#include "dlat/perturbed.hpp"

#include "dlat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

namespace dlat {

namespace {

Eigen::MatrixXcd gram_from(const std::vector<Site> &s, const std::function<cplx(const Site &)> &k) {
  const auto n = Eigen::Index(s.size());
  Eigen::MatrixXcd G(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      G(a, b) = k(s[a] - s[b]);
  return G;
}

Eigen::MatrixXcd woodbury_matrix(const Eigen::MatrixXcd &G, const Potential &V) {
  auto v = V.values();
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(G.rows(), G.cols());
  for (Eigen::Index b = 0; b < G.cols(); ++b)
    A.col(b) += G.col(b) * v[b];
  return A;
}

// c = (I + G V)^{-1} g, guarded by the smallest singular value.
Eigen::VectorXcd woodbury_solve(const Eigen::MatrixXcd &G, const Potential &V,
                                const Eigen::VectorXcd &g) {
  Eigen::MatrixXcd A = woodbury_matrix(G, V);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto &s = svd.singularValues();
  double smin = s(s.size() - 1);
  if (smin <= 1e-13 * s(0))
    throw NearEigenvalueError("I + G V is singular at working precision (s_min = " +
                                  std::to_string(smin) + ")",
                              smin);
  return svd.solve(g);
}

} // namespace

SupportGram support_gram(const SpectralPoint &at, const Potential &V, const QuadratureSpec &q) {
  if (V.empty())
    throw InvalidInput("support_gram needs a nonempty potential");
  auto s = V.sites();
  std::vector<Site> d;
  for (const auto &a : s)
    for (const auto &b : s)
      d.push_back(a - b);
  auto v = free_resolvent_kernels(at, d, q);
  SupportGram g{s, Eigen::MatrixXcd(s.size(), s.size()), at};
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      g.G(a, b) = v[a * s.size() + b];
  return g;
}

double woodbury_smin(const Eigen::MatrixXcd &G, const Potential &V) {
  if (V.empty())
    return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(woodbury_matrix(G, V));
  return svd.singularValues()(svd.singularValues().size() - 1);
}

GridFunction apply_resolvent(const SpectralPoint &at, const Potential &V, const GridFunction &f,
                             const QuadratureSpec &q) {
  at.validate();
  if (V.empty())
    return free_resolvent_apply(at, f, q);
  const auto &box = f.box();
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary("apply_resolvent needs a periodic box");
  auto sites = V.sites();
  for (auto &s : sites) {
    if (!box.contains(s))
      throw InvalidInput("potential support leaves the box");
  }
  auto vals = V.values();
  std::function<GridFunction(const GridFunction &)> R0;
  std::function<cplx(const Site &)> kern;
  GridFunction col(box);
  std::shared_ptr<CompressedOperator> K;
  std::shared_ptr<KernelTable> table;
  if (at.side == Side::off_axis) {
    col = periodic_kernel_column(box, at.omega);
    kern = [&](const Site &z) { return col.at(box.wrap(z)); };
    R0 = [&](const GridFunction &g) { return free_resolvent_apply(at, g, q); };
  } else {
    auto tabs = make_boundary_tables(at.omega.real(), at.side, box.side() - 1, q);
    if (!tabs.converged)
      throw ConvergenceError("eps extrapolation did not converge", 0.0);
    table = std::make_shared<KernelTable>(tabs.limit);
    K = std::make_shared<CompressedOperator>(box, *table);
    kern = [&](const Site &z) { return (*table)(z); };
    R0 = [&](const GridFunction &g) { return K->apply(g); };
  }
  GridFunction g = R0(f);
  Eigen::MatrixXcd G = gram_from(sites, kern);
  Eigen::VectorXcd gs(sites.size());
  for (std::size_t a = 0; a < sites.size(); ++a)
    gs(a) = g.at(sites[a]);
  Eigen::VectorXcd c = woodbury_solve(G, V, gs);
  GridFunction h(box);
  for (std::size_t a = 0; a < sites.size(); ++a)
    h.at(sites[a]) = vals[a] * c(a);
  g -= R0(h);
  return g;
}

std::vector<Site> perturbed_kernel_offsets(const Potential &V,
                                           const std::vector<std::pair<Site, Site>> &probes) {
  std::vector<Site> out;
  auto s = V.sites();
  for (const auto &[x, y] : probes) {
    out.push_back(x - y);
    for (const auto &a : s) {
      out.push_back(x - a);
      out.push_back(a - y);
    }
  }
  for (const auto &a : s)
    for (const auto &b : s)
      out.push_back(a - b);
  return out;
}

std::vector<cplx> perturbed_kernel_entries(const Potential &V,
                                           const std::vector<std::pair<Site, Site>> &probes,
                                           const std::function<cplx(const Site &)> &R0) {
  std::vector<cplx> out(probes.size());
  if (V.empty()) {
    for (std::size_t i = 0; i < probes.size(); ++i)
      out[i] = R0(probes[i].first - probes[i].second);
    return out;
  }
  auto s = V.sites();
  auto v = V.values();
  const auto n = Eigen::Index(s.size());
  Eigen::MatrixXcd G = gram_from(s, R0);
  Eigen::MatrixXcd A = woodbury_matrix(G, V);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  double smin = svd.singularValues()(n - 1);
  if (smin <= 1e-13 * svd.singularValues()(0))
    throw NearEigenvalueError("I + G V is singular at working precision", smin);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto &[x, y] = probes[i];
    Eigen::VectorXcd ry(n), rx(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      ry(a) = R0(s[a] - y);
      rx(a) = R0(x - s[a]);
    }
    Eigen::VectorXcd c = svd.solve(ry);
    cplx corr = 0;
    for (Eigen::Index a = 0; a < n; ++a)
      corr += rx(a) * v[a] * c(a);
    out[i] = R0(x - y) - corr;
  }
  return out;
}

namespace {

Eigen::MatrixXd laplace_gram(const std::vector<Site> &s, double mu) {
  std::map<Triple, std::size_t> slot;
  std::vector<Triple> tr;
  for (const auto &a : s)
    for (const auto &b : s) {
      Triple t = canonical(a - b);
      if (slot.emplace(t, tr.size()).second)
        tr.push_back(t);
    }
  auto v = laplace_kernels(mu, tr);
  Eigen::MatrixXd G(s.size(), s.size());
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      G(a, b) = v[slot[canonical(s[a] - s[b])]];
  return G;
}

} // namespace

int eigenvalue_count_below(const Potential &V, double mu) {
  if (mu > 0)
    throw DomainError("eigenvalue_count_below needs mu <= 0");
  if (V.empty())
    return 0;
  auto s = V.sites();
  auto v = V.values();
  Eigen::MatrixXd G = laplace_gram(s, mu);
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success)
    throw ConvergenceError("Gram matrix below the spectrum is not positive definite", mu);
  Eigen::MatrixXd Lm = llt.matrixL();
  Eigen::MatrixXd M = Lm.transpose() * Eigen::VectorXd::Map(v.data(), v.size()).asDiagonal() * Lm;
  M += Eigen::MatrixXd::Identity(M.rows(), M.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  int n = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) < 0)
      ++n;
  return n;
}

std::vector<std::pair<double, double>> default_search_intervals(const Potential &V, double tol) {
  double lo = std::min(-100.0, V.min_value() - 1.0);
  double hi = std::max(100.0, 12.0 + V.max_value() + 1.0);
  double w = 12.0 + V.max_abs() + 1.0;
  lo = std::min(lo, -w);
  hi = std::max(hi, w);
  return {{lo, -tol}, {12.0 + tol, hi}};
}

namespace {

struct Level {
  double mu;
  int mult;
};

void bisect(const Potential &V, double a, int na, double b, int nb, double tol,
            std::vector<Level> &out) {
  if (nb == na)
    return;
  if (b - a <= tol) {
    out.push_back({0.5 * (a + b), nb - na});
    return;
  }
  double m = 0.5 * (a + b);
  int nm = eigenvalue_count_below(V, m);
  bisect(V, a, na, m, nm, tol, out);
  bisect(V, m, nm, b, nb, tol, out);
}

// Levels of H in [a, b] with b <= 0.
std::vector<Level> levels_below_zero(const Potential &V, double a, double b, double tol) {
  int na = eigenvalue_count_below(V, a), nb = eigenvalue_count_below(V, b);
  std::vector<Level> lv;
  bisect(V, a, na, b, nb, tol, lv);
  // an eigenvalue sitting on an end of the interval
  double guard = std::max(2 * tol, 1e-12 * std::max(1.0, std::abs(a)));
  for (double e : {a, b}) {
    double lo = e - guard, hi = std::min(e + guard, 0.0);
    if (lo < hi && eigenvalue_count_below(V, lo) != eigenvalue_count_below(V, hi))
      throw BoundaryCollision("eigenvalue at the end of a search interval", e);
  }
  return lv;
}

std::vector<GridFunction> eigenfunctions(const Potential &V, double mu, int mult,
                                         const LatticeBox &box) {
  auto s = V.sites();
  auto v = V.values();
  Eigen::MatrixXd G = laplace_gram(s, mu);
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(G.rows(), G.cols()) +
                      G * Eigen::VectorXd::Map(v.data(), v.size()).asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  GridFunction col = periodic_kernel_column(box, mu);
  std::vector<GridFunction> us;
  const auto n = A.cols();
  for (int k = 0; k < mult; ++k) {
    Eigen::VectorXd c = svd.matrixV().col(n - 1 - k);
    GridFunction u(box);
    for (std::size_t i = 0; i < u.size(); ++i) {
      Site x = box.site(i);
      cplx acc = 0;
      for (Eigen::Index a = 0; a < n; ++a)
        acc += v[a] * c(a) * col.at(box.wrap(x - s[a]));
      u[i] = -acc;
    }
    // modified Gram-Schmidt, two passes
    for (int pass = 0; pass < 2; ++pass)
      for (const auto &w : us)
        u.axpy(-dot(w, u), w);
    u *= 1.0 / norm(u);
    us.push_back(std::move(u));
  }
  return us;
}

void flip_checkerboard(GridFunction &u) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u.box().site(i).l1() & 1)
      u[i] = -u[i];
}

} // namespace

std::vector<EigenPair> find_eigenvalues(const Potential &V,
                                        const std::vector<std::pair<double, double>> &search,
                                        double tol, const LatticeBox &box) {
  if (!(tol > 0))
    throw InvalidInput("eigenvalue tolerance must be positive");
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary("eigenfunctions are built on a periodic box");
  for (const auto &s : V.sites())
    if (!box.contains(s))
      throw InvalidInput("potential support leaves the box");
  std::vector<EigenPair> out;
  if (V.empty())
    return out;
  for (const auto &[a, b] : search) {
    if (!(a < b))
      throw InvalidInput("search interval must have a < b");
    if (b < 0) {
      for (const auto &l : levels_below_zero(V, a, b, tol))
        for (auto &u : eigenfunctions(V, l.mu, l.mult, box))
          out.push_back({l.mu, std::move(u), l.mult});
    } else if (a > 12) {
      // (-1)^{|x|_1} maps H to 12 - (-Delta - V)
      Potential W = V.scaled(-1.0);
      for (const auto &l : levels_below_zero(W, 12.0 - b, 12.0 - a, tol))
        for (auto &u : eigenfunctions(W, l.mu, l.mult, box)) {
          flip_checkerboard(u);
          out.push_back({12.0 - l.mu, std::move(u), l.mult});
        }
    } else {
      throw InvalidInput("search intervals must lie outside [0, 12]");
    }
  }
  std::sort(out.begin(), out.end(), [](const auto &p, const auto &q) { return p.mu < q.mu; });
  // Distinct levels are orthogonal on Z^3 but only up to the box truncation
  // here; orthonormalize the whole set, most deeply bound first, so that the
  // projection is exact on the box.
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  auto depth = [](double mu) { return mu < 0 ? -mu : mu - 12.0; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return depth(out[a].mu) > depth(out[b].mu);
  });
  for (int pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto &u = out[order[i]].u;
      for (std::size_t j = 0; j < i; ++j) {
        const auto &w = out[order[j]].u;
        u.axpy(-dot(w, u), w);
      }
      u *= 1.0 / norm(u);
    }
  return out;
}

std::vector<EigenPair> find_eigenvalues(const Potential &V, double tol, const LatticeBox &box) {
  return find_eigenvalues(V, default_search_intervals(V, tol), tol, box);
}

GridFunction spectral_projection(const std::vector<EigenPair> &pairs, const GridFunction &f) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(pairs[i].u.box() == f.box()))
      throw ValidationError("eigenfunction lives on a different box");
    for (std::size_t j = 0; j <= i; ++j) {
      cplx d = dot(pairs[i].u, pairs[j].u);
      if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-8)
        throw ValidationError("eigenfunctions are not orthonormal");
    }
  }
  GridFunction out(f.box());
  for (const auto &p : pairs)
    out.axpy(dot(p.u, f), p.u);
  return out;
}

std::string to_string(Verdict v) {
  switch (v) {
  case Verdict::generic: return "generic";
  case Verdict::degenerate: return "degenerate";
  default: return "inconclusive";
  }
}

Verdict classify(double smin) {
  if (smin > GenericityReport::generic_threshold)
    return Verdict::generic;
  if (smin < GenericityReport::degenerate_threshold)
    return Verdict::degenerate;
  return Verdict::inconclusive;
}

GenericityReport genericity_check(const Potential &V, const QuadratureSpec &q) {
  GenericityReport rep;
  auto crit = critical_values();
  double worst = 1.0;
  bool failed = false;
  for (int k = 0; k < 4; ++k) {
    auto &e = rep.entries[k];
    e.omega = crit[k];
    if (V.empty())
      continue;
    auto s = V.sites();
    std::vector<Triple> tr;
    std::map<Triple, std::size_t> slot;
    for (const auto &a : s)
      for (const auto &b : s) {
        Triple t = canonical(a - b);
        if (slot.emplace(t, tr.size()).second)
          tr.push_back(t);
      }
    auto bv = boundary_values(crit[k], Side::upper, tr, q);
    Eigen::MatrixXcd G(s.size(), s.size());
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = 0; b < s.size(); ++b) {
        const auto &x = bv[slot[canonical(s[a] - s[b])]];
        G(a, b) = x.value;
        if (!x.converged) {
          e.extrapolation_ok = false;
          e.note = "eps extrapolation did not settle";
        }
      }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(woodbury_matrix(G, V));
    const auto &sv = svd.singularValues();
    e.smin = sv(sv.size() - 1);
    e.condition = sv(0) / e.smin;
    worst = std::min(worst, e.smin);
    failed = failed || !e.extrapolation_ok;
  }
  rep.verdict = failed ? Verdict::inconclusive : classify(worst);
  return rep;
}

} // namespace dlat
