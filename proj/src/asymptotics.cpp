#include "dlat/asymptotics.hpp"

#include "dlat/errors.hpp"
#include "dlat/kernel_engine.hpp"

#include "dlat/special.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numbers>

namespace dlat {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_critical(double w) { return w == 0.0 || w == 4.0 || w == 8.0 || w == 12.0; }

// Regularized tables R0(w +- i eps_k) and their eps -> 0 limit, on or off the band.
BoundaryTables sequence_tables(double omega, Side side, int R, const QuadratureSpec &q) {
  if (omega >= 0.0 && omega <= 12.0)
    return make_boundary_tables(omega, side, R, q);
  q.validate();
  auto tr = canonical_triples(R);
  double sgn = side == Side::lower ? -1.0 : 1.0;
  std::vector<std::vector<cplx>> seq(q.epsilons.size());
  for (std::size_t k = 0; k < q.epsilons.size(); ++k)
    seq[k] = free_resolvent_kernels(SpectralPoint::off_axis(cplx(omega, sgn * q.epsilons[k])), tr, q);
  BoundaryTables out;
  std::vector<cplx> lim(tr.size()), prev(tr.size());
  auto shorter = q;
  shorter.epsilons.pop_back();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    std::vector<cplx> s(q.epsilons.size());
    for (std::size_t k = 0; k < s.size(); ++k)
      s[k] = seq[k][i];
    auto bv = extrapolate_boundary(omega, s, q);
    lim[i] = bv.value;
    out.converged = out.converged && bv.converged;
    s.pop_back();
    prev[i] = extrapolate_boundary(omega, std::move(s), shorter).value;
  }
  out.previous_limit = KernelTable(R, tr, prev);
  for (auto &s : seq)
    out.per_eps.emplace_back(R, tr, s);
  out.limit = KernelTable(R, tr, lim);
  return out;
}

// R = K - K V (I + G V)^{-1} K on the box, K a compressed free kernel.
class WoodburyOperator {
public:
  WoodburyOperator(const LatticeBox &box, const KernelTable &table, const Potential &V)
      : K_(box, table), V_(V), sites_(V.sites()), vals_(V.values()) {
    if (V.empty())
      return;
    const auto n = Eigen::Index(sites_.size());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        A(a, b) += table(sites_[a] - sites_[b]) * vals_[b];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    double smin = svd.singularValues()(n - 1);
    if (smin <= 1e-13 * svd.singularValues()(0))
      throw NearEigenvalueError("I + G V is singular at working precision", smin);
    lu_ = std::make_shared<Eigen::PartialPivLU<Eigen::MatrixXcd>>(A);
  }

  GridFunction apply(const GridFunction &f) const {
    GridFunction g = K_.apply(f);
    if (V_.empty())
      return g;
    Eigen::VectorXcd gs(sites_.size());
    for (std::size_t a = 0; a < sites_.size(); ++a)
      gs(a) = g.at(sites_[a]);
    Eigen::VectorXcd c = lu_->solve(gs);
    GridFunction h(f.box());
    for (std::size_t a = 0; a < sites_.size(); ++a)
      h.at(sites_[a]) = vals_[a] * c(a);
    g -= K_.apply(h);
    return g;
  }

private:
  CompressedOperator K_;
  Potential V_;
  std::vector<Site> sites_;
  std::vector<double> vals_;
  std::shared_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
};

LinearOperator difference_operator(std::shared_ptr<WoodburyOperator> a,
                                   std::shared_ptr<WoodburyOperator> b) {
  return complex_symmetric([a, b](const GridFunction &f) {
    GridFunction r = a->apply(f);
    if (b)
      r -= b->apply(f);
    return r;
  });
}

} // namespace

LapReport lap_convergence_study(double omega, double sigma, const Potential &V,
                                const LatticeBox &box, const QuadratureSpec &q,
                                const LapOptions &opt) {
  if (is_critical(omega) && sigma <= 3.5)
    throw DomainError("at a critical value the limiting absorption estimate requires a "
                      "larger weight (sigma > 7/2)");
  for (const auto &s : V.sites())
    if (!box.contains(s))
      throw InvalidInput("potential support leaves the box");
  LapReport rep;
  rep.omega = omega;
  rep.sigma = sigma;
  rep.in_hypothesis = sigma > 1.5;
  if (!rep.in_hypothesis)
    rep.note = "sigma <= 3/2: outside the hypothesis, diagnostic run";
  const int R = box.side() - 1;
  const WeightOrder from{sigma}, to{-sigma};

  auto up = sequence_tables(omega, Side::upper, R, q);
  std::vector<std::shared_ptr<WoodburyOperator>> ops;
  for (const auto &t : up.per_eps)
    ops.push_back(std::make_shared<WoodburyOperator>(box, t, V));
  auto lim = std::make_shared<WoodburyOperator>(box, up.limit, V);
  for (std::size_t k = 0; k + 1 < ops.size(); ++k)
    rep.cauchy_differences.push_back(
        weighted_operator_norm(difference_operator(ops[k], ops[k + 1]), from, to, box, opt.norm));
  rep.extrapolated_norm = weighted_operator_norm(difference_operator(lim, nullptr), from, to, box, opt.norm);

  bool monotone = true;
  for (std::size_t k = 0; k + 1 < rep.cauchy_differences.size(); ++k)
    monotone = monotone && rep.cauchy_differences[k + 1] < rep.cauchy_differences[k];
  auto prev = std::make_shared<WoodburyOperator>(box, up.previous_limit, V);
  rep.extrapolation_gap = weighted_operator_norm(difference_operator(lim, prev), from, to, box, opt.norm);
  rep.converged = up.converged && monotone &&
                  rep.extrapolation_gap < opt.gap_fraction * rep.extrapolated_norm;
  if (!monotone)
    rep.note += (rep.note.empty() ? "" : "; ") + std::string("Cauchy differences not monotone");
  if (!up.converged)
    rep.note += (rep.note.empty() ? "" : "; ") + std::string("entrywise eps extrapolation did not settle");

  if (opt.both_sides) {
    auto lo = sequence_tables(omega, Side::lower, R, q);
    auto lim_lo = std::make_shared<WoodburyOperator>(box, lo.limit, V);
    rep.side_gap = weighted_operator_norm(difference_operator(lim, lim_lo), from, to, box, opt.norm);
  }
  return rep;
}

std::vector<Probe> probe_cube(int r) {
  std::vector<Site> pts;
  for (int a = -r; a <= r; ++a)
    for (int b = -r; b <= r; ++b)
      for (int c = -r; c <= r; ++c)
        pts.push_back({a, b, c});
  std::vector<Probe> out;
  for (const auto &x : pts)
    for (const auto &y : pts)
      out.emplace_back(x, y);
  return out;
}

bool is_elliptic(double base) { return base == 0.0 || base == 12.0; }

cplx default_direction(double base) {
  return is_elliptic(base) ? std::polar(1.0, kPi / 4) : cplx(0.0, 1.0);
}

cplx sector_sqrt(double base, cplx d) {
  if (base == 0.0) {
    // arg in (0, 2 pi)
    double a = std::arg(d);
    if (a <= 0)
      a += 2 * kPi;
    return std::polar(std::sqrt(std::abs(d)), a / 2);
  }
  return std::sqrt(d);
}

namespace {

void check_direction(double base, cplx d) {
  if (std::abs(std::abs(d) - 1.0) > 1e-12)
    throw InvalidInput("ray direction must be a unit complex number");
  if (base == 0.0 && d.imag() == 0.0 && d.real() > 0)
    throw DomainError("direction points into the spectrum");
  if (base == 12.0 && d.imag() == 0.0 && d.real() < 0)
    throw DomainError("direction points into the spectrum");
  if ((base == 4.0 || base == 8.0) && !(d.imag() > 0))
    throw DomainError("hyperbolic rays are implemented for Im w > 0 only");
}

} // namespace

RaySampling resolvent_ray_samples(double base, const Potential &V, const std::vector<Probe> &probes,
                                  const std::vector<double> &mags, const QuadratureSpec &q,
                                  cplx direction) {
  if (!is_critical(base))
    throw InvalidInput("ray base must be one of 0, 4, 8, 12");
  if (direction == 0.0)
    direction = default_direction(base);
  check_direction(base, direction);
  if (mags.empty())
    throw InvalidInput("no magnitudes");
  for (std::size_t i = 0; i < mags.size(); ++i) {
    if (!(mags[i] > 0) || mags[i] > 0.1)
      throw InvalidInput("magnitudes must lie in (0, 0.1]");
    if (i > 0 && !(mags[i] < mags[i - 1]))
      throw InvalidInput("magnitudes must be strictly decreasing");
  }
  RaySampling rs{base, direction, mags, probes, Eigen::MatrixXcd(mags.size(), probes.size())};

  std::map<Triple, std::size_t> slot;
  std::vector<Triple> tr;
  for (const auto &z : perturbed_kernel_offsets(V, probes)) {
    Triple t = canonical(z);
    if (slot.emplace(t, tr.size()).second)
      tr.push_back(t);
  }
  std::vector<cplx> ws;
  for (double m : mags)
    ws.push_back(base + direction * m);
  std::vector<std::vector<cplx>> vals(ws.size());
  std::vector<cplx> up;
  std::vector<std::size_t> up_idx;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    if (ws[k].imag() != 0.0) {
      up.push_back(ws[k].imag() > 0 ? ws[k] : std::conj(ws[k]));
      up_idx.push_back(k);
    } else {
      vals[k] = free_resolvent_kernels(SpectralPoint::off_axis(ws[k]), tr, q);
    }
  }
  Eigen::MatrixXcd td = time_domain_kernels(up, tr);
  for (std::size_t j = 0; j < up_idx.size(); ++j) {
    std::size_t k = up_idx[j];
    vals[k].resize(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i)
      vals[k][i] = ws[k].imag() > 0 ? td(j, i) : std::conj(td(j, i));
  }
  for (std::size_t k = 0; k < ws.size(); ++k) {
    auto R0 = [&](const Site &z) { return vals[k][slot.at(canonical(z))]; };
    auto e = perturbed_kernel_entries(V, probes, R0);
    for (std::size_t p = 0; p < probes.size(); ++p)
      rs.values(k, p) = e[p];
  }
  return rs;
}

std::string to_string(PuiseuxModel m) {
  return m == PuiseuxModel::elliptic ? "elliptic" : "hyperbolic";
}

namespace {

double loglog_slope(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

} // namespace

PuiseuxFit puiseux_fit(const RaySampling &s, PuiseuxModel model) {
  const auto n = Eigen::Index(s.magnitudes.size());
  if (n < 5)
    throw InvalidInput("Puiseux fit needs at least 5 magnitudes");
  if (s.magnitudes.front() / s.magnitudes.back() < 100.0 * (1 - 1e-12))
    throw InvalidInput("magnitudes must span at least two decades");
  if (model == PuiseuxModel::elliptic && !is_elliptic(s.base))
    throw InvalidInput("elliptic model at a hyperbolic base");
  if (model == PuiseuxModel::hyperbolic && is_elliptic(s.base))
    throw InvalidInput("hyperbolic model at an elliptic base");
  Eigen::MatrixXcd A(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    cplx r = sector_sqrt(s.base, s.direction * s.magnitudes[k]);
    A(k, 0) = 1.0;
    A(k, 1) = r;
    A(k, 2) = r * r;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto &sv = svd.singularValues();
  if (sv(2) <= 1e-12 * sv(0))
    throw IllConditionedFit("Puiseux design matrix is rank deficient");
  PuiseuxFit fit;
  fit.model = model;
  Eigen::MatrixXcd C = svd.solve(s.values);
  Eigen::MatrixXcd res = A * C - s.values;
  double dn = s.values.norm();
  fit.residual_norm = dn > 0 ? res.norm() / dn : res.norm();
  for (Eigen::Index p = 0; p < s.values.cols(); ++p) {
    fit.c0.push_back(C(0, p));
    fit.c_half.push_back(C(1, p));
    fit.c1.push_back(C(2, p));
    std::vector<double> x, y;
    for (Eigen::Index k = 0; k < n; ++k) {
      double d = std::abs(s.values(k, p) - C(0, p));
      if (d > 0) {
        x.push_back(s.magnitudes[k]);
        y.push_back(d);
      }
    }
    fit.exponents.push_back(x.size() >= 2 ? loglog_slope(x, y) : 0.0);
  }
  fit.exponent_estimate = fit.exponents.empty() ? 0.0 : fit.exponents.front();
  return fit;
}

std::vector<double> default_magnitudes() {
  std::vector<double> m;
  for (int k = 0; k <= 9; ++k)
    m.push_back(0.1 * std::pow(2.0, -k));
  return m;
}

BlowUpRates differentiated_blowup_rates(double base, const Potential &V, const Probe &probe,
                                        const std::vector<double> &mags, const QuadratureSpec &q,
                                        double h) {
  if (mags.size() < 2)
    throw InvalidInput("need at least two magnitudes");
  if (!(h > 0) || h >= 0.5)
    throw InvalidInput("relative step must lie in (0, 0.5)");
  std::vector<double> all;
  for (double m : mags) {
    all.push_back(m * (1 + h));
    all.push_back(m);
    all.push_back(m * (1 - h));
  }
  std::sort(all.begin(), all.end(), std::greater<>());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  auto rs = resolvent_ray_samples(base, V, {probe}, all, q);
  auto at = [&](double m) {
    auto it = std::find(all.begin(), all.end(), m);
    return rs.values(it - all.begin(), 0);
  };
  BlowUpRates r;
  r.magnitudes = mags;
  const cplx d = rs.direction;
  for (double m : mags) {
    cplx p = at(m * (1 + h)), c = at(m), n = at(m * (1 - h));
    double step = h * m;
    r.d1.push_back(std::abs((p - n) / (2.0 * step * d)));
    r.d2.push_back(std::abs((p - 2.0 * c + n) / ((step * d) * (step * d))));
  }
  for (Eigen::Index i = 0; i < rs.values.rows(); ++i)
    r.max_abs = std::max(r.max_abs, std::abs(rs.values(i, 0)));
  r.d1_slope = loglog_slope(mags, r.d1);
  r.d2_slope = loglog_slope(mags, r.d2);
  return r;
}

CrosscheckRecord perturbed_constant_crosscheck(const Potential &V, double base,
                                               const QuadratureSpec &q, std::vector<Probe> probes,
                                               std::vector<double> mags) {
  if (probes.empty()) {
    Site o{0, 0, 0}, e1{1, 0, 0};
    probes = {{o, o}, {o, e1}, {e1, o}, {e1, e1}};
  }
  if (mags.empty())
    mags = default_magnitudes();
  PuiseuxModel model = is_elliptic(base) ? PuiseuxModel::elliptic : PuiseuxModel::hyperbolic;
  CrosscheckRecord rec;
  rec.probes = probes;

  // genericity at this base from the boundary-value kernel
  if (!V.empty()) {
    std::vector<Site> s = V.sites(), d;
    for (const auto &a : s)
      for (const auto &b : s)
        d.push_back(a - b);
    auto g = free_resolvent_kernels(SpectralPoint::upper(base), d, q);
    Eigen::MatrixXcd G(s.size(), s.size());
    for (std::size_t a = 0; a < s.size(); ++a)
      for (std::size_t b = 0; b < s.size(); ++b)
        G(a, b) = g[a * s.size() + b];
    rec.smin = woodbury_smin(G, V);
    if (classify(rec.smin) != Verdict::generic)
      throw NonGenericError("I + R0 V is not invertible at the critical value", rec.smin);
  } else {
    rec.smin = 1.0;
  }

  // (a) leading constant of the perturbed ray fit
  auto fit = puiseux_fit(resolvent_ray_samples(base, V, probes, mags, q), model);
  rec.fitted = fit.c0;

  // (b) Woodbury reduction applied to fitted free constants
  std::vector<Site> offs = perturbed_kernel_offsets(V, probes);
  std::map<Triple, std::size_t> slot;
  std::vector<Probe> free_probes;
  for (const auto &z : offs) {
    Triple t = canonical(z);
    if (slot.emplace(t, free_probes.size()).second)
      free_probes.push_back({Site{t[0], t[1], t[2]}, Site{}});
  }
  auto free_fit = puiseux_fit(resolvent_ray_samples(base, Potential{}, free_probes, mags, q), model);
  auto A0 = [&](const Site &z) { return free_fit.c0[slot.at(canonical(z))]; };
  rec.direct = perturbed_kernel_entries(V, probes, A0);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    double den = std::max(std::abs(rec.direct[i]), 1e-300);
    rec.max_relative_difference =
        std::max(rec.max_relative_difference, std::abs(rec.fitted[i] - rec.direct[i]) / den);
  }
  return rec;
}

cplx appendix_a_integral(int l, cplx w, double delta, double tol) {
  if (l < 0)
    throw InvalidInput("l must be nonnegative");
  if (!(w.imag() > 0))
    throw DomainError("the integral is defined for Im w > 0");
  if (!(std::abs(w) < delta / 2))
    throw DomainError("need 0 < |w| < delta / 2");
  const cplx I(0.0, 1.0);
  auto f = [&](double r) -> cplx {
    cplx rw = r - w; // Im < 0, so the principal root has Re > 0, Im < 0
    cplx s = std::sqrt(rw / (2.0 * r));
    return (kPi * I - std::log((1.0 - s) / (1.0 + s))) * std::pow(r, l) / std::sqrt(rw);
  };
  // r = u^2 removes the square-root behaviour at r = 0; breakpoints grade
  // towards the scale |w| where the integrand turns over
  auto g = [&](double u) { return 2.0 * u * f(u * u); };
  double a = std::abs(w);
  std::vector<double> pts{0.0};
  for (double c : {0.25, 0.5, 1.0, 2.0, 4.0, 10.0})
    if (c * a < delta)
      pts.push_back(std::sqrt(c * a));
  for (double x = 20 * a; x < delta; x *= 4)
    pts.push_back(std::sqrt(x));
  pts.push_back(std::sqrt(delta));
  const auto &lo = gauss_legendre(20), &hi = gauss_legendre(30);
  auto rule = [&](const QuadRule &q, double x0, double x1) {
    cplx s = 0.0;
    const double hm = 0.5 * (x1 - x0), c = 0.5 * (x0 + x1);
    for (std::size_t i = 0; i < q.x.size(); ++i)
      s += q.w[i] * g(c + hm * q.x[i]);
    return hm * s;
  };
  // scale for the absolute error target
  cplx rough = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    rough += rule(hi, pts[i], pts[i + 1]);
  const double target = tol * std::max(1.0, std::abs(rough));
  cplx sum = 0.0;
  std::vector<std::pair<double, double>> stack;
  for (std::size_t i = pts.size() - 1; i > 0; --i)
    stack.push_back({pts[i - 1], pts[i]});
  const double total = pts.back();
  while (!stack.empty()) {
    auto [x0, x1] = stack.back();
    stack.pop_back();
    cplx a30 = rule(hi, x0, x1), a20 = rule(lo, x0, x1);
    if (std::abs(a30 - a20) <= target * (x1 - x0) / total || x1 - x0 < 1e-15 * total) {
      sum += a30;
    } else {
      double m = 0.5 * (x0 + x1);
      stack.push_back({m, x1});
      stack.push_back({x0, m});
    }
  }
  return sum;
}

AppendixAFit appendix_a_fit(int l, double delta, double y_min, double y_max, int samples) {
  if (samples < 5)
    throw InvalidInput("need at least 5 samples");
  if (!(y_min > 0 && y_max > y_min))
    throw InvalidInput("bad sampling range");
  AppendixAFit fit;
  fit.l = l;
  fit.delta = delta;
  const int na = l + 2; // 1, w, .., w^{l+1}
  Eigen::MatrixXcd A(samples, na + 1);
  Eigen::VectorXcd b(samples);
  for (int k = 0; k < samples; ++k) {
    double y = y_min * std::pow(y_max / y_min, double(k) / (samples - 1));
    cplx w(0.0, y);
    cplx v = appendix_a_integral(l, w, delta);
    fit.y.push_back(y);
    fit.values.push_back(v);
    for (int j = 0; j < na; ++j)
      A(k, j) = std::pow(w, j);
    A(k, na) = std::pow(w, l) * std::sqrt(w);
    b(k) = v;
  }
  // column scaling keeps the design well conditioned
  Eigen::VectorXd sc(na + 1);
  for (int j = 0; j <= na; ++j) {
    sc(j) = A.col(j).norm();
    A.col(j) /= sc(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(na) <= 1e-13 * svd.singularValues()(0))
    throw IllConditionedFit("model-integral design matrix is rank deficient");
  Eigen::VectorXcd c = svd.solve(b);
  for (int j = 0; j <= na; ++j)
    c(j) /= sc(j);
  for (int j = 0; j < na; ++j)
    fit.analytic.push_back(c(j));
  fit.constant = c(na);
  double rn = 0;
  for (int k = 0; k < samples; ++k) {
    cplx w(0.0, fit.y[k]);
    cplx an = 0;
    for (int j = 0; j < na; ++j)
      an += c(j) * std::pow(w, j);
    cplx model = an + fit.constant * std::pow(w, l) * std::sqrt(w);
    rn += std::norm(model - fit.values[k]);
    fit.scaled_remainder.push_back((fit.values[k] - an) / (std::pow(w, l) * std::sqrt(w)));
  }
  fit.residual_norm = std::sqrt(rn) / b.norm();
  return fit;
}

} // namespace dlat
