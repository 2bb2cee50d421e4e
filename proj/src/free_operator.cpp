#include "dlat/free_operator.hpp"

#include "dlat/errors.hpp"
#include "dlat/fft.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>

namespace dlat {

namespace {

bool on_band(cplx w) { return w.imag() == 0.0 && w.real() >= 0.0 && w.real() <= 12.0; }
bool hyperbolic(double w) { return w == 4.0 || w == 8.0; }

double sign_l1(const Triple &t) { return ((t[0] + t[1] + t[2]) & 1) ? -1.0 : 1.0; }

} // namespace

void SpectralPoint::validate() const {
  if (!std::isfinite(omega.real()) || !std::isfinite(omega.imag()))
    throw InvalidInput("spectral point is not finite");
  if (side == Side::off_axis) {
    if (on_band(omega))
      throw DomainError("omega = " + std::to_string(omega.real()) +
                        " lies on the spectrum [0,12]; choose side upper or lower");
  } else if (!on_band(omega)) {
    throw InvalidInput("a boundary side needs real omega in [0,12]");
  }
}

std::vector<double> default_epsilons() {
  std::vector<double> e;
  for (int k = 0; k <= 8; ++k)
    e.push_back(0.1 * std::pow(2.0, -k));
  return e;
}

void QuadratureSpec::validate() const {
  if (M < 8 || M % 2 != 0)
    throw InvalidInput("quadrature grid M must be even and >= 8");
  if (epsilons.empty())
    throw InvalidInput("epsilon schedule is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0))
      throw InvalidInput("epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw InvalidInput("epsilons must be strictly decreasing");
  }
  if (extrapolation == Extrapolation::richardson && epsilons.size() < 3)
    throw InvalidInput("Richardson extrapolation needs at least 3 epsilons");
}

double symbol(double t1, double t2, double t3) {
  return 6.0 - 2.0 * (std::cos(t1) + std::cos(t2) + std::cos(t3));
}

double symbol(const std::array<double, 3> &t) { return symbol(t[0], t[1], t[2]); }

std::array<double, 3> symbol_gradient(const std::array<double, 3> &t) {
  return {2 * std::sin(t[0]), 2 * std::sin(t[1]), 2 * std::sin(t[2])};
}

std::vector<double> critical_values() { return {0.0, 4.0, 8.0, 12.0}; }

cplx richardson(const std::vector<cplx> &seq, const std::vector<double> &eps, double order) {
  std::size_t n = seq.size();
  double rho = std::pow(eps[n - 2] / eps[n - 1], order);
  return (rho * seq[n - 1] - seq[n - 2]) / (rho - 1.0);
}

BoundaryValue extrapolate_boundary(double omega, std::vector<cplx> seq, const QuadratureSpec &q) {
  BoundaryValue bv;
  const auto &eps = q.epsilons;
  std::size_t n = seq.size();
  for (std::size_t k = 0; k + 1 < n; ++k)
    bv.differences.push_back(std::abs(seq[k] - seq[k + 1]));
  // monotone decay is required on the tail only: while eps |z| is of order one
  // the sequence has not reached its asymptotic regime
  double floor = 1e-13 * (1.0 + std::abs(seq.back()));
  const std::size_t nd = bv.differences.size();
  for (std::size_t k = nd > 3 ? nd - 3 : 0; k + 1 < nd; ++k)
    if (bv.differences[k + 1] >= bv.differences[k] && bv.differences[k + 1] > floor)
      bv.converged = false;
  if (q.extrapolation == Extrapolation::none) {
    bv.value = seq.back();
  } else if (hyperbolic(omega)) {
    // two levels: sqrt(eps) then eps
    std::vector<cplx> a{seq[n - 3], seq[n - 2]}, b{seq[n - 2], seq[n - 1]};
    std::vector<double> ea{eps[n - 3], eps[n - 2]}, eb{eps[n - 2], eps[n - 1]};
    std::vector<cplx> lvl{richardson(a, ea, 0.5), richardson(b, eb, 0.5)};
    bv.value = richardson(lvl, eb, 1.0);
  } else {
    bv.value = richardson(seq, eps, 1.0);
  }
  bv.sequence = std::move(seq);
  return bv;
}

std::vector<BoundaryValue> boundary_values(double omega, Side side, const std::vector<Triple> &z,
                                           const QuadratureSpec &q) {
  SpectralPoint{omega, side}.validate();
  if (side == Side::off_axis)
    throw InvalidInput("boundary_values needs side upper or lower");
  q.validate();
  std::vector<BoundaryValue> out(z.size());
  if (omega == 0.0 || omega == 12.0) {
    auto r = laplace_kernels(0.0, z);
    for (std::size_t i = 0; i < z.size(); ++i) {
      double v = omega == 0.0 ? r[i] : -sign_l1(z[i]) * r[i];
      out[i].value = v;
      out[i].sequence.assign(q.epsilons.size(), v);
      out[i].differences.assign(q.epsilons.size() - 1, 0.0);
    }
    return out;
  }
  std::vector<cplx> ws;
  for (double e : q.epsilons)
    ws.push_back(cplx(omega, e));
  Eigen::MatrixXcd m = time_domain_kernels(ws, z);
  for (std::size_t i = 0; i < z.size(); ++i) {
    std::vector<cplx> seq(ws.size());
    for (std::size_t k = 0; k < ws.size(); ++k)
      seq[k] = side == Side::upper ? m(k, i) : std::conj(m(k, i));
    out[i] = extrapolate_boundary(omega, std::move(seq), q);
  }
  return out;
}

std::vector<cplx> free_resolvent_kernels(const SpectralPoint &at, const std::vector<Triple> &z,
                                         const QuadratureSpec &q) {
  at.validate();
  q.validate();
  std::vector<cplx> out(z.size());
  if (z.empty())
    return out;
  const cplx w = at.omega;
  if (at.side != Side::off_axis) {
    auto bv = boundary_values(w.real(), at.side, z, q);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!bv[i].converged)
        throw ConvergenceError("eps extrapolation of the free kernel did not converge",
                               std::abs(bv[i].value), bv[i].differences);
      out[i] = bv[i].value;
    }
    return out;
  }
  int zmax = 0;
  for (const auto &t : z)
    zmax = std::max(zmax, t[2]);
  const double kappa = kappa_estimate(w);
  if (kappa * q.M >= 36.0) {
    if (z.size() > 16 && 2 * zmax < q.M && kappa * (q.M - zmax) >= 36.0)
      return trapezoid_kernels_fft(w, z, q.M);
    return trapezoid_kernels(w, z, q.M);
  }
  if (w.imag() == 0.0) {
    if (w.real() < 0) {
      auto r = laplace_kernels(w.real(), z);
      for (std::size_t i = 0; i < z.size(); ++i)
        out[i] = r[i];
    } else {
      // R0(w, z) = -(-1)^{|z|_1} R0(12 - w, z)
      auto r = laplace_kernels(12.0 - w.real(), z);
      for (std::size_t i = 0; i < z.size(); ++i)
        out[i] = -sign_l1(z[i]) * r[i];
    }
    return out;
  }
  bool lower = w.imag() < 0;
  Eigen::MatrixXcd m = time_domain_kernels({lower ? std::conj(w) : w}, z);
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = lower ? std::conj(m(0, i)) : m(0, i);
  return out;
}

std::vector<cplx> free_resolvent_kernels(const SpectralPoint &at, const std::vector<Site> &z,
                                         const QuadratureSpec &q) {
  std::map<Triple, std::size_t> slot;
  std::vector<Triple> uniq;
  std::vector<std::size_t> where(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    Triple t = canonical(z[i]);
    auto it = slot.find(t);
    if (it == slot.end()) {
      it = slot.emplace(t, uniq.size()).first;
      uniq.push_back(t);
    }
    where[i] = it->second;
  }
  auto v = free_resolvent_kernels(at, uniq, q);
  std::vector<cplx> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = v[where[i]];
  return out;
}

cplx free_resolvent_kernel(const SpectralPoint &at, const Site &z, const QuadratureSpec &q) {
  return free_resolvent_kernels(at, std::vector<Site>{z}, q)[0];
}

KernelBlock kernel_block(const SpectralPoint &at, const std::vector<Site> &rows,
                         const std::vector<Site> &cols, const QuadratureSpec &q) {
  std::vector<Site> diffs;
  for (const auto &r : rows)
    for (const auto &c : cols)
      diffs.push_back(r - c);
  auto v = free_resolvent_kernels(at, diffs, q);
  KernelBlock b{rows, cols, Eigen::MatrixXcd(rows.size(), cols.size()), at};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      b.values(i, j) = v[i * cols.size() + j];
  return b;
}

KernelTable::KernelTable(int R, const std::vector<Triple> &triples, const std::vector<cplx> &values)
    : R_(R) {
  if (triples.size() != values.size())
    throw InvalidInput("kernel table: triple/value count mismatch");
  const int n = R + 1;
  std::vector<long> lookup(std::size_t(n) * n * n, -1);
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto &t = triples[i];
    if (t[2] <= R)
      lookup[(t[0] * n + t[1]) * n + t[2]] = long(i);
  }
  const int s = 2 * R + 1;
  v_.resize(std::size_t(s) * s * s);
  std::size_t idx = 0;
  for (int a = -R; a <= R; ++a)
    for (int b = -R; b <= R; ++b)
      for (int c = -R; c <= R; ++c, ++idx) {
        Triple t = canonical({a, b, c});
        long k = lookup[(t[0] * n + t[1]) * n + t[2]];
        if (k < 0)
          throw InvalidInput("kernel table: missing offset");
        v_[idx] = values[k];
      }
}

cplx KernelTable::operator()(const Site &z) const {
  if (z.linf() > R_)
    throw InvalidInput("offset outside kernel table");
  const int s = 2 * R_ + 1;
  return v_[(std::size_t(z.x1 + R_) * s + (z.x2 + R_)) * s + (z.x3 + R_)];
}

KernelTable KernelTable::combine(cplx a, const KernelTable &o, cplx b) const {
  if (o.R_ != R_)
    throw InvalidInput("kernel tables differ in range");
  KernelTable r(*this);
  for (std::size_t i = 0; i < v_.size(); ++i)
    r.v_[i] = a * v_[i] + b * o.v_[i];
  return r;
}

KernelTable make_kernel_table(const SpectralPoint &at, int R, const QuadratureSpec &q) {
  auto tr = canonical_triples(R);
  auto v = free_resolvent_kernels(at, tr, q);
  return KernelTable(R, tr, v);
}

BoundaryTables make_boundary_tables(double omega, Side side, int R, const QuadratureSpec &q) {
  auto tr = canonical_triples(R);
  auto bv = boundary_values(omega, side, tr, q);
  BoundaryTables out;
  std::vector<cplx> lim(tr.size()), col(tr.size());
  auto shorter = q;
  shorter.epsilons.pop_back();
  std::vector<cplx> prev(tr.size());
  for (std::size_t i = 0; i < tr.size(); ++i) {
    lim[i] = bv[i].value;
    out.converged = out.converged && bv[i].converged;
    auto s = bv[i].sequence;
    s.pop_back();
    prev[i] = extrapolate_boundary(omega, std::move(s), shorter).value;
  }
  out.previous_limit = KernelTable(R, tr, prev);
  for (std::size_t k = 0; k < q.epsilons.size(); ++k) {
    for (std::size_t i = 0; i < tr.size(); ++i)
      col[i] = bv[i].sequence[k];
    out.per_eps.emplace_back(R, tr, col);
  }
  out.limit = KernelTable(R, tr, lim);
  return out;
}

CompressedOperator::CompressedOperator(const LatticeBox &box, const KernelTable &K)
    : box_(box), N_(fft_friendly_size(2 * box.side() - 1)) {
  const int s = box.side();
  if (K.R() < s - 1)
    throw InvalidInput("kernel table too short for the box");
  const std::size_t N = N_;
  khat_.assign(N * N * N, 0.0);
  for (int a = -(s - 1); a <= s - 1; ++a)
    for (int b = -(s - 1); b <= s - 1; ++b)
      for (int c = -(s - 1); c <= s - 1; ++c) {
        std::size_t i = ((a + N) % N * N + (b + N) % N) * N + (c + N) % N;
        khat_[i] = K({a, b, c});
      }
  Fft3::get(N_).exec(khat_, -1);
}

GridFunction CompressedOperator::apply(const GridFunction &f) const {
  if (!(f.box() == box_))
    throw InvalidInput("compressed operator applied on a different box");
  const std::size_t N = N_, s = box_.side();
  std::vector<cplx> buf(N * N * N, 0.0);
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b)
      for (std::size_t c = 0; c < s; ++c)
        buf[(a * N + b) * N + c] = f[(a * s + b) * s + c];
  const auto &fft = Fft3::get(N_);
  fft.exec(buf, -1);
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] *= khat_[i];
  fft.exec(buf, +1);
  GridFunction out(box_);
  double sc = 1.0 / double(N * N * N);
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b)
      for (std::size_t c = 0; c < s; ++c)
        out[(a * s + b) * s + c] = buf[(a * N + b) * N + c] * sc;
  return out;
}

std::vector<double> symbol_grid(const LatticeBox &box) {
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary("symbol grid needs a periodic box");
  const int n = box.side();
  std::vector<double> c(n);
  for (int k = 0; k < n; ++k)
    c[k] = std::cos(2 * std::numbers::pi * k / n);
  std::vector<double> g(box.size());
  std::size_t idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d, ++idx)
        g[idx] = 6.0 - 2.0 * (c[a] + c[b] + c[d]);
  return g;
}

GridFunction periodic_kernel_column(const LatticeBox &box, cplx omega) {
  auto phi = symbol_grid(box);
  std::vector<cplx> m(phi.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = 1.0 / (phi[i] - omega);
  return apply_multiplier(GridFunction::delta(box), m);
}

GridFunction free_resolvent_apply(const SpectralPoint &at, const GridFunction &f,
                                  const QuadratureSpec &q) {
  at.validate();
  const auto &box = f.box();
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary("free_resolvent_apply needs a periodic box");
  if (at.side == Side::off_axis) {
    auto phi = symbol_grid(box);
    std::vector<cplx> m(phi.size());
    for (std::size_t i = 0; i < m.size(); ++i)
      m[i] = 1.0 / (phi[i] - at.omega);
    return apply_multiplier(f, m);
  }
  auto tabs = make_boundary_tables(at.omega.real(), at.side, box.side() - 1, q);
  if (!tabs.converged)
    throw ConvergenceError("eps extrapolation did not converge", 0.0);
  return CompressedOperator(box, tabs.limit).apply(f);
}

GridFunction free_propagator(const GridFunction &psi0, double t) {
  auto phi = symbol_grid(psi0.box());
  std::vector<cplx> m(phi.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    m[i] = std::polar(1.0, -t * phi[i]);
  return apply_multiplier(psi0, m);
}

} // namespace dlat
