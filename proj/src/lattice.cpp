#include "dlat/lattice.hpp"

#include "dlat/errors.hpp"
#include "dlat/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <string>

namespace dlat {

int Site::l1() const { return std::abs(x1) + std::abs(x2) + std::abs(x3); }
int Site::linf() const { return std::max({std::abs(x1), std::abs(x2), std::abs(x3)}); }

LatticeBox::LatticeBox(int half_width, Boundary b) : L_(half_width), bc_(b) {
  if (half_width < 1)
    throw InvalidInput("box half-width must be >= 1, got " + std::to_string(half_width));
}

bool LatticeBox::contains(const Site &s) const {
  auto in = [&](int x) { return x >= lo() && x <= hi(); };
  return in(s.x1) && in(s.x2) && in(s.x3);
}

Site LatticeBox::wrap(const Site &s) const {
  if (bc_ == Boundary::zero)
    return s;
  int n = side();
  auto w = [&](int x) { return ((x - lo()) % n + n) % n + lo(); };
  return {w(s.x1), w(s.x2), w(s.x3)};
}

std::size_t LatticeBox::index(const Site &s) const {
  if (!contains(s))
    throw InvalidInput("site outside box");
  std::size_t n = side();
  return (std::size_t(s.x1 - lo()) * n + std::size_t(s.x2 - lo())) * n +
         std::size_t(s.x3 - lo());
}

Site LatticeBox::site(std::size_t i) const {
  std::size_t n = side();
  int x3 = int(i % n) + lo();
  i /= n;
  int x2 = int(i % n) + lo();
  int x1 = int(i / n) + lo();
  return {x1, x2, x3};
}

GridFunction::GridFunction(const LatticeBox &box) : box_(box), v_(box.size()) {}

GridFunction::GridFunction(const LatticeBox &box, std::vector<cplx> values)
    : box_(box), v_(std::move(values)) {
  if (v_.size() != box_.size())
    throw InvalidInput("value count " + std::to_string(v_.size()) +
                       " does not match box size " + std::to_string(box_.size()));
  if (!all_finite())
    throw InvalidInput("grid function has non-finite entries");
}

GridFunction GridFunction::delta(const LatticeBox &box, const Site &at) {
  GridFunction u(box);
  u.at(at) = 1.0;
  return u;
}

GridFunction GridFunction::plane_wave(const LatticeBox &box, int k1, int k2, int k3) {
  GridFunction u(box);
  double h = 2 * std::numbers::pi / box.side();
  for (std::size_t i = 0; i < u.size(); ++i) {
    Site x = box.site(i);
    u[i] = std::polar(1.0, h * (double(k1) * x.x1 + double(k2) * x.x2 + double(k3) * x.x3));
  }
  return u;
}

GridFunction GridFunction::gaussian(const LatticeBox &box, double width, const Site &c) {
  if (!(width > 0))
    throw InvalidInput("gaussian width must be positive");
  GridFunction u(box);
  for (std::size_t i = 0; i < u.size(); ++i) {
    Site x = box.site(i) - c;
    u[i] = std::exp(-double(x.norm2()) / (2 * width * width));
  }
  u *= 1.0 / norm(u);
  return u;
}

GridFunction GridFunction::random(const LatticeBox &box, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  GridFunction u(box);
  for (auto &z : u.v_) {
    double re = g(rng);
    z = {re, g(rng)};
  }
  return u;
}

static void require_same_box(const GridFunction &a, const GridFunction &b) {
  if (!(a.box() == b.box()))
    throw InvalidInput("grid functions live on different boxes");
}

GridFunction &GridFunction::operator+=(const GridFunction &o) {
  require_same_box(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i)
    v_[i] += o.v_[i];
  return *this;
}

GridFunction &GridFunction::operator-=(const GridFunction &o) {
  require_same_box(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i)
    v_[i] -= o.v_[i];
  return *this;
}

GridFunction &GridFunction::operator*=(cplx a) {
  for (auto &z : v_)
    z *= a;
  return *this;
}

GridFunction &GridFunction::axpy(cplx a, const GridFunction &x) {
  require_same_box(*this, x);
  for (std::size_t i = 0; i < v_.size(); ++i)
    v_[i] += a * x.v_[i];
  return *this;
}

GridFunction GridFunction::conj() const {
  GridFunction c(*this);
  for (auto &z : c.v_)
    z = std::conj(z);
  return c;
}

bool GridFunction::all_finite() const {
  return std::all_of(v_.begin(), v_.end(),
                     [](const cplx &z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

cplx dot(const GridFunction &a, const GridFunction &b) {
  require_same_box(a, b);
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += std::conj(a[i]) * b[i];
  return s;
}

double norm(const GridFunction &u) {
  double s = 0;
  for (const auto &z : u.values())
    s += std::norm(z);
  return std::sqrt(s);
}

Potential::Potential(std::vector<std::pair<Site, double>> entries) : e_(std::move(entries)) {
  std::set<Site> seen;
  for (const auto &[s, v] : e_) {
    if (!std::isfinite(v))
      throw InvalidInput("potential value is not finite");
    if (!seen.insert(s).second)
      throw InvalidInput("potential support has a duplicate site");
  }
}

std::vector<Site> Potential::sites() const {
  std::vector<Site> s;
  for (const auto &e : e_)
    s.push_back(e.first);
  return s;
}

std::vector<double> Potential::values() const {
  std::vector<double> s;
  for (const auto &e : e_)
    s.push_back(e.second);
  return s;
}

double Potential::value_at(const Site &s) const {
  for (const auto &e : e_)
    if (e.first == s)
      return e.second;
  return 0.0;
}

double Potential::min_value() const {
  double m = 0;
  for (const auto &e : e_)
    m = std::min(m, e.second);
  return m;
}

double Potential::max_value() const {
  double m = 0;
  for (const auto &e : e_)
    m = std::max(m, e.second);
  return m;
}

double Potential::max_abs() const { return std::max(-min_value(), max_value()); }

Potential Potential::scaled(double a) const {
  auto e = e_;
  for (auto &x : e)
    x.second *= a;
  return Potential(std::move(e));
}

double weight(const Site &x, double sigma) {
  return std::pow(1.0 + double(x.norm2()), 0.5 * sigma);
}

GridFunction apply_weight(const GridFunction &u, double sigma) {
  GridFunction w(u);
  const auto &box = u.box();
  int n = box.side();
  std::vector<double> sq(n);
  for (int i = 0; i < n; ++i) {
    double x = box.lo() + i;
    sq[i] = x * x;
  }
  std::size_t idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c, ++idx)
        w[idx] *= std::pow(1.0 + sq[a] + sq[b] + sq[c], 0.5 * sigma);
  return w;
}

double weighted_norm(const GridFunction &u, WeightOrder w) {
  if (!u.all_finite())
    throw InvalidInput("weighted_norm: non-finite entries");
  if (w.sigma == 0.0)
    return norm(u);
  const auto &box = u.box();
  int n = box.side();
  std::vector<double> sq(n);
  for (int i = 0; i < n; ++i) {
    double x = box.lo() + i;
    sq[i] = x * x;
  }
  double s = 0;
  std::size_t idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c, ++idx)
        s += std::pow(1.0 + sq[a] + sq[b] + sq[c], w.sigma) * std::norm(u[idx]);
  return std::sqrt(s);
}

namespace {

// Neighbour index along one axis, -1 when it leaves a zero-boundary box.
std::vector<int> neighbours(int n, bool periodic, int step) {
  std::vector<int> r(n);
  for (int i = 0; i < n; ++i) {
    int j = i + step;
    if (periodic)
      j = (j + n) % n;
    r[i] = (j < 0 || j >= n) ? -1 : j;
  }
  return r;
}

} // namespace

GridFunction apply_discrete_laplacian(const GridFunction &u) {
  const auto &box = u.box();
  int n = box.side();
  bool per = box.boundary() == Boundary::periodic;
  auto nx = neighbours(n, per, 1), px = neighbours(n, per, -1);
  GridFunction out(box);
  auto at = [&](int a, int b, int c) -> cplx {
    if (a < 0 || b < 0 || c < 0)
      return 0.0;
    return u[(std::size_t(a) * n + b) * n + c];
  };
  std::size_t idx = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c, ++idx)
        out[idx] = at(nx[a], b, c) + at(px[a], b, c) + at(a, nx[b], c) + at(a, px[b], c) +
                   at(a, b, nx[c]) + at(a, b, px[c]) - 6.0 * u[idx];
  return out;
}

void hamiltonian_fused(const GridFunction &u, const Potential &V, double shift, double a,
                       const GridFunction *prev, double b, GridFunction &out) {
  const auto &box = u.box();
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary("fused Hamiltonian needs a periodic box");
  const int n = box.side();
  const std::size_t n2 = std::size_t(n) * n;
  const cplx *U = u.data();
  const cplx *P = prev ? prev->data() : nullptr;
  cplx *O = out.data();
  const double diag = 6.0 - shift;
  for (int i1 = 0; i1 < n; ++i1) {
    const std::size_t r1p = std::size_t((i1 + 1) % n) * n2, r1m = std::size_t((i1 + n - 1) % n) * n2;
    for (int i2 = 0; i2 < n; ++i2) {
      const std::size_t base = std::size_t(i1) * n2 + std::size_t(i2) * n;
      const std::size_t b2p = std::size_t((i2 + 1) % n) * n, b2m = std::size_t((i2 + n - 1) % n) * n;
      const cplx *row = U + base;
      const cplx *up1 = U + r1p + std::size_t(i2) * n;
      const cplx *dn1 = U + r1m + std::size_t(i2) * n;
      const cplx *up2 = U + std::size_t(i1) * n2 + b2p;
      const cplx *dn2 = U + std::size_t(i1) * n2 + b2m;
      cplx *o = O + base;
      const cplx *p = P ? P + base : nullptr;
      auto cell = [&](int c, int cp, int cm) {
        cplx h = diag * row[c] - (up1[c] + dn1[c] + up2[c] + dn2[c] + row[cp] + row[cm]);
        o[c] = p ? a * h + b * p[c] : a * h;
      };
      cell(0, 1 % n, n - 1);
      if (p) {
        for (int c = 1; c < n - 1; ++c) {
          cplx h = diag * row[c] - (up1[c] + dn1[c] + up2[c] + dn2[c] + row[c + 1] + row[c - 1]);
          o[c] = a * h + b * p[c];
        }
      } else {
        for (int c = 1; c < n - 1; ++c) {
          cplx h = diag * row[c] - (up1[c] + dn1[c] + up2[c] + dn2[c] + row[c + 1] + row[c - 1]);
          o[c] = a * h;
        }
      }
      if (n > 1)
        cell(n - 1, 0, n - 2);
    }
  }
  for (const auto &[s, v] : V.entries()) {
    std::size_t i = box.index(box.wrap(s));
    O[i] += a * v * U[i];
  }
}

namespace {

void phase_flip(std::vector<cplx> &a, int n) {
  // multiplies by (-1)^{k1+k2+k3}
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx)
        if ((i + j + k) & 1)
          a[idx] = -a[idx];
}

void require_periodic(const LatticeBox &box, const char *what) {
  if (box.boundary() != Boundary::periodic)
    throw UnsupportedBoundary(std::string(what) + " needs a periodic box");
}

} // namespace

GridFunction torus_transform(const GridFunction &u, Direction d) {
  const auto &box = u.box();
  require_periodic(box, "torus_transform");
  int n = box.side();
  const auto &fft = Fft3::get(n);
  std::vector<cplx> a = u.values();
  if (d == Direction::forward) {
    fft.exec(a, +1);
    phase_flip(a, n);
  } else {
    phase_flip(a, n);
    fft.exec(a, -1);
    double s = 1.0 / double(box.size());
    for (auto &z : a)
      z *= s;
  }
  return GridFunction(box, std::move(a));
}

GridFunction apply_multiplier(const GridFunction &u, const std::vector<cplx> &m) {
  const auto &box = u.box();
  require_periodic(box, "Fourier multiplier");
  if (m.size() != box.size())
    throw InvalidInput("multiplier size mismatch");
  int n = box.side();
  const auto &fft = Fft3::get(n);
  std::vector<cplx> a = u.values();
  // The (-1)^k phases of the forward and inverse transforms cancel.
  fft.exec(a, +1);
  double s = 1.0 / double(box.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] *= m[i] * s;
  fft.exec(a, -1);
  GridFunction out(box);
  out.values() = std::move(a);
  return out;
}

std::array<double, 3> dual_theta(const LatticeBox &box, std::size_t i) {
  std::size_t n = box.side();
  double h = 2 * std::numbers::pi / double(n);
  return {h * double(i / (n * n)), h * double((i / n) % n), h * double(i % n)};
}

LinearOperator self_adjoint(std::function<GridFunction(const GridFunction &)> f) {
  return {f, f};
}

LinearOperator complex_symmetric(std::function<GridFunction(const GridFunction &)> f) {
  auto adj = [f](const GridFunction &v) { return f(v.conj()).conj(); };
  return {f, adj};
}

OperatorNormResult weighted_operator_norm_detail(const LinearOperator &A, WeightOrder from,
                                                 WeightOrder to, const LatticeBox &box,
                                                 const OperatorNormOptions &opt) {
  auto B = [&](const GridFunction &v) {
    return apply_weight(A.apply(apply_weight(v, -from.sigma)), to.sigma);
  };
  auto Bt = [&](const GridFunction &v) {
    return apply_weight(A.adjoint(apply_weight(v, to.sigma)), -from.sigma);
  };
  GridFunction v = GridFunction::random(box, opt.seed);
  v *= 1.0 / norm(v);
  double prev = -1.0, est = 0.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    GridFunction w = B(v);
    est = norm(w);
    if (est == 0.0)
      return {0.0, it};
    if (prev > 0 && std::abs(est - prev) <= 0.1 * opt.tol * est)
      return {est, it};
    prev = est;
    v = Bt(w);
    double nv = norm(v);
    if (nv == 0.0)
      return {est, it};
    v *= 1.0 / nv;
  }
  throw ConvergenceError("power iteration did not converge", est, {}, v.values());
}

double weighted_operator_norm(const LinearOperator &A, WeightOrder from, WeightOrder to,
                              const LatticeBox &box, const OperatorNormOptions &opt) {
  return weighted_operator_norm_detail(A, from, to, box, opt).norm;
}

} // namespace dlat
