#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace dlat {

using cplx = std::complex<double>;

struct Site {
  int x1 = 0, x2 = 0, x3 = 0;

  friend bool operator==(const Site &, const Site &) = default;
  friend auto operator<=>(const Site &, const Site &) = default;
  Site operator+(const Site &o) const { return {x1 + o.x1, x2 + o.x2, x3 + o.x3}; }
  Site operator-(const Site &o) const { return {x1 - o.x1, x2 - o.x2, x3 - o.x3}; }
  Site operator-() const { return {-x1, -x2, -x3}; }
  long norm2() const { return long(x1) * x1 + long(x2) * x2 + long(x3) * x3; }
  int l1() const;
  int linf() const;
};

enum class Boundary { periodic, zero };

/// Finite truncation of Z^3. Coordinates run over [-L, L) per axis for a
/// periodic box (a torus of side 2L) and over [-L, L] for a zero-boundary box.
class LatticeBox {
public:
  explicit LatticeBox(int half_width, Boundary b = Boundary::periodic);

  int L() const { return L_; }
  Boundary boundary() const { return bc_; }
  int side() const { return bc_ == Boundary::periodic ? 2 * L_ : 2 * L_ + 1; }
  int lo() const { return -L_; }
  int hi() const { return lo() + side() - 1; }
  std::size_t size() const {
    std::size_t s = side();
    return s * s * s;
  }

  bool contains(const Site &s) const;
  /// Periodic image of s inside the box; identity for a zero-boundary box.
  Site wrap(const Site &s) const;
  std::size_t index(const Site &s) const;
  Site site(std::size_t i) const;

  friend bool operator==(const LatticeBox &, const LatticeBox &) = default;

private:
  int L_;
  Boundary bc_;
};

/// Complex values on the sites of a box, x3 fastest.
class GridFunction {
public:
  explicit GridFunction(const LatticeBox &box);
  GridFunction(const LatticeBox &box, std::vector<cplx> values);

  static GridFunction delta(const LatticeBox &box, const Site &at = {});
  /// e^{i theta.x} with theta_j = 2 pi k_j / side.
  static GridFunction plane_wave(const LatticeBox &box, int k1, int k2, int k3);
  /// Normalized Gaussian profile exp(-|x-c|^2 / (2 s^2)).
  static GridFunction gaussian(const LatticeBox &box, double width,
                               const Site &center = {});
  static GridFunction random(const LatticeBox &box, std::uint64_t seed);

  const LatticeBox &box() const { return box_; }
  std::size_t size() const { return v_.size(); }
  const std::vector<cplx> &values() const { return v_; }
  std::vector<cplx> &values() { return v_; }
  cplx *data() { return v_.data(); }
  const cplx *data() const { return v_.data(); }

  cplx &operator[](std::size_t i) { return v_[i]; }
  const cplx &operator[](std::size_t i) const { return v_[i]; }
  cplx &at(const Site &s) { return v_[box_.index(s)]; }
  cplx at(const Site &s) const { return v_[box_.index(s)]; }

  GridFunction &operator+=(const GridFunction &o);
  GridFunction &operator-=(const GridFunction &o);
  GridFunction &operator*=(cplx a);
  GridFunction &axpy(cplx a, const GridFunction &x);
  friend GridFunction operator+(GridFunction a, const GridFunction &b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction &b) { return a -= b; }
  friend GridFunction operator*(cplx a, GridFunction b) { return b *= a; }

  GridFunction conj() const;
  bool all_finite() const;

private:
  LatticeBox box_;
  std::vector<cplx> v_;
};

/// <a, b> with the conjugate on the first argument.
cplx dot(const GridFunction &a, const GridFunction &b);
double norm(const GridFunction &u);

/// Real potential with finite, duplicate-free support.
class Potential {
public:
  Potential() = default;
  explicit Potential(std::vector<std::pair<Site, double>> entries);
  static Potential single(const Site &s, double v) { return Potential({{s, v}}); }

  bool empty() const { return e_.empty(); }
  std::size_t size() const { return e_.size(); }
  const std::vector<std::pair<Site, double>> &entries() const { return e_; }
  std::vector<Site> sites() const;
  std::vector<double> values() const;
  double value_at(const Site &s) const;
  double min_value() const;
  double max_value() const;
  double max_abs() const;
  Potential scaled(double a) const;

  friend bool operator==(const Potential &, const Potential &) = default;

private:
  std::vector<std::pair<Site, double>> e_;
};

struct WeightOrder {
  double sigma = 0.0;
};

/// (1+|x|^2)^{sigma/2}
double weight(const Site &x, double sigma);
GridFunction apply_weight(const GridFunction &u, double sigma);

double weighted_norm(const GridFunction &u, WeightOrder w);

/// 6-neighbour stencil minus 6 psi. Sites outside a zero-boundary box read as 0.
GridFunction apply_discrete_laplacian(const GridFunction &u);

/// Adds (-Delta + V - shift) u into out, scaled by a: out = a*((-Delta+V-shift)u) + b*prev.
/// Periodic boxes only. Used by the propagators.
void hamiltonian_fused(const GridFunction &u, const Potential &V, double shift,
                       double a, const GridFunction *prev, double b,
                       GridFunction &out);

enum class Direction { forward, inverse };

/// Forward: u_hat(theta_k) = sum_x u(x) e^{i theta_k x}, theta_k = 2 pi k / side,
/// mode k (k_j in [0, 2L)) stored in the slot of site k - L.
/// Inverse carries 1/(2L)^3.
GridFunction torus_transform(const GridFunction &u, Direction d);

/// Fourier multiplier: inverse(m * forward(u)) with m indexed like the dual grid.
GridFunction apply_multiplier(const GridFunction &u, const std::vector<cplx> &m);

/// theta_k for the dual slot with linear index i.
std::array<double, 3> dual_theta(const LatticeBox &box, std::size_t i);

struct LinearOperator {
  std::function<GridFunction(const GridFunction &)> apply;
  std::function<GridFunction(const GridFunction &)> adjoint;
};

LinearOperator self_adjoint(std::function<GridFunction(const GridFunction &)> f);
/// Operators with a symmetric kernel K(x,y) = K(y,x): A* v = conj(A conj(v)).
LinearOperator complex_symmetric(std::function<GridFunction(const GridFunction &)> f);

struct OperatorNormOptions {
  double tol = 1e-6;
  int max_iter = 5000;
  std::uint64_t seed = 12345;
};

struct OperatorNormResult {
  double norm = 0.0;
  int iterations = 0;
};

/// Largest singular value of W_to A W_from^{-1} by power iteration on B*B.
OperatorNormResult weighted_operator_norm_detail(const LinearOperator &A, WeightOrder from,
                                                 WeightOrder to, const LatticeBox &box,
                                                 const OperatorNormOptions &opt = {});
double weighted_operator_norm(const LinearOperator &A, WeightOrder from, WeightOrder to,
                              const LatticeBox &box, const OperatorNormOptions &opt = {});

} // namespace dlat
