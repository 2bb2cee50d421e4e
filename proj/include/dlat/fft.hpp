#pragma once

#include <complex>
#include <vector>

namespace dlat {

/// In-place cubic 3D DFT of side n backed by FFTW. Plans are created once per
/// size with FFTW_ESTIMATE so that results are reproducible run to run.
class Fft3 {
public:
  static const Fft3 &get(int n);

  int n() const { return n_; }
  /// sign -1 (FFTW_FORWARD): sum a_j e^{-2 pi i jk/n}; sign +1: e^{+2 pi i jk/n}.
  void exec(std::vector<std::complex<double>> &a, int sign) const;
  void exec(std::complex<double> *a, int sign) const;

  Fft3(const Fft3 &) = delete;
  Fft3 &operator=(const Fft3 &) = delete;
  ~Fft3();

private:
  explicit Fft3(int n);
  int n_;
  void *fwd_ = nullptr;
  void *bwd_ = nullptr;
};

/// Smallest m >= n whose prime factors are 2, 3 and 5.
int fft_friendly_size(int n);

} // namespace dlat
