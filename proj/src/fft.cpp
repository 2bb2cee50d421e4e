#include "dlat/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace dlat {

namespace {
std::mutex &plan_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

Fft3::Fft3(int n) : n_(n) {
  std::vector<std::complex<double>> buf(std::size_t(n) * n * n);
  auto *p = reinterpret_cast<fftw_complex *>(buf.data());
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fwd_ = fftw_plan_dft_3d(n, n, n, p, p, FFTW_FORWARD, flags);
  bwd_ = fftw_plan_dft_3d(n, n, n, p, p, FFTW_BACKWARD, flags);
}

Fft3::~Fft3() {
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

const Fft3 &Fft3::get(int n) {
  static std::map<int, std::unique_ptr<Fft3>> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, std::unique_ptr<Fft3>(new Fft3(n))).first;
  return *it->second;
}

void Fft3::exec(std::complex<double> *a, int sign) const {
  auto *p = reinterpret_cast<fftw_complex *>(a);
  fftw_execute_dft(static_cast<fftw_plan>(sign < 0 ? fwd_ : bwd_), p, p);
}

void Fft3::exec(std::vector<std::complex<double>> &a, int sign) const {
  exec(a.data(), sign);
}

int fft_friendly_size(int n) {
  for (int m = std::max(n, 1);; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0)
        r /= p;
    if (r == 1)
      return m;
  }
}

} // namespace dlat
