#pragma once

#include "dlat/free_operator.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dlat {

struct KernelKey {
  double re = 0.0, im = 0.0; // omega
  int branch = 0;            // +1 for omega + i0, -1 for omega - i0, 0 off the axis
  int side = 0;              // box side, 0 for kernels on Z^3
  Triple z{0, 0, 0};
  int M = 0;
  std::uint64_t eps_hash = 0;
  auto operator<=>(const KernelKey &) const = default;
};

/// FNV-1a over the bit patterns of the schedule.
std::uint64_t epsilon_hash(const std::vector<double> &eps);

KernelKey kernel_key(const SpectralPoint &at, const Triple &z, const QuadratureSpec &q,
                     int side = 0);

/// Append-only text table of kernel values. Doubles are written as hexfloats
/// so a re-read is bit-identical. Entries are invalidated by key only.
class KernelCache {
public:
  /// Loads the file if it exists; later inserts append to it.
  explicit KernelCache(std::string path);

  std::optional<cplx> lookup(const KernelKey &k) const;
  void insert(const KernelKey &k, cplx value);
  std::size_t size() const { return table_.size(); }
  const std::string &path() const { return path_; }

private:
  std::string path_;
  std::map<KernelKey, cplx> table_;
};

/// free_resolvent_kernels through the cache: hits are read back, misses are
/// computed in one batch and appended.
std::vector<cplx> cached_kernels(KernelCache &cache, const SpectralPoint &at,
                                 const std::vector<Triple> &z, const QuadratureSpec &q = {});

} // namespace dlat
