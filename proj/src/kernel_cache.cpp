#include "dlat/kernel_cache.hpp"

#include "dlat/errors.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dlat {

std::uint64_t epsilon_hash(const std::vector<double> &eps) {
  std::uint64_t h = 1469598103934665603ull;
  for (double e : eps) {
    std::uint64_t bits;
    std::memcpy(&bits, &e, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

KernelKey kernel_key(const SpectralPoint &at, const Triple &z, const QuadratureSpec &q, int side) {
  KernelKey k;
  k.re = at.omega.real();
  k.im = at.omega.imag();
  k.branch = at.side == Side::upper ? 1 : at.side == Side::lower ? -1 : 0;
  k.side = side;
  k.z = z;
  k.M = q.M;
  k.eps_hash = at.side == Side::off_axis ? 0 : epsilon_hash(q.epsilons);
  return k;
}

namespace {

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

} // namespace

KernelCache::KernelCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in)
    return;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ss(line);
    std::string re, im, vr, vi, h;
    KernelKey k;
    if (!(ss >> re >> im >> k.branch >> k.side >> k.z[0] >> k.z[1] >> k.z[2] >> k.M >> h >> vr >> vi))
      throw IoError(path_ + ":" + std::to_string(lineno) + ": malformed cache entry");
    k.re = std::strtod(re.c_str(), nullptr);
    k.im = std::strtod(im.c_str(), nullptr);
    k.eps_hash = std::strtoull(h.c_str(), nullptr, 16);
    table_[k] = cplx(std::strtod(vr.c_str(), nullptr), std::strtod(vi.c_str(), nullptr));
  }
}

std::optional<cplx> KernelCache::lookup(const KernelKey &k) const {
  auto it = table_.find(k);
  if (it == table_.end())
    return std::nullopt;
  return it->second;
}

void KernelCache::insert(const KernelKey &k, cplx value) {
  if (table_.count(k))
    return;
  table_[k] = value;
  std::ofstream out(path_, std::ios::app);
  if (!out)
    throw IoError("cannot append to kernel cache " + path_);
  char h[32];
  std::snprintf(h, sizeof h, "%016" PRIx64, k.eps_hash);
  out << hex(k.re) << ' ' << hex(k.im) << ' ' << k.branch << ' ' << k.side << ' ' << k.z[0] << ' ' << k.z[1] << ' '
      << k.z[2] << ' ' << k.M << ' ' << h << ' ' << hex(value.real()) << ' '
      << hex(value.imag()) << '\n';
}

std::vector<cplx> cached_kernels(KernelCache &cache, const SpectralPoint &at,
                                 const std::vector<Triple> &z, const QuadratureSpec &q) {
  std::vector<cplx> out(z.size());
  std::vector<Triple> miss;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (auto v = cache.lookup(kernel_key(at, z[i], q))) {
      out[i] = *v;
    } else {
      miss.push_back(z[i]);
      where.push_back(i);
    }
  }
  if (!miss.empty()) {
    auto vals = free_resolvent_kernels(at, miss, q);
    for (std::size_t j = 0; j < miss.size(); ++j) {
      out[where[j]] = vals[j];
      cache.insert(kernel_key(at, miss[j], q), vals[j]);
    }
  }
  return out;
}

} // namespace dlat
