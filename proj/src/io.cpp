#include "dlat/io.hpp"

#include "dlat/errors.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dlat {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json num(double x) {
  if (!std::isfinite(x))
    return nullptr;
  return x;
}

nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({num(z.real()), num(z.imag())}); }

namespace {

std::ofstream open_out(const std::string &path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out)
    throw IoError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string &path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in)
    throw IoError("cannot read " + path);
  return in;
}

const char *boundary_name(Boundary b) { return b == Boundary::periodic ? "periodic" : "zero"; }

double parse_double(const std::string &s, const std::string &path) {
  char *end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str())
    throw IoError(path + ": bad number '" + s + "'");
  return v;
}

} // namespace

void write_grid_csv(const GridFunction &u, const std::string &path) {
  auto out = open_out(path);
  const auto &box = u.box();
  out << "# L=" << box.L() << " boundary=" << boundary_name(box.boundary()) << "\n";
  out << "x1,x2,x3,re,im\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    Site s = box.site(i);
    out << s.x1 << ',' << s.x2 << ',' << s.x3 << ',' << format_double(u[i].real()) << ','
        << format_double(u[i].imag()) << '\n';
  }
  if (!out)
    throw IoError("write failed for " + path);
}

GridFunction read_grid_csv(const std::string &path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw IoError(path + ": empty file");
  int L = 0;
  char bname[32] = {0};
  if (std::sscanf(line.c_str(), "# L=%d boundary=%31s", &L, bname) != 2)
    throw IoError(path + ": missing box header");
  Boundary b;
  if (std::strcmp(bname, "periodic") == 0)
    b = Boundary::periodic;
  else if (std::strcmp(bname, "zero") == 0)
    b = Boundary::zero;
  else
    throw IoError(path + ": unknown boundary " + bname);
  LatticeBox box(L, b);
  if (!std::getline(in, line) || line != "x1,x2,x3,re,im")
    throw IoError(path + ": missing column header");
  GridFunction u(box);
  std::vector<bool> seen(box.size(), false);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto &x : f)
      if (!std::getline(ss, x, ','))
        throw IoError(path + ": short row");
    Site s{std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2])};
    if (!box.contains(s))
      throw IoError(path + ": site outside the box");
    std::size_t i = box.index(s);
    if (seen[i])
      throw IoError(path + ": duplicate site");
    seen[i] = true;
    u[i] = cplx(parse_double(f[3], path), parse_double(f[4], path));
    ++rows;
  }
  if (rows != box.size())
    throw IoError(path + ": expected " + std::to_string(box.size()) + " rows");
  return u;
}

void write_grid_binary(const GridFunction &u, const std::string &path) {
  auto out = open_out(path, std::ios::binary);
  out.write("DLATGF01", 8);
  std::int32_t L = u.box().L(), b = u.box().boundary() == Boundary::periodic ? 0 : 1;
  std::uint64_t n = u.size();
  out.write(reinterpret_cast<const char *>(&L), 4);
  out.write(reinterpret_cast<const char *>(&b), 4);
  out.write(reinterpret_cast<const char *>(&n), 8);
  out.write(reinterpret_cast<const char *>(u.data()), std::streamsize(n * sizeof(cplx)));
  if (!out)
    throw IoError("write failed for " + path);
}

GridFunction read_grid_binary(const std::string &path) {
  auto in = open_in(path, std::ios::binary);
  char magic[8];
  std::int32_t L, b;
  std::uint64_t n;
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "DLATGF01", 8) != 0)
    throw IoError(path + ": not a grid file");
  in.read(reinterpret_cast<char *>(&L), 4);
  in.read(reinterpret_cast<char *>(&b), 4);
  in.read(reinterpret_cast<char *>(&n), 8);
  if (!in || (b != 0 && b != 1) || L < 1)
    throw IoError(path + ": corrupt header");
  LatticeBox box(L, b == 0 ? Boundary::periodic : Boundary::zero);
  if (n != box.size())
    throw IoError(path + ": size does not match the box");
  std::vector<cplx> v(n);
  in.read(reinterpret_cast<char *>(v.data()), std::streamsize(n * sizeof(cplx)));
  if (!in)
    throw IoError(path + ": truncated");
  return GridFunction(box, std::move(v));
}

void write_series_csv(const std::vector<double> &x, const std::vector<double> &y,
                      const std::string &header, const std::string &path) {
  if (x.size() != y.size())
    throw InvalidInput("series columns differ in length");
  auto out = open_out(path);
  out << header << '\n';
  for (std::size_t i = 0; i < x.size(); ++i)
    out << format_double(x[i]) << ',' << format_double(y[i]) << '\n';
  if (!out)
    throw IoError("write failed for " + path);
}

nlohmann::json curve_json(const DecayCurve &c) {
  return {{"sigma", num(c.sigma)},
          {"fit_slope", num(c.fit_slope)},
          {"fit_stderr", num(c.fit_stderr)},
          {"fit_window", {num(c.fit_window.first), num(c.fit_window.second)}},
          {"fit_points", c.fit_points},
          {"cutoff", num(c.cutoff)},
          {"in_hypothesis", c.in_hypothesis},
          {"samples", c.times.size()}};
}

std::vector<std::string> export_curve(const DecayCurve &curve, const std::string &path) {
  write_series_csv(curve.times, curve.values, "t,value", path);
  std::filesystem::path side(path);
  side.replace_extension(".json");
  write_json(curve_json(curve), side.string());
  return {path, side.string()};
}

std::pair<std::vector<double>, std::vector<double>> read_curve(const std::string &path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line))
    throw IoError(path + ": empty file");
  std::vector<double> t, v;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw IoError(path + ": malformed row");
    t.push_back(parse_double(line.substr(0, comma), path));
    v.push_back(parse_double(line.substr(comma + 1), path));
  }
  return {t, v};
}

void write_eigenpairs_csv(const std::vector<EigenPair> &pairs, const std::string &path) {
  auto out = open_out(path);
  out << "index,mu,multiplicity\n";
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out << i << ',' << format_double(pairs[i].mu) << ',' << pairs[i].multiplicity << '\n';
  if (!out)
    throw IoError("write failed for " + path);
}

nlohmann::json genericity_json(const GenericityReport &r) {
  nlohmann::json e = nlohmann::json::array();
  for (const auto &x : r.entries)
    e.push_back({{"omega", x.omega},
                 {"smin", num(x.smin)},
                 {"condition", num(x.condition)},
                 {"extrapolation_ok", x.extrapolation_ok},
                 {"note", x.note}});
  return {{"verdict", to_string(r.verdict)},
          {"entries", e},
          {"generic_threshold", GenericityReport::generic_threshold},
          {"degenerate_threshold", GenericityReport::degenerate_threshold}};
}

void write_json(const nlohmann::json &j, const std::string &path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out)
    throw IoError("write failed for " + path);
}

nlohmann::json read_json(const std::string &path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string sha256_file(const std::string &path) {
  auto in = open_in(path, std::ios::binary);
  EVP_MD_CTX *ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() > 0)
      EVP_DigestUpdate(ctx, buf.data(), std::size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

} // namespace dlat
