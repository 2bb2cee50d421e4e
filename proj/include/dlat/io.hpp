#pragma once

#include "dlat/dynamics.hpp"
#include "dlat/lattice.hpp"
#include "dlat/perturbed.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace dlat {

/// 17 significant digits, which round-trips every double.
std::string format_double(double x);

/// CSV "x1,x2,x3,re,im" preceded by a "# L=<L> boundary=<periodic|zero>" line.
void write_grid_csv(const GridFunction &u, const std::string &path);
GridFunction read_grid_csv(const std::string &path);

/// Binary: magic "DLATGF01", int32 L, int32 boundary, uint64 count, then
/// count pairs of little-endian doubles (re, im) in site order.
void write_grid_binary(const GridFunction &u, const std::string &path);
GridFunction read_grid_binary(const std::string &path);

/// CSV with header "t,value" and a JSON sidecar (same stem, ".json") holding
/// the fit. Returns the two paths written.
std::vector<std::string> export_curve(const DecayCurve &curve, const std::string &path);
/// Generic two-column series with a custom header.
void write_series_csv(const std::vector<double> &x, const std::vector<double> &y,
                      const std::string &header, const std::string &path);
/// Reads back the two columns of a curve CSV.
std::pair<std::vector<double>, std::vector<double>> read_curve(const std::string &path);
nlohmann::json curve_json(const DecayCurve &curve);

/// "index,mu,multiplicity" rows; eigenfunctions go to separate grid files.
void write_eigenpairs_csv(const std::vector<EigenPair> &pairs, const std::string &path);
nlohmann::json genericity_json(const GenericityReport &r);

void write_json(const nlohmann::json &j, const std::string &path);
nlohmann::json read_json(const std::string &path);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string &path);

/// JSON-safe number: NaN and infinities become null.
nlohmann::json num(double x);
nlohmann::json cplx_json(cplx z);

} // namespace dlat
