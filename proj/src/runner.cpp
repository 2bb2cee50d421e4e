#include "dlat/runner.hpp"

#include "dlat/asymptotics.hpp"
#include "dlat/dynamics.hpp"
#include "dlat/errors.hpp"
#include "dlat/io.hpp"
#include "dlat/kernel_cache.hpp"
#include "dlat/kernel_engine.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <openssl/crypto.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <limits>

namespace dlat {

using nlohmann::json;
namespace fs = std::filesystem;

json RunManifest::to_json() const {
  json f = json::array();
  for (const auto &[name, hash] : files)
    f.push_back({{"file", name}, {"sha256", hash}});
  return {{"config", config},      {"files", f},        {"wall_seconds", wall_seconds},
          {"versions", versions},  {"diagnostics", diagnostics},
          {"status", status},      {"error", error},    {"exit_code", exit_code}};
}

int exit_code_for(const std::exception &e) {
  if (dynamic_cast<const ConfigError *>(&e) || dynamic_cast<const InvalidInput *>(&e) ||
      dynamic_cast<const DomainError *>(&e) || dynamic_cast<const UnsupportedBoundary *>(&e) ||
      dynamic_cast<const BoxTooSmall *>(&e))
    return 2;
  if (dynamic_cast<const ConvergenceError *>(&e) || dynamic_cast<const NearEigenvalueError *>(&e) ||
      dynamic_cast<const IllConditionedFit *>(&e) || dynamic_cast<const NonGenericError *>(&e) ||
      dynamic_cast<const BoundaryCollision *>(&e) || dynamic_cast<const ValidationError *>(&e))
    return 3;
  return 1;
}

namespace {

json versions() {
  return {{"dlat", "1.0.0"},
          {"fftw", std::string(fftw_version)},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                        "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"openssl", std::string(OpenSSL_version(OPENSSL_VERSION))}};
}

/// Tracks every artifact written during a run.
class Outputs {
public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  std::string path(const std::string &name) {
    names_.push_back(name);
    return (dir_ / name).string();
  }
  const std::vector<std::string> &names() const { return names_; }
  const fs::path &dir() const { return dir_; }

private:
  fs::path dir_;
  std::vector<std::string> names_;
};

Site site_of(const json &j) { return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()}; }

GridFunction initial_state(const ExperimentConfig &cfg, const LatticeBox &box) {
  const json &in = cfg.params.at("initial");
  const std::string type = in.at("type");
  if (type == "delta")
    return GridFunction::delta(box, site_of(in.at("center")));
  if (type == "gaussian")
    return GridFunction::gaussian(box, in.at("width").get<double>(), site_of(in.at("center")));
  if (type == "random") {
    auto u = GridFunction::random(box, cfg.seed);
    u *= 1.0 / norm(u);
    return u;
  }
  fs::path f(in.at("file").get<std::string>());
  if (f.is_relative() && !cfg.base_dir.empty())
    f = fs::path(cfg.base_dir) / f;
  GridFunction u = f.extension() == ".csv" ? read_grid_csv(f.string()) : read_grid_binary(f.string());
  if (!(u.box() == box))
    throw ConfigError("initial state file does not match the lattice", "params.initial.file");
  return u;
}

double fit_max(const ExperimentConfig &cfg) {
  double v = cfg.number_or_nan("t_fit_max");
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

json pairs_json(const std::vector<EigenPair> &pairs) {
  json a = json::array();
  for (const auto &p : pairs)
    a.push_back({{"mu", p.mu}, {"multiplicity", p.multiplicity}});
  return a;
}

void run_lap(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  const double omega = cfg.number("omega"), sigma = cfg.number("sigma");
  LapOptions opt;
  opt.both_sides = cfg.params.at("sides") == "both";
  opt.gap_fraction = cfg.number("gap_fraction");
  opt.norm.tol = cfg.number("norm_tol");
  opt.norm.max_iter = cfg.integer("norm_iterations");
  opt.norm.seed = cfg.seed;
  auto rep = lap_convergence_study(omega, sigma, cfg.potential, cfg.box(), cfg.quadrature, opt);
  std::vector<double> k;
  for (std::size_t i = 0; i < rep.cauchy_differences.size(); ++i)
    k.push_back(double(i));
  write_series_csv(k, rep.cauchy_differences, "k,difference", out.path("cauchy.csv"));
  json j{{"omega", omega},
         {"sigma", sigma},
         {"converged", rep.converged},
         {"cauchy_differences", rep.cauchy_differences},
         {"extrapolated_norm", num(rep.extrapolated_norm)},
         {"extrapolation_gap", num(rep.extrapolation_gap)},
         {"side_gap", rep.side_gap < 0 ? json(nullptr) : json(rep.side_gap)},
         {"in_hypothesis", rep.in_hypothesis},
         {"note", rep.note}};
  write_json(j, out.path("lap.json"));
  diag["converged"] = rep.converged;

  const int r = cfg.integer("kernel_radius");
  if (r >= 0) {
    std::string cache_file = cfg.params.at("cache_file");
    KernelCache cache(cache_file.empty() ? (out.dir() / "kernel_cache.txt").string()
                                         : cache_file);
    SpectralPoint at = omega >= 0 && omega <= 12 ? SpectralPoint::upper(omega)
                                                 : SpectralPoint::off_axis(omega);
    auto tr = canonical_triples(r);
    auto vals = cached_kernels(cache, at, tr, cfg.quadrature);
    auto path = out.path("kernels.csv");
    std::ofstream f(path);
    f << "z1,z2,z3,re,im\n";
    for (std::size_t i = 0; i < tr.size(); ++i)
      f << tr[i][0] << ',' << tr[i][1] << ',' << tr[i][2] << ',' << format_double(vals[i].real())
        << ',' << format_double(vals[i].imag()) << '\n';
    if (cache_file.empty())
      out.path("kernel_cache.txt");
  }
}

void run_puiseux(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  const double base = cfg.number("base");
  std::vector<Probe> probes;
  for (const auto &p : cfg.params.at("probes"))
    probes.push_back({site_of(p[0]), site_of(p[1])});
  auto mags = cfg.params.at("magnitudes").get<std::vector<double>>();
  auto dv = cfg.params.at("direction").get<std::vector<double>>();
  cplx dir = 0.0;
  if (dv.size() == 2)
    dir = std::polar(1.0, std::arg(cplx(dv[0], dv[1])));
  else if (!dv.empty())
    throw ConfigError("expected [re, im] or []", "params.direction");
  auto rs = resolvent_ray_samples(base, cfg.potential, probes, mags, cfg.quadrature, dir);
  auto model = is_elliptic(base) ? PuiseuxModel::elliptic : PuiseuxModel::hyperbolic;
  auto fit = puiseux_fit(rs, model);
  {
    std::ofstream f(out.path("samples.csv"));
    f << "magnitude,entry,re,im\n";
    for (Eigen::Index i = 0; i < rs.values.rows(); ++i)
      for (Eigen::Index j = 0; j < rs.values.cols(); ++j)
        f << format_double(mags[i]) << ',' << j << ',' << format_double(rs.values(i, j).real())
          << ',' << format_double(rs.values(i, j).imag()) << '\n';
  }
  json c0 = json::array(), ch = json::array(), c1 = json::array();
  for (std::size_t i = 0; i < probes.size(); ++i) {
    c0.push_back(cplx_json(fit.c0[i]));
    ch.push_back(cplx_json(fit.c_half[i]));
    c1.push_back(cplx_json(fit.c1[i]));
  }
  json j{{"base", base},
         {"direction", cplx_json(rs.direction)},
         {"model", to_string(fit.model)},
         {"c0", c0},
         {"c_half", ch},
         {"c1", c1},
         {"residual_norm", fit.residual_norm},
         {"exponent_estimate", fit.exponent_estimate},
         {"exponents", fit.exponents}};
  if (model == PuiseuxModel::hyperbolic) {
    if (mags.front() * 1.05 <= 0.1) {
      auto br = differentiated_blowup_rates(base, cfg.potential, probes.front(), mags,
                                            cfg.quadrature);
      j["derivative_slopes"] = {{"first", br.d1_slope}, {"second", br.d2_slope}};
      j["max_abs_sample"] = br.max_abs;
    } else {
      j["derivative_slopes"] = nullptr;
      j["derivative_note"] = "largest magnitude leaves no room for a central difference";
    }
  }
  if (cfg.params.at("crosscheck").get<bool>()) {
    auto cc = perturbed_constant_crosscheck(cfg.potential, base, cfg.quadrature, probes, mags);
    j["crosscheck"] = {{"max_relative_difference", cc.max_relative_difference}, {"smin", cc.smin}};
  }
  write_json(j, out.path("fit.json"));
  diag["exponent_estimate"] = fit.exponent_estimate;
  diag["residual_norm"] = fit.residual_norm;
}

void run_spectrum(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  auto box = cfg.box();
  auto pairs = cfg.potential.empty() ? std::vector<EigenPair>{}
                                     : find_eigenvalues(cfg.potential, cfg.number("tol"), box);
  write_eigenpairs_csv(pairs, out.path("eigenvalues.csv"));
  for (std::size_t i = 0; i < pairs.size(); ++i)
    write_grid_binary(pairs[i].u, out.path("eigenfunction_" + std::to_string(i) + ".bin"));
  diag["eigenvalues"] = pairs_json(pairs);
  diag["count"] = pairs.size();
  diag["support_size"] = cfg.potential.size();
  if (cfg.params.at("genericity").get<bool>() && !cfg.potential.empty()) {
    auto g = genericity_check(cfg.potential, cfg.quadrature);
    write_json(genericity_json(g), out.path("genericity.json"));
    diag["genericity"] = to_string(g.verdict);
  }
}

void run_evolve(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  auto box = cfg.box();
  auto psi0 = initial_state(cfg, box);
  auto times = time_grid(cfg.number("t_max"), cfg.number("dt"));
  const std::size_t probe = box.index(site_of(cfg.params.at("probe")));
  std::vector<double> amp, charge;
  GridFunction last = psi0;
  auto info = evolve_schrodinger(cfg.potential, psi0, times, [&](double, const GridFunction &s) {
    amp.push_back(std::abs(s[probe]));
    charge.push_back(norm(s));
    last = s;
  });
  write_series_csv(times, amp, "t,value", out.path("amplitude.csv"));
  write_series_csv(times, charge, "t,value", out.path("charge.csv"));
  write_grid_binary(last, out.path("final_state.bin"));
  diag["method"] = info.method;
  diag["max_degree"] = info.max_degree;
  diag["charge_drift"] = info.charge_drift;
}

std::vector<EigenPair> bound_states(const ExperimentConfig &cfg, const LatticeBox &box) {
  if (cfg.potential.empty())
    return {};
  return find_eigenvalues(cfg.potential, cfg.number("eig_tol"), box);
}

void run_decay(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  auto box = cfg.box();
  auto psi0 = initial_state(cfg, box);
  auto pairs = cfg.params.at("subtract_bound_states").get<bool>() ? bound_states(cfg, box)
                                                                   : std::vector<EigenPair>{};
  DecayOptions opt;
  opt.t_fit_min = cfg.number("t_fit_min");
  opt.t_fit_max = fit_max(cfg);
  double tmax = cfg.number_or_nan("t_max");
  if (std::isnan(tmax))
    tmax = wraparound_cutoff(box);
  MethodInfo info;
  auto curve = measure_dispersive_decay(cfg.potential, psi0, pairs, time_grid(tmax, cfg.number("dt")),
                                        cfg.number("sigma"), opt, &info);
  export_curve(curve, out.path("decay.csv"));
  out.path("decay.json");
  if (!pairs.empty())
    write_eigenpairs_csv(pairs, out.path("eigenvalues.csv"));
  diag["fit_slope"] = num(curve.fit_slope);
  diag["fit_stderr"] = num(curve.fit_stderr);
  diag["cutoff"] = curve.cutoff;
  diag["in_hypothesis"] = curve.in_hypothesis;
  diag["charge_drift"] = info.charge_drift;
  diag["bound_states"] = pairs_json(pairs);
  if (int n = cfg.integer("operator_samples"); n > 0) {
    auto op = sampled_operator_decay(cfg.potential, box, pairs, time_grid(tmax, cfg.number("dt")),
                                     cfg.number("sigma"), n, cfg.seed, opt);
    export_curve(op, out.path("operator_decay.csv"));
    out.path("operator_decay.json");
    diag["operator_fit_slope"] = num(op.fit_slope);
    diag["operator_samples"] = n;
  }
}

void run_scatter(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  auto box = cfg.box();
  auto psi0 = initial_state(cfg, box);
  auto pairs = bound_states(cfg, box);
  ScatteringOptions opt;
  opt.panel = cfg.number("panel");
  opt.fit.t_fit_min = cfg.number("t_fit_min");
  opt.fit.t_fit_max = fit_max(cfg);
  double tmax = cfg.number_or_nan("t_max");
  if (std::isnan(tmax))
    tmax = box.side() / schrodinger_vmax;
  auto res = scattering_state(cfg.potential, psi0, pairs, tmax, cfg.number("sigma"), opt);
  export_curve(res.remainder, out.path("remainder.csv"));
  out.path("remainder.json");
  write_series_csv(res.integrand_times, res.integrand_norms, "t,value", out.path("integrand.csv"));
  write_grid_binary(res.phi_plus, out.path("phi_plus.bin"));
  json cc = json::array();
  for (auto [t, v] : res.crosscheck)
    cc.push_back({{"t", t}, {"direct", v}});
  json j{{"t_max", tmax},
         {"tail_bound", res.tail_bound},
         {"tail_converged", res.tail_converged},
         {"integral_bound", res.integral_bound},
         {"diagnostic", res.diagnostic},
         {"remainder_fit", curve_json(res.remainder)},
         {"crosscheck", cc},
         {"bound_states", pairs_json(pairs)}};
  write_json(j, out.path("scatter.json"));
  diag["fit_slope"] = num(res.remainder.fit_slope);
  diag["tail_converged"] = res.tail_converged;
}

void run_kg(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  auto box = cfg.box();
  const double m = cfg.number("mass");
  if (!(m > 0))
    throw ConfigError("must be positive", "params.mass");
  KGState s0{initial_state(cfg, box), GridFunction(box), m};
  auto pairs = bound_states(cfg, box);
  std::vector<cplx> a;
  std::vector<double> nu;
  for (const auto &p : pairs) {
    if (!(m * m + p.mu > 0))
      throw DomainError("m^2 + mu <= 0 for a bound state; Klein-Gordon frequencies are not real");
    a.push_back(dot(p.u, s0.psi));
    nu.push_back(std::sqrt(m * m + p.mu));
  }
  DecayOptions opt;
  opt.vmax = kg_max_group_velocity(m);
  opt.t_fit_min = cfg.number("t_fit_min");
  opt.t_fit_max = fit_max(cfg);
  double tmax = cfg.number_or_nan("t_max");
  if (std::isnan(tmax))
    tmax = wraparound_cutoff(box, opt.vmax);
  const double sigma = cfg.number("sigma");
  KGOptions ko;
  ko.cfl = cfg.number("cfl");
  auto times = time_grid(tmax, cfg.number("dt"));
  std::vector<double> vals;
  auto info = evolve_klein_gordon(
      cfg.potential, s0, times,
      [&](double t, const KGState &s) {
        GridFunction r = s.psi;
        for (std::size_t j = 0; j < pairs.size(); ++j)
          r.axpy(-std::cos(nu[j] * t) * a[j], pairs[j].u);
        vals.push_back(weighted_norm(r, {-sigma}));
      },
      ko);
  auto curve = make_decay_curve(times, vals, sigma, box, opt);
  export_curve(curve, out.path("kg_decay.csv"));
  out.path("kg_decay.json");
  diag["fit_slope"] = num(curve.fit_slope);
  diag["cutoff"] = curve.cutoff;
  diag["vmax"] = opt.vmax;
  diag["method"] = info.method;
  diag["energy_drift"] = info.energy_drift;
  if (!pairs.empty()) {
    // frequency of the projection onto the ground state
    const double T = cfg.number("frequency_t_max");
    auto ft = time_grid(T, cfg.number("dt"));
    std::vector<cplx> proj;
    evolve_klein_gordon(
        cfg.potential, s0, ft, [&](double, const KGState &s) { proj.push_back(dot(pairs[0].u, s.psi)); },
        ko);
    const double numax = 1.5 * std::sqrt(m * m + 12 + cfg.potential.max_abs());
    double found = dominant_frequency(ft, proj, numax);
    const double resolution = 2 * std::numbers::pi / (ft.back() - ft.front() + cfg.number("dt"));
    json j{{"nu_expected", nu[0]},
           {"nu_found", found},
           {"resolution", resolution},
           {"within_resolution", std::abs(found - nu[0]) <= resolution},
           {"mu", pairs[0].mu}};
    write_json(j, out.path("frequency.json"));
    diag["frequency"] = j;
  }
}

void run_appendix_a(const ExperimentConfig &cfg, Outputs &out, json &diag) {
  auto fit = appendix_a_fit(cfg.integer("l"), cfg.number("delta"), cfg.number("y_min"),
                            cfg.number("y_max"), cfg.integer("samples"));
  json an = json::array(), sr = json::array();
  for (auto c : fit.analytic)
    an.push_back(cplx_json(c));
  for (auto c : fit.scaled_remainder)
    sr.push_back(cplx_json(c));
  json j{{"l", fit.l},
         {"delta", fit.delta},
         {"constant", cplx_json(fit.constant)},
         {"analytic", an},
         {"residual_norm", fit.residual_norm},
         {"y", fit.y},
         {"scaled_remainder", sr}};
  write_json(j, out.path("appendix_a.json"));
  {
    std::ofstream f(out.path("appendix_a_samples.csv"));
    f << "y,re,im\n";
    for (std::size_t i = 0; i < fit.y.size(); ++i)
      f << format_double(fit.y[i]) << ',' << format_double(fit.values[i].real()) << ','
        << format_double(fit.values[i].imag()) << '\n';
  }
  diag["constant"] = cplx_json(fit.constant);
}

} // namespace

RunManifest run_experiment(const ExperimentConfig &cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest man;
  man.config = cfg.normalized;
  man.versions = versions();
  Outputs out(cfg.output_dir);
  try {
    switch (cfg.kind) {
    case Kind::lap: run_lap(cfg, out, man.diagnostics); break;
    case Kind::puiseux: run_puiseux(cfg, out, man.diagnostics); break;
    case Kind::spectrum: run_spectrum(cfg, out, man.diagnostics); break;
    case Kind::evolve: run_evolve(cfg, out, man.diagnostics); break;
    case Kind::decay: run_decay(cfg, out, man.diagnostics); break;
    case Kind::scatter: run_scatter(cfg, out, man.diagnostics); break;
    case Kind::kg: run_kg(cfg, out, man.diagnostics); break;
    case Kind::appendix_a: run_appendix_a(cfg, out, man.diagnostics); break;
    }
  } catch (const std::exception &e) {
    man.status = "error";
    man.error = e.what();
    man.exit_code = exit_code_for(e);
  }
  std::vector<std::string> seen;
  for (const auto &name : out.names()) {
    if (std::find(seen.begin(), seen.end(), name) != seen.end())
      continue;
    seen.push_back(name);
    fs::path p = out.dir() / name;
    if (fs::exists(p))
      man.files.push_back({name, sha256_file(p.string())});
  }
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(man.to_json(), (out.dir() / "manifest.json").string());
  return man;
}

} // namespace dlat
