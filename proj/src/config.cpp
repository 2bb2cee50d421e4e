#include "dlat/config.hpp"

#include "dlat/asymptotics.hpp"
#include "dlat/errors.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dlat {

using nlohmann::json;

std::string to_string(Kind k) {
  switch (k) {
  case Kind::lap: return "lap";
  case Kind::puiseux: return "puiseux";
  case Kind::spectrum: return "spectrum";
  case Kind::evolve: return "evolve";
  case Kind::decay: return "decay";
  case Kind::scatter: return "scatter";
  case Kind::kg: return "kg";
  case Kind::appendix_a: return "appendix-a";
  }
  return "?";
}

Kind kind_from_string(const std::string &s) {
  for (Kind k : {Kind::lap, Kind::puiseux, Kind::spectrum, Kind::evolve, Kind::decay,
                 Kind::scatter, Kind::kg, Kind::appendix_a})
    if (to_string(k) == s)
      return k;
  throw ConfigError("unknown experiment kind '" + s + "'", "kind");
}

double ExperimentConfig::number(const char *key) const { return params.at(key).get<double>(); }

double ExperimentConfig::number_or_nan(const char *key) const {
  const auto &v = params.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

int ExperimentConfig::integer(const char *key) const { return params.at(key).get<int>(); }

namespace {

enum class T { number, number_or_null, integer, boolean, string, site, numbers, probes, initial };

struct Field {
  std::string name;
  T type;
  json def;          // null with required = false means "null is the default"
  bool required = false;
  std::vector<std::string> choices{};
};

json initial_default(const std::string &type) { return json{{"type", type}}; }

json magnitudes_default() { return default_magnitudes(); }

const std::map<Kind, std::vector<Field>> &schema() {
  static const std::map<Kind, std::vector<Field>> s = {
      {Kind::lap,
       {{"omega", T::number, nullptr, true},
        {"sigma", T::number, 2.0},
        {"sides", T::string, "both", false, {"upper", "both"}},
        {"gap_fraction", T::number, 1e-4},
        {"norm_tol", T::number, 1e-6},
        {"norm_iterations", T::integer, 5000},
        {"kernel_radius", T::integer, 1},
        {"cache_file", T::string, ""}}},
      {Kind::puiseux,
       {{"base", T::number, nullptr, true},
        {"probes", T::probes, json::array({json::array({json::array({0, 0, 0}),
                                                        json::array({0, 0, 0})})})},
        {"magnitudes", T::numbers, magnitudes_default()},
        {"direction", T::numbers, json::array()},
        {"crosscheck", T::boolean, false}}},
      {Kind::spectrum, {{"tol", T::number, 1e-10}, {"genericity", T::boolean, true}}},
      {Kind::evolve,
       {{"t_max", T::number, nullptr, true},
        {"dt", T::number, 0.25},
        {"probe", T::site, json::array({0, 0, 0})},
        {"initial", T::initial, initial_default("delta")}}},
      {Kind::decay,
       {{"sigma", T::number, nullptr, true},
        {"t_max", T::number_or_null, nullptr},
        {"dt", T::number, 0.25},
        {"t_fit_min", T::number, 5.0},
        {"t_fit_max", T::number_or_null, nullptr},
        {"subtract_bound_states", T::boolean, true},
        {"eig_tol", T::number, 1e-10},
        {"operator_samples", T::integer, 0},
        {"initial", T::initial, initial_default("delta")}}},
      {Kind::scatter,
       {{"sigma", T::number, 6.0},
        {"t_max", T::number_or_null, nullptr},
        {"panel", T::number, 0.25},
        {"t_fit_min", T::number, 5.0},
        {"t_fit_max", T::number_or_null, nullptr},
        {"eig_tol", T::number, 1e-10},
        {"initial", T::initial, initial_default("delta")}}},
      {Kind::kg,
       {{"mass", T::number, 1.0},
        {"sigma", T::number, 6.0},
        {"t_max", T::number_or_null, nullptr},
        {"dt", T::number, 0.25},
        {"t_fit_min", T::number, 5.0},
        {"t_fit_max", T::number_or_null, nullptr},
        {"cfl", T::number, 0.5},
        {"eig_tol", T::number, 1e-10},
        {"frequency_t_max", T::number, 200.0},
        {"initial", T::initial, json{{"type", "gaussian"}, {"width", 1.0}}}}},
      {Kind::appendix_a,
       {{"l", T::integer, 0},
        {"delta", T::number, 0.5},
        {"y_min", T::number, 1e-5},
        {"y_max", T::number, 1e-2},
        {"samples", T::integer, 25}}},
  };
  return s;
}

[[noreturn]] void fail(const std::string &key, const std::string &what) {
  throw ConfigError(what, key);
}

void reject_unknown(const json &obj, const std::set<std::string> &known, const std::string &path) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      fail(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

const json &require_object(const json &j, const std::string &path) {
  if (!j.is_object())
    fail(path, "expected an object");
  return j;
}

double get_number(const json &j, const std::string &path) {
  if (!j.is_number())
    fail(path, "expected a number");
  return j.get<double>();
}

long long get_integer(const json &j, const std::string &path) {
  if (!j.is_number_integer())
    fail(path, "expected an integer");
  return j.get<long long>();
}

std::string get_string(const json &j, const std::string &path) {
  if (!j.is_string())
    fail(path, "expected a string");
  return j.get<std::string>();
}

json site_json(const json &j, const std::string &path) {
  if (!j.is_array() || j.size() != 3)
    fail(path, "expected a site [x1, x2, x3]");
  for (std::size_t i = 0; i < 3; ++i)
    get_integer(j[i], path + "[" + std::to_string(i) + "]");
  return j;
}

Site to_site(const json &j) { return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()}; }

std::string resolve(const std::string &file, const std::string &base) {
  std::filesystem::path p(file);
  if (p.is_relative() && !base.empty())
    p = std::filesystem::path(base) / p;
  return p.string();
}

json check_initial(const json &j, const std::string &path, const std::string &base) {
  require_object(j, path);
  reject_unknown(j, {"type", "center", "width", "file"}, path);
  if (!j.contains("type"))
    fail(path + ".type", "missing required field");
  std::string type = get_string(j["type"], path + ".type");
  json out{{"type", type}};
  if (type == "delta") {
    out["center"] = j.contains("center") ? site_json(j["center"], path + ".center")
                                         : json::array({0, 0, 0});
    if (j.contains("width") || j.contains("file"))
      fail(path, "delta initial state takes only 'center'");
  } else if (type == "gaussian") {
    out["center"] = j.contains("center") ? site_json(j["center"], path + ".center")
                                         : json::array({0, 0, 0});
    double w = j.contains("width") ? get_number(j["width"], path + ".width") : 1.0;
    if (!(w > 0))
      fail(path + ".width", "must be positive");
    out["width"] = w;
    if (j.contains("file"))
      fail(path + ".file", "gaussian initial state takes no file");
  } else if (type == "random") {
    if (j.contains("center") || j.contains("width") || j.contains("file"))
      fail(path, "random initial state takes no options (it uses the top-level seed)");
  } else if (type == "file") {
    if (!j.contains("file"))
      fail(path + ".file", "missing required field");
    std::string f = get_string(j["file"], path + ".file");
    if (!std::filesystem::exists(resolve(f, base)))
      fail(path + ".file", "file does not exist: " + f);
    out["file"] = f;
    if (j.contains("center") || j.contains("width"))
      fail(path, "file initial state takes only 'file'");
  } else {
    fail(path + ".type", "expected one of delta, gaussian, random, file");
  }
  return out;
}

json check_field(const Field &f, const json &v, const std::string &path, const std::string &base) {
  switch (f.type) {
  case T::number:
    return get_number(v, path);
  case T::number_or_null:
    return v.is_null() ? json(nullptr) : json(get_number(v, path));
  case T::integer:
    return get_integer(v, path);
  case T::boolean:
    if (!v.is_boolean())
      fail(path, "expected true or false");
    return v;
  case T::string: {
    std::string s = get_string(v, path);
    if (!f.choices.empty() && std::find(f.choices.begin(), f.choices.end(), s) == f.choices.end())
      fail(path, "unexpected value '" + s + "'");
    return s;
  }
  case T::site:
    return site_json(v, path);
  case T::numbers: {
    if (!v.is_array())
      fail(path, "expected an array of numbers");
    json out = json::array();
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(get_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  case T::probes: {
    if (!v.is_array() || v.empty())
      fail(path, "expected a nonempty array of [x, y] site pairs");
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::string p = path + "[" + std::to_string(i) + "]";
      if (!v[i].is_array() || v[i].size() != 2)
        fail(p, "expected a pair of sites");
      site_json(v[i][0], p + "[0]");
      site_json(v[i][1], p + "[1]");
    }
    return v;
  }
  case T::initial:
    return check_initial(v, path, base);
  }
  return v;
}

} // namespace

Potential read_potential_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read potential file " + path, "potential.file");
  std::string line;
  if (!std::getline(in, line) || line != "x1,x2,x3,value")
    throw ConfigError(path + ": expected header x1,x2,x3,value", "potential.file");
  std::vector<std::pair<Site, double>> e;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty())
      continue;
    std::stringstream ss(line);
    int a, b, c;
    double v;
    char c1, c2, c3;
    if (!(ss >> a >> c1 >> b >> c2 >> c >> c3 >> v) || c1 != ',' || c2 != ',' || c3 != ',')
      throw ConfigError(path + ":" + std::to_string(row) + ": malformed row", "potential.file");
    e.push_back({{a, b, c}, v});
  }
  try {
    return Potential(std::move(e));
  } catch (const InvalidInput &err) {
    throw ConfigError(path + ": " + err.what(), "potential.file");
  }
}

ExperimentConfig parse_config(const std::string &text, const std::string &base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("malformed JSON (") + e.what() + ")", "<document>");
  }
  require_object(doc, "<document>");
  reject_unknown(doc, {"kind", "lattice", "potential", "quadrature", "params", "seed", "output_dir"},
                 "");
  ExperimentConfig cfg;
  json norm;

  if (!doc.contains("kind"))
    fail("kind", "missing required field");
  cfg.kind = kind_from_string(get_string(doc["kind"], "kind"));
  norm["kind"] = to_string(cfg.kind);

  if (!doc.contains("lattice"))
    fail("lattice", "missing required field");
  const json &lat = require_object(doc["lattice"], "lattice");
  reject_unknown(lat, {"L", "boundary"}, "lattice");
  if (!lat.contains("L"))
    fail("lattice.L", "missing required field");
  long long L = get_integer(lat["L"], "lattice.L");
  if (L < 1 || L > 512)
    fail("lattice.L", "must lie in [1, 512]");
  cfg.L = int(L);
  std::string bname = lat.contains("boundary") ? get_string(lat["boundary"], "lattice.boundary")
                                               : std::string("periodic");
  if (bname == "periodic")
    cfg.boundary = Boundary::periodic;
  else if (bname == "zero")
    cfg.boundary = Boundary::zero;
  else
    fail("lattice.boundary", "expected periodic or zero");
  norm["lattice"] = {{"L", cfg.L}, {"boundary", bname}};

  json pnorm = json::object();
  if (doc.contains("potential")) {
    const json &pot = require_object(doc["potential"], "potential");
    reject_unknown(pot, {"sites", "file"}, "potential");
    if (pot.contains("sites") && pot.contains("file"))
      fail("potential", "give either 'sites' or 'file', not both");
    if (pot.contains("sites")) {
      const json &s = pot["sites"];
      if (!s.is_array())
        fail("potential.sites", "expected an array");
      std::vector<std::pair<Site, double>> e;
      json out = json::array();
      for (std::size_t i = 0; i < s.size(); ++i) {
        std::string p = "potential.sites[" + std::to_string(i) + "]";
        require_object(s[i], p);
        reject_unknown(s[i], {"site", "value"}, p);
        if (!s[i].contains("site"))
          fail(p + ".site", "missing required field");
        if (!s[i].contains("value"))
          fail(p + ".value", "missing required field");
        json sj = site_json(s[i]["site"], p + ".site");
        double v = get_number(s[i]["value"], p + ".value");
        e.push_back({to_site(sj), v});
        out.push_back({{"site", sj}, {"value", v}});
      }
      try {
        cfg.potential = Potential(std::move(e));
      } catch (const InvalidInput &err) {
        fail("potential.sites", err.what());
      }
      pnorm["sites"] = out;
    } else if (pot.contains("file")) {
      std::string f = get_string(pot["file"], "potential.file");
      std::string full = resolve(f, base_dir);
      if (!std::filesystem::exists(full))
        fail("potential.file", "file does not exist: " + f);
      cfg.potential = read_potential_csv(full);
      pnorm["file"] = f;
    }
  }
  if (pnorm.empty())
    pnorm["sites"] = json::array();
  norm["potential"] = pnorm;

  if (doc.contains("quadrature")) {
    const json &q = require_object(doc["quadrature"], "quadrature");
    reject_unknown(q, {"M", "epsilons", "extrapolation"}, "quadrature");
    if (q.contains("M"))
      cfg.quadrature.M = int(get_integer(q["M"], "quadrature.M"));
    if (q.contains("epsilons")) {
      if (!q["epsilons"].is_array())
        fail("quadrature.epsilons", "expected an array of numbers");
      cfg.quadrature.epsilons.clear();
      for (std::size_t i = 0; i < q["epsilons"].size(); ++i)
        cfg.quadrature.epsilons.push_back(
            get_number(q["epsilons"][i], "quadrature.epsilons[" + std::to_string(i) + "]"));
    }
    if (q.contains("extrapolation")) {
      std::string e = get_string(q["extrapolation"], "quadrature.extrapolation");
      if (e == "richardson")
        cfg.quadrature.extrapolation = Extrapolation::richardson;
      else if (e == "none")
        cfg.quadrature.extrapolation = Extrapolation::none;
      else
        fail("quadrature.extrapolation", "expected richardson or none");
    }
  }
  try {
    cfg.quadrature.validate();
  } catch (const InvalidInput &err) {
    fail("quadrature", err.what());
  }
  norm["quadrature"] = {
      {"M", cfg.quadrature.M},
      {"epsilons", cfg.quadrature.epsilons},
      {"extrapolation",
       cfg.quadrature.extrapolation == Extrapolation::richardson ? "richardson" : "none"}};

  const auto &fields = schema().at(cfg.kind);
  json params = doc.contains("params") ? doc["params"] : json::object();
  require_object(params, "params");
  std::set<std::string> known;
  for (const auto &f : fields)
    known.insert(f.name);
  reject_unknown(params, known, "params");
  json pn = json::object();
  for (const auto &f : fields) {
    std::string path = "params." + f.name;
    if (params.contains(f.name))
      pn[f.name] = check_field(f, params[f.name], path, base_dir);
    else if (f.required)
      fail(path, "missing required field for kind " + to_string(cfg.kind));
    else
      pn[f.name] = f.type == T::initial ? check_initial(f.def, path, base_dir) : f.def;
  }
  cfg.params = pn;
  norm["params"] = pn;

  if (doc.contains("seed")) {
    long long s = get_integer(doc["seed"], "seed");
    if (s < 0)
      fail("seed", "must be nonnegative");
    cfg.seed = std::uint64_t(s);
  }
  norm["seed"] = cfg.seed;
  cfg.output_dir =
      doc.contains("output_dir") ? get_string(doc["output_dir"], "output_dir") : std::string("out");
  norm["output_dir"] = cfg.output_dir;
  cfg.normalized = norm;
  cfg.base_dir = base_dir;
  return cfg;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot read config file " + path, "<file>");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const ExperimentConfig &cfg) { return cfg.normalized.dump(2) + "\n"; }

void set_seed(ExperimentConfig &cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.normalized["seed"] = seed;
}

void set_output_dir(ExperimentConfig &cfg, const std::string &dir) {
  cfg.output_dir = dir;
  cfg.normalized["output_dir"] = dir;
}

} // namespace dlat
