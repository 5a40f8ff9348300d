#include "lorentz/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lorentz::cli {

namespace {

std::string join(const std::vector<std::string>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "; " : "") << xs[i];
  return out.str();
}

class Checker {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        fail(path + "/" + key, "unknown key");
    }
    return true;
  }

  std::uint64_t uint(const json& obj, const char* key, const std::string& path, std::uint64_t fallback,
                     std::uint64_t min = 0, bool required = false) {
    if (!obj.contains(key)) {
      if (required) fail(path + "/" + key, "required");
      return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) {
      fail(path + "/" + key, "expected a non-negative integer");
      return fallback;
    }
    const auto x = v.get<std::uint64_t>();
    if (x < min) fail(path + "/" + key, "must be >= " + std::to_string(min));
    return x;
  }

  std::int64_t integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) {
      fail(path, "expected an integer");
      return 0;
    }
    return v.get<std::int64_t>();
  }

  double number(const json& obj, const char* key, const std::string& path, double fallback, bool required = false) {
    if (!obj.contains(key)) {
      if (required) fail(path + "/" + key, "required");
      return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      fail(path + "/" + key, "expected a finite number");
      return fallback;
    }
    return v.get<double>();
  }

  std::string string(const json& obj, const char* key, const std::string& path, std::string fallback,
                     bool required = false) {
    if (!obj.contains(key)) {
      if (required) fail(path + "/" + key, "required");
      return fallback;
    }
    if (!obj.at(key).is_string()) {
      fail(path + "/" + key, "expected a string");
      return fallback;
    }
    return obj.at(key).get<std::string>();
  }

  Cell cell(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) {
      fail(path, "expected [x, y]");
      return {};
    }
    return {integer(v[0], path + "/0"), integer(v[1], path + "/1")};
  }
};

void check_local(Checker& c, const json& j, const std::string& path) {
  if (!j.is_object()) {
    c.fail(path, "expected an object");
    return;
  }
  if (j.contains("preset")) {
    c.object(j, path, {"preset", "value"});
    const auto preset = c.string(j, "preset", path, "");
    if (preset != "constant") c.fail(path + "/preset", "unknown local preset '" + preset + "'");
    c.number(j, "value", path, 1.0);
    return;
  }
  if (!c.object(j, path, {"depth", "key", "table", "fallback", "alphabet"})) return;
  const auto depth = c.uint(j, "depth", path, 0, 0, true);
  const auto key = c.string(j, "key", path, "scatterer");
  if (key != "scatterer" && key != "full") c.fail(path + "/key", "expected 'scatterer' or 'full'");
  c.number(j, "fallback", path, 0.0);
  c.uint(j, "alphabet", path, 0, 1);
  if (!j.contains("table")) return;
  const auto& table = j.at("table");
  if (!table.is_array()) {
    c.fail(path + "/table", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto p = path + "/table/" + std::to_string(i);
    if (!c.object(table[i], p, {"window", "value"})) continue;
    c.number(table[i], "value", p, 0.0, true);
    if (!table[i].contains("window") || !table[i].at("window").is_array()) {
      c.fail(p + "/window", "expected an array");
      continue;
    }
    const auto& w = table[i].at("window");
    if (w.size() != 2 * depth + 1) c.fail(p + "/window", "length must be 2*depth+1");
    for (std::size_t s = 0; s < w.size(); ++s) {
      if (key == "full") {
        if (!w[s].is_array() || w[s].size() != 3) c.fail(p + "/window/" + std::to_string(s), "expected [index, jx, jy]");
      } else if (!w[s].is_number_unsigned()) {
        c.fail(p + "/window/" + std::to_string(s), "expected a scatterer index");
      }
    }
  }
}

void check_observable(Checker& c, const json& j, const std::string& path) {
  if (!j.is_object()) {
    c.fail(path, "expected an object");
    return;
  }
  if (j.contains("preset")) {
    c.object(j, path, {"preset"});
    const auto preset = c.string(j, "preset", path, "");
    if (preset != "indicator_cell") c.fail(path + "/preset", "unknown observable preset '" + preset + "'");
    return;
  }
  if (!c.object(j, path, {"profile", "local", "p"})) return;
  const double p = c.number(j, "p", path, 2.0);
  if (p < 1.0) c.fail(path + "/p", "must be >= 1");
  if (!j.contains("profile")) {
    c.fail(path + "/profile", "required");
  } else {
    const auto& pr = j.at("profile");
    const auto pp = path + "/profile";
    if (c.object(pr, pp, {"kind", "amplitude", "rho", "exponent", "weights"})) {
      const auto kind = c.string(pr, "kind", pp, "", true);
      if (kind == "geometric") {
        c.number(pr, "amplitude", pp, 1.0);
        const double rho = c.number(pr, "rho", pp, 0.5, true);
        if (!(rho > 0.0 && rho < 1.0)) c.fail(pp + "/rho", "must lie in (0,1)");
      } else if (kind == "power") {
        c.number(pr, "amplitude", pp, 1.0);
        if (c.number(pr, "exponent", pp, 3.0, true) <= 0.0) c.fail(pp + "/exponent", "must be positive");
      } else if (kind == "finite") {
        if (!pr.contains("weights") || !pr.at("weights").is_array()) {
          c.fail(pp + "/weights", "expected an array of {cell, w}");
        } else {
          for (std::size_t i = 0; i < pr.at("weights").size(); ++i) {
            const auto& e = pr.at("weights")[i];
            const auto ep = pp + "/weights/" + std::to_string(i);
            if (!c.object(e, ep, {"cell", "w"})) continue;
            if (e.contains("cell")) {
              c.cell(e.at("cell"), ep + "/cell");
            } else {
              c.fail(ep + "/cell", "required");
            }
            c.number(e, "w", ep, 0.0, true);
          }
        }
      } else if (!kind.empty()) {
        c.fail(pp + "/kind", "expected 'finite', 'geometric' or 'power'");
      }
    }
  }
  if (j.contains("local")) check_local(c, j.at("local"), path + "/local");
}

SystemSpec check_system(Checker& c, const json& j, const std::string& path) {
  SystemSpec s;
  if (!j.is_object()) {
    c.fail(path, "expected an object");
    return s;
  }
  s.kind = c.string(j, "kind", path, "", true);
  if (s.kind == "billiard") {
    c.object(j, path, {"kind", "scatterers", "n_dirs", "n_rays"});
    s.n_dirs = static_cast<int>(c.uint(j, "n_dirs", path, 8, 1));
    s.n_rays = c.uint(j, "n_rays", path, 1'000'000, 1);
    if (!j.contains("scatterers") || !j.at("scatterers").is_array() || j.at("scatterers").empty()) {
      c.fail(path + "/scatterers", "expected a non-empty array");
      return s;
    }
    for (std::size_t i = 0; i < j.at("scatterers").size(); ++i) {
      const auto& d = j.at("scatterers")[i];
      const auto dp = path + "/scatterers/" + std::to_string(i);
      if (!c.object(d, dp, {"center", "radius"})) continue;
      billiard::ScattererSpec spec{};
      spec.radius = c.number(d, "radius", dp, 0.0, true);
      if (!(spec.radius > 0.0 && spec.radius < 0.5)) c.fail(dp + "/radius", "must lie in (0, 1/2)");
      if (!d.contains("center") || !d.at("center").is_array() || d.at("center").size() != 2 ||
          !d.at("center")[0].is_number() || !d.at("center")[1].is_number()) {
        c.fail(dp + "/center", "expected [x, y]");
      } else {
        spec.center = {d.at("center")[0].get<double>(), d.at("center")[1].get<double>()};
        if (spec.center.x < 0.0 || spec.center.x >= 1.0 || spec.center.y < 0.0 || spec.center.y >= 1.0)
          c.fail(dp + "/center", "must lie in [0,1)^2");
      }
      s.scatterers.push_back(spec);
    }
  } else if (s.kind == "markov") {
    c.object(j, path, {"kind", "preset", "n_states", "dimension", "seed", "edges"});
    s.preset = c.string(j, "preset", path, "");
    if (!s.preset.empty()) {
      if (s.preset != "srw" && s.preset != "random3" && s.preset != "two_state_1d")
        c.fail(path + "/preset", "expected 'srw', 'random3' or 'two_state_1d'");
      s.chain_seed = c.uint(j, "seed", path, 0x3A7E5EEDULL);
      if (j.contains("edges")) c.fail(path + "/edges", "not allowed together with a preset");
      return s;
    }
    s.n_states = c.uint(j, "n_states", path, 0, 1, true);
    s.dimension = static_cast<int>(c.uint(j, "dimension", path, 2, 1));
    if (s.dimension > 2) c.fail(path + "/dimension", "must be 1 or 2");
    if (!j.contains("edges") || !j.at("edges").is_array()) {
      c.fail(path + "/edges", "expected an array");
      return s;
    }
    for (std::size_t i = 0; i < j.at("edges").size(); ++i) {
      const auto& e = j.at("edges")[i];
      const auto ep = path + "/edges/" + std::to_string(i);
      if (!c.object(e, ep, {"from", "to", "prob", "jump"})) continue;
      markov::Edge edge;
      edge.from = static_cast<std::uint32_t>(c.uint(e, "from", ep, 0, 0, true));
      edge.to = static_cast<std::uint32_t>(c.uint(e, "to", ep, 0, 0, true));
      if (edge.from >= s.n_states || edge.to >= s.n_states) c.fail(ep, "state index out of range");
      edge.prob = c.number(e, "prob", ep, 0.0, true);
      if (!(edge.prob > 0.0 && edge.prob <= 1.0)) c.fail(ep + "/prob", "must lie in (0,1]");
      if (e.contains("jump")) {
        edge.jump = c.cell(e.at("jump"), ep + "/jump");
      } else {
        c.fail(ep + "/jump", "required");
      }
      s.edges.push_back(edge);
    }
  } else if (!s.kind.empty()) {
    c.fail(path + "/kind", "expected 'billiard' or 'markov'");
  }
  return s;
}

json system_echo(const SystemSpec& s) {
  json out;
  out["kind"] = s.kind;
  if (s.kind == "billiard") {
    out["scatterers"] = json::array();
    for (const auto& d : s.scatterers)
      out["scatterers"].push_back({{"center", {d.center.x, d.center.y}}, {"radius", d.radius}});
    out["n_dirs"] = s.n_dirs;
    out["n_rays"] = s.n_rays;
  } else if (!s.preset.empty()) {
    out["preset"] = s.preset;
    out["seed"] = s.chain_seed;
  } else {
    out["n_states"] = s.n_states;
    out["dimension"] = s.dimension;
    out["edges"] = json::array();
    for (const auto& e : s.edges)
      out["edges"].push_back({{"from", e.from}, {"to", e.to}, {"prob", e.prob}, {"jump", {e.jump.x, e.jump.y}}});
  }
  return out;
}

std::vector<std::size_t> default_grid(const std::string& experiment, const std::string& kind) {
  if (experiment == "llt") return kind == "markov" ? std::vector<std::size_t>{2000} : std::vector<std::size_t>{50, 100, 200};
  if (experiment == "prop-scan") return {20, 40, 80};
  return {50, 100, 200};
}

}  // namespace

SchemaError::SchemaError(std::vector<std::string> v)
    : std::runtime_error("invalid config: " + join(v)), violations(std::move(v)) {}

ExperimentConfig parse_config(const json& doc) {
  Checker c;
  ExperimentConfig cfg;
  if (!c.object(doc, "", {"experiment", "seed", "system", "observables", "params", "output"})) throw SchemaError(c.errors);

  cfg.experiment = c.string(doc, "experiment", "", "", true);
  if (!cfg.experiment.empty() &&
      std::find(kExperiments.begin(), kExperiments.end(), cfg.experiment) == kExperiments.end())
    c.fail("/experiment", "unknown experiment '" + cfg.experiment + "'");
  cfg.seed = c.uint(doc, "seed", "", 0, 0, true);
  cfg.output = c.string(doc, "output", "", "results");

  if (doc.contains("system")) {
    cfg.system = check_system(c, doc.at("system"), "/system");
  } else {
    c.fail("/system", "required");
  }

  if (doc.contains("observables")) {
    const auto& obs = doc.at("observables");
    if (!obs.is_object()) {
      c.fail("/observables", "expected an object");
    } else {
      for (const auto& [name, spec] : obs.items()) {
        check_observable(c, spec, "/observables/" + name);
        cfg.observables[name] = spec;
      }
    }
  }

  auto& p = cfg.params;
  json params = doc.contains("params") ? doc.at("params") : json::object();
  if (c.object(params, "/params",
               {"n_grid", "N", "cap", "n_sigma", "sigma_samples", "integral_samples", "cells", "k", "l", "n_max",
                "tolerance", "workers", "u", "v"})) {
    p.N = c.uint(params, "N", "/params", 100'000, 1);
    p.cap = c.uint(params, "cap", "/params", 1000, 1);
    p.n_sigma = c.uint(params, "n_sigma", "/params", 200, 1);
    p.sigma_samples = c.uint(params, "sigma_samples", "/params", p.N, 100);
    p.integral_samples = c.uint(params, "integral_samples", "/params", p.N, 1);
    p.k = static_cast<int>(c.uint(params, "k", "/params", 1));
    p.n_max = c.uint(params, "n_max", "/params", 50, 1);
    p.tolerance = c.number(params, "tolerance", "/params", 0.02);
    p.workers = static_cast<int>(c.uint(params, "workers", "/params", 0));
    p.u = c.string(params, "u", "/params", "u");
    p.v = c.string(params, "v", "/params", "v");
    if (params.contains("l")) p.l = c.cell(params.at("l"), "/params/l");
    if (params.contains("n_grid")) {
      const auto& g = params.at("n_grid");
      if (!g.is_array() || g.empty()) {
        c.fail("/params/n_grid", "expected a non-empty array");
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const auto n = c.integer(g[i], "/params/n_grid/" + std::to_string(i));
          if (n < 1) c.fail("/params/n_grid/" + std::to_string(i), "must be >= 1");
          p.n_grid.push_back(static_cast<std::size_t>(std::max<std::int64_t>(n, 1)));
        }
      }
    } else {
      p.n_grid = default_grid(cfg.experiment, cfg.system.kind);
    }
    if (params.contains("cells")) {
      const auto& cs = params.at("cells");
      if (!cs.is_array()) {
        c.fail("/params/cells", "expected an array of [x, y]");
      } else {
        for (std::size_t i = 0; i < cs.size(); ++i) p.cells.push_back(c.cell(cs[i], "/params/cells/" + std::to_string(i)));
      }
    } else {
      p.cells = {Cell{0, 0}};
    }
  }

  const bool needs_pair = cfg.experiment == "mixing" || cfg.experiment == "prop-scan";
  if (needs_pair) {
    for (const auto& name : {p.u, p.v})
      if (!cfg.observables.count(name)) c.fail("/observables/" + name, "required by experiment " + cfg.experiment);
  }
  if (cfg.experiment == "oracle-identities" && cfg.system.kind != "markov")
    c.fail("/system/kind", "oracle-identities needs a markov system");
  if (cfg.experiment == "prop-scan")
    for (const auto n : p.n_grid)
      if (n <= static_cast<std::size_t>(2 * p.k)) c.fail("/params/n_grid", "entries must exceed 2k");

  if (!c.errors.empty()) throw SchemaError(c.errors);

  json norm;
  norm["experiment"] = cfg.experiment;
  norm["seed"] = cfg.seed;
  norm["system"] = system_echo(cfg.system);
  norm["observables"] = json::object();
  for (const auto& [name, spec] : cfg.observables) norm["observables"][name] = spec;
  json np;
  np["n_grid"] = p.n_grid;
  np["N"] = p.N;
  np["cap"] = p.cap;
  np["n_sigma"] = p.n_sigma;
  np["sigma_samples"] = p.sigma_samples;
  np["integral_samples"] = p.integral_samples;
  np["cells"] = json::array();
  for (const auto& cell : p.cells) np["cells"].push_back({cell.x, cell.y});
  np["k"] = p.k;
  np["l"] = {p.l.x, p.l.y};
  np["n_max"] = p.n_max;
  np["tolerance"] = p.tolerance;
  np["u"] = p.u;
  np["v"] = p.v;
  norm["params"] = np;
  norm["output"] = cfg.output;
  cfg.normalized = norm;
  return cfg;
}

billiard::BilliardTable make_table(const SystemSpec& spec) { return billiard::BilliardTable(spec.scatterers); }

markov::MarkovExtension make_chain(const SystemSpec& spec) {
  if (spec.preset == "srw") return markov::simple_random_walk();
  if (spec.preset == "random3") return markov::random_symmetric_extension(3, spec.chain_seed);
  if (spec.preset == "two_state_1d") return markov::two_state_walk_1d();
  return markov::MarkovExtension(spec.n_states, spec.edges, spec.dimension);
}

void validate_system(ExperimentConfig& config) {
  if (config.system.kind == "billiard") {
    auto table = make_table(config.system);
    config.horizon_bound = billiard::validate_table(table, config.system.n_dirs, config.system.n_rays);
    config.table = std::move(table);
    config.normalized["system"]["horizon_bound"] = config.horizon_bound;
  } else {
    try {
      const auto chain = make_chain(config.system);
      config.normalized["system"]["return_period"] = chain.return_period();
    } catch (const markov::OracleError& e) {
      throw SchemaError({std::string("/system: ") + e.what()});
    }
  }
}

ExperimentConfig validate_config(const std::filesystem::path& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw SchemaError({path.string() + ": cannot open config file"});
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError({path.string() + ": " + e.what()});
  }
  if (!experiment.empty() && doc.is_object()) doc["experiment"] = experiment;
  auto cfg = parse_config(doc);
  validate_system(cfg);
  return cfg;
}

}  // namespace lorentz::cli
