#include "fraclab/experiment.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fraclab/digest.hpp"
#include "fraclab/parallel.hpp"

namespace fraclab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Collects violations instead of stopping at the first one.
class Reader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& field, const std::string& what) { errors.push_back(field + ": " + what); }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) return;
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items())
      if (!ok.count(key)) fail(path.empty() ? key : path + "." + key, "unknown field");
  }

  std::optional<double> number(const json& obj, const char* key, const std::string& path, bool required) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(field, "missing");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(field, "expected a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      fail(field, "not finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const json& obj, const char* key, const std::string& path, bool required) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(field, "missing");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(field, "expected an integer");
      return std::nullopt;
    }
    return v.get<long long>();
  }

  std::optional<std::string> string(const json& obj, const char* key, const std::string& path, bool required) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(field, "missing");
      return std::nullopt;
    }
    if (!obj.at(key).is_string()) {
      fail(field, "expected a string");
      return std::nullopt;
    }
    return obj.at(key).get<std::string>();
  }

  // Numbers, plus the string "inf" where allow_inf is set.
  std::optional<std::vector<double>> numbers(const json& obj, const char* key, const std::string& path,
                                             bool required, bool allow_inf = false) {
    const std::string field = path.empty() ? key : path + "." + key;
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(field, "missing");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_array()) {
      fail(field, "expected an array");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const json& e = v[i];
      if (e.is_number()) {
        out.push_back(e.get<double>());
      } else if (allow_inf && e.is_string() && e.get<std::string>() == "inf") {
        out.push_back(kInf);
      } else {
        fail(field + "[" + std::to_string(i) + "]", allow_inf ? "expected a number or \"inf\"" : "expected a number");
        return std::nullopt;
      }
    }
    return out;
  }
};

bool on_time_grid(double t, double dt) {
  const double n = t / dt;
  return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n);
}

struct Parsed {
  ExperimentConfig config;
  std::vector<std::string> custom_tables;  // one per mesh, resolved paths
  std::vector<std::string> errors;
};

Parsed parse(const std::string& text, const fs::path& base_dir) {
  Parsed out;
  Reader r;
  ExperimentConfig& c = out.config;

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    out.errors.push_back(std::string("document: not valid JSON (") + e.what() + ")");
    return out;
  }
  if (!doc.is_object()) {
    out.errors.push_back("document: expected a JSON object");
    return out;
  }

  r.check_keys(doc, "", {"schema_version", "name", "domain", "alpha", "potential", "h_schedule", "k_schedule", "dt",
                         "t_final", "probe_times", "thresholds", "initial_condition", "shrinking_ball", "certificates",
                         "state_checkpoints", "output_dir", "seed"});

  if (auto v = r.integer(doc, "schema_version", "", true); v && *v != kSchemaVersion)
    r.fail("schema_version", "unsupported version " + std::to_string(*v) + " (expected " +
                                 std::to_string(kSchemaVersion) + ")");
  if (auto v = r.string(doc, "name", "", false)) c.name = *v;

  // domain
  bool domain_ok = false;
  if (!doc.contains("domain") || !doc["domain"].is_object()) {
    r.fail("domain", doc.contains("domain") ? "expected an object" : "missing");
  } else {
    const json& d = doc["domain"];
    r.check_keys(d, "domain", {"kind", "R", "a", "b"});
    const auto kind = r.string(d, "kind", "domain", true);
    if (kind == "interval" || kind == "disk") {
      auto R = r.number(d, "R", "domain", true);
      if (R && *R <= 0) r.fail("domain.R", "must be positive");
      else if (R) {
        c.domain = *kind == "interval" ? DomainSpec::interval(*R) : DomainSpec::disk(*R);
        domain_ok = true;
      }
    } else if (kind == "rectangle") {
      auto a = r.number(d, "a", "domain", true);
      auto b = r.number(d, "b", "domain", true);
      if (a && *a <= 0) r.fail("domain.a", "must be positive");
      if (b && *b <= 0) r.fail("domain.b", "must be positive");
      if (a && b && *a > 0 && *b > 0) {
        c.domain = DomainSpec::rectangle(*a, *b);
        domain_ok = true;
      }
    } else if (kind) {
      r.fail("domain.kind", "unknown kind \"" + *kind + "\" (interval, rectangle, disk)");
    }
  }
  const int d = c.domain.dimension();

  bool alpha_ok = false;
  if (auto a = r.number(doc, "alpha", "", true)) {
    c.alpha = *a;
    if (domain_ok && !(*a > 0 && *a < std::min(2.0, static_cast<double>(d))))
      r.fail("alpha", "value " + format_number(*a) + " outside (0, min(2, d)) for d = " + std::to_string(d));
    else
      alpha_ok = domain_ok;
  }

  // potential
  if (!doc.contains("potential") || !doc["potential"].is_object()) {
    r.fail("potential", doc.contains("potential") ? "expected an object" : "missing");
  } else {
    const json& p = doc["potential"];
    r.check_keys(p, "potential", {"kind", "c", "c_over_cstar", "kappa", "expr", "tables", "epsilon"});
    if (auto e = r.number(p, "epsilon", "potential", false)) {
      if (*e < 0 || *e >= 1) r.fail("potential.epsilon", "must lie in [0, 1)");
      c.potential.epsilon = *e;
    }
    const auto kind = r.string(p, "kind", "potential", true);
    if (kind == "hardy_interior") {
      const bool has_c = p.contains("c"), has_ratio = p.contains("c_over_cstar");
      if (has_c == has_ratio) {
        r.fail("potential.c", "give exactly one of c, c_over_cstar");
      } else if (has_c) {
        if (auto v = r.number(p, "c", "potential", true)) {
          if (*v < 0) r.fail("potential.c", "must be nonnegative");
          c.potential.kind = HardyInterior{*v};
        }
      } else if (auto v = r.number(p, "c_over_cstar", "potential", true)) {
        if (*v < 0) r.fail("potential.c_over_cstar", "must be nonnegative");
        else if (alpha_ok) c.potential.kind = HardyInterior{*v * hardy_sharp_constant(d, c.alpha)};
      }
    } else if (kind == "hardy_boundary") {
      if (auto v = r.number(p, "kappa", "potential", true)) {
        if (*v < 0) r.fail("potential.kappa", "must be nonnegative");
        c.potential.kind = HardyBoundary{*v};
      }
    } else if (kind == "bounded") {
      std::string expr;
      if (p.contains("expr") && p["expr"].is_number()) expr = format_number(p["expr"].get<double>());
      else if (auto v = r.string(p, "expr", "potential", true)) expr = *v;
      if (!expr.empty()) {
        PotentialSpec probe{Bounded{expr}};
        try {
          probe.validate();
          c.potential.kind = Bounded{expr};
        } catch (const Error& e) {
          r.fail("potential.expr", e.what());
        }
      }
    } else if (kind == "custom") {
      if (!p.contains("tables") || !p["tables"].is_array()) {
        r.fail("potential.tables", "expected an array of CSV paths, one per mesh");
      } else {
        for (std::size_t i = 0; i < p["tables"].size(); ++i) {
          const json& t = p["tables"][i];
          if (!t.is_string()) {
            r.fail("potential.tables[" + std::to_string(i) + "]", "expected a string");
            continue;
          }
          fs::path path = t.get<std::string>();
          if (path.is_relative()) path = base_dir / path;
          if (!fs::is_regular_file(path))
            r.fail("potential.tables[" + std::to_string(i) + "]", "file not found: " + path.string());
          out.custom_tables.push_back(path.string());
        }
        c.potential.kind = Custom{};
      }
    } else if (kind) {
      r.fail("potential.kind",
             "unknown kind \"" + *kind + "\" (hardy_interior, hardy_boundary, bounded, custom)");
    }
  }

  // schedules
  if (auto hs = r.numbers(doc, "h_schedule", "", true)) {
    c.h_schedule = *hs;
    if (hs->size() < 3) r.fail("h_schedule", "classification needs at least three meshes");
    for (std::size_t i = 0; i < hs->size(); ++i) {
      const std::string field = "h_schedule[" + std::to_string(i) + "]";
      if ((*hs)[i] <= 0) {
        r.fail(field, "must be positive");
        continue;
      }
      if (i > 0 && (*hs)[i] >= (*hs)[i - 1]) r.fail(field, "schedule must be strictly decreasing");
      if (!domain_ok) continue;
      Eigen::Index n = 0;
      try {
        n = build_grid(c.domain, (*hs)[i]).size();
      } catch (const Error& e) {
        r.fail(field, e.what());
        continue;
      }
      if (n > kMaxDenseNodes)
        r.fail(field, std::to_string(n) + " nodes exceeds the dense cap of " + std::to_string(kMaxDenseNodes));
    }
    if (!out.custom_tables.empty() && out.custom_tables.size() != hs->size())
      r.fail("potential.tables", "need one table per h_schedule entry");
  }
  if (auto ks = r.numbers(doc, "k_schedule", "", true, true)) {
    c.k_schedule = *ks;
    if (ks->empty()) r.fail("k_schedule", "must not be empty");
    for (std::size_t i = 0; i < ks->size(); ++i) {
      const std::string field = "k_schedule[" + std::to_string(i) + "]";
      if (!((*ks)[i] > 0)) r.fail(field, "must be positive");
      if (i > 0 && (*ks)[i] <= (*ks)[i - 1]) r.fail(field, "schedule must be strictly increasing");
    }
  }

  // time stepping
  bool time_ok = false;
  {
    auto dt = r.number(doc, "dt", "", true);
    auto tf = r.number(doc, "t_final", "", true);
    if (dt && *dt <= 0) r.fail("dt", "must be positive");
    if (tf && *tf <= 0) r.fail("t_final", "must be positive");
    if (dt && tf && *dt > 0 && *tf > 0) {
      c.dt = *dt;
      c.t_final = *tf;
      if (!on_time_grid(*tf, *dt)) r.fail("t_final", "must be a whole number of dt steps");
      else time_ok = true;
    }
  }
  c.log_t1 = c.t_final / 2;
  c.log_t2 = c.t_final;
  c.comparability_time = c.t_final;
  c.thresholds.probe_time = c.t_final;
  auto check_time = [&](double t, const std::string& field) {
    if (!time_ok) return;
    if (t <= 0 || t > c.t_final * (1 + 1e-12)) r.fail(field, "must lie in (0, t_final]");
    else if (!on_time_grid(t, c.dt)) r.fail(field, "must be a multiple of dt");
  };
  if (doc.contains("probe_times")) {
    const json& p = doc["probe_times"];
    if (!p.is_object()) r.fail("probe_times", "expected an object");
    r.check_keys(p, "probe_times", {"classify", "log_estimate", "comparability"});
    if (auto v = r.number(p, "classify", "probe_times", false)) {
      c.thresholds.probe_time = *v;
      check_time(*v, "probe_times.classify");
    }
    if (auto v = r.numbers(p, "log_estimate", "probe_times", false)) {
      if (v->size() != 2) {
        r.fail("probe_times.log_estimate", "expected [t1, t2]");
      } else {
        c.log_t1 = (*v)[0];
        c.log_t2 = (*v)[1];
        check_time(c.log_t1, "probe_times.log_estimate[0]");
        check_time(c.log_t2, "probe_times.log_estimate[1]");
        if (c.log_t1 >= c.log_t2) r.fail("probe_times.log_estimate", "need t1 < t2");
      }
    }
    if (auto v = r.number(p, "comparability", "probe_times", false)) {
      c.comparability_time = *v;
      check_time(*v, "probe_times.comparability");
    }
  }

  if (doc.contains("thresholds")) {
    const json& t = doc["thresholds"];
    if (!t.is_object()) r.fail("thresholds", "expected an object");
    r.check_keys(t, "thresholds", {"rel_tol", "divergence_ratio", "growth_ratio"});
    if (auto v = r.number(t, "rel_tol", "thresholds", false)) {
      if (*v <= 0) r.fail("thresholds.rel_tol", "must be positive");
      c.thresholds.rel_tol = *v;
    }
    if (auto v = r.number(t, "divergence_ratio", "thresholds", false)) {
      if (*v <= 1) r.fail("thresholds.divergence_ratio", "must exceed 1");
      c.thresholds.divergence_ratio = *v;
    }
    if (auto v = r.number(t, "growth_ratio", "thresholds", false)) {
      if (*v <= 1) r.fail("thresholds.growth_ratio", "must exceed 1");
      c.thresholds.growth_ratio = *v;
    }
  }

  if (auto v = r.string(doc, "initial_condition", "", false)) {
    if (*v == "inradius_indicator") c.initial = InitialCondition::InradiusIndicator;
    else if (*v == "ground_state") c.initial = InitialCondition::GroundState;
    else r.fail("initial_condition", "unknown value \"" + *v + "\" (inradius_indicator, ground_state)");
  }

  if (doc.contains("shrinking_ball")) {
    const json& b = doc["shrinking_ball"];
    if (!b.is_object()) r.fail("shrinking_ball", "expected an object");
    r.check_keys(b, "shrinking_ball", {"radii", "nodes_per_diameter"});
    if (auto v = r.numbers(b, "radii", "shrinking_ball", true)) {
      c.ball_radii = *v;
      for (std::size_t i = 0; i < v->size(); ++i) {
        const std::string field = "shrinking_ball.radii[" + std::to_string(i) + "]";
        if ((*v)[i] <= 0) r.fail(field, "must be positive");
        else if (domain_ok && (*v)[i] > c.domain.inradius() * (1 + 1e-12)) r.fail(field, "ball leaves the domain");
        if (i > 0 && (*v)[i] >= (*v)[i - 1]) r.fail(field, "radii must be strictly decreasing");
      }
      if (v->size() < 3) r.fail("shrinking_ball.radii", "need at least three balls");
    }
    if (auto v = r.integer(b, "nodes_per_diameter", "shrinking_ball", false)) {
      if (*v < 8 || *v > 4096) r.fail("shrinking_ball.nodes_per_diameter", "must lie in [8, 4096]");
      else c.ball_nodes_per_diameter = static_cast<int>(*v);
    }
    if (domain_ok) {
      const double per_axis = c.ball_nodes_per_diameter;
      const double estimate = d == 1 ? per_axis : per_axis * per_axis * M_PI / 4;
      if (estimate > static_cast<double>(kMaxDenseNodes))
        r.fail("shrinking_ball.nodes_per_diameter",
               "about " + std::to_string(static_cast<long long>(estimate)) + " nodes per ball exceeds the dense cap");
    }
    if (std::holds_alternative<Custom>(c.potential.kind))
      r.fail("shrinking_ball", "not available for custom potentials");
  }

  if (doc.contains("certificates")) {
    const json& t = doc["certificates"];
    if (!t.is_object()) r.fail("certificates", "expected an object");
    r.check_keys(t, "certificates", {"log_trials", "energy_trials", "comparability_bound"});
    if (auto v = r.integer(t, "log_trials", "certificates", false)) {
      if (*v < 0 || *v > 10000) r.fail("certificates.log_trials", "must lie in [0, 10000]");
      else c.log_trials = static_cast<int>(*v);
    }
    if (auto v = r.integer(t, "energy_trials", "certificates", false)) {
      if (*v < 0 || *v > 10000) r.fail("certificates.energy_trials", "must lie in [0, 10000]");
      else c.energy_trials = static_cast<int>(*v);
    }
    if (auto v = r.number(t, "comparability_bound", "certificates", false)) {
      if (*v < 1) r.fail("certificates.comparability_bound", "must be at least 1");
      c.comparability_bound = *v;
    }
  }

  if (auto v = r.numbers(doc, "state_checkpoints", "", false)) {
    c.state_checkpoints = *v;
    for (std::size_t i = 0; i < v->size(); ++i) check_time((*v)[i], "state_checkpoints[" + std::to_string(i) + "]");
  }
  if (auto v = r.string(doc, "output_dir", "", false)) {
    if (v->empty()) r.fail("output_dir", "must not be empty");
    c.output_dir = *v;
    if (c.output_dir.is_relative()) c.output_dir = (base_dir / c.output_dir).lexically_normal();
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) r.fail("seed", "expected a nonnegative integer");
    else c.seed = doc["seed"].get<std::uint64_t>();
  }

  out.errors = std::move(r.errors);
  if (out.errors.empty()) {
    // Digest over the normalised document (sorted keys), not the raw text, and
    // over any table contents it points at.
    json canon = doc;
    canon.erase("output_dir");
    c.canonical = canon.dump();
    if (!out.custom_tables.empty()) {
      std::vector<double> all;
      for (std::size_t i = 0; i < out.custom_tables.size(); ++i) {
        const Eigen::Index n = build_grid(c.domain, c.h_schedule[i]).size();
        try {
          const Custom table = read_custom_table(out.custom_tables[i], n);
          all.insert(all.end(), table.values.begin(), table.values.end());
        } catch (const Error& e) {
          out.errors.push_back("potential.tables[" + std::to_string(i) + "]: " + e.what());
        }
      }
      c.potential.kind = Custom{all};
    }
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void throw_config(const std::vector<std::string>& errors) {
  std::string msg = "invalid config";
  for (const auto& e : errors) msg += "\n  " + e;
  throw Error(ErrorCode::ConfigError, msg);
}

// Custom tables are concatenated over the meshes; slice out mesh i.
PotentialSpec spec_for_mesh(const ExperimentConfig& c, std::size_t mesh) {
  const auto* custom = std::get_if<Custom>(&c.potential.kind);
  if (!custom) return c.potential;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < mesh; ++i) offset += static_cast<std::size_t>(build_grid(c.domain, c.h_schedule[i]).size());
  const auto n = static_cast<std::size_t>(build_grid(c.domain, c.h_schedule[mesh]).size());
  PotentialSpec spec = c.potential;
  spec.kind = Custom{std::vector<double>(custom->values.begin() + static_cast<std::ptrdiff_t>(offset),
                                         custom->values.begin() + static_cast<std::ptrdiff_t>(offset + n))};
  return spec;
}

json number_json(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

json certificate_json(const Certificate& cert) {
  json details = json::object();
  for (const auto& [key, value] : cert.details) details[key] = number_json(value);
  return {{"name", cert.name},           {"inputs_digest", cert.inputs_digest}, {"lhs", number_json(cert.lhs)},
          {"rhs", number_json(cert.rhs)}, {"tolerance", number_json(cert.tolerance)},
          {"satisfied", cert.satisfied},  {"slack", number_json(cert.slack)},    {"details", details}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

Vector random_test_vector(const Grid& grid, UniformSource& rng) {
  const Eigen::Index n = grid.size();
  const int d = grid.dimension();
  // Random centre within the bounding box, radius up to the domain size.
  const Eigen::VectorXd half = grid.domain.half_extents();
  Eigen::VectorXd centre(d);
  for (int a = 0; a < d; ++a) centre[a] = (2 * rng.next() - 1) * half[a];
  const double radius = (0.1 + 0.9 * rng.next()) * half.maxCoeff();
  Vector phi = Vector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (grid.points.row(i).transpose() - centre).norm();
    if (r < radius) phi[i] = (0.5 + rng.next()) * (1 - r / radius);
  }
  if (phi.isZero()) {
    // Ball missed every node; fall back to the node nearest the centre.
    Eigen::Index best = 0;
    (grid.points.rowwise() - centre.transpose()).rowwise().squaredNorm().minCoeff(&best);
    phi[best] = 1.0;
  }
  return phi / std::sqrt(phi.squaredNorm() * grid.cell_volume());
}

std::vector<std::string> validate_config_text(const std::string& json_text, const fs::path& base_dir) {
  return parse(json_text, base_dir).errors;
}

std::vector<std::string> validate_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    return {std::string("config: ") + e.what()};
  }
  return validate_config_text(text, path.parent_path());
}

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
  Parsed p = parse(json_text, base_dir);
  if (!p.errors.empty()) throw_config(p.errors);
  return p.config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  return parse_config(text, path.parent_path());
}

RunSummary run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const fs::path out_dir = options.output_dir.value_or(config.output_dir);
  const std::uint64_t seed = options.seed.value_or(config.seed);
  const int threads = std::max(1, options.threads);
  const std::size_t meshes = config.h_schedule.size();

  std::vector<std::optional<MeshLevel>> slots(meshes);
  parallel_for(meshes, threads, [&](std::size_t i) {
    slots[i] = build_level(config.domain, config.alpha, spec_for_mesh(config, i), config.h_schedule[i]);
  });
  std::vector<MeshLevel> levels;
  for (auto& s : slots) levels.push_back(std::move(*s));

  const SpectralSeries series = refinement_series(levels, config.k_schedule, config.potential.epsilon, threads);

  // Initial data and monotone families, one per mesh.
  std::vector<Vector> u0(meshes);
  std::vector<std::vector<Trajectory>> families(meshes);
  parallel_for(meshes, threads, [&](std::size_t i) {
    const MeshLevel& L = levels[i];
    if (config.initial == InitialCondition::GroundState) {
      const SpectralBottom ground = spectral_bottom(L.op, Vector::Zero(L.op.size()));
      u0[i] = ground.eigvec / std::sqrt(ground.eigvec.squaredNorm() * L.op.cell_volume());
    } else {
      u0[i] = inradius_indicator(L.op.grid);
    }
    families[i] = monotone_family(L.op, L.potential, config.k_schedule, u0[i], config.t_final, config.dt);
  });

  std::vector<Trajectory> largest_k;
  for (const auto& f : families) largest_k.push_back(f.back());
  const Verdict verdict = classify(series, largest_k, config.thresholds);

  // Certificates on the finest mesh.
  const MeshLevel& fine = levels.back();
  const std::vector<Trajectory>& fine_family = families.back();
  std::vector<Certificate> certs;
  UniformSource rng(seed);

  for (std::size_t j = 0; j < fine_family.size(); ++j) {
    const PotentialField vk = truncate(fine.potential, config.k_schedule[j]);
    const double lambda0 = spectral_bottom(fine.op, vk.values).lambda0;
    Certificate cert = exponential_bound_certificate(fine_family[j], lambda0);
    cert.details.emplace_back("k", config.k_schedule[j]);
    certs.push_back(std::move(cert));
  }

  {
    const Trajectory& traj = fine_family.back();
    const PotentialField vk = truncate(fine.potential, config.k_schedule.back());
    for (int trial = 0; trial < config.log_trials; ++trial) {
      const Vector phi = random_test_vector(fine.op.grid, rng);
      Certificate cert = log_estimate_certificate(traj, fine.op, phi, vk, config.log_t1, config.log_t2);
      cert.details.emplace_back("trial", trial);
      certs.push_back(std::move(cert));
    }
    const Vector& u = traj.states[traj.index_of(config.thresholds.probe_time)];
    for (int trial = 0; trial < config.energy_trials; ++trial) {
      const Vector phi = random_test_vector(fine.op.grid, rng);
      Certificate cert = energy_inequality_certificate(fine.op, u, phi);
      cert.details.emplace_back("trial", trial);
      certs.push_back(std::move(cert));
    }
  }

  certs.push_back(
      ground_state_comparability(fine.op, u0.back(), config.comparability_time, config.comparability_bound));

  std::optional<ShrinkingBallResult> ball;
  if (!config.ball_radii.empty()) {
    ball = shrinking_ball_certificate(config.domain, config.alpha, config.potential, config.ball_radii,
                                      config.ball_nodes_per_diameter, threads);
    certs.push_back(ball->certificate);
  }

  double min_state = std::numeric_limits<double>::infinity();
  for (const auto& family : families)
    for (const Trajectory& traj : family)
      for (const Vector& u : traj.states) min_state = std::min(min_state, u.minCoeff());

  const double duhamel = duhamel_residual(fine_family.back(), fine.op, truncate(fine.potential, config.k_schedule.back()));

  // Outputs.
  fs::create_directories(out_dir);
  {
    std::ostringstream ss;
    write_series_csv(ss, series);
    write_text(out_dir / "series.csv", ss.str());
  }
  {
    std::ostringstream ss;
    ss << "h,k,t,l2_norm,max_value\n";
    for (std::size_t i = 0; i < meshes; ++i)
      for (const Trajectory& traj : families[i])
        for (std::size_t n = 0; n < traj.times.size(); ++n)
          ss << format_number(traj.h) << ',' << format_number(traj.k.value_or(kInf)) << ','
             << format_number(traj.times[n]) << ',' << format_number(traj.l2_norms[n]) << ','
             << format_number(traj.max_values[n]) << '\n';
    write_text(out_dir / "trajectories.csv", ss.str());
  }
  {
    std::ostringstream ss;
    ss << "h,lambda0,sup_norm_probe,l2_norm_probe\n";
    for (const MeshEvidence& e : verdict.evidence)
      ss << format_number(e.h) << ',' << format_number(e.lambda0) << ',' << format_number(e.sup_norm) << ','
         << format_number(e.l2_norm) << '\n';
    write_text(out_dir / "curves.csv", ss.str());
  }
  std::vector<std::string> state_files;
  if (!config.state_checkpoints.empty()) {
    std::ostringstream ss;
    write_state_dump(ss, fine_family.back(), config.state_checkpoints);
    state_files.push_back("states.csv");
    write_text(out_dir / state_files.back(), ss.str());
  }

  Digest config_digest;
  config_digest.add(config.canonical).add(static_cast<double>(seed));
  Digest evidence_digest;
  for (const SpectralEntry& e : series.entries) evidence_digest.add(e.h).add(e.k).add(e.lambda0);
  for (const MeshEvidence& e : verdict.evidence) evidence_digest.add(e.sup_norm).add(e.l2_norm);

  json evidence = json::array();
  for (const MeshEvidence& e : verdict.evidence)
    evidence.push_back({{"h", e.h},
                        {"lambda0", number_json(e.lambda0)},
                        {"sup_norm", number_json(e.sup_norm)},
                        {"l2_norm", number_json(e.l2_norm)}});
  json cert_list = json::array();
  for (const Certificate& cert : certs) cert_list.push_back(certificate_json(cert));

  json flags = json::array();
  if (config.potential.unsupported_by_theory(config.domain.dimension())) flags.push_back("unsupported_by_theory");
  // The shrinking-ball test is evidence for blow-up, not a consistency check.
  bool all_satisfied = true;
  for (const Certificate& cert : certs)
    if (cert.name != "shrinking_ball") all_satisfied = all_satisfied && cert.satisfied;
  if (!all_satisfied) flags.push_back("certificate_unsatisfied");

  json report = {
      {"schema_version", kSchemaVersion},
      {"name", config.name},
      {"config_digest", config_digest.hex()},
      {"seed", seed},
      {"domain", config.domain.describe()},
      {"alpha", config.alpha},
      {"potential", config.potential.label()},
      {"constants",
       {{"normalization_constant", normalization_constant(config.domain.dimension(), config.alpha)},
        {"hardy_sharp_constant", hardy_sharp_constant(config.domain.dimension(), config.alpha)}}},
      {"verdict",
       {{"label", to_string(verdict.label)},
        {"thresholds",
         {{"rel_tol", verdict.thresholds.rel_tol},
          {"divergence_ratio", verdict.thresholds.divergence_ratio},
          {"growth_ratio", verdict.thresholds.growth_ratio},
          {"probe_time", verdict.thresholds.probe_time}}},
        {"epsilon", verdict.epsilon},
        {"reason", verdict.reason},
        {"inputs_digest", evidence_digest.hex()},
        {"evidence", evidence}}},
      {"certificates", cert_list},
      {"residuals",
       {{"duhamel", {{"h", fine.h}, {"k", number_json(config.k_schedule.back())}, {"value", number_json(duhamel)}}},
        {"min_state_value", min_state}}},
      {"flags", flags},
      {"series_file", "series.csv"},
      {"trajectories_file", "trajectories.csv"},
      {"curves_file", "curves.csv"},
      {"state_files", state_files},
  };
  if (ball) {
    json probes = json::array();
    for (const BallProbe& p : ball->probes)
      probes.push_back({{"radius", p.radius}, {"volume", p.volume}, {"nodes", p.nodes}, {"lambda0", p.lambda0}});
    report["shrinking_ball"] = {{"fitted_exponent", number_json(ball->fitted_exponent)},
                                {"target_exponent", config.alpha / config.domain.dimension()},
                                {"probes", probes}};
  }

  const fs::path report_path = out_dir / "report.json";
  write_text(report_path, report.dump(2) + "\n");
  return {verdict, std::move(certs), report_path, min_state};
}

}  // namespace fraclab
