#include "fraclab/potentials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include "fraclab/kernel.hpp"

namespace fraclab {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

struct BoundedForm {
  double amplitude;
  std::optional<double> gaussian_width;
};

BoundedForm parse_bounded(const std::string& expr) {
  static const std::regex number(R"(\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*)");
  static const std::regex gaussian(
      R"(\s*gaussian\(\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*,\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\)\s*)");
  std::smatch m;
  if (std::regex_match(expr, m, number)) return {std::stod(m[1]), std::nullopt};
  if (std::regex_match(expr, m, gaussian)) {
    const double w = std::stod(m[2]);
    if (!(w > 0.0)) throw Error(ErrorCode::DomainError, "gaussian width must be positive");
    return {std::stod(m[1]), w};
  }
  throw Error(ErrorCode::DomainError, "unrecognised bounded potential expression '" + expr + "'");
}

}  // namespace

double hardy_sharp_constant(int d, double alpha) {
  check_admissible(d, alpha);
  const double ratio = std::tgamma(0.25 * (d + alpha)) / std::tgamma(0.25 * (d - alpha));
  return std::pow(2.0, alpha) * ratio * ratio;
}

void PotentialSpec::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw Error(ErrorCode::DomainError, "epsilon must lie in [0, 1)");
  std::visit(overloaded{[](const HardyInterior& p) {
                          if (!(p.c >= 0.0) || !std::isfinite(p.c))
                            throw Error(ErrorCode::DomainError, "hardy_interior coupling must be >= 0");
                        },
                        [](const HardyBoundary& p) {
                          if (!(p.kappa >= 0.0) || !std::isfinite(p.kappa))
                            throw Error(ErrorCode::DomainError, "hardy_boundary coupling must be >= 0");
                        },
                        [](const Bounded& p) {
                          if (parse_bounded(p.expr).amplitude < 0.0)
                            throw Error(ErrorCode::DomainError, "bounded potential must be nonnegative");
                        },
                        [](const Custom& p) {
                          for (double v : p.values) {
                            if (!(v >= 0.0) || !std::isfinite(v))
                              throw Error(ErrorCode::DomainError, "custom potential values must be finite and >= 0");
                          }
                        }},
             kind);
}

std::string PotentialSpec::label() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{[&](const HardyInterior& p) { os << "hardy_interior(c=" << p.c << ")"; },
                        [&](const HardyBoundary& p) { os << "hardy_boundary(kappa=" << p.kappa << ")"; },
                        [&](const Bounded& p) { os << "bounded(" << p.expr << ")"; },
                        [&](const Custom& p) { os << "custom(n=" << p.values.size() << ")"; }},
             kind);
  return os.str();
}

bool PotentialSpec::unsupported_by_theory(int d) const {
  return std::holds_alternative<HardyBoundary>(kind) && d < 2;
}

PotentialField sample_potential(const PotentialSpec& spec, const Grid& grid, double alpha) {
  spec.validate();
  check_admissible(grid.dimension(), alpha);
  const Eigen::Index n = grid.size();
  Vector values(n);
  std::visit(overloaded{[&](const HardyInterior& p) {
                          const Vector r = radial_distance(grid);
                          for (Eigen::Index i = 0; i < n; ++i) {
                            if (r[i] == 0.0)
                              throw Error(ErrorCode::SingularNode, "node " + std::to_string(i) + " sits at the origin");
                            values[i] = p.c * std::pow(r[i], -alpha);
                          }
                        },
                        [&](const HardyBoundary& p) {
                          const Vector delta = boundary_distance(grid);
                          for (Eigen::Index i = 0; i < n; ++i) {
                            if (!(delta[i] > 0.0))
                              throw Error(ErrorCode::SingularNode, "node " + std::to_string(i) + " sits on the boundary");
                            values[i] = p.kappa * std::pow(delta[i], -alpha);
                          }
                        },
                        [&](const Bounded& p) {
                          const BoundedForm form = parse_bounded(p.expr);
                          if (!form.gaussian_width) {
                            values.setConstant(form.amplitude);
                            return;
                          }
                          const double w2 = *form.gaussian_width * *form.gaussian_width;
                          values = form.amplitude * (-grid.points.rowwise().squaredNorm().array() / w2).exp();
                        },
                        [&](const Custom& p) {
                          if (static_cast<Eigen::Index>(p.values.size()) != n)
                            throw Error(ErrorCode::DimensionMismatch, "custom potential has " +
                                                                          std::to_string(p.values.size()) +
                                                                          " values for " + std::to_string(n) + " nodes");
                          values = Eigen::Map<const Vector>(p.values.data(), n);
                        }},
             spec.kind);
  return PotentialField{std::move(values), std::nullopt, spec, grid};
}

PotentialField truncate(const PotentialField& field, double k) {
  if (!(k >= 0.0)) throw Error(ErrorCode::DomainError, "truncation level must be >= 0");
  PotentialField out = field;
  out.values = field.values.cwiseMin(k);
  out.truncation_k = field.truncation_k ? std::min(*field.truncation_k, k) : k;
  return out;
}

PotentialField scaled(const PotentialField& field, double factor) {
  PotentialField out = field;
  out.values *= factor;
  if (out.truncation_k) *out.truncation_k *= factor;
  return out;
}

Custom read_custom_table(const std::string& path, Eigen::Index expected_nodes) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open potential table " + path);
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 11) != "index,value") {
    throw Error(ErrorCode::ConfigError, path + ": header must be 'index,value'");
  }
  std::vector<double> values(static_cast<std::size_t>(expected_nodes), NAN);
  std::vector<bool> seen(values.size(), false);
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::ConfigError, path + ": malformed row " + std::to_string(row));
    long index = -1;
    const auto head = line.substr(0, comma);
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), index);
    if (ec != std::errc() || index < 0 || index >= expected_nodes) {
      throw Error(ErrorCode::ConfigError, path + ": bad node index on row " + std::to_string(row));
    }
    if (seen[static_cast<std::size_t>(index)]) {
      throw Error(ErrorCode::ConfigError, path + ": duplicate index " + std::to_string(index));
    }
    seen[static_cast<std::size_t>(index)] = true;
    const auto tail = line.substr(comma + 1);
    double value = 0.0;
    auto [vptr, vec] = std::from_chars(tail.data(), tail.data() + tail.size(), value);
    if (vec != std::errc() || vptr != tail.data() + tail.size()) {
      throw Error(ErrorCode::ConfigError, path + ": bad value in row " + std::to_string(row));
    }
    values[static_cast<std::size_t>(index)] = value;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw Error(ErrorCode::ConfigError, path + ": table does not cover every node");
  }
  Custom table{std::move(values)};
  PotentialSpec{table}.validate();
  return table;
}

}  // namespace fraclab
