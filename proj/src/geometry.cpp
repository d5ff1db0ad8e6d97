#include "fraclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace fraclab {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::DomainError, std::string(name) + " must be strictly positive and finite");
  }
}

}  // namespace

DomainSpec::DomainSpec(Shape shape) : shape_(shape) {
  std::visit(overloaded{[](const Interval& s) { require_positive(s.R, "interval R"); },
                        [](const Rectangle& s) {
                          require_positive(s.a, "rectangle a");
                          require_positive(s.b, "rectangle b");
                        },
                        [](const Disk& s) { require_positive(s.R, "disk R"); }},
             shape_);
}

int DomainSpec::dimension() const { return std::holds_alternative<Interval>(shape_) ? 1 : 2; }

bool DomainSpec::contains(const double* x) const {
  return std::visit(overloaded{[&](const Interval& s) { return std::abs(x[0]) < s.R; },
                               [&](const Rectangle& s) {
                                 return std::abs(x[0]) < s.a && std::abs(x[1]) < s.b;
                               },
                               [&](const Disk& s) { return std::hypot(x[0], x[1]) < s.R; }},
                    shape_);
}

double DomainSpec::distance_to_complement(const double* x) const {
  return std::visit(
      overloaded{[&](const Interval& s) { return s.R - std::abs(x[0]); },
                 [&](const Rectangle& s) { return std::min(s.a - std::abs(x[0]), s.b - std::abs(x[1])); },
                 [&](const Disk& s) { return s.R - std::hypot(x[0], x[1]); }},
      shape_);
}

double DomainSpec::inradius() const {
  return std::visit(overloaded{[](const Interval& s) { return s.R; },
                               [](const Rectangle& s) { return std::min(s.a, s.b); },
                               [](const Disk& s) { return s.R; }},
                    shape_);
}

Eigen::VectorXd DomainSpec::half_extents() const {
  return std::visit(overloaded{[](const Interval& s) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(1, s.R); },
                               [](const Rectangle& s) -> Eigen::VectorXd {
                                 Eigen::VectorXd e(2);
                                 e << s.a, s.b;
                                 return e;
                               },
                               [](const Disk& s) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(2, s.R); }},
                    shape_);
}

double DomainSpec::volume() const {
  return std::visit(overloaded{[](const Interval& s) { return 2.0 * s.R; },
                               [](const Rectangle& s) { return 4.0 * s.a * s.b; },
                               [](const Disk& s) { return M_PI * s.R * s.R; }},
                    shape_);
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{[&](const Interval& s) { os << "interval(R=" << s.R << ")"; },
                        [&](const Rectangle& s) { os << "rectangle(a=" << s.a << ",b=" << s.b << ")"; },
                        [&](const Disk& s) { os << "disk(R=" << s.R << ")"; }},
             shape_);
  return os.str();
}

double Grid::cell_volume() const { return dimension() == 1 ? h : h * h; }

Grid build_grid(const DomainSpec& domain, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw Error(ErrorCode::DomainError, "grid spacing must be strictly positive");
  }
  const int d = domain.dimension();
  const Eigen::VectorXd half = domain.half_extents();

  // Only whole cells of the bounding box; the slack absorbs 2R/h landing a few
  // ulps below an integer.
  std::vector<long> cells(d);
  for (int a = 0; a < d; ++a) {
    cells[a] = static_cast<long>(std::floor(2.0 * half[a] / h + 1e-9));
  }

  std::vector<double> coords;
  if (d == 1) {
    for (long j = 0; j < cells[0]; ++j) {
      const double x = -half[0] + (static_cast<double>(j) + 0.5) * h;
      if (domain.contains(&x)) coords.push_back(x);
    }
  } else {
    for (long j = 0; j < cells[0]; ++j) {
      for (long l = 0; l < cells[1]; ++l) {
        const double x[2] = {-half[0] + (static_cast<double>(j) + 0.5) * h,
                             -half[1] + (static_cast<double>(l) + 0.5) * h};
        if (domain.contains(x)) {
          coords.push_back(x[0]);
          coords.push_back(x[1]);
        }
      }
    }
  }
  if (coords.empty()) {
    throw Error(ErrorCode::EmptyGrid, "no cell centre of spacing h lies inside " + domain.describe());
  }
  const Eigen::Index n = static_cast<Eigen::Index>(coords.size()) / d;
  Points points = Eigen::Map<Points>(coords.data(), n, d);
  return Grid{domain, h, std::move(points)};
}

Vector boundary_distance(const Grid& grid) {
  Vector delta(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) delta[i] = grid.domain.distance_to_complement(grid.point(i));
  return delta;
}

Vector radial_distance(const Grid& grid) { return grid.points.rowwise().norm(); }

}  // namespace fraclab
