#pragma once

#include <variant>

#include "fraclab/error.hpp"
#include "fraclab/types.hpp"

namespace fraclab {

struct Interval {
  double R;  // half-length; the domain is (-R, R)
};

struct Rectangle {
  double a;  // half-width along x
  double b;  // half-width along y
};

struct Disk {
  double R;
};

/// Bounded domain centred at the origin. Intervals live in d = 1, rectangles
/// and disks in d = 2.
class DomainSpec {
 public:
  using Shape = std::variant<Interval, Rectangle, Disk>;

  DomainSpec(Shape shape);  // throws DomainError on non-positive sizes

  static DomainSpec interval(double R) { return DomainSpec(Interval{R}); }
  static DomainSpec rectangle(double a, double b) { return DomainSpec(Rectangle{a, b}); }
  static DomainSpec disk(double R) { return DomainSpec(Disk{R}); }

  const Shape& shape() const { return shape_; }
  int dimension() const;

  /// Strict membership; boundary points are outside.
  bool contains(const double* x) const;
  /// Euclidean distance to the complement, from the analytic description.
  double distance_to_complement(const double* x) const;
  double inradius() const;
  /// Half-extents of the bounding box, one per axis.
  Eigen::VectorXd half_extents() const;
  double volume() const;
  std::string describe() const;

 private:
  Shape shape_;
};

/// Interior cell centres of a uniform lattice anchored at the bounding-box
/// corner: node coordinates are corner + (j + 1/2) h along each axis.
struct Grid {
  DomainSpec domain;
  double h;
  Points points;  // n x d, lexicographic order (first axis slowest)

  Eigen::Index size() const { return points.rows(); }
  int dimension() const { return static_cast<int>(points.cols()); }
  double cell_volume() const;
  const double* point(Eigen::Index i) const { return points.row(i).data(); }
};

Grid build_grid(const DomainSpec& domain, double h);

Vector boundary_distance(const Grid& grid);

/// Euclidean norms of the node coordinates.
Vector radial_distance(const Grid& grid);

}  // namespace fraclab
