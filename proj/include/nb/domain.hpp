#pragma once

#include "nb/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace nb {

enum class Shape { interval, rectangle, polygon };

std::string to_string(Shape shape);
Shape shape_from_string(const std::string& name);

/// Bounded model domain: an interval [0, L], a rectangle [0, Lx] x [0, Ly],
/// or a simple axis-aligned polygon (e.g. an L-shape).
class Domain {
 public:
  static Domain interval(double length);
  static Domain rectangle(double lx, double ly);
  static Domain polygon(std::vector<Eigen::Vector2d> vertices);
  /// [0,2]^2 minus (1,2)^2.
  static Domain l_shape();

  Shape shape() const { return shape_; }
  int dim() const { return shape_ == Shape::interval ? 1 : 2; }
  double volume() const { return volume_; }
  double diameter() const { return diameter_; }
  /// Side length along an axis (interval/rectangle only).
  double length(int axis) const;
  Eigen::Vector2d lower() const { return lower_; }
  Eigen::Vector2d upper() const { return upper_; }
  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Domain() = default;

  Shape shape_ = Shape::interval;
  std::vector<Eigen::Vector2d> vertices_;
  Eigen::Vector2d lower_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d upper_ = Eigen::Vector2d::Zero();
  double volume_ = 0.0;
  double diameter_ = 0.0;
};

/// Cell-centered quadrature grid. Node i sits at the center of cell
/// `cells.row(i)` of an axis-aligned lattice with the given spacing.
struct Grid {
  int dim = 1;
  Eigen::MatrixXd nodes;    // N x dim
  Eigen::VectorXd weights;  // N
  Eigen::Vector2d spacing = Eigen::Vector2d::Zero();
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  Eigen::MatrixXi cells;    // N x dim lattice indices
  Eigen::Vector2i extent = Eigen::Vector2i::Zero();  // lattice size of the bounding box

  Index size() const { return weights.size(); }
  double h() const { return dim == 1 ? spacing(0) : spacing.head(2).maxCoeff(); }
  double measure() const { return weights.sum(); }
};

/// Uniform cell-centered grid on an interval (ny ignored) or rectangle;
/// nodes ordered with x fastest.
Grid cell_centered_grid(const Domain& domain, Index nx, Index ny = 1);

/// Cells of spacing h whose centers lie inside an axis-aligned polygon.
/// Vertices must sit on the h-lattice anchored at the bounding-box corner.
Grid polygon_grid(const Domain& domain, double h);

/// 64-bit FNV-1a fingerprint of node and weight bytes.
std::uint64_t grid_id(const Grid& grid);

/// Quadrature L^p norm (sum_i w_i |f_i|^p)^{1/p}; p = inf gives max_i |f_i|.
template <typename Derived>
double lp_norm(const Grid& grid, const Eigen::MatrixBase<Derived>& f, double p) {
  require_exponent(p);
  require(f.rows() == grid.size() && f.cols() == 1, "lp_norm: function does not match grid");
  if (f.size() == 0) return 0.0;
  const Eigen::ArrayXd magnitude = f.derived().array().abs().template cast<double>();
  if (std::isinf(p)) return magnitude.maxCoeff();
  if (p == 1.0) return (grid.weights.array() * magnitude).sum();
  if (p == 2.0) return std::sqrt((grid.weights.array() * magnitude.square()).sum());
  // Scale by the max to keep large exponents away from overflow.
  const double top = magnitude.maxCoeff();
  if (top == 0.0) return 0.0;
  return top * std::pow((grid.weights.array() * (magnitude / top).pow(p)).sum(), 1.0 / p);
}

/// Quadrature inner product sum_i w_i f_i conj(g_i).
template <typename DerivedF, typename DerivedG>
auto inner_product(const Grid& grid, const Eigen::MatrixBase<DerivedF>& f,
                   const Eigen::MatrixBase<DerivedG>& g) {
  require(f.rows() == grid.size() && g.rows() == grid.size(), "inner_product: size mismatch");
  return (grid.weights.array().template cast<typename DerivedF::Scalar>() * f.derived().array() *
          g.derived().array().conjugate())
      .sum();
}

}  // namespace nb
