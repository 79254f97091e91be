#include "nb/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace nb {

std::string to_string(Shape shape) {
  switch (shape) {
    case Shape::interval: return "interval";
    case Shape::rectangle: return "rectangle";
    case Shape::polygon: return "polygon";
  }
  return "unknown";
}

Shape shape_from_string(const std::string& name) {
  if (name == "interval") return Shape::interval;
  if (name == "rectangle") return Shape::rectangle;
  if (name == "polygon" || name == "lshape") return Shape::polygon;
  throw std::invalid_argument("unknown shape '" + name + "'");
}

Domain Domain::interval(double length) {
  require(length > 0.0 && std::isfinite(length), "interval length must be positive");
  Domain d;
  d.shape_ = Shape::interval;
  d.upper_ = {length, 0.0};
  d.volume_ = length;
  d.diameter_ = length;
  return d;
}

Domain Domain::rectangle(double lx, double ly) {
  require(lx > 0.0 && ly > 0.0 && std::isfinite(lx) && std::isfinite(ly),
          "rectangle side lengths must be positive");
  Domain d;
  d.shape_ = Shape::rectangle;
  d.upper_ = {lx, ly};
  d.volume_ = lx * ly;
  d.diameter_ = std::hypot(lx, ly);
  d.vertices_ = {{0.0, 0.0}, {lx, 0.0}, {lx, ly}, {0.0, ly}};
  return d;
}

namespace {

struct Segment {
  Eigen::Vector2d a, b;
  bool horizontal() const { return a.y() == b.y(); }
};

bool overlaps(double a0, double a1, double b0, double b1) {
  return std::max(std::min(a0, a1), std::min(b0, b1)) <= std::min(std::max(a0, a1), std::max(b0, b1));
}

bool segments_touch(const Segment& s, const Segment& t) {
  if (s.horizontal() == t.horizontal()) {
    if (s.horizontal()) return s.a.y() == t.a.y() && overlaps(s.a.x(), s.b.x(), t.a.x(), t.b.x());
    return s.a.x() == t.a.x() && overlaps(s.a.y(), s.b.y(), t.a.y(), t.b.y());
  }
  const Segment& h = s.horizontal() ? s : t;
  const Segment& v = s.horizontal() ? t : s;
  const double x = v.a.x(), y = h.a.y();
  return x >= std::min(h.a.x(), h.b.x()) && x <= std::max(h.a.x(), h.b.x()) &&
         y >= std::min(v.a.y(), v.b.y()) && y <= std::max(v.a.y(), v.b.y());
}

}  // namespace

Domain Domain::polygon(std::vector<Eigen::Vector2d> vertices) {
  const std::size_t n = vertices.size();
  require(n >= 4, "polygon needs at least four vertices");
  std::vector<Segment> edges;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = vertices[i];
    const auto& b = vertices[(i + 1) % n];
    require(a.allFinite(), "polygon vertices must be finite");
    require(a != b, "polygon has a zero-length edge");
    require(a.x() == b.x() || a.y() == b.y(), "polygon edges must be axis-aligned");
    edges.push_back({a, b});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      const bool adjacent = (k == i + 1) || (i == 0 && k == n - 1);
      if (adjacent) {
        // Consecutive edges may only share their common vertex.
        if (edges[i].horizontal() == edges[k].horizontal())
          require(false, "polygon has consecutive collinear edges");
        continue;
      }
      require(!segments_touch(edges[i], edges[k]), "polygon is not simple");
    }
  }

  Domain d;
  d.shape_ = Shape::polygon;
  d.vertices_ = std::move(vertices);
  d.lower_ = d.vertices_.front();
  d.upper_ = d.vertices_.front();
  double area = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = d.vertices_[i];
    const auto& b = d.vertices_[(i + 1) % n];
    d.lower_ = d.lower_.cwiseMin(a);
    d.upper_ = d.upper_.cwiseMax(a);
    area += a.x() * b.y() - b.x() * a.y();
    for (const auto& c : d.vertices_) d.diameter_ = std::max(d.diameter_, (a - c).norm());
  }
  d.volume_ = 0.5 * std::abs(area);
  return d;
}

Domain Domain::l_shape() {
  return polygon({{0.0, 0.0}, {2.0, 0.0}, {2.0, 1.0}, {1.0, 1.0}, {1.0, 2.0}, {0.0, 2.0}});
}

double Domain::length(int axis) const {
  require(shape_ != Shape::polygon, "length: only defined for intervals and rectangles");
  require(axis >= 0 && axis < dim(), "length: axis out of range");
  return upper_(axis) - lower_(axis);
}

bool Domain::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (shape_ == Shape::interval) return x(0) >= lower_(0) && x(0) <= upper_(0);
  if (shape_ == Shape::rectangle)
    return x(0) >= lower_(0) && x(0) <= upper_(0) && x(1) >= lower_(1) && x(1) <= upper_(1);
  // Even-odd ray casting toward +x.
  bool inside = false;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0, k = n - 1; i < n; k = i++) {
    const auto& a = vertices_[i];
    const auto& b = vertices_[k];
    if ((a.y() > x(1)) != (b.y() > x(1))) {
      const double cross = (b.x() - a.x()) * (x(1) - a.y()) / (b.y() - a.y()) + a.x();
      if (x(0) < cross) inside = !inside;
    }
  }
  return inside;
}

Grid cell_centered_grid(const Domain& domain, Index nx, Index ny) {
  require(domain.shape() != Shape::polygon, "cell_centered_grid: use polygon_grid for polygons");
  require(nx >= 1, "grid needs at least one cell per axis");
  Grid g;
  g.dim = domain.dim();
  if (g.dim == 1) ny = 1;
  require(ny >= 1, "grid needs at least one cell per axis");
  const double hx = domain.length(0) / static_cast<double>(nx);
  const double hy = g.dim == 2 ? domain.length(1) / static_cast<double>(ny) : 1.0;
  g.spacing = {hx, g.dim == 2 ? hy : 0.0};
  g.extent = {static_cast<int>(nx), static_cast<int>(ny)};
  const Index n = nx * ny;
  g.nodes.resize(n, g.dim);
  g.cells.resize(n, g.dim);
  g.weights = Eigen::VectorXd::Constant(n, g.dim == 2 ? hx * hy : hx);
  for (Index iy = 0; iy < ny; ++iy) {
    for (Index ix = 0; ix < nx; ++ix) {
      const Index i = ix + nx * iy;
      g.nodes(i, 0) = (static_cast<double>(ix) + 0.5) * hx;
      g.cells(i, 0) = static_cast<int>(ix);
      if (g.dim == 2) {
        g.nodes(i, 1) = (static_cast<double>(iy) + 0.5) * hy;
        g.cells(i, 1) = static_cast<int>(iy);
      }
    }
  }
  return g;
}

Grid polygon_grid(const Domain& domain, double h) {
  require(domain.shape() == Shape::polygon, "polygon_grid: domain is not a polygon");
  require(h > 0.0 && std::isfinite(h), "grid spacing must be positive");
  const Eigen::Vector2d lo = domain.lower();
  const Eigen::Vector2d span = domain.upper() - lo;
  auto on_lattice = [h](double v) { return std::abs(v / h - std::round(v / h)) < 1e-9; };
  for (const auto& v : domain.vertices())
    require(on_lattice(v.x() - lo.x()) && on_lattice(v.y() - lo.y()),
            "polygon vertices must lie on the h-lattice (h must divide edge lengths)");
  const int nx = static_cast<int>(std::lround(span.x() / h));
  const int ny = static_cast<int>(std::lround(span.y() / h));

  std::vector<Eigen::Vector2i> cells;
  Eigen::VectorXd center(2);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      center << lo.x() + (ix + 0.5) * h, lo.y() + (iy + 0.5) * h;
      if (domain.contains(center)) cells.emplace_back(ix, iy);
    }
  }
  require(!cells.empty(), "polygon_grid: no cells inside the polygon");

  Grid g;
  g.dim = 2;
  g.spacing = {h, h};
  g.origin = lo;
  g.extent = {nx, ny};
  const Index n = static_cast<Index>(cells.size());
  g.nodes.resize(n, 2);
  g.cells.resize(n, 2);
  g.weights = Eigen::VectorXd::Constant(n, h * h);
  for (Index i = 0; i < n; ++i) {
    g.cells.row(i) = cells[static_cast<std::size_t>(i)].transpose();
    g.nodes(i, 0) = lo.x() + (cells[static_cast<std::size_t>(i)].x() + 0.5) * h;
    g.nodes(i, 1) = lo.y() + (cells[static_cast<std::size_t>(i)].y() + 0.5) * h;
  }
  return g;
}

std::uint64_t grid_id(const Grid& grid) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](const double* data, Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < static_cast<std::size_t>(count) * sizeof(double); ++k) {
      hash ^= bytes[k];
      hash *= 1099511628211ULL;
    }
  };
  const Eigen::MatrixXd nodes = grid.nodes;  // column-major copy
  mix(nodes.data(), nodes.size());
  mix(grid.weights.data(), grid.weights.size());
  return hash;
}

}  // namespace nb
