#include "qscope/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qscope/kernels.hpp"

namespace qscope {

Grid make_grid(int n) { return make_grid(n, n); }

Grid make_grid(int nx, int ny) {
  if (nx < 3 || ny < 3)
    throw std::invalid_argument("make_grid: need at least 3 nodes per axis, got " +
                                std::to_string(std::min(nx, ny)));
  return Grid{nx, ny, 1.0 / (nx - 1), 1.0 / (ny - 1)};
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(const Grid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    throw std::invalid_argument("ScalarField: expected " + std::to_string(grid_.size()) +
                                " values, got " + std::to_string(values_.size()));
}

ScalarField ScalarField::sample(const Grid& grid, const std::function<double(double, double)>& f) {
  ScalarField out(grid);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) out(i, j) = f(grid.x(i), grid.y(j));
  return out;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// TensorField

TensorField TensorField::identity(const Grid& grid) { return constant(grid, 1.0, 0.0, 1.0); }

TensorField TensorField::constant(const Grid& grid, double a11, double a12, double a22) {
  TensorField t;
  t.grid = grid;
  t.a11.assign(grid.size(), a11);
  t.a12.assign(grid.size(), a12);
  t.a22.assign(grid.size(), a22);
  return t;
}

TensorField TensorField::sample(const Grid& grid, const std::function<double(double, double)>& f11,
                                const std::function<double(double, double)>& f12,
                                const std::function<double(double, double)>& f22) {
  TensorField t;
  t.grid = grid;
  auto s11 = ScalarField::sample(grid, f11);
  auto s12 = ScalarField::sample(grid, f12);
  auto s22 = ScalarField::sample(grid, f22);
  t.a11.assign(s11.values().begin(), s11.values().end());
  t.a12.assign(s12.values().begin(), s12.values().end());
  t.a22.assign(s22.values().begin(), s22.values().end());
  return t;
}

double TensorField::min_eigenvalue(std::size_t k) const {
  const double m = 0.5 * (a11[k] + a22[k]);
  const double d = 0.5 * (a11[k] - a22[k]);
  return m - std::sqrt(d * d + a12[k] * a12[k]);
}

double TensorField::ellipticity() const {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a11.size(); ++k) lo = std::min(lo, min_eigenvalue(k));
  return lo;
}

double TensorField::max_abs_entry() const {
  double m = 0.0;
  for (std::size_t k = 0; k < a11.size(); ++k)
    m = std::max({m, std::abs(a11[k]), std::abs(a12[k]), std::abs(a22[k])});
  return m;
}

// ---------------------------------------------------------------------------
// RegionMask

RegionMask::RegionMask(const Grid& grid, std::vector<std::uint8_t> inside, std::string descriptor)
    : grid_(grid), inside_(std::move(inside)), descriptor_(std::move(descriptor)) {
  if (inside_.size() != grid_.size()) throw std::invalid_argument("RegionMask: size mismatch");
}

RegionMask RegionMask::full(const Grid& grid) {
  return RegionMask(grid, std::vector<std::uint8_t>(grid.size(), 1), "full");
}

RegionMask RegionMask::interior(const Grid& grid) {
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (int j = 1; j < grid.ny - 1; ++j)
    for (int i = 1; i < grid.nx - 1; ++i) in[grid.index(i, j)] = 1;
  return RegionMask(grid, std::move(in), "interior");
}

RegionMask RegionMask::ball(const Grid& grid, Point c, double r) {
  std::vector<std::uint8_t> in(grid.size(), 0);
  const double r2 = r * r * (1.0 + 1e-12) + 1e-300;
  for (int j = 0; j < grid.ny; ++j) {
    const double dy = grid.y(j) - c.y;
    for (int i = 0; i < grid.nx; ++i) {
      const double dx = grid.x(i) - c.x;
      in[grid.index(i, j)] = (dx * dx + dy * dy <= r2) ? 1 : 0;
    }
  }
  std::ostringstream d;
  d << "ball(" << c.x << "," << c.y << "," << r << ")";
  return RegionMask(grid, std::move(in), d.str());
}

RegionMask RegionMask::inset(const Grid& grid, double margin) {
  std::vector<std::uint8_t> in(grid.size(), 0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i), y = grid.y(j);
      const double d = std::min({x, y, 1.0 - x, 1.0 - y});
      in[grid.index(i, j)] = (d >= margin - 1e-12) ? 1 : 0;
    }
  std::ostringstream d;
  d << "inset(" << margin << ")";
  return RegionMask(grid, std::move(in), d.str());
}

RegionMask RegionMask::band(const ScalarField& distance, double lo, double hi) {
  std::vector<std::uint8_t> in(distance.size(), 0);
  for (std::size_t k = 0; k < distance.size(); ++k)
    in[k] = (distance[k] >= lo && distance[k] < hi) ? 1 : 0;
  std::ostringstream d;
  d << "strip(" << lo << "," << hi << ")";
  return RegionMask(distance.grid(), std::move(in), d.str());
}

RegionMask RegionMask::at_least(const ScalarField& f, double threshold) {
  std::vector<std::uint8_t> in(f.size(), 0);
  for (std::size_t k = 0; k < f.size(); ++k) in[k] = (f[k] >= threshold) ? 1 : 0;
  std::ostringstream d;
  d << "level(" << threshold << ")";
  return RegionMask(f.grid(), std::move(in), d.str());
}

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
}

bool RegionMask::subset_of(const RegionMask& other) const {
  require_same_grid(grid_, other.grid_, "RegionMask::subset_of");
  for (std::size_t k = 0; k < inside_.size(); ++k)
    if (inside_[k] && !other.inside_[k]) return false;
  return true;
}

RegionMask RegionMask::intersect(const RegionMask& other) const {
  require_same_grid(grid_, other.grid_, "RegionMask::intersect");
  std::vector<std::uint8_t> in(inside_.size());
  for (std::size_t k = 0; k < in.size(); ++k) in[k] = inside_[k] & other.inside_[k];
  return RegionMask(grid_, std::move(in), descriptor_ + "&" + other.descriptor_);
}

// ---------------------------------------------------------------------------
// Quadrature and norms

std::vector<double> quadrature_weights(const RegionMask& mask) {
  const Grid& g = mask.grid();
  std::vector<double> w(g.size(), 0.0);
  for (int j = 0; j < g.ny; ++j) {
    const double wy = (j == 0 || j == g.ny - 1) ? 0.5 * g.hy : g.hy;
    for (int i = 0; i < g.nx; ++i) {
      const double wx = (i == 0 || i == g.nx - 1) ? 0.5 * g.hx : g.hx;
      const std::size_t k = g.index(i, j);
      if (mask.contains(k)) w[k] = wx * wy;
    }
  }
  return w;
}

namespace {

void require_mask(const ScalarField& f, const RegionMask& mask, const char* what) {
  require_same_grid(f.grid(), mask.grid(), what);
  if (mask.empty()) throw std::invalid_argument(std::string(what) + ": empty mask");
}

double weighted_sumsq(const std::vector<double>& w, const ScalarField& f) {
  return kernels::weighted_sumsq(w, f.values());
}

}  // namespace

double integrate(const ScalarField& f, const RegionMask& mask) {
  require_mask(f, mask, "integrate");
  const auto w = quadrature_weights(mask);
  return kernels::dot(w, f.values());
}

std::pair<ScalarField, ScalarField> gradient(const ScalarField& f) {
  const Grid& g = f.grid();
  ScalarField gx(g), gy(g);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      double dx;
      if (i == 0)
        dx = (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) / (2.0 * g.hx);
      else if (i == g.nx - 1)
        dx = (3.0 * f(i, j) - 4.0 * f(i - 1, j) + f(i - 2, j)) / (2.0 * g.hx);
      else
        dx = (f(i + 1, j) - f(i - 1, j)) / (2.0 * g.hx);
      double dy;
      if (j == 0)
        dy = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) / (2.0 * g.hy);
      else if (j == g.ny - 1)
        dy = (3.0 * f(i, j) - 4.0 * f(i, j - 1) + f(i, j - 2)) / (2.0 * g.hy);
      else
        dy = (f(i, j + 1) - f(i, j - 1)) / (2.0 * g.hy);
      gx(i, j) = dx;
      gy(i, j) = dy;
    }
  }
  return {std::move(gx), std::move(gy)};
}

double l2_norm(const ScalarField& f, const RegionMask& mask) {
  require_mask(f, mask, "l2_norm");
  return std::sqrt(weighted_sumsq(quadrature_weights(mask), f));
}

double h1_norm(const ScalarField& f, const RegionMask& mask) {
  require_mask(f, mask, "h1_norm");
  const auto w = quadrature_weights(mask);
  const auto [gx, gy] = gradient(f);
  return std::sqrt(weighted_sumsq(w, f) + weighted_sumsq(w, gx) + weighted_sumsq(w, gy));
}

double linf_norm(const ScalarField& f, const RegionMask& mask) {
  require_mask(f, mask, "linf_norm");
  double m = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k)
    if (mask.contains(k)) m = std::max(m, std::abs(f[k]));
  return m;
}

// ---------------------------------------------------------------------------
// Nodal set

std::vector<Point> zero_points(const ScalarField& u) {
  const Grid& g = u.grid();
  std::vector<Point> pts;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double a = u(i, j);
      if (a == 0.0) {
        pts.push_back({g.x(i), g.y(j)});
        continue;
      }
      if (i + 1 < g.nx) {
        const double b = u(i + 1, j);
        if (a * b < 0.0) pts.push_back({g.x(i) + g.hx * a / (a - b), g.y(j)});
      }
      if (j + 1 < g.ny) {
        const double b = u(i, j + 1);
        if (a * b < 0.0) pts.push_back({g.x(i), g.y(j) + g.hy * a / (a - b)});
      }
    }
  }
  return pts;
}

ScalarField dist_to_zero_set(const ScalarField& u) {
  const Grid& g = u.grid();
  const auto pts = zero_points(u);
  if (pts.empty()) return ScalarField(g, kNoZeroDistance);
  std::vector<double> px(pts.size()), py(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    px[k] = pts[k].x;
    py[k] = pts[k].y;
  }
  ScalarField d(g);
  for (int j = 0; j < g.ny; ++j) {
    const double y = g.y(j);
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.x(i);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < px.size(); ++k) {
        const double dx = px[k] - x, dy = py[k] - y;
        best = std::min(best, dx * dx + dy * dy);
      }
      d(i, j) = std::sqrt(best);
    }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Pointwise arithmetic

namespace {

template <class Op>
ScalarField zip(const ScalarField& a, const ScalarField& b, Op op, const char* what) {
  require_same_grid(a.grid(), b.grid(), what);
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = op(a[k], b[k]);
  return out;
}

}  // namespace

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, [](double x, double y) { return x + y; }, "operator+");
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, [](double x, double y) { return x - y; }, "operator-");
}
ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return zip(a, b, [](double x, double y) { return x * y; }, "operator*");
}
ScalarField operator*(double c, const ScalarField& a) {
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = c * a[k];
  return out;
}
ScalarField map(const ScalarField& a, const std::function<double(double)>& f) {
  ScalarField out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = f(a[k]);
  return out;
}

}  // namespace qscope
