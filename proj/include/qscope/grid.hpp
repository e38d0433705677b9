#pragma once

// Uniform node-centred discretisation of the unit square, the fields that
// live on it, and the discrete norms every other module measures with.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qscope {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Node (i, j) sits at (i*hx, j*hy). Storage is row-major with i fastest.
struct Grid {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double x(int i) const { return i * hx; }
  double y(int j) const { return j * hy; }
  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }
  std::size_t boundary_count() const { return size() - static_cast<std::size_t>(nx - 2) * (ny - 2); }

  bool operator==(const Grid&) const = default;
};

// Square grid with n nodes per axis. Throws std::invalid_argument for n < 3.
Grid make_grid(int n);
Grid make_grid(int nx, int ny);

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& grid, double fill = 0.0);
  ScalarField(const Grid& grid, std::vector<double> values);

  // Samples f(x, y) at every node.
  static ScalarField sample(const Grid& grid, const std::function<double(double, double)>& f);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool all_finite() const;

  bool operator==(const ScalarField&) const = default;

 private:
  Grid grid_{};
  std::vector<double> values_;
};

// Symmetric coefficient matrix [[a11, a12], [a12, a22]] per node.
struct TensorField {
  Grid grid{};
  std::vector<double> a11;
  std::vector<double> a12;
  std::vector<double> a22;

  static TensorField identity(const Grid& grid);
  static TensorField constant(const Grid& grid, double a11, double a12, double a22);
  static TensorField sample(const Grid& grid, const std::function<double(double, double)>& f11,
                            const std::function<double(double, double)>& f12,
                            const std::function<double(double, double)>& f22);

  // Smaller eigenvalue of the coefficient matrix at node k.
  double min_eigenvalue(std::size_t k) const;
  // Minimum over nodes of the smaller eigenvalue (the ellipticity floor).
  double ellipticity() const;
  double max_abs_entry() const;
};

class RegionMask {
 public:
  RegionMask() = default;
  RegionMask(const Grid& grid, std::vector<std::uint8_t> inside, std::string descriptor);

  static RegionMask full(const Grid& grid);
  // Nodes of the closed unit square within distance r of c (node inclusion).
  static RegionMask ball(const Grid& grid, Point c, double r);
  // Nodes at least `margin` away from the boundary.
  static RegionMask inset(const Grid& grid, double margin);
  // Nodes whose value in `distance` lies in [lo, hi).
  static RegionMask band(const ScalarField& distance, double lo, double hi);
  // Nodes with field value >= threshold.
  static RegionMask at_least(const ScalarField& f, double threshold);
  static RegionMask interior(const Grid& grid);

  const Grid& grid() const { return grid_; }
  const std::string& descriptor() const { return descriptor_; }
  bool contains(std::size_t k) const { return inside_[k] != 0; }
  bool contains(int i, int j) const { return inside_[grid_.index(i, j)] != 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::span<const std::uint8_t> flags() const { return inside_; }

  // True when every node of this mask is also in `other`.
  bool subset_of(const RegionMask& other) const;
  RegionMask intersect(const RegionMask& other) const;

 private:
  Grid grid_{};
  std::vector<std::uint8_t> inside_;
  std::string descriptor_;
};

// Tensor-product trapezoid weights, zero outside the mask.
std::vector<double> quadrature_weights(const RegionMask& mask);

// Integral of f over the mask with trapezoid weights.
double integrate(const ScalarField& f, const RegionMask& mask);

// Central differences in the interior, second-order one-sided at the boundary.
std::pair<ScalarField, ScalarField> gradient(const ScalarField& f);

double l2_norm(const ScalarField& f, const RegionMask& mask);
// sqrt(|f|^2 + |df/dx|^2 + |df/dy|^2) over the mask.
double h1_norm(const ScalarField& f, const RegionMask& mask);
double linf_norm(const ScalarField& f, const RegionMask& mask);

inline double l2_norm(const ScalarField& f) { return l2_norm(f, RegionMask::full(f.grid())); }
inline double h1_norm(const ScalarField& f) { return h1_norm(f, RegionMask::full(f.grid())); }
inline double linf_norm(const ScalarField& f) { return linf_norm(f, RegionMask::full(f.grid())); }

// Value used for dist_to_zero_set when the field has no zero.
inline constexpr double kNoZeroDistance = 10.0;

// Euclidean distance from every node to the nodal set {u = 0}. Zeros are
// located at exact nodal zeros and by linear interpolation along grid edges
// whose end values change sign.
ScalarField dist_to_zero_set(const ScalarField& u);

// Zero crossings used by dist_to_zero_set.
std::vector<Point> zero_points(const ScalarField& u);

// Pointwise helpers. Both operands must share a grid.
ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double c, const ScalarField& a);
ScalarField map(const ScalarField& a, const std::function<double(double)>& f);

void require_same_grid(const Grid& a, const Grid& b, const char* what);

}  // namespace qscope
