#pragma once

// Discretized model of R^n (n = 1, 2): a cell-centered uniform grid on
// [-L, L]^n, sampled functions, Riemann integration, balls, dyadic ball
// families and the dilation family f -> r^{n/alpha} f(r x).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "amlab/error.hpp"

namespace amlab {

using Point = std::array<double, 2>;
using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline double distance(const Point& a, const Point& b, int dim) {
  const double dx = a[0] - b[0];
  if (dim == 1) return std::abs(dx);
  const double dy = a[1] - b[1];
  return std::sqrt(dx * dx + dy * dy);
}

inline double norm(const Point& a, int dim) { return distance(a, Point{0.0, 0.0}, dim); }

/// Cell-centered grid: x_i = -L + (i + 1/2) h with h = 2L/N, so no sample
/// sits on the origin. Two-dimensional data is row-major and the slow index
/// is the first coordinate x_1.
class Grid {
 public:
  Grid(int dim, double half_width, std::size_t points)
      : dim_(dim), half_width_(half_width), points_(points) {
    require(dim == 1 || dim == 2, ErrorKind::invalid_dimension,
            "dimension must be 1 or 2, got " + std::to_string(dim));
    require(is_power_of_two(points) && points >= 8, ErrorKind::n_not_power_of_two,
            "points per axis must be a power of two >= 8, got " + std::to_string(points));
    require(std::isfinite(half_width) && half_width > 0.0, ErrorKind::invalid_argument,
            "half-width must be positive");
  }

  int dim() const noexcept { return dim_; }
  double half_width() const noexcept { return half_width_; }
  std::size_t points() const noexcept { return points_; }
  double spacing() const noexcept { return 2.0 * half_width_ / static_cast<double>(points_); }
  double cell_volume() const noexcept {
    const double h = spacing();
    return dim_ == 1 ? h : h * h;
  }
  std::size_t size() const noexcept { return dim_ == 1 ? points_ : points_ * points_; }

  double coord(std::size_t i) const noexcept {
    return -half_width_ + (static_cast<double>(i) + 0.5) * spacing();
  }

  std::array<std::size_t, 2> index(std::size_t flat) const noexcept {
    if (dim_ == 1) return {flat, 0};
    return {flat / points_, flat % points_};
  }

  std::size_t flat(std::size_t i, std::size_t j = 0) const noexcept {
    return dim_ == 1 ? i : i * points_ + j;
  }

  Point point(std::size_t flat_index) const noexcept {
    const auto idx = index(flat_index);
    return dim_ == 1 ? Point{coord(idx[0]), 0.0} : Point{coord(idx[0]), coord(idx[1])};
  }

  /// Index of the cell containing x along one axis; a point on a cell
  /// boundary belongs to the cell on its right.
  std::optional<std::size_t> locate(double x) const noexcept {
    const double u = (x + half_width_) / spacing();
    if (!(u >= 0.0) || u >= static_cast<double>(points_)) return std::nullopt;
    return static_cast<std::size_t>(std::floor(u));
  }

  bool contains(const Point& y) const noexcept {
    for (int a = 0; a < dim_; ++a)
      if (std::abs(y[a]) > half_width_) return false;
    return true;
  }

  Grid refined() const { return Grid(dim_, half_width_, 2 * points_); }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_;
  double half_width_;
  std::size_t points_;
};

inline Grid make_grid(int n, double half_width, std::size_t points) {
  return Grid(n, half_width, points);
}

inline double abs_value(double v) { return std::abs(v); }
inline double abs_value(const Complex& v) { return std::abs(v); }
inline bool finite_value(double v) { return std::isfinite(v); }
inline bool finite_value(const Complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

/// Samples of a real or complex function on a Grid.
template <class T>
class BasicGridFunction {
 public:
  using value_type = T;

  explicit BasicGridFunction(const Grid& grid) : grid_(grid), values_(grid.size(), T{}) {}

  BasicGridFunction(const Grid& grid, std::vector<T> values)
      : grid_(grid), values_(std::move(values)) {
    require(values_.size() == grid_.size(), ErrorKind::invalid_argument,
            "sample count " + std::to_string(values_.size()) + " does not match grid size " +
                std::to_string(grid_.size()));
    for (const T& v : values_)
      require(finite_value(v), ErrorKind::invalid_argument, "grid function has a non-finite sample");
  }

  template <class Fn>
  static BasicGridFunction sample(const Grid& grid, Fn&& fn) {
    std::vector<T> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(fn(grid.point(i)));
    return BasicGridFunction(grid, std::move(values));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const T> values() const noexcept { return values_; }
  std::span<T> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  T& operator[](std::size_t i) noexcept { return values_[i]; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](const T& v) { return v == T{}; });
  }

  double max_abs() const {
    double m = 0.0;
    for (const T& v : values_) m = std::max(m, abs_value(v));
    return m;
  }

  BasicGridFunction& operator+=(const BasicGridFunction& other) {
    check_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  BasicGridFunction& operator-=(const BasicGridFunction& other) {
    check_same_grid(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  BasicGridFunction& operator*=(T c) {
    for (T& v : values_) v *= c;
    return *this;
  }

  friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) { return a += b; }
  friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) { return a -= b; }
  friend BasicGridFunction operator*(T c, BasicGridFunction a) { return a *= c; }

  /// Pointwise product.
  friend BasicGridFunction operator*(BasicGridFunction a, const BasicGridFunction& b) {
    a.check_same_grid(b);
    for (std::size_t i = 0; i < a.values_.size(); ++i) a.values_[i] *= b.values_[i];
    return a;
  }

  void check_same_grid(const BasicGridFunction& other) const {
    require(grid_ == other.grid_, ErrorKind::grid_mismatch, "grid functions live on different grids");
  }

 private:
  Grid grid_;
  std::vector<T> values_;
};

using GridFunction = BasicGridFunction<double>;
using ComplexGridFunction = BasicGridFunction<Complex>;

inline ComplexGridFunction to_complex(const GridFunction& f) {
  std::vector<Complex> v(f.values().begin(), f.values().end());
  return ComplexGridFunction(f.grid(), std::move(v));
}

inline GridFunction real_part(const ComplexGridFunction& f) {
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i].real();
  return GridFunction(f.grid(), std::move(v));
}

template <class T>
GridFunction magnitude(const BasicGridFunction<T>& f) {
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = abs_value(f[i]);
  return GridFunction(f.grid(), std::move(v));
}

/// Riemann sum h^n * sum of the samples.
template <class T>
T integrate(const BasicGridFunction<T>& f) {
  T sum{};
  for (const T& v : f.values()) sum += v;
  return sum * f.grid().cell_volume();
}

struct Ball {
  Point center{0.0, 0.0};
  double radius = 1.0;

  Ball scaled(double lambda) const { return Ball{center, lambda * radius}; }
};

inline void check_ball(const Grid& grid, const Ball& ball) {
  require(grid.contains(ball.center), ErrorKind::ball_outside_domain, "ball center outside [-L, L]^n");
  require(ball.radius >= grid.spacing() * (1.0 - 1e-12), ErrorKind::invalid_argument,
          "ball radius must be at least one grid spacing");
}

/// True when the closed ball lies inside [-L, L]^n.
inline bool ball_inside_domain(const Grid& grid, const Ball& ball) {
  const double slack = 1e-12 * grid.half_width();
  for (int a = 0; a < grid.dim(); ++a)
    if (std::abs(ball.center[a]) + ball.radius > grid.half_width() + slack) return false;
  return true;
}

/// Flat indices of the cells whose centers lie in the open ball.
inline std::vector<std::size_t> cells_in_ball(const Grid& grid, const Ball& ball) {
  check_ball(grid, ball);
  const double h = grid.spacing();
  const double L = grid.half_width();
  auto axis_range = [&](double c) {
    const double lo = std::floor((c - ball.radius + L) / h - 0.5);
    const double hi = std::ceil((c + ball.radius + L) / h - 0.5);
    const auto n = static_cast<double>(grid.points()) - 1.0;
    return std::array<std::size_t, 2>{static_cast<std::size_t>(std::clamp(lo, 0.0, n)),
                                      static_cast<std::size_t>(std::clamp(hi, 0.0, n))};
  };
  std::vector<std::size_t> cells;
  const auto r0 = axis_range(ball.center[0]);
  if (grid.dim() == 1) {
    for (std::size_t i = r0[0]; i <= r0[1]; ++i)
      if (std::abs(grid.coord(i) - ball.center[0]) < ball.radius) cells.push_back(i);
    return cells;
  }
  const auto r1 = axis_range(ball.center[1]);
  for (std::size_t i = r0[0]; i <= r0[1]; ++i)
    for (std::size_t j = r1[0]; j <= r1[1]; ++j) {
      const std::size_t k = grid.flat(i, j);
      if (distance(grid.point(k), ball.center, 2) < ball.radius) cells.push_back(k);
    }
  return cells;
}

inline GridFunction ball_indicator(const Grid& grid, const Ball& ball) {
  GridFunction chi(grid);
  for (std::size_t k : cells_in_ball(grid, ball)) chi[k] = 1.0;
  return chi;
}

/// Discrete ball |offset| < rho (rho in cell units) around a cell center:
/// for every row offset dr in [0, reach] the largest column offset inside.
class DiskProfile {
 public:
  DiskProfile(int dim, double radius_cells) : dim_(dim), radius_cells_(radius_cells) {
    require(radius_cells >= 1.0 - 1e-12, ErrorKind::invalid_argument, "disk radius below one cell");
    reach_ = static_cast<std::ptrdiff_t>(std::ceil(radius_cells - 1e-12)) - 1;
    if (dim == 1) {
      half_width_ = {reach_};
      count_ = static_cast<std::size_t>(2 * reach_ + 1);
      return;
    }
    const double r2 = radius_cells * radius_cells;
    count_ = 0;
    for (std::ptrdiff_t dr = 0; dr <= reach_; ++dr) {
      const double rest = r2 - static_cast<double>(dr * dr);
      auto d = static_cast<std::ptrdiff_t>(std::floor(std::sqrt(std::max(rest, 0.0))));
      while (d >= 0 && static_cast<double>(d * d + dr * dr) >= r2) --d;
      while (static_cast<double>((d + 1) * (d + 1) + dr * dr) < r2) ++d;
      half_width_.push_back(d);
      const auto row = static_cast<std::size_t>(2 * d + 1);
      count_ += dr == 0 ? row : 2 * row;
    }
  }

  int dim() const noexcept { return dim_; }
  double radius_cells() const noexcept { return radius_cells_; }
  std::ptrdiff_t reach() const noexcept { return reach_; }
  std::ptrdiff_t half_width(std::ptrdiff_t row_offset) const noexcept {
    return half_width_[static_cast<std::size_t>(row_offset < 0 ? -row_offset : row_offset)];
  }
  std::size_t count() const noexcept { return count_; }

 private:
  int dim_;
  double radius_cells_;
  std::ptrdiff_t reach_ = 0;
  std::vector<std::ptrdiff_t> half_width_;
  std::size_t count_ = 0;
};

/// Visits every cell of the disk centered at cell `center`; the disk must
/// fit in the grid.
template <class Fn>
void for_each_disk_cell(const Grid& grid, std::size_t center, const DiskProfile& disk, Fn&& fn) {
  const auto c = grid.index(center);
  const auto ci = static_cast<std::ptrdiff_t>(c[0]);
  if (grid.dim() == 1) {
    for (std::ptrdiff_t d = -disk.reach(); d <= disk.reach(); ++d) fn(static_cast<std::size_t>(ci + d));
    return;
  }
  const auto cj = static_cast<std::ptrdiff_t>(c[1]);
  const auto n = static_cast<std::ptrdiff_t>(grid.points());
  for (std::ptrdiff_t dr = -disk.reach(); dr <= disk.reach(); ++dr) {
    const std::ptrdiff_t hw = disk.half_width(dr);
    const std::ptrdiff_t row = (ci + dr) * n;
    for (std::ptrdiff_t dc = -hw; dc <= hw; ++dc) fn(static_cast<std::size_t>(row + cj + dc));
  }
}

struct BallLevel {
  std::size_t radius_cells;
  std::size_t stride;  // center subsampling along each axis
  std::size_t lo;      // admissible center indices per axis: lo, lo + stride, ..., <= hi
  std::size_t hi;
  DiskProfile disk;
};

/// Balls B(x_c, m h) centered at grid points, one level per radius, keeping
/// only centers whose ball (optionally dilated by `containment_scale`) lies in
/// [-L, L]^n.
struct BallFamilyOptions {
  std::size_t stride_divisor = 0;  // stride = max(1, m / divisor); 0 keeps every center
  double containment_scale = 1.0;
};

class BallFamily {
 public:
  using Options = BallFamilyOptions;

  static BallFamily from_radius_cells(const Grid& grid, std::span<const std::size_t> radii_cells,
                                      Options options = {}) {
    BallFamily family(grid, options);
    for (std::size_t m : radii_cells) family.add_level(m);
    require(!family.levels_.empty(), ErrorKind::empty_family, "no radius admits a ball inside the domain");
    return family;
  }

  /// Radii 2^k h for k = k_min..k_max (all admissible k when k_max is absent).
  static BallFamily dyadic(const Grid& grid, Options options = {}, std::size_t k_min = 0,
                           std::optional<std::size_t> k_max = std::nullopt) {
    std::vector<std::size_t> radii;
    for (std::size_t k = k_min; (std::size_t{1} << k) <= grid.points(); ++k) {
      if (k_max && k > *k_max) break;
      radii.push_back(std::size_t{1} << k);
    }
    return from_radius_cells(grid, radii, options);
  }

  /// Physical radii; each must be a positive multiple of the grid spacing.
  static BallFamily from_radii(const Grid& grid, std::span<const double> radii, Options options = {}) {
    require(!radii.empty(), ErrorKind::empty_radii, "radius set is empty");
    std::vector<std::size_t> cells;
    for (double r : radii) cells.push_back(radius_to_cells(grid, r));
    return from_radius_cells(grid, cells, options);
  }

  static std::size_t radius_to_cells(const Grid& grid, double r) {
    const double m = std::round(r / grid.spacing());
    require(m >= 1.0 && std::abs(m * grid.spacing() - r) <= 1e-9 * std::max(1.0, r),
            ErrorKind::invalid_argument, "radius " + std::to_string(r) + " is not a positive multiple of h");
    return static_cast<std::size_t>(m);
  }

  const Grid& grid() const noexcept { return grid_; }
  const Options& options() const noexcept { return options_; }
  std::span<const BallLevel> levels() const noexcept { return levels_; }
  double radius(std::size_t level) const { return static_cast<double>(levels_[level].radius_cells) * grid_.spacing(); }

  std::size_t centers_per_axis(std::size_t level) const {
    const BallLevel& l = levels_[level];
    return (l.hi - l.lo) / l.stride + 1;
  }

  std::size_t center_count(std::size_t level) const {
    const std::size_t c = centers_per_axis(level);
    return grid_.dim() == 1 ? c : c * c;
  }

  std::size_t size() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l < levels_.size(); ++l) total += center_count(l);
    return total;
  }

  /// Measure of the cell square each center represents in an outer integral.
  double center_weight(std::size_t level) const {
    const double s = static_cast<double>(levels_[level].stride) * grid_.spacing();
    return grid_.dim() == 1 ? s : s * s;
  }

  template <class Fn>
  void for_each_center(std::size_t level, Fn&& fn) const {
    const BallLevel& l = levels_[level];
    if (grid_.dim() == 1) {
      for (std::size_t i = l.lo; i <= l.hi; i += l.stride) fn(i);
      return;
    }
    for (std::size_t i = l.lo; i <= l.hi; i += l.stride)
      for (std::size_t j = l.lo; j <= l.hi; j += l.stride) fn(grid_.flat(i, j));
  }

  std::vector<std::size_t> centers(std::size_t level) const {
    std::vector<std::size_t> out;
    out.reserve(center_count(level));
    for_each_center(level, [&](std::size_t c) { out.push_back(c); });
    return out;
  }

  Ball ball(std::size_t level, std::size_t center) const { return Ball{grid_.point(center), radius(level)}; }

  bool same_balls(const BallFamily& other) const {
    if (!(grid_ == other.grid_) || levels_.size() != other.levels_.size()) return false;
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      const BallLevel& a = levels_[l];
      const BallLevel& b = other.levels_[l];
      if (a.radius_cells != b.radius_cells || a.stride != b.stride || a.lo != b.lo || a.hi != b.hi) return false;
    }
    return true;
  }

 private:
  BallFamily(const Grid& grid, Options options) : grid_(grid), options_(options) {}

  void add_level(std::size_t m) {
    require(m >= 1, ErrorKind::invalid_argument, "ball radius below one cell");
    const double need = options_.containment_scale * static_cast<double>(m) - 0.5;
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(need - 1e-9)));
    if (2 * lo + 1 > grid_.points()) return;
    const std::size_t hi = grid_.points() - 1 - lo;
    const std::size_t stride =
        options_.stride_divisor == 0 ? 1 : std::max<std::size_t>(1, m / options_.stride_divisor);
    levels_.push_back(BallLevel{m, stride, lo, hi, DiskProfile(grid_.dim(), static_cast<double>(m))});
  }

  Grid grid_;
  Options options_;
  std::vector<BallLevel> levels_;
};

/// (delta^alpha_r f)(x_i) = r^{n/alpha} f(r x_i) on the same grid, reading f
/// at the cell that contains r x_i and 0 outside the domain.
template <class T>
BasicGridFunction<T> dilate(const BasicGridFunction<T>& f, double r, double alpha) {
  require(std::isfinite(r) && r > 0.0, ErrorKind::nonpositive_scale, "dilation scale must be positive");
  require(alpha >= 1.0, ErrorKind::invalid_argument, "dilation exponent must be >= 1");
  if (r == 1.0) return f;
  const Grid& g = f.grid();
  const auto n = static_cast<double>(g.points());
  const double factor = std::pow(r, g.dim() / alpha);
  // Source cell in index units; cell j covers [j - 1/2, j + 1/2).
  auto source = [&](std::size_t i) -> std::optional<std::size_t> {
    const double u = r * (static_cast<double>(i) + 0.5 - n / 2.0) + n / 2.0 - 0.5;
    const double j = std::floor(u + 0.5);
    if (j < 0.0 || j >= n) return std::nullopt;
    return static_cast<std::size_t>(j);
  };
  BasicGridFunction<T> out(g);
  if (g.dim() == 1) {
    for (std::size_t i = 0; i < g.points(); ++i)
      if (auto j = source(i)) out[i] = factor * f[*j];
    return out;
  }
  for (std::size_t i = 0; i < g.points(); ++i) {
    const auto si = source(i);
    if (!si) continue;
    for (std::size_t j = 0; j < g.points(); ++j)
      if (auto sj = source(j)) out[g.flat(i, j)] = factor * f[g.flat(*si, *sj)];
  }
  return out;
}

/// delta^alpha_r f sampled on the grid with half-width L / r and the same N,
/// whose points are exactly the preimages x_i / r of the input's points.
template <class T>
BasicGridFunction<T> dilate_rescaled(const BasicGridFunction<T>& f, double r, double alpha) {
  require(std::isfinite(r) && r > 0.0, ErrorKind::nonpositive_scale, "dilation scale must be positive");
  require(alpha >= 1.0, ErrorKind::invalid_argument, "dilation exponent must be >= 1");
  const Grid& g = f.grid();
  const T factor = static_cast<T>(std::pow(r, g.dim() / alpha));
  std::vector<T> values(f.values().begin(), f.values().end());
  for (T& v : values) v *= factor;
  return BasicGridFunction<T>(Grid(g.dim(), g.half_width() / r, g.points()), std::move(values));
}

}  // namespace amlab
