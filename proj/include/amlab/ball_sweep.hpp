#pragma once

// Ball sums and ball minima for every center of a BallFamily level.
// Row prefix sums (and row sparse tables for minima) make a disk query cost
// one lookup per disk row.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "amlab/grid.hpp"

namespace amlab {

/// Integrals of a density over grid-centered disks. Prefix sums are kept in
/// extended precision so differences of large prefixes stay accurate.
class BallSummer {
 public:
  BallSummer(const Grid& grid, std::span<const double> density) : grid_(grid) {
    require(density.size() == grid.size(), ErrorKind::invalid_argument, "density size mismatch");
    const std::size_t n = grid.points();
    const std::size_t rows = grid.dim() == 1 ? 1 : n;
    prefix_.assign(rows * (n + 1), 0.0L);
    for (std::size_t r = 0; r < rows; ++r) {
      long double acc = 0.0L;
      long double* out = &prefix_[r * (n + 1)];
      const double* in = density.data() + r * n;
      for (std::size_t c = 0; c < n; ++c) {
        acc += in[c];
        out[c + 1] = acc;
      }
    }
  }

  /// Riemann sum over the disk (multiplied by the cell volume).
  double integral(std::size_t center, const DiskProfile& disk) const {
    return static_cast<double>(raw_sum(center, disk)) * grid_.cell_volume();
  }

  long double raw_sum(std::size_t center, const DiskProfile& disk) const {
    const std::size_t n = grid_.points();
    const auto c = grid_.index(center);
    if (grid_.dim() == 1) {
      const auto r = disk.reach();
      return prefix_[c[0] + r + 1] - prefix_[c[0] - r];
    }
    long double sum = 0.0L;
    for (std::ptrdiff_t dr = -disk.reach(); dr <= disk.reach(); ++dr) {
      const std::ptrdiff_t hw = disk.half_width(dr);
      const long double* row = &prefix_[(static_cast<std::ptrdiff_t>(c[0]) + dr) * static_cast<std::ptrdiff_t>(n + 1)];
      sum += row[static_cast<std::ptrdiff_t>(c[1]) + hw + 1] - row[static_cast<std::ptrdiff_t>(c[1]) - hw];
    }
    return sum;
  }

 private:
  Grid grid_;
  std::vector<long double> prefix_;
};

/// Minimum of a field over grid-centered disks (row sparse tables).
class BallMinimum {
 public:
  BallMinimum(const Grid& grid, std::span<const double> field) : grid_(grid) {
    require(field.size() == grid.size(), ErrorKind::invalid_argument, "field size mismatch");
    const std::size_t n = grid.points();
    levels_ = 1;
    while ((std::size_t{1} << levels_) <= n) ++levels_;
    const std::size_t rows = grid.dim() == 1 ? 1 : n;
    table_.assign(levels_ * rows * n, 0.0);
    std::copy(field.begin(), field.end(), table_.begin());
    for (std::size_t k = 1; k < levels_; ++k) {
      const std::size_t half = std::size_t{1} << (k - 1);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c + (std::size_t{1} << k) <= n; ++c)
          at(k, r, c) = std::min(at(k - 1, r, c), at(k - 1, r, c + half));
    }
  }

  double minimum(std::size_t center, const DiskProfile& disk) const {
    const auto c = grid_.index(center);
    if (grid_.dim() == 1) return row_min(0, c[0] - disk.reach(), c[0] + disk.reach());
    double m = std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t dr = -disk.reach(); dr <= disk.reach(); ++dr) {
      const std::ptrdiff_t hw = disk.half_width(dr);
      const auto row = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(c[0]) + dr);
      m = std::min(m, row_min(row, c[1] - hw, c[1] + hw));
    }
    return m;
  }

 private:
  double& at(std::size_t k, std::size_t r, std::size_t c) {
    const std::size_t n = grid_.points();
    const std::size_t rows = grid_.dim() == 1 ? 1 : n;
    return table_[(k * rows + r) * n + c];
  }
  double at(std::size_t k, std::size_t r, std::size_t c) const {
    const std::size_t n = grid_.points();
    const std::size_t rows = grid_.dim() == 1 ? 1 : n;
    return table_[(k * rows + r) * n + c];
  }

  double row_min(std::size_t r, std::size_t lo, std::size_t hi) const {
    const std::size_t len = hi - lo + 1;
    std::size_t k = 0;
    while ((std::size_t{2} << k) <= len) ++k;
    return std::min(at(k, r, lo), at(k, r, hi + 1 - (std::size_t{1} << k)));
  }

  Grid grid_;
  std::size_t levels_ = 1;
  std::vector<double> table_;
};

}  // namespace amlab
