#pragma once

// Discrete singular integrals on grid functions: truncated Calderon-Zygmund
// convolutions, rough kernels Omega(u')/|u|^n, the Marcinkiewicz square
// function, Bochner-Riesz means and their maximal operator, commutators with
// a symbol b, and the pointwise majorants used by the property suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "amlab/fft.hpp"
#include "amlab/grid.hpp"
#include "amlab/parallel.hpp"

namespace amlab {

// ---------------------------------------------------------------------------
// Kernels

/// A convolution kernel K(u) on R^n \ {0}, given by a closed-form rule of the
/// physical offset, with its size/gradient constant C_K.
struct CZKernel {
  std::string name;
  int dim = 1;
  std::function<double(double, double)> rule;
  double constant = 0.0;

  double operator()(double u1, double u2 = 0.0) const { return rule(u1, u2); }
};

/// max over sampled shells of |K(u)| |u|^n and |grad K(u)| |u|^{n+1}, with
/// central differences for the gradient.
inline double measure_cz_constant(const CZKernel& k, double r_min = 1e-2, double r_max = 1e2) {
  double c = 0.0;
  const int angles = k.dim == 1 ? 2 : 64;
  for (double r = r_min; r <= r_max * (1.0 + 1e-12); r *= 2.0) {
    const double step = 1e-5 * r;
    for (int a = 0; a < angles; ++a) {
      double u1 = 0.0;
      double u2 = 0.0;
      if (k.dim == 1) {
        u1 = a == 0 ? r : -r;
      } else {
        const double th = 2.0 * std::numbers::pi * a / angles;
        u1 = r * std::cos(th);
        u2 = r * std::sin(th);
      }
      const double size = std::abs(k(u1, u2)) * std::pow(r, k.dim);
      double g2 = 0.0;
      const double d1 = (k(u1 + step, u2) - k(u1 - step, u2)) / (2.0 * step);
      g2 += d1 * d1;
      if (k.dim == 2) {
        const double d2 = (k(u1, u2 + step) - k(u1, u2 - step)) / (2.0 * step);
        g2 += d2 * d2;
      }
      c = std::max({c, size, std::sqrt(g2) * std::pow(r, k.dim + 1)});
    }
  }
  return c;
}

inline CZKernel hilbert_kernel() {
  CZKernel k{"hilbert", 1, [](double u, double) { return 1.0 / (std::numbers::pi * u); }, 0.0};
  k.constant = measure_cz_constant(k);
  return k;
}

/// Riesz kernel u_j / (2 pi |u|^3) in the plane; on the line it is the
/// Hilbert kernel.
inline CZKernel riesz_kernel(int j, int dim) {
  require(dim == 1 || dim == 2, ErrorKind::invalid_dimension, "Riesz transforms need n in {1, 2}");
  require(j >= 1 && j <= dim, ErrorKind::invalid_argument, "Riesz index out of range");
  if (dim == 1) {
    CZKernel k = hilbert_kernel();
    k.name = "riesz:1";
    return k;
  }
  CZKernel k{"riesz:" + std::to_string(j), 2,
             [j](double u1, double u2) {
               const double r = std::hypot(u1, u2);
               return (j == 1 ? u1 : u2) / (2.0 * std::numbers::pi * r * r * r);
             },
             0.0};
  k.constant = measure_cz_constant(k);
  return k;
}

/// Degree-zero function Omega on the unit circle. The named shapes are
/// evaluated in closed form; the M uniform samples (mean removed) back the
/// sampled shape, nearest-angle lookup, and the L^theta norm.
class SphereKernel {
 public:
  enum class Shape { cosine, sine, step, zero, sampled };

  static SphereKernel cosine(std::size_t m = 256) {
    return SphereKernel(Shape::cosine, "cos", [](double t) { return std::cos(t); }, m);
  }
  static SphereKernel sine(std::size_t m = 256) {
    return SphereKernel(Shape::sine, "sin", [](double t) { return std::sin(t); }, m);
  }
  /// sign(cos theta).
  static SphereKernel step(std::size_t m = 256) {
    return SphereKernel(Shape::step, "step", [](double t) { return sign(std::cos(t)); }, m);
  }
  static SphereKernel zero(std::size_t m = 256) {
    return SphereKernel(Shape::zero, "zero", [](double) { return 0.0; }, m);
  }
  static SphereKernel sampled(const std::function<double(double)>& omega, std::size_t m = 256,
                              std::string name = "sampled") {
    return SphereKernel(Shape::sampled, std::move(name), omega, m);
  }

  static SphereKernel parse(std::string_view name) {
    if (name == "cos") return cosine();
    if (name == "sin") return sine();
    if (name == "step") return step();
    if (name == "zero") return zero();
    throw Error(ErrorKind::parse_error, "unknown Omega '" + std::string(name) + "' (cos, sin, step, zero)");
  }

  const std::string& name() const noexcept { return name_; }
  Shape shape() const noexcept { return shape_; }
  std::span<const double> samples() const noexcept { return samples_; }

  double sample_mean() const {
    long double s = 0.0L;
    for (double v : samples_) s += v;
    return static_cast<double>(s / static_cast<long double>(samples_.size()));
  }

  /// Omega(u / |u|) for u != 0.
  double operator()(double u1, double u2) const {
    switch (shape_) {
      case Shape::cosine: return u1 / std::hypot(u1, u2);
      case Shape::sine: return u2 / std::hypot(u1, u2);
      case Shape::step: return sign(u1);
      case Shape::zero: return 0.0;
      case Shape::sampled: break;
    }
    const double m = static_cast<double>(samples_.size());
    double t = std::atan2(u2, u1);
    if (t < 0.0) t += 2.0 * std::numbers::pi;
    auto j = static_cast<std::size_t>(std::llround(t * m / (2.0 * std::numbers::pi)));
    return samples_[j % samples_.size()];
  }

  /// ||Omega||_{L^theta(S^1)} by the uniform quadrature; theta = inf gives
  /// the maximum.
  double lp_norm(double theta) const {
    if (std::isinf(theta)) {
      double m = 0.0;
      for (double v : samples_) m = std::max(m, std::abs(v));
      return m;
    }
    long double s = 0.0L;
    for (double v : samples_) s += std::pow(std::abs(v), theta);
    const double arc = 2.0 * std::numbers::pi / static_cast<double>(samples_.size());
    return std::pow(static_cast<double>(s) * arc, 1.0 / theta);
  }

 private:
  SphereKernel(Shape shape, std::string name, const std::function<double(double)>& omega, std::size_t m)
      : shape_(shape), name_(std::move(name)) {
    require(m >= 4, ErrorKind::invalid_argument, "Omega needs at least 4 angles");
    samples_.resize(m);
    for (std::size_t j = 0; j < m; ++j) samples_[j] = omega(2.0 * std::numbers::pi * j / static_cast<double>(m));
    const double mean = sample_mean();
    for (double& v : samples_) v -= mean;
  }

  static double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

  Shape shape_;
  std::string name_;
  std::vector<double> samples_;
};

// ---------------------------------------------------------------------------
// Truncated convolution

/// h^n sum over |x - y_j| > epsilon of K(x - y_j) f(y_j), with the kernel
/// spectrum computed once and reused for every input.
class TruncatedConvolution {
 public:
  template <class Rule>
  TruncatedConvolution(const Grid& grid, Rule&& rule, double epsilon) : conv_(grid), epsilon_(epsilon) {
    const double h = grid.spacing();
    require(epsilon >= 0.5 * h * (1.0 - 1e-12), ErrorKind::epsilon_below_grid,
            "truncation radius must be at least h/2");
    const double cut = (epsilon / h) * (epsilon / h) * (1.0 + 1e-12);
    spectrum_ = conv_.kernel_spectrum([&](std::ptrdiff_t a, std::ptrdiff_t b) {
      const auto d2 = static_cast<double>(a * a + b * b);
      if (d2 == 0.0 || d2 <= cut) return 0.0;
      return static_cast<double>(rule(static_cast<double>(a) * h, static_cast<double>(b) * h));
    });
  }

  const Grid& grid() const noexcept { return conv_.grid(); }
  double epsilon() const noexcept { return epsilon_; }

  template <class T>
  BasicGridFunction<T> operator()(const BasicGridFunction<T>& f) const {
    auto out = conv_.inverse(Convolver::multiply(conv_.spectrum(f), spectrum_));
    if constexpr (std::is_same_v<T, double>)
      return real_part(out);
    else
      return out;
  }

 private:
  Convolver conv_;
  double epsilon_;
  std::vector<Complex> spectrum_;
};

inline double default_epsilon(const Grid& grid) { return 2.0 * grid.spacing(); }

inline TruncatedConvolution cz_convolution(const Grid& grid, const CZKernel& k, std::optional<double> epsilon) {
  require(k.dim == grid.dim(), ErrorKind::invalid_dimension, "kernel " + k.name + " does not match the grid dimension");
  return TruncatedConvolution(grid, [&](double u1, double u2) { return k(u1, u2); },
                              epsilon.value_or(default_epsilon(grid)));
}

inline TruncatedConvolution rough_convolution(const Grid& grid, const SphereKernel& omega,
                                              std::optional<double> epsilon) {
  require(grid.dim() == 2, ErrorKind::dimension_not_two, "rough kernels live in the plane");
  return TruncatedConvolution(grid,
                              [&](double u1, double u2) { return omega(u1, u2) / (u1 * u1 + u2 * u2); },
                              epsilon.value_or(default_epsilon(grid)));
}

/// Truncated principal value of a Calderon-Zygmund convolution.
template <class T>
BasicGridFunction<T> apply_cz(const BasicGridFunction<T>& f, const CZKernel& k,
                              std::optional<double> epsilon = std::nullopt) {
  return cz_convolution(f.grid(), k, epsilon)(f);
}

/// p.v. integral of Omega(u')/|u|^2 f(x - u) in the plane.
template <class T>
BasicGridFunction<T> rough_singular(const BasicGridFunction<T>& f, const SphereKernel& omega,
                                    std::optional<double> epsilon = std::nullopt) {
  return rough_convolution(f.grid(), omega, epsilon)(f);
}

// ---------------------------------------------------------------------------
// Marcinkiewicz integral

/// Geometric t-grid from h to 4L with `per_octave` steps per doubling.
struct TGrid {
  std::vector<double> nodes;

  static TGrid geometric(const Grid& grid, unsigned per_octave = 4) {
    require(per_octave > 0, ErrorKind::empty_t_grid, "t-grid needs at least one node per octave");
    const double h = grid.spacing();
    const double top = 4.0 * grid.half_width();
    const auto octaves = static_cast<unsigned>(std::llround(std::log2(top / h)));
    TGrid t;
    for (unsigned k = 0; k <= octaves * per_octave; ++k)
      t.nodes.push_back(h * std::exp2(static_cast<double>(k) / per_octave));
    t.nodes.back() = top;
    return t;
  }

  void validate() const {
    require(nodes.size() >= 2, ErrorKind::empty_t_grid, "t-grid needs at least two nodes");
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
      require(nodes[k] > 0.0 && nodes[k + 1] > nodes[k], ErrorKind::invalid_argument, "t-grid must increase");
  }

  std::size_t intervals() const { return nodes.size() - 1; }
  /// Geometric midpoint of interval k.
  double midpoint(std::size_t k) const { return std::sqrt(nodes[k] * nodes[k + 1]); }
  /// Quadrature weight of interval k for dt / t^3: t_mid^{-2} * (log t_{k+1} - log t_k).
  double weight(std::size_t k) const {
    const double m = midpoint(k);
    return std::log(nodes[k + 1] / nodes[k]) / (m * m);
  }
  /// Exact integral of dt / t^3 beyond the last node.
  double tail_weight() const { return 0.5 / (nodes.back() * nodes.back()); }
};

namespace detail {

/// Shell index of every offset: shell k holds 0 < |u| <= midpoint(k) not in
/// an earlier shell; offsets beyond the last midpoint go to shell K, which
/// only feeds the tail. -1 marks the zero offset.
inline std::vector<int> shell_index(const Grid& grid, const TGrid& t) {
  const auto n = static_cast<std::ptrdiff_t>(grid.points());
  const double h = grid.spacing();
  const std::size_t side = 2 * grid.points();
  std::vector<double> cuts;
  for (std::size_t k = 0; k < t.intervals(); ++k) cuts.push_back(t.midpoint(k) / h);
  std::vector<int> shell(side * side, -1);
  auto slot = [&](std::ptrdiff_t d) { return static_cast<std::size_t>(d < 0 ? d + 2 * n : d); };
  for (std::ptrdiff_t a = -(n - 1); a < n; ++a)
    for (std::ptrdiff_t b = -(n - 1); b < n; ++b) {
      if (a == 0 && b == 0) continue;
      const double r = std::hypot(static_cast<double>(a), static_cast<double>(b));
      const auto it = std::lower_bound(cuts.begin(), cuts.end(), r * (1.0 - 1e-12));
      shell[slot(a) * side + slot(b)] = static_cast<int>(it - cuts.begin());
    }
  return shell;
}

/// Square function of b(x) F_t[f](x) - F_t[b f](x) (just F_t[f] when b is
/// absent), F_t[g](x) = h^2 sum_{0 < |x - y| <= t} Omega(x - y)/|x - y| g(y).
inline GridFunction marcinkiewicz_square(const GridFunction& f, const SphereKernel& omega, const TGrid& t,
                                         const GridFunction* b) {
  const Grid& grid = f.grid();
  require(grid.dim() == 2, ErrorKind::dimension_not_two, "the Marcinkiewicz integral lives in the plane");
  t.validate();
  const Convolver conv(grid);
  const double h = grid.spacing();
  const auto shells = shell_index(grid, t);
  const std::size_t side = conv.side();

  std::vector<std::vector<Complex>> inputs{conv.spectrum(f)};
  if (b) {
    f.check_same_grid(*b);
    inputs.push_back(conv.spectrum((*b) * f));
  }
  std::vector<std::vector<Complex>> partial(inputs.size(), std::vector<Complex>(conv.padded_size()));
  std::vector<ComplexGridFunction> current(inputs.size(), ComplexGridFunction(grid));
  std::vector<double> acc(grid.size(), 0.0);

  auto accumulate = [&](double weight) {
    for (std::size_t i = 0; i < acc.size(); ++i) {
      const double g = b ? (*b)[i] * current[0][i].real() - current[1][i].real() : current[0][i].real();
      acc[i] += g * g * weight;
    }
  };

  const auto n = static_cast<std::ptrdiff_t>(grid.points());
  auto slot = [&](std::ptrdiff_t d) { return static_cast<std::size_t>(d < 0 ? d + 2 * n : d); };
  for (std::size_t k = 0; k <= t.intervals(); ++k) {
    const int id = static_cast<int>(k);
    bool any = false;
    const auto kernel = conv.kernel_spectrum([&](std::ptrdiff_t a, std::ptrdiff_t c) {
      if (shells[slot(a) * side + slot(c)] != id) return 0.0;
      any = true;
      const double u1 = static_cast<double>(a) * h;
      const double u2 = static_cast<double>(c) * h;
      return omega(u1, u2) / std::hypot(u1, u2);
    });
    if (any) {
      for (std::size_t s = 0; s < inputs.size(); ++s) {
        for (std::size_t i = 0; i < kernel.size(); ++i) partial[s][i] += inputs[s][i] * kernel[i];
        current[s] = conv.inverse(partial[s]);
      }
    }
    accumulate(k < t.intervals() ? t.weight(k) : t.tail_weight());
  }
  for (double& v : acc) v = std::sqrt(v);
  return GridFunction(grid, std::move(acc));
}

}  // namespace detail

/// mu_Omega f = (int_0^inf |F_t f|^2 dt / t^3)^{1/2}.
inline GridFunction marcinkiewicz(const GridFunction& f, const SphereKernel& omega, const TGrid& t) {
  return detail::marcinkiewicz_square(f, omega, t, nullptr);
}

inline GridFunction marcinkiewicz(const GridFunction& f, const SphereKernel& omega) {
  return marcinkiewicz(f, omega, TGrid::geometric(f.grid()));
}

/// [b, mu_Omega] f (x) = mu_Omega[(b(x) - b) f](x).
inline GridFunction marcinkiewicz_commutator(const GridFunction& b, const SphereKernel& omega, const GridFunction& f,
                                             const TGrid& t) {
  return detail::marcinkiewicz_square(f, omega, t, &b);
}

inline GridFunction marcinkiewicz_commutator(const GridFunction& b, const SphereKernel& omega,
                                             const GridFunction& f) {
  return marcinkiewicz_commutator(b, omega, f, TGrid::geometric(f.grid()));
}

// ---------------------------------------------------------------------------
// Bochner-Riesz means

/// zero_padded transforms on the 2N-per-axis padded grid (xi = 2 pi k / (4L));
/// periodic transforms the N samples directly (xi = pi k / L), where every
/// grid-resonant mode is an exact eigenvector.
enum class BoundaryMode { zero_padded, periodic };

inline double bochner_riesz_symbol(double xi2, double delta, double R) {
  const double s = 1.0 - xi2 / (R * R);
  return s > 0.0 ? std::pow(s, delta) : 0.0;
}

/// Fourier multiplier m(|xi|^2) on a grid.
class MultiplierEngine {
 public:
  MultiplierEngine(const Grid& grid, BoundaryMode mode)
      : grid_(grid), side_(mode == BoundaryMode::zero_padded ? 2 * grid.points() : grid.points()) {
    const double step = 2.0 * std::numbers::pi / (static_cast<double>(side_) * grid.spacing());
    freq2_.resize(side_);
    for (std::size_t k = 0; k < side_; ++k) {
      const double kk = k < side_ / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(side_);
      freq2_[k] = (kk * step) * (kk * step);
    }
  }

  template <class T>
  std::vector<Complex> spectrum(const BasicGridFunction<T>& f) const {
    require(f.grid() == grid_, ErrorKind::grid_mismatch, "multiplier input lives on another grid");
    std::vector<Complex> buf(size());
    const std::size_t n = grid_.points();
    if (grid_.dim() == 1) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = f[i];
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) buf[i * side_ + j] = f[grid_.flat(i, j)];
    }
    fft_inplace(buf, grid_.dim(), side_, FFTW_FORWARD);
    return buf;
  }

  /// Inverse transform of spectrum * m(|xi|^2), cropped to the grid.
  template <class Symbol>
  ComplexGridFunction apply(std::vector<Complex> buf, Symbol&& m) const {
    if (grid_.dim() == 1) {
      for (std::size_t k = 0; k < side_; ++k) buf[k] *= m(freq2_[k]);
    } else {
      for (std::size_t a = 0; a < side_; ++a)
        for (std::size_t b = 0; b < side_; ++b) buf[a * side_ + b] *= m(freq2_[a] + freq2_[b]);
    }
    fft_inplace(buf, grid_.dim(), side_, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(size());
    const std::size_t n = grid_.points();
    std::vector<Complex> out(grid_.size());
    if (grid_.dim() == 1) {
      for (std::size_t i = 0; i < n; ++i) out[i] = buf[i] * scale;
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[grid_.flat(i, j)] = buf[i * side_ + j] * scale;
    }
    return ComplexGridFunction(grid_, std::move(out));
  }

 private:
  std::size_t size() const { return grid_.dim() == 1 ? side_ : side_ * side_; }

  Grid grid_;
  std::size_t side_;
  std::vector<double> freq2_;
};

inline void check_bochner_riesz(double delta, double R) {
  require(std::isfinite(R) && R > 0.0, ErrorKind::nonpositive_r, "Bochner-Riesz level R must be positive");
  require(std::isfinite(delta) && delta > 0.0, ErrorKind::invalid_argument, "Bochner-Riesz order must be positive");
}

/// T^delta_R f: the multiplier (1 - |xi|^2 / R^2)_+^delta.
template <class T>
BasicGridFunction<T> bochner_riesz(const BasicGridFunction<T>& f, double delta, double R,
                                   BoundaryMode mode = BoundaryMode::zero_padded) {
  check_bochner_riesz(delta, R);
  const MultiplierEngine engine(f.grid(), mode);
  auto out = engine.apply(engine.spectrum(f), [&](double xi2) { return bochner_riesz_symbol(xi2, delta, R); });
  if constexpr (std::is_same_v<T, double>)
    return real_part(out);
  else
    return out;
}

/// Dyadic levels pi/L * 2^j up to pi N / (2L).
inline std::vector<double> dyadic_r_set(const Grid& grid) {
  std::vector<double> out;
  const double base = std::numbers::pi / grid.half_width();
  for (std::size_t m = 1; 2 * m <= grid.points(); m *= 2) out.push_back(base * static_cast<double>(m));
  return out;
}

/// T^delta_* f = max over the R-set of |T^delta_R f|.
template <class T>
GridFunction bochner_riesz_max(const BasicGridFunction<T>& f, double delta, std::span<const double> r_set,
                               BoundaryMode mode = BoundaryMode::zero_padded) {
  require(!r_set.empty(), ErrorKind::empty_r_set, "Bochner-Riesz R-set is empty");
  for (double R : r_set) check_bochner_riesz(delta, R);
  const MultiplierEngine engine(f.grid(), mode);
  const auto spec = engine.spectrum(f);
  std::vector<GridFunction> levels(r_set.size(), GridFunction(f.grid()));
  parallel_for(r_set.size(), [&](std::size_t j) {
    const double R = r_set[j];
    auto g = engine.apply(spec, [&](double xi2) { return bochner_riesz_symbol(xi2, delta, R); });
    if constexpr (std::is_same_v<T, double>)
      levels[j] = magnitude(real_part(g));
    else
      levels[j] = magnitude(g);
  });
  GridFunction out = levels[0];
  for (std::size_t j = 1; j < levels.size(); ++j)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], levels[j][i]);
  return out;
}

template <class T>
GridFunction bochner_riesz_max(const BasicGridFunction<T>& f, double delta,
                               BoundaryMode mode = BoundaryMode::zero_padded) {
  const auto set = dyadic_r_set(f.grid());
  return bochner_riesz_max(f, delta, std::span<const double>(set), mode);
}

// ---------------------------------------------------------------------------
// Operator specifications

/// One of the operators with its parameters, parsed from the mini-language
/// "hilbert", "riesz:1", "rough:cos", "marcinkiewicz:cos",
/// "br:delta=0.5,R=16", "brmax:delta=0.5", "comm:<base>,b=<symbol>",
/// "mcomm:<omega>,b=<symbol>". br and brmax also take mode=periodic.
struct OperatorSpec {
  enum class Kind { hilbert, riesz, rough, marcinkiewicz, bochner_riesz, bochner_riesz_max, commutator,
                    marcinkiewicz_commutator };

  Kind kind = Kind::hilbert;
  int riesz_index = 1;
  std::string omega = "cos";
  double delta = 0.0;
  double R = 0.0;
  std::vector<double> r_set;  // empty: the dyadic default
  BoundaryMode mode = BoundaryMode::zero_padded;
  std::string symbol;  // b for commutators
  std::shared_ptr<const OperatorSpec> base;
  std::optional<double> epsilon;  // truncation radius; default 2h
  unsigned t_per_octave = 4;

  static OperatorSpec parse(std::string_view text);
  std::string to_string() const;

  bool is_linear() const {
    switch (kind) {
      case Kind::hilbert:
      case Kind::riesz:
      case Kind::rough:
      case Kind::bochner_riesz: return true;
      case Kind::commutator: return base && base->is_linear();
      default: return false;
    }
  }
};

namespace detail {

inline double parse_number(std::string_view s, std::string_view context) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(s), &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorKind::parse_error, "bad number '" + std::string(s) + "' in '" + std::string(context) + "'");
}

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

inline void parse_br_options(OperatorSpec& op, std::string_view body, std::string_view text, bool need_r) {
  bool have_delta = false;
  bool have_r = false;
  std::size_t start = 0;
  while (start <= body.size()) {
    const std::size_t comma = std::min(body.find(',', start), body.size());
    const std::string_view item = body.substr(start, comma - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::parse_error, "expected key=value in '" + std::string(text) + "'");
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    if (key == "delta") {
      op.delta = parse_number(value, text);
      have_delta = true;
    } else if (key == "R" && need_r) {
      op.R = parse_number(value, text);
      have_r = true;
    } else if (key == "mode") {
      if (value == "periodic")
        op.mode = BoundaryMode::periodic;
      else if (value == "zero_padded")
        op.mode = BoundaryMode::zero_padded;
      else
        throw Error(ErrorKind::parse_error, "unknown mode '" + std::string(value) + "'");
    } else {
      throw Error(ErrorKind::parse_error, "unknown key '" + std::string(key) + "' in '" + std::string(text) + "'");
    }
    start = comma + 1;
  }
  if (!have_delta || (need_r && !have_r))
    throw Error(ErrorKind::parse_error, "missing delta or R in '" + std::string(text) + "'");
}

}  // namespace detail

/// The symbol b of a commutator: "linear" (x_1), "log" (log|x|), "step"
/// (1 on x_1 >= 0) or "const:c".
inline GridFunction make_symbol(std::string_view name, const Grid& grid) {
  if (name == "linear") return GridFunction::sample(grid, [](const Point& x) { return x[0]; });
  if (name == "log") return GridFunction::sample(grid, [&](const Point& x) { return std::log(norm(x, grid.dim())); });
  if (name == "step") return GridFunction::sample(grid, [](const Point& x) { return x[0] >= 0.0 ? 1.0 : 0.0; });
  if (name.substr(0, 6) == "const:") {
    const double c = detail::parse_number(name.substr(6), name);
    return GridFunction::sample(grid, [c](const Point&) { return c; });
  }
  throw Error(ErrorKind::parse_error, "unknown symbol '" + std::string(name) + "' (linear, log, step, const:c)");
}

inline OperatorSpec OperatorSpec::parse(std::string_view text) {
  OperatorSpec op;
  const std::size_t colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view body = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  auto split_symbol = [&](std::string_view s) {
    const std::size_t at = s.rfind(",b=");
    if (at == std::string_view::npos)
      throw Error(ErrorKind::parse_error, "commutator needs ',b=<symbol>' in '" + std::string(text) + "'");
    return std::pair{s.substr(0, at), s.substr(at + 3)};
  };
  if (head == "hilbert" && colon == std::string_view::npos) {
    op.kind = Kind::hilbert;
  } else if (head == "riesz") {
    op.kind = Kind::riesz;
    const double j = detail::parse_number(body, text);
    if (j != 1.0 && j != 2.0) throw Error(ErrorKind::parse_error, "Riesz index must be 1 or 2");
    op.riesz_index = static_cast<int>(j);
  } else if (head == "rough" || head == "marcinkiewicz") {
    op.kind = head == "rough" ? Kind::rough : Kind::marcinkiewicz;
    SphereKernel::parse(body);
    op.omega = std::string(body);
  } else if (head == "br") {
    op.kind = Kind::bochner_riesz;
    detail::parse_br_options(op, body, text, true);
  } else if (head == "brmax") {
    op.kind = Kind::bochner_riesz_max;
    detail::parse_br_options(op, body, text, false);
  } else if (head == "comm") {
    op.kind = Kind::commutator;
    const auto [base, sym] = split_symbol(body);
    op.base = std::make_shared<const OperatorSpec>(parse(base));
    op.symbol = std::string(sym);
  } else if (head == "mcomm") {
    op.kind = Kind::marcinkiewicz_commutator;
    const auto [om, sym] = split_symbol(body);
    SphereKernel::parse(om);
    op.omega = std::string(om);
    op.symbol = std::string(sym);
  } else {
    throw Error(ErrorKind::parse_error, "unknown operator '" + std::string(text) + "'");
  }
  if (!op.symbol.empty()) make_symbol(op.symbol, Grid(1, 1.0, 8));
  return op;
}

inline std::string OperatorSpec::to_string() const {
  const std::string mode_suffix = mode == BoundaryMode::periodic ? ",mode=periodic" : "";
  switch (kind) {
    case Kind::hilbert: return "hilbert";
    case Kind::riesz: return "riesz:" + std::to_string(riesz_index);
    case Kind::rough: return "rough:" + omega;
    case Kind::marcinkiewicz: return "marcinkiewicz:" + omega;
    case Kind::bochner_riesz:
      return "br:delta=" + detail::format_double(delta) + ",R=" + detail::format_double(R) + mode_suffix;
    case Kind::bochner_riesz_max: return "brmax:delta=" + detail::format_double(delta) + mode_suffix;
    case Kind::commutator: return "comm:" + base->to_string() + ",b=" + symbol;
    case Kind::marcinkiewicz_commutator: return "mcomm:" + omega + ",b=" + symbol;
  }
  return "";
}

namespace detail {

/// A linear base operator bound to a grid, reusable across inputs.
class LinearOperator {
 public:
  LinearOperator(const OperatorSpec& spec, const Grid& grid) : spec_(spec), grid_(grid) {
    using Kind = OperatorSpec::Kind;
    switch (spec.kind) {
      case Kind::hilbert:
        require(grid.dim() == 1, ErrorKind::invalid_dimension, "the Hilbert transform lives on the line");
        conv_.emplace(cz_convolution(grid, hilbert_kernel(), spec.epsilon));
        break;
      case Kind::riesz: conv_.emplace(cz_convolution(grid, riesz_kernel(spec.riesz_index, grid.dim()), spec.epsilon)); break;
      case Kind::rough: conv_.emplace(rough_convolution(grid, SphereKernel::parse(spec.omega), spec.epsilon)); break;
      case Kind::bochner_riesz:
        check_bochner_riesz(spec.delta, spec.R);
        engine_.emplace(grid, spec.mode);
        break;
      default: throw Error(ErrorKind::base_not_linear, "commutator base " + spec.to_string() + " is not linear");
    }
  }

  GridFunction operator()(const GridFunction& f) const {
    if (conv_) return (*conv_)(f);
    return real_part(engine_->apply(engine_->spectrum(f), [&](double xi2) {
      return bochner_riesz_symbol(xi2, spec_.delta, spec_.R);
    }));
  }

 private:
  OperatorSpec spec_;
  Grid grid_;
  std::optional<TruncatedConvolution> conv_;
  std::optional<MultiplierEngine> engine_;
};

}  // namespace detail

/// [b, T] f = b T f - T(b f) for a linear base T.
inline GridFunction commutator(const OperatorSpec& base, const GridFunction& b, const GridFunction& f) {
  f.check_same_grid(b);
  const detail::LinearOperator op(base, f.grid());
  return b * op(f) - op(b * f);
}

/// Applies any operator of the roster to a real grid function.
inline GridFunction apply(const OperatorSpec& spec, const GridFunction& f) {
  using Kind = OperatorSpec::Kind;
  switch (spec.kind) {
    case Kind::hilbert:
    case Kind::riesz:
    case Kind::rough:
    case Kind::bochner_riesz: return detail::LinearOperator(spec, f.grid())(f);
    case Kind::marcinkiewicz:
      return marcinkiewicz(f, SphereKernel::parse(spec.omega), TGrid::geometric(f.grid(), spec.t_per_octave));
    case Kind::bochner_riesz_max:
      if (spec.r_set.empty()) return bochner_riesz_max(f, spec.delta, spec.mode);
      return bochner_riesz_max(f, spec.delta, std::span<const double>(spec.r_set), spec.mode);
    case Kind::commutator: return commutator(*spec.base, make_symbol(spec.symbol, f.grid()), f);
    case Kind::marcinkiewicz_commutator:
      return marcinkiewicz_commutator(make_symbol(spec.symbol, f.grid()), SphereKernel::parse(spec.omega), f,
                                      TGrid::geometric(f.grid(), spec.t_per_octave));
  }
  throw Error(ErrorKind::invalid_argument, "unhandled operator");
}

// ---------------------------------------------------------------------------
// Majorants

enum class MajorantProfile { linear, quadratic };

/// sum_{k=1..kmax} c_k ((1/|2^{k+1}B|) int_{2^{k+1}B} |f|^s)^{1/s} with
/// c_k = 1 + eta k (linear) or k^2 (quadratic).
inline double hyp1_majorant_value(const GridFunction& f, const Ball& ball, double s, double eta, unsigned kmax,
                                  MajorantProfile profile = MajorantProfile::linear) {
  require(s >= 1.0, ErrorKind::invalid_argument, "majorant exponent must be >= 1");
  const Ball outer = ball.scaled(std::ldexp(1.0, static_cast<int>(kmax) + 1));
  require(ball_inside_domain(f.grid(), outer), ErrorKind::dilated_ball_outside_domain,
          "2^{kmax+1} B leaves the domain");
  double total = 0.0;
  for (unsigned k = 1; k <= kmax; ++k) {
    const auto cells = cells_in_ball(f.grid(), ball.scaled(std::ldexp(1.0, static_cast<int>(k) + 1)));
    long double sum = 0.0L;
    for (std::size_t c : cells) sum += std::pow(std::abs(f[c]), s);
    const double avg = static_cast<double>(sum / static_cast<long double>(cells.size()));
    const double coeff = profile == MajorantProfile::linear ? 1.0 + eta * k : static_cast<double>(k) * k;
    total += coeff * std::pow(avg, 1.0 / s);
  }
  return total;
}

/// The majorant as a field: its value on the cells of B, zero elsewhere.
inline GridFunction hyp1_majorant(const GridFunction& f, const Ball& ball, double s, double eta, unsigned kmax,
                                  MajorantProfile profile = MajorantProfile::linear) {
  const double v = hyp1_majorant_value(f, ball, s, eta, kmax, profile);
  GridFunction out(f.grid());
  for (std::size_t c : cells_in_ball(f.grid(), ball)) out[c] = v;
  return out;
}

/// h^n sum_j |f_j| / |x - y_j|^n, valid off the support of f at distance
/// >= 2h from it.
struct SizeMajorant {
  GridFunction value;
  GridFunction valid;  // 1 where the bound may be evaluated

  double at(std::size_t cell) const {
    require(valid[cell] != 0.0, ErrorKind::evaluation_inside_support,
            "size majorant evaluated on or next to the support");
    return value[cell];
  }
};

inline SizeMajorant size_majorant(const GridFunction& f, const GridFunction& support_mask) {
  f.check_same_grid(support_mask);
  const Grid& g = f.grid();
  const int n = g.dim();
  const TruncatedConvolution inverse_power(
      g, [n](double u1, double u2) { return 1.0 / std::pow(std::hypot(u1, u2), n); }, 0.5 * g.spacing());
  GridFunction value = inverse_power(magnitude(f));
  GridFunction mask(g);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = support_mask[i] != 0.0 ? 1.0 : 0.0;
  // Cells within 2h of the support: convolve the mask with the open 2h disk.
  const Convolver conv(g);
  const auto near = conv.inverse(Convolver::multiply(
      conv.spectrum(mask),
      conv.kernel_spectrum([](std::ptrdiff_t a, std::ptrdiff_t b) { return a * a + b * b < 4 ? 1.0 : 0.0; })));
  GridFunction valid(g);
  const double half_cell = 0.5 * g.cell_volume();
  for (std::size_t i = 0; i < valid.size(); ++i) {
    valid[i] = near[i].real() < half_cell ? 1.0 : 0.0;
    if (valid[i] == 0.0) value[i] = 0.0;
  }
  return SizeMajorant{std::move(value), std::move(valid)};
}

/// |y - z| <= 2|z - x| <= 3|y - z| for x in B(y, r) and z outside B(y, 2r).
inline bool geometric_estimate_holds(const Point& y, const Point& x, const Point& z, int dim) {
  const double yz = distance(y, z, dim);
  const double zx = distance(z, x, dim);
  return yz <= 2.0 * zx && 2.0 * zx <= 3.0 * yz;
}

}  // namespace amlab
