#pragma once

// Function-space norms on grid functions: weighted Lebesgue, weak Lebesgue,
// weighted Morrey, the weighted amalgam (L^q_w, L^p)^alpha in its strong and
// weak versions, and BMO with its q-power and weighted variants.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "amlab/ball_sweep.hpp"
#include "amlab/grid.hpp"
#include "amlab/weights.hpp"

namespace amlab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline double conjugate_exponent(double t) { return std::isinf(t) ? 1.0 : t / (t - 1.0); }

/// (q, p, alpha) plus the optional theta, kappa, delta of a scenario.
struct ExponentSet {
  ExponentSet() = default;
  ExponentSet(double q_, double p_, double alpha_) : q(q_), p(p_), alpha(alpha_) {}

  double q = 1.0;
  double p = kInfinity;
  double alpha = 1.0;
  std::optional<double> theta;
  std::optional<double> kappa;
  std::optional<double> delta;

  void validate() const {
    require(q >= 1.0 && std::isfinite(q), ErrorKind::exponent_order_violation, "q must be finite and >= 1");
    require(q <= alpha && alpha <= p, ErrorKind::exponent_order_violation, "need q <= alpha <= p");
    if (kappa) require(*kappa > 0.0 && *kappa < 1.0, ErrorKind::exponent_order_violation, "kappa must lie in (0, 1)");
    if (theta) require(*theta > 1.0, ErrorKind::exponent_order_violation, "theta must exceed 1");
    if (delta) require(*delta >= 0.0, ErrorKind::exponent_order_violation, "delta must be nonnegative");
  }

  /// Morrey exponent matching the p = infinity amalgam: kappa = 1 - q/alpha.
  double morrey_kappa() const { return 1.0 - q / alpha; }
  double theta_conjugate() const { return theta ? conjugate_exponent(*theta) : 1.0; }
};

struct NormValue {
  double value = 0.0;
  std::string norm_id;
  ExponentSet params;
  std::string weight_spec;
  std::optional<double> radius;
  std::optional<Ball> witness;
};

inline std::string csv_header() {
  return "norm_id,q,p,alpha,kappa,weight_spec,r,value,witness_center,witness_radius\n";
}

inline std::string csv_row(const NormValue& v, int dim) {
  std::ostringstream ss;
  ss.precision(17);
  auto number = [&](std::optional<double> x) {
    if (!x) return std::string();
    std::ostringstream t;
    t.precision(17);
    if (std::isinf(*x))
      t << "inf";
    else
      t << *x;
    return t.str();
  };
  ss << v.norm_id << ',' << number(v.params.q) << ',' << number(v.params.p) << ',' << number(v.params.alpha) << ','
     << number(v.params.kappa) << ',' << '"' << v.weight_spec << '"' << ',' << number(v.radius) << ','
     << number(v.value) << ',';
  if (v.witness) {
    ss << number(v.witness->center[0]);
    if (dim == 2) ss << ';' << number(v.witness->center[1]);
    ss << ',' << number(v.witness->radius);
  } else {
    ss << ',';
  }
  ss << '\n';
  return ss.str();
}

namespace detail {

template <class T>
std::vector<double> weighted_power(const BasicGridFunction<T>& f, const WeightField& w, double q) {
  require(f.grid() == w.grid, ErrorKind::grid_mismatch, "function and weight grids differ");
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(abs_value(f[i]), q) * w.values[i];
  return out;
}

/// sup over lambda of lambda * mass({|f| > lambda})^{1/q}; each entry holds
/// (|f|, mass) for one cell. Reorders the input.
inline double weak_quasi_norm(std::vector<std::pair<double, double>>& cells, double q) {
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double best = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].first <= 0.0) break;
    mass += cells[i].second;
    if (i + 1 < cells.size() && cells[i + 1].first == cells[i].first) continue;
    best = std::max(best, cells[i].first * std::pow(mass, 1.0 / q));
  }
  return best;
}

struct LevelResult {
  double value = 0.0;
  std::optional<Ball> witness;
};

/// Outer L^p aggregation over the centers of one level of the per-ball
/// quantity `local(center)`.
template <class Local>
LevelResult aggregate_level(const BallFamily& family, std::size_t level, double p, Local&& local) {
  LevelResult result;
  double best = -1.0;
  long double sum = 0.0L;
  family.for_each_center(level, [&](std::size_t c) {
    const double v = local(c);
    if (v > best) {
      best = v;
      result.witness = family.ball(level, c);
    }
    if (!std::isinf(p)) sum += std::pow(static_cast<long double>(v), static_cast<long double>(p));
  });
  result.value = std::isinf(p) ? std::max(best, 0.0)
                               : std::pow(static_cast<double>(sum) * family.center_weight(level), 1.0 / p);
  return result;
}

inline void check_family(const BallFamily& family, const Grid& grid) {
  require(family.grid() == grid, ErrorKind::grid_mismatch, "ball family lives on another grid");
  require(family.size() > 0, ErrorKind::empty_family, "ball family is empty");
}

}  // namespace detail

/// ||f||_{q_w} = (int |f|^q w)^{1/q}.
template <class T>
NormValue lp_norm(const BasicGridFunction<T>& f, const WeightField& w, double q) {
  require(q >= 1.0 && std::isfinite(q), ErrorKind::invalid_argument, "lp norm needs 1 <= q < inf");
  const auto density = detail::weighted_power(f, w, q);
  long double sum = 0.0L;
  for (double v : density) sum += v;
  const double value = std::pow(static_cast<double>(sum) * f.grid().cell_volume(), 1.0 / q);
  return NormValue{value, "lp", ExponentSet{q, kInfinity, q}, w.spec, std::nullopt, std::nullopt};
}

/// sup_lambda lambda * w({|f| > lambda})^{1/q}, lambda running over the
/// distinct values of |f| approached from below.
template <class T>
NormValue weak_norm(const BasicGridFunction<T>& f, const WeightField& w, double q) {
  require(q >= 1.0 && std::isfinite(q), ErrorKind::invalid_argument, "weak norm needs 1 <= q < inf");
  require(f.grid() == w.grid, ErrorKind::grid_mismatch, "function and weight grids differ");
  std::vector<std::pair<double, double>> cells;
  const double vol = f.grid().cell_volume();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (abs_value(f[i]) > 0.0) cells.emplace_back(abs_value(f[i]), w.values[i] * vol);
  return NormValue{detail::weak_quasi_norm(cells, q), "weak", ExponentSet{q, kInfinity, q}, w.spec, std::nullopt,
                   std::nullopt};
}

/// sup over the family of (w(B)^{-kappa} int_B |f|^q w)^{1/q}.
template <class T>
NormValue morrey_norm(const BasicGridFunction<T>& f, const WeightField& w, double q, double kappa,
                      const BallFamily& family) {
  require(q >= 1.0 && std::isfinite(q), ErrorKind::invalid_argument, "Morrey norm needs q >= 1");
  require(kappa > 0.0 && kappa < 1.0, ErrorKind::invalid_argument, "Morrey norm needs 0 < kappa < 1");
  detail::check_family(family, f.grid());
  const BallSummer fsum(f.grid(), detail::weighted_power(f, w, q));
  const BallSummer wsum(w.grid, w.values);
  NormValue result{0.0, "morrey", ExponentSet{q, kInfinity, q}, w.spec, std::nullopt, std::nullopt};
  result.params.kappa = kappa;
  const double vol = f.grid().cell_volume();
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const DiskProfile& disk = family.levels()[l].disk;
    family.for_each_center(l, [&](std::size_t c) {
      const double mass = static_cast<double>(wsum.raw_sum(c, disk)) * vol;
      const double local = static_cast<double>(fsum.raw_sum(c, disk)) * vol;
      const double v = std::pow(std::pow(mass, -kappa) * local, 1.0 / q);
      if (v > result.value || !result.witness) {
        result.value = std::max(result.value, v);
        result.witness = family.ball(l, c);
        result.radius = family.radius(l);
      }
    });
  }
  return result;
}

/// Strong amalgam norm: max over the family's radii of
/// [int (w(B(y,r))^{1/alpha - 1/q - 1/p} ||f chi_B(y,r)||_{q_w})^p dy]^{1/p}.
template <class T>
NormValue amalgam_norm(const BasicGridFunction<T>& f, const WeightField& w, const ExponentSet& e,
                       const BallFamily& family) {
  e.validate();
  detail::check_family(family, f.grid());
  const BallSummer fsum(f.grid(), detail::weighted_power(f, w, e.q));
  const BallSummer wsum(w.grid, w.values);
  const double vol = f.grid().cell_volume();
  const double expo = 1.0 / e.alpha - 1.0 / e.q - (std::isinf(e.p) ? 0.0 : 1.0 / e.p);
  NormValue result{0.0, "amalgam", e, w.spec, std::nullopt, std::nullopt};
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const DiskProfile& disk = family.levels()[l].disk;
    const auto level = detail::aggregate_level(family, l, e.p, [&](std::size_t c) {
      const double mass = static_cast<double>(wsum.raw_sum(c, disk)) * vol;
      const double local = static_cast<double>(fsum.raw_sum(c, disk)) * vol;
      return std::pow(mass, expo) * std::pow(local, 1.0 / e.q);
    });
    if (level.value > result.value || !result.witness) {
      result.value = std::max(result.value, level.value);
      result.radius = family.radius(l);
      result.witness = level.witness;
    }
  }
  return result;
}

/// The amalgam quantity at a single radius r.
template <class T>
NormValue amalgam_norm_at_r(const BasicGridFunction<T>& f, const WeightField& w, const ExponentSet& e, double r,
                            BallFamily::Options options = {}) {
  const std::size_t m = BallFamily::radius_to_cells(f.grid(), r);
  BallFamily family = [&] {
    try {
      return BallFamily::from_radius_cells(f.grid(), std::span<const std::size_t>(&m, 1), options);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::empty_family)
        throw Error(ErrorKind::no_admissible_centers, "no ball of radius " + std::to_string(r) + " fits the domain");
      throw;
    }
  }();
  return amalgam_norm(f, w, e, family);
}

/// Same as amalgam_norm with the weak norm of f chi_B in place of the strong one.
template <class T>
NormValue weak_amalgam_norm(const BasicGridFunction<T>& f, const WeightField& w, const ExponentSet& e,
                            const BallFamily& family) {
  e.validate();
  detail::check_family(family, f.grid());
  const Grid& g = f.grid();
  const double vol = g.cell_volume();
  std::vector<double> mag(f.size());
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = abs_value(f[i]);
  const BallSummer support(g, mag);
  const BallSummer wsum(w.grid, w.values);
  const double expo = 1.0 / e.alpha - 1.0 / e.q - (std::isinf(e.p) ? 0.0 : 1.0 / e.p);
  NormValue result{0.0, "weak_amalgam", e, w.spec, std::nullopt, std::nullopt};
  std::vector<std::pair<double, double>> cells;
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const DiskProfile& disk = family.levels()[l].disk;
    const auto level = detail::aggregate_level(family, l, e.p, [&](std::size_t c) {
      if (support.raw_sum(c, disk) == 0.0L) return 0.0;
      cells.clear();
      for_each_disk_cell(g, c, disk, [&](std::size_t k) {
        if (mag[k] > 0.0) cells.emplace_back(mag[k], w.values[k] * vol);
      });
      const double mass = static_cast<double>(wsum.raw_sum(c, disk)) * vol;
      return std::pow(mass, expo) * detail::weak_quasi_norm(cells, e.q);
    });
    if (level.value > result.value || !result.witness) {
      result.value = std::max(result.value, level.value);
      result.radius = family.radius(l);
      result.witness = level.witness;
    }
  }
  return result;
}

/// Unweighted Wiener amalgam norm (int ||f chi_B(y,rho)||_q^p dy)^{1/p}; with
/// rho = 1 this is ||f||_{q,p}.
template <class T>
double wiener_amalgam_norm(const BasicGridFunction<T>& f, double q, double p, double rho) {
  const std::size_t m = BallFamily::radius_to_cells(f.grid(), rho);
  const BallFamily family = BallFamily::from_radius_cells(f.grid(), std::span<const std::size_t>(&m, 1));
  const WeightField one = Weight::constant(1.0).on(f.grid());
  const BallSummer fsum(f.grid(), detail::weighted_power(f, one, q));
  const DiskProfile& disk = family.levels()[0].disk;
  const double vol = f.grid().cell_volume();
  return detail::aggregate_level(family, 0, p, [&](std::size_t c) {
           return std::pow(static_cast<double>(fsum.raw_sum(c, disk)) * vol, 1.0 / q);
         }).value;
}

struct BmoVariant {
  enum class Kind { mean_oscillation, q_power, weighted };
  Kind kind = Kind::mean_oscillation;
  double q = 1.0;
  const WeightField* weight = nullptr;

  static BmoVariant mean_oscillation() { return {}; }
  static BmoVariant q_power(double q) { return {Kind::q_power, q, nullptr}; }
  static BmoVariant weighted(const WeightField& w, double q) { return {Kind::weighted, q, &w}; }
};

/// sup over the family of the mean oscillation of b (or its q-power /
/// weighted variants).
inline NormValue bmo_norm(const GridFunction& b, const BallFamily& family,
                          BmoVariant variant = BmoVariant::mean_oscillation()) {
  detail::check_family(family, b.grid());
  require(variant.q >= 1.0, ErrorKind::invalid_argument, "BMO variant exponent must be >= 1");
  if (variant.kind == BmoVariant::Kind::weighted) {
    require(variant.weight != nullptr, ErrorKind::invalid_argument, "weighted BMO needs a weight");
    require(variant.weight->grid == b.grid(), ErrorKind::grid_mismatch, "BMO weight lives on another grid");
  }
  const Grid& g = b.grid();
  // The oscillation is shift invariant; removing b at one cell first keeps
  // constant symbols exactly at zero and the prefix sums small.
  std::vector<double> shifted(b.values().begin(), b.values().end());
  const double ref = shifted.front();
  for (double& v : shifted) v -= ref;
  const BallSummer bsum(g, shifted);
  NormValue result{0.0, "bmo", ExponentSet{variant.q, kInfinity, variant.q}, "", std::nullopt, std::nullopt};
  if (variant.weight) result.weight_spec = variant.weight->spec;
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const DiskProfile& disk = family.levels()[l].disk;
    const auto count = static_cast<long double>(disk.count());
    family.for_each_center(l, [&](std::size_t c) {
      const double mean = static_cast<double>(bsum.raw_sum(c, disk) / count);
      long double acc = 0.0L;
      long double mass = 0.0L;
      for_each_disk_cell(g, c, disk, [&](std::size_t k) {
        const double dev = std::abs(shifted[k] - mean);
        switch (variant.kind) {
          case BmoVariant::Kind::mean_oscillation: acc += dev; break;
          case BmoVariant::Kind::q_power: acc += std::pow(dev, variant.q); break;
          case BmoVariant::Kind::weighted:
            acc += std::pow(dev, variant.q) * variant.weight->values[k];
            mass += variant.weight->values[k];
            break;
        }
      });
      double v = 0.0;
      switch (variant.kind) {
        case BmoVariant::Kind::mean_oscillation: v = static_cast<double>(acc / count); break;
        case BmoVariant::Kind::q_power: v = std::pow(static_cast<double>(acc / count), 1.0 / variant.q); break;
        case BmoVariant::Kind::weighted: v = std::pow(static_cast<double>(acc / mass), 1.0 / variant.q); break;
      }
      if (v > result.value || !result.witness) {
        result.value = std::max(result.value, v);
        result.witness = family.ball(l, c);
        result.radius = family.radius(l);
      }
    });
  }
  return result;
}

/// Average of b over the cells of a ball.
inline double ball_average(const GridFunction& b, const Ball& ball) {
  const auto cells = cells_in_ball(b.grid(), ball);
  require(!cells.empty(), ErrorKind::invalid_argument, "ball contains no cell");
  long double sum = 0.0L;
  for (std::size_t k : cells) sum += b[k];
  return static_cast<double>(sum / static_cast<long double>(cells.size()));
}

/// (1/|B|) int_B |b - b_B| over the cells of an arbitrary ball.
inline double mean_oscillation(const GridFunction& b, const Ball& ball) {
  const auto cells = cells_in_ball(b.grid(), ball);
  require(!cells.empty(), ErrorKind::invalid_argument, "ball contains no cell");
  const double mean = ball_average(b, ball);
  long double acc = 0.0L;
  for (std::size_t k : cells) acc += std::abs(b[k] - mean);
  return static_cast<double>(acc / static_cast<long double>(cells.size()));
}

/// |b_{2^{k+1}B} - b_B| / (k + 1).
inline double bmo_mean_drift(const GridFunction& b, const Ball& ball, unsigned k) {
  const Ball big = ball.scaled(std::ldexp(1.0, static_cast<int>(k) + 1));
  require(ball_inside_domain(b.grid(), big), ErrorKind::scaled_ball_outside_domain,
          "dilated ball leaves the domain");
  return std::abs(ball_average(b, big) - ball_average(b, ball)) / static_cast<double>(k + 1);
}

}  // namespace amlab
