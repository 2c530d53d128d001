#pragma once

// Weights on R^n and the Muckenhoupt-class diagnostics: ball mass, A_q
// quotient over a ball family, doubling, reverse Hoelder and the subset
// measure ratio.

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "amlab/ball_sweep.hpp"
#include "amlab/grid.hpp"
#include "amlab/io.hpp"

namespace amlab {

/// A weight sampled on one grid.
struct WeightField {
  Grid grid;
  std::vector<double> values;
  std::string spec;
};

class Weight {
 public:
  static Weight constant(double c) {
    require(std::isfinite(c) && c > 0.0, ErrorKind::invalid_argument, "constant weight must be positive");
    return Weight(Constant{c});
  }
  static Weight power(double beta) {
    require(std::isfinite(beta), ErrorKind::invalid_argument, "power exponent must be finite");
    return Weight(Power{beta});
  }
  static Weight sampled(GridFunction values, std::string source = "sampled") {
    for (double v : values.values())
      require(v > 0.0, ErrorKind::invalid_argument, "sampled weight must be strictly positive");
    return Weight(Sampled{std::make_shared<const GridFunction>(std::move(values)), std::move(source)});
  }
  static Weight product(Weight a, Weight b) {
    return Weight(Product{std::make_shared<const Weight>(std::move(a)), std::make_shared<const Weight>(std::move(b))});
  }

  /// "const:c", "power:beta", "prod:(spec,spec)" or "file:path.awg".
  static Weight parse(std::string_view spec) {
    auto fail = [&] { return Error(ErrorKind::parse_error, "bad weight spec '" + std::string(spec) + "'"); };
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw fail();
    const std::string_view head = spec.substr(0, colon);
    const std::string_view body = spec.substr(colon + 1);
    if (head == "const" || head == "power") {
      double value = 0.0;
      try {
        std::size_t used = 0;
        value = std::stod(std::string(body), &used);
        if (used != body.size()) throw fail();
      } catch (const std::logic_error&) {
        throw fail();
      }
      return head == "const" ? constant(value) : power(value);
    }
    if (head == "file") return sampled(read_awg(std::string(body)), std::string(spec));
    if (head == "prod") {
      if (body.size() < 2 || body.front() != '(' || body.back() != ')') throw fail();
      const std::string_view inner = body.substr(1, body.size() - 2);
      int depth = 0;
      for (std::size_t i = 0; i < inner.size(); ++i) {
        if (inner[i] == '(') ++depth;
        if (inner[i] == ')') --depth;
        if (inner[i] == ',' && depth == 0) return product(parse(inner.substr(0, i)), parse(inner.substr(i + 1)));
      }
    }
    throw fail();
  }

  std::string spec() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) return "const:" + format_number(k.c);
          if constexpr (std::is_same_v<K, Power>) return "power:" + format_number(k.beta);
          if constexpr (std::is_same_v<K, Sampled>) return k.source;
          if constexpr (std::is_same_v<K, Product>) return "prod:(" + k.a->spec() + "," + k.b->spec() + ")";
        },
        kind_);
  }

  bool is_constant() const {
    if (std::holds_alternative<Constant>(kind_)) return true;
    if (const auto* p = std::get_if<Product>(&kind_)) return p->a->is_constant() && p->b->is_constant();
    return false;
  }

  std::optional<double> power_exponent() const {
    if (const auto* p = std::get_if<Power>(&kind_)) return p->beta;
    return std::nullopt;
  }

  /// Samples at every cell; rejects non-positive or non-finite values.
  std::vector<double> sample(const Grid& grid) const {
    std::vector<double> out(grid.size());
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Constant>) {
            std::fill(out.begin(), out.end(), k.c);
          } else if constexpr (std::is_same_v<K, Power>) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(norm(grid.point(i), grid.dim()), k.beta);
          } else if constexpr (std::is_same_v<K, Sampled>) {
            require(k.values->grid() == grid, ErrorKind::grid_mismatch, "sampled weight lives on another grid");
            std::copy(k.values->values().begin(), k.values->values().end(), out.begin());
          } else {
            const auto a = k.a->sample(grid);
            const auto b = k.b->sample(grid);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
          }
        },
        kind_);
    for (double v : out)
      require(std::isfinite(v) && v > 0.0, ErrorKind::invalid_argument,
              "weight " + spec() + " is not positive and finite on the grid");
    return out;
  }

  WeightField on(const Grid& grid) const { return WeightField{grid, sample(grid), spec()}; }

 private:
  struct Constant {
    double c;
  };
  struct Power {
    double beta;
  };
  struct Sampled {
    std::shared_ptr<const GridFunction> values;
    std::string source;
  };
  struct Product {
    std::shared_ptr<const Weight> a;
    std::shared_ptr<const Weight> b;
  };
  using Kind = std::variant<Constant, Power, Sampled, Product>;

  explicit Weight(Kind kind) : kind_(std::move(kind)) {}

  static std::string format_number(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
  }

  Kind kind_;
};

/// w(B) as a Riemann sum over the cells of B.
inline double ball_mass(const WeightField& w, const Ball& ball) {
  double sum = 0.0;
  for (std::size_t k : cells_in_ball(w.grid, ball)) sum += w.values[k];
  return sum * w.grid.cell_volume();
}

inline double ball_mass(const Weight& w, const Ball& ball, const Grid& grid) { return ball_mass(w.on(grid), ball); }

struct AqReport {
  double q = 1.0;
  double estimate = 0.0;
  Ball witness;
  BallFamily family;
};

/// sup over the family of (avg_B w)(avg_B w^{-1/(q-1)})^{q-1}, or for q = 1
/// avg_B w / min_B w.
inline AqReport aq_constant(const WeightField& w, double q, const BallFamily& family) {
  require(q >= 1.0 && std::isfinite(q), ErrorKind::invalid_argument, "A_q needs q >= 1");
  require(family.grid() == w.grid, ErrorKind::grid_mismatch, "family and weight grids differ");
  require(family.size() > 0, ErrorKind::empty_family, "ball family is empty");
  const BallSummer mass(w.grid, w.values);
  std::optional<BallSummer> dual;
  std::optional<BallMinimum> minimum;
  if (q > 1.0) {
    std::vector<double> v(w.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(w.values[i], -1.0 / (q - 1.0));
    dual.emplace(w.grid, v);
  } else {
    minimum.emplace(w.grid, w.values);
  }
  AqReport report{q, 0.0, Ball{}, family};
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const DiskProfile& disk = family.levels()[l].disk;
    const auto count = static_cast<long double>(disk.count());
    family.for_each_center(l, [&](std::size_t c) {
      const double avg = static_cast<double>(mass.raw_sum(c, disk) / count);
      const double quotient = q > 1.0 ? avg * std::pow(static_cast<double>(dual->raw_sum(c, disk) / count), q - 1.0)
                                      : avg / minimum->minimum(c, disk);
      if (quotient > report.estimate) {
        report.estimate = quotient;
        report.witness = family.ball(l, c);
      }
    });
  }
  return report;
}

inline AqReport aq_constant(const Weight& w, double q, const BallFamily& family) {
  return aq_constant(w.on(family.grid()), q, family);
}

struct CheckResult {
  double max_ratio = 0.0;
  Ball witness;
};

/// max over the family of w(lambda B) / (lambda^{nq} w(B)).
inline CheckResult doubling_check(const WeightField& w, double q, double lambda, const BallFamily& family) {
  require(lambda >= 1.0, ErrorKind::invalid_argument, "doubling scale must be >= 1");
  require(family.grid() == w.grid, ErrorKind::grid_mismatch, "family and weight grids differ");
  const BallSummer mass(w.grid, w.values);
  const double scale = std::pow(lambda, w.grid.dim() * q);
  CheckResult result;
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const BallLevel& level = family.levels()[l];
    const DiskProfile big(w.grid.dim(), lambda * static_cast<double>(level.radius_cells));
    family.for_each_center(l, [&](std::size_t c) {
      const Ball ball = family.ball(l, c);
      require(ball_inside_domain(w.grid, ball.scaled(lambda)), ErrorKind::scaled_ball_outside_domain,
              "dilated ball leaves the domain");
      const double ratio = static_cast<double>(mass.raw_sum(c, big) / mass.raw_sum(c, level.disk)) / scale;
      if (ratio > result.max_ratio) result = CheckResult{ratio, ball};
    });
  }
  return result;
}

/// (w(E)/w(B)) / (|E|/|B|)^{gamma/(1+gamma)} for an indicator E inside B.
inline double subset_ratio_check(const WeightField& w, const GridFunction& subset, const Ball& ball, double gamma) {
  require(gamma > 0.0, ErrorKind::invalid_argument, "gamma must be positive");
  require(subset.grid() == w.grid, ErrorKind::grid_mismatch, "subset and weight grids differ");
  std::vector<char> in_ball(w.grid.size(), 0);
  double mass_b = 0.0;
  double count_b = 0.0;
  for (std::size_t k : cells_in_ball(w.grid, ball)) {
    in_ball[k] = 1;
    mass_b += w.values[k];
    count_b += 1.0;
  }
  double mass_e = 0.0;
  double count_e = 0.0;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    if (subset[k] == 0.0) continue;
    require(subset[k] == 1.0, ErrorKind::invalid_argument, "subset must be an indicator");
    require(in_ball[k] != 0, ErrorKind::subset_violation, "subset is not contained in the ball");
    mass_e += w.values[k];
    count_e += 1.0;
  }
  if (count_e == 0.0) return 0.0;
  return (mass_e / mass_b) / std::pow(count_e / count_b, gamma / (1.0 + gamma));
}

/// max over the family of (avg_B w^{1+gamma})^{1/(1+gamma)} / avg_B w.
inline CheckResult reverse_holder_check(const WeightField& w, double gamma, const BallFamily& family) {
  require(gamma > 0.0, ErrorKind::invalid_argument, "gamma must be positive");
  require(family.size() > 0, ErrorKind::empty_family, "ball family is empty");
  require(family.grid() == w.grid, ErrorKind::grid_mismatch, "family and weight grids differ");
  std::vector<double> lifted(w.values.size());
  for (std::size_t i = 0; i < lifted.size(); ++i) lifted[i] = std::pow(w.values[i], 1.0 + gamma);
  const BallSummer mass(w.grid, w.values);
  const BallSummer high(w.grid, lifted);
  CheckResult result;
  for (std::size_t l = 0; l < family.levels().size(); ++l) {
    const DiskProfile& disk = family.levels()[l].disk;
    const auto count = static_cast<long double>(disk.count());
    family.for_each_center(l, [&](std::size_t c) {
      const double top = std::pow(static_cast<double>(high.raw_sum(c, disk) / count), 1.0 / (1.0 + gamma));
      const double ratio = top / static_cast<double>(mass.raw_sum(c, disk) / count);
      if (ratio > result.max_ratio) result = CheckResult{ratio, family.ball(l, c)};
    });
  }
  return result;
}

/// The reverse Hoelder ratio on one arbitrary ball.
inline double reverse_holder_ratio(const WeightField& w, double gamma, const Ball& ball) {
  require(gamma > 0.0, ErrorKind::invalid_argument, "gamma must be positive");
  long double high = 0.0L;
  long double mass = 0.0L;
  const auto cells = cells_in_ball(w.grid, ball);
  for (std::size_t k : cells) {
    high += std::pow(w.values[k], 1.0 + gamma);
    mass += w.values[k];
  }
  const auto count = static_cast<long double>(cells.size());
  return std::pow(static_cast<double>(high / count), 1.0 / (1.0 + gamma)) / static_cast<double>(mass / count);
}

struct GammaCalibration {
  std::optional<double> gamma;  // largest rung whose ratio stays under the threshold
  double ratio = 0.0;
};

/// Searches the dyadic ladder 2^-8 .. 2^4 for the largest admissible gamma.
inline GammaCalibration calibrate_reverse_holder(const WeightField& w, const BallFamily& family,
                                                 double threshold = 2.0) {
  GammaCalibration best;
  for (int e = -8; e <= 4; ++e) {
    const double gamma = std::ldexp(1.0, e);
    const double ratio = reverse_holder_check(w, gamma, family).max_ratio;
    if (ratio > threshold) break;
    best = GammaCalibration{gamma, ratio};
  }
  return best;
}

}  // namespace amlab
