#pragma once

// Verification harness: seeded test-function corpora, scenario files, the
// hypothesis gate, norm-ratio studies with refinement and enlargement
// stability, and the structural checks on the norms (embedding chain,
// Morrey consistency, dilation identity).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "amlab/grid.hpp"
#include "amlab/io.hpp"
#include "amlab/norms.hpp"
#include "amlab/operators.hpp"
#include "amlab/parallel.hpp"
#include "amlab/weights.hpp"

namespace amlab {

// ---------------------------------------------------------------------------
// Corpus

/// One generator of the corpus. Kinds: "indicators" (radii x centers balls),
/// "gaussians", "lacunary" (lacunary trig sums under a bump window),
/// "power" (|x|^{-n/alpha} on the unit ball), "steps" (random +-1 dyadic
/// step functions).
struct GeneratorSpec {
  std::string kind;
  std::size_t count = 1;        // members, or centers for indicators
  std::vector<double> radii;    // indicators only
  double alpha = 2.0;           // power only
};

struct CorpusSpec {
  std::vector<GeneratorSpec> generators;
  std::uint64_t seed = 1;

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& g : generators) total += g.kind == "indicators" ? g.count * g.radii.size() : g.count;
    return total;
  }

  /// Twice the members of every random generator; the original members are
  /// reproduced unchanged at the front of each generator's block.
  CorpusSpec enlarged() const {
    CorpusSpec out = *this;
    for (auto& g : out.generators)
      if (g.kind != "power") g.count *= 2;
    return out;
  }
};

struct CorpusMember {
  std::string name;
  GridFunction f;
};

namespace detail {

/// Uniform doubles in [0, 1) from mt19937_64 with an explicit conversion so
/// that corpora agree across standard libraries.
class Uniform {
 public:
  Uniform(std::uint64_t seed, std::uint64_t generator, std::uint64_t member) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(generator), static_cast<std::uint32_t>(member)};
    engine_.seed(seq);
  }
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

 private:
  std::mt19937_64 engine_;
};

inline bool inside_box(const Point& x, int dim, double half) {
  for (int a = 0; a < dim; ++a)
    if (std::abs(x[a]) > half) return false;
  return true;
}

inline std::string fmt(double v) { return format_double(v); }

}  // namespace detail

/// Deterministic corpus on `grid`; every member is supported in [-L/2, L/2]^n.
inline std::vector<CorpusMember> make_corpus(const CorpusSpec& spec, const Grid& grid) {
  const int n = grid.dim();
  const double half = grid.half_width() / 2.0;
  const double h = grid.spacing();
  std::vector<CorpusMember> out;
  for (std::size_t gi = 0; gi < spec.generators.size(); ++gi) {
    const GeneratorSpec& g = spec.generators[gi];
    const std::size_t first = out.size();
    if (g.kind == "indicators") {
      require(!g.radii.empty(), ErrorKind::invalid_argument, "indicator generator needs radii");
      for (double r : g.radii)
        require(r >= h && r < half, ErrorKind::invalid_argument,
                "indicator radius " + detail::fmt(r) + " must lie in [h, L/2)");
      for (std::size_t c = 0; c < g.count; ++c) {
        detail::Uniform u(spec.seed, gi, c);
        Point unit{u(-1.0, 1.0), n == 2 ? u(-1.0, 1.0) : 0.0};
        for (double r : g.radii) {
          Point center{unit[0] * (half - r), unit[1] * (half - r)};
          if (n == 1) center[1] = 0.0;
          out.push_back({"indicator[c=" + std::to_string(c) + ",r=" + detail::fmt(r) + "]",
                         ball_indicator(grid, Ball{center, r})});
        }
      }
    } else if (g.kind == "gaussians") {
      for (std::size_t m = 0; m < g.count; ++m) {
        detail::Uniform u(spec.seed, gi, m);
        const Point c{u(-half / 2, half / 2), n == 2 ? u(-half / 2, half / 2) : 0.0};
        const double sigma = u(half / 16, half / 4);
        const double amp = u(0.5, 2.0);
        out.push_back({"gaussian[" + std::to_string(m) + "]", GridFunction::sample(grid, [&](const Point& x) {
                         if (!detail::inside_box(x, n, half)) return 0.0;
                         const double d = distance(x, c, n);
                         return amp * std::exp(-d * d / (2.0 * sigma * sigma));
                       })});
      }
    } else if (g.kind == "lacunary") {
      // Frequencies (pi/L) 2^k, k = 0..5, fixed by the domain so that the
      // member is the same function on every refinement.
      const double base = std::numbers::pi / grid.half_width();
      for (std::size_t m = 0; m < g.count; ++m) {
        detail::Uniform u(spec.seed, gi, m);
        const double theta = u(0.0, 2.0 * std::numbers::pi);
        const Point dir{n == 2 ? std::cos(theta) : 1.0, n == 2 ? std::sin(theta) : 0.0};
        std::vector<double> amp;
        std::vector<double> phase;
        for (int k = 0; k <= 5; ++k) {
          amp.push_back(u(-1.0, 1.0));
          phase.push_back(u(0.0, 2.0 * std::numbers::pi));
        }
        out.push_back({"lacunary[" + std::to_string(m) + "]", GridFunction::sample(grid, [&](const Point& x) {
                         const double rho = norm(x, n) / half;
                         if (rho >= 1.0) return 0.0;
                         const double bump = std::exp(1.0 - 1.0 / (1.0 - rho * rho));
                         const double s = x[0] * dir[0] + x[1] * dir[1];
                         double v = 0.0;
                         for (int k = 0; k <= 5; ++k) v += amp[k] * std::cos(base * std::ldexp(1.0, k) * s + phase[k]);
                         return bump * v;
                       })});
      }
    } else if (g.kind == "power") {
      require(g.alpha >= 1.0, ErrorKind::invalid_argument, "power profile needs alpha >= 1");
      require(half >= 1.0, ErrorKind::invalid_argument, "power profile needs L >= 2");
      const double e = -static_cast<double>(n) / g.alpha;
      for (std::size_t m = 0; m < g.count; ++m)
        out.push_back({"power[" + std::to_string(m) + ",alpha=" + detail::fmt(g.alpha) + "]", GridFunction::sample(grid, [&](const Point& x) {
                         const double r = norm(x, n);
                         return r < 1.0 ? std::pow(r, e) : 0.0;
                       })});
    } else if (g.kind == "steps") {
      for (std::size_t m = 0; m < g.count; ++m) {
        detail::Uniform u(spec.seed, gi, m);
        const int level = 2 + static_cast<int>(u() * 4.0);  // 4 .. 32 cells per axis
        const std::size_t cells = std::size_t{1} << level;
        std::vector<double> sign(n == 1 ? cells : cells * cells);
        for (double& s : sign) s = u() < 0.5 ? -1.0 : 1.0;
        out.push_back({"steps[" + std::to_string(m) + "]", GridFunction::sample(grid, [&](const Point& x) {
                         if (!detail::inside_box(x, n, half)) return 0.0;
                         auto cell = [&](double t) {
                           const auto c = static_cast<std::size_t>(std::floor((t + half) / (2.0 * half) * cells));
                           return std::min(c, cells - 1);
                         };
                         return n == 1 ? sign[cell(x[0])] : sign[cell(x[0]) * cells + cell(x[1])];
                       })});
      }
    } else {
      throw Error(ErrorKind::unknown_generator, "unknown corpus generator '" + g.kind + "'");
    }
    // Names are unique across generators so that rows can be matched by name.
    for (std::size_t i = first; i < out.size(); ++i) out[i].name = "g" + std::to_string(gi) + ":" + out[i].name;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenarios

inline const std::vector<std::string>& theorem_ids() {
  static const std::vector<std::string> ids{"CZ-strong", "CZ-weak", "Rough", "Marcinkiewicz", "BR-max",
                                            "BR-weak",   "Comm-CZ", "Comm-Rough", "Comm-Marcinkiewicz", "Comm-BR"};
  return ids;
}

inline bool is_weak_theorem(const std::string& id) { return id == "CZ-weak" || id == "BR-weak"; }

struct Scenario {
  std::string theorem;
  int n = 1;
  double L = 8.0;
  std::size_t N = 1024;
  ExponentSet exponents;
  std::string weight = "const:1";
  std::string op = "hilbert";
  CorpusSpec corpus;
  std::vector<double> radii;       // physical; empty: dyadic multiples of the base h
  std::size_t stride_divisor = 0;  // ball-center subsampling, see BallFamily
  bool refine = true;
  bool enlarge = true;
  std::string output;

  Grid grid() const { return Grid(n, L, N); }

  static Scenario from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

namespace detail {

inline double json_exponent(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInfinity;
    throw Error(ErrorKind::parse_error, "bad exponent '" + s + "'");
  }
  return v.get<double>();
}

inline nlohmann::json exponent_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace detail

inline Scenario Scenario::from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.theorem = j.at("theorem").get<std::string>();
    const auto& ids = theorem_ids();
    require(std::find(ids.begin(), ids.end(), s.theorem) != ids.end(), ErrorKind::parse_error,
            "unknown theorem id '" + s.theorem + "'");
    const auto& g = j.at("grid");
    s.n = g.at("n").get<int>();
    s.L = g.at("L").get<double>();
    s.N = g.at("N").get<std::size_t>();
    const auto& e = j.at("exponents");
    s.exponents.q = detail::json_exponent(e.at("q"));
    s.exponents.p = detail::json_exponent(e.at("p"));
    s.exponents.alpha = detail::json_exponent(e.at("alpha"));
    if (e.contains("theta") && !e["theta"].is_null()) s.exponents.theta = detail::json_exponent(e["theta"]);
    if (e.contains("delta") && !e["delta"].is_null()) s.exponents.delta = e["delta"].get<double>();
    if (e.contains("kappa") && !e["kappa"].is_null()) s.exponents.kappa = e["kappa"].get<double>();
    s.weight = j.value("weight", std::string("const:1"));
    s.op = j.at("operator").get<std::string>();
    const auto& c = j.at("corpus");
    s.corpus.seed = c.value("seed", std::uint64_t{1});
    for (const auto& gen : c.at("generators")) {
      GeneratorSpec spec;
      spec.kind = gen.at("kind").get<std::string>();
      spec.count = gen.value("count", std::size_t{1});
      if (gen.contains("centers")) spec.count = gen["centers"].get<std::size_t>();
      if (gen.contains("radii")) spec.radii = gen["radii"].get<std::vector<double>>();
      spec.alpha = gen.value("alpha", 2.0);
      s.corpus.generators.push_back(std::move(spec));
    }
    if (j.contains("radii")) s.radii = j["radii"].get<std::vector<double>>();
    s.stride_divisor = j.value("stride_divisor", std::size_t{0});
    s.refine = j.value("refine", true);
    s.enlarge = j.value("enlarge", true);
    s.output = j.value("output", std::string());
    return s;
  } catch (const nlohmann::json::exception& err) {
    throw Error(ErrorKind::parse_error, std::string("scenario: ") + err.what());
  }
}

inline nlohmann::json Scenario::to_json() const {
  nlohmann::json e{{"q", exponents.q}, {"p", detail::exponent_json(exponents.p)}, {"alpha", exponents.alpha}};
  if (exponents.theta) e["theta"] = detail::exponent_json(*exponents.theta);
  if (exponents.delta) e["delta"] = *exponents.delta;
  if (exponents.kappa) e["kappa"] = *exponents.kappa;
  nlohmann::json gens = nlohmann::json::array();
  for (const auto& g : corpus.generators) {
    nlohmann::json x{{"kind", g.kind}};
    if (g.kind == "indicators") {
      x["centers"] = g.count;
      x["radii"] = g.radii;
    } else {
      x["count"] = g.count;
    }
    if (g.kind == "power") x["alpha"] = g.alpha;
    gens.push_back(x);
  }
  nlohmann::json j{{"theorem", theorem},
                   {"grid", {{"n", n}, {"L", L}, {"N", N}}},
                   {"exponents", e},
                   {"weight", weight},
                   {"operator", op},
                   {"corpus", {{"seed", corpus.seed}, {"generators", gens}}},
                   {"stride_divisor", stride_divisor},
                   {"refine", refine},
                   {"enlarge", enlarge}};
  if (!radii.empty()) j["radii"] = radii;
  if (!output.empty()) j["output"] = output;
  return j;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& err) {
    throw Error(ErrorKind::parse_error, path.string() + ": " + err.what());
  }
  return Scenario::from_json(j);
}

// ---------------------------------------------------------------------------
// Hypothesis gate

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// A-class membership by refinement: the estimate must stay finite and grow by
/// less than `tolerance` when N doubles.
struct ClassCheck {
  double q = 1.0;
  double estimate = 0.0;
  double refined_estimate = 0.0;
  double growth = 0.0;
  bool passed = false;
};

inline ClassCheck weight_class_check(const Weight& w, double q, const Grid& grid, double tolerance = 1.25) {
  ClassCheck c;
  c.q = q;
  c.estimate = aq_constant(w, q, BallFamily::dyadic(grid)).estimate;
  const Grid fine = grid.refined();
  c.refined_estimate = aq_constant(w, q, BallFamily::dyadic(fine)).estimate;
  c.growth = c.refined_estimate / c.estimate;
  c.passed = std::isfinite(c.estimate) && std::isfinite(c.refined_estimate) && c.estimate >= 0.99 &&
             c.growth < tolerance;
  return c;
}

/// BMO membership of a symbol: the estimate must be stable under N -> 2N and
/// under adding the next dyadic generation of balls.
struct BmoCheck {
  double estimate = 0.0;
  double refined_estimate = 0.0;
  double truncated_estimate = 0.0;  // without the largest generation
  bool passed = false;
};

inline BmoCheck symbol_bmo_check(const std::string& symbol, const Grid& grid, double tolerance = 0.25) {
  BallFamily::Options opts;
  opts.stride_divisor = grid.dim() == 2 ? 4 : 0;
  auto estimate = [&](const Grid& g, std::optional<std::size_t> drop_last) {
    BallFamily all = BallFamily::dyadic(g, opts, 0);
    std::optional<std::size_t> kmax;
    if (drop_last) {
      const std::size_t levels = all.levels().size();
      require(levels >= 2, ErrorKind::empty_family, "BMO check needs two ball generations");
      kmax = levels - 2;
    }
    const BallFamily family = BallFamily::dyadic(g, opts, 0, kmax);
    return bmo_norm(make_symbol(symbol, g), family).value;
  };
  BmoCheck c;
  c.estimate = estimate(grid, std::nullopt);
  c.refined_estimate = estimate(grid.refined(), std::nullopt);
  c.truncated_estimate = estimate(grid, 1);
  auto drift = [](double a, double b) { return b == 0.0 ? (a == 0.0 ? 0.0 : kInfinity) : std::abs(a - b) / b; };
  c.passed = std::isfinite(c.estimate) && drift(c.refined_estimate, c.estimate) < tolerance &&
             drift(c.estimate, c.truncated_estimate) < tolerance;
  return c;
}

namespace detail {

inline std::string num(double v) { return std::isinf(v) ? "inf" : format_double(v); }

}  // namespace detail

/// Every hypothesis of the scenario's theorem, checked on the base grid (and
/// its refinement for the weight and symbol classes).
inline std::vector<HypothesisCheck> check_hypotheses(const Scenario& s) {
  std::vector<HypothesisCheck> out;
  auto add = [&](std::string name, bool ok, std::string detail) {
    out.push_back({std::move(name), ok, std::move(detail)});
  };
  const ExponentSet& e = s.exponents;
  const OperatorSpec op = OperatorSpec::parse(s.op);
  using Kind = OperatorSpec::Kind;
  const std::string& t = s.theorem;

  // Operator family expected by the theorem.
  bool kind_ok = false;
  const Kind k = op.kind;
  const Kind bk = op.base ? op.base->kind : k;
  if (t == "CZ-strong" || t == "CZ-weak") kind_ok = k == Kind::hilbert || k == Kind::riesz;
  if (t == "Rough") kind_ok = k == Kind::rough;
  if (t == "Marcinkiewicz") kind_ok = k == Kind::marcinkiewicz;
  if (t == "BR-max") kind_ok = k == Kind::bochner_riesz_max;
  if (t == "BR-weak") kind_ok = k == Kind::bochner_riesz;
  if (t == "Comm-CZ") kind_ok = k == Kind::commutator && (bk == Kind::hilbert || bk == Kind::riesz);
  if (t == "Comm-Rough") kind_ok = k == Kind::commutator && bk == Kind::rough;
  if (t == "Comm-Marcinkiewicz") kind_ok = k == Kind::marcinkiewicz_commutator;
  if (t == "Comm-BR") kind_ok = k == Kind::commutator && bk == Kind::bochner_riesz;
  add("operator", kind_ok, op.to_string() + " for " + t);

  const bool rough_family = t == "Rough" || t == "Marcinkiewicz" || t == "Comm-Rough" || t == "Comm-Marcinkiewicz";
  if (rough_family) add("dimension", s.n == 2, "n = " + std::to_string(s.n));

  // Exponent constraints.
  const bool weak = is_weak_theorem(t);
  bool order = e.q <= e.alpha && e.alpha < e.p;
  std::string order_text = "q <= alpha < p";
  if (weak) {
    order = order && e.q == 1.0;
    order_text = "q = 1, " + order_text;
  } else if (!rough_family) {
    order = order && e.q > 1.0;
    order_text = "1 < " + order_text;
  }
  add("exponents", order,
      order_text + " with q=" + detail::num(e.q) + " alpha=" + detail::num(e.alpha) + " p=" + detail::num(e.p));

  double class_q = e.q;
  if (rough_family) {
    const bool finite_theta = t == "Rough" || t == "Comm-Rough";
    bool theta_ok = e.theta.has_value() && *e.theta > 1.0 && (!finite_theta || std::isfinite(*e.theta));
    double tp = 1.0;
    if (theta_ok) {
      tp = e.theta_conjugate();
      theta_ok = t == "Rough" ? tp <= e.q : tp < e.q;
    }
    add("theta", theta_ok,
        std::string(t == "Rough" ? "theta' <= q" : "theta' < q") + (finite_theta ? ", 1 < theta < inf" : ", 1 < theta <= inf") +
            (e.theta ? " with theta=" + detail::num(*e.theta) : std::string(" (theta missing)")));
    const SphereKernel omega = SphereKernel::parse(op.omega);
    const double mean = omega.sample_mean();
    add("omega", std::abs(mean) <= 1e-12 && std::isfinite(omega.lp_norm(e.theta.value_or(kInfinity))),
        "Omega=" + omega.name() + " mean " + detail::num(mean));
    class_q = e.q / tp;
  }
  if (t == "BR-max" || t == "BR-weak" || t == "Comm-BR") {
    const double need = (s.n - 1) / 2.0;
    const double delta = k == Kind::commutator ? op.base->delta : op.delta;
    const bool positive = delta > 0.0;
    const bool ok = positive && (t == "Comm-BR" ? delta >= need : delta == need);
    add("delta", ok,
        std::string(t == "Comm-BR" ? "delta >= (n-1)/2" : "delta = (n-1)/2") + " with delta=" + detail::num(delta) +
            ", n=" + std::to_string(s.n));
    if (e.delta) add("delta-consistency", *e.delta == delta, "exponents.delta matches the operator");
  }
  if (weak) class_q = 1.0;

  const Weight w = Weight::parse(s.weight);
  const ClassCheck cls = weight_class_check(w, class_q, s.grid());
  add("weight-class", cls.passed,
      "A_" + detail::num(class_q) + " estimate " + detail::num(cls.estimate) + " -> " +
          detail::num(cls.refined_estimate) + " under refinement (growth " + detail::num(cls.growth) + ")");

  if (!op.symbol.empty()) {
    const BmoCheck b = symbol_bmo_check(op.symbol, s.grid());
    add("symbol-bmo", b.passed,
        "b=" + op.symbol + " BMO estimate " + detail::num(b.estimate) + ", refined " +
            detail::num(b.refined_estimate) + ", without largest balls " + detail::num(b.truncated_estimate));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ratio studies

struct RatioRow {
  std::string stage;  // base, refined, enlarged
  std::size_t index = 0;
  std::string name;
  double input_norm = 0.0;
  double output_norm = 0.0;
  double ratio = 0.0;
  bool skipped = false;
};

struct StageResult {
  std::size_t N = 0;
  std::size_t members = 0;
  double max_ratio = 0.0;
  std::optional<std::size_t> witness;
  std::string witness_name;
};

struct VerificationReport {
  Scenario scenario;
  std::vector<HypothesisCheck> hypotheses;
  bool hypotheses_passed = false;
  double aq_estimate = 0.0;
  std::vector<RatioRow> rows;
  std::vector<std::string> notices;
  StageResult base;
  std::optional<StageResult> refined;
  std::optional<StageResult> enlarged;
  double refinement_drift = 0.0;
  double enlargement_drift = 0.0;
  bool bounded = false;

  std::string status() const {
    if (!hypotheses_passed) return "hypothesis-violation";
    return bounded ? "bounded" : "unstable";
  }

  nlohmann::json summary() const {
    nlohmann::json hyp = nlohmann::json::array();
    for (const auto& h : hypotheses) hyp.push_back({{"name", h.name}, {"passed", h.passed}, {"detail", h.detail}});
    auto stage = [](const StageResult& s) {
      nlohmann::json j{{"N", s.N}, {"members", s.members}, {"max_ratio", s.max_ratio}};
      if (s.witness) {
        j["witness_index"] = *s.witness;
        j["witness"] = s.witness_name;
      }
      return j;
    };
    nlohmann::json j{{"scenario", scenario.to_json()}, {"status", status()}, {"hypotheses", hyp},
                     {"aq_estimate", aq_estimate}, {"notices", notices}};
    if (hypotheses_passed) {
      j["base"] = stage(base);
      j["max_ratio"] = base.max_ratio;
      if (refined) {
        j["refined"] = stage(*refined);
        j["refinement_drift"] = refinement_drift;
      }
      if (enlarged) {
        j["enlarged"] = stage(*enlarged);
        j["enlargement_drift"] = enlargement_drift;
      }
      j["stability_factor"] = std::max(refinement_drift, enlargement_drift);
      j["bounded"] = bounded;
    }
    return j;
  }

  std::string csv() const {
    std::string out = "stage,index,name,input_norm,output_norm,ratio,skipped\n";
    for (const auto& r : rows)
      out += r.stage + "," + std::to_string(r.index) + ",\"" + r.name + "\"," + detail::num(r.input_norm) + "," +
             detail::num(r.output_norm) + "," + detail::num(r.ratio) + "," + (r.skipped ? "1" : "0") + "\n";
    return out;
  }
};

namespace detail {

inline BallFamily scenario_family(const Scenario& s, const Grid& grid) {
  BallFamily::Options opts;
  opts.stride_divisor = s.stride_divisor;
  std::vector<double> radii = s.radii;
  if (radii.empty()) {
    const Grid base = s.grid();
    for (std::size_t m = 1; 2 * m <= base.points(); m *= 2) radii.push_back(static_cast<double>(m) * base.spacing());
  }
  std::vector<std::size_t> cells;
  for (double r : radii) cells.push_back(BallFamily::radius_to_cells(grid, r));
  try {
    return BallFamily::from_radius_cells(grid, cells, opts);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::empty_family) throw Error(ErrorKind::empty_radii, "no scenario radius fits");
    throw;
  }
}

}  // namespace detail

/// Input and output norms of the given members on `grid`; rows in `known`
/// whose name matches are copied instead of recomputed. Members with input
/// norm below 1e-14 are marked skipped.
inline std::vector<RatioRow> study_members(const Scenario& s, const Grid& grid,
                                           const std::vector<CorpusMember>& members, const std::string& stage,
                                           const std::vector<RatioRow>& known = {}) {
  const WeightField w = Weight::parse(s.weight).on(grid);
  const OperatorSpec op = OperatorSpec::parse(s.op);
  const bool weak = is_weak_theorem(s.theorem);
  std::vector<RatioRow> rows(members.size());
  const BallFamily family = detail::scenario_family(s, grid);
  std::map<std::string, const RatioRow*> reuse;
  for (const auto& k : known) reuse[k.name] = &k;
  parallel_for(members.size(), [&](std::size_t i) {
    RatioRow r;
    r.stage = stage;
    r.index = i;
    r.name = members[i].name;
    if (const auto it = reuse.find(r.name); it != reuse.end()) {
      r.input_norm = it->second->input_norm;
      r.output_norm = it->second->output_norm;
      r.ratio = it->second->ratio;
      r.skipped = it->second->skipped;
      rows[i] = r;
      return;
    }
    r.input_norm = amalgam_norm(members[i].f, w, s.exponents, family).value;
    if (r.input_norm < 1e-14) {
      r.skipped = true;
      rows[i] = r;
      return;
    }
    const GridFunction g = apply(op, members[i].f);
    r.output_norm = weak ? weak_amalgam_norm(g, w, s.exponents, family).value
                         : amalgam_norm(g, w, s.exponents, family).value;
    r.ratio = r.output_norm / r.input_norm;
    rows[i] = r;
  });
  return rows;
}

namespace detail {

inline std::vector<RatioRow> study_stage(const Scenario& s, const Grid& grid, const CorpusSpec& corpus,
                                         const std::string& stage, const std::vector<RatioRow>& known) {
  return study_members(s, grid, make_corpus(corpus, grid), stage, known);
}

inline StageResult summarize(const std::vector<RatioRow>& rows, std::size_t N) {
  StageResult s;
  s.N = N;
  s.members = rows.size();
  for (const auto& r : rows) {
    if (r.skipped) continue;
    if (!s.witness || r.ratio > s.max_ratio) {
      s.max_ratio = r.ratio;
      s.witness = r.index;
      s.witness_name = r.name;
    }
  }
  return s;
}

inline double relative_drift(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 0.0 : kInfinity;
  return std::abs(a - b) / b;
}

}  // namespace detail

/// Runs the scenario: hypothesis gate, then the base study, its refinement
/// (N -> 2N) and its corpus enlargement. A failed gate stops before any
/// operator is applied.
inline VerificationReport ratio_study(const Scenario& s, double drift_tolerance = 0.25) {
  VerificationReport rep;
  rep.scenario = s;
  s.exponents.validate();
  const Grid grid = s.grid();
  rep.hypotheses = check_hypotheses(s);
  rep.hypotheses_passed =
      std::all_of(rep.hypotheses.begin(), rep.hypotheses.end(), [](const auto& h) { return h.passed; });
  rep.aq_estimate = aq_constant(Weight::parse(s.weight), s.exponents.q, BallFamily::dyadic(grid)).estimate;
  if (!rep.hypotheses_passed) return rep;

  require(s.corpus.size() > 0, ErrorKind::invalid_argument, "scenario corpus is empty");
  const auto base = detail::study_stage(s, grid, s.corpus, "base", {});
  rep.rows = base;
  rep.base = detail::summarize(base, grid.points());
  for (const auto& r : base)
    if (r.skipped) rep.notices.push_back("degenerate-input: " + r.name + " skipped (input norm below 1e-14)");
  require(rep.base.witness.has_value(), ErrorKind::invalid_argument, "every corpus member is degenerate");

  bool stable = std::isfinite(rep.base.max_ratio);
  if (s.refine) {
    const auto fine = detail::study_stage(s, grid.refined(), s.corpus, "refined", {});
    rep.rows.insert(rep.rows.end(), fine.begin(), fine.end());
    rep.refined = detail::summarize(fine, 2 * grid.points());
    rep.refinement_drift = detail::relative_drift(rep.refined->max_ratio, rep.base.max_ratio);
    stable = stable && rep.refinement_drift < drift_tolerance;
  }
  if (s.enlarge) {
    const auto big = detail::study_stage(s, grid, s.corpus.enlarged(), "enlarged", base);
    rep.rows.insert(rep.rows.end(), big.begin(), big.end());
    rep.enlarged = detail::summarize(big, grid.points());
    rep.enlargement_drift = detail::relative_drift(rep.enlarged->max_ratio, rep.base.max_ratio);
    stable = stable && rep.enlargement_drift < drift_tolerance;
  }
  rep.bounded = stable;
  return rep;
}

/// Writes <prefix>.csv and <prefix>.json atomically.
inline void write_report(const VerificationReport& rep, const std::filesystem::path& prefix) {
  std::filesystem::path csv = prefix;
  csv += ".csv";
  std::filesystem::path json = prefix;
  json += ".json";
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  write_file_atomic(csv, rep.csv());
  write_file_atomic(json, rep.summary().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Structural checks on the norms

struct EmbeddingResult {
  double lebesgue = 0.0;  // ||f||_{alpha_w}
  double amalgam_p1 = 0.0;
  double amalgam_p2 = 0.0;
  double morrey = 0.0;  // kappa = 1 - q/alpha
  /// amalgam_p1 / lebesgue, amalgam_p2 / amalgam_p1, morrey / amalgam_p2
  /// (0 when the denominator vanishes).
  std::array<double, 3> ratios{};
};

/// The chain L^alpha -> (L^q, L^p1)^alpha -> (L^q, L^p2)^alpha -> Morrey on
/// one ball family.
inline EmbeddingResult embedding_check(const GridFunction& f, double q, double p1, double p2, double alpha,
                                       const WeightField& w, const BallFamily& family) {
  require(q <= alpha && alpha <= p1 && p1 < p2, ErrorKind::exponent_order_violation,
          "embedding chain needs q <= alpha <= p1 < p2");
  EmbeddingResult r;
  r.lebesgue = lp_norm(f, w, alpha).value;
  r.amalgam_p1 = amalgam_norm(f, w, ExponentSet{q, p1, alpha}, family).value;
  r.amalgam_p2 = amalgam_norm(f, w, ExponentSet{q, p2, alpha}, family).value;
  r.morrey = q < alpha ? morrey_norm(f, w, q, 1.0 - q / alpha, family).value : r.amalgam_p2;
  auto ratio = [](double a, double b) { return b > 0.0 ? a / b : 0.0; };
  r.ratios = {ratio(r.amalgam_p1, r.lebesgue), ratio(r.amalgam_p2, r.amalgam_p1), ratio(r.morrey, r.amalgam_p2)};
  return r;
}

/// |amalgam(p = inf) - morrey(kappa = 1 - q/alpha)| / max(., 1e-14) on the
/// same balls.
inline double morrey_consistency_check(const GridFunction& f, const WeightField& w, double q, double alpha,
                                       const BallFamily& amalgam_family, const BallFamily& morrey_family) {
  require(q < alpha, ErrorKind::exponent_order_violation, "consistency check needs q < alpha");
  require(amalgam_family.same_balls(morrey_family), ErrorKind::family_mismatch,
          "the two sweeps must use the same balls");
  const double a = amalgam_norm(f, w, ExponentSet{q, kInfinity, alpha}, amalgam_family).value;
  const double m = morrey_norm(f, w, q, 1.0 - q / alpha, morrey_family).value;
  return std::abs(a - m) / std::max(std::max(a, m), 1e-14);
}

inline double morrey_consistency_check(const GridFunction& f, const WeightField& w, double q, double alpha,
                                       const BallFamily& family) {
  return morrey_consistency_check(f, w, q, alpha, family, family);
}

struct DilationIdentity {
  double dilated = 0.0;   // ||delta^alpha_r f||_{q,p} computed on the dilated samples
  double rescaled = 0.0;  // r^{n(1/alpha - 1/q - 1/p)} (int ||f chi_B(y,r)||_q^p dy)^{1/p}
};

inline DilationIdentity dilation_identity(const GridFunction& f, double r, double alpha, double q, double p) {
  const int n = f.grid().dim();
  DilationIdentity d;
  d.dilated = wiener_amalgam_norm(dilate_rescaled(f, r, alpha), q, p, 1.0);
  const double expo = n * (1.0 / alpha - 1.0 / q - (std::isinf(p) ? 0.0 : 1.0 / p));
  d.rescaled = std::pow(r, expo) * wiener_amalgam_norm(f, q, p, r);
  return d;
}

}  // namespace amlab
