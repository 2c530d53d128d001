// Command-line front end: norms, weight checks, operator application,
// scenario verification and corpus export.
//
// Exit status: 0 success, 1 computation or hypothesis failure (reports are
// still written), 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "amlab/amlab.hpp"

namespace {

using namespace amlab;

constexpr int kUsage = 2;
constexpr int kFailure = 1;

struct GridOption {
  std::string text = "1,8,1024";

  Grid parse() const {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
    if (parts.size() != 3) throw Error(ErrorKind::parse_error, "--grid expects n,L,N, got '" + text + "'");
    try {
      return Grid(std::stoi(parts[0]), std::stod(parts[1]), static_cast<std::size_t>(std::stoul(parts[2])));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::parse_error, "--grid expects n,L,N, got '" + text + "'");
    }
  }
};

double parse_exponent(const std::string& s, const std::string& flag) {
  if (s == "inf" || s == "infinity") return kInfinity;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorKind::parse_error, flag + " got '" + s + "'");
}

std::string number(double v) {
  std::ostringstream ss;
  ss.precision(17);
  if (std::isinf(v))
    ss << "inf";
  else
    ss << v;
  return ss.str();
}

// ---------------------------------------------------------------------------

struct NormArgs {
  std::string kind;
  std::string q = "1";
  std::string p = "inf";
  std::string alpha;
  std::optional<double> kappa;
  std::optional<double> r;
  std::string weight = "const:1";
  std::string input;
  std::string output;
  std::vector<double> radii;
  std::size_t stride_divisor = 0;
};

int run_norm(const NormArgs& a) {
  const GridFunction f = read_awg(a.input);
  const Grid& g = f.grid();
  const WeightField w = Weight::parse(a.weight).on(g);
  const double q = parse_exponent(a.q, "--q");
  const double p = parse_exponent(a.p, "--p");
  const double alpha = a.alpha.empty() ? q : parse_exponent(a.alpha, "--alpha");
  BallFamily::Options opts;
  opts.stride_divisor = a.stride_divisor;
  auto family = [&] {
    if (!a.radii.empty()) return BallFamily::from_radii(g, a.radii, opts);
    return BallFamily::dyadic(g, opts);
  };
  NormValue v;
  if (a.kind == "lp") {
    v = lp_norm(f, w, q);
  } else if (a.kind == "weak") {
    v = weak_norm(f, w, q);
  } else if (a.kind == "morrey") {
    v = morrey_norm(f, w, q, a.kappa.value_or(1.0 - q / alpha), family());
  } else if (a.kind == "amalgam") {
    v = a.r ? amalgam_norm_at_r(f, w, ExponentSet{q, p, alpha}, *a.r, opts)
            : amalgam_norm(f, w, ExponentSet{q, p, alpha}, family());
  } else if (a.kind == "weak_amalgam") {
    v = weak_amalgam_norm(f, w, ExponentSet{q, p, alpha}, family());
  } else if (a.kind == "bmo") {
    v = bmo_norm(f, family());
  } else {
    throw Error(ErrorKind::parse_error, "--kind got '" + a.kind + "'");
  }
  std::cout << number(v.value) << "\n";
  const std::string out = a.output.empty() ? a.input + ".norm.csv" : a.output;
  write_file_atomic(out, csv_header() + csv_row(v, g.dim()));
  return 0;
}

// ---------------------------------------------------------------------------

struct WeightArgs {
  std::string check = "a_q";
  double q = 2.0;
  std::string weight;
  GridOption grid;
  unsigned refine = 0;
  double lambda = 2.0;
  double gamma = 1.0;
  double tolerance = 1.25;
  std::string output;
};

int run_weight(const WeightArgs& a) {
  const Weight w = Weight::parse(a.weight);
  Grid g = a.grid.parse();
  nlohmann::json report{{"check", a.check}, {"weight", w.spec()}, {"q", a.q}};
  nlohmann::json levels = nlohmann::json::array();
  bool diverges = false;
  std::optional<double> previous;
  for (unsigned level = 0; level <= a.refine; ++level, g = g.refined()) {
    const BallFamily family = BallFamily::dyadic(g);
    const WeightField field = w.on(g);
    nlohmann::json row{{"N", g.points()}};
    double value = 0.0;
    if (a.check == "a_q") {
      const AqReport r = aq_constant(field, a.q, family);
      value = r.estimate;
      row["witness_center"] = {r.witness.center[0], r.witness.center[1]};
      row["witness_radius"] = r.witness.radius;
    } else if (a.check == "doubling") {
      BallFamily::Options opts;
      opts.containment_scale = a.lambda;
      value = doubling_check(field, a.q, a.lambda, BallFamily::dyadic(g, opts)).max_ratio;
    } else if (a.check == "reverse_holder") {
      value = reverse_holder_check(field, a.gamma, family).max_ratio;
      const auto cal = calibrate_reverse_holder(field, family);
      if (cal.gamma) row["calibrated_gamma"] = *cal.gamma;
    } else {
      throw Error(ErrorKind::parse_error, "--check got '" + a.check + "'");
    }
    row["value"] = value;
    if (previous) {
      const double growth = value / *previous;
      row["growth"] = growth;
      if (!(growth < a.tolerance)) diverges = true;
    }
    previous = value;
    levels.push_back(row);
    std::cout << "N=" << g.points() << " " << a.check << "=" << number(value) << "\n";
  }
  report["levels"] = levels;
  report["diverges_under_refinement"] = diverges;
  const std::string out = a.output.empty() ? "weight_report.json" : a.output;
  write_file_atomic(out, report.dump(2) + "\n");
  if (diverges) {
    std::cerr << "weight " << w.spec() << ": " << a.check << " estimate diverges under refinement\n";
    return kFailure;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ApplyArgs {
  std::string op;
  std::string input;
  std::string output;
  std::optional<double> epsilon;
};

int run_apply(const ApplyArgs& a) {
  OperatorSpec spec = OperatorSpec::parse(a.op);
  spec.epsilon = a.epsilon;
  if (spec.base && a.epsilon) {
    auto base = *spec.base;
    base.epsilon = a.epsilon;
    spec.base = std::make_shared<const OperatorSpec>(base);
  }
  const GridFunction f = read_awg(a.input);
  write_awg(a.output, apply(spec, f));
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string scenario;
  std::string output;
  std::optional<std::uint64_t> seed;
};

int run_verify(const VerifyArgs& a) {
  Scenario s = load_scenario(a.scenario);
  if (a.seed) s.corpus.seed = *a.seed;
  std::string prefix = a.output.empty() ? s.output : a.output;
  if (prefix.empty()) prefix = std::filesystem::path(a.scenario).replace_extension().string() + ".report";
  const VerificationReport rep = ratio_study(s);
  write_report(rep, prefix);
  std::cout << rep.summary().dump(2) << "\n";
  if (rep.status() != "bounded") {
    std::cerr << "scenario " << s.theorem << ": " << rep.status() << "\n";
    return kFailure;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct CorpusArgs {
  std::string scenario;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

int run_corpus(const CorpusArgs& a) {
  Scenario s = load_scenario(a.scenario);
  if (a.seed) s.corpus.seed = *a.seed;
  const auto members = make_corpus(s.corpus, s.grid());
  std::filesystem::create_directories(a.out_dir);
  std::string index = "index,name,file\n";
  for (std::size_t i = 0; i < members.size(); ++i) {
    const std::string file = "member_" + std::to_string(i) + ".awg";
    write_awg(std::filesystem::path(a.out_dir) / file, members[i].f);
    index += std::to_string(i) + ",\"" + members[i].name + "\"," + file + "\n";
  }
  write_file_atomic(std::filesystem::path(a.out_dir) / "index.csv", index);
  std::cout << members.size() << " functions written to " << a.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted amalgam-space laboratory"};
  app.require_subcommand(1);
  std::optional<std::size_t> threads;
  app.add_option("--threads", threads, "worker cap (falls back to AMALGAM_LAB_THREADS)");

  NormArgs norm;
  auto* norm_cmd = app.add_subcommand("norm", "compute one norm of an AWG1 grid function");
  norm_cmd->add_option("--kind", norm.kind, "lp, weak, morrey, amalgam, weak_amalgam, bmo")->required();
  norm_cmd->add_option("--q", norm.q);
  norm_cmd->add_option("--p", norm.p, "outer exponent or inf");
  norm_cmd->add_option("--alpha", norm.alpha);
  norm_cmd->add_option("--kappa", norm.kappa);
  norm_cmd->add_option("--r", norm.r, "single radius for the amalgam norm");
  norm_cmd->add_option("--weight", norm.weight);
  norm_cmd->add_option("--input", norm.input)->required();
  norm_cmd->add_option("--output", norm.output, "CSV file (default <input>.norm.csv)");
  norm_cmd->add_option("--radii", norm.radii, "explicit radii instead of the dyadic family");
  norm_cmd->add_option("--stride-divisor", norm.stride_divisor);

  WeightArgs weight;
  auto* weight_cmd = app.add_subcommand("weight", "check a weight: a_q, doubling, reverse_holder");
  weight_cmd->add_option("--check", weight.check);
  weight_cmd->add_option("--q", weight.q);
  weight_cmd->add_option("--weight", weight.weight)->required();
  weight_cmd->add_option("--grid", weight.grid.text, "n,L,N");
  weight_cmd->add_option("--refine", weight.refine, "number of N -> 2N refinements");
  weight_cmd->add_option("--lambda", weight.lambda);
  weight_cmd->add_option("--gamma", weight.gamma);
  weight_cmd->add_option("--tolerance", weight.tolerance, "largest accepted growth per refinement");
  weight_cmd->add_option("--output", weight.output, "JSON report (default weight_report.json)");

  ApplyArgs apply_args;
  auto* apply_cmd = app.add_subcommand("apply", "apply an operator to an AWG1 grid function");
  apply_cmd->add_option("--op", apply_args.op)->required();
  apply_cmd->add_option("--input", apply_args.input)->required();
  apply_cmd->add_option("--output", apply_args.output)->required();
  apply_cmd->add_option("--epsilon", apply_args.epsilon, "truncation radius (default 2h)");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "run a theorem scenario");
  verify_cmd->add_option("--scenario", verify.scenario)->required();
  verify_cmd->add_option("--output", verify.output, "report prefix");
  verify_cmd->add_option("--seed", verify.seed);

  CorpusArgs corpus;
  auto* corpus_cmd = app.add_subcommand("corpus", "export a scenario's corpus as AWG1 files");
  corpus_cmd->add_option("--scenario", corpus.scenario)->required();
  corpus_cmd->add_option("--out-dir", corpus.out_dir)->required();
  corpus_cmd->add_option("--seed", corpus.seed);

  // CLI11 reports a missing subcommand without naming the stray token.
  for (int i = 1; i < argc; ++i) {
    const std::string token = argv[i];
    if (token == "--threads") {
      ++i;
      continue;
    }
    if (token.rfind("-", 0) == 0) continue;
    if (!app.get_subcommand_no_throw(token)) {
      std::cerr << "unknown command '" << token << "'\nRun with --help for more information.\n";
      return kUsage;
    }
    break;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (!threads) {
    if (const char* env = std::getenv("AMALGAM_LAB_THREADS")) {
      try {
        threads = static_cast<std::size_t>(std::stoul(env));
      } catch (const std::logic_error&) {
        std::cerr << "AMALGAM_LAB_THREADS: expected a count, got '" << env << "'\n";
        return kUsage;
      }
    }
  }
  if (threads) set_thread_limit(*threads);

  try {
    if (*norm_cmd) return run_norm(norm);
    if (*weight_cmd) return run_weight(weight);
    if (*apply_cmd) return run_apply(apply_args);
    if (*verify_cmd) return run_verify(verify);
    if (*corpus_cmd) return run_corpus(corpus);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.kind() == ErrorKind::parse_error ? kUsage : kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
