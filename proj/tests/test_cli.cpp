// End-to-end checks of the amlab binary.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "amlab/io.hpp"
#include "amlab/verify.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace amlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const std::string name = ::testing::UnitTest::GetInstance()->current_test_info()->name();
    dir_ = fs::temp_directory_path() / ("amlab_cli_" + name);
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Outcome run(const std::string& args, const std::string& env = "") const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && env -u AMALGAM_LAB_THREADS " + env + " '" + AMLAB_CLI_PATH +
                            "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
  }

  // A CZ-strong scenario small enough to run in well under a second.
  fs::path small_scenario(const std::string& weight = "power:0.5") const {
    Scenario s;
    s.theorem = "CZ-strong";
    s.N = 256;
    s.exponents = ExponentSet{2.0, 6.0, 3.0};
    s.weight = weight;
    s.op = "hilbert";
    s.corpus.seed = 5;
    GeneratorSpec g;
    g.kind = "gaussians";
    g.count = 3;
    s.corpus.generators.push_back(g);
    g.kind = "steps";
    g.count = 2;
    s.corpus.generators.push_back(g);
    const auto p = path("small.json");
    write_file_atomic(p, s.to_json().dump(2));
    return p;
  }

  fs::path dir_;
};

GridFunction sample_input() {
  const Grid g = make_grid(1, 8.0, 512);
  return test::gaussian(g, 0.6, {0.4, 0.0}) + (-0.5) * test::interval(g, -2.0, -1.0);
}

double parse_double(const std::string& s) {
  std::istringstream in(s);
  double v = 0.0;
  in >> v;
  return v;
}

}  // namespace

TEST_F(Cli, NormPrintsValueAndWritesCsv) {
  const auto f = sample_input();
  write_awg(path("f.awg"), f);
  const Outcome r = run("norm --kind amalgam --q 2 --p 4 --alpha 3 --weight power:0.5 --input f.awg");
  ASSERT_EQ(r.code, 0) << r.err;
  const double expect =
      amalgam_norm(f, Weight::power(0.5).on(f.grid()), ExponentSet{2.0, 4.0, 3.0}, BallFamily::dyadic(f.grid())).value;
  EXPECT_EQ(parse_double(r.out), expect);
  const std::string csv = read_file(path("f.awg.norm.csv"));
  EXPECT_EQ(csv.rfind(csv_header(), 0), 0u);
  EXPECT_NE(csv.find("amalgam"), std::string::npos);

  for (const char* kind : {"lp", "weak", "morrey", "weak_amalgam", "bmo"}) {
    const Outcome k = run(std::string("norm --kind ") + kind + " --q 2 --alpha 3 --p 4 --input f.awg --output " + kind + ".csv");
    EXPECT_EQ(k.code, 0) << kind << ": " << k.err;
    EXPECT_TRUE(fs::exists(path(std::string(kind) + ".csv")));
  }
}

TEST_F(Cli, ApplyThenNormIsBitExact) {
  const auto f = sample_input();
  write_awg(path("f.awg"), f);
  for (const char* op : {"hilbert", "br:delta=0.5,R=6", "comm:hilbert,b=log"}) {
    const Outcome a = run(std::string("apply --op '") + op + "' --input f.awg --output g.awg");
    ASSERT_EQ(a.code, 0) << a.err;
    const auto g = apply(OperatorSpec::parse(op), f);
    EXPECT_EQ(encode_awg(read_awg(path("g.awg"))), encode_awg(g)) << op;
    const Outcome n = run("norm --kind amalgam --q 2 --p 6 --alpha 3 --weight power:0.5 --input g.awg");
    ASSERT_EQ(n.code, 0) << n.err;
    const double expect =
        amalgam_norm(g, Weight::power(0.5).on(f.grid()), ExponentSet{2.0, 6.0, 3.0}, BallFamily::dyadic(f.grid())).value;
    EXPECT_EQ(parse_double(n.out), expect) << op;
  }
}

TEST_F(Cli, WeightCheckReportsDivergence) {
  const Outcome bad = run("weight --check a_q --q 2 --weight power:2.0 --refine 2");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("diverges"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(path("weight_report.json")));
  EXPECT_TRUE(j["diverges_under_refinement"].get<bool>());
  ASSERT_EQ(j["levels"].size(), 3u);
  EXPECT_GE(j["levels"][1]["growth"].get<double>(), 1.5);

  const Outcome good = run("weight --check a_q --q 2 --weight power:0.5 --refine 2 --output ok.json");
  EXPECT_EQ(good.code, 0) << good.err;
  EXPECT_FALSE(nlohmann::json::parse(read_file(path("ok.json")))["diverges_under_refinement"].get<bool>());

  EXPECT_EQ(run("weight --check reverse_holder --weight power:0.5 --refine 1 --output rh.json").code, 0);
  EXPECT_EQ(run("weight --check doubling --lambda 2 --weight const:1 --grid 1,8,256 --output d.json").code, 0);
  const auto d = nlohmann::json::parse(read_file(path("d.json")));
  EXPECT_LE(d["levels"][0]["value"].get<double>(), 1.0);  // |2B| / (2^{nq} |B|) with q = 2
  EXPECT_EQ(run("weight --check sharpness --weight const:1").code, 2);
}

TEST_F(Cli, VerifyIsByteReproducible) {
  const auto scenario = small_scenario();
  const Outcome a = run("verify --scenario " + scenario.string() + " --output a");
  const Outcome b = run("verify --scenario " + scenario.string() + " --output b");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(read_file(path("a.json")), read_file(path("b.json")));
  EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
  const auto j = nlohmann::json::parse(read_file(path("a.json")));
  EXPECT_EQ(j["status"], "bounded");
  EXPECT_TRUE(j.contains("max_ratio"));
  EXPECT_TRUE(j.contains("stability_factor"));

  const Outcome c = run("verify --scenario " + scenario.string() + " --output c --seed 6");
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(read_file(path("a.csv")), read_file(path("c.csv")));
  const Outcome d = run("--threads 1 verify --scenario " + scenario.string() + " --output d");
  EXPECT_EQ(read_file(path("a.json")), read_file(path("d.json")));
}

TEST_F(Cli, HypothesisViolationStillWritesReport) {
  const auto scenario = small_scenario("power:2");
  const Outcome r = run("verify --scenario " + scenario.string() + " --output bad");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("hypothesis-violation"), std::string::npos);
  const auto j = nlohmann::json::parse(read_file(path("bad.json")));
  EXPECT_EQ(j["status"], "hypothesis-violation");
  EXPECT_EQ(read_file(path("bad.csv")), "stage,index,name,input_norm,output_norm,ratio,skipped\n");
}

TEST_F(Cli, CorpusExport) {
  const auto scenario = small_scenario();
  const Outcome r = run("corpus --scenario " + scenario.string() + " --out-dir members");
  ASSERT_EQ(r.code, 0) << r.err;
  const Scenario s = load_scenario(scenario);
  const auto expect = make_corpus(s.corpus, s.grid());
  for (std::size_t i = 0; i < expect.size(); ++i)
    EXPECT_EQ(encode_awg(read_awg(path("members/member_" + std::to_string(i) + ".awg"))), encode_awg(expect[i].f));
  EXPECT_NE(read_file(path("members/index.csv")).find(expect.back().name), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitTwoAndNameTheToken) {
  write_awg(path("f.awg"), sample_input());
  Outcome r = run("norm --kind lp --input f.awg --bogus 3");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bogus"), std::string::npos) << r.err;

  r = run("frobnicate");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("frobnicate"), std::string::npos) << r.err;

  r = run("norm --kind sobolev --input f.awg");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("sobolev"), std::string::npos) << r.err;

  r = run("norm --kind lp --q abc --input f.awg");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("abc"), std::string::npos) << r.err;

  r = run("apply --op 'fourier' --input f.awg --output g.awg");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(path("g.awg")));

  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("norm --input f.awg").code, 2);
}

TEST_F(Cli, ComputationErrorsExitOne) {
  EXPECT_EQ(run("norm --kind lp --input missing.awg").code, 1);
  write_file_atomic(path("junk.awg"), "junk");
  EXPECT_EQ(run("norm --kind lp --input junk.awg").code, 2);
  write_awg(path("f.awg"), sample_input());
  EXPECT_EQ(run("norm --kind amalgam --radii 50 --input f.awg").code, 1);
}

TEST_F(Cli, ThreadEnvironmentFallback) {
  write_awg(path("f.awg"), sample_input());
  const std::string args = "norm --kind amalgam --q 2 --p 4 --alpha 3 --input f.awg";
  const Outcome base = run(args);
  ASSERT_EQ(base.code, 0);
  const Outcome env = run(args, "AMALGAM_LAB_THREADS=2");
  EXPECT_EQ(env.code, 0) << env.err;
  EXPECT_EQ(env.out, base.out);
  const Outcome flag = run("--threads 3 " + args, "AMALGAM_LAB_THREADS=nonsense");
  EXPECT_EQ(flag.code, 0) << flag.err;
  EXPECT_EQ(flag.out, base.out);
  const Outcome bad = run(args, "AMALGAM_LAB_THREADS=nonsense");
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("nonsense"), std::string::npos);
}
