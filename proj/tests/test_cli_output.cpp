#include "smi/output.hpp"

#include "smi/models.hpp"
#include "smi/rng.hpp"

#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace smi;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
  std::string cmd = std::string(SMI_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CommandResult res;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), int(buf.size()), pipe)) res.output += buf.data();
  int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("smi_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Numeric payload of a CSV: everything except comment lines.
std::string csv_numeric_body(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::string line, body;
  while (std::getline(in, line))
    if (line.empty() || line[0] != '#') body += line + "\n";
  return body;
}

}  // namespace

TEST_CASE("format_double: shortest round-trip representation") {
  for (double v : {0.1, 1.0 / 3.0, 100.0 / 10201.0, 1e-17, 12345.0, -2.5e8})
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("config: serialize/parse round-trips losslessly") {
  std::map<std::string, std::string> kv{{"experiment", "biased-mean"},
                                        {"reps", "250"},
                                        {"seed", "77"},
                                        {"grid", "0.1:0.05:0.9"},
                                        {"scale_by_n", "0"}};
  auto round = parse_config_text(serialize_config(kv));
  CHECK(round == kv);
  CHECK(config_hash(serialize_config(kv)) == config_hash(serialize_config(round)));
  auto kv2 = kv;
  kv2["reps"] = "251";
  CHECK(config_hash(serialize_config(kv)) != config_hash(serialize_config(kv2)));
}

TEST_CASE("write_risk_csv: strict reader parses and payload is reproducible") {
  std::vector<RiskEstimate> rows{{0.1, "cut", 0.0098, 0.0004, 100},
                                 {0.1, "exact", 0.001, 0.0001, 100},
                                 {0.1, "smp", 0.002, 0.0002, 100}};
  fs::path dir = fresh_dir("riskcsv");
  write_risk_csv((dir / "a.csv").string(), rows, 42, 7);
  write_risk_csv((dir / "b.csv").string(), rows, 42, 7);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv").find("# smi seed=42") == 0);

  auto parsed = read_strict_csv((dir / "a.csv").string());
  REQUIRE(parsed.size() == 4);  // header + 3 rows
  CHECK(parsed[0] == std::vector<std::string>{"delta", "estimator", "risk", "std_err",
                                              "n_reps"});
  CHECK(parsed[1][1] == "cut");
  CHECK(std::stod(parsed[1][2]) == 0.0098);
}

TEST_CASE("kde_curve: density integrates to about one") {
  Rng rng(3);
  VectorXd samples(4000);
  for (int i = 0; i < 4000; ++i) samples[i] = 0.4 + 0.05 * rng.normal();
  MarginalCurve c = kde_curve("X", "cut", samples, 0.0, 1.0, 401);
  double h = c.grid[1] - c.grid[0];
  double mass = 0.0;
  for (double d : c.density) mass += d * h;
  CHECK(mass == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("cli analyze: closed-form spot values") {
  auto lemma1 = run_cli("analyze --lemma1 --d1 3 --tau2 1 --sigma2 1 --eta2 0 --gamma 1");
  CHECK(lemma1.exit_code == 0);
  CHECK(lemma1.output.find("2.8333333333333") != std::string::npos);

  auto f1 = run_cli("analyze --f1 1 2 1");
  CHECK(f1.exit_code == 0);
  CHECK(f1.output.find("1.718281828") != std::string::npos);

  auto om = run_cli("analyze --omega-star --d1 3 --tau2 2 --sigma2 1 --eta2 0");
  CHECK(om.exit_code == 0);
  CHECK(om.output.find("omega_star = 1") != std::string::npos);

  auto c2 = run_cli("analyze --corollary2 --d1 4 --gamma 2 --lambda 0");
  CHECK(c2.exit_code == 0);
  CHECK(c2.output.find("0.0833333333") != std::string::npos);

  auto bad = run_cli("analyze --lemma1 --d1 3 --gamma 9");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("error") != std::string::npos);
}

TEST_CASE("cli run: biased-mean writes risk.csv, fig3 file, and meta") {
  fs::path dir = fresh_dir("run_bm");
  auto res = run_cli("run --experiment biased-mean --d1 1 --reps 8 --grid 0.2,0.6 "
                     "--cut-draws 200 --gibbs-iters 300 --gibbs-burn 100 --seed 5 "
                     "--threads 2 --out " +
                     dir.string());
  CHECK(res.exit_code == 0);
  auto risk = read_strict_csv((dir / "risk.csv").string());
  CHECK(risk.size() == 1 + 6);  // header + 2 deltas x 3 estimators
  CHECK(fs::exists(dir / "fig3_d1.csv"));
  std::string meta = slurp(dir / "run_meta.json");
  CHECK(meta.find("\"master_seed\": 5") != std::string::npos);
  CHECK(meta.find("seed_rule") != std::string::npos);
  CHECK(meta.find("\"grid_points\": \"2\"") != std::string::npos);
}

TEST_CASE("cli run: identical seed reproduces byte-identical numeric fields") {
  fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2"), d4 = fresh_dir("det4");
  std::string common =
      " --experiment random-effects --reps 6 --grid 0.1,0.9 --cut-draws 150 "
      "--gibbs-iters 250 --gibbs-burn 50 --seed 31 --out ";
  CHECK(run_cli("run --threads 1" + common + d1.string()).exit_code == 0);
  CHECK(run_cli("run --threads 1" + common + d2.string()).exit_code == 0);
  CHECK(run_cli("run --threads 4" + common + d4.string()).exit_code == 0);
  CHECK(csv_numeric_body(d1 / "risk.csv") == csv_numeric_body(d2 / "risk.csv"));
  CHECK(csv_numeric_body(d1 / "risk.csv") == csv_numeric_body(d4 / "risk.csv"));
  CHECK(csv_numeric_body(d1 / "table1.csv") == csv_numeric_body(d4 / "table1.csv"));
  auto table = read_strict_csv((d1 / "table1.csv").string());
  REQUIRE(table.size() == 4);
  CHECK(table[1][0] == "Cut");
  CHECK(table[3][0] == "SMP");
}

TEST_CASE("cli run: config file is honored and flags win") {
  fs::path dir = fresh_dir("cfg");
  fs::path cfg = dir / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "experiment=idealized-gaussian\nd1=5\nseed=9\nidealized_draws=20000\n"
           "eta2=0,1\ngamma=3\n";
  }
  auto res = run_cli("run --config " + cfg.string() + " --threads 2 --out " +
                     dir.string());
  CHECK(res.exit_code == 0);
  auto rows = read_strict_csv((dir / "idealized.csv").string());
  REQUIRE(rows.size() == 3);  // header + 2 eta values
  CHECK(rows[0][3] == "lemma1_bound");
  double risk = std::stod(rows[1][1]);
  double bound = std::stod(rows[1][3]);
  double se = std::stod(rows[1][2]);
  CHECK(risk <= bound + 3 * se);
}

TEST_CASE("cli run: emitted config.cfg replays to byte-identical numbers") {
  fs::path a = fresh_dir("replay_a"), b = fresh_dir("replay_b");
  auto res = run_cli("run --experiment biased-mean --d1 2 --reps 5 --grid 0.3,0.7 "
                     "--cut-draws 120 --gibbs-iters 200 --gibbs-burn 60 --seed 13 "
                     "--threads 2 --out " +
                     a.string());
  REQUIRE(res.exit_code == 0);
  auto replay = run_cli("run --config " + (a / "config.cfg").string() + " --out " +
                        b.string());
  REQUIRE(replay.exit_code == 0);
  CHECK(slurp(a / "risk.csv") == slurp(b / "risk.csv"));
  CHECK(slurp(a / "fig3_d2.csv") == slurp(b / "fig3_d2.csv"));
}

TEST_CASE("cli run: failure removes partial outputs") {
  fs::path dir = fresh_dir("fail");
  auto res = run_cli("run --experiment hpv --out " + dir.string());
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("error") != std::string::npos);
  CHECK(!fs::exists(dir / "run_meta.json"));
  CHECK(!fs::exists(dir / "hpv_marginals.csv"));
}

TEST_CASE("cli fit: omega override and conservative low-dimension warning") {
  // Data file from the biased-mean simulator, written in the fit schema.
  fs::path dir = fresh_dir("fit");
  fs::path data = dir / "data.csv";
  {
    BiasedMeanModel model(1, 40, 200);
    BiasedMeanData d = model.simulate(0.5, 8);
    std::ofstream out(data, std::ios::binary);
    out << "dataset,v1\n";
    for (Eigen::Index i = 0; i < d.y1.rows(); ++i)
      out << "1," << format_double(d.y1(i, 0)) << "\n";
    for (Eigen::Index i = 0; i < d.y2.rows(); ++i)
      out << "2," << format_double(d.y2(i, 0)) << "\n";
  }

  auto manual = run_cli("fit --model biased-mean --data " + data.string() +
                        " --omega 0.5 --draws 64 --gibbs-iters 400 --gibbs-burn 100 "
                        "--seed 4 --out " +
                        dir.string());
  CHECK(manual.exit_code == 0);
  std::string summary = slurp(dir / "summary.json");
  CHECK(summary.find("\"omega_plus\": 0.5") != std::string::npos);
  auto draws = read_strict_csv((dir / "draws.csv").string());
  CHECK(draws.size() == 1 + 64);
  CHECK(draws[0][0] == "th1_1");
  CHECK(draws[0][1] == "th2_1");

  auto conservative = run_cli("fit --model biased-mean --data " + data.string() +
                              " --omega-mode conservative --draws 64 "
                              "--gibbs-iters 400 --gibbs-burn 100 --seed 4 --out " +
                              dir.string());
  CHECK(conservative.exit_code == 0);
  CHECK(conservative.output.find("warning") != std::string::npos);
  CHECK(conservative.output.find("d1 <= 2") != std::string::npos);
  std::string summary2 = slurp(dir / "summary.json");
  CHECK(summary2.find("\"omega_plus\": 0,") != std::string::npos);
}

TEST_CASE("cli fit: hpv per-country omegas echoed in JSON") {
  fs::path dir = fresh_dir("fit_hpv");
  fs::path data = dir / "hpv.csv";
  {
    HpvData synth = HpvModel::synthesize(5);
    std::ofstream out(data, std::ios::binary);
    out << "country,x_hpv,n_survey,y_cancer,t_womanyears\n";
    for (const auto& r : synth.rows)
      out << r.country << "," << r.x_hpv << "," << r.n_survey << "," << r.y_cancer
          << "," << format_double(r.t_womanyears) << "\n";
  }
  auto res = run_cli("fit --model hpv --data " + data.string() +
                     " --loss component:3 --draws 200 --sir-proposals 120 "
                     "--seed 6 --out " +
                     dir.string() + " --omega-mode scalar");
  INFO(res.output);
  CHECK(res.exit_code == 0);
  std::string summary = slurp(dir / "summary.json");
  CHECK(summary.find("per_country_omega_plus") != std::string::npos);
  CHECK(summary.find("\"numerator_mode\": \"scalar\"") != std::string::npos);
}
