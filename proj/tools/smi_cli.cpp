#include "smi/analysis.hpp"
#include "smi/experiments.hpp"
#include "smi/models.hpp"
#include "smi/output.hpp"
#include "smi/risk.hpp"
#include "smi/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace smi;

namespace {

int default_threads() {
  if (const char* env = std::getenv("SMI_THREADS")) {
    int k = std::atoi(env);
    if (k >= 1) return k;
  }
  return 1;
}

std::vector<double> parse_grid(const std::string& text) {
  // "lo:step:hi" inclusive, or a comma-separated list.
  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    double lo, step, hi;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &lo, &step, &hi) != 3 || step <= 0)
      throw InvalidInput("bad grid spec '" + text + "', expected lo:step:hi");
    for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
  } else {
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
  }
  if (grid.empty()) throw InvalidInput("empty grid");
  return grid;
}

/// Removes files created so far when a run fails partway.
class OutputTracker {
 public:
  explicit OutputTracker(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }
  std::string file(const std::string& name) {
    paths_.push_back(dir_ / name);
    return paths_.back().string();
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : paths_) out.push_back(p.filename().string());
    return out;
  }
  void discard_all() {
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  fs::path dir_;
  std::vector<fs::path> paths_;
};

struct RunOptions {
  std::string experiment;
  std::string out_dir = "out";
  std::string config_file;
  std::string hpv_data;
  std::string grid_spec;
  std::string omega_mode;
  long d1 = 0;
  long reps = 1000;
  std::uint64_t seed = 42;
  int threads = default_threads();
  std::optional<double> gamma_override;
  double nu = std::numeric_limits<double>::infinity();
  bool scale_by_n = false;
  bool svg = false;
  long cut_draws = 0;
  long gibbs_iters = 0;
  long gibbs_burn = 0;
  long exact_iters = 0;  // hpv chain length
  long exact_burn = 0;
  long exact_thin = 0;
  long sir_proposals = 1000;
  double tau2 = 1.0, sigma2 = 0.5, gamma = 3.0;
  std::string eta2_spec = "0,1,2.5,10";
  long idealized_draws = 1000000;
};

std::map<std::string, std::string> run_config_map(const RunOptions& o) {
  std::map<std::string, std::string> kv;
  kv["experiment"] = o.experiment;
  kv["reps"] = std::to_string(o.reps);
  kv["seed"] = std::to_string(o.seed);
  kv["threads"] = std::to_string(o.threads);
  if (o.d1 > 0) kv["d1"] = std::to_string(o.d1);
  if (!o.grid_spec.empty()) kv["grid"] = o.grid_spec;
  if (!o.omega_mode.empty()) kv["omega_mode"] = o.omega_mode;
  if (o.gamma_override) kv["gamma_override"] = format_double(*o.gamma_override);
  if (std::isfinite(o.nu)) kv["nu"] = format_double(o.nu);
  kv["scale_by_n"] = o.scale_by_n ? "1" : "0";
  if (!o.hpv_data.empty()) kv["hpv_data"] = o.hpv_data;
  if (o.cut_draws > 0) kv["cut_draws"] = std::to_string(o.cut_draws);
  if (o.gibbs_iters > 0) kv["gibbs_iters"] = std::to_string(o.gibbs_iters);
  if (o.gibbs_burn > 0) kv["gibbs_burn"] = std::to_string(o.gibbs_burn);
  if (o.exact_iters > 0) kv["exact_iters"] = std::to_string(o.exact_iters);
  if (o.experiment == "idealized-gaussian") {
    kv["tau2"] = format_double(o.tau2);
    kv["sigma2"] = format_double(o.sigma2);
    kv["gamma"] = format_double(o.gamma);
    kv["eta2"] = o.eta2_spec;
    kv["idealized_draws"] = std::to_string(o.idealized_draws);
  }
  return kv;
}

/// Config file provides defaults; explicit flags win.
void merge_config_file(RunOptions& o, const CLI::App& app) {
  if (o.config_file.empty()) return;
  auto kv = load_config_file(o.config_file);
  auto unseen = [&](const char* flag) { return app.count(flag) == 0; };
  for (const auto& [k, v] : kv) {
    if (k == "experiment") {
      if (unseen("--experiment")) o.experiment = v;
    } else if (k == "reps") {
      if (unseen("--reps")) o.reps = std::stol(v);
    } else if (k == "seed") {
      if (unseen("--seed")) o.seed = std::stoull(v);
    } else if (k == "threads") {
      if (unseen("--threads")) o.threads = std::stoi(v);
    } else if (k == "d1") {
      if (unseen("--d1")) o.d1 = std::stol(v);
    } else if (k == "grid") {
      if (unseen("--grid")) o.grid_spec = v;
    } else if (k == "omega_mode") {
      if (unseen("--omega-mode")) o.omega_mode = v;
    } else if (k == "gamma_override") {
      if (unseen("--gamma-override")) o.gamma_override = std::stod(v);
    } else if (k == "nu") {
      if (unseen("--nu")) o.nu = std::stod(v);
    } else if (k == "scale_by_n") {
      if (unseen("--scale-by-n")) o.scale_by_n = v == "1" || v == "true";
    } else if (k == "hpv_data") {
      if (unseen("--hpv-data")) o.hpv_data = v;
    } else if (k == "cut_draws") {
      if (unseen("--cut-draws")) o.cut_draws = std::stol(v);
    } else if (k == "gibbs_iters") {
      if (unseen("--gibbs-iters")) o.gibbs_iters = std::stol(v);
    } else if (k == "gibbs_burn") {
      if (unseen("--gibbs-burn")) o.gibbs_burn = std::stol(v);
    } else if (k == "exact_iters") {
      if (unseen("--exact-iters")) o.exact_iters = std::stol(v);
    } else if (k == "tau2") {
      if (unseen("--tau2")) o.tau2 = std::stod(v);
    } else if (k == "sigma2") {
      if (unseen("--sigma2")) o.sigma2 = std::stod(v);
    } else if (k == "gamma") {
      if (unseen("--gamma")) o.gamma = std::stod(v);
    } else if (k == "eta2") {
      if (unseen("--eta2")) o.eta2_spec = v;
    } else if (k == "idealized_draws") {
      if (unseen("--idealized-draws")) o.idealized_draws = std::stol(v);
    } else {
      throw InvalidInput("unknown config key '" + k + "'");
    }
  }
}

void write_idealized_csv(const std::string& path,
                         const std::vector<IdealizedGaussianRow>& rows,
                         std::uint64_t seed, std::uint64_t hash) {
  std::ofstream out(path, std::ios::binary);
  out << "# smi seed=" << seed << " config_hash=" << hash << "\n";
  out << "eta_norm2,mc_risk,mc_se,lemma1_bound,cut_risk\n";
  for (const auto& r : rows)
    out << format_double(r.eta_norm2) << "," << format_double(r.mc_risk) << ","
        << format_double(r.mc_se) << "," << format_double(r.bound) << ","
        << format_double(r.cut_risk) << "\n";
}

int cmd_run(RunOptions& o, const CLI::App& app) {
  merge_config_file(o, app);
  auto cfg_map = run_config_map(o);
  // The hash covers everything the numbers depend on; thread count is
  // excluded because results are invariant to it.
  auto hashed = cfg_map;
  hashed.erase("threads");
  std::uint64_t hash = config_hash(serialize_config(hashed));
  OutputTracker tracker(o.out_dir);

  try {
    {
      // Reloadable copy of the effective config: `run --config config.cfg`
      // reproduces the numeric output byte for byte.
      std::ofstream cfg_out(tracker.file("config.cfg"), std::ios::binary);
      cfg_out << serialize_config(hashed);
    }
    if (o.experiment == "biased-mean") {
      BiasedMeanExperiment exp;
      exp.d1 = o.d1 > 0 ? o.d1 : 1;
      if (o.cut_draws > 0) exp.cut_draw_count = o.cut_draws;
      if (o.gibbs_iters > 0) exp.gibbs_iters = o.gibbs_iters;
      if (o.gibbs_burn > 0) exp.gibbs_burn = o.gibbs_burn;
      if (!o.omega_mode.empty()) exp.mode = numerator_mode_from_string(o.omega_mode);
      auto grid = o.grid_spec.empty() ? BiasedMeanExperiment::default_grid()
                                      : parse_grid(o.grid_spec);
      auto plan = exp.make_plan(grid, o.reps, o.seed, o.threads);
      plan.trim_nu = o.nu;
      plan.scale_by_n = o.scale_by_n;
      plan.weight.gamma_override = o.gamma_override;
      auto out = run_plan(plan);

      write_risk_csv(tracker.file("risk.csv"), out.estimates, o.seed, hash);
      std::string fig = "fig3_d" + std::to_string(exp.d1) + ".csv";
      write_fig3_csv(tracker.file(fig), out.estimates, o.seed, hash);
      if (o.svg)
        write_risk_svg(tracker.file("risk.svg"), out.estimates,
                       "biased-mean risk, d1=" + std::to_string(exp.d1));
      cfg_map["grid_points"] = std::to_string(grid.size());
      cfg_map["failed_replications"] = std::to_string(out.failed_replications);
      write_run_meta(tracker.file("run_meta.json"), cfg_map, o.seed, hash,
                     tracker.names());
    } else if (o.experiment == "random-effects") {
      RandomEffectsExperiment exp;
      if (o.cut_draws > 0) exp.cut_draw_count = o.cut_draws;
      if (o.gibbs_iters > 0) exp.gibbs_iters = o.gibbs_iters;
      if (o.gibbs_burn > 0) exp.gibbs_burn = o.gibbs_burn;
      if (!o.omega_mode.empty()) exp.mode = numerator_mode_from_string(o.omega_mode);
      auto grid = o.grid_spec.empty() ? RandomEffectsExperiment::default_grid()
                                      : parse_grid(o.grid_spec);
      auto plan = exp.make_plan(grid, o.reps, o.seed, o.threads);
      plan.trim_nu = o.nu;
      plan.scale_by_n = o.scale_by_n;
      plan.weight.gamma_override = o.gamma_override;
      auto out = run_plan(plan);

      write_risk_csv(tracker.file("risk.csv"), out.estimates, o.seed, hash);
      write_table1_csv(tracker.file("table1.csv"), out.estimates, o.seed, hash);
      if (o.svg)
        write_risk_svg(tracker.file("risk.svg"), out.estimates, "random-effects risk");
      cfg_map["grid_points"] = std::to_string(grid.size());
      cfg_map["failed_replications"] = std::to_string(out.failed_replications);
      write_run_meta(tracker.file("run_meta.json"), cfg_map, o.seed, hash,
                     tracker.names());
    } else if (o.experiment == "hpv") {
      if (o.hpv_data.empty()) throw InvalidInput("hpv experiment needs --hpv-data FILE");
      std::string warning;
      HpvData data = hpv_load(o.hpv_data, &warning);
      if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
      HpvModel model(std::move(data));
      McmcConfig chain = model.default_exact_config(derive_seed(o.seed, {9}));
      if (o.exact_iters > 0) chain.n_iter = o.exact_iters;
      if (o.exact_burn > 0) chain.burn_in = o.exact_burn;
      if (o.exact_thin > 0) chain.thin = o.exact_thin;
      long draws = o.cut_draws > 0 ? o.cut_draws : 1000;
      auto result = run_hpv_marginals(model, draws, o.sir_proposals, chain, o.seed);
      write_hpv_marginals_csv(tracker.file("hpv_marginals.csv"), result.curves, o.seed,
                              hash);
      write_run_meta(tracker.file("run_meta.json"), cfg_map, o.seed, hash,
                     tracker.names());
    } else if (o.experiment == "idealized-gaussian") {
      int d1 = int(o.d1 > 0 ? o.d1 : 5);
      auto rows =
          run_idealized_gaussian(d1, o.tau2, o.sigma2, o.gamma, parse_grid(o.eta2_spec),
                                 o.idealized_draws, o.seed, o.threads);
      write_idealized_csv(tracker.file("idealized.csv"), rows, o.seed, hash);
      write_run_meta(tracker.file("run_meta.json"), cfg_map, o.seed, hash,
                     tracker.names());
    } else {
      throw InvalidInput("unknown experiment '" + o.experiment + "'");
    }
  } catch (const std::exception& e) {
    tracker.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOptions {
  std::string model;
  std::string data_file;
  std::string loss_spec = "squared";
  std::string omega_mode = "conservative";
  std::optional<double> omega_override;
  std::optional<double> gamma_override;
  std::string out_dir = "out";
  long draws = 1000;
  long obs_per_group = 10;
  std::uint64_t seed = 42;
  long gibbs_iters = 20000;
  long gibbs_burn = 5000;
  long sir_proposals = 1000;
};

MatrixXd load_numeric_csv(const std::string& path, size_t expected_cols,
                          const std::string& what) {
  auto rows = read_strict_csv(path);
  if (rows.size() < 2) throw ParseError(what + ": no data rows");
  size_t n = rows.size() - 1;  // header
  MatrixXd m(n, expected_cols);
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != expected_cols)
      throw ParseError(what + ": wrong field count at data row " + std::to_string(i));
    for (size_t j = 0; j < expected_cols; ++j) m(i - 1, j) = std::stod(rows[i][j]);
  }
  return m;
}

void write_draws_csv(const std::string& path, const DrawSet& draws,
                     std::uint64_t seed, std::uint64_t hash) {
  std::ofstream out(path, std::ios::binary);
  out << "# smi seed=" << seed << " config_hash=" << hash << "\n";
  for (Eigen::Index j = 0; j < draws.d1; ++j) out << (j ? "," : "") << "th1_" << (j + 1);
  for (Eigen::Index j = 0; j < draws.d2; ++j) out << ",th2_" << (j + 1);
  out << "\n";
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < draws.draws.cols(); ++j)
      out << (j ? "," : "") << format_double(draws.draws(i, j));
    out << "\n";
  }
}

void write_json_vector(std::ostream& out, const char* key, const VectorXd& v,
                       bool trailing_comma) {
  out << "  \"" << key << "\": [";
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out << (i ? ", " : "") << format_double(v[i]);
  out << "]" << (trailing_comma ? "," : "") << "\n";
}

std::map<std::string, std::string> fit_config_map(const FitOptions& o) {
  std::map<std::string, std::string> kv;
  kv["command"] = "fit";
  kv["model"] = o.model;
  kv["data"] = o.data_file;
  kv["loss"] = o.loss_spec;
  kv["omega_mode"] = o.omega_mode;
  if (o.omega_override) kv["omega"] = format_double(*o.omega_override);
  if (o.gamma_override) kv["gamma_override"] = format_double(*o.gamma_override);
  kv["draws"] = std::to_string(o.draws);
  kv["seed"] = std::to_string(o.seed);
  return kv;
}

int cmd_fit(const FitOptions& o) {
  OutputTracker tracker(o.out_dir);
  const std::uint64_t hash = config_hash(serialize_config(fit_config_map(o)));
  try {
    DrawSet cut, exact;
    std::vector<double> per_country_omega;
    Eigen::Index d1 = 0;

    if (o.model == "hpv") {
      std::string warning;
      HpvData data = hpv_load(o.data_file, &warning);
      if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
      HpvModel model(std::move(data));
      d1 = model.d1();
      cut = model.cut_draws(o.draws, derive_seed(o.seed, {1}), o.sir_proposals);
      McmcConfig chain = model.default_exact_config(derive_seed(o.seed, {2}));
      exact = model.exact_draws(chain);
      for (Eigen::Index j = 0; j < d1; ++j) {
        SmpResult r = model.smp_per_country(cut, exact, j, 8, derive_seed(o.seed, {3}));
        per_country_omega.push_back(r.weight.omega_plus);
      }
    } else if (o.model == "biased-mean") {
      // Schema: dataset,v1..vd with dataset in {1,2}.
      auto rows = read_strict_csv(o.data_file);
      if (rows.size() < 3) throw ParseError("biased-mean data: too few rows");
      size_t cols = rows[0].size();
      if (cols < 2) throw ParseError("biased-mean data: expected dataset,v1..vd");
      d1 = Eigen::Index(cols - 1);
      std::vector<VectorXd> y1, y2;
      for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != cols)
          throw ParseError("biased-mean data: ragged row " + std::to_string(i));
        VectorXd v(d1);
        for (Eigen::Index j = 0; j < d1; ++j) v[j] = std::stod(rows[i][1 + j]);
        (rows[i][0] == "1" ? y1 : y2).push_back(v);
      }
      if (y1.size() < 2) throw ParseError("biased-mean data: dataset 1 too small");
      BiasedMeanData data;
      data.y1.resize(long(y1.size()), d1);
      data.y2.resize(long(y2.size()), d1);
      for (size_t i = 0; i < y1.size(); ++i) data.y1.row(long(i)) = y1[i].transpose();
      for (size_t i = 0; i < y2.size(); ++i) data.y2.row(long(i)) = y2[i].transpose();
      BiasedMeanModel model(d1, data.y1.rows(), data.y2.rows());
      cut = model.cut_draws(data, o.draws, derive_seed(o.seed, {1}));
      McmcConfig cfg;
      cfg.n_iter = o.gibbs_iters;
      cfg.burn_in = o.gibbs_burn;
      cfg.seed = derive_seed(o.seed, {2});
      exact = model.exact_draws(data, cfg);
    } else if (o.model == "random-effects") {
      MatrixXd m = load_numeric_csv(o.data_file, 2, "random-effects data");
      RandomEffectsData data;
      data.zbar = m.col(0);
      data.s2 = m.col(1);
      data.n_groups = m.rows();
      data.obs_per_group = o.obs_per_group;
      d1 = data.n_groups;
      RandomEffectsModel model(data.n_groups, data.obs_per_group);
      cut = model.cut_draws(data, o.draws, derive_seed(o.seed, {1}));
      McmcConfig cfg;
      cfg.n_iter = o.gibbs_iters;
      cfg.burn_in = o.gibbs_burn;
      cfg.seed = derive_seed(o.seed, {2});
      exact = model.exact_draws(data, cfg);
    } else {
      throw InvalidInput("unknown model '" + o.model + "'");
    }

    PosteriorSummary cut_sum = summarize(cut, Block::theta1);
    PosteriorSummary exact_sum = summarize(exact, Block::theta1);

    Eigen::Index component = -1;
    if (o.loss_spec.rfind("component:", 0) == 0) {
      component = std::stol(o.loss_spec.substr(10)) - 1;  // 1-based on the CLI
      if (component < 0 || component >= d1)
        throw InvalidInput("component loss index out of range");
    } else if (o.loss_spec != "squared") {
      throw InvalidInput("unknown loss '" + o.loss_spec + "'");
    }

    NumeratorMode mode = numerator_mode_from_string(o.omega_mode);
    MixtureWeight weight;
    std::string warning_text;
    if (o.omega_override) {
      weight.omega_plus = std::min(1.0, std::max(0.0, *o.omega_override));
      weight.omega_raw = *o.omega_override;
      weight.numerator_mode = mode;
    } else if (component >= 0 && mode != NumeratorMode::conservative) {
      PosteriorSummary cj{VectorXd::Constant(1, cut_sum.mean[component]),
                          MatrixXd::Constant(1, 1, cut_sum.cov(component, component)),
                          cut_sum.n_draws};
      PosteriorSummary ej{VectorXd::Constant(1, exact_sum.mean[component]),
                          MatrixXd::Constant(1, 1, exact_sum.cov(component, component)),
                          exact_sum.n_draws};
      weight = estimate_weight(cj, ej, MatrixXd::Identity(1, 1), NumeratorMode::scalar,
                               o.gamma_override);
    } else {
      weight = estimate_weight(cut_sum, exact_sum, MatrixXd::Identity(d1, d1), mode,
                               o.gamma_override);
    }
    if (mode == NumeratorMode::conservative && d1 <= 2 && !o.omega_override &&
        !o.gamma_override) {
      warning_text =
          "conservative numerator tr(W) - 2||W|| is never positive for d1 <= 2, "
          "so omega_plus = 0; use plain/scalar modes or --gamma-override in low "
          "dimensions";
      std::cerr << "warning: " << warning_text << "\n";
    }

    SmpResult smp = build_smp(cut, exact, weight, o.draws, derive_seed(o.seed, {4}));
    write_draws_csv(tracker.file("draws.csv"), smp.smp_draws, o.seed, hash);

    std::ofstream js(tracker.file("summary.json"), std::ios::binary);
    js << "{\n";
    js << "  \"model\": \"" << o.model << "\",\n";
    js << "  \"seed\": " << o.seed << ",\n";
    js << "  \"config_hash\": " << hash << ",\n";
    js << "  \"omega_plus\": " << format_double(weight.omega_plus) << ",\n";
    js << "  \"omega_raw\": " << format_double(weight.omega_raw) << ",\n";
    js << "  \"gamma_hat\": " << format_double(weight.gamma_hat) << ",\n";
    js << "  \"location_gap\": " << format_double(weight.location_gap) << ",\n";
    js << "  \"numerator_mode\": \"" << to_string(weight.numerator_mode) << "\",\n";
    if (!warning_text.empty()) js << "  \"warning\": \"" << warning_text << "\",\n";
    if (!per_country_omega.empty()) {
      js << "  \"per_country_omega_plus\": [";
      for (size_t j = 0; j < per_country_omega.size(); ++j)
        js << (j ? ", " : "") << format_double(per_country_omega[j]);
      js << "],\n";
    }
    write_json_vector(js, "cut_mean", cut_sum.mean, true);
    write_json_vector(js, "exact_mean", exact_sum.mean, true);
    write_json_vector(js, "smp_mean", smp.smp_theta1_mean, true);
    write_json_vector(js, "cut_var", cut_sum.cov.diagonal(), true);
    write_json_vector(js, "exact_var", exact_sum.cov.diagonal(), false);
    js << "}\n";
  } catch (const std::exception& e) {
    tracker.discard_all();
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  bool omega_star_flag = false;
  bool risk_curve = false;
  bool lemma1 = false;
  bool corollary2 = false;
  std::vector<double> f1_args;
  std::vector<double> inv_chisq_args;
  long d1 = 3;
  double tau2 = 1.0;    // I_p(11)^{-1} scale (isotropic)
  double sigma2 = 0.5;  // I_11.2^{-1} scale (isotropic)
  double eta2 = 0.0;    // squared norm of the composite bias vector
  double gamma = 1.0;
  double lambda = 0.0;
  std::string out_file;
};

AsymptoticSpec isotropic_spec(const AnalyzeOptions& o) {
  AsymptoticSpec s;
  const Eigen::Index d = o.d1;
  if (!(o.tau2 > 0.0) || !(o.sigma2 > 0.0))
    throw InvalidInput("analyze: tau2 and sigma2 must be positive");
  s.info_p11 = MatrixXd::Identity(d, d) / o.tau2;
  s.info_11_2 = MatrixXd::Identity(d, d) / o.sigma2;
  s.bias_vec = VectorXd::Zero(d);
  s.bias_vec[0] = std::sqrt(o.eta2);
  s.curvature = MatrixXd::Identity(d, d);
  return s;
}

int cmd_analyze(const AnalyzeOptions& o) {
  try {
    bool did_something = false;
    if (!o.f1_args.empty()) {
      if (o.f1_args.size() != 3) throw InvalidInput("--f1 needs a b x");
      std::cout << "hypergeom_1f1(" << o.f1_args[0] << ";" << o.f1_args[1] << ";"
                << o.f1_args[2] << ") = "
                << format_double(hypergeom_1f1(o.f1_args[0], o.f1_args[1], o.f1_args[2]))
                << "\n";
      did_something = true;
    }
    if (!o.inv_chisq_args.empty()) {
      if (o.inv_chisq_args.size() != 2)
        throw InvalidInput("--inv-chisq-mean needs kappa lambda");
      std::cout << "inv_noncentral_chisq_mean = "
                << format_double(inv_noncentral_chisq_mean(o.inv_chisq_args[0],
                                                           o.inv_chisq_args[1]))
                << "\n";
      did_something = true;
    }
    if (o.omega_star_flag) {
      auto spec = isotropic_spec(o);
      std::string warning = validate(spec);
      if (!warning.empty()) std::cerr << "warning: " << warning << "\n";
      std::cout << "omega_star = " << format_double(omega_star(spec)) << "\n";
      did_something = true;
    }
    if (o.risk_curve) {
      auto spec = isotropic_spec(o);
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!o.out_file.empty()) {
        file.open(o.out_file, std::ios::binary);
        out = &file;
        std::map<std::string, std::string> kv{{"command", "analyze"},
                                              {"d1", std::to_string(o.d1)},
                                              {"tau2", format_double(o.tau2)},
                                              {"sigma2", format_double(o.sigma2)},
                                              {"eta2", format_double(o.eta2)}};
        file << "# smi seed=0 config_hash=" << config_hash(serialize_config(kv))
             << "\n";
      }
      *out << "omega,risk\n";
      for (int i = 0; i <= 100; ++i) {
        double w = double(i) / 100.0;
        *out << format_double(w) << "," << format_double(risk_quadratic(spec, w)) << "\n";
      }
      did_something = true;
    }
    if (o.lemma1) {
      std::cout << "lemma1_bound = "
                << format_double(
                       lemma1_bound(int(o.d1), o.tau2, o.sigma2, o.eta2, o.gamma))
                << "\n";
      did_something = true;
    }
    if (o.corollary2) {
      std::cout << "corollary2_risk_gap = "
                << format_double(corollary2_risk_gap(o.gamma, int(o.d1), o.lambda))
                << "\n";
      did_something = true;
    }
    if (!did_something) {
      std::cerr << "error: nothing to analyze; pass --omega-star, --risk-curve, "
                   "--lemma1, --corollary2, --f1 or --inv-chisq-mean\n";
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-modular posterior inference"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run a replication experiment");
  run->add_option("--experiment", run_opts.experiment,
                  "biased-mean | random-effects | hpv | idealized-gaussian");
  run->add_option("--out", run_opts.out_dir, "output directory");
  run->add_option("--config", run_opts.config_file, "key=value config file");
  run->add_option("--hpv-data", run_opts.hpv_data, "HPV data CSV");
  run->add_option("--grid", run_opts.grid_spec, "lo:step:hi or comma list");
  run->add_option("--omega-mode", run_opts.omega_mode,
                  "conservative | plain | scalar | plain_cut_only");
  run->add_option("--d1", run_opts.d1);
  run->add_option("--reps", run_opts.reps);
  run->add_option("--seed", run_opts.seed);
  run->add_option("--threads", run_opts.threads, "worker threads (env SMI_THREADS)");
  run->add_option("--gamma-override", run_opts.gamma_override,
                  "fixed shrinkage constant instead of the estimator");
  run->add_option("--nu", run_opts.nu, "trimming threshold");
  run->add_flag("--scale-by-n", run_opts.scale_by_n, "multiply losses by n");
  run->add_flag("--svg", run_opts.svg, "also write an SVG risk chart");
  run->add_option("--cut-draws", run_opts.cut_draws);
  run->add_option("--gibbs-iters", run_opts.gibbs_iters);
  run->add_option("--gibbs-burn", run_opts.gibbs_burn);
  run->add_option("--exact-iters", run_opts.exact_iters);
  run->add_option("--exact-burn", run_opts.exact_burn);
  run->add_option("--exact-thin", run_opts.exact_thin);
  run->add_option("--sir-proposals", run_opts.sir_proposals);
  run->add_option("--tau2", run_opts.tau2);
  run->add_option("--sigma2", run_opts.sigma2);
  run->add_option("--gamma", run_opts.gamma);
  run->add_option("--eta2", run_opts.eta2_spec, "comma list of squared bias norms");
  run->add_option("--idealized-draws", run_opts.idealized_draws);

  FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "fit the SMP on user data");
  fit->add_option("--model", fit_opts.model, "biased-mean | random-effects | hpv")
      ->required();
  fit->add_option("--data", fit_opts.data_file, "data CSV")->required();
  fit->add_option("--loss", fit_opts.loss_spec, "squared | component:J (1-based)");
  fit->add_option("--omega", fit_opts.omega_override, "manual mixture weight");
  fit->add_option("--omega-mode", fit_opts.omega_mode);
  fit->add_option("--gamma-override", fit_opts.gamma_override);
  fit->add_option("--draws", fit_opts.draws);
  fit->add_option("--j", fit_opts.obs_per_group, "observations per group");
  fit->add_option("--seed", fit_opts.seed);
  fit->add_option("--out", fit_opts.out_dir);
  fit->add_option("--gibbs-iters", fit_opts.gibbs_iters);
  fit->add_option("--gibbs-burn", fit_opts.gibbs_burn);
  fit->add_option("--sir-proposals", fit_opts.sir_proposals);

  AnalyzeOptions an_opts;
  auto* analyze = app.add_subcommand("analyze", "closed-form asymptotics");
  analyze->add_flag("--omega-star", an_opts.omega_star_flag);
  analyze->add_flag("--risk-curve", an_opts.risk_curve);
  analyze->add_flag("--lemma1", an_opts.lemma1);
  analyze->add_flag("--corollary2", an_opts.corollary2);
  analyze->add_option("--f1", an_opts.f1_args, "a b x")->expected(3);
  analyze->add_option("--inv-chisq-mean", an_opts.inv_chisq_args, "kappa lambda")
      ->expected(2);
  analyze->add_option("--d1", an_opts.d1);
  analyze->add_option("--tau2", an_opts.tau2);
  analyze->add_option("--sigma2", an_opts.sigma2);
  analyze->add_option("--eta2", an_opts.eta2);
  analyze->add_option("--gamma", an_opts.gamma);
  analyze->add_option("--lambda", an_opts.lambda);
  analyze->add_option("--out", an_opts.out_file, "risk-curve CSV path");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (run_opts.experiment.empty() && run_opts.config_file.empty()) {
      std::cerr << "error: --experiment (or --config) is required\n";
      return 1;
    }
    return cmd_run(run_opts, *run);
  }
  if (fit->parsed()) return cmd_fit(fit_opts);
  if (analyze->parsed()) return cmd_analyze(an_opts);
  return 1;
}
