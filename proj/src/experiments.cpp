#include "smi/experiments.hpp"

#include "smi/analysis.hpp"
#include "smi/rng.hpp"

#include <cmath>
#include <memory>

namespace smi {

std::vector<double> BiasedMeanExperiment::default_grid() {
  std::vector<double> grid;
  for (int i = 2; i <= 18; ++i) grid.push_back(double(i) * 0.05);
  return grid;
}

ExperimentPlan BiasedMeanExperiment::make_plan(std::vector<double> grid, long reps,
                                               std::uint64_t master_seed,
                                               int threads) const {
  auto model = std::make_shared<BiasedMeanModel>(d1, n1, n2);
  const long cut_n = cut_draw_count;
  const long iters = gibbs_iters, burn = gibbs_burn;

  ExperimentPlan plan;
  plan.model_id = "biased-mean";
  plan.contamination_grid = std::move(grid);
  plan.n_reps = reps;
  plan.loss = LossSpec::squared_error(d1);
  plan.master_seed = master_seed;
  plan.threads = threads;
  plan.weight.mode = mode;
  plan.scale_n = double(n1);
  plan.hooks.d1 = d1;
  plan.hooks.truth_theta1 = model->truth();
  plan.hooks.sample_posteriors = [model, cut_n, iters, burn](double delta,
                                                             std::uint64_t seed) {
    std::uint64_t data_seed = derive_seed(seed, {1});
    std::uint64_t cut_seed = derive_seed(seed, {2});
    std::uint64_t exact_seed = derive_seed(seed, {3});
    BiasedMeanData data = model->simulate(delta, data_seed);
    DrawSet cut = model->cut_draws(data, cut_n, cut_seed);
    McmcConfig cfg;
    cfg.n_iter = iters;
    cfg.burn_in = burn;
    cfg.seed = exact_seed;
    DrawSet exact = model->exact_draws(data, cfg);
    return std::make_pair(std::move(cut), std::move(exact));
  };
  return plan;
}

std::vector<double> RandomEffectsExperiment::default_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(0.1 + 0.2 * double(i));
  return grid;
}

ExperimentPlan RandomEffectsExperiment::make_plan(std::vector<double> grid, long reps,
                                                  std::uint64_t master_seed,
                                                  int threads) const {
  auto model =
      std::make_shared<RandomEffectsModel>(n_groups, obs_per_group, paper_kernel);
  const long cut_n = cut_draw_count;
  const long iters = gibbs_iters, burn = gibbs_burn;

  ExperimentPlan plan;
  plan.model_id = "random-effects";
  plan.contamination_grid = std::move(grid);
  plan.n_reps = reps;
  plan.loss = LossSpec::component(0, n_groups);  // squared error on phi_1
  plan.master_seed = master_seed;
  plan.threads = threads;
  plan.weight.mode = mode;
  plan.scale_n = double(n_groups * obs_per_group);
  plan.hooks.d1 = n_groups;
  plan.hooks.truth_theta1 = model->truth();
  plan.hooks.sample_posteriors = [model, cut_n, iters, burn](double delta,
                                                             std::uint64_t seed) {
    std::uint64_t data_seed = derive_seed(seed, {1});
    std::uint64_t cut_seed = derive_seed(seed, {2});
    std::uint64_t exact_seed = derive_seed(seed, {3});
    RandomEffectsData data = model->simulate(delta, data_seed);
    DrawSet cut = model->cut_draws(data, cut_n, cut_seed);
    McmcConfig cfg;
    cfg.n_iter = iters;
    cfg.burn_in = burn;
    cfg.seed = exact_seed;
    DrawSet exact = model->exact_draws(data, cfg);
    return std::make_pair(std::move(cut), std::move(exact));
  };
  return plan;
}

std::vector<IdealizedGaussianRow> run_idealized_gaussian(
    int d1, double tau2, double sigma2, double gamma,
    const std::vector<double>& eta_norm2_grid, long n_draws,
    std::uint64_t master_seed, int threads) {
  if (d1 < 1 || !(tau2 > 0.0) || !(sigma2 >= 0.0) || n_draws < 2)
    throw InvalidInput("run_idealized_gaussian: bad arguments");

  std::vector<IdealizedGaussianRow> rows(eta_norm2_grid.size());
  parallel_for(long(eta_norm2_grid.size()), threads, [&](long gi) {
    double eta2 = eta_norm2_grid[gi];
    Rng rng(derive_seed(master_seed, {std::uint64_t(gi)}));
    VectorXd eta = VectorXd::Zero(d1);
    eta[0] = std::sqrt(eta2);
    double sum = 0.0, sumsq = 0.0;
    VectorXd x(d1), y(d1);
    for (long i = 0; i < n_draws; ++i) {
      for (int j = 0; j < d1; ++j) {
        x[j] = std::sqrt(tau2) * rng.normal();
        y[j] = eta[j] + std::sqrt(sigma2) * rng.normal();
      }
      VectorXd diff = x - y;
      double omega = std::min(1.0, gamma / diff.squaredNorm());
      double loss = (x - omega * diff).squaredNorm();
      sum += loss;
      sumsq += loss * loss;
    }
    IdealizedGaussianRow row;
    row.eta_norm2 = eta2;
    row.mc_risk = sum / double(n_draws);
    row.mc_se =
        std::sqrt((sumsq / double(n_draws) - row.mc_risk * row.mc_risk) / double(n_draws));
    row.bound = lemma1_bound(d1, tau2, sigma2, eta2, gamma);
    row.cut_risk = double(d1) * tau2;
    rows[gi] = row;
  });
  return rows;
}

std::vector<BiasProbeRow> run_bias_probe(const BiasedMeanLocalProbe& probe,
                                         const std::vector<long>& n_grid, long reps,
                                         std::uint64_t master_seed, int threads) {
  ProbeHooks hooks;
  hooks.truth_theta1 = VectorXd::Zero(probe.d1);
  hooks.estimate = [probe](long n, std::uint64_t seed) {
    return probe.estimate(n, seed);
  };
  return asymptotic_bias_probe(hooks, n_grid, reps, master_seed, threads);
}

HpvRunResult run_hpv_marginals(const HpvModel& model, long cut_draws,
                               long sir_proposals, const McmcConfig& exact_cfg,
                               std::uint64_t seed, Eigen::Index kde_points) {
  DrawSet cut = model.cut_draws(cut_draws, derive_seed(seed, {1}), sir_proposals);
  DrawSet exact = model.exact_draws(exact_cfg);

  HpvRunResult out;
  for (Eigen::Index j = 0; j < model.d1(); ++j) {
    SmpResult res =
        model.smp_per_country(cut, exact, j, cut.rows(), derive_seed(seed, {2, std::uint64_t(j)}));
    out.omega_plus.push_back(res.weight.omega_plus);
    const std::string& country = model.data().rows[j].country;
    auto add = [&](const char* name, const VectorXd& col) {
      MarginalCurve c = kde_curve(country, name, col, 0.0, 1.0, kde_points);
      c.omega_plus = res.weight.omega_plus;
      out.curves.push_back(std::move(c));
    };
    add("cut", cut.draws.col(j));
    add("exact", exact.draws.col(j));
    add("smp", res.smp_draws.draws.col(j));
  }
  return out;
}

}  // namespace smi
