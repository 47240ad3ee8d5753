#ifndef SMI_EXPERIMENTS_HPP
#define SMI_EXPERIMENTS_HPP

#include "smi/models.hpp"
#include "smi/output.hpp"
#include "smi/risk.hpp"

#include <string>
#include <vector>

namespace smi {

/// Contamination sweep for the two-sample biased-mean system.  The mixing
/// weight is the trace-over-gap preset with an identity curvature, matching
/// the weight the replication study uses; the loss is squared error on the
/// full theta1 block.
struct BiasedMeanExperiment {
  Eigen::Index d1 = 1;
  Eigen::Index n1 = 100;
  Eigen::Index n2 = 1000;
  long cut_draw_count = 2000;
  long gibbs_iters = 3000;
  long gibbs_burn = 1000;
  NumeratorMode mode = NumeratorMode::plain_cut_only;

  ExperimentPlan make_plan(std::vector<double> grid, long reps,
                           std::uint64_t master_seed, int threads) const;
  static std::vector<double> default_grid();  // 0.1:0.05:0.9, 17 points
};

/// Conflict sweep for the normal-normal random effects system.  The weight
/// uses the conservative covariance-gap numerator over the full phi block
/// with identity curvature; the reported loss is squared error on phi_1.
struct RandomEffectsExperiment {
  Eigen::Index n_groups = 100;
  Eigen::Index obs_per_group = 10;
  bool paper_kernel = false;
  long cut_draw_count = 1500;
  long gibbs_iters = 2000;
  long gibbs_burn = 500;
  NumeratorMode mode = NumeratorMode::conservative;

  ExperimentPlan make_plan(std::vector<double> grid, long reps,
                           std::uint64_t master_seed, int threads) const;
  static std::vector<double> default_grid();  // 0.1:0.2:1.9, 10 points
};

/// Direct simulation of the Gaussian limit experiment behind the simple
/// pooling bound: cut limit N(0, tau2 I), exact limit N(eta, sigma2 I),
/// weight min(1, gamma/||X-Y||^2).
struct IdealizedGaussianRow {
  double eta_norm2 = 0.0;
  double mc_risk = 0.0;
  double mc_se = 0.0;
  double bound = 0.0;
  double cut_risk = 0.0;
};

std::vector<IdealizedGaussianRow> run_idealized_gaussian(
    int d1, double tau2, double sigma2, double gamma,
    const std::vector<double>& eta_norm2_grid, long n_draws,
    std::uint64_t master_seed, int threads);

/// Local-misspecification probe rows for the conjugate biased-mean system.
std::vector<BiasProbeRow> run_bias_probe(const BiasedMeanLocalProbe& probe,
                                         const std::vector<long>& n_grid, long reps,
                                         std::uint64_t master_seed, int threads);

/// Per-country HPV summary: cut/exact/smp marginal density curves plus the
/// scalar weight, ready for hpv_marginals.csv.
struct HpvRunResult {
  std::vector<MarginalCurve> curves;
  std::vector<double> omega_plus;  // one per country
};

HpvRunResult run_hpv_marginals(const HpvModel& model, long cut_draws,
                               long sir_proposals, const McmcConfig& exact_cfg,
                               std::uint64_t seed, Eigen::Index kde_points = 201);

}  // namespace smi

#endif  // SMI_EXPERIMENTS_HPP
