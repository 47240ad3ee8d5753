#ifndef SMI_RISK_HPP
#define SMI_RISK_HPP

#include "smi/core.hpp"
#include "smi/smp.hpp"
#include "smi/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace smi {

/// Weight estimation policy for the replication engine.
struct WeightPolicy {
  NumeratorMode mode = NumeratorMode::conservative;
  std::optional<double> gamma_override;
  /// When false (default) the weight uses an identity curvature over the
  /// full theta1 block; when true it uses the loss curvature at the cut
  /// posterior target.
  bool curvature_from_loss = false;
};

/// What the engine needs from a model: the parameter truth and a sampler
/// that simulates one dataset and returns (cut draws, exact draws).
struct ModelHooks {
  Eigen::Index d1 = 0;
  VectorXd truth_theta1;
  std::function<std::pair<DrawSet, DrawSet>(double delta, std::uint64_t seed)>
      sample_posteriors;
};

struct ExperimentPlan {
  std::string model_id;
  std::vector<double> contamination_grid;
  long n_reps = 0;
  LossSpec loss;
  double trim_nu = std::numeric_limits<double>::infinity();
  bool scale_by_n = false;
  double scale_n = 1.0;  // the n multiplying the loss when scale_by_n is set
  std::uint64_t master_seed = 0;
  int threads = 1;
  WeightPolicy weight;
  ModelHooks hooks;
};

struct RiskEstimate {
  double delta = 0.0;
  std::string estimator;
  double risk = 0.0;
  double std_err = 0.0;
  long n_reps = 0;
};

struct ReplicationResult {
  double loss_cut = 0.0;
  double loss_exact = 0.0;
  double loss_smp = 0.0;
  double omega_plus = 0.0;
  bool failed = false;
  std::string failure;
};

/// One dataset: simulate, sample both posteriors, estimate the weight, and
/// score the cut, exact, and SMP point estimators against the truth.
ReplicationResult run_replication(const ModelHooks& hooks, double delta,
                                  const LossSpec& loss, const WeightPolicy& policy,
                                  std::uint64_t rep_seed);

struct PlanOutput {
  std::vector<RiskEstimate> estimates;  // sorted by (delta, estimator)
  long failed_replications = 0;
  long total_replications = 0;
  std::vector<double> mean_omega_plus;  // one entry per grid delta
};

/// Monte Carlo risk over the contamination grid.  Replication r of grid
/// cell i uses seed derive_seed(master_seed, {i, r}), so the output is
/// independent of execution order and thread count.
PlanOutput run_plan(const ExperimentPlan& plan);

/// Hooks for the local-misspecification probe: one replication returns the
/// cut and exact point estimates of theta1 at sample size n.
struct ProbeHooks {
  VectorXd truth_theta1;
  std::function<std::pair<VectorXd, VectorXd>(long n, std::uint64_t seed)> estimate;
};

struct BiasProbeRow {
  long n = 0;
  std::string estimator;
  double sqrt_n_bias = 0.0;  // per-coordinate average of sqrt(n)*(mean - truth)
  double std_err = 0.0;
};

std::vector<BiasProbeRow> asymptotic_bias_probe(const ProbeHooks& hooks,
                                                const std::vector<long>& n_grid,
                                                long reps, std::uint64_t master_seed,
                                                int threads = 1);

/// Runs fn(0..n_tasks) across a small worker pool; deterministic as long as
/// tasks write disjoint slots.
void parallel_for(long n_tasks, int threads, const std::function<void(long)>& fn);

}  // namespace smi

#endif  // SMI_RISK_HPP
