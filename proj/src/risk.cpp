#include "smi/risk.hpp"

#include "smi/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

namespace smi {

void parallel_for(long n_tasks, int threads, const std::function<void(long)>& fn) {
  if (threads <= 1 || n_tasks <= 1) {
    for (long i = 0; i < n_tasks; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::atomic<bool> raised{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= n_tasks || raised.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!raised.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int n_workers = std::min<long>(threads, n_tasks);
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (raised.load() && error) std::rethrow_exception(error);
}

ReplicationResult run_replication(const ModelHooks& hooks, double delta,
                                  const LossSpec& loss, const WeightPolicy& policy,
                                  std::uint64_t rep_seed) {
  ReplicationResult out;
  try {
    auto [cut_set, exact_set] = hooks.sample_posteriors(delta, rep_seed);
    PosteriorSummary cut = summarize(cut_set, Block::theta1);
    PosteriorSummary exact = summarize(exact_set, Block::theta1);

    MatrixXd curvature;
    if (policy.curvature_from_loss) {
      curvature = loss.curvature(loss.target_map(cut.mean));
      if (curvature.rows() != hooks.d1)
        throw InvalidInput("run_replication: loss curvature does not span theta1");
    } else {
      curvature = MatrixXd::Identity(hooks.d1, hooks.d1);
    }
    MixtureWeight w =
        estimate_weight(cut, exact, curvature, policy.mode, policy.gamma_override);
    VectorXd smp = smp_mean(cut, exact, w.omega_plus);

    out.loss_cut = evaluate_loss(loss, hooks.truth_theta1, cut.mean);
    out.loss_exact = evaluate_loss(loss, hooks.truth_theta1, exact.mean);
    out.loss_smp = evaluate_loss(loss, hooks.truth_theta1, smp);
    out.omega_plus = w.omega_plus;
  } catch (const SamplerDivergence& e) {
    out.failed = true;
    out.failure = e.what();
  }
  return out;
}

PlanOutput run_plan(const ExperimentPlan& plan) {
  if (plan.n_reps < 1) throw InvalidInput("run_plan: n_reps must be >= 1");
  if (plan.contamination_grid.empty())
    throw InvalidInput("run_plan: empty contamination grid");
  if (!std::is_sorted(plan.contamination_grid.begin(), plan.contamination_grid.end()))
    throw InvalidInput("run_plan: contamination grid must be sorted");
  if (!plan.hooks.sample_posteriors) throw InvalidInput("run_plan: missing model hooks");

  const long n_grid = long(plan.contamination_grid.size());
  const long n_tasks = n_grid * plan.n_reps;
  std::vector<ReplicationResult> results(n_tasks);

  parallel_for(n_tasks, plan.threads, [&](long task) {
    long gi = task / plan.n_reps;
    long rep = task % plan.n_reps;
    std::uint64_t seed =
        derive_seed(plan.master_seed, {std::uint64_t(gi), std::uint64_t(rep)});
    results[task] = run_replication(plan.hooks, plan.contamination_grid[gi], plan.loss,
                                    plan.weight, seed);
  });

  PlanOutput out;
  out.total_replications = n_tasks;
  const double scale = plan.scale_by_n ? plan.scale_n : 1.0;

  for (long gi = 0; gi < n_grid; ++gi) {
    std::vector<double> cut_losses, exact_losses, smp_losses;
    double omega_sum = 0.0;
    long ok = 0;
    for (long rep = 0; rep < plan.n_reps; ++rep) {
      const auto& r = results[gi * plan.n_reps + rep];
      if (r.failed) {
        ++out.failed_replications;
        continue;
      }
      ++ok;
      omega_sum += r.omega_plus;
      cut_losses.push_back(std::min(scale * r.loss_cut, plan.trim_nu));
      exact_losses.push_back(std::min(scale * r.loss_exact, plan.trim_nu));
      smp_losses.push_back(std::min(scale * r.loss_smp, plan.trim_nu));
    }
    if (ok == 0)
      throw InsufficientData("run_plan: all replications failed at delta = " +
                             std::to_string(plan.contamination_grid[gi]));
    out.mean_omega_plus.push_back(omega_sum / double(ok));

    auto emit = [&](const char* name, const std::vector<double>& losses) {
      double mean = 0.0;
      for (double v : losses) mean += v;
      mean /= double(losses.size());
      double ss = 0.0;
      for (double v : losses) ss += (v - mean) * (v - mean);
      double sd = losses.size() > 1 ? std::sqrt(ss / double(losses.size() - 1)) : 0.0;
      RiskEstimate est;
      est.delta = plan.contamination_grid[gi];
      est.estimator = name;
      est.risk = mean;
      est.std_err = sd / std::sqrt(double(losses.size()));
      est.n_reps = long(losses.size());
      out.estimates.push_back(est);
    };
    emit("cut", cut_losses);
    emit("exact", exact_losses);
    emit("smp", smp_losses);
  }

  double failure_rate =
      double(out.failed_replications) / double(std::max<long>(1, n_tasks));
  if (failure_rate > 0.01)
    throw SamplerDivergence("run_plan: replication failure rate " +
                            std::to_string(failure_rate) + " exceeds 1%");
  return out;
}

std::vector<BiasProbeRow> asymptotic_bias_probe(const ProbeHooks& hooks,
                                                const std::vector<long>& n_grid,
                                                long reps, std::uint64_t master_seed,
                                                int threads) {
  if (n_grid.empty() || reps < 2)
    throw InvalidInput("asymptotic_bias_probe: need a grid and reps >= 2");

  std::vector<BiasProbeRow> rows;
  for (size_t ni = 0; ni < n_grid.size(); ++ni) {
    const long n = n_grid[ni];
    // Per-replication average over coordinates of sqrt(n)*(estimate-truth).
    std::vector<double> cut_bias(reps), exact_bias(reps);
    parallel_for(reps, threads, [&](long rep) {
      std::uint64_t seed =
          derive_seed(master_seed, {std::uint64_t(ni), std::uint64_t(rep)});
      auto [cut, exact] = hooks.estimate(n, seed);
      double root_n = std::sqrt(double(n));
      cut_bias[rep] = root_n * (cut - hooks.truth_theta1).mean();
      exact_bias[rep] = root_n * (exact - hooks.truth_theta1).mean();
    });
    auto emit = [&](const char* name, const std::vector<double>& vals) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= double(vals.size());
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      BiasProbeRow row;
      row.n = n;
      row.estimator = name;
      row.sqrt_n_bias = mean;
      row.std_err = std::sqrt(ss / double(vals.size() - 1) / double(vals.size()));
      rows.push_back(row);
    };
    emit("cut", cut_bias);
    emit("exact", exact_bias);
  }
  return rows;
}

}  // namespace smi
