#ifndef SMI_SAMPLERS_HPP
#define SMI_SAMPLERS_HPP

#include "smi/rng.hpp"
#include "smi/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace smi {

/// Log target up to a constant; must return -inf (not throw) outside the
/// support and must be callable from any thread.
struct TargetDensity {
  std::function<double(const VectorXd&)> log_density;
  Eigen::Index dim = 0;
};

struct McmcConfig {
  long n_iter = 0;
  long burn_in = 0;
  long thin = 1;
  std::uint64_t seed = 0;
  VectorXd init;
  double target_accept = 0.234;  // use 0.44 for one-dimensional chains
  long adapt_until = -1;         // -1: adapt during burn-in, frozen after

  long effective_adapt_until() const {
    return adapt_until < 0 ? burn_in : adapt_until;
  }
};

struct ChainDiagnostics {
  double accept_rate = 0.0;
  double ess_min = 0.0;
  double final_step_scale = 0.0;
  bool degenerate = false;
  std::string warning;
};

/// Gaussian random-walk Metropolis.  The proposal scale follows a
/// Robbins-Monro recursion toward target_accept and the proposal covariance
/// tracks the running chain covariance once 2*dim moves have been accepted;
/// both are frozen after adapt_until iterations so the post-adaptation chain
/// has the correct stationary law.  Output is a deterministic function of
/// (target, cfg).
std::pair<DrawSet, ChainDiagnostics> adaptive_rwm(const TargetDensity& target,
                                                  const McmcConfig& cfg,
                                                  Eigen::Index d1 = -1,
                                                  DrawLabel label = DrawLabel::exact);

struct GibbsBlock {
  std::string name;
  std::function<void(VectorXd&, Rng&)> update;
};

/// Systematic-scan Gibbs / Metropolis-within-Gibbs over the given blocks.
DrawSet gibbs_compose(const std::vector<GibbsBlock>& blocks, const McmcConfig& cfg,
                      Eigen::Index d1 = -1, DrawLabel label = DrawLabel::exact);

/// Multinomial resampling with weights exp(logw - max logw).
DrawSet sir_resample(const DrawSet& proposal_draws, const VectorXd& log_weights,
                     Eigen::Index n_out, std::uint64_t seed);

/// Gaussian conjugate update of a mean parameter.
std::pair<VectorXd, MatrixXd> conjugate_normal_mean(const VectorXd& prior_mean,
                                                    const MatrixXd& prior_cov,
                                                    const VectorXd& obs_mean,
                                                    const MatrixXd& obs_cov_over_n);

/// Inverse-gamma update for a variance parameter:
/// shape + n_terms/2, rate + sum_sq/2.
std::pair<double, double> conjugate_inverse_gamma(double shape_prior, double rate_prior,
                                                  double sum_sq, double n_terms);

/// Effective sample size of one scalar series (initial monotone positive
/// autocorrelation sum).
double effective_sample_size(const VectorXd& series);

}  // namespace smi

#endif  // SMI_SAMPLERS_HPP
