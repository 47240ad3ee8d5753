#ifndef SMI_SMP_HPP
#define SMI_SMP_HPP

#include "smi/core.hpp"
#include "smi/types.hpp"

#include <optional>

namespace smi {

/// Semi-modular posterior assembled from cut and exact ingredients.
struct SmpResult {
  MixtureWeight weight;
  VectorXd smp_theta1_mean;  // (1-w)*cut mean + w*exact mean, exact arithmetic
  DrawSet smp_draws;
  PosteriorSummary cut_summary;
  PosteriorSummary exact_summary;
};

/// Shrinkage numerator gamma-hat built from the posterior covariance gap
/// W = Upsilon * (cov_cut - cov_exact):
///   conservative    tr W - 2 ||W||
///   plain           tr W
///   scalar          W itself (k = 1 only)
///   plain_cut_only  tr(Upsilon * cov_cut), the exact covariance dropped
/// The covariances are raw finite-sample posterior covariances, so gamma-hat
/// carries the same 1/n scale as the unscaled location gap and the sample
/// size cancels from the weight.
double estimate_gamma(const MatrixXd& curvature, const MatrixXd& cov_cut,
                      const MatrixXd& cov_exact, NumeratorMode mode);

/// Mixing weight: omega_raw = gamma_hat / (gap' Upsilon gap), clamped to
/// [0,1].  A zero location gap resolves to 1 when gamma_hat > 0 and to 0
/// otherwise.  gamma_override substitutes a user-chosen shrinkage constant.
MixtureWeight estimate_weight(const PosteriorSummary& cut_summary,
                              const PosteriorSummary& exact_summary,
                              const MatrixXd& curvature, NumeratorMode mode,
                              std::optional<double> gamma_override = std::nullopt);

/// Materializes mixture draws: exactly round(omega_plus * n_out) rows are
/// resampled (with replacement) from the exact draws and the remainder from
/// the cut draws.  theta2 columns are carried when both sources have them.
SmpResult build_smp(const DrawSet& cut_draws, const DrawSet& exact_draws,
                    const MixtureWeight& weight, Eigen::Index n_out,
                    std::uint64_t seed);

/// (1-omega)*cut mean + omega*exact mean.
VectorXd smp_mean(const PosteriorSummary& cut_summary,
                  const PosteriorSummary& exact_summary, double omega_plus);

}  // namespace smi

#endif  // SMI_SMP_HPP
