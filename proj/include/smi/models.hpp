#ifndef SMI_MODELS_HPP
#define SMI_MODELS_HPP

#include "smi/samplers.hpp"
#include "smi/smp.hpp"
#include "smi/types.hpp"

#include <string>
#include <vector>

namespace smi {

// ---------------------------------------------------------------------------
// Multivariate biased mean: two Gaussian samples sharing a mean, the second
// suspected of contamination.  Module 1 = y1 with unit errors and N(0,I)
// prior on theta1; module 2 = y2 with scale sigma^2 and prior 1/sigma^2.
// ---------------------------------------------------------------------------

struct BiasedMeanData {
  MatrixXd y1;  // n1 x d1
  MatrixXd y2;  // n2 x d1
};

class BiasedMeanModel {
 public:
  BiasedMeanModel(Eigen::Index d1, Eigen::Index n1 = 100, Eigen::Index n2 = 1000);

  Eigen::Index d1() const { return d1_; }
  Eigen::Index n1() const { return n1_; }
  Eigen::Index n2() const { return n2_; }
  const VectorXd& truth() const { return truth_; }

  /// Second-sample errors are N(-0.25*1, 0.1^2 I) with probability delta and
  /// N(0, 0.5 I) otherwise, mixed per observation vector.
  BiasedMeanData simulate(double delta, std::uint64_t seed) const;

  /// Conjugate cut posterior for theta1 (module 1 only).
  std::pair<VectorXd, MatrixXd> cut_posterior(const BiasedMeanData& data) const;
  /// Exact Gaussian draws from the cut posterior, with sigma^2 drawn from the
  /// shared conditional posterior attached as the theta2 column.
  DrawSet cut_draws(const BiasedMeanData& data, Eigen::Index n_draws,
                    std::uint64_t seed) const;
  /// Systematic Gibbs over theta1 | sigma^2 and sigma^2 | theta1.
  DrawSet exact_draws(const BiasedMeanData& data, const McmcConfig& cfg) const;
  /// Exact posterior with sigma^2 pinned (known-variance conjugacy).
  std::pair<VectorXd, MatrixXd> exact_posterior_known_sigma(const BiasedMeanData& data,
                                                            double sigma2) const;

  double log_f1(const BiasedMeanData& data, const VectorXd& theta1) const;
  double log_f2(const BiasedMeanData& data, const VectorXd& theta1, double sigma2) const;
  double log_prior1(const VectorXd& theta1) const;
  double log_prior2(double sigma2) const;
  /// log f1 + log prior1; the theta1 kernel targeted by the cut posterior.
  double cut_log_kernel(const BiasedMeanData& data, const VectorXd& theta1) const;
  /// theta2 conditional kernel shared by cut and exact pipelines.
  double conditional_log_kernel(const BiasedMeanData& data, const VectorXd& theta1,
                                double sigma2) const;

 private:
  Eigen::Index d1_, n1_, n2_;
  VectorXd truth_;
};

/// Local-misspecification probe around the biased-mean system with known
/// module-2 variance, equal sample sizes and contamination probability
/// psi/sqrt(n).  Both posterior means are conjugate, and the drift limit of
/// the exact mean is available in closed form.
struct BiasedMeanLocalProbe {
  Eigen::Index d1 = 1;
  double sigma2 = 0.5;  // known module-2 error variance
  double psi = 1.0;     // drift size in delta_n = psi / sqrt(n)

  /// (cut mean, exact mean) for one simulated dataset of size n per module.
  std::pair<VectorXd, VectorXd> estimate(long n, std::uint64_t seed) const;
  /// Asymptotic sqrt(n)-bias of the exact posterior mean, per coordinate:
  /// -0.25 psi (1/sigma2) / (1 + 1/sigma2).
  double exact_bias_limit() const;
};

// ---------------------------------------------------------------------------
// Normal-normal random effects: groups with residual scales phi_i (module 1,
// via the within-group sums of squares) and random effects beta_i with scale
// psi (module 2, via the group means).
// ---------------------------------------------------------------------------

struct RandomEffectsData {
  VectorXd zbar;  // group means, length N
  VectorXd s2;    // within-group sums of squares, length N
  Eigen::Index n_groups = 0;
  Eigen::Index obs_per_group = 0;
};

class RandomEffectsModel {
 public:
  RandomEffectsModel(Eigen::Index n_groups = 100, Eigen::Index obs_per_group = 10,
                     bool paper_kernel = false);

  Eigen::Index n_groups() const { return n_groups_; }
  Eigen::Index obs_per_group() const { return obs_per_group_; }
  /// theta1 truth: all residual scales equal 0.5.
  VectorXd truth() const;

  /// beta_1 = X_1 + delta with X_1 ~ N(0,1); all other beta_i ~ N(0,1).
  RandomEffectsData simulate(double delta, std::uint64_t seed) const;

  /// Independent inverse-gamma draws per group, square-rooted to phi.
  DrawSet cut_draws(const RandomEffectsData& data, Eigen::Index n_draws,
                    std::uint64_t seed) const;
  /// Gibbs over beta | rest, phi^2 | rest, psi^2 | beta.  Draw layout:
  /// phi (N) | psi | beta (N), with d1 = N.
  DrawSet exact_draws(const RandomEffectsData& data, const McmcConfig& cfg) const;

  /// Cut posterior kernel for one group's phi (not phi^2), log scale.
  double cut_log_kernel_phi(double phi, double s2_i) const;
  std::pair<double, double> cut_inverse_gamma_params(double s2_i) const;

 private:
  Eigen::Index n_groups_, obs_per_group_;
  bool paper_kernel_;
};

// ---------------------------------------------------------------------------
// HPV prevalence (binomial survey module) and cervical cancer incidence
// (Poisson regression module).
// ---------------------------------------------------------------------------

struct HpvRow {
  std::string country;
  long x_hpv = 0;
  long n_survey = 0;
  long y_cancer = 0;
  double t_womanyears = 0.0;
};

struct HpvData {
  std::vector<HpvRow> rows;
  Eigen::Index count() const { return Eigen::Index(rows.size()); }
};

/// Reads `country,x_hpv,n_survey,y_cancer,t_womanyears`.  Throws ParseError
/// with the offending row number; emits a warning (returned via the optional
/// pointer) when the file does not hold exactly 13 data rows.
HpvData hpv_load(const std::string& path, std::string* warning = nullptr);

class HpvModel {
 public:
  explicit HpvModel(HpvData data);

  const HpvData& data() const { return data_; }
  Eigen::Index d1() const { return data_.count(); }

  /// theta1_i ~ Beta(X_i+1, n_i-X_i+1) independently; theta2 attached by
  /// sampling-importance-resampling from a normal approximation to the
  /// conditional posterior (sir_proposals draws per theta1 draw).
  DrawSet cut_draws(Eigen::Index n_draws, std::uint64_t seed,
                    Eigen::Index sir_proposals = 1000) const;
  /// Adaptive random-walk Metropolis on (logit theta1, theta2), 15 dims for
  /// the 13-country dataset.
  DrawSet exact_draws(const McmcConfig& cfg) const;
  McmcConfig default_exact_config(std::uint64_t seed) const;

  /// Mean vector of the Beta cut marginals, (X_i+1)/(n_i+2).
  VectorXd cut_beta_means() const;

  /// Scalar-loss SMP for country j (0-based) built from marginal summaries.
  SmpResult smp_per_country(const DrawSet& cut, const DrawSet& exact, Eigen::Index j,
                            Eigen::Index n_out, std::uint64_t seed) const;

  double log_f1(const VectorXd& theta1) const;
  double log_f2(const VectorXd& theta1, const Eigen::Vector2d& theta2) const;
  double log_prior1(const VectorXd& theta1) const;
  double log_prior2(const Eigen::Vector2d& theta2) const;
  double cut_log_kernel(const VectorXd& theta1) const;
  double conditional_log_kernel(const VectorXd& theta1,
                                const Eigen::Vector2d& theta2) const;

  /// Mode and covariance of the normal approximation to the theta2
  /// conditional; falls back to the diagonal Hessian when the curvature is
  /// not positive definite (fallback flagged through *used_fallback).
  std::pair<Eigen::Vector2d, Eigen::Matrix2d> conditional_normal_approx(
      const VectorXd& theta1, bool* used_fallback = nullptr) const;

  /// Synthetic data drawn from the assumed model itself.  Countries listed
  /// in distort get their Poisson means multiplied by distort_factor, which
  /// makes the incidence module grossly inconsistent with the survey module.
  static HpvData synthesize(std::uint64_t seed, const std::vector<int>& distort = {},
                            double distort_factor = 1.0);

 private:
  HpvData data_;
};

}  // namespace smi

#endif  // SMI_MODELS_HPP
