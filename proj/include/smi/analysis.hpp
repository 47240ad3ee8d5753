#ifndef SMI_ANALYSIS_HPP
#define SMI_ANALYSIS_HPP

#include "smi/types.hpp"

#include <string>

namespace smi {

/// Ingredients of the limiting risk quadratic: information blocks for the
/// cut (I_p(11)) and exact (I_11.2) posteriors, the composite drift vector
/// eta_1 - I_12 I_22^{-1} eta_2, and the loss curvature.
struct AsymptoticSpec {
  MatrixXd info_p11;
  MatrixXd info_11_2;
  VectorXd bias_vec;
  MatrixXd curvature;
};

/// Empty string when well posed; otherwise a warning (inverse-information
/// gap not PSD).
std::string validate(const AsymptoticSpec& spec);

/// Risk-optimal mixing weight: t / (b' A' U A b + t) when
/// t = tr U (I_p(11)^{-1} - I_11.2^{-1}) > 0, else 0 (A = I_11.2^{-1}).
double omega_star(const AsymptoticSpec& spec);

/// Limiting risk of the omega-mixture:
/// tr U I_p(11)^{-1} + w^2 [t + drift] - 2 w t.
double risk_quadratic(const AsymptoticSpec& spec, double omega);

/// Kummer's confluent hypergeometric 1F1(a; b; x) for b > 0, x >= 0.
double hypergeom_1f1(double a, double b, double x);

/// E[1/Z] for the Poisson(lambda)-mixed chi-squared with kappa base degrees
/// of freedom: 2^{-1} G(k/2-1)/G(k/2) e^{-lambda} 1F1(k/2-1; k/2; lambda).
/// Requires kappa > 2.
double inv_noncentral_chisq_mean(double kappa, double lambda);

/// The printed risk gap R0(cut) - R0(SMP):
/// gamma {2(d1-2) - gamma} (d1-3)! / (2 d1!) * 1F1(d1-1; d1; lambda).
double corollary2_risk_gap(double gamma, int d1, double lambda);

/// Upper bound on the limiting SMP risk in the uncorrelated isotropic case:
/// d1 tau^2 - gamma tau^4 {2(d1-2) - gamma} / (eta'eta + d1 (sigma^2+tau^2)).
double lemma1_bound(int d1, double tau2, double sigma2, double eta_norm2,
                    double gamma);

}  // namespace smi

#endif  // SMI_ANALYSIS_HPP
