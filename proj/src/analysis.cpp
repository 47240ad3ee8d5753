#include "smi/analysis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace smi {

namespace {

struct RiskPieces {
  double cut_risk;   // tr U I_p(11)^{-1}
  double trace_gap;  // tr U (I_p(11)^{-1} - I_11.2^{-1})
  double drift;      // b' I_11.2^{-1} U I_11.2^{-1} b
};

RiskPieces risk_pieces(const AsymptoticSpec& spec) {
  const Eigen::Index d = spec.info_p11.rows();
  if (spec.info_p11.cols() != d || spec.info_11_2.rows() != d ||
      spec.info_11_2.cols() != d || spec.curvature.rows() != d ||
      spec.curvature.cols() != d || spec.bias_vec.size() != d)
    throw InvalidInput("AsymptoticSpec: dimension mismatch");

  Eigen::LLT<MatrixXd> llt_p(spec.info_p11);
  Eigen::LLT<MatrixXd> llt_e(spec.info_11_2);
  if (llt_p.info() != Eigen::Success || llt_e.info() != Eigen::Success)
    throw InvalidInput("AsymptoticSpec: information matrix not positive definite");

  MatrixXd eye = MatrixXd::Identity(d, d);
  MatrixXd inv_p = llt_p.solve(eye);
  MatrixXd inv_e = llt_e.solve(eye);

  RiskPieces out;
  out.cut_risk = (spec.curvature * inv_p).trace();
  out.trace_gap = (spec.curvature * (inv_p - inv_e)).trace();
  VectorXd v = inv_e * spec.bias_vec;
  out.drift = v.dot(spec.curvature * v);
  return out;
}

}  // namespace

std::string validate(const AsymptoticSpec& spec) {
  const Eigen::Index d = spec.info_p11.rows();
  Eigen::LLT<MatrixXd> llt_p(spec.info_p11);
  Eigen::LLT<MatrixXd> llt_e(spec.info_11_2);
  if (llt_p.info() != Eigen::Success || llt_e.info() != Eigen::Success)
    return "information matrix not positive definite";
  MatrixXd eye = MatrixXd::Identity(d, d);
  MatrixXd gap = llt_p.solve(eye) - llt_e.solve(eye);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (gap + gap.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-10 * std::abs(gap.trace()))
    return "inverse-information gap is not positive semi-definite; "
           "the cut posterior is not the higher-variance member";
  return {};
}

double omega_star(const AsymptoticSpec& spec) {
  RiskPieces p = risk_pieces(spec);
  if (p.trace_gap <= 0.0) return 0.0;
  return p.trace_gap / (p.drift + p.trace_gap);
}

double risk_quadratic(const AsymptoticSpec& spec, double omega) {
  if (!(omega >= 0.0 && omega <= 1.0))
    throw InvalidInput("risk_quadratic: omega must lie in [0,1]");
  RiskPieces p = risk_pieces(spec);
  return p.cut_risk + omega * omega * (p.trace_gap + p.drift) - 2.0 * omega * p.trace_gap;
}

namespace {

// Plain Kummer series with the term-ratio recurrence; |x| may be on either
// side of zero.  The k > |x| guard stops alternating series from reporting
// convergence before their terms peak.
double kummer_series(double a, double b, double x) {
  double term = 1.0, sum = 1.0;
  for (long k = 0; k < 100000; ++k) {
    term *= (a + double(k)) * x / ((b + double(k)) * double(k + 1));
    sum += term;
    if (std::abs(term) < 1e-14 * std::abs(sum) && double(k) > std::abs(x))
      return sum;
  }
  throw NumericError("hypergeom_1f1: series did not converge");
}

}  // namespace

double hypergeom_1f1(double a, double b, double x) {
  if (!(b > 0.0)) throw InvalidInput("hypergeom_1f1: requires b > 0");
  if (!(x >= 0.0)) throw InvalidInput("hypergeom_1f1: requires x >= 0");
  // With a, b > 0 and x >= 0 every term is positive, so the direct series
  // is stable at any x this code evaluates; the e^x 1F1(b-a;b;-x) transform
  // loses all precision here through cancellation and is not used.
  return kummer_series(a, b, x);
}

double inv_noncentral_chisq_mean(double kappa, double lambda) {
  if (!(kappa > 2.0))
    throw InvalidInput("inv_noncentral_chisq_mean: moment does not exist for kappa <= 2");
  if (!(lambda >= 0.0))
    throw InvalidInput("inv_noncentral_chisq_mean: lambda must be nonnegative");
  const double half = 0.5 * kappa;
  // Gamma(half-1)/Gamma(half) = 1/(half-1).
  const double gamma_ratio = 1.0 / (half - 1.0);
  if (lambda > 30.0) {
    // Same quantity as a Poisson(lambda) average of (half-1)/(half-1+j),
    // summed in log space so neither factor under- or overflows.
    double width = 12.0 * std::sqrt(lambda) + 12.0;
    long j_lo = std::max(0L, long(lambda - width));
    long j_hi = long(lambda + width);
    double sum = 0.0;
    for (long j = j_lo; j <= j_hi; ++j) {
      double log_pmf = -lambda + double(j) * std::log(lambda) - std::lgamma(double(j) + 1.0);
      sum += std::exp(log_pmf) * (half - 1.0) / (half - 1.0 + double(j));
    }
    return 0.5 * gamma_ratio * sum;
  }
  return 0.5 * gamma_ratio * std::exp(-lambda) * hypergeom_1f1(half - 1.0, half, lambda);
}

double corollary2_risk_gap(double gamma, int d1, double lambda) {
  if (d1 <= 2) throw InvalidInput("corollary2_risk_gap: requires d1 > 2");
  if (!(gamma > 0.0 && gamma < 2.0 * double(d1 - 2)))
    throw InvalidInput("corollary2_risk_gap: requires 0 < gamma < 2(d1-2)");
  if (!(lambda >= 0.0))
    throw InvalidInput("corollary2_risk_gap: lambda must be nonnegative");
  // (d1-3)!/(2 d1!) via log-gamma so large d1 does not overflow.
  double log_fact_ratio = std::lgamma(double(d1 - 2)) - std::lgamma(double(d1 + 1));
  return gamma * (2.0 * double(d1 - 2) - gamma) * 0.5 * std::exp(log_fact_ratio) *
         hypergeom_1f1(double(d1 - 1), double(d1), lambda);
}

double lemma1_bound(int d1, double tau2, double sigma2, double eta_norm2,
                    double gamma) {
  if (d1 <= 2) throw InvalidInput("lemma1_bound: requires d1 > 2");
  if (!(gamma > 0.0 && gamma <= 2.0 * double(d1 - 2)))
    throw InvalidInput("lemma1_bound: requires 0 < gamma <= 2(d1-2)");
  if (!(tau2 > 0.0) || !(sigma2 >= 0.0) || !(eta_norm2 >= 0.0))
    throw InvalidInput("lemma1_bound: bad variance arguments");
  double denom = eta_norm2 + double(d1) * (sigma2 + tau2);
  return double(d1) * tau2 -
         gamma * tau2 * tau2 * (2.0 * double(d1 - 2) - gamma) / denom;
}

}  // namespace smi
