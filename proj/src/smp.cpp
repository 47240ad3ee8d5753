#include "smi/smp.hpp"

#include "smi/rng.hpp"

#include <cmath>
#include <limits>

namespace smi {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double estimate_gamma(const MatrixXd& curvature, const MatrixXd& cov_cut,
                      const MatrixXd& cov_exact, NumeratorMode mode) {
  const Eigen::Index k = curvature.rows();
  if (curvature.cols() != k || cov_cut.rows() != k || cov_cut.cols() != k)
    throw InvalidInput("estimate_gamma: dimension mismatch");
  if (mode != NumeratorMode::plain_cut_only &&
      (cov_exact.rows() != k || cov_exact.cols() != k))
    throw InvalidInput("estimate_gamma: dimension mismatch");

  switch (mode) {
    case NumeratorMode::conservative: {
      MatrixXd w = curvature * (cov_cut - cov_exact);
      return w.trace() - 2.0 * spectral_norm(w);
    }
    case NumeratorMode::plain:
      return (curvature * (cov_cut - cov_exact)).trace();
    case NumeratorMode::scalar:
      if (k != 1) throw InvalidInput("estimate_gamma: scalar mode needs k = 1");
      return curvature(0, 0) * (cov_cut(0, 0) - cov_exact(0, 0));
    case NumeratorMode::plain_cut_only:
      return (curvature * cov_cut).trace();
  }
  throw InvalidInput("estimate_gamma: unknown mode");
}

MixtureWeight estimate_weight(const PosteriorSummary& cut_summary,
                              const PosteriorSummary& exact_summary,
                              const MatrixXd& curvature, NumeratorMode mode,
                              std::optional<double> gamma_override) {
  const Eigen::Index k = cut_summary.mean.size();
  if (exact_summary.mean.size() != k || curvature.rows() != k || curvature.cols() != k)
    throw InvalidInput("estimate_weight: dimension mismatch");

  MixtureWeight w;
  w.numerator_mode = mode;
  w.gamma_hat = gamma_override
                    ? *gamma_override
                    : estimate_gamma(curvature, cut_summary.cov, exact_summary.cov, mode);

  VectorXd gap = cut_summary.mean - exact_summary.mean;
  w.location_gap = gap.dot(curvature * gap);
  if (w.location_gap < 0.0) w.location_gap = 0.0;  // PSD curvature round-off

  if (w.location_gap > 0.0) {
    w.omega_raw = w.gamma_hat / w.location_gap;
  } else {
    w.omega_raw = w.gamma_hat > 0.0 ? kInf : (w.gamma_hat < 0.0 ? -kInf : 0.0);
  }
  w.omega_plus = std::min(1.0, std::max(0.0, w.omega_raw));
  return w;
}

VectorXd smp_mean(const PosteriorSummary& cut_summary,
                  const PosteriorSummary& exact_summary, double omega_plus) {
  if (cut_summary.mean.size() != exact_summary.mean.size())
    throw InvalidInput("smp_mean: dimension mismatch");
  if (!(omega_plus >= 0.0 && omega_plus <= 1.0))
    throw InvalidInput("smp_mean: omega must lie in [0,1]");
  return (1.0 - omega_plus) * cut_summary.mean + omega_plus * exact_summary.mean;
}

SmpResult build_smp(const DrawSet& cut_draws, const DrawSet& exact_draws,
                    const MixtureWeight& weight, Eigen::Index n_out,
                    std::uint64_t seed) {
  if (n_out < 1) throw InvalidInput("build_smp: n_out must be positive");
  if (cut_draws.d1 != exact_draws.d1)
    throw InvalidInput("build_smp: theta1 blocks differ in dimension");

  // theta2 columns are carried only when both sources provide the
  // conditional draws; otherwise the mixture is materialized on theta1.
  const bool joint = cut_draws.d2 > 0 && exact_draws.d2 > 0;
  if (joint && cut_draws.d2 != exact_draws.d2)
    throw InvalidInput("build_smp: theta2 blocks differ in dimension");
  const Eigen::Index d1 = cut_draws.d1;
  const Eigen::Index d2 = joint ? cut_draws.d2 : 0;
  const Eigen::Index cols = d1 + d2;

  const auto n_exact = Eigen::Index(std::llround(weight.omega_plus * double(n_out)));
  const Eigen::Index n_cut = n_out - n_exact;
  if (n_cut > 0 && cut_draws.rows() == 0)
    throw InsufficientData("build_smp: cut draw set is empty");
  if (n_exact > 0 && exact_draws.rows() == 0)
    throw InsufficientData("build_smp: exact draw set is empty");

  Rng rng(seed);
  MatrixXd out(n_out, cols);
  for (Eigen::Index i = 0; i < n_cut; ++i) {
    auto row = rng.uniform_index(std::uint64_t(cut_draws.rows()));
    out.row(i) = cut_draws.draws.row(Eigen::Index(row)).head(cols);
  }
  for (Eigen::Index i = 0; i < n_exact; ++i) {
    auto row = rng.uniform_index(std::uint64_t(exact_draws.rows()));
    out.row(n_cut + i) = exact_draws.draws.row(Eigen::Index(row)).head(cols);
  }

  SmpResult res;
  res.weight = weight;
  res.cut_summary = summarize(cut_draws, Block::theta1);
  res.exact_summary = summarize(exact_draws, Block::theta1);
  res.smp_theta1_mean = smp_mean(res.cut_summary, res.exact_summary, weight.omega_plus);
  res.smp_draws = DrawSet(std::move(out), d1, d2, DrawLabel::smp);
  return res;
}

}  // namespace smi
