#include "smi/samplers.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace smi {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

long check_chain_budget(const McmcConfig& cfg) {
  if (cfg.n_iter <= 0 || cfg.burn_in < 0 || cfg.burn_in >= cfg.n_iter)
    throw InvalidInput("mcmc: need 0 <= burn_in < n_iter");
  if (cfg.thin < 1) throw InvalidInput("mcmc: thin must be >= 1");
  long kept = (cfg.n_iter - cfg.burn_in) / cfg.thin;
  if (kept < 1) throw InvalidInput("mcmc: no draws kept after burn-in/thinning");
  return kept;
}

}  // namespace

double effective_sample_size(const VectorXd& series) {
  const Eigen::Index s = series.size();
  if (s < 4) return double(s);
  double mean = series.mean();
  VectorXd c = series.array() - mean;
  double var = c.squaredNorm() / double(s);
  if (var <= 0.0) return double(s);
  double acf_sum = 0.0;
  const Eigen::Index max_lag = std::min<Eigen::Index>(s - 2, 500);
  for (Eigen::Index lag = 1; lag <= max_lag; ++lag) {
    double rho = c.head(s - lag).dot(c.tail(s - lag)) / (double(s) * var);
    if (rho < 0.0) break;
    acf_sum += rho;
  }
  return double(s) / (1.0 + 2.0 * acf_sum);
}

std::pair<DrawSet, ChainDiagnostics> adaptive_rwm(const TargetDensity& target,
                                                  const McmcConfig& cfg,
                                                  Eigen::Index d1, DrawLabel label) {
  const Eigen::Index dim = target.dim;
  if (dim < 1 || cfg.init.size() != dim)
    throw InvalidInput("adaptive_rwm: init dimension does not match target");
  const long kept = check_chain_budget(cfg);
  const long adapt_until = cfg.effective_adapt_until();
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0))
    throw InvalidInput("adaptive_rwm: target_accept must be in (0,1)");

  Rng rng(cfg.seed);
  VectorXd x = cfg.init;
  double lp = target.log_density(x);
  if (!std::isfinite(lp)) throw InvalidInput("adaptive_rwm: init outside support");

  double log_scale = std::log(2.38 / std::sqrt(double(dim)));
  MatrixXd chol = MatrixXd::Identity(dim, dim);

  // Running chain moments feeding the covariance adaptation.
  VectorXd run_mean = x;
  MatrixXd run_m2 = MatrixXd::Zero(dim, dim);
  long n_seen = 1;
  long n_accept_total = 0;
  long n_accept_adapt = 0;

  MatrixXd out(kept, dim);
  long written = 0;
  long accept_post_adapt = 0, post_adapt_iters = 0;

  VectorXd z(dim), y(dim);
  for (long t = 0; t < cfg.n_iter; ++t) {
    for (Eigen::Index j = 0; j < dim; ++j) z[j] = rng.normal();
    y = x + std::exp(log_scale) * (chol * z);
    double lp_y = target.log_density(y);
    double alpha = 0.0;
    bool accepted = false;
    if (lp_y > kNegInf) {
      alpha = std::min(1.0, std::exp(lp_y - lp));
      if (rng.uniform() < alpha) {
        x = y;
        lp = lp_y;
        accepted = true;
        ++n_accept_total;
        if (t < adapt_until) ++n_accept_adapt;
      }
    }
    if (t >= adapt_until) {
      ++post_adapt_iters;
      if (accepted) ++accept_post_adapt;
    }

    if (t < adapt_until) {
      // Robbins-Monro on the log proposal scale.
      double gain = 1.0 / std::pow(double(t + 1), 0.6);
      log_scale += gain * (alpha - cfg.target_accept);

      VectorXd delta = x - run_mean;
      run_mean += delta / double(n_seen + 1);
      run_m2 += delta * (x - run_mean).transpose();
      ++n_seen;
      if (n_accept_adapt >= 2 * dim && n_seen > dim + 2 && (t % 50) == 49) {
        MatrixXd cov = run_m2 / double(n_seen - 1);
        cov += 1e-10 * cov.trace() / double(dim) * MatrixXd::Identity(dim, dim);
        Eigen::LLT<MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) chol = llt.matrixL();
      }
    }

    if (t >= cfg.burn_in && ((t - cfg.burn_in) % cfg.thin) == 0 && written < kept) {
      out.row(written++) = x.transpose();
    }
  }

  ChainDiagnostics diag;
  diag.accept_rate = double(n_accept_total) / double(cfg.n_iter);
  diag.final_step_scale = std::exp(log_scale);
  VectorXd ess(dim);
  for (Eigen::Index j = 0; j < dim; ++j) ess[j] = effective_sample_size(out.col(j));
  diag.ess_min = ess.minCoeff();
  if (post_adapt_iters > 0 && accept_post_adapt == 0) {
    diag.degenerate = true;
    diag.warning = "no accepted proposals after adaptation";
  }

  if (d1 < 0) d1 = dim;
  return {DrawSet(std::move(out), d1, dim - d1, label), diag};
}

DrawSet gibbs_compose(const std::vector<GibbsBlock>& blocks, const McmcConfig& cfg,
                      Eigen::Index d1, DrawLabel label) {
  if (blocks.empty()) throw InvalidInput("gibbs_compose: no blocks");
  const Eigen::Index dim = cfg.init.size();
  if (dim < 1) throw InvalidInput("gibbs_compose: empty init state");
  const long kept = check_chain_budget(cfg);

  Rng rng(cfg.seed);
  VectorXd state = cfg.init;
  if (!state.allFinite()) throw InvalidInput("gibbs_compose: non-finite init");

  MatrixXd out(kept, dim);
  long written = 0;
  for (long t = 0; t < cfg.n_iter; ++t) {
    for (const auto& block : blocks) {
      block.update(state, rng);
      if (!state.allFinite())
        throw SamplerDivergence("gibbs_compose: block '" + block.name +
                                "' produced a non-finite value");
    }
    if (t >= cfg.burn_in && ((t - cfg.burn_in) % cfg.thin) == 0 && written < kept) {
      out.row(written++) = state.transpose();
    }
  }
  if (d1 < 0) d1 = dim;
  return DrawSet(std::move(out), d1, dim - d1, label);
}

DrawSet sir_resample(const DrawSet& proposal_draws, const VectorXd& log_weights,
                     Eigen::Index n_out, std::uint64_t seed) {
  const Eigen::Index s = proposal_draws.rows();
  if (log_weights.size() != s)
    throw InvalidInput("sir_resample: weight count does not match draws");
  if (n_out < 1) throw InvalidInput("sir_resample: n_out must be positive");

  double max_lw = log_weights.maxCoeff();
  if (!std::isfinite(max_lw))
    throw DegenerateWeights("sir_resample: all weights are -inf");

  VectorXd w = (log_weights.array() - max_lw).exp();
  double total = w.sum();

  // Inverse-CDF multinomial draw per output row.
  VectorXd cdf(s);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) {
    acc += w[i];
    cdf[i] = acc;
  }

  Rng rng(seed);
  MatrixXd out(n_out, proposal_draws.draws.cols());
  for (Eigen::Index i = 0; i < n_out; ++i) {
    double u = rng.uniform() * total;
    auto it = std::lower_bound(cdf.data(), cdf.data() + s, u);
    Eigen::Index idx = std::min<Eigen::Index>(it - cdf.data(), s - 1);
    out.row(i) = proposal_draws.draws.row(idx);
  }
  return DrawSet(std::move(out), proposal_draws.d1, proposal_draws.d2,
                 proposal_draws.label);
}

std::pair<VectorXd, MatrixXd> conjugate_normal_mean(const VectorXd& prior_mean,
                                                    const MatrixXd& prior_cov,
                                                    const VectorXd& obs_mean,
                                                    const MatrixXd& obs_cov_over_n) {
  const Eigen::Index d = prior_mean.size();
  if (prior_cov.rows() != d || prior_cov.cols() != d || obs_mean.size() != d ||
      obs_cov_over_n.rows() != d || obs_cov_over_n.cols() != d)
    throw InvalidInput("conjugate_normal_mean: dimension mismatch");

  Eigen::LLT<MatrixXd> prior_llt(prior_cov);
  Eigen::LLT<MatrixXd> obs_llt(obs_cov_over_n);
  if (prior_llt.info() != Eigen::Success || obs_llt.info() != Eigen::Success)
    throw InvalidInput("conjugate_normal_mean: covariance not positive definite");

  MatrixXd eye = MatrixXd::Identity(d, d);
  MatrixXd prior_prec = prior_llt.solve(eye);
  MatrixXd obs_prec = obs_llt.solve(eye);
  Eigen::LLT<MatrixXd> post_llt(MatrixXd(prior_prec + obs_prec));
  if (post_llt.info() != Eigen::Success)
    throw InvalidInput("conjugate_normal_mean: posterior precision not PD");
  MatrixXd post_cov = post_llt.solve(eye);
  VectorXd post_mean = post_cov * (prior_prec * prior_mean + obs_prec * obs_mean);
  return {post_mean, 0.5 * (post_cov + post_cov.transpose())};
}

std::pair<double, double> conjugate_inverse_gamma(double shape_prior, double rate_prior,
                                                  double sum_sq, double n_terms) {
  double shape_post = shape_prior + 0.5 * n_terms;
  double rate_post = rate_prior + 0.5 * sum_sq;
  if (!(shape_post > 0.0) || !(rate_post > 0.0))
    throw InvalidInput("conjugate_inverse_gamma: nonpositive posterior parameters");
  return {shape_post, rate_post};
}

}  // namespace smi
