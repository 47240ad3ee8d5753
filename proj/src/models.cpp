#include "smi/models.hpp"

#include "smi/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace smi {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Biased mean
// ---------------------------------------------------------------------------

BiasedMeanModel::BiasedMeanModel(Eigen::Index d1, Eigen::Index n1, Eigen::Index n2)
    : d1_(d1), n1_(n1), n2_(n2), truth_(VectorXd::Zero(d1)) {
  if (d1 < 1 || n1 < 2 || n2 < 0)
    throw InvalidInput("BiasedMeanModel: need d1 >= 1, n1 >= 2");
}

BiasedMeanData BiasedMeanModel::simulate(double delta, std::uint64_t seed) const {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw InvalidInput("biased_mean_simulate: delta must lie in [0,1]");
  Rng rng(seed);
  BiasedMeanData data;
  data.y1.resize(n1_, d1_);
  data.y2.resize(n2_, d1_);
  for (Eigen::Index i = 0; i < n1_; ++i)
    for (Eigen::Index j = 0; j < d1_; ++j)
      data.y1(i, j) = truth_[j] + rng.normal();
  const double clean_sd = std::sqrt(0.5);
  for (Eigen::Index i = 0; i < n2_; ++i) {
    bool contaminated = rng.uniform() < delta;
    for (Eigen::Index j = 0; j < d1_; ++j) {
      double eps = contaminated ? (-0.25 + 0.1 * rng.normal()) : clean_sd * rng.normal();
      data.y2(i, j) = truth_[j] + eps;
    }
  }
  return data;
}

std::pair<VectorXd, MatrixXd> BiasedMeanModel::cut_posterior(
    const BiasedMeanData& data) const {
  VectorXd y1bar = data.y1.colwise().mean();
  return conjugate_normal_mean(VectorXd::Zero(d1_), MatrixXd::Identity(d1_, d1_),
                               y1bar, MatrixXd::Identity(d1_, d1_) / double(n1_));
}

DrawSet BiasedMeanModel::cut_draws(const BiasedMeanData& data, Eigen::Index n_draws,
                                   std::uint64_t seed) const {
  auto [mean, cov] = cut_posterior(data);
  const double sd = std::sqrt(cov(0, 0));
  const Eigen::Index n2 = data.y2.rows();
  const VectorXd y2bar =
      n2 > 0 ? VectorXd(data.y2.colwise().mean()) : VectorXd(VectorXd::Zero(d1_));
  const double sumsq2 = data.y2.squaredNorm();

  Rng rng(seed);
  MatrixXd out(n_draws, d1_ + 1);
  VectorXd th(d1_);
  for (Eigen::Index s = 0; s < n_draws; ++s) {
    for (Eigen::Index j = 0; j < d1_; ++j) th[j] = mean[j] + sd * rng.normal();
    out.row(s).head(d1_) = th.transpose();
    if (n2 > 0) {
      double ss = sumsq2 - 2.0 * double(n2) * th.dot(y2bar) +
                  double(n2) * th.squaredNorm();
      auto [shape, rate] = conjugate_inverse_gamma(0.0, 0.0, ss, double(n2 * d1_));
      out(s, d1_) = rng.inverse_gamma(shape, rate);
    } else {
      out(s, d1_) = 1.0;  // no module-2 data: conditional is the improper prior
    }
  }
  return DrawSet(std::move(out), d1_, 1, DrawLabel::cut);
}

DrawSet BiasedMeanModel::exact_draws(const BiasedMeanData& data,
                                     const McmcConfig& cfg) const {
  const Eigen::Index n2 = data.y2.rows();
  if (n2 == 0) {
    // Second dataset empty: the exact posterior coincides with the cut.
    return cut_draws(data, std::max<long>(1, (cfg.n_iter - cfg.burn_in) / cfg.thin),
                     cfg.seed);
  }
  const VectorXd y1bar = data.y1.colwise().mean();
  const VectorXd y2bar = data.y2.colwise().mean();
  const double sumsq2 = data.y2.squaredNorm();
  const Eigen::Index d = d1_;
  const double n1 = double(n1_), n2d = double(n2);

  auto ss2 = [=](const VectorXd& th) {
    return sumsq2 - 2.0 * n2d * th.dot(y2bar) + n2d * th.squaredNorm();
  };

  std::vector<GibbsBlock> blocks;
  blocks.push_back({"theta1", [=](VectorXd& state, Rng& rng) {
                      double sigma2 = state[d];
                      double prec = n1 + 1.0 + n2d / sigma2;
                      double sd = 1.0 / std::sqrt(prec);
                      for (Eigen::Index j = 0; j < d; ++j) {
                        double m = (n1 * y1bar[j] + (n2d / sigma2) * y2bar[j]) / prec;
                        state[j] = m + sd * rng.normal();
                      }
                    }});
  blocks.push_back({"sigma2", [=](VectorXd& state, Rng& rng) {
                      VectorXd th = state.head(d);
                      auto [shape, rate] =
                          conjugate_inverse_gamma(0.0, 0.0, ss2(th), n2d * double(d));
                      state[d] = rng.inverse_gamma(shape, rate);
                    }});

  McmcConfig run = cfg;
  if (run.init.size() == 0) {
    run.init.resize(d + 1);
    run.init.head(d) = y1bar;
    double s0 = (sumsq2 - n2d * y2bar.squaredNorm()) / (n2d * double(d));
    run.init[d] = std::max(s0, 1e-8);
  }
  return gibbs_compose(blocks, run, d, DrawLabel::exact);
}

std::pair<VectorXd, MatrixXd> BiasedMeanModel::exact_posterior_known_sigma(
    const BiasedMeanData& data, double sigma2) const {
  auto [m1, c1] = cut_posterior(data);
  VectorXd y2bar = data.y2.colwise().mean();
  MatrixXd obs_cov = sigma2 / double(data.y2.rows()) * MatrixXd::Identity(d1_, d1_);
  return conjugate_normal_mean(m1, c1, y2bar, obs_cov);
}

double BiasedMeanModel::log_f1(const BiasedMeanData& data, const VectorXd& theta1) const {
  double ss = (data.y1.rowwise() - theta1.transpose()).squaredNorm();
  return -0.5 * ss - 0.5 * double(data.y1.size()) * std::log(2.0 * M_PI);
}

double BiasedMeanModel::log_f2(const BiasedMeanData& data, const VectorXd& theta1,
                               double sigma2) const {
  if (!(sigma2 > 0.0)) return kNegInf;
  double ss = (data.y2.rowwise() - theta1.transpose()).squaredNorm();
  double n = double(data.y2.size());
  return -0.5 * ss / sigma2 - 0.5 * n * std::log(2.0 * M_PI * sigma2);
}

double BiasedMeanModel::log_prior1(const VectorXd& theta1) const {
  return -0.5 * theta1.squaredNorm() - 0.5 * double(d1_) * std::log(2.0 * M_PI);
}

double BiasedMeanModel::log_prior2(double sigma2) const {
  return sigma2 > 0.0 ? -std::log(sigma2) : kNegInf;
}

double BiasedMeanModel::cut_log_kernel(const BiasedMeanData& data,
                                       const VectorXd& theta1) const {
  return log_f1(data, theta1) + log_prior1(theta1);
}

double BiasedMeanModel::conditional_log_kernel(const BiasedMeanData& data,
                                               const VectorXd& theta1,
                                               double sigma2) const {
  return log_f2(data, theta1, sigma2) + log_prior2(sigma2);
}

std::pair<VectorXd, VectorXd> BiasedMeanLocalProbe::estimate(long n,
                                                             std::uint64_t seed) const {
  if (n < 2) throw InvalidInput("BiasedMeanLocalProbe: n too small");
  const double delta_n = psi / std::sqrt(double(n));
  Rng rng(seed);
  const double nd = double(n);

  VectorXd xbar(d1), ybar(d1);
  // Sufficient statistics of the two samples; module 2 is the contamination
  // mixture with probability delta_n.
  for (Eigen::Index j = 0; j < d1; ++j) xbar[j] = rng.normal() / std::sqrt(nd);
  long k = rng.binomial(n, std::min(1.0, std::max(0.0, delta_n)));
  for (Eigen::Index j = 0; j < d1; ++j) {
    double sum_contam = -0.25 * double(k) + 0.1 * std::sqrt(double(k)) * rng.normal();
    double sum_clean = std::sqrt(0.5 * double(n - k)) * rng.normal();
    ybar[j] = (sum_contam + sum_clean) / nd;
  }

  VectorXd cut = nd / (nd + 1.0) * xbar;
  double w = nd + nd / sigma2 + 1.0;
  VectorXd exact = (nd * xbar + (nd / sigma2) * ybar) / w;
  return {cut, exact};
}

double BiasedMeanLocalProbe::exact_bias_limit() const {
  return -0.25 * psi * (1.0 / sigma2) / (1.0 + 1.0 / sigma2);
}

// ---------------------------------------------------------------------------
// Random effects
// ---------------------------------------------------------------------------

RandomEffectsModel::RandomEffectsModel(Eigen::Index n_groups, Eigen::Index obs_per_group,
                                       bool paper_kernel)
    : n_groups_(n_groups), obs_per_group_(obs_per_group), paper_kernel_(paper_kernel) {
  if (n_groups < 2 || obs_per_group < 2)
    throw InvalidInput("RandomEffectsModel: need N >= 2 and J >= 2");
}

VectorXd RandomEffectsModel::truth() const {
  return VectorXd::Constant(n_groups_, 0.5);
}

RandomEffectsData RandomEffectsModel::simulate(double delta, std::uint64_t seed) const {
  Rng rng(seed);
  const double phi = 0.5;
  RandomEffectsData data;
  data.n_groups = n_groups_;
  data.obs_per_group = obs_per_group_;
  data.zbar.resize(n_groups_);
  data.s2.resize(n_groups_);
  VectorXd z(obs_per_group_);
  for (Eigen::Index i = 0; i < n_groups_; ++i) {
    double beta = rng.normal();
    if (i == 0) beta += delta;
    for (Eigen::Index j = 0; j < obs_per_group_; ++j) z[j] = beta + phi * rng.normal();
    double m = z.mean();
    data.zbar[i] = m;
    data.s2[i] = (z.array() - m).square().sum();
  }
  return data;
}

std::pair<double, double> RandomEffectsModel::cut_inverse_gamma_params(
    double s2_i) const {
  double shape = 0.5 * double(obs_per_group_ - 1);
  double rate = paper_kernel_ ? 0.5 * double(obs_per_group_) * s2_i : 0.5 * s2_i;
  return {shape, rate};
}

DrawSet RandomEffectsModel::cut_draws(const RandomEffectsData& data, Eigen::Index n_draws,
                                      std::uint64_t seed) const {
  if (data.zbar.size() != n_groups_ || data.s2.size() != n_groups_)
    throw InvalidInput("random_effects_cut: data shape mismatch");
  Rng rng(seed);
  MatrixXd out(n_draws, n_groups_);
  for (Eigen::Index s = 0; s < n_draws; ++s)
    for (Eigen::Index i = 0; i < n_groups_; ++i) {
      auto [shape, rate] = cut_inverse_gamma_params(data.s2[i]);
      out(s, i) = std::sqrt(rng.inverse_gamma(shape, rate));
    }
  return DrawSet(std::move(out), n_groups_, 0, DrawLabel::cut);
}

DrawSet RandomEffectsModel::exact_draws(const RandomEffectsData& data,
                                        const McmcConfig& cfg) const {
  const Eigen::Index n = n_groups_;
  const double jd = double(obs_per_group_);
  const VectorXd zbar = data.zbar;
  const VectorXd s2 = data.s2;

  // State layout: phi (N) | psi | beta (N).
  std::vector<GibbsBlock> blocks;
  blocks.push_back({"beta", [=](VectorXd& state, Rng& rng) {
                      double psi2 = state[n] * state[n];
                      for (Eigen::Index i = 0; i < n; ++i) {
                        double phi2 = state[i] * state[i];
                        double prec = jd / phi2 + 1.0 / psi2;
                        double m = (jd * zbar[i] / phi2) / prec;
                        state[n + 1 + i] = m + rng.normal() / std::sqrt(prec);
                      }
                    }});
  blocks.push_back({"phi2", [=](VectorXd& state, Rng& rng) {
                      for (Eigen::Index i = 0; i < n; ++i) {
                        double resid = zbar[i] - state[n + 1 + i];
                        auto [shape, rate] = conjugate_inverse_gamma(
                            0.0, 0.0, s2[i] + jd * resid * resid, jd);
                        state[i] = std::sqrt(rng.inverse_gamma(shape, rate));
                      }
                    }});
  blocks.push_back({"psi2", [=](VectorXd& state, Rng& rng) {
                      double ssb = state.tail(n).squaredNorm();
                      auto [shape, rate] =
                          conjugate_inverse_gamma(0.0, 0.0, ssb, double(n));
                      state[n] = std::sqrt(rng.inverse_gamma(shape, rate));
                    }});

  McmcConfig run = cfg;
  if (run.init.size() == 0) {
    run.init.resize(2 * n + 1);
    for (Eigen::Index i = 0; i < n; ++i)
      run.init[i] = std::sqrt(std::max(s2[i], 1e-8) / (jd - 1.0));
    run.init[n] = 1.0;
    run.init.tail(n) = zbar;
  }
  return gibbs_compose(blocks, run, n, DrawLabel::exact);
}

double RandomEffectsModel::cut_log_kernel_phi(double phi, double s2_i) const {
  if (!(phi > 0.0)) return kNegInf;
  auto [shape, rate] = cut_inverse_gamma_params(s2_i);
  // Inverse-gamma density on phi^2 carried to phi (Jacobian 2*phi).
  return std::log(2.0) - (2.0 * shape + 1.0) * std::log(phi) - rate / (phi * phi);
}

// ---------------------------------------------------------------------------
// HPV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

long parse_long(const std::string& s, long row) {
  try {
    size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("hpv_load: bad integer at data row " + std::to_string(row));
  }
}

double parse_double(const std::string& s, long row) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("hpv_load: bad number at data row " + std::to_string(row));
  }
}

}  // namespace

HpvData hpv_load(const std::string& path, std::string* warning) {
  std::ifstream in(path);
  if (!in) throw ParseError("hpv_load: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("hpv_load: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "country,x_hpv,n_survey,y_cancer,t_womanyears")
    throw ParseError("hpv_load: unexpected header '" + line + "'");

  HpvData data;
  long row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != 5)
      throw ParseError("hpv_load: expected 5 fields at data row " + std::to_string(row));
    HpvRow r;
    r.country = fields[0];
    r.x_hpv = parse_long(fields[1], row);
    r.n_survey = parse_long(fields[2], row);
    r.y_cancer = parse_long(fields[3], row);
    r.t_womanyears = parse_double(fields[4], row);
    if (r.x_hpv < 0 || r.n_survey < r.x_hpv)
      throw ParseError("hpv_load: need 0 <= x <= n at data row " + std::to_string(row));
    if (!(r.t_womanyears > 0.0))
      throw ParseError("hpv_load: need T > 0 at data row " + std::to_string(row));
    if (r.y_cancer < 0)
      throw ParseError("hpv_load: need y >= 0 at data row " + std::to_string(row));
    data.rows.push_back(std::move(r));
  }
  if (data.rows.empty()) throw ParseError("hpv_load: no data rows");
  if (warning && data.count() != 13)
    *warning = "hpv_load: expected 13 data rows, found " + std::to_string(data.count());
  return data;
}

HpvModel::HpvModel(HpvData data) : data_(std::move(data)) {
  if (data_.rows.empty()) throw InvalidInput("HpvModel: empty data");
}

VectorXd HpvModel::cut_beta_means() const {
  VectorXd m(d1());
  for (Eigen::Index i = 0; i < d1(); ++i)
    m[i] = double(data_.rows[i].x_hpv + 1) / double(data_.rows[i].n_survey + 2);
  return m;
}

double HpvModel::log_f1(const VectorXd& theta1) const {
  if (theta1.size() != d1()) throw InvalidInput("hpv log_f1: dimension mismatch");
  double lp = 0.0;
  for (Eigen::Index i = 0; i < d1(); ++i) {
    double th = theta1[i];
    if (!(th > 0.0 && th < 1.0)) return kNegInf;
    const auto& r = data_.rows[i];
    lp += double(r.x_hpv) * std::log(th) + double(r.n_survey - r.x_hpv) * std::log1p(-th);
  }
  return lp;
}

double HpvModel::log_f2(const VectorXd& theta1, const Eigen::Vector2d& theta2) const {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < d1(); ++i) {
    const auto& r = data_.rows[i];
    double eta = theta2[0] + theta2[1] * theta1[i];
    double log_lambda = std::log(r.t_womanyears) + eta;
    if (log_lambda > 700.0) return kNegInf;  // Poisson mean overflow guard
    lp += double(r.y_cancer) * log_lambda - std::exp(log_lambda);
  }
  return lp;
}

double HpvModel::log_prior1(const VectorXd& theta1) const {
  for (Eigen::Index i = 0; i < theta1.size(); ++i)
    if (!(theta1[i] > 0.0 && theta1[i] < 1.0)) return kNegInf;
  return 0.0;
}

double HpvModel::log_prior2(const Eigen::Vector2d& theta2) const {
  return -theta2.squaredNorm() / 2000.0;
}

double HpvModel::cut_log_kernel(const VectorXd& theta1) const {
  double p = log_prior1(theta1);
  if (p == kNegInf) return kNegInf;
  return log_f1(theta1) + p;
}

double HpvModel::conditional_log_kernel(const VectorXd& theta1,
                                        const Eigen::Vector2d& theta2) const {
  return log_f2(theta1, theta2) + log_prior2(theta2);
}

std::pair<Eigen::Vector2d, Eigen::Matrix2d> HpvModel::conditional_normal_approx(
    const VectorXd& theta1, bool* used_fallback) const {
  if (used_fallback) *used_fallback = false;
  Eigen::Vector2d mode(std::log(1e-4), 0.0);
  {
    // Start from a crude rate estimate.
    double y_total = 0.0, t_total = 0.0;
    for (const auto& r : data_.rows) {
      y_total += double(r.y_cancer);
      t_total += r.t_womanyears;
    }
    if (y_total > 0.0) mode[0] = std::log(y_total / t_total);
  }

  auto objective = [&](const Eigen::Vector2d& th2) {
    return conditional_log_kernel(theta1, th2);
  };

  Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
  for (int iter = 0; iter < 60; ++iter) {
    Eigen::Vector2d grad = -mode / 1000.0;
    hess = -Eigen::Matrix2d::Identity() / 1000.0;
    for (Eigen::Index i = 0; i < d1(); ++i) {
      const auto& r = data_.rows[i];
      Eigen::Vector2d a(1.0, theta1[i]);
      double log_lambda =
          std::min(700.0, std::log(r.t_womanyears) + mode.dot(a));
      double lambda = std::exp(log_lambda);
      grad += (double(r.y_cancer) - lambda) * a;
      hess -= lambda * a * a.transpose();
    }
    Eigen::Vector2d step = (-hess).ldlt().solve(grad);
    double f0 = objective(mode);
    double scale = 1.0;
    Eigen::Vector2d next = mode + step;
    for (int bt = 0; bt < 30 && !(objective(next) >= f0 - 1e-12); ++bt) {
      scale *= 0.5;
      next = mode + scale * step;
    }
    if ((next - mode).norm() < 1e-12) {
      mode = next;
      break;
    }
    mode = next;
  }

  Eigen::Matrix2d precision = -hess;
  Eigen::Matrix2d cov;
  double det = precision(0, 0) * precision(1, 1) - precision(0, 1) * precision(1, 0);
  if (precision(0, 0) > 0.0 && det > 0.0) {
    cov << precision(1, 1), -precision(0, 1), -precision(1, 0), precision(0, 0);
    cov /= det;
  } else {
    if (used_fallback) *used_fallback = true;
    cov = Eigen::Matrix2d::Zero();
    cov(0, 0) = 1.0 / std::max(precision(0, 0), 1e-8);
    cov(1, 1) = 1.0 / std::max(precision(1, 1), 1e-8);
  }
  return {mode, cov};
}

DrawSet HpvModel::cut_draws(Eigen::Index n_draws, std::uint64_t seed,
                            Eigen::Index sir_proposals) const {
  const Eigen::Index d = d1();
  Rng rng(seed);
  MatrixXd out(n_draws, d + 2);
  VectorXd th(d);
  for (Eigen::Index s = 0; s < n_draws; ++s) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto& r = data_.rows[i];
      th[i] = rng.beta(double(r.x_hpv + 1), double(r.n_survey - r.x_hpv + 1));
    }
    out.row(s).head(d) = th.transpose();

    auto [mode, cov] = conditional_normal_approx(th);
    Eigen::LLT<Eigen::Matrix2d> llt(cov);
    Eigen::Matrix2d chol = llt.matrixL();
    Eigen::Matrix2d prec_chol = chol.inverse();
    double log_norm = -std::log(chol(0, 0) * chol(1, 1));

    MatrixXd props(sir_proposals, 2);
    VectorXd logw(sir_proposals);
    for (Eigen::Index p = 0; p < sir_proposals; ++p) {
      Eigen::Vector2d z(rng.normal(), rng.normal());
      Eigen::Vector2d th2 = mode + chol * z;
      props.row(p) = th2.transpose();
      double log_q = log_norm - 0.5 * z.squaredNorm();
      logw[p] = conditional_log_kernel(th, th2) - log_q;
    }
    DrawSet proposal_set(std::move(props), 2, 0, DrawLabel::conditional);
    DrawSet pick = sir_resample(proposal_set, logw, 1, rng.next_u64());
    out(s, d) = pick.draws(0, 0);
    out(s, d + 1) = pick.draws(0, 1);
  }
  return DrawSet(std::move(out), d, 2, DrawLabel::cut);
}

McmcConfig HpvModel::default_exact_config(std::uint64_t seed) const {
  McmcConfig cfg;
  cfg.n_iter = 200000;
  cfg.burn_in = 100000;
  cfg.thin = 100;
  cfg.seed = seed;
  return cfg;
}

DrawSet HpvModel::exact_draws(const McmcConfig& cfg) const {
  const Eigen::Index d = d1();
  const Eigen::Index dim = d + 2;

  TargetDensity target;
  target.dim = dim;
  target.log_density = [this, d](const VectorXd& u) {
    VectorXd th(d);
    double jac = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      double s = 1.0 / (1.0 + std::exp(-u[i]));
      th[i] = s;
      if (!(s > 0.0 && s < 1.0)) return kNegInf;
      jac += std::log(s) + std::log1p(-s);
    }
    Eigen::Vector2d th2(u[d], u[d + 1]);
    double lf1 = log_f1(th);
    if (lf1 == kNegInf) return kNegInf;
    return lf1 + jac + log_f2(th, th2) + log_prior2(th2);
  };

  McmcConfig run = cfg;
  if (run.init.size() == 0) {
    VectorXd th = cut_beta_means();
    auto [mode, cov] = conditional_normal_approx(th);
    run.init.resize(dim);
    for (Eigen::Index i = 0; i < d; ++i)
      run.init[i] = std::log(th[i]) - std::log1p(-th[i]);
    run.init[d] = mode[0];
    run.init[d + 1] = mode[1];
  }

  auto [chain, diag] = adaptive_rwm(target, run, dim, DrawLabel::exact);
  (void)diag;
  // Map logits back to probabilities.
  MatrixXd out = chain.draws;
  for (Eigen::Index s = 0; s < out.rows(); ++s)
    for (Eigen::Index i = 0; i < d; ++i)
      out(s, i) = 1.0 / (1.0 + std::exp(-out(s, i)));
  return DrawSet(std::move(out), d, 2, DrawLabel::exact);
}

SmpResult HpvModel::smp_per_country(const DrawSet& cut, const DrawSet& exact,
                                    Eigen::Index j, Eigen::Index n_out,
                                    std::uint64_t seed) const {
  if (j < 0 || j >= d1()) throw InvalidInput("smp_per_country: bad country index");
  PosteriorSummary cut_full = summarize(cut, Block::theta1);
  PosteriorSummary exact_full = summarize(exact, Block::theta1);

  PosteriorSummary cut_j{VectorXd::Constant(1, cut_full.mean[j]),
                         MatrixXd::Constant(1, 1, cut_full.cov(j, j)), cut_full.n_draws};
  PosteriorSummary exact_j{VectorXd::Constant(1, exact_full.mean[j]),
                           MatrixXd::Constant(1, 1, exact_full.cov(j, j)),
                           exact_full.n_draws};
  MixtureWeight w = estimate_weight(cut_j, exact_j, MatrixXd::Identity(1, 1),
                                    NumeratorMode::scalar);

  SmpResult res = build_smp(cut, exact, w, n_out, seed);
  // Report the full theta1-block summaries alongside the scalar weight.
  res.cut_summary = cut_full;
  res.exact_summary = exact_full;
  res.smp_theta1_mean = smp_mean(cut_full, exact_full, w.omega_plus);
  return res;
}

HpvData HpvModel::synthesize(std::uint64_t seed, const std::vector<int>& distort,
                             double distort_factor) {
  Rng rng(seed);
  HpvData data;
  const Eigen::Index n_countries = 13;
  const double th2_intercept = -9.0;
  const double th2_slope = 12.0;
  for (Eigen::Index i = 0; i < n_countries; ++i) {
    HpvRow r;
    r.country = "C" + std::to_string(i + 1);
    r.n_survey = 300 + long(rng.uniform() * 2700.0);
    r.t_womanyears = 2.0e4 + rng.uniform() * 1.8e5;
    double prev = rng.uniform(0.03, 0.25);
    r.x_hpv = rng.binomial(r.n_survey, prev);
    double lambda = r.t_womanyears * std::exp(th2_intercept + th2_slope * prev);
    bool distorted =
        std::find(distort.begin(), distort.end(), int(i)) != distort.end();
    if (distorted) lambda *= distort_factor;
    r.y_cancer = rng.poisson(lambda);
    data.rows.push_back(std::move(r));
  }
  return data;
}

}  // namespace smi
