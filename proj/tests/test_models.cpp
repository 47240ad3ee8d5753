#include "smi/models.hpp"

#include "smi/core.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace smi;
using smi_test::ks_distance;
using smi_test::trapezoid;

// ---------------------------------------------------------------------------
// Biased mean
// ---------------------------------------------------------------------------

TEST_CASE("biased_mean_simulate: contamination endpoints and determinism") {
  BiasedMeanModel model(2, 100, 20000);

  BiasedMeanData clean = model.simulate(0.0, 44);
  VectorXd mean0 = clean.y2.colwise().mean();
  for (int j = 0; j < 2; ++j) {
    double var = (clean.y2.col(j).array() - mean0[j]).square().mean();
    CHECK(var == doctest::Approx(0.5).epsilon(0.05));
  }

  BiasedMeanData dirty = model.simulate(1.0, 44);
  VectorXd mean1 = dirty.y2.colwise().mean();
  for (int j = 0; j < 2; ++j) CHECK(mean1[j] == doctest::Approx(-0.25).epsilon(0.05));

  BiasedMeanData a = model.simulate(0.3, 123), b = model.simulate(0.3, 123);
  CHECK(a.y1 == b.y1);
  CHECK(a.y2 == b.y2);
  CHECK_THROWS_AS(model.simulate(1.5, 1), InvalidInput);
}

TEST_CASE("biased_mean_cut: conjugate posterior and MC draws agree") {
  BiasedMeanModel model(3);
  BiasedMeanData data = model.simulate(0.2, 7);
  auto [mean, cov] = model.cut_posterior(data);
  VectorXd y1bar = data.y1.colwise().mean();
  CHECK(mean.isApprox(VectorXd(100.0 / 101.0 * y1bar), 1e-12));
  CHECK(cov(0, 0) == doctest::Approx(1.0 / 101.0).epsilon(1e-12));

  DrawSet draws = model.cut_draws(data, 100000, 11);
  auto s = summarize(draws, Block::theta1);
  double se = std::sqrt(cov(0, 0) / 100000.0);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(s.mean[j] - mean[j]) < 3.0 * se);
}

TEST_CASE("biased_mean: cut kernel equals log_f1 + log_prior1 (difference check)") {
  BiasedMeanModel model(2);
  BiasedMeanData data = model.simulate(0.4, 9);
  auto [mean, cov] = model.cut_posterior(data);
  double prec = 1.0 / cov(0, 0);
  Rng rng(15);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd a = smi_test::random_vector(rng, 2), b = smi_test::random_vector(rng, 2);
    double kernel_diff = model.cut_log_kernel(data, a) - model.cut_log_kernel(data, b);
    double gauss_diff = -0.5 * prec * (a - mean).squaredNorm() +
                        0.5 * prec * (b - mean).squaredNorm();
    CHECK(kernel_diff == doctest::Approx(gauss_diff).epsilon(1e-10));
  }
}

TEST_CASE("biased_mean: theta2 conditional targets the same kernel in both pipelines") {
  // The inverse-gamma attached to cut draws and used by the exact Gibbs
  // block must match the conditional kernel log_f2 + log_prior2.
  BiasedMeanModel model(2);
  BiasedMeanData data = model.simulate(0.5, 21);
  Rng rng(30);
  VectorXd th = smi_test::random_vector(rng, 2);
  double n2d = double(data.y2.rows());
  double ss = (data.y2.rowwise() - th.transpose()).squaredNorm();
  double shape = 0.5 * n2d * 2.0, rate = 0.5 * ss;
  for (int rep = 0; rep < 20; ++rep) {
    double s2a = 0.1 + rng.uniform(), s2b = 0.1 + rng.uniform();
    double kernel_diff = model.conditional_log_kernel(data, th, s2a) -
                         model.conditional_log_kernel(data, th, s2b);
    double ig_diff = (-shape - 1.0) * (std::log(s2a) - std::log(s2b)) -
                     rate * (1.0 / s2a - 1.0 / s2b);
    CHECK(kernel_diff == doctest::Approx(ig_diff).epsilon(1e-10));
  }
}

TEST_CASE("biased_mean_exact: known-variance conjugacy oracle with pinned sigma^2") {
  BiasedMeanModel model(2);
  BiasedMeanData data = model.simulate(0.0, 99);
  const double sigma2 = 0.5;
  auto [mean, cov] = model.exact_posterior_known_sigma(data, sigma2);
  VectorXd y1bar = data.y1.colwise().mean();
  VectorXd y2bar = data.y2.colwise().mean();
  VectorXd expect = (100.0 * y1bar + 2.0 * 1000.0 * y2bar) / (100.0 + 1.0 + 2000.0);
  CHECK(mean.isApprox(expect, 1e-10));

  // One-block Gibbs at pinned sigma^2 reproduces the same posterior.
  const VectorXd y1b = y1bar, y2b = y2bar;
  std::vector<GibbsBlock> blocks{{"theta1", [&](VectorXd& state, Rng& rng) {
                                    double prec = 100.0 + 1.0 + 1000.0 / sigma2;
                                    double sd = 1.0 / std::sqrt(prec);
                                    for (int j = 0; j < 2; ++j) {
                                      double m = (100.0 * y1b[j] +
                                                  (1000.0 / sigma2) * y2b[j]) /
                                                 prec;
                                      state[j] = m + sd * rng.normal();
                                    }
                                  }}};
  McmcConfig cfg;
  cfg.n_iter = 40000;
  cfg.burn_in = 0;
  cfg.seed = 2;
  cfg.init = VectorXd::Zero(2);
  DrawSet draws = gibbs_compose(blocks, cfg);
  auto s = summarize(draws, Block::all);
  double se = std::sqrt(cov(0, 0) / 40000.0);
  for (int j = 0; j < 2; ++j) CHECK(std::abs(s.mean[j] - expect[j]) < 3.0 * se);
}

TEST_CASE("biased_mean_exact: full Gibbs recovers the fitted-scale posterior") {
  BiasedMeanModel model(1);
  BiasedMeanData data = model.simulate(0.0, 314);
  McmcConfig cfg;
  cfg.n_iter = 30000;
  cfg.burn_in = 2000;
  cfg.seed = 5;
  DrawSet draws = model.exact_draws(data, cfg);
  REQUIRE(draws.d2 == 1);
  auto s = summarize(draws, Block::theta1);
  // Clean data: fitted scale is near 0.5, posterior mean near the
  // known-variance answer.
  auto [mean_ks, cov_ks] = model.exact_posterior_known_sigma(data, 0.5);
  CHECK(std::abs(s.mean[0] - mean_ks[0]) < 5.0 * std::sqrt(cov_ks(0, 0) / 1000.0));
  auto s2 = summarize(draws, Block::theta2);
  CHECK(s2.mean[0] == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("biased_mean: empty second dataset makes exact match cut (KS < 0.02)") {
  BiasedMeanModel model(1, 100, 0);
  BiasedMeanData data = model.simulate(0.0, 8);
  REQUIRE(data.y2.rows() == 0);
  DrawSet cut = model.cut_draws(data, 100000, 1);
  McmcConfig cfg;
  cfg.n_iter = 100000;
  cfg.burn_in = 0;
  cfg.seed = 2;
  DrawSet exact = model.exact_draws(data, cfg);
  double ks = ks_distance(cut.draws.col(0), exact.draws.col(0));
  CHECK(ks < 0.02);
}

TEST_CASE("biased_mean_local_probe: closed-form drift limit") {
  BiasedMeanLocalProbe probe;
  probe.psi = 1.0;
  CHECK(probe.exact_bias_limit() == doctest::Approx(-1.0 / 6.0).epsilon(1e-12));
  auto [cut, exact] = probe.estimate(400, 3);
  CHECK(cut.size() == 1);
  auto [cut2, exact2] = probe.estimate(400, 3);
  CHECK(cut[0] == cut2[0]);  // deterministic
  CHECK(exact[0] == exact2[0]);
}

// ---------------------------------------------------------------------------
// Random effects
// ---------------------------------------------------------------------------

TEST_CASE("random_effects_simulate: sufficient-statistic moments") {
  RandomEffectsModel model(400, 10);
  RandomEffectsData data = model.simulate(0.0, 60);
  // E[s2] = (J-1) * 0.25 per group.
  CHECK(data.s2.mean() == doctest::Approx(9.0 * 0.25).epsilon(0.08));
  // Var(zbar) = psi^2 + phi^2/J.
  double m = data.zbar.mean();
  double v = (data.zbar.array() - m).square().sum() / double(data.zbar.size() - 1);
  CHECK(v == doctest::Approx(1.0 + 0.025).epsilon(0.25));
  RandomEffectsData a = model.simulate(0.7, 3), b = model.simulate(0.7, 3);
  CHECK(a.zbar == b.zbar);
  CHECK(a.s2 == b.s2);
}

TEST_CASE("random_effects_cut: marginal mean matches 1-D quadrature of the kernel") {
  RandomEffectsModel model(4, 10);
  RandomEffectsData data = model.simulate(0.0, 77);
  DrawSet draws = model.cut_draws(data, 200000, 5);
  auto s = summarize(draws, Block::theta1);
  for (int i = 0; i < 4; ++i) {
    auto kernel = [&](double phi) {
      return std::exp(model.cut_log_kernel_phi(phi, data.s2[i]));
    };
    double z = trapezoid(kernel, 1e-3, 8.0, 200000);
    double first = trapezoid([&](double p) { return p * kernel(p); }, 1e-3, 8.0, 200000);
    double quad_mean = first / z;
    double se = std::sqrt(s.cov(i, i) / double(draws.rows()));
    CHECK(std::abs(s.mean[i] - quad_mean) < 3.0 * se);
  }
}

TEST_CASE("random_effects: paper_kernel switch carries the extra J factor") {
  RandomEffectsModel derivation(2, 10, false), paper(2, 10, true);
  auto [sd, rd] = derivation.cut_inverse_gamma_params(2.0);
  auto [sp, rp] = paper.cut_inverse_gamma_params(2.0);
  CHECK(sd == sp);
  CHECK(rp == doctest::Approx(10.0 * rd));
}

TEST_CASE("random_effects: no conflict means cut and exact phi marginals agree") {
  RandomEffectsModel model(30, 10);
  RandomEffectsData data = model.simulate(0.0, 2024);
  DrawSet cut = model.cut_draws(data, 10000, 1);
  McmcConfig cfg;
  cfg.n_iter = 110000;
  cfg.burn_in = 10000;
  cfg.thin = 10;
  cfg.seed = 2;
  DrawSet exact = model.exact_draws(data, cfg);
  REQUIRE(exact.rows() == 10000);
  // Group 2 (no prior-data conflict anywhere at delta=0).
  double ks = ks_distance(cut.draws.col(1), exact.draws.col(1));
  CHECK(ks < 0.05);
}

TEST_CASE("random_effects: strong conflict inflates the exact phi_1 posterior") {
  RandomEffectsModel model(100, 10);
  RandomEffectsData data = model.simulate(1.9, 11);
  DrawSet cut = model.cut_draws(data, 8000, 1);
  McmcConfig cfg;
  cfg.n_iter = 28000;
  cfg.burn_in = 4000;
  cfg.thin = 3;
  cfg.seed = 12;
  DrawSet exact = model.exact_draws(data, cfg);
  double cut_mean = cut.draws.col(0).mean();
  double exact_mean = exact.draws.col(0).mean();
  CHECK(exact_mean > cut_mean);
}

// ---------------------------------------------------------------------------
// HPV
// ---------------------------------------------------------------------------

namespace {

std::string write_temp_csv(const std::string& content) {
  std::string path = "/tmp/smi_hpv_test.csv";
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("hpv_load: parses the documented schema and flags bad rows") {
  std::string good = "country,x_hpv,n_survey,y_cancer,t_womanyears\n";
  for (int i = 1; i <= 13; ++i)
    good += "C" + std::to_string(i) + ",10,100,25,10000\n";
  std::string warning;
  HpvData data = hpv_load(write_temp_csv(good), &warning);
  CHECK(data.count() == 13);
  CHECK(warning.empty());

  std::string two_rows =
      "country,x_hpv,n_survey,y_cancer,t_womanyears\nA,1,10,2,100\nB,2,10,3,100\n";
  hpv_load(write_temp_csv(two_rows), &warning);
  CHECK(!warning.empty());

  std::string bad = "country,x_hpv,n_survey,y_cancer,t_womanyears\nA,1,10,2,100\nB,15,10,3,100\n";
  try {
    hpv_load(write_temp_csv(bad));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(hpv_load(write_temp_csv("wrong,header\n")), ParseError);
}

TEST_CASE("hpv: cut theta1 marginals are the Beta conjugates") {
  HpvData data = HpvModel::synthesize(17);
  HpvModel model(std::move(data));
  DrawSet cut = model.cut_draws(400, 5, 200);
  auto s = summarize(cut, Block::theta1);
  VectorXd expect = model.cut_beta_means();
  for (Eigen::Index i = 0; i < model.d1(); ++i) {
    double se = std::sqrt(s.cov(i, i) / double(cut.rows()));
    CHECK(std::abs(s.mean[i] - expect[i]) < 4.0 * se);
  }
}

TEST_CASE("hpv: x = 0 keeps cut draws inside (0,1) with mean 1/(n+2)") {
  HpvData data = HpvModel::synthesize(4);
  data.rows[0].x_hpv = 0;
  data.rows[0].n_survey = 50;
  HpvModel model(std::move(data));
  DrawSet cut = model.cut_draws(3000, 6, 100);
  VectorXd col = cut.draws.col(0);
  CHECK(col.minCoeff() > 0.0);
  CHECK(col.maxCoeff() < 1.0);
  double se = std::sqrt((col.array() - col.mean()).square().mean() / 3000.0);
  CHECK(std::abs(col.mean() - 1.0 / 52.0) < 4.0 * se);
}

TEST_CASE("hpv: cut kernel equals the Beta product (difference check)") {
  HpvData data = HpvModel::synthesize(23);
  HpvModel model(std::move(data));
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    VectorXd a(model.d1()), b(model.d1());
    for (Eigen::Index i = 0; i < model.d1(); ++i) {
      a[i] = rng.uniform(0.01, 0.99);
      b[i] = rng.uniform(0.01, 0.99);
    }
    double kernel_diff = model.cut_log_kernel(a) - model.cut_log_kernel(b);
    double beta_diff = 0.0;
    for (Eigen::Index i = 0; i < model.d1(); ++i) {
      const auto& r = model.data().rows[i];
      beta_diff += double(r.x_hpv) * (std::log(a[i]) - std::log(b[i])) +
                   double(r.n_survey - r.x_hpv) * (std::log1p(-a[i]) - std::log1p(-b[i]));
    }
    CHECK(kernel_diff == doctest::Approx(beta_diff).epsilon(1e-10));
  }
}

TEST_CASE("hpv: conditional normal approximation matches kernel curvature") {
  HpvData data = HpvModel::synthesize(31);
  HpvModel model(std::move(data));
  VectorXd th = model.cut_beta_means();
  bool fallback = true;
  auto [mode, cov] = model.conditional_normal_approx(th, &fallback);
  CHECK(!fallback);
  // At the mode the gradient vanishes: finite-difference check.
  double h = 1e-5;
  auto f = [&](double a, double b) {
    return model.conditional_log_kernel(th, Eigen::Vector2d(a, b));
  };
  double g0 = (f(mode[0] + h, mode[1]) - f(mode[0] - h, mode[1])) / (2 * h);
  double g1 = (f(mode[0], mode[1] + h) - f(mode[0], mode[1] - h)) / (2 * h);
  double curvature_scale = 1.0 / cov(0, 0);
  CHECK(std::abs(g0) < 1e-3 * curvature_scale);
  CHECK(std::abs(g1) < 1e-3 * curvature_scale);
}

TEST_CASE("hpv: exact-chain conditional slice equals the shared theta2 kernel") {
  HpvData data = HpvModel::synthesize(37);
  HpvModel model(std::move(data));
  VectorXd th = model.cut_beta_means();
  Rng rng(41);
  // Joint kernel differences in theta2 at fixed theta1 must equal the
  // conditional kernel differences: the factorization of the posterior.
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Vector2d a(rng.normal(-9, 0.5), rng.normal(12, 1.0));
    Eigen::Vector2d b(rng.normal(-9, 0.5), rng.normal(12, 1.0));
    double joint_diff = (model.log_f1(th) + model.log_f2(th, a) + model.log_prior2(a)) -
                        (model.log_f1(th) + model.log_f2(th, b) + model.log_prior2(b));
    double cond_diff =
        model.conditional_log_kernel(th, a) - model.conditional_log_kernel(th, b);
    CHECK(joint_diff == doctest::Approx(cond_diff).epsilon(1e-12));
  }
}

TEST_CASE("hpv: correctly specified synthetic data pushes omega toward one") {
  HpvData data = HpvModel::synthesize(101);
  HpvModel model(std::move(data));
  DrawSet cut = model.cut_draws(1000, 7, 300);
  McmcConfig cfg;
  cfg.n_iter = 60000;
  cfg.burn_in = 30000;
  cfg.thin = 30;
  cfg.seed = 8;
  DrawSet exact = model.exact_draws(cfg);

  std::vector<double> omegas;
  for (Eigen::Index j = 0; j < model.d1(); ++j) {
    SmpResult res = model.smp_per_country(cut, exact, j, 500, 99);
    omegas.push_back(res.weight.omega_plus);
  }
  std::sort(omegas.begin(), omegas.end());
  double median = omegas[omegas.size() / 2];
  CHECK(median > 0.5);
}

TEST_CASE("hpv: gross incidence-module misspecification drives omega to zero") {
  HpvData data = HpvModel::synthesize(202, {1, 5, 9}, 8.0);
  HpvModel model(std::move(data));
  DrawSet cut = model.cut_draws(1000, 7, 300);
  McmcConfig cfg;
  cfg.n_iter = 60000;
  cfg.burn_in = 30000;
  cfg.thin = 30;
  cfg.seed = 18;
  DrawSet exact = model.exact_draws(cfg);

  PosteriorSummary cs = summarize(cut, Block::theta1);
  PosteriorSummary es = summarize(exact, Block::theta1);
  int flagged = 0;
  for (Eigen::Index j = 0; j < model.d1(); ++j) {
    double gap = std::abs(cs.mean[j] - es.mean[j]);
    double sd = std::sqrt(cs.cov(j, j));
    if (gap > 3.0 * sd) {
      ++flagged;
      SmpResult res = model.smp_per_country(cut, exact, j, 500, 7);
      CHECK(res.weight.omega_plus < 0.2);
    }
  }
  CHECK(flagged > 0);  // the distortion must actually register
}
