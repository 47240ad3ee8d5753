#include "smi/smp.hpp"

#include "smi/rng.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace smi;
using smi_test::ks_distance;
using smi_test::random_psd;
using smi_test::random_vector;

namespace {

PosteriorSummary make_summary(VectorXd mean, MatrixXd cov) {
  PosteriorSummary s;
  s.mean = std::move(mean);
  s.cov = std::move(cov);
  s.n_draws = 1000;
  return s;
}

DrawSet constant_draws(double value, Eigen::Index rows, Eigen::Index d1,
                       Eigen::Index d2, DrawLabel label) {
  return DrawSet(MatrixXd::Constant(rows, d1 + d2, value), d1, d2, label);
}

}  // namespace

TEST_CASE("estimate_gamma: inverse-gap curvature gives exactly d1 - 2") {
  Rng rng(5);
  for (Eigen::Index d : {1, 2, 3, 6}) {
    MatrixXd gap = random_psd(rng, d);
    MatrixXd cov_exact = random_psd(rng, d);
    MatrixXd cov_cut = cov_exact + gap;
    MatrixXd upsilon = gap.inverse();
    double g = estimate_gamma(upsilon, cov_cut, cov_exact, NumeratorMode::conservative);
    CHECK(g == doctest::Approx(double(d) - 2.0).epsilon(1e-9));
  }
}

TEST_CASE("estimate_gamma: equal covariances give zero") {
  Rng rng(6);
  MatrixXd cov = random_psd(rng, 3);
  MatrixXd upsilon = random_psd(rng, 3);
  for (auto mode : {NumeratorMode::conservative, NumeratorMode::plain}) {
    CHECK(estimate_gamma(upsilon, cov, cov, mode) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("estimate_gamma: scalar arithmetic exposes the d1<=2 sign issue") {
  MatrixXd u = MatrixXd::Constant(1, 1, 1.0);
  MatrixXd c4 = MatrixXd::Constant(1, 1, 4.0);
  MatrixXd c1 = MatrixXd::Constant(1, 1, 1.0);
  CHECK(estimate_gamma(u, c4, c1, NumeratorMode::conservative) == doctest::Approx(-3.0));
  CHECK(estimate_gamma(u, c4, c1, NumeratorMode::plain) == doctest::Approx(3.0));
  CHECK(estimate_gamma(u, c4, c1, NumeratorMode::scalar) == doctest::Approx(3.0));
  MatrixXd u2 = MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(
      estimate_gamma(u2, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                     NumeratorMode::scalar),
      InvalidInput);
}

TEST_CASE("estimate_weight: worked three-dimensional example") {
  VectorXd mc(3), me(3);
  mc << 1, 0, 0;
  me << 0, 0, 0;
  auto cut = make_summary(mc, MatrixXd(2.0 * MatrixXd::Identity(3, 3)));
  auto exact = make_summary(me, MatrixXd::Identity(3, 3));
  MixtureWeight w =
      estimate_weight(cut, exact, MatrixXd::Identity(3, 3), NumeratorMode::conservative);
  CHECK(w.gamma_hat == doctest::Approx(1.0));  // tr I - 2||I|| = 3 - 2
  CHECK(w.location_gap == doctest::Approx(1.0));
  CHECK(w.omega_raw == doctest::Approx(1.0));
  CHECK(w.omega_plus == doctest::Approx(1.0));
}

TEST_CASE("estimate_weight: scalar variant of the per-country weight") {
  auto cut = make_summary(VectorXd::Constant(1, 3.0), MatrixXd::Constant(1, 1, 4.0));
  auto exact = make_summary(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 1.0));
  MixtureWeight w =
      estimate_weight(cut, exact, MatrixXd::Identity(1, 1), NumeratorMode::plain);
  CHECK(w.omega_raw == doctest::Approx(1.0 / 3.0));
  CHECK(w.omega_plus == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("estimate_weight: negative gamma collapses to the cut posterior") {
  auto cut = make_summary(VectorXd::Constant(1, 1.0), MatrixXd::Constant(1, 1, 1.0));
  auto exact = make_summary(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 4.0));
  MixtureWeight w =
      estimate_weight(cut, exact, MatrixXd::Identity(1, 1), NumeratorMode::conservative);
  CHECK(w.gamma_hat < 0.0);
  CHECK(w.omega_plus == 0.0);
}

TEST_CASE("estimate_weight: plain_cut_only reproduces the trace-over-gap preset") {
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Index d = 1 + Eigen::Index(rng.uniform_index(4));
    auto cut = make_summary(random_vector(rng, d), random_psd(rng, d));
    auto exact = make_summary(random_vector(rng, d), random_psd(rng, d));
    MixtureWeight w = estimate_weight(cut, exact, MatrixXd::Identity(d, d),
                                      NumeratorMode::plain_cut_only);
    double gap = (cut.mean - exact.mean).squaredNorm();
    double expect = std::min(1.0, cut.cov.trace() / gap);
    CHECK(w.omega_plus == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("estimate_weight: zero location gap resolved by the sign of gamma") {
  auto cut = make_summary(VectorXd::Zero(2), MatrixXd(2.0 * MatrixXd::Identity(2, 2)));
  auto exact = make_summary(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  MixtureWeight pos = estimate_weight(cut, exact, MatrixXd::Identity(2, 2),
                                      NumeratorMode::plain);  // tr W = 2 > 0
  CHECK(pos.omega_plus == 1.0);
  MixtureWeight neg = estimate_weight(exact, cut, MatrixXd::Identity(2, 2),
                                      NumeratorMode::plain);  // tr W = -2 < 0
  CHECK(neg.omega_plus == 0.0);
}

TEST_CASE("estimate_weight: gamma override is the user-chosen sequence") {
  auto cut = make_summary(VectorXd::Constant(1, 2.0), MatrixXd::Constant(1, 1, 1.0));
  auto exact = make_summary(VectorXd::Zero(1), MatrixXd::Constant(1, 1, 1.0));
  MixtureWeight w = estimate_weight(cut, exact, MatrixXd::Identity(1, 1),
                                    NumeratorMode::conservative, 2.0);
  CHECK(w.gamma_hat == 2.0);
  CHECK(w.omega_raw == doctest::Approx(0.5));
}

TEST_CASE("estimate_weight: omega_plus always lands in [0,1] (property)") {
  Rng rng(123);
  const std::array<NumeratorMode, 3> modes{NumeratorMode::conservative,
                                           NumeratorMode::plain,
                                           NumeratorMode::plain_cut_only};
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::Index d = 1 + Eigen::Index(rng.uniform_index(5));
    auto cut = make_summary(random_vector(rng, d), random_psd(rng, d));
    auto exact = make_summary(random_vector(rng, d), random_psd(rng, d));
    MatrixXd upsilon = random_psd(rng, d);
    MixtureWeight w = estimate_weight(cut, exact, upsilon, modes[rng.uniform_index(3)]);
    CHECK(w.omega_plus >= 0.0);
    CHECK(w.omega_plus <= 1.0);
    CHECK(w.location_gap >= 0.0);
    CHECK(w.omega_plus == std::min(1.0, std::max(0.0, w.omega_raw)));
  }
}

TEST_CASE("estimate_weight: n-cancellation and curvature-scale invariance") {
  Rng rng(321);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Index d = 1 + Eigen::Index(rng.uniform_index(4));
    VectorXd mc = random_vector(rng, d), me = random_vector(rng, d);
    MatrixXd cc = random_psd(rng, d), ce = random_psd(rng, d);
    MatrixXd upsilon = random_psd(rng, d);
    double c = 0.01 + 5.0 * rng.uniform();

    auto base = estimate_weight(make_summary(mc, cc), make_summary(me, ce), upsilon,
                                NumeratorMode::plain);
    // Scaling both covariances and the squared gap by c mimics changing n.
    double root_c = std::sqrt(c);
    auto scaled =
        estimate_weight(make_summary(root_c * mc, MatrixXd(c * cc)),
                        make_summary(root_c * me, MatrixXd(c * ce)), upsilon,
                        NumeratorMode::plain);
    CHECK(scaled.omega_raw == doctest::Approx(base.omega_raw).epsilon(1e-9));

    auto upscaled = estimate_weight(make_summary(mc, cc), make_summary(me, ce),
                                    MatrixXd(c * upsilon), NumeratorMode::plain);
    CHECK(upscaled.omega_raw == doctest::Approx(base.omega_raw).epsilon(1e-9));
  }
}

TEST_CASE("build_smp: mixture endpoints and stratified counts") {
  DrawSet cut = constant_draws(1.0, 40, 2, 1, DrawLabel::cut);
  DrawSet exact = constant_draws(9.0, 40, 2, 1, DrawLabel::exact);
  cut.draws(0, 0) = 1.001;  // keep summaries non-degenerate
  exact.draws(0, 0) = 9.001;

  MixtureWeight w;
  w.omega_plus = 0.0;
  SmpResult all_cut = build_smp(cut, exact, w, 10, 3);
  CHECK((all_cut.smp_draws.draws.array() <= 1.001).all());

  w.omega_plus = 1.0;
  SmpResult all_exact = build_smp(cut, exact, w, 10, 3);
  CHECK((all_exact.smp_draws.draws.array() >= 9.0).all());

  w.omega_plus = 0.5;
  SmpResult half = build_smp(cut, exact, w, 10, 3);
  long from_exact = long((half.smp_draws.draws.col(0).array() > 5.0).count());
  CHECK(from_exact == 5);
  CHECK(half.smp_draws.rows() == 10);
  CHECK(half.smp_draws.d2 == 1);  // joint output keeps theta2
  CHECK(half.smp_draws.label == DrawLabel::smp);

  CHECK_THROWS_AS(build_smp(cut, exact, w, 0, 3), InvalidInput);
}

TEST_CASE("build_smp: smp mean is the deterministic convex combination") {
  Rng rng(77);
  MatrixXd mc(1000, 1), me(1000, 1);
  for (int i = 0; i < 1000; ++i) {
    mc(i, 0) = rng.normal(0.0, 1.0);
    me(i, 0) = rng.normal(4.0, 1.0);
  }
  DrawSet cut(mc, 1, 0, DrawLabel::cut);
  DrawSet exact(me, 1, 0, DrawLabel::exact);
  MixtureWeight w;
  w.omega_plus = 0.3;
  SmpResult res = build_smp(cut, exact, w, 200000, 11);
  VectorXd expect = smp_mean(res.cut_summary, res.exact_summary, 0.3);
  CHECK(res.smp_theta1_mean.isApprox(expect, 1e-14));
  // Monte Carlo mean of the mixture draws agrees within 4 SE.
  double mix_var = 0.7 * 1.0 + 0.3 * 1.0 + 0.7 * 0.3 * 16.0;
  double se = std::sqrt(mix_var / 200000.0);
  CHECK(std::abs(res.smp_draws.draws.col(0).mean() - expect[0]) < 4.0 * se);
}

TEST_CASE("build_smp: mixture marginal matches weighted source CDFs (KS < 0.02)") {
  Rng rng(88);
  const Eigen::Index n_src = 100000, n_out = 100000;
  MatrixXd mc(n_src, 1), me(n_src, 1);
  for (Eigen::Index i = 0; i < n_src; ++i) {
    mc(i, 0) = rng.normal(0.0, 1.0);
    me(i, 0) = rng.normal(3.0, 1.0);
  }
  DrawSet cut(mc, 1, 0, DrawLabel::cut);
  DrawSet exact(me, 1, 0, DrawLabel::exact);
  MixtureWeight w;
  w.omega_plus = 0.35;
  SmpResult res = build_smp(cut, exact, w, n_out, 19);

  // Reference sample from the weighted mixture of the source empiricals.
  Rng rng2(4242);
  VectorXd ref(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) {
    bool from_exact = rng2.uniform() < 0.35;
    const MatrixXd& src = from_exact ? me : mc;
    ref[i] = src(Eigen::Index(rng2.uniform_index(n_src)), 0);
  }
  double ks = ks_distance(res.smp_draws.draws.col(0), ref);
  CHECK(ks < 0.02);
}

TEST_CASE("smp_mean: affine combination endpoints") {
  auto cut = make_summary(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  VectorXd me(2);
  me << 4, 8;
  auto exact = make_summary(me, MatrixXd::Identity(2, 2));
  CHECK(smp_mean(cut, exact, 0.0).isApprox(cut.mean));
  CHECK(smp_mean(cut, exact, 1.0).isApprox(exact.mean));
  VectorXd quarter = smp_mean(cut, exact, 0.25);
  CHECK(quarter[0] == doctest::Approx(1.0));
  CHECK(quarter[1] == doctest::Approx(2.0));
}

TEST_CASE("build_smp: theta1-dimension mismatch and empty sides") {
  DrawSet cut = constant_draws(0.0, 5, 2, 0, DrawLabel::cut);
  DrawSet exact3 = constant_draws(0.0, 5, 3, 0, DrawLabel::exact);
  MixtureWeight w;
  w.omega_plus = 0.5;
  CHECK_THROWS_AS(build_smp(cut, exact3, w, 10, 1), InvalidInput);

  DrawSet exact_empty;  // default-constructed: zero rows
  exact_empty.d1 = 2;
  CHECK_THROWS_AS(build_smp(cut, exact_empty, w, 10, 1), InsufficientData);
}
