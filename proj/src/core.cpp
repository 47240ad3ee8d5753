#include "smi/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace smi {

ParamSplit::ParamSplit(VectorXd t1, VectorXd t2)
    : theta1(std::move(t1)), theta2(std::move(t2)) {
  if (theta1.size() < 1) throw InvalidInput("ParamSplit: d1 must be >= 1");
  if (!theta1.allFinite() || !theta2.allFinite())
    throw InvalidInput("ParamSplit: non-finite entry");
}

VectorXd ParamSplit::joined() const {
  VectorXd out(theta1.size() + theta2.size());
  out << theta1, theta2;
  return out;
}

std::string to_string(DrawLabel label) {
  switch (label) {
    case DrawLabel::cut: return "cut";
    case DrawLabel::exact: return "exact";
    case DrawLabel::smp: return "smp";
    case DrawLabel::conditional: return "conditional";
  }
  return "?";
}

DrawSet::DrawSet(MatrixXd m, Eigen::Index d1_, Eigen::Index d2_, DrawLabel label_)
    : draws(std::move(m)), d1(d1_), d2(d2_), label(label_) {
  if (draws.rows() < 1) throw InvalidInput("DrawSet: needs at least one row");
  if (d1 < 1 || d2 < 0 || draws.cols() != d1 + d2)
    throw InvalidInput("DrawSet: column count does not match d1 + d2");
  if (!draws.allFinite()) throw InvalidInput("DrawSet: non-finite draw");
}

std::string to_string(NumeratorMode mode) {
  switch (mode) {
    case NumeratorMode::conservative: return "conservative";
    case NumeratorMode::plain: return "plain";
    case NumeratorMode::scalar: return "scalar";
    case NumeratorMode::plain_cut_only: return "plain_cut_only";
  }
  return "?";
}

NumeratorMode numerator_mode_from_string(const std::string& s) {
  if (s == "conservative") return NumeratorMode::conservative;
  if (s == "plain") return NumeratorMode::plain;
  if (s == "scalar") return NumeratorMode::scalar;
  if (s == "plain_cut_only") return NumeratorMode::plain_cut_only;
  throw InvalidInput("unknown numerator mode: " + s);
}

LossSpec LossSpec::squared_error(Eigen::Index d) {
  LossSpec spec;
  spec.target_map = [](const VectorXd& t) { return t; };
  spec.loss = [](const VectorXd& b, const VectorXd& e) {
    if (b.size() != e.size()) throw InvalidInput("loss: dimension mismatch");
    return (b - e).squaredNorm();
  };
  // Curvature is d^2 q / dB dB' = 2 I.  Every weight formula is linear in
  // Upsilon in both numerator and denominator, so the factor 2 cancels.
  spec.curvature = [d](const VectorXd&) {
    return MatrixXd(2.0 * MatrixXd::Identity(d, d));
  };
  return spec;
}

LossSpec LossSpec::component(Eigen::Index j, Eigen::Index d) {
  if (j < 0 || j >= d) throw InvalidInput("component loss: index out of range");
  LossSpec spec;
  spec.target_map = [j, d](const VectorXd& t) {
    if (t.size() != d) throw InvalidInput("component loss: dimension mismatch");
    VectorXd b(1);
    b[0] = t[j];
    return b;
  };
  spec.loss = [](const VectorXd& b, const VectorXd& e) {
    if (b.size() != 1 || e.size() != 1)
      throw InvalidInput("component loss expects scalar targets");
    double diff = b[0] - e[0];
    return diff * diff;
  };
  spec.curvature = [](const VectorXd&) {
    return MatrixXd(2.0 * MatrixXd::Identity(1, 1));
  };
  return spec;
}

LossSpec LossSpec::quadratic(const MatrixXd& upsilon) {
  if (upsilon.rows() != upsilon.cols())
    throw InvalidInput("quadratic loss: Upsilon must be square");
  if (!upsilon.isApprox(upsilon.transpose(), 1e-12))
    throw InvalidInput("quadratic loss: Upsilon must be symmetric");
  LossSpec spec;
  MatrixXd u = upsilon;
  spec.target_map = [](const VectorXd& t) { return t; };
  spec.loss = [u](const VectorXd& b, const VectorXd& e) {
    if (b.size() != u.rows() || e.size() != u.rows())
      throw InvalidInput("quadratic loss: dimension mismatch");
    VectorXd diff = b - e;
    return double(diff.dot(u * diff));
  };
  spec.curvature = [u](const VectorXd&) { return MatrixXd(2.0 * u); };
  return spec;
}

PosteriorSummary summarize(const DrawSet& draws, Block block) {
  Eigen::Index lo = 0, k = 0;
  switch (block) {
    case Block::theta1: lo = 0; k = draws.d1; break;
    case Block::theta2: lo = draws.d1; k = draws.d2; break;
    case Block::all: lo = 0; k = draws.d1 + draws.d2; break;
  }
  if (k < 1) throw InvalidInput("summarize: requested block is empty");
  const Eigen::Index s = draws.rows();
  if (s < 2) throw InsufficientData("summarize: need at least 2 draws");
  auto m = draws.draws.block(0, lo, s, k);
  if (!m.allFinite()) throw InvalidInput("summarize: non-finite entries");

  PosteriorSummary out;
  out.n_draws = s;
  out.mean = m.colwise().mean();
  MatrixXd centered = m.rowwise() - out.mean.transpose();
  MatrixXd cov = (centered.transpose() * centered) / double(s - 1);
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

double evaluate_loss(const LossSpec& spec, const VectorXd& truth_theta1,
                     const VectorXd& estimate_theta1) {
  if (truth_theta1.size() != estimate_theta1.size())
    throw InvalidInput("evaluate_loss: dimension mismatch");
  return spec.loss(spec.target_map(truth_theta1), spec.target_map(estimate_theta1));
}

double spectral_norm(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidInput("spectral_norm: matrix not square");
  if (!m.allFinite()) throw InvalidInput("spectral_norm: non-finite entries");
  if (m.rows() == 0) return 0.0;
  // Symmetric case: largest |eigenvalue|, much cheaper than a full SVD.
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()[0];
}

}  // namespace smi
