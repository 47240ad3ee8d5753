#ifndef SMI_TYPES_HPP
#define SMI_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace smi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplerDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateWeights : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A parameter point split into the shared block theta1 and the
/// module-2-specific block theta2 (theta2 may be empty).
struct ParamSplit {
  VectorXd theta1;
  VectorXd theta2;

  ParamSplit() = default;
  ParamSplit(VectorXd t1, VectorXd t2);

  Eigen::Index d1() const { return theta1.size(); }
  Eigen::Index d2() const { return theta2.size(); }
  VectorXd joined() const;
};

enum class DrawLabel { cut, exact, smp, conditional };

std::string to_string(DrawLabel label);

/// Posterior draws stored row-wise with the theta1 block first.
struct DrawSet {
  MatrixXd draws;  // S x (d1 + d2)
  Eigen::Index d1 = 0;
  Eigen::Index d2 = 0;
  DrawLabel label = DrawLabel::cut;

  DrawSet() = default;
  DrawSet(MatrixXd m, Eigen::Index d1_, Eigen::Index d2_, DrawLabel label_);

  Eigen::Index rows() const { return draws.rows(); }
  /// View of the theta1 columns.
  Eigen::Block<const MatrixXd> theta1() const {
    return draws.block(0, 0, draws.rows(), d1);
  }
  /// View of the theta2 columns.
  Eigen::Block<const MatrixXd> theta2() const {
    return draws.block(0, d1, draws.rows(), d2);
  }
};

/// First and second posterior moments of one block of draws.
struct PosteriorSummary {
  VectorXd mean;
  MatrixXd cov;
  Eigen::Index n_draws = 0;
};

/// Loss specification: target map g, loss q(beta, B), and the curvature
/// Upsilon(beta) used by the weight formulas.
struct LossSpec {
  std::function<VectorXd(const VectorXd&)> target_map;
  std::function<double(const VectorXd&, const VectorXd&)> loss;
  std::function<MatrixXd(const VectorXd&)> curvature;

  /// q(beta, B) = ||beta - B||^2 on a d-dimensional target.
  static LossSpec squared_error(Eigen::Index d);
  /// q on the single coordinate j of theta1 (0-based).
  static LossSpec component(Eigen::Index j, Eigen::Index d);
  /// q(beta, B) = (beta - B)' U (beta - B) with constant user matrix U.
  static LossSpec quadratic(const MatrixXd& upsilon);
};

enum class NumeratorMode {
  conservative,    // tr W - 2 ||W||
  plain,           // tr W
  scalar,          // k = 1, returns W itself
  plain_cut_only,  // tr of Upsilon * cov_cut, exact covariance omitted
};

std::string to_string(NumeratorMode mode);
NumeratorMode numerator_mode_from_string(const std::string& s);

/// The data-driven mixing weight and its ingredients.
struct MixtureWeight {
  double gamma_hat = 0.0;
  double location_gap = 0.0;  // (m_cut - m_exact)' Upsilon (m_cut - m_exact)
  double omega_raw = 0.0;
  double omega_plus = 0.0;  // min(1, max(0, omega_raw))
  NumeratorMode numerator_mode = NumeratorMode::conservative;
};

}  // namespace smi

#endif  // SMI_TYPES_HPP
