#ifndef SMI_CORE_HPP
#define SMI_CORE_HPP

#include "smi/types.hpp"

namespace smi {

enum class Block { theta1, theta2, all };

/// Column means and unbiased sample covariance (divisor S-1) of one block.
/// The covariance is symmetrized as (C + C')/2 before returning.
PosteriorSummary summarize(const DrawSet& draws, Block block = Block::theta1);

/// Evaluates q(g(truth), g(estimate)).
double evaluate_loss(const LossSpec& spec, const VectorXd& truth_theta1,
                     const VectorXd& estimate_theta1);

/// Largest singular value.
double spectral_norm(const MatrixXd& m);

}  // namespace smi

#endif  // SMI_CORE_HPP
