#ifndef NGMM_CONDITIONALS_HPP
#define NGMM_CONDITIONALS_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "ngmm/model.hpp"
#include "ngmm/rng.hpp"

namespace ngmm {

// Operators behind the Gaussian conditional of theta = (beta, u):
//   T = lambda0 (X'X + Dtau^{-1})         (p x p, SPD)
//   M = I - lambda0 X T^{-1} X'           (n x n, symmetric, 0 < M <= I)
//   Q = lambda0 Z'MZ + Lambda             (q x q, SPD)
// M is assembled through the lambda0-free form I - X(X'X + Dtau^{-1})^{-1}X'.
struct ConditionalOperators {
  Eigen::MatrixXd T;
  Eigen::MatrixXd M;
  Eigen::MatrixXd Q;
  Eigen::VectorXd lambda_diag;  // diagonal of Lambda = blockdiag(lambda_i I)
  Eigen::VectorXd dtau_inv;     // diagonal of Dtau^{-1}
  Eigen::LLT<Eigen::MatrixXd> chol_T;
  Eigen::LLT<Eigen::MatrixXd> chol_Q;
  double lambda0 = 0.0;
};

ConditionalOperators build_operators(const MixedModelData& model,
                                     const TauVector& tau,
                                     const Eigen::VectorXd& lambda);

// Mean and covariance of theta | tau, lambda, y, assembled from the block
// formulas. Equals N((lambda0 W'W + C)^{-1} lambda0 W'y, (lambda0 W'W + C)^{-1})
// with C = blockdiag(lambda0 Dtau^{-1}, Lambda).
struct GaussianMoments {
  Eigen::VectorXd mean;  // p+q
  Eigen::MatrixXd cov;   // (p+q) x (p+q)
  Eigen::LLT<Eigen::MatrixXd> chol_cov;
  int p = 0;  // split point between beta and u
};

// jitter (default 0) is added to the covariance diagonal only if a caller
// opts in for pathological inputs; it changes the sampled law, so the
// default stays exactly the target conditional.
GaussianMoments theta_moments(const MixedModelData& model,
                              const ConditionalOperators& ops, double lambda0,
                              double jitter = 0.0);

// One draw theta = mean + chol(cov) z, split into (beta, u).
std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_theta(
    const GaussianMoments& moments, Rng& rng);

struct GammaSpec {
  double shape = 0.0;
  double rate = 0.0;
};

// lambda0 | theta, tau: Gamma(n/2 + p/2 + a0, ||y-W theta||^2/2 + beta'Dtau^{-1}beta/2 + b0)
GammaSpec lambda0_conditional(const MixedModelData& model,
                              const Hyperparameters& hyper,
                              const ChainState& state, const TauVector& tau);

// lambda_i | theta: Gamma(q_i/2 + a_i, ||u_i||^2/2 + b_i), i = 1..m
GammaSpec lambda_i_conditional(const MixedModelData& model,
                               const Hyperparameters& hyper,
                               const ChainState& state, int i);

// Independent draws of all m+1 precision components.
Eigen::VectorXd sample_lambda(const MixedModelData& model,
                              const Hyperparameters& hyper,
                              const ChainState& state, const TauVector& tau,
                              Rng& rng);

}  // namespace ngmm

#endif
