#ifndef NGMM_MODEL_HPP
#define NGMM_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ngmm/errors.hpp"

namespace ngmm {

// Observed data and design matrices for
//   y = X beta + sum_i Z_i u_i + e,   e ~ N(0, lambda0^{-1} I).
// Immutable after construction; safe to share read-only across chains.
struct MixedModelData {
  Eigen::VectorXd y;                      // n
  Eigen::MatrixXd X;                      // n x p
  std::vector<Eigen::MatrixXd> Z_blocks;  // m blocks, each n x q_i
  Eigen::MatrixXd Z;                      // n x q, [Z_1 ... Z_m]
  Eigen::MatrixXd W;                      // n x (p+q), [X Z]
  int n = 0;
  int p = 0;
  int m = 0;
  int q = 0;
  std::vector<int> q_sizes;    // q_i
  std::vector<int> q_offsets;  // offset of u_i inside u

  // Slice of u belonging to random-effect block i.
  Eigen::VectorXd u_block(const Eigen::VectorXd& u, int i) const {
    return u.segment(q_offsets[i], q_sizes[i]);
  }
};

// Validates n >= 2, q_i >= 2, matching row counts; assembles Z and W.
MixedModelData make_model(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          const std::vector<Eigen::MatrixXd>& Z_blocks);

// Gamma prior parameters: lambda_i ~ Gamma(a_i, b_i) for i = 0..m and
// tau_j iid ~ Gamma(c, d). All entries strictly positive.
struct Hyperparameters {
  Eigen::VectorXd a;  // m+1 shapes
  Eigen::VectorXd b;  // m+1 rates
  double c = 0.0;
  double d = 0.0;
};

void validate_hyperparameters(const Hyperparameters& hyper, int m);

// Chain state (beta, u, lambda) on the restricted state space: every beta_j
// is nonzero and every lambda_i positive.
struct ChainState {
  Eigen::VectorXd beta;    // p
  Eigen::VectorXd u;       // q
  Eigen::VectorXd lambda;  // m+1, lambda[0] is the noise precision
};

void validate_state(const MixedModelData& model, const ChainState& state);

// Auxiliary shrinkage scales, tau_j > 0.
struct TauVector {
  Eigen::VectorXd tau;  // p
};

void validate_tau(const MixedModelData& model, const TauVector& tau);

// Natural log of the joint posterior density of (theta, tau, lambda) given y,
// up to an additive constant. Finite for every valid input.
double log_unnormalized_posterior(const MixedModelData& model,
                                  const Hyperparameters& hyper,
                                  const ChainState& state,
                                  const TauVector& tau);

struct Config;  // io.hpp

// Reads the design matrices named in the config, validates everything and
// reports dimensions. Throws ValidationError naming the violated invariant.
std::pair<MixedModelData, Hyperparameters> load_model(const Config& config);

}  // namespace ngmm

#endif
