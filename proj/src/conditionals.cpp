#include "ngmm/conditionals.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace ngmm {

namespace {

// Diagnostic for a failed SPD factorization: smallest eigenvalue when the
// matrix is finite, NaN otherwise.
double smallest_pivot_of(const Eigen::MatrixXd& mat) {
  if (!mat.allFinite()) return std::numeric_limits<double>::quiet_NaN();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    return std::numeric_limits<double>::quiet_NaN();
  return es.eigenvalues().minCoeff();
}

Eigen::LLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& mat,
                                       const std::string& what) {
  Eigen::LLT<Eigen::MatrixXd> llt(mat);
  if (llt.info() != Eigen::Success ||
      !Eigen::MatrixXd(llt.matrixLLT()).allFinite()) {
    const double pivot = smallest_pivot_of(mat);
    throw NumericalError(
        what + " factorization failed (smallest pivot " +
            std::to_string(pivot) +
            "); some tau_j or lambda_i is at an extreme magnitude",
        pivot);
  }
  return llt;
}

}  // namespace

ConditionalOperators build_operators(const MixedModelData& model,
                                     const TauVector& tau,
                                     const Eigen::VectorXd& lambda) {
  validate_tau(model, tau);
  if (lambda.size() != model.m + 1)
    throw ValidationError("lambda must have length m+1");
  for (int i = 0; i <= model.m; ++i)
    if (!(lambda[i] > 0.0))
      throw ValidationError("lambda_" + std::to_string(i) +
                            " must be strictly positive");

  ConditionalOperators ops;
  ops.lambda0 = lambda[0];
  ops.dtau_inv = tau.tau.cwiseInverse();
  ops.lambda_diag.resize(model.q);
  for (int i = 0; i < model.m; ++i)
    ops.lambda_diag.segment(model.q_offsets[i], model.q_sizes[i])
        .setConstant(lambda[i + 1]);

  // A = X'X + Dtau^{-1}; lambda0 cancels inside M, so M is built from A alone
  Eigen::MatrixXd A = model.X.transpose() * model.X;
  A.diagonal() += ops.dtau_inv;
  Eigen::LLT<Eigen::MatrixXd> chol_A = factor_spd(A, "T");

  ops.T = ops.lambda0 * A;
  ops.chol_T = factor_spd(ops.T, "T");

  ops.M = Eigen::MatrixXd::Identity(model.n, model.n) -
          model.X * chol_A.solve(model.X.transpose());
  ops.M = 0.5 * (ops.M + ops.M.transpose());

  ops.Q = ops.lambda0 * model.Z.transpose() * ops.M * model.Z;
  ops.Q = 0.5 * (ops.Q + ops.Q.transpose());
  ops.Q.diagonal() += ops.lambda_diag;
  ops.chol_Q = factor_spd(ops.Q, "Q");
  return ops;
}

GaussianMoments theta_moments(const MixedModelData& model,
                              const ConditionalOperators& ops, double lambda0,
                              double jitter) {
  const int p = model.p, q = model.q, dim = p + q;
  GaussianMoments mom;
  mom.p = p;

  const Eigen::MatrixXd Tinv_Xt = ops.chol_T.solve(model.X.transpose());
  const Eigen::MatrixXd B = model.X.transpose() * model.Z;  // p x q
  const Eigen::MatrixXd Tinv_B = ops.chol_T.solve(B);
  const Eigen::MatrixXd Qinv =
      ops.chol_Q.solve(Eigen::MatrixXd::Identity(q, q));

  // covariance blocks of theta | tau, lambda, y
  Eigen::MatrixXd omega11 =
      ops.chol_T.solve(Eigen::MatrixXd::Identity(p, p)) +
      lambda0 * lambda0 * Tinv_B * Qinv * Tinv_B.transpose();
  Eigen::MatrixXd omega12 = -lambda0 * Tinv_B * Qinv;

  mom.cov.resize(dim, dim);
  mom.cov.topLeftCorner(p, p) = omega11;
  mom.cov.topRightCorner(p, q) = omega12;
  mom.cov.bottomLeftCorner(q, p) = omega12.transpose();
  mom.cov.bottomRightCorner(q, q) = Qinv;
  mom.cov = 0.5 * (mom.cov + mom.cov.transpose()).eval();
  if (jitter > 0.0) mom.cov.diagonal().array() += jitter;

  const Eigen::VectorXd My = ops.M * model.y;
  const Eigen::VectorXd mean_u =
      lambda0 * (ops.chol_Q.solve(model.Z.transpose() * My));
  const Eigen::VectorXd mean_beta =
      lambda0 * (Tinv_Xt * model.y) -
      lambda0 * lambda0 *
          (Tinv_B * ops.chol_Q.solve(model.Z.transpose() * My));
  mom.mean.resize(dim);
  mom.mean << mean_beta, mean_u;

  mom.chol_cov = Eigen::LLT<Eigen::MatrixXd>(mom.cov);
  if (mom.chol_cov.info() != Eigen::Success ||
      !Eigen::MatrixXd(mom.chol_cov.matrixLLT()).allFinite()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mom.cov,
                                                      Eigen::EigenvaluesOnly);
    const double pivot =
        es.info() == Eigen::Success
            ? es.eigenvalues().minCoeff()
            : std::numeric_limits<double>::quiet_NaN();
    throw NumericalError("theta covariance factorization failed (smallest pivot " +
                             std::to_string(pivot) + ")",
                         pivot);
  }
  return mom;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_theta(
    const GaussianMoments& moments, Rng& rng) {
  const int dim = static_cast<int>(moments.mean.size());
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z[i] = rng.normal();
  const Eigen::VectorXd draw =
      moments.mean + moments.chol_cov.matrixL() * z;
  return {draw.head(moments.p), draw.tail(dim - moments.p)};
}

GammaSpec lambda0_conditional(const MixedModelData& model,
                              const Hyperparameters& hyper,
                              const ChainState& state, const TauVector& tau) {
  const Eigen::VectorXd theta =
      (Eigen::VectorXd(model.p + model.q) << state.beta, state.u).finished();
  const double rss = (model.y - model.W * theta).squaredNorm();
  const double prior_quad =
      (state.beta.array().square() / tau.tau.array()).sum();
  return {0.5 * (model.n + model.p) + hyper.a[0],
          0.5 * rss + 0.5 * prior_quad + hyper.b[0]};
}

GammaSpec lambda_i_conditional(const MixedModelData& model,
                               const Hyperparameters& hyper,
                               const ChainState& state, int i) {
  const double ss = model.u_block(state.u, i).squaredNorm();
  return {0.5 * model.q_sizes[i] + hyper.a[i + 1], 0.5 * ss + hyper.b[i + 1]};
}

Eigen::VectorXd sample_lambda(const MixedModelData& model,
                              const Hyperparameters& hyper,
                              const ChainState& state, const TauVector& tau,
                              Rng& rng) {
  Eigen::VectorXd lambda(model.m + 1);
  const GammaSpec g0 = lambda0_conditional(model, hyper, state, tau);
  lambda[0] = rng.gamma(g0.shape, g0.rate);
  for (int i = 0; i < model.m; ++i) {
    const GammaSpec gi = lambda_i_conditional(model, hyper, state, i);
    lambda[i + 1] = rng.gamma(gi.shape, gi.rate);
  }
  return lambda;
}

}  // namespace ngmm
