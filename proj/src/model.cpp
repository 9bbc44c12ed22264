#include "ngmm/model.hpp"

#include <cmath>

#include "ngmm/io.hpp"

namespace ngmm {

MixedModelData make_model(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          const std::vector<Eigen::MatrixXd>& Z_blocks) {
  MixedModelData model;
  model.n = static_cast<int>(y.size());
  model.p = static_cast<int>(X.cols());
  model.m = static_cast<int>(Z_blocks.size());
  if (model.n < 2)
    throw ValidationError("n >= 2 required, got n = " + std::to_string(model.n));
  if (model.p < 1) throw ValidationError("X must have at least one column");
  if (model.m < 1)
    throw ValidationError("at least one random-effect block is required");
  if (X.rows() != model.n)
    throw ValidationError("row-count mismatch: X has " +
                          std::to_string(X.rows()) + " rows but y has " +
                          std::to_string(model.n));
  model.q = 0;
  for (int i = 0; i < model.m; ++i) {
    const auto& Zi = Z_blocks[i];
    if (Zi.rows() != model.n)
      throw ValidationError("row-count mismatch: Z block " +
                            std::to_string(i + 1) + " has " +
                            std::to_string(Zi.rows()) + " rows but y has " +
                            std::to_string(model.n));
    int qi = static_cast<int>(Zi.cols());
    if (qi < 2)
      throw ValidationError("q_i >= 2 required, block " + std::to_string(i + 1) +
                            " has " + std::to_string(qi) + " columns");
    model.q_offsets.push_back(model.q);
    model.q_sizes.push_back(qi);
    model.q += qi;
  }
  model.y = y;
  model.X = X;
  model.Z_blocks = Z_blocks;
  model.Z.resize(model.n, model.q);
  for (int i = 0; i < model.m; ++i)
    model.Z.middleCols(model.q_offsets[i], model.q_sizes[i]) = Z_blocks[i];
  model.W.resize(model.n, model.p + model.q);
  model.W << model.X, model.Z;
  return model;
}

void validate_hyperparameters(const Hyperparameters& hyper, int m) {
  if (hyper.a.size() != m + 1 || hyper.b.size() != m + 1)
    throw ValidationError("prior.a and prior.b must have length m+1 = " +
                          std::to_string(m + 1));
  for (int i = 0; i <= m; ++i) {
    if (!(hyper.a[i] > 0.0))
      throw ValidationError("prior shape a_" + std::to_string(i) +
                            " must be strictly positive");
    if (!(hyper.b[i] > 0.0))
      throw ValidationError("prior rate b_" + std::to_string(i) +
                            " must be strictly positive");
  }
  if (!(hyper.c > 0.0))
    throw ValidationError("prior.c must be strictly positive");
  if (!(hyper.d > 0.0))
    throw ValidationError("prior.d must be strictly positive");
}

void validate_state(const MixedModelData& model, const ChainState& state) {
  if (state.beta.size() != model.p)
    throw ValidationError("state.beta must have length p");
  if (state.u.size() != model.q)
    throw ValidationError("state.u must have length q");
  if (state.lambda.size() != model.m + 1)
    throw ValidationError("state.lambda must have length m+1");
  for (int j = 0; j < model.p; ++j)
    if (!(std::abs(state.beta[j]) > 0.0) || !std::isfinite(state.beta[j]))
      throw ValidationError("beta_" + std::to_string(j + 1) +
                            " must be nonzero and finite");
  for (int i = 0; i <= model.m; ++i)
    if (!(state.lambda[i] > 0.0) || !std::isfinite(state.lambda[i]))
      throw ValidationError("lambda_" + std::to_string(i) +
                            " must be strictly positive");
}

void validate_tau(const MixedModelData& model, const TauVector& tau) {
  if (tau.tau.size() != model.p)
    throw ValidationError("tau must have length p");
  for (int j = 0; j < model.p; ++j)
    if (!(tau.tau[j] > 0.0) || !std::isfinite(tau.tau[j]))
      throw ValidationError("tau_" + std::to_string(j + 1) +
                            " must be strictly positive");
}

double log_unnormalized_posterior(const MixedModelData& model,
                                  const Hyperparameters& hyper,
                                  const ChainState& state,
                                  const TauVector& tau) {
  const double lambda0 = state.lambda[0];
  const Eigen::VectorXd theta =
      (Eigen::VectorXd(model.p + model.q) << state.beta, state.u).finished();
  const double rss = (model.y - model.W * theta).squaredNorm();
  double lp = 0.5 * (model.n + model.p) * std::log(lambda0) -
              0.5 * lambda0 * rss;
  for (int j = 0; j < model.p; ++j) {
    const double tj = tau.tau[j];
    lp += -0.5 * std::log(tj) -
          0.5 * lambda0 * state.beta[j] * state.beta[j] / tj;
    lp += (hyper.c - 1.0) * std::log(tj) - hyper.d * tj;
  }
  for (int i = 0; i < model.m; ++i) {
    const double li = state.lambda[i + 1];
    lp += 0.5 * model.q_sizes[i] * std::log(li) -
          0.5 * li * model.u_block(state.u, i).squaredNorm();
  }
  for (int i = 0; i <= model.m; ++i)
    lp += (hyper.a[i] - 1.0) * std::log(state.lambda[i]) -
          hyper.b[i] * state.lambda[i];
  return lp;
}

std::pair<MixedModelData, Hyperparameters> load_model(const Config& config) {
  const int m = static_cast<int>(config.get_long("model.m"));
  if (m < 1) throw ValidationError("model.m must be >= 1");
  Eigen::MatrixXd ymat = read_csv_matrix(config.get_string("model.y"));
  if (ymat.cols() != 1)
    throw ValidationError("model.y must be a single-column CSV");
  Eigen::MatrixXd X = read_csv_matrix(config.get_string("model.x"));
  std::vector<Eigen::MatrixXd> Z_blocks;
  for (int i = 1; i <= m; ++i)
    Z_blocks.push_back(
        read_csv_matrix(config.get_string("model.z" + std::to_string(i))));
  MixedModelData model = make_model(ymat.col(0), X, Z_blocks);

  Hyperparameters hyper;
  auto a = config.get_double_list("prior.a");
  auto b = config.get_double_list("prior.b");
  hyper.a = Eigen::Map<Eigen::VectorXd>(a.data(), a.size());
  hyper.b = Eigen::Map<Eigen::VectorXd>(b.data(), b.size());
  hyper.c = config.get_double("prior.c");
  hyper.d = config.get_double("prior.d");
  validate_hyperparameters(hyper, m);
  return {std::move(model), std::move(hyper)};
}

}  // namespace ngmm
