#include "ngmm/samplers.hpp"

#include <chrono>
#include <cmath>

#include "ngmm/gig.hpp"

namespace ngmm {

namespace {

constexpr int kZeroBetaRedrawCap = 100;

// theta | tau, lambda with the zero-beta redraw policy: a component drawn
// as exact floating-point zero lies outside the state space, so the whole
// vector is redrawn (never perturbed, which would change the law).
std::pair<Eigen::VectorXd, Eigen::VectorXd> draw_theta(
    const MixedModelData& model, const GaussianMoments& mom, Rng& rng) {
  for (int attempt = 0; attempt < kZeroBetaRedrawCap; ++attempt) {
    auto [beta, u] = sample_theta(mom, rng);
    bool ok = true;
    for (int j = 0; j < model.p; ++j)
      if (beta[j] == 0.0) {
        ok = false;
        break;
      }
    if (ok) return {std::move(beta), std::move(u)};
  }
  throw SamplerError(
      "theta draw produced a zero beta component 100 times in a row");
}

ChainState theta_update(const MixedModelData& model, const ChainState& state,
                        const TauVector& tau, Rng& rng) {
  const auto ops = build_operators(model, tau, state.lambda);
  const auto mom = theta_moments(model, ops, state.lambda[0]);
  auto [beta, u] = draw_theta(model, mom, rng);
  ChainState next = state;
  next.beta = std::move(beta);
  next.u = std::move(u);
  return next;
}

}  // namespace

void validate_sampler_config(const SamplerConfig& cfg) {
  if (!(cfg.r > 0.0 && cfg.r < 1.0))
    throw ValidationError("sampler.r must lie strictly inside (0,1)");
  if (cfg.iterations < 0 || cfg.burnin < 0)
    throw ValidationError("iterations and burnin must be nonnegative");
  if (cfg.thin < 1) throw ValidationError("thin must be >= 1");
  double sum = 0.0;
  for (double p : cfg.scan_probs) {
    if (!(p > 0.0))
      throw ValidationError("scan probabilities must be strictly positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ValidationError("scan probabilities must sum to 1");
}

TauVector sample_tau(const MixedModelData& model, const Hyperparameters& hyper,
                     const ChainState& state, Rng& rng) {
  TauVector tau;
  tau.tau.resize(model.p);
  const double lambda0 = state.lambda[0];
  for (int j = 0; j < model.p; ++j) {
    const double psi = lambda0 * state.beta[j] * state.beta[j];
    tau.tau[j] =
        gig_sample({hyper.c - 0.5, 2.0 * hyper.d, psi}, rng);
  }
  return tau;
}

ChainState hybrid_step_given_u(const MixedModelData& model,
                               const Hyperparameters& hyper,
                               const ChainState& state, double r, double u,
                               Rng& rng, TauVector* tau_out) {
  const TauVector tau = sample_tau(model, hyper, state, rng);
  if (tau_out) *tau_out = tau;
  if (u < r) return theta_update(model, state, tau, rng);
  ChainState next = state;
  next.lambda = sample_lambda(model, hyper, state, tau, rng);
  return next;
}

ChainState hybrid_step(const MixedModelData& model,
                       const Hyperparameters& hyper, const ChainState& state,
                       double r, Rng& rng, TauVector* tau_out) {
  const TauVector tau = sample_tau(model, hyper, state, rng);
  if (tau_out) *tau_out = tau;
  // U is drawn after tau but independently of it
  const double u = rng.uniform();
  if (u < r) return theta_update(model, state, tau, rng);
  ChainState next = state;
  next.lambda = sample_lambda(model, hyper, state, tau, rng);
  return next;
}

std::pair<ChainState, TauVector> gibbs_deterministic_step(
    const MixedModelData& model, const Hyperparameters& hyper,
    const ChainState& state, const TauVector& /*tau_in*/, Rng& rng) {
  const TauVector tau = sample_tau(model, hyper, state, rng);
  ChainState next = theta_update(model, state, tau, rng);
  next.lambda = sample_lambda(model, hyper, next, tau, rng);
  return {std::move(next), tau};
}

std::pair<ChainState, TauVector> gibbs_random_scan_step(
    const MixedModelData& model, const Hyperparameters& hyper,
    const ChainState& state, const TauVector& tau_in,
    const std::array<double, 3>& probs, Rng& rng) {
  const double u = rng.uniform();
  if (u < probs[0]) {
    return {state, sample_tau(model, hyper, state, rng)};
  }
  if (u < probs[0] + probs[1]) {
    return {theta_update(model, state, tau_in, rng), tau_in};
  }
  ChainState next = state;
  next.lambda = sample_lambda(model, hyper, state, tau_in, rng);
  return {std::move(next), tau_in};
}

ChainState default_init(const MixedModelData& model,
                        const Hyperparameters& hyper, Rng& rng) {
  ChainState state;
  state.lambda.resize(model.m + 1);
  for (int i = 0; i <= model.m; ++i)
    state.lambda[i] = rng.gamma(hyper.a[i], hyper.b[i]);
  state.beta = Eigen::VectorXd::Ones(model.p);
  state.u.resize(model.q);
  for (int i = 0; i < model.m; ++i) {
    const double sd = 1.0 / std::sqrt(state.lambda[i + 1]);
    for (int k = 0; k < model.q_sizes[i]; ++k)
      state.u[model.q_offsets[i] + k] = sd * rng.normal();
  }
  return state;
}

ChainOutput run_chain(const MixedModelData& model, const Hyperparameters& hyper,
                      const ChainState& init, const SamplerConfig& cfg) {
  validate_sampler_config(cfg);
  validate_state(model, init);
  const auto start = std::chrono::steady_clock::now();

  Rng rng(cfg.seed);
  ChainOutput out;
  out.config = cfg;
  ChainState state = init;
  TauVector tau = sample_tau(model, hyper, state, rng);

  const long total = cfg.burnin + cfg.iterations;
  for (long k = 1; k <= total; ++k) {
    try {
      switch (cfg.kind) {
        case SamplerKind::hybrid:
          state = hybrid_step(model, hyper, state, cfg.r, rng, &tau);
          break;
        case SamplerKind::gibbs_deterministic:
          std::tie(state, tau) =
              gibbs_deterministic_step(model, hyper, state, tau, rng);
          break;
        case SamplerKind::gibbs_random_scan:
          std::tie(state, tau) = gibbs_random_scan_step(
              model, hyper, state, tau, cfg.scan_probs, rng);
          break;
      }
    } catch (const std::runtime_error& err) {
      throw SamplerError("chain aborted at iteration " + std::to_string(k) +
                         ": " + err.what());
    }
    if (k > cfg.burnin && (k - cfg.burnin) % cfg.thin == 0) {
      out.states.push_back(state);
      if (cfg.store_tau) out.taus.push_back(tau);
    }
  }
  out.tau_last = tau;
  out.total_steps = total;
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return out;
}

}  // namespace ngmm
