#include "ngmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ngmm/gig.hpp"

namespace ngmm {

std::vector<double> autocorrelations(std::span<const double> x, int max_lag) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ValidationError("autocorrelations: need at least 2 points");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  std::vector<double> gamma(std::min(max_lag, n - 1) + 1, 0.0);
  for (size_t lag = 0; lag < gamma.size(); ++lag) {
    double s = 0.0;
    for (int t = 0; t + static_cast<int>(lag) < n; ++t)
      s += (x[t] - mean) * (x[t + lag] - mean);
    gamma[lag] = s / n;
  }
  std::vector<double> rho(max_lag + 1, 0.0);
  rho[0] = 1.0;
  if (gamma[0] > 0.0)
    for (size_t lag = 1; lag < gamma.size(); ++lag)
      rho[lag] = gamma[lag] / gamma[0];
  return rho;
}

double effective_sample_size(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw ValidationError("effective_sample_size: need >= 2 points");
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double gamma0 = 0.0;
  for (double v : x) gamma0 += (v - mean) * (v - mean);
  gamma0 /= n;
  if (gamma0 <= 0.0) return 1.0;  // constant series

  auto gamma_at = [&](int lag) {
    double s = 0.0;
    for (int t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
    return s / n;
  };

  // initial positive sequence: sum pair sums while they stay positive
  double sum_pairs = 0.0;
  for (int k = 0; 2 * k + 1 < n; ++k) {
    const double pair = gamma_at(2 * k) + gamma_at(2 * k + 1);
    if (pair <= 0.0) break;
    sum_pairs += pair;
  }
  double iact = 2.0 * sum_pairs / gamma0 - 1.0;
  iact = std::max(iact, 1.0);
  return std::min(static_cast<double>(n), n / iact);
}

namespace {

double quantile(std::vector<double> sorted, double prob) {
  const double pos = prob * (sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

SummaryStats summarize(const Eigen::MatrixXd& draws,
                       const std::vector<std::string>& names) {
  if (draws.rows() < 10)
    throw ValidationError("summarize: need at least 10 stored states");
  if (names.size() != static_cast<size_t>(draws.cols()))
    throw ValidationError("summarize: name count must match column count");
  SummaryStats stats;
  stats.n_states = draws.rows();
  const int n = static_cast<int>(draws.rows());
  for (int j = 0; j < draws.cols(); ++j) {
    CoordinateStats cs;
    cs.name = names[j];
    std::vector<double> col(draws.col(j).data(), draws.col(j).data() + n);
    cs.mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : col) ss += (v - cs.mean) * (v - cs.mean);
    cs.sd = std::sqrt(ss / (n - 1));
    cs.ess = effective_sample_size(col);
    cs.acf = autocorrelations(col, 50);
    std::sort(col.begin(), col.end());
    cs.q5 = quantile(col, 0.05);
    cs.q50 = quantile(col, 0.50);
    cs.q95 = quantile(col, 0.95);
    stats.coords.push_back(std::move(cs));
  }
  return stats;
}

std::vector<std::string> coordinate_names(const MixedModelData& model) {
  std::vector<std::string> names;
  for (int j = 1; j <= model.p; ++j) names.push_back("beta_" + std::to_string(j));
  for (int k = 1; k <= model.q; ++k) names.push_back("u_" + std::to_string(k));
  for (int i = 0; i <= model.m; ++i)
    names.push_back("lambda_" + std::to_string(i));
  return names;
}

Eigen::MatrixXd chain_matrix(const ChainOutput& chain) {
  if (chain.states.empty()) return Eigen::MatrixXd();
  const int p = static_cast<int>(chain.states[0].beta.size());
  const int q = static_cast<int>(chain.states[0].u.size());
  const int ml = static_cast<int>(chain.states[0].lambda.size());
  Eigen::MatrixXd mat(chain.states.size(), p + q + ml);
  for (size_t i = 0; i < chain.states.size(); ++i)
    mat.row(i) << chain.states[i].beta.transpose(),
        chain.states[i].u.transpose(), chain.states[i].lambda.transpose();
  return mat;
}

SummaryStats summarize(const ChainOutput& chain, const MixedModelData& model) {
  return summarize(chain_matrix(chain), coordinate_names(model));
}

namespace {

struct JointDraw {
  ChainState state;
  TauVector tau;
  Eigen::VectorXd y;
};

JointDraw prior_predictive_draw(const MixedModelData& model,
                                const Hyperparameters& hyper, Rng& rng) {
  JointDraw d;
  d.state.lambda.resize(model.m + 1);
  for (int i = 0; i <= model.m; ++i)
    d.state.lambda[i] = rng.gamma(hyper.a[i], hyper.b[i]);
  d.tau.tau.resize(model.p);
  for (int j = 0; j < model.p; ++j)
    d.tau.tau[j] = rng.gamma(hyper.c, hyper.d);
  d.state.beta.resize(model.p);
  for (int j = 0; j < model.p; ++j)
    d.state.beta[j] =
        std::sqrt(d.tau.tau[j] / d.state.lambda[0]) * rng.normal();
  d.state.u.resize(model.q);
  for (int i = 0; i < model.m; ++i) {
    const double sd = 1.0 / std::sqrt(d.state.lambda[i + 1]);
    for (int k = 0; k < model.q_sizes[i]; ++k)
      d.state.u[model.q_offsets[i] + k] = sd * rng.normal();
  }
  const Eigen::VectorXd mean =
      model.X * d.state.beta + model.Z * d.state.u;
  const double sd = 1.0 / std::sqrt(d.state.lambda[0]);
  d.y.resize(model.n);
  for (int i = 0; i < model.n; ++i) d.y[i] = mean[i] + sd * rng.normal();
  return d;
}

std::vector<double> test_functions(const ChainState& state,
                                   const TauVector& tau) {
  const double l0 = state.lambda[0];
  double sum_log_li = 0.0;
  for (int i = 1; i < state.lambda.size(); ++i)
    sum_log_li += std::log(state.lambda[i]);
  return {l0,
          std::log(l0),
          sum_log_li,
          state.beta[0],
          state.beta[0] * state.beta[0],
          state.u.squaredNorm(),
          tau.tau[0],
          std::log(tau.tau[0])};
}

// Tau refresh shared by the faulty kernels; the gig_order fault drops the
// -1/2 from the conditional's order.
TauVector sample_tau_with_fault(const MixedModelData& model,
                                const Hyperparameters& hyper,
                                const ChainState& state, GewekeFault fault,
                                Rng& rng) {
  TauVector tau;
  tau.tau.resize(model.p);
  const double order =
      fault == GewekeFault::gig_order ? hyper.c : hyper.c - 0.5;
  for (int j = 0; j < model.p; ++j) {
    const double psi = state.lambda[0] * state.beta[j] * state.beta[j];
    tau.tau[j] = gig_sample({order, 2.0 * hyper.d, psi}, rng);
  }
  return tau;
}

Eigen::VectorXd sample_lambda_with_fault(const MixedModelData& model,
                                         const Hyperparameters& hyper,
                                         const ChainState& state,
                                         const TauVector& tau,
                                         GewekeFault fault, Rng& rng) {
  Eigen::VectorXd lambda(model.m + 1);
  GammaSpec g0 = lambda0_conditional(model, hyper, state, tau);
  if (fault == GewekeFault::lambda0_shape) g0.shape += 1.0;
  lambda[0] = rng.gamma(g0.shape, g0.rate);
  for (int i = 0; i < model.m; ++i) {
    const GammaSpec gi = lambda_i_conditional(model, hyper, state, i);
    lambda[i + 1] = rng.gamma(gi.shape, gi.rate);
  }
  return lambda;
}

// One transition of the kernel under test, possibly corrupted.
void transition(const MixedModelData& model, const Hyperparameters& hyper,
                const SamplerConfig& cfg, GewekeFault fault, ChainState& state,
                TauVector& tau, Rng& rng) {
  if (fault == GewekeFault::none) {
    switch (cfg.kind) {
      case SamplerKind::hybrid:
        state = hybrid_step(model, hyper, state, cfg.r, rng, &tau);
        return;
      case SamplerKind::gibbs_deterministic:
        std::tie(state, tau) =
            gibbs_deterministic_step(model, hyper, state, tau, rng);
        return;
      case SamplerKind::gibbs_random_scan:
        std::tie(state, tau) = gibbs_random_scan_step(model, hyper, state,
                                                      tau, cfg.scan_probs, rng);
        return;
    }
  }

  // corrupted hybrid kernels
  tau = sample_tau_with_fault(model, hyper, state, fault, rng);
  const double u = rng.uniform();
  // swapped_branches: the rewired selector compares U against a state
  // coordinate instead of r, so the update probability depends on the block
  // being refreshed and scan invariance breaks. (A literal body swap is the
  // hybrid kernel with mixing probability 1-r, itself exactly invariant, so
  // no joint-distribution test can flag it.)
  const bool take_theta = fault == GewekeFault::swapped_branches
                              ? u < std::abs(state.beta[0])
                              : u < cfg.r;
  if (take_theta) {
    const auto ops = build_operators(model, tau, state.lambda);
    const auto mom = theta_moments(model, ops, state.lambda[0]);
    auto [beta, unew] = sample_theta(mom, rng);
    state.beta = beta;
    state.u = unew;
  } else {
    state.lambda =
        sample_lambda_with_fault(model, hyper, state, tau, fault, rng);
  }
}

}  // namespace

GewekeResult geweke_joint_test(const MixedModelData& model,
                               const Hyperparameters& hyper,
                               const SamplerConfig& cfg, int n_samples,
                               std::uint64_t seed, GewekeFault fault) {
  if (fault != GewekeFault::none && cfg.kind != SamplerKind::hybrid)
    throw ValidationError("fault injection is defined for the hybrid kernel");
  if (n_samples < 100)
    throw ValidationError("geweke_joint_test: need at least 100 samples");

  GewekeResult res;
  res.names = {"lambda0", "log_lambda0", "sum_log_lambda_i", "beta1",
               "beta1_sq", "u_norm_sq",  "tau1",             "log_tau1"};
  const int n_fn = static_cast<int>(res.names.size());

  Rng base(seed);
  Rng rng_mc = base.substream(1);
  Rng rng_sc = base.substream(2);

  // marginal-conditional stream: iid draws from the generative model
  Eigen::MatrixXd mc(n_samples, n_fn);
  for (int s = 0; s < n_samples; ++s) {
    const JointDraw d = prior_predictive_draw(model, hyper, rng_mc);
    const auto g = test_functions(d.state, d.tau);
    for (int k = 0; k < n_fn; ++k) mc(s, k) = g[k];
  }

  // successive-conditional stream: sampler transition, then y redraw
  Eigen::MatrixXd sc(n_samples, n_fn);
  MixedModelData work = model;
  JointDraw d = prior_predictive_draw(model, hyper, rng_sc);
  work.y = d.y;
  for (int s = 0; s < n_samples; ++s) {
    transition(work, hyper, cfg, fault, d.state, d.tau, rng_sc);
    const auto g = test_functions(d.state, d.tau);
    for (int k = 0; k < n_fn; ++k) {
      if (!std::isfinite(g[k]))
        throw NumericalError(
            "geweke: non-finite " + res.names[k] + " at sample " +
            std::to_string(s) + " (lambda0 " +
            std::to_string(d.state.lambda[0]) + ", beta1 " +
            std::to_string(d.state.beta[0]) + ", tau1 " +
            std::to_string(d.tau.tau[0]) + ")");
      sc(s, k) = g[k];
    }
    const Eigen::VectorXd mean =
        work.X * d.state.beta + work.Z * d.state.u;
    const double sd = 1.0 / std::sqrt(d.state.lambda[0]);
    for (int i = 0; i < work.n; ++i) work.y[i] = mean[i] + sd * rng_sc.normal();
  }

  for (int k = 0; k < n_fn; ++k) {
    const double mean_mc = mc.col(k).mean();
    const double mean_sc = sc.col(k).mean();
    const double var_mc =
        (mc.col(k).array() - mean_mc).square().sum() / (n_samples - 1);
    const double var_sc =
        (sc.col(k).array() - mean_sc).square().sum() / (n_samples - 1);
    std::vector<double> series(sc.col(k).data(), sc.col(k).data() + n_samples);
    const double ess_sc = effective_sample_size(series);
    const double se2 = var_mc / n_samples + var_sc / ess_sc;
    const double z = (mean_mc - mean_sc) / std::sqrt(se2);
    res.z.push_back(z);
    res.mean_marginal.push_back(mean_mc);
    res.mean_successive.push_back(mean_sc);
    res.max_abs_z = std::max(res.max_abs_z, std::abs(z));
  }
  return res;
}

}  // namespace ngmm
