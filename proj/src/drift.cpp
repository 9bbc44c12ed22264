#include "ngmm/drift.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <thread>

#include "ngmm/gig.hpp"
#include "ngmm/samplers.hpp"

namespace ngmm {

double drift_exponent(double c) {
  if (!(c > 0.0)) throw ValidationError("drift_exponent: c must be positive");
  if (c <= 0.5) return c;
  return std::min(0.5, 2.0 * c - 1.0);
}

double normal_abs_moment(double order) {
  if (!(order > -1.0))
    throw ValidationError("normal_abs_moment: order must exceed -1");
  return std::exp(0.5 * order * std::log(2.0) +
                  std::lgamma(0.5 * (order + 1.0)) - 0.5 * std::log(M_PI));
}

double drift_value(const MixedModelData& model, const Hyperparameters& hyper,
                   const ChainState& state, const DriftCoefficients& coeffs) {
  validate_state(model, state);
  const double nu = drift_exponent(hyper.c);
  const Eigen::VectorXd theta =
      (Eigen::VectorXd(model.p + model.q) << state.beta, state.u).finished();
  const double lambda0 = state.lambda[0];
  double v = coeffs.alpha1 * (model.y - model.W * theta).squaredNorm() +
             coeffs.alpha2 * state.beta.squaredNorm();
  for (int j = 0; j < model.p; ++j)
    v += std::pow(std::abs(state.beta[j]), -nu);
  for (int i = 0; i < model.m; ++i)
    v += coeffs.delta[i] * model.u_block(state.u, i).squaredNorm();
  v += coeffs.alpha3 * lambda0 + coeffs.alpha4 * std::pow(lambda0, 0.5 * nu) +
       1.0 / lambda0;
  for (int i = 0; i < model.m; ++i)
    v += state.lambda[i + 1] + coeffs.eta[i] / state.lambda[i + 1];
  return v;
}

namespace {

int svd_rank(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  const double thresh =
      mat.cols() * smax * std::numeric_limits<double>::epsilon();
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > thresh) ++rank;
  return rank;
}

struct CertificateInputs {
  double nppa = 0.0;  // n + p + 2 a0 - 2
  int rank_x = 0;
  double s_max = 0.0;
  double tr_zzt = 0.0;
  double tr_ztz_inv = 0.0;
  double y_norm2 = 0.0;
  double C3 = 0.0;
  double A = 0.0;  // (rank X + 2p(c+1)) / nppa, < 1 under condition (2)
  double nu = 0.0;
  double kappa = 0.0;
};

// Evaluates the full coefficient system for a candidate (eta, delta, r) and
// reports every contraction coefficient by name.
struct SystemEvaluation {
  DriftCoefficients coeffs;
  std::vector<std::pair<std::string, double>> rho;
  double rho_star = 0.0;
  bool feasible = false;
};

SystemEvaluation evaluate_system(const MixedModelData& model,
                                 const Hyperparameters& hyper,
                                 const DriftConstants& k,
                                 const CertificateInputs& in,
                                 const Eigen::VectorXd& eta,
                                 const Eigen::VectorXd& delta, double r) {
  SystemEvaluation ev;
  const int p = model.p, n = model.n, m = model.m;
  const double c = hyper.c, d = hyper.d;
  const double y2 = in.y_norm2, s2 = in.s_max * in.s_max;
  const double max_delta = delta.maxCoeff();

  DriftCoefficients& co = ev.coeffs;
  co.eta = eta;
  co.delta = delta;
  co.r = r;
  co.alpha1 = 1.0 / (r * in.nppa);
  co.alpha2 = 2.0 * d / (r * in.nppa);
  co.C1 = 1.1 * 2.0 * k.c_star * n * n * y2 * s2 / r;
  co.C2 = 1.1 * max_delta * in.C3 * in.nppa / d;
  co.alpha3 = 1.1 / (1.0 - r) *
              (r * co.alpha2 * k.c_star * n * n * y2 * s2 * p * co.C1 /
                   (4.0 * d) +
               r * max_delta * p * co.C2 * in.C3 / (4.0 * d));
  co.alpha4 = 1.1 * r / (1.0 - r) * p * in.kappa *
              (std::pow(in.s_max, in.nu) + k.M2);

  auto push = [&ev](const std::string& name, double value) {
    ev.rho.emplace_back(name, value);
  };
  push("rho1", (1.0 - r) * (1.0 + 1.0 / (co.alpha1 * in.nppa)));
  push("rho2", 0.5 * r + r * k.c_star * n * n * y2 * s2 / (2.0 * co.C1) +
                   r * max_delta * in.C3 / (2.0 * co.alpha2 * co.C2) +
                   (1.0 - r) + (1.0 - r) * d / (co.alpha2 * in.nppa));
  for (int i = 0; i < m; ++i) {
    const double gi2 = model.q_sizes[i] + 2.0 * hyper.a[i + 1] - 2.0;
    push("rho3_" + std::to_string(i + 1),
         (1.0 - r) * (1.0 + eta[i] / (delta[i] * gi2)));
  }
  push("rho4", r * co.alpha2 * k.c_star * n * n * y2 * s2 * p * co.C1 /
                       (4.0 * co.alpha3 * d) +
                   r * max_delta * p * co.C2 * in.C3 / (4.0 * co.alpha3 * d) +
                   r);
  push("rho5",
       r * (1.0 + p * in.kappa * (std::pow(in.s_max, in.nu) + k.M2) /
                      co.alpha4));
  push("rho6", r * co.alpha1 * in.rank_x +
                   r * co.alpha2 * p * (4.0 * c + 1.0) / (4.0 * d) + r +
                   (1.0 - r) * 3.0 * p / (2.0 * in.nppa));
  for (int i = 0; i < m; ++i) {
    push("rho7_" + std::to_string(i + 1),
         r * co.alpha1 * in.tr_zzt / eta[i] +
             r * co.alpha2 * k.c_star * in.tr_zzt / eta[i] +
             r * delta[i] * model.q_sizes[i] / eta[i] + r);
  }
  // the two automatic coefficients
  push("r", r);
  push("beta_inv_coeff", 1.0 - r * (1.0 - in.kappa * k.M1));

  ev.rho_star = 0.0;
  ev.feasible = true;
  for (const auto& [name, value] : ev.rho) {
    ev.rho_star = std::max(ev.rho_star, value);
    if (!(value < 1.0)) ev.feasible = false;
  }

  // offset L = r K0' + (1-r) K1
  double sum_delta_q = 0.0;
  for (int i = 0; i < m; ++i) sum_delta_q += delta[i] * model.q_sizes[i];
  const double n3y2 = static_cast<double>(n) * n * n * y2;
  const double K0 = 2.0 * co.alpha1 * (n * y2 + n3y2) +
                    co.alpha2 * k.c_star * n * n * y2 +
                    in.tr_ztz_inv * n3y2 * sum_delta_q;
  const double K0p =
      K0 + p * c / d *
               (co.alpha2 * k.c_star * n * n * y2 * s2 + in.C3 * max_delta);
  const double npa1 = n + p + 2.0 * hyper.a[0] + 1.0;
  double K1 = co.alpha3 * npa1 / hyper.b[0] +
              co.alpha4 * std::pow(npa1 / hyper.b[0], in.nu) +
              2.0 * hyper.b[0] / in.nppa;
  for (int i = 0; i < m; ++i) {
    K1 += (model.q_sizes[i] + 2.0 * hyper.a[i + 1] + 1.0) / hyper.b[i + 1];
    K1 += 2.0 * eta[i] * hyper.b[i + 1] /
          (model.q_sizes[i] + 2.0 * hyper.a[i + 1] - 2.0);
  }
  co.L = r * K0p + (1.0 - r) * K1;
  co.rho_star = ev.rho_star;
  return ev;
}

}  // namespace

CertificateReport check_conditions(const MixedModelData& model,
                                   const Hyperparameters& hyper) {
  validate_hyperparameters(hyper, model.m);
  CertificateReport rep;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd_z(model.Z);
  const double z_smax = svd_z.singularValues()[0];
  const double z_thresh =
      model.q * z_smax * std::numeric_limits<double>::epsilon();
  rep.z_rank = 0;
  for (int i = 0; i < svd_z.singularValues().size(); ++i)
    if (svd_z.singularValues()[i] > z_thresh) ++rep.z_rank;
  rep.cond1 = (rep.z_rank == model.q);

  const int rank_x = svd_rank(model.X);
  rep.a0_threshold =
      0.5 * (rank_x - model.n + (2.0 * hyper.c + 1.0) * model.p + 2.0);
  rep.cond2 = hyper.a[0] > rep.a0_threshold;

  rep.min_ai = hyper.a.tail(model.m).minCoeff();
  rep.cond3 = rep.min_ai > 1.0;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd_x(model.X);
  rep.s_max = svd_x.singularValues().size() ? svd_x.singularValues()[0] : 0.0;
  rep.kappa_c = normal_abs_moment(-drift_exponent(hyper.c));

  const double nppa = model.n + model.p + 2.0 * hyper.a[0] - 2.0;
  const double A =
      (rank_x + 2.0 * model.p * (hyper.c + 1.0)) / nppa;
  // partial bound: refined once the analysis constants are known
  rep.r_star_upper = rep.cond2 ? std::max(0.0, 1.0 - A) : 0.0;

  if (rep.cond1) {
    Eigen::MatrixXd ztz = model.Z.transpose() * model.Z;
    Eigen::LLT<Eigen::MatrixXd> llt(ztz);
    if (llt.info() == Eigen::Success) {
      const double tr_inv =
          llt.solve(Eigen::MatrixXd::Identity(model.q, model.q)).trace();
      rep.C3 = model.q * tr_inv * model.y.squaredNorm() *
               std::pow(static_cast<double>(model.n), 3) * rep.s_max *
               rep.s_max;
    }
  }
  return rep;
}

CertificateReport derive_certificate(const MixedModelData& model,
                                     const Hyperparameters& hyper,
                                     const DriftConstants& constants) {
  CertificateReport rep = check_conditions(model, hyper);
  rep.constants = constants;
  if (!rep.all_conditions())
    throw ValidationError(
        "certificate conditions fail: full-rank Z / a0 threshold / a_i > 1 "
        "must all hold before coefficients can be derived");
  if (!(constants.c_star > 0.0) || !(constants.M1 > 0.0) ||
      !(constants.M2 > 0.0))
    throw ValidationError("analysis constants must be strictly positive");

  CertificateInputs in;
  in.nu = drift_exponent(hyper.c);
  in.kappa = rep.kappa_c;
  if (!(constants.M1 * in.kappa < 1.0))
    throw ValidationError(
        "M1 * kappa(c) must be < 1; supplied constants are inadmissible");

  const int n = model.n, p = model.p, m = model.m;
  in.nppa = n + p + 2.0 * hyper.a[0] - 2.0;
  in.rank_x = svd_rank(model.X);
  in.s_max = rep.s_max;
  in.tr_zzt = model.Z.squaredNorm();
  {
    Eigen::MatrixXd ztz = model.Z.transpose() * model.Z;
    Eigen::LLT<Eigen::MatrixXd> llt(ztz);
    in.tr_ztz_inv =
        llt.solve(Eigen::MatrixXd::Identity(model.q, model.q)).trace();
  }
  in.y_norm2 = model.y.squaredNorm();
  in.C3 = rep.C3;
  in.A = (in.rank_x + 2.0 * p * (hyper.c + 1.0)) / in.nppa;

  // eta_i lower bounds; everything scales linearly in tr(ZZ')
  Eigen::VectorXd t(m), eta_base(m), g(m);
  for (int i = 0; i < m; ++i) {
    g[i] = model.q_sizes[i] + 2.0 * hyper.a[i + 1];
    t[i] = in.tr_zzt * (1.0 + 2.0 * hyper.d * constants.c_star) / in.nppa;
    eta_base[i] = (g[i] - 2.0) / (2.0 * hyper.a[i + 1] - 2.0) * t[i];
  }

  // The documented slack factor 1.1 on eta_i can pin r* below the validity
  // threshold of the delta_i = eta_i / (r (q_i + 2a_i - 1)) choice, which
  // needs r > 1/(q_i + 2a_i - 1). Doubling the eta scale relaxes the r*
  // bound; if the standard delta still fails, a balanced eta/delta ratio
  // (geometric mean of the feasible corridor) closes the system whenever
  // conditions (1)-(3) hold.
  for (int doubling = 0; doubling <= 60; ++doubling) {
    const double s_eta = 1.1 * std::pow(2.0, doubling);
    Eigen::VectorXd eta = s_eta * eta_base;
    double worst_b = 0.0;
    for (int i = 0; i < m; ++i)
      worst_b = std::max(worst_b,
                         t[i] / eta[i] + model.q_sizes[i] / (g[i] - 2.0));
    const double r_up = 1.0 - std::max(in.A, worst_b);
    if (!(r_up > 0.0)) continue;
    const double r = 0.9 * r_up;

    Eigen::VectorXd delta(m);
    for (int i = 0; i < m; ++i) delta[i] = eta[i] / (r * (g[i] - 1.0));
    SystemEvaluation ev =
        evaluate_system(model, hyper, constants, in, eta, delta, r);
    bool fallback = false;
    if (!ev.feasible) {
      for (int i = 0; i < m; ++i)
        delta[i] = eta[i] * (1.0 - r) /
                   (r * std::sqrt(model.q_sizes[i] * (g[i] - 2.0)));
      ev = evaluate_system(model, hyper, constants, in, eta, delta, r);
      fallback = true;
    }
    if (ev.feasible) {
      rep.r_star_upper = r_up;
      rep.coefficients = ev.coeffs;
      rep.rho_values = ev.rho;
      rep.delta_fallback = fallback;
      return rep;
    }
  }
  throw NumericalError(
      "certificate construction failed: no coefficient assignment drove all "
      "contraction coefficients below 1 (misconfigured constants?)");
}

double estimate_c_star(const MixedModelData& model, int n_draws, Rng& rng) {
  const Eigen::MatrixXd xtx = model.X.transpose() * model.X;
  double best = 0.0;
  for (int k = 0; k < n_draws; ++k) {
    Eigen::MatrixXd A = xtx;
    for (int j = 0; j < model.p; ++j) {
      const double log_tau = (rng.uniform() * 12.0 - 6.0) * std::log(10.0);
      A(j, j) += std::exp(-log_tau);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    best = std::max(best, llt.solve(model.X.transpose()).squaredNorm());
  }
  if (!(best > 0.0))
    throw NumericalError("estimate_c_star: all trial factorizations failed");
  return 1.5 * best;
}

std::pair<double, double> estimate_m1_m2(double c, double d) {
  const double nu = drift_exponent(c);
  const double kappa = normal_abs_moment(-nu);
  auto frac_moment = [&](double x) {
    return gig_moment({c - 0.5, 2.0 * d, x}, -0.5 * nu);
  };
  // x -> 0 tail: f(x) x^{nu/2} decreases to a constant (zero when c > 1/2).
  // That constant is the only hard floor on M1; its product with kappa(c)
  // approaches 1 as c -> 0, so the headroom is taken as a fraction of the
  // remaining gap rather than a fixed inflation.
  double tail = 0.0;
  for (int k = 0; k <= 88; ++k) {
    const double x = std::pow(10.0, -30.0 + 0.25 * k);  // [1e-30, 1e-8]
    tail = std::max(tail, frac_moment(x) * std::pow(x, 0.5 * nu));
  }
  if (!(tail * kappa < 1.0))
    throw NumericalError(
        "estimate_m1_m2: small-x tail coefficient already violates "
        "M1 kappa(c) < 1");
  const double m1 = tail + 0.5 * (1.0 / kappa - tail);

  double m2 = 1e-8;
  for (int k = 0; k <= 480; ++k) {
    const double x = std::pow(10.0, -8.0 + k / 30.0);  // [1e-8, 1e8]
    m2 = std::max(m2, frac_moment(x) - m1 * std::pow(x, -0.5 * nu));
  }
  return {m1, 1.02 * m2};
}

DriftEstimate estimate_drift_expectation(const MixedModelData& model,
                                         const Hyperparameters& hyper,
                                         const ChainState& state,
                                         const DriftCoefficients& coeffs,
                                         int n_replicates, Rng& rng) {
  if (n_replicates < 100)
    throw ValidationError("estimate_drift_expectation needs N >= 100");
  validate_state(model, state);

  std::vector<double> values(n_replicates);
  auto worker = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      Rng sub = rng.substream(static_cast<std::uint64_t>(i));
      const ChainState next =
          hybrid_step(model, hyper, state, coeffs.r, sub);
      values[i] = drift_value(model, hyper, next, coeffs);
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int n_threads =
      n_replicates >= 512 ? static_cast<int>(std::min<unsigned>(hw, 8)) : 1;
  if (n_threads == 1) {
    worker(0, n_replicates);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_replicates + n_threads - 1) / n_threads;
    for (int tdx = 0; tdx < n_threads; ++tdx)
      pool.emplace_back(worker, tdx * chunk,
                        std::min(n_replicates, (tdx + 1) * chunk));
    for (auto& th : pool) th.join();
  }

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n_replicates;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n_replicates - 1);
  return {mean, std::sqrt(var / n_replicates)};
}

}  // namespace ngmm
