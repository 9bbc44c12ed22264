#ifndef NGMM_TESTS_SUPPORT_HPP
#define NGMM_TESTS_SUPPORT_HPP

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ngmm/gig.hpp"
#include "ngmm/model.hpp"
#include "ngmm/rng.hpp"

namespace ngmm::test {

// Fixed desk-scale model: n=4, p=3, m=1, q=2, c=0.4. Hyperparameters chosen
// so all three ergodicity conditions hold (a0 threshold is 3.2 here).
inline std::pair<MixedModelData, Hyperparameters> tiny_model() {
  Eigen::MatrixXd X(4, 3);
  X << 0.7, -1.2, 0.4,
       1.1,  0.3, -0.8,
      -0.5,  0.9, 1.3,
       0.2, -0.6, -0.1;
  Eigen::MatrixXd Z(4, 2);
  Z << 1.0, -0.3,
      -0.7,  0.8,
       0.4,  1.1,
      -1.2,  0.5;
  Eigen::VectorXd y(4);
  y << 0.9, -1.4, 0.6, 2.1;
  MixedModelData model = make_model(y, X, {Z});
  Hyperparameters hyper;
  hyper.a = (Eigen::VectorXd(2) << 6.0, 3.0).finished();
  hyper.b = (Eigen::VectorXd(2) << 5.0, 3.0).finished();
  hyper.c = 0.4;
  hyper.d = 1.0;
  return {std::move(model), hyper};
}

// Random instance for the conditional-law equivalence oracle; tau and
// lambda are kept inside [1e-2, 1e2] so both evaluation routes stay well
// inside double precision at the 1e-8 comparison tolerance.
struct EquivalenceInstance {
  MixedModelData model;
  TauVector tau;
  Eigen::VectorXd lambda;
};

inline EquivalenceInstance equivalence_instance(std::uint64_t seed) {
  Rng rng(seed);
  const int m = 1 + static_cast<int>(rng.integer() % 2);
  std::vector<int> q_sizes(m);
  int q = 0;
  for (int i = 0; i < m; ++i) {
    q_sizes[i] = 2 + static_cast<int>(rng.integer() % 2);
    q += q_sizes[i];
  }
  const int n = 2 + static_cast<int>(rng.integer() % 7);
  const int p = 1 + static_cast<int>(rng.integer() % 8);  // includes p > n

  EquivalenceInstance inst;
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  std::vector<Eigen::MatrixXd> Z_blocks;
  for (int b = 0; b < m; ++b) {
    Eigen::MatrixXd Zi(n, q_sizes[b]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q_sizes[b]; ++j) Zi(i, j) = rng.normal();
    Z_blocks.push_back(Zi);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.normal() * std::sqrt(double(n));
  inst.model = make_model(y, X, Z_blocks);

  auto logu = [&](double lo, double hi) {
    return std::exp(std::log(lo) + rng.uniform() * std::log(hi / lo));
  };
  inst.tau.tau.resize(p);
  for (int j = 0; j < p; ++j) inst.tau.tau[j] = logu(1e-2, 1e2);
  inst.lambda.resize(m + 1);
  for (int i = 0; i <= m; ++i) inst.lambda[i] = logu(1e-2, 1e2);
  return inst;
}

// Direct-route conditional moments: invert lambda0 W'W + C in long double.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> direct_theta_moments(
    const MixedModelData& model, const TauVector& tau,
    const Eigen::VectorXd& lambda) {
  using LongMat =
      Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LongVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  const long double lambda0 = lambda[0];
  const LongMat W = model.W.cast<long double>();
  LongMat precision = lambda0 * (W.transpose() * W);
  for (int j = 0; j < model.p; ++j)
    precision(j, j) += lambda0 / static_cast<long double>(tau.tau[j]);
  for (int i = 0; i < model.m; ++i)
    for (int k = 0; k < model.q_sizes[i]; ++k) {
      const int idx = model.p + model.q_offsets[i] + k;
      precision(idx, idx) += static_cast<long double>(lambda[i + 1]);
    }
  const LongMat cov = precision.inverse();
  const LongVec mean =
      cov * (lambda0 * (W.transpose() * model.y.cast<long double>()));
  return {mean.cast<double>(), cov.cast<double>()};
}

// Adaptive quadrature of f over (a, b); b may be infinite.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double rel_tol = 1e-10) {
  gsl_set_error_handler_off();
  struct Ctx {
    const std::function<double(double)>* fn;
  } ctx{&f};
  gsl_function gf;
  gf.function = [](double x, void* params) {
    return (*static_cast<Ctx*>(params)->fn)(x);
  };
  gf.params = &ctx;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(4096);
  double result = 0.0, abserr = 0.0;
  if (std::isinf(b))
    gsl_integration_qagiu(&gf, a, 0.0, rel_tol, 4096, ws, &result, &abserr);
  else
    gsl_integration_qags(&gf, a, b, 0.0, rel_tol, 4096, ws, &result, &abserr);
  gsl_integration_workspace_free(ws);
  return result;
}

// Kolmogorov-Smirnov distance between draws and the density's CDF obtained
// by cumulative quadrature: adaptive up to the smallest draw, composite
// Simpson across the (tiny) gaps between sorted points.
inline double ks_distance(std::vector<double> draws,
                          const std::function<double(double)>& density) {
  std::sort(draws.begin(), draws.end());
  const size_t n = draws.size();
  double cdf = integrate(density, 0.0, draws[0], 1e-9);
  double ks = std::max(std::abs(cdf), std::abs(cdf - 1.0 / n));
  for (size_t i = 1; i < n; ++i) {
    const double a = draws[i - 1], b = draws[i];
    const double h = b - a;
    if (h > 0.0)
      cdf += h / 6.0 *
             (density(a) + 4.0 * density(0.5 * (a + b)) + density(b));
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    ks = std::max(ks, std::max(std::abs(cdf - lo), std::abs(cdf - hi)));
  }
  return ks;
}

}  // namespace ngmm::test

#endif
