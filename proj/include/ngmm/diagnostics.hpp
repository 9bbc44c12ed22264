#ifndef NGMM_DIAGNOSTICS_HPP
#define NGMM_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ngmm/model.hpp"
#include "ngmm/samplers.hpp"

namespace ngmm {

struct CoordinateStats {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
  double q5 = 0.0, q50 = 0.0, q95 = 0.0;
  std::vector<double> acf;  // lags 0..50
};

struct SummaryStats {
  std::vector<CoordinateStats> coords;
  long n_states = 0;
};

std::vector<double> autocorrelations(std::span<const double> x, int max_lag);

// Initial-positive-sequence truncation of the autocovariances; a constant
// series has ESS = 1 by convention.
double effective_sample_size(std::span<const double> x);

// Column-wise summary; requires at least 10 rows.
SummaryStats summarize(const Eigen::MatrixXd& draws,
                       const std::vector<std::string>& names);
SummaryStats summarize(const ChainOutput& chain, const MixedModelData& model);

// Names beta_1..beta_p, u_1..u_q, lambda_0..lambda_m.
std::vector<std::string> coordinate_names(const MixedModelData& model);
Eigen::MatrixXd chain_matrix(const ChainOutput& chain);

// Deliberate kernel corruptions for canary runs: a correct test must flag
// each of them.
enum class GewekeFault {
  none,
  lambda0_shape,     // gamma shape of the lambda0 conditional off by one
  gig_order,         // tau conditional order c instead of c - 1/2
  swapped_branches,  // both scan branches fire, lambda drawn against stale theta
};

struct GewekeResult {
  std::vector<std::string> names;     // test functions
  std::vector<double> z;              // two-sample z-scores
  std::vector<double> mean_marginal;  // prior-predictive stream
  std::vector<double> mean_successive;
  double max_abs_z = 0.0;
};

// Joint-distribution sampler test: compares moments of test functions
// {lambda0, log lambda0, sum log lambda_i, beta_1, beta_1^2, ||u||^2, tau_1,
// log tau_1} between iid prior-predictive draws and an alternating
// sampler-transition / data-redraw chain. Both streams target the same
// joint law exactly when the transition kernel is invariant.
GewekeResult geweke_joint_test(const MixedModelData& model,
                               const Hyperparameters& hyper,
                               const SamplerConfig& cfg, int n_samples,
                               std::uint64_t seed,
                               GewekeFault fault = GewekeFault::none);

}  // namespace ngmm

#endif
