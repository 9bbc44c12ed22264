#ifndef NGMM_DRIFT_HPP
#define NGMM_DRIFT_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ngmm/model.hpp"
#include "ngmm/rng.hpp"

namespace ngmm {

// Piecewise exponent nu(c) in (0, 1/2] driving the inverse-magnitude terms
// of the drift function: c on (0, 1/2], min{1/2, 2c-1} above 1/2.
double drift_exponent(double c);

// E|N(0,1)|^order for order > -1; order -nu(c) gives the constant that
// multiplies the 1/|beta_j|^nu bounds.
double normal_abs_moment(double order);

// Coefficients of the drift function
//   v(theta,lambda) = alpha1 ||y-W theta||^2 + alpha2 ||beta||^2
//                   + sum_j 1/|beta_j|^nu + sum_i delta_i ||u_i||^2
//                   + alpha3 lambda0 + alpha4 lambda0^{nu/2} + lambda0^{-1}
//                   + sum_i lambda_i + sum_i eta_i / lambda_i
// together with the envelope (rho_star, L) they certify.
struct DriftCoefficients {
  double alpha1 = 1.0, alpha2 = 1.0, alpha3 = 1.0, alpha4 = 1.0;
  Eigen::VectorXd delta;  // m
  Eigen::VectorXd eta;    // m
  double r = 0.5;
  double C1 = 1.0, C2 = 1.0;
  double rho_star = 0.0;
  double L = 0.0;
};

double drift_value(const MixedModelData& model, const Hyperparameters& hyper,
                   const ChainState& state, const DriftCoefficients& coeffs);

// Externally supplied analysis constants. The theory only proves these
// exist; estimate_c_star / estimate_m1_m2 provide defensible defaults.
struct DriftConstants {
  double c_star = 0.0;
  double M1 = 0.0;
  double M2 = 0.0;
  bool estimated = false;  // provenance flag
};

struct CertificateReport {
  // condition (1): Z full column rank; (2) a0 above the threshold;
  // (3) every a_i > 1.
  bool cond1 = false, cond2 = false, cond3 = false;
  int z_rank = 0;
  double a0_threshold = 0.0;  // a0 must exceed this
  double min_ai = 0.0;
  double r_star_upper = 0.0;  // admissible r bound (partial until constants known)
  double s_max = 0.0;         // largest singular value of X
  double C3 = 0.0;            // q tr[(Z'Z)^{-1}] ||y||^2 n^3 s_max^2
  double kappa_c = 0.0;       // E|N(0,1)|^{-nu(c)}
  DriftConstants constants;
  std::optional<DriftCoefficients> coefficients;
  // Named coefficient values entering rho_star (the seven inequalities per
  // block plus the two automatic ones).
  std::vector<std::pair<std::string, double>> rho_values;
  bool delta_fallback = false;  // rebalanced delta_i was needed

  bool all_conditions() const { return cond1 && cond2 && cond3; }
};

// Conditions (1)-(3) only; numerical rank of Z via SVD with threshold
// q * s_max(Z) * machine epsilon.
CertificateReport check_conditions(const MixedModelData& model,
                                   const Hyperparameters& hyper);

// Constructs concrete drift coefficients with every contraction coefficient
// strictly below 1, or throws NumericalError when the supplied constants
// make that impossible. Requires M1 * kappa(c) < 1.
CertificateReport derive_certificate(const MixedModelData& model,
                                     const Hyperparameters& hyper,
                                     const DriftConstants& constants);

// sup ||(X'X + Dtau^{-1})^{-1} X'||_F^2 estimated over random tau draws,
// inflated by 1.5; lambda0 cancels from the expression.
double estimate_c_star(const MixedModelData& model, int n_draws, Rng& rng);

// Grid fit of (M1, M2) bounding E[tau^{-nu/2}] by M1/(lambda0 beta^2)^{nu/2}
// + M2 over twelve decades of lambda0 beta^2. Throws if M1 kappa(c) >= 1.
std::pair<double, double> estimate_m1_m2(double c, double d);

struct DriftEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte Carlo estimate of E[v(next state) | state] under one hybrid step,
// averaged over N replicates on independent substreams (merged by index).
DriftEstimate estimate_drift_expectation(const MixedModelData& model,
                                         const Hyperparameters& hyper,
                                         const ChainState& state,
                                         const DriftCoefficients& coeffs,
                                         int n_replicates, Rng& rng);

}  // namespace ngmm

#endif
