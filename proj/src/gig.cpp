#include "ngmm/gig.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace ngmm {

namespace {

constexpr long kRejectionCap = 1000000;

void ensure_gsl_quiet() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

// log of the unnormalized two-parameter density t^{lam-1} e^{-w(t+1/t)/2}.
double log_g(double lam, double omega, double t) {
  return (lam - 1.0) * std::log(t) - 0.5 * omega * (t + 1.0 / t);
}

// argmax of log_g; the rationalized forms stay accurate for small omega.
double mode_standard(double lam, double omega) {
  if (lam >= 1.0)
    return (std::sqrt((lam - 1.0) * (lam - 1.0) + omega * omega) + (lam - 1.0)) /
           omega;
  return omega /
         (std::sqrt((1.0 - lam) * (1.0 - lam) + omega * omega) + (1.0 - lam));
}

// Ratio-of-uniforms with the acceptance region shifted to the mode; the
// u-extrema are the two positive roots of a cubic.
double sample_rou_shift(double lam, double omega, Rng& rng) {
  const double m = mode_standard(lam, omega);
  const double lgm = log_g(lam, omega, m);

  const double a = -2.0 * (lam + 1.0) / omega - m;
  const double b = 2.0 * (lam - 1.0) * m / omega - 1.0;
  const double c = m;

  // trigonometric solution; the cubic has three real roots, one negative
  const double pp = b - a * a / 3.0;
  const double qq = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
  const double arg =
      std::clamp(-(qq / 2.0) / std::sqrt(-(pp * pp * pp) / 27.0), -1.0, 1.0);
  const double phi = std::acos(arg);
  const double scale = 2.0 * std::sqrt(-pp / 3.0);
  double roots[3];
  for (int k = 0; k < 3; ++k)
    roots[k] = scale * std::cos(phi / 3.0 - 2.0 * M_PI * k / 3.0) - a / 3.0;
  std::sort(roots, roots + 3);
  const double xminus = std::max(roots[1], 1e-300);
  const double xplus = roots[2];

  const double uminus =
      (xminus - m) * std::exp(0.5 * (log_g(lam, omega, xminus) - lgm));
  const double uplus =
      (xplus - m) * std::exp(0.5 * (log_g(lam, omega, xplus) - lgm));

  for (long it = 0; it < kRejectionCap; ++it) {
    const double u = uminus + rng.uniform() * (uplus - uminus);
    const double v = rng.uniform();
    if (v <= 0.0) continue;
    const double t = u / v + m;
    if (t > 0.0 && 2.0 * std::log(v) <= log_g(lam, omega, t) - lgm) return t;
  }
  throw SamplerError("gig_sample: rejection cap exceeded (rou shift)");
}

double sample_rou_noshift(double lam, double omega, Rng& rng) {
  const double m = mode_standard(lam, omega);
  const double lgm = log_g(lam, omega, m);
  const double tplus =
      ((lam + 1.0) + std::sqrt((lam + 1.0) * (lam + 1.0) + omega * omega)) /
      omega;
  const double uplus =
      tplus * std::exp(0.5 * (log_g(lam, omega, tplus) - lgm));

  for (long it = 0; it < kRejectionCap; ++it) {
    const double u = rng.uniform() * uplus;
    const double v = rng.uniform();
    if (v <= 0.0) continue;
    const double t = u / v;
    if (t > 0.0 && 2.0 * std::log(v) <= log_g(lam, omega, t) - lgm) return t;
  }
  throw SamplerError("gig_sample: rejection cap exceeded (rou)");
}

// Three-piece hat for lam in [0,1) and small omega: constant at the mode
// height on (0,x0], e^{-omega} t^{lam-1} on (x0, 2/omega], exponential tail
// beyond. Areas are handled in log scale; the power hat can span hundreds
// of orders of magnitude when omega is tiny.
double sample_three_region(double lam, double omega, Rng& rng) {
  const double m = mode_standard(lam, omega);
  const double lgm = log_g(lam, omega, m);

  const double x0 = omega / (1.0 - lam);
  const double x1 = std::max(x0, 2.0 / omega);
  const double ln_x0 = std::log(x0);
  const double ln_x1 = std::log(x1);

  const double ln_k1 = -omega - lgm;                 // power hat coefficient
  const double ln_k2 = (lam - 1.0) * ln_x1 - lgm;    // tail hat coefficient

  // log areas of the three hat pieces (hat normalized by g(m))
  const double la0 = ln_x0;
  double la1 = -std::numeric_limits<double>::infinity();
  double spread = 0.0;  // lam * (ln_x1 - ln_x0)
  if (x0 < x1) {
    spread = lam * (ln_x1 - ln_x0);
    if (lam == 0.0)
      la1 = ln_k1 + std::log(ln_x1 - ln_x0);
    else
      la1 = ln_k1 + lam * ln_x1 - std::log(lam) + std::log1p(-std::exp(-spread));
  }
  const double la2 = ln_k2 + std::log(2.0 / omega) - 0.5 * x1 * omega;

  const double lmax = std::max({la0, la1, la2});
  const double w0 = std::exp(la0 - lmax);
  const double w1 = std::exp(la1 - lmax);
  const double w2 = std::exp(la2 - lmax);
  const double wtot = w0 + w1 + w2;

  for (long it = 0; it < kRejectionCap; ++it) {
    const double pick = rng.uniform() * wtot;
    const double u = rng.uniform();
    double t, ln_hat;
    if (pick < w0) {
      t = u * x0;
      ln_hat = 0.0;
    } else if (pick < w0 + w1) {
      if (lam == 0.0) {
        t = x0 * std::exp(u * (ln_x1 - ln_x0));
      } else {
        const double w = std::exp(-spread);  // (x0/x1)^lam
        t = x1 * std::exp(std::log(w + u * (1.0 - w)) / lam);
      }
      ln_hat = ln_k1 + (lam - 1.0) * std::log(t);
    } else {
      t = x1 - (2.0 / omega) * std::log1p(-u);
      ln_hat = ln_k2 - 0.5 * omega * t;
    }
    if (!(t > 0.0)) continue;
    const double lu = std::log(rng.uniform());
    if (lu <= log_g(lam, omega, t) - lgm - ln_hat) return t;
  }
  throw SamplerError("gig_sample: rejection cap exceeded (three-region)");
}

// Draw from the standardized density t^{lam-1} e^{-omega(t+1/t)/2}, lam >= 0.
double sample_standard(double lam, double omega, Rng& rng) {
  if (lam < 1.0 &&
      omega < std::min(0.5, (2.0 / 3.0) * std::sqrt(1.0 - lam)))
    return sample_three_region(lam, omega, rng);
  if (lam > 2.0 || omega > 3.0) return sample_rou_shift(lam, omega, rng);
  return sample_rou_noshift(lam, omega, rng);
}

}  // namespace

void validate_gig(const GigParams& p) {
  if (!(p.xi > 0.0) || !std::isfinite(p.xi))
    throw ValidationError("gig: xi must be strictly positive");
  if (!(p.psi > 0.0) || !std::isfinite(p.psi))
    throw ValidationError("gig: psi must be strictly positive");
  if (!std::isfinite(p.zeta)) throw ValidationError("gig: zeta must be finite");
}

double bessel_k_log(double order, double x) {
  ensure_gsl_quiet();
  if (!(x > 0.0)) throw ValidationError("bessel_k_log: x must be positive");
  gsl_sf_result res;
  const int status = gsl_sf_bessel_lnKnu_e(std::fabs(order), x, &res);
  if (status != GSL_SUCCESS)
    throw NumericalError("bessel_k_log failed for order " +
                         std::to_string(order) + ", x " + std::to_string(x) +
                         ": " + gsl_strerror(status));
  return res.val;
}

double gig_log_density(const GigParams& p, double x) {
  validate_gig(p);
  if (!(x > 0.0))
    throw ValidationError("gig_log_density: x must be positive");
  const double s = std::sqrt(p.xi * p.psi);
  return 0.5 * p.zeta * (std::log(p.xi) - std::log(p.psi)) - std::log(2.0) -
         bessel_k_log(p.zeta, s) + (p.zeta - 1.0) * std::log(x) -
         0.5 * (p.xi * x + p.psi / x);
}

double gig_moment(const GigParams& p, double order) {
  validate_gig(p);
  const double s = std::sqrt(p.xi * p.psi);
  return std::exp(0.5 * order * (std::log(p.psi) - std::log(p.xi)) +
                  bessel_k_log(p.zeta + order, s) - bessel_k_log(p.zeta, s));
}

double gig_sample(const GigParams& p, Rng& rng) {
  validate_gig(p);
  const double omega = std::sqrt(p.xi * p.psi);
  const double alpha = std::sqrt(p.psi / p.xi);
  if (p.zeta >= 0.0) return alpha * sample_standard(p.zeta, omega, rng);
  return alpha / sample_standard(-p.zeta, omega, rng);
}

}  // namespace ngmm
