#ifndef NGMM_ERRORS_HPP
#define NGMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ngmm {

// Bad input: dimension mismatch, non-positive hyperparameter, state outside
// the admissible set, unparseable file. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical degeneracy at runtime, e.g. a factorization that fails because
// some tau_j or lambda_i sits at an extreme magnitude. Maps to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg, double smallest_pivot = 0.0)
      : std::runtime_error(msg), smallest_pivot_(smallest_pivot) {}
  double smallest_pivot() const { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

// A sampler exhausted its retry budget (rejection cap, zero-beta redraws).
// Should never fire on sane inputs; indicates parameter corruption.
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ngmm

#endif
