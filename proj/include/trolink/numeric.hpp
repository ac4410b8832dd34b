#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace trolink {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Default relative tolerance for every rank and membership decision.
/// Rank cutoffs are tol * sigma_max; membership residuals are compared
/// against tol * max(1, |x|).
inline constexpr double kDefaultTol = 1e-9;

/// Generator columns with Euclidean norm at or below this floor are treated
/// as numerical zeros when building spans.  Inputs are expected at unit
/// scale (orthonormal bases, coordinate vectors, O(1) fixture data).
inline constexpr double kGeneratorFloor = 1e-12;

/// Operands structurally disagree: wrong parent, wrong dimensions.
class structural_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A rank or support decision fell inside the ambiguity window around the
/// cutoff; carries the borderline value so the caller can diagnose scaling.
class tolerance_error : public std::runtime_error {
 public:
  tolerance_error(const std::string& what, double borderline, double cutoff)
      : std::runtime_error(what), borderline_(borderline), cutoff_(cutoff) {}
  double borderline() const { return borderline_; }
  double cutoff() const { return cutoff_; }

 private:
  double borderline_;
  double cutoff_;
};

/// A requested construction failed its own verification, e.g. a map offered
/// as a ternary homomorphism is not one, or a sequence is not exact.
class verification_error : public std::runtime_error {
 public:
  explicit verification_error(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Independently computed results disagree.  This indicates a defect in the
/// library itself; it is never raised for merely unusual inputs.
class consistency_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical rank with the project-wide cutoff tol * sigma_max.
Index numeric_rank(const Mat& m, double tol = kDefaultTol);

/// Orthonormal basis of the column space (left singular vectors kept by the
/// cutoff).
Mat image_onb(const Mat& m, double tol = kDefaultTol);

/// Orthonormal basis of the null space (right singular vectors dropped by
/// the cutoff).
Mat kernel_onb(const Mat& m, double tol = kDefaultTol);

/// Largest singular value; 0 for empty matrices.
double spectral_norm(const Mat& m);

}  // namespace trolink
