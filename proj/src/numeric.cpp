#include "trolink/numeric.hpp"

namespace trolink {

namespace {

Eigen::VectorXd singular_values(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return Eigen::VectorXd();
  if (m.rows() * m.cols() > 64 * 64) {
    Eigen::BDCSVD<Mat> svd(m);
    if (svd.singularValues().allFinite()) return svd.singularValues();
  }
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues();
}

Index rank_from(const Eigen::VectorXd& s, double tol) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  const double cutoff = tol * s(0);
  Index r = 0;
  while (r < s.size() && s(r) > cutoff) ++r;
  return r;
}

}  // namespace

Index numeric_rank(const Mat& m, double tol) {
  return rank_from(singular_values(m), tol);
}

Mat image_onb(const Mat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return Mat(m.rows(), 0);
  if (m.rows() * m.cols() > 64 * 64) {
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeThinU);
    // BDCSVD can emit non-finite vectors on some complex inputs; fall back.
    if (svd.singularValues().allFinite() && svd.matrixU().allFinite()) {
      const Index r = rank_from(svd.singularValues(), tol);
      return svd.matrixU().leftCols(r);
    }
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const Index r = rank_from(svd.singularValues(), tol);
  return svd.matrixU().leftCols(r);
}

Mat kernel_onb(const Mat& m, double tol) {
  if (m.cols() == 0) return Mat(0, 0);
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  if (m.rows() * m.cols() > 64 * 64) {
    Eigen::BDCSVD<Mat> svd(m, Eigen::ComputeFullV);
    if (svd.singularValues().allFinite() && svd.matrixV().allFinite()) {
      const Index r = rank_from(svd.singularValues(), tol);
      return svd.matrixV().rightCols(m.cols() - r);
    }
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const Index r = rank_from(svd.singularValues(), tol);
  return svd.matrixV().rightCols(m.cols() - r);
}

double spectral_norm(const Mat& m) {
  const Eigen::VectorXd s = singular_values(m);
  return s.size() ? s(0) : 0.0;
}

}  // namespace trolink
