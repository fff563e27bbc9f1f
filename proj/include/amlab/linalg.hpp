// Small dense linear-algebra helpers on top of Eigen.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "amlab/error.hpp"

namespace amlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Default relative threshold for numerical rank decisions.
inline constexpr double kRankTol = 1e-8;

inline Vec to_vec(std::span<const double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Eigen::Index>(i)] = xs[i];
  return v;
}

inline std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

/// Numerical rank: singular values above tol * max(1, sigma_max).
inline int numerical_rank(const Mat& m, double tol = kRankTol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  const double cut = tol * std::max(1.0, s.size() ? s[0] : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > cut) ++r;
  return r;
}

/// Dimension of the affine hull of a point set (-1 for the empty set).
inline int affine_rank(const std::vector<Vec>& pts, double tol = kRankTol) {
  if (pts.empty()) return -1;
  if (pts.size() == 1) return 0;
  const Eigen::Index n = pts.front().size();
  Mat d(n, static_cast<Eigen::Index>(pts.size() - 1));
  for (std::size_t i = 1; i < pts.size(); ++i) {
    require_dims(pts[i].size() == n, "affine_rank: points of different length");
    d.col(static_cast<Eigen::Index>(i - 1)) = pts[i] - pts[0];
  }
  return numerical_rank(d, tol);
}

/// Incrementally grown affine hull with an orthonormal direction basis.
class AffineHull {
 public:
  explicit AffineHull(Vec origin) : origin_(std::move(origin)) {}

  int dimension() const { return static_cast<int>(basis_.size()); }
  const Vec& origin() const { return origin_; }

  /// Component of (p - origin) orthogonal to the current hull.
  Vec residual(const Vec& p) const {
    Vec r = p - origin_;
    // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : basis_) r -= q.dot(r) * q;
    return r;
  }

  double distance(const Vec& p) const { return residual(p).norm(); }

  /// Adds p if it lies farther than tol from the hull; returns true if added.
  bool add(const Vec& p, double tol) {
    Vec r = residual(p);
    const double nr = r.norm();
    if (nr <= tol) return false;
    basis_.push_back(r / nr);
    return true;
  }

  /// Projects v onto the orthogonal complement of the hull directions.
  Vec project_out(Vec v) const {
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& q : basis_) v -= q.dot(v) * q;
    return v;
  }

 private:
  Vec origin_;
  std::vector<Vec> basis_;
};

}  // namespace amlab
