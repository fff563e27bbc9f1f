// Dense two-phase primal simplex with optimal-face extraction.
//
// Problems are stated as
//
//     minimize  c.x   subject to  A x (=, <=, >=) b,  0 <= x <= u,
//
// and are solved internally in standard form (equality rows, x >= 0) after
// adding slack columns for inequality rows and upper bounds. The tableau is
// rebuilt from the current basis every few dozen pivots so long pivot
// sequences do not accumulate error.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "amlab/error.hpp"
#include "amlab/linalg.hpp"
#include "amlab/rng.hpp"

namespace amlab::lp {

enum class Sense { Eq, Le, Ge };

struct LinearProgram {
  Mat matrix;                                // m x n
  Vec rhs;                                   // m
  Vec objective;                             // n
  std::vector<Sense> sense;                  // empty means all equalities
  std::vector<std::optional<double>> upper;  // empty means no upper bounds

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }

  Sense row_sense(Eigen::Index i) const {
    return sense.empty() ? Sense::Eq : sense[static_cast<std::size_t>(i)];
  }

  void validate() const {
    require_dims(rhs.size() == matrix.rows(), "LinearProgram: rhs length != row count");
    require_dims(objective.size() == matrix.cols(),
                 "LinearProgram: objective length != column count");
    require_dims(sense.empty() || sense.size() == static_cast<std::size_t>(matrix.rows()),
                 "LinearProgram: sense length != row count");
    require_dims(upper.empty() || upper.size() == static_cast<std::size_t>(matrix.cols()),
                 "LinearProgram: upper-bound length != column count");
    require(matrix.allFinite() && rhs.allFinite() && objective.allFinite(),
            "LinearProgram: non-finite entry");
    for (const auto& u : upper)
      require(!u || std::isfinite(*u), "LinearProgram: non-finite upper bound");
  }
};

enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

struct SolverOptions {
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  double feasibility_tol = 1e-9;
  int refactor_interval = 64;
  int degenerate_before_bland = 50;
  long max_iterations = 0;  // 0 picks a size-dependent limit
};

/// Result of a solve. Dual signs follow the Lagrangian of a minimization:
/// reduced_cost = c - A^T dual - bound_dual >= 0 at optimality.
struct Solution {
  Status status = Status::Infeasible;
  double value = 0.0;
  Vec point;         // structural variables
  Vec dual;          // one entry per constraint row
  Vec bound_dual;    // one entry per structural column (0 when unbounded above)
  Vec reduced_cost;  // structural columns
  // Infeasible: Farkas vector y over rows with y.b > 0 and y.A <= 0 on the
  // standard form. Unbounded: a ray over the structural variables.
  Vec certificate;
  long iterations = 0;
  double complementarity_residual = 0.0;
  double primal_residual = 0.0;

  bool optimal() const { return status == Status::Optimal; }
};

namespace detail {

/// Standard-form image of a LinearProgram: rows = original rows followed by
/// one row per upper-bounded column; columns = structural, row slacks, bound
/// slacks.
struct StandardForm {
  Mat a;
  Vec b;
  Vec c;
  Eigen::Index n_struct = 0;
  Eigen::Index m_orig = 0;
  std::vector<Eigen::Index> bound_col;  // structural column of each bound row
  std::vector<Eigen::Index> slack_row;  // row owning each slack column (or -1)
};

inline StandardForm to_standard(const LinearProgram& lp) {
  lp.validate();
  StandardForm sf;
  const Eigen::Index m = lp.rows(), n = lp.cols();
  sf.n_struct = n;
  sf.m_orig = m;
  Eigen::Index n_row_slack = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (lp.row_sense(i) != Sense::Eq) ++n_row_slack;
  for (Eigen::Index j = 0; j < n; ++j)
    if (!lp.upper.empty() && lp.upper[static_cast<std::size_t>(j)])
      sf.bound_col.push_back(j);
  const auto n_bound = static_cast<Eigen::Index>(sf.bound_col.size());
  const Eigen::Index rows = m + n_bound;
  const Eigen::Index cols = n + n_row_slack + n_bound;
  sf.a = Mat::Zero(rows, cols);
  sf.b = Vec::Zero(rows);
  sf.c = Vec::Zero(cols);
  sf.a.topLeftCorner(m, n) = lp.matrix;
  sf.b.head(m) = lp.rhs;
  sf.c.head(n) = lp.objective;
  sf.slack_row.assign(static_cast<std::size_t>(cols), -1);
  Eigen::Index col = n;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Sense s = lp.row_sense(i);
    if (s == Sense::Eq) continue;
    sf.a(i, col) = (s == Sense::Le) ? 1.0 : -1.0;
    sf.slack_row[static_cast<std::size_t>(col)] = i;
    ++col;
  }
  for (Eigen::Index k = 0; k < n_bound; ++k) {
    const Eigen::Index j = sf.bound_col[static_cast<std::size_t>(k)];
    sf.a(m + k, j) = 1.0;
    sf.a(m + k, col) = 1.0;
    sf.b[m + k] = *lp.upper[static_cast<std::size_t>(j)];
    sf.slack_row[static_cast<std::size_t>(col)] = m + k;
    ++col;
  }
  return sf;
}

/// Outcome of a standard-form solve (all vectors in standard coordinates).
struct StandardResult {
  Status status = Status::Infeasible;
  Vec x;
  Vec y;  // row duals
  Vec d;  // reduced costs
  Vec certificate;
  long iterations = 0;
};

/// Tableau simplex for  min c.x  s.t.  A x = b, x >= 0.
class TableauSimplex {
 public:
  TableauSimplex(const Mat& a, const Vec& b, const Vec& c, const SolverOptions& opt)
      : opt_(opt), c_(c) {
    m_ = a.rows();
    n_ = a.cols();
    flip_.assign(static_cast<std::size_t>(m_), 1.0);
    a_ = a;
    b_ = b;
    for (Eigen::Index i = 0; i < m_; ++i)
      if (b_[i] < 0) {
        a_.row(i) *= -1.0;
        b_[i] = -b_[i];
        flip_[static_cast<std::size_t>(i)] = -1.0;
      }
    // Reuse unit columns as the starting basis where available.
    basis_.assign(static_cast<std::size_t>(m_), -1);
    for (Eigen::Index j = 0; j < n_; ++j) {
      Eigen::Index hit = -1;
      bool unit = true;
      for (Eigen::Index i = 0; i < m_ && unit; ++i) {
        const double v = a_(i, j);
        if (v == 0.0) continue;
        if (v == 1.0 && hit < 0) hit = i;
        else unit = false;
      }
      if (unit && hit >= 0 && basis_[static_cast<std::size_t>(hit)] < 0)
        basis_[static_cast<std::size_t>(hit)] = j;
    }
    n_art_ = 0;
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[static_cast<std::size_t>(i)] < 0) basis_[static_cast<std::size_t>(i)] = n_ + n_art_++;
    art_row_.assign(static_cast<std::size_t>(n_art_), -1);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j >= n_) art_row_[static_cast<std::size_t>(j - n_)] = i;
    }
    full_ = Mat::Zero(m_, n_ + n_art_ + 1);
    full_.leftCols(n_) = a_;
    for (Eigen::Index k = 0; k < n_art_; ++k) full_(art_row_[static_cast<std::size_t>(k)], n_ + k) = 1.0;
    full_.col(n_ + n_art_) = b_;
    max_iter_ = opt_.max_iterations > 0 ? opt_.max_iterations : 200 * (m_ + n_) + 5000;
  }

  StandardResult run() {
    StandardResult res;
    if (m_ == 0) return solve_rowless(res);
    // Phase 1.
    phase_cost_ = Vec::Zero(n_ + n_art_);
    for (Eigen::Index k = 0; k < n_art_; ++k) phase_cost_[n_ + k] = 1.0;
    refactor();
    Status st = iterate();
    (void)st;  // phase 1 is bounded below by 0
    const double infeas = objective_value();
    const double scale = 1.0 + b_.cwiseAbs().maxCoeff();
    if (n_art_ > 0 && infeas > opt_.feasibility_tol * scale) {
      res.status = Status::Infeasible;
      Vec yn = duals();
      res.y = Vec(m_);
      for (Eigen::Index i = 0; i < m_; ++i) res.y[i] = flip_[static_cast<std::size_t>(i)] * yn[i];
      res.certificate = res.y;
      res.iterations = iterations_;
      return res;
    }
    drive_out_artificials();
    // Phase 2.
    phase_cost_ = Vec::Zero(n_ + n_art_);
    phase_cost_.head(n_) = c_;
    refactor();
    st = iterate();
    res.iterations = iterations_;
    if (st == Status::Unbounded) {
      res.status = Status::Unbounded;
      res.certificate = ray_;
      return res;
    }
    res.status = Status::Optimal;
    res.x = Vec::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j < n_) res.x[j] = std::max(0.0, tab_(i, n_ + n_art_));
    }
    Vec yn = duals();
    res.y = Vec(m_);
    for (Eigen::Index i = 0; i < m_; ++i) res.y[i] = flip_[static_cast<std::size_t>(i)] * yn[i];
    res.d = c_ - a_.transpose() * yn;
    return res;
  }

 private:
  StandardResult solve_rowless(StandardResult& res) {
    res.x = Vec::Zero(n_);
    res.y = Vec(0);
    res.d = c_;
    for (Eigen::Index j = 0; j < n_; ++j)
      if (c_[j] < -opt_.optimality_tol) {
        res.status = Status::Unbounded;
        res.certificate = Vec::Zero(n_);
        res.certificate[j] = 1.0;
        return res;
      }
    res.status = Status::Optimal;
    return res;
  }

  Eigen::Index rhs_col() const { return n_ + n_art_; }

  Mat basis_matrix() const {
    Mat bm(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i) bm.col(i) = full_.col(basis_[static_cast<std::size_t>(i)]);
    return bm;
  }

  void refactor() {
    Eigen::PartialPivLU<Mat> lu(basis_matrix());
    tab_ = lu.solve(full_);
    Vec cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb[i] = phase_cost_[basis_[static_cast<std::size_t>(i)]];
    Vec y = lu.transpose().solve(cb);
    dj_ = phase_cost_ - full_.leftCols(n_ + n_art_).transpose() * y;
    for (Eigen::Index i = 0; i < m_; ++i) dj_[basis_[static_cast<std::size_t>(i)]] = 0.0;
    since_refactor_ = 0;
  }

  Vec duals() const {
    Eigen::PartialPivLU<Mat> lu(basis_matrix());
    Vec cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb[i] = phase_cost_[basis_[static_cast<std::size_t>(i)]];
    return lu.transpose().solve(cb);
  }

  double objective_value() const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) v += phase_cost_[basis_[static_cast<std::size_t>(i)]] * tab_(i, rhs_col());
    return v;
  }

  Eigen::Index choose_entering(bool bland) const {
    Eigen::Index best = -1;
    double best_val = -opt_.optimality_tol;
    // Artificial columns never re-enter.
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (dj_[j] < best_val) {
        best = j;
        if (bland) return j;
        best_val = dj_[j];
      }
    }
    return best;
  }

  Eigen::Index choose_leaving(Eigen::Index q, bool bland, double& ratio) const {
    Eigen::Index best = -1;
    ratio = std::numeric_limits<double>::infinity();
    double best_piv = 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double aiq = tab_(i, q);
      if (aiq <= opt_.pivot_tol) continue;
      const double r = std::max(0.0, tab_(i, rhs_col())) / aiq;
      const double tie = 1e-12 * (1.0 + std::abs(ratio));
      if (best < 0 || r < ratio - tie) {
        best = i;
        ratio = r;
        best_piv = aiq;
      } else if (r <= ratio + tie) {
        const bool better = bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(best)]
                                  : aiq > best_piv;
        if (better) {
          best = i;
          ratio = std::min(ratio, r);
          best_piv = aiq;
        }
      }
    }
    return best;
  }

  void pivot(Eigen::Index r, Eigen::Index q) {
    const double piv = tab_(r, q);
    tab_.row(r) /= piv;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = tab_(i, q);
      if (f != 0.0) tab_.row(i) -= f * tab_.row(r);
    }
    const double fd = dj_[q];
    if (fd != 0.0) dj_ -= fd * tab_.row(r).head(n_ + n_art_).transpose();
    dj_[q] = 0.0;
    basis_[static_cast<std::size_t>(r)] = q;
    ++iterations_;
    if (++since_refactor_ >= opt_.refactor_interval) refactor();
  }

  Status iterate() {
    bool bland = false;
    int degenerate = 0;
    int confirmations = 0;
    while (true) {
      if (iterations_ > max_iter_) throw LpError("simplex: iteration limit exceeded");
      Eigen::Index q = choose_entering(bland);
      if (q < 0) {
        // Confirm optimality on a fresh factorization before stopping.
        if (since_refactor_ == 0 || confirmations > 3) return Status::Optimal;
        refactor();
        ++confirmations;
        continue;
      }
      double ratio = 0.0;
      const Eigen::Index r = choose_leaving(q, bland, ratio);
      if (r < 0) {
        ray_ = Vec::Zero(n_);
        ray_[q] = 1.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
          const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
          if (j < n_) ray_[j] = -tab_(i, q);
        }
        return Status::Unbounded;
      }
      if (ratio <= 1e-12) {
        if (++degenerate > opt_.degenerate_before_bland) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      pivot(r, q);
    }
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      Eigen::Index best = -1;
      double best_abs = 1e-9;
      for (Eigen::Index j = 0; j < n_; ++j) {
        const double v = std::abs(tab_(i, j));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      // A row with no eligible column is redundant; its artificial stays basic at 0.
      if (best >= 0) pivot(i, best);
    }
  }

  SolverOptions opt_;
  Mat a_;
  Vec b_;
  Vec c_;
  Mat full_;
  Mat tab_;
  Vec dj_;
  Vec phase_cost_;
  Vec ray_;
  std::vector<double> flip_;
  std::vector<Eigen::Index> basis_;
  std::vector<Eigen::Index> art_row_;
  Eigen::Index m_ = 0, n_ = 0, n_art_ = 0;
  long iterations_ = 0;
  long max_iter_ = 0;
  int since_refactor_ = 0;
};

inline StandardResult solve_standard(const Mat& a, const Vec& b, const Vec& c,
                                     const SolverOptions& opt = {}) {
  require_dims(a.rows() == b.size() && a.cols() == c.size(), "solve_standard: shape mismatch");
  return TableauSimplex(a, b, c, opt).run();
}

inline Solution assemble(const LinearProgram& lp, const StandardForm& sf, const StandardResult& sr) {
  Solution sol;
  sol.status = sr.status;
  sol.iterations = sr.iterations;
  const Eigen::Index n = sf.n_struct, m = sf.m_orig;
  if (sr.status == Status::Infeasible) {
    sol.certificate = sr.certificate;
    return sol;
  }
  if (sr.status == Status::Unbounded) {
    sol.certificate = sr.certificate.head(n);
    return sol;
  }
  sol.point = sr.x.head(n);
  sol.value = lp.objective.dot(sol.point);
  sol.dual = sr.y.head(m);
  sol.bound_dual = Vec::Zero(n);
  for (std::size_t k = 0; k < sf.bound_col.size(); ++k)
    sol.bound_dual[sf.bound_col[k]] = sr.y[m + static_cast<Eigen::Index>(k)];
  sol.reduced_cost = sr.d.head(n);
  double cs = 0.0;
  for (Eigen::Index j = 0; j < sr.x.size(); ++j) cs += std::abs(sr.x[j] * sr.d[j]);
  sol.complementarity_residual = cs;
  sol.primal_residual = (sf.a * sr.x - sf.b).cwiseAbs().maxCoeff();
  if (sf.a.rows() == 0) sol.primal_residual = 0.0;
  return sol;
}

}  // namespace detail

/// Solves the program; infeasibility and unboundedness are reported through
/// Solution::status with a certificate, never thrown.
inline Solution solve(const LinearProgram& lp, const SolverOptions& opt = {}) {
  const detail::StandardForm sf = detail::to_standard(lp);
  return detail::assemble(lp, sf, detail::solve_standard(sf.a, sf.b, sf.c, opt));
}

/// Dual objective b.y + u.z of a solved program.
inline double dual_value(const LinearProgram& lp, const Solution& sol) {
  double v = lp.rhs.dot(sol.dual);
  for (Eigen::Index j = 0; j < lp.cols(); ++j)
    if (!lp.upper.empty() && lp.upper[static_cast<std::size_t>(j)])
      v += *lp.upper[static_cast<std::size_t>(j)] * sol.bound_dual[j];
  return v;
}

/// The optimal face: every recorded vertex attains `value` within face_tol.
struct OptimalFace {
  double value = 0.0;
  std::vector<Vec> vertices;
  std::vector<Vec> image_vertices;  // images under the probing map, when one is given
  int dimension = 0;
  int dimension_bound = 0;  // dimension of the affine set the face spans at most
  Vec certificate;          // optimal dual
  std::vector<Eigen::Index> support;  // structural columns with zero reduced cost
  double face_tol = 0.0;
  int probes = 0;
};

struct FaceOptions {
  double face_tol = -1.0;  // negative selects 1e-7 * (1 + |value|)
  int budget = 64;         // maximum number of random probe directions
  int stall = 2;           // stop after this many consecutive non-extending probes
  std::uint64_t seed = 0;
  SolverOptions solver{};
};

inline double default_face_tol(double value) { return 1e-7 * (1.0 + std::abs(value)); }

namespace detail {

inline OptimalFace explore_face(const LinearProgram& lp, const FaceOptions& fo, const Mat* image) {
  const StandardForm sf = to_standard(lp);
  const StandardResult sr = solve_standard(sf.a, sf.b, sf.c, fo.solver);
  if (sr.status == Status::Infeasible) throw LpError("optimal_face: program is infeasible");
  if (sr.status == Status::Unbounded) throw LpError("optimal_face: program is unbounded");
  const Eigen::Index n = sf.n_struct;
  if (image) require_dims(image->cols() == n, "optimal_face: image map has wrong column count");
  OptimalFace face;
  const Vec x0 = sr.x.head(n);
  face.value = lp.objective.dot(x0);
  face.face_tol = fo.face_tol > 0 ? fo.face_tol : default_face_tol(face.value);
  face.certificate = sr.y.head(sf.m_orig);

  std::vector<Eigen::Index> zcols;  // standard-form columns allowed in the face
  for (Eigen::Index j = 0; j < sr.d.size(); ++j)
    if (sr.d[j] <= face.face_tol) zcols.push_back(j);
  for (Eigen::Index j : zcols)
    if (j < n) face.support.push_back(j);

  const auto nz = static_cast<Eigen::Index>(zcols.size());
  Mat az(sf.a.rows(), nz);
  for (Eigen::Index k = 0; k < nz; ++k) az.col(k) = sf.a.col(zcols[static_cast<std::size_t>(k)]);
  face.dimension_bound = static_cast<int>(nz) - numerical_rank(az);
  if (static_cast<Eigen::Index>(face.support.size()) < face.dimension_bound)
    face.dimension_bound = static_cast<int>(face.support.size());
  if (image && image->rows() < face.dimension_bound) face.dimension_bound = static_cast<int>(image->rows());

  auto coords = [&](const Vec& v) -> Vec { return image ? Vec(*image * v) : v; };
  face.vertices.push_back(x0);
  if (image) face.image_vertices.push_back(coords(x0));
  const Vec p0 = coords(x0);
  AffineHull hull(p0);
  Rng rng(fo.seed);
  int stall = 0;
  const double add_tol = 1e-7 * (1.0 + (p0.size() ? p0.cwiseAbs().maxCoeff() : 0.0));
  while (hull.dimension() < face.dimension_bound && face.probes < fo.budget && stall < fo.stall) {
    ++face.probes;
    Vec dir;
    if (image) {
      dir = image->transpose() * hull.project_out(gaussian_vec(rng, image->rows()));
    } else {
      Vec g = Vec::Zero(n);
      for (Eigen::Index j : face.support) g[j] = gaussian_vec(rng, 1)[0];
      dir = hull.project_out(g);
    }
    if (dir.norm() == 0.0) {
      ++stall;
      continue;
    }
    bool extended = false;
    for (double sign : {1.0, -1.0}) {
      Vec cz = Vec::Zero(nz);
      for (Eigen::Index k = 0; k < nz; ++k) {
        const Eigen::Index j = zcols[static_cast<std::size_t>(k)];
        if (j < n) cz[k] = sign * dir[j];
      }
      const StandardResult pr = solve_standard(az, sf.b, cz, fo.solver);
      if (pr.status != Status::Optimal) continue;
      Vec v = Vec::Zero(n);
      for (Eigen::Index k = 0; k < nz; ++k) {
        const Eigen::Index j = zcols[static_cast<std::size_t>(k)];
        if (j < n) v[j] = pr.x[k];
      }
      if (std::abs(lp.objective.dot(v) - face.value) > face.face_tol) continue;
      Vec p = coords(v);
      if (hull.add(p, add_tol)) {
        face.vertices.push_back(std::move(v));
        if (image) face.image_vertices.push_back(std::move(p));
        extended = true;
      }
    }
    stall = extended ? 0 : stall + 1;
  }
  face.dimension = std::max(0, affine_rank(image ? face.image_vertices : face.vertices));
  return face;
}

}  // namespace detail

/// Explores the optimal face by minimizing and maximizing random directions
/// orthogonal to the hull found so far, over the polytope restricted to the
/// zero-reduced-cost columns. The reported dimension never exceeds the true
/// face dimension and is monotone in the budget.
inline OptimalFace optimal_face(const LinearProgram& lp, const FaceOptions& fo = {}) {
  return detail::explore_face(lp, fo, nullptr);
}

/// Same exploration measured through a linear map: the hull, the probe
/// directions and the reported dimension live in the image space.
inline OptimalFace optimal_face_image(const LinearProgram& lp, const Mat& image, const FaceOptions& fo = {}) {
  return detail::explore_face(lp, fo, &image);
}

}  // namespace amlab::lp
