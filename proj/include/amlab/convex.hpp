// Convex functions on R^n given as a finite max of affine pieces plus q|x|^2:
// subdifferentials, the strata Sigma_k, strong-convexity augmentation, the
// inverse of the subdifferential map, and Legendre conjugation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "amlab/error.hpp"
#include "amlab/linalg.hpp"
#include "amlab/lp.hpp"

namespace amlab::convex {

struct AffinePiece {
  Vec gradient;
  double offset = 0.0;

  double operator()(const Vec& x) const { return gradient.dot(x) + offset; }
};

/// max_i (g_i . x + b_i) + q |x|^2
class PiecewiseConvexFunction {
 public:
  PiecewiseConvexFunction(std::vector<AffinePiece> pieces, double q = 0.0)
      : pieces_(std::move(pieces)), q_(q) {
    require(!pieces_.empty(), "PiecewiseConvexFunction: needs at least one piece");
    n_ = static_cast<int>(pieces_.front().gradient.size());
    require(n_ >= 1, "PiecewiseConvexFunction: dimension must be >= 1");
    require(q_ >= 0.0 && std::isfinite(q_), "PiecewiseConvexFunction: q must be finite and >= 0");
    for (const auto& p : pieces_) {
      require_dims(p.gradient.size() == n_, "PiecewiseConvexFunction: pieces of different dimension");
      require(p.gradient.allFinite() && std::isfinite(p.offset),
              "PiecewiseConvexFunction: non-finite piece");
    }
  }

  int dim() const { return n_; }
  double quadratic_coeff() const { return q_; }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }

  /// Value of the affine part max_i (g_i . x + b_i).
  double affine_max(const Vec& x) const {
    check(x);
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) m = std::max(m, p(x));
    return m;
  }

  double operator()(const Vec& x) const { return affine_max(x) + q_ * x.squaredNorm(); }

  void check(const Vec& x) const {
    require_dims(x.size() == n_, "PiecewiseConvexFunction: argument has length " +
                                     std::to_string(x.size()) + ", expected " + std::to_string(n_));
  }

 private:
  std::vector<AffinePiece> pieces_;
  double q_ = 0.0;
  int n_ = 0;
};

inline double evaluate(const PiecewiseConvexFunction& f, const Vec& x) { return f(x); }

inline constexpr double kActivityTol = 1e-9;

/// Points whose convex hull is the subdifferential at some x.
struct SubdiffPolytope {
  std::vector<Vec> vertices;
  int dimension = 0;
  std::vector<std::size_t> active;  // indices of active pieces
};

/// Pieces within tol * (1 + |max|) of the max are active; the subdifferential
/// is the hull of their gradients shifted by 2qx.
inline SubdiffPolytope subdifferential(const PiecewiseConvexFunction& f, const Vec& x,
                                       double tol = kActivityTol) {
  require(tol > 0, "subdifferential: tol must be positive");
  const double m = f.affine_max(x);
  const double cut = m - tol * (1.0 + std::abs(m));
  SubdiffPolytope out;
  const Vec shift = 2.0 * f.quadratic_coeff() * x;
  for (std::size_t i = 0; i < f.pieces().size(); ++i) {
    const auto& p = f.pieces()[i];
    if (p(x) < cut) continue;
    out.active.push_back(i);
    Vec v = p.gradient + shift;
    const bool dup = std::any_of(out.vertices.begin(), out.vertices.end(),
                                 [&](const Vec& w) { return (w - v).cwiseAbs().maxCoeff() <= 1e-12; });
    if (!dup) out.vertices.push_back(std::move(v));
  }
  out.dimension = std::max(0, affine_rank(out.vertices));
  return out;
}

inline PiecewiseConvexFunction augment_strongly_convex(const PiecewiseConvexFunction& f) {
  return PiecewiseConvexFunction(f.pieces(), f.quadratic_coeff() + 1.0);
}

/// Axis-aligned box [lo, hi].
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  void validate() const {
    require_dims(lo.size() == hi.size(), "Box: lo/hi length mismatch");
    require(!lo.empty(), "Box: empty box");
    for (std::size_t d = 0; d < lo.size(); ++d)
      require(hi[d] > lo[d], "Box: empty box along axis " + std::to_string(d));
  }
  bool contains(const Vec& x, double tol) const {
    for (std::size_t d = 0; d < lo.size(); ++d) {
      const auto i = static_cast<Eigen::Index>(d);
      if (x[i] < lo[d] - tol || x[i] > hi[d] + tol) return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Sigma_k scan

struct StratumScan {
  int k = 0;
  double cell_size = 0.0;
  std::vector<int> shape;               // cells per axis
  std::vector<std::vector<int>> cells;  // multi-indices of marked cells
  std::size_t fine_count = 0;           // marked cells at cell_size / 2
  double box_count_exponent = 0.0;      // log2(fine_count / cells.size())
};

namespace detail {

inline bool affinely_independent(const std::vector<const Vec*>& pts) {
  std::vector<Vec> v;
  v.reserve(pts.size());
  for (const Vec* p : pts) v.push_back(*p);
  return affine_rank(v) == static_cast<int>(pts.size()) - 1;
}

/// Exact test: does some point of the closed cell have k+1 affinely
/// independent active pieces?
inline bool cell_meets_stratum(const PiecewiseConvexFunction& f, int k, const Vec& lo,
                               const Vec& hi) {
  if (k == 0) return true;
  const auto& ps = f.pieces();
  const std::size_t p = ps.size();
  const Vec c = 0.5 * (lo + hi);
  const Vec hw = 0.5 * (hi - lo);
  std::vector<double> val(p);
  double vmax = -std::numeric_limits<double>::infinity();
  double gspread = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    val[i] = ps[i](c);
    vmax = std::max(vmax, val[i]);
  }
  // Cheap necessary condition, then the exact pairwise one.
  for (std::size_t i = 0; i < p; ++i) gspread = std::max(gspread, (ps[i].gradient - ps[0].gradient).cwiseAbs().dot(hw));
  std::vector<std::size_t> cand;
  const double slack = 1e-12 * (1.0 + std::abs(vmax));
  for (std::size_t i = 0; i < p; ++i) {
    if (val[i] < vmax - 2.0 * gspread - slack) continue;
    bool ok = true;
    for (std::size_t j = 0; j < p && ok; ++j)
      if (val[i] + (ps[i].gradient - ps[j].gradient).cwiseAbs().dot(hw) < val[j] - slack) ok = false;
    if (ok) cand.push_back(i);
  }
  if (static_cast<int>(cand.size()) < k + 1) return false;
  {
    std::vector<Vec> g;
    for (std::size_t i : cand) g.push_back(ps[i].gradient);
    if (affine_rank(g) < k) return false;
  }
  const int n = f.dim();
  std::vector<int> pick(cand.size(), 0);
  std::fill(pick.end() - (k + 1), pick.end(), 1);
  do {
    std::vector<std::size_t> s, rest;
    std::vector<const Vec*> g;
    for (std::size_t t = 0; t < cand.size(); ++t) {
      if (pick[t]) {
        s.push_back(cand[t]);
        g.push_back(&ps[cand[t]].gradient);
      } else {
        rest.push_back(cand[t]);
      }
    }
    if (!affinely_independent(g)) continue;
    // Feasibility in z = x - lo, 0 <= z <= hi - lo.
    const auto& a0 = ps[s[0]];
    lp::LinearProgram prog;
    const auto rows = static_cast<Eigen::Index>(s.size() - 1 + rest.size());
    prog.matrix = Mat::Zero(rows, n);
    prog.rhs = Vec::Zero(rows);
    prog.objective = Vec::Zero(n);
    Eigen::Index r = 0;
    for (std::size_t t = 1; t < s.size(); ++t, ++r) {
      const Vec dg = ps[s[t]].gradient - a0.gradient;
      prog.matrix.row(r) = dg.transpose();
      prog.rhs[r] = a0.offset - ps[s[t]].offset - dg.dot(lo);
      prog.sense.push_back(lp::Sense::Eq);
    }
    for (std::size_t j : rest) {
      const Vec dg = ps[j].gradient - a0.gradient;
      prog.matrix.row(r) = dg.transpose();
      prog.rhs[r] = a0.offset - ps[j].offset - dg.dot(lo);
      prog.sense.push_back(lp::Sense::Le);
      ++r;
    }
    for (int d = 0; d < n; ++d) prog.upper.emplace_back(hi[d] - lo[d]);
    if (lp::solve(prog).optimal()) return true;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return false;
}

inline std::vector<std::vector<int>> scan_cells(const PiecewiseConvexFunction& f, int k,
                                                const Box& box, double h, std::vector<int>& shape) {
  const int n = f.dim();
  shape.assign(static_cast<std::size_t>(n), 0);
  for (int d = 0; d < n; ++d) {
    const double len = box.hi[static_cast<std::size_t>(d)] - box.lo[static_cast<std::size_t>(d)];
    shape[static_cast<std::size_t>(d)] = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
  }
  std::vector<std::vector<int>> out;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  Vec lo(n), hi(n);
  while (true) {
    for (int d = 0; d < n; ++d) {
      const auto du = static_cast<std::size_t>(d);
      lo[d] = box.lo[du] + idx[du] * h;
      hi[d] = std::min(box.hi[du], lo[d] + h);
    }
    if (cell_meets_stratum(f, k, lo, hi)) out.push_back(idx);
    int d = 0;
    for (; d < n; ++d) {
      const auto du = static_cast<std::size_t>(d);
      if (++idx[du] < shape[du]) break;
      idx[du] = 0;
    }
    if (d == n) break;
  }
  return out;
}

}  // namespace detail

/// Marks the grid cells of `box` that meet Sigma_k(f) = {x : dim df(x) >= k},
/// and estimates the box-counting exponent from a second scan at half the
/// cell size.
inline StratumScan sigma_k_scan(const PiecewiseConvexFunction& f, int k, const Box& box,
                                double cell_size) {
  box.validate();
  require_dims(box.dim() == f.dim(), "sigma_k_scan: box dimension != function dimension");
  require(k >= 0 && k <= f.dim(), "sigma_k_scan: k must lie in [0, n]");
  require(cell_size > 0, "sigma_k_scan: cell_size must be positive");
  StratumScan scan;
  scan.k = k;
  scan.cell_size = cell_size;
  scan.cells = detail::scan_cells(f, k, box, cell_size, scan.shape);
  std::vector<int> fine_shape;
  scan.fine_count = detail::scan_cells(f, k, box, cell_size / 2.0, fine_shape).size();
  const double coarse = static_cast<double>(scan.cells.size());
  const double fine = static_cast<double>(scan.fine_count);
  if (coarse == 0.0)
    scan.box_count_exponent = fine == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  else
    scan.box_count_exponent = std::log2(fine / coarse);
  return scan;
}

// ---------------------------------------------------------------------------
// Inverse of the subdifferential map

namespace detail {

/// Exact KKT solve of  min max_i f_i(x) + q|x|^2 - ell.x  for the active set s.
inline bool kkt_candidate(const PiecewiseConvexFunction& f, const Vec& ell,
                          const std::vector<std::size_t>& s, Vec& x_out) {
  const int n = f.dim();
  const auto k = static_cast<Eigen::Index>(s.size());
  const double q = f.quadratic_coeff();
  // Unknowns: x (n), lambda (k), t.   Rows: g_s.x - t = -b_s ; 2q x + G lambda = ell ; sum lambda = 1.
  const Eigen::Index u = n + k + 1;
  Mat m = Mat::Zero(u, u);
  Vec rhs = Vec::Zero(u);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto& p = f.pieces()[s[static_cast<std::size_t>(r)]];
    m.block(r, 0, 1, n) = p.gradient.transpose();
    m(r, n + k) = -1.0;
    rhs[r] = -p.offset;
  }
  for (int d = 0; d < n; ++d) {
    m(k + d, d) = 2.0 * q;
    for (Eigen::Index r = 0; r < k; ++r) m(k + d, n + r) = f.pieces()[s[static_cast<std::size_t>(r)]].gradient[d];
    rhs[k + d] = ell[d];
  }
  for (Eigen::Index r = 0; r < k; ++r) m(k + n, n + r) = 1.0;
  rhs[k + n] = 1.0;
  Eigen::FullPivLU<Mat> lu(m);
  if (lu.rank() < u) return false;
  const Vec sol = lu.solve(rhs);
  const Vec x = sol.head(n);
  const double t = sol[n + k];
  for (Eigen::Index r = 0; r < k; ++r)
    if (sol[n + r] < -1e-12) return false;
  const double scale = 1.0 + std::abs(t);
  for (const auto& p : f.pieces())
    if (p(x) > t + 1e-10 * scale) return false;
  x_out = x;
  return true;
}

}  // namespace detail

/// Returns the unique x with ell in df(x), found by minimizing f(x) - ell.x.
/// Requires q > 0. Throws RangeError when the minimizer leaves search_box.
inline Vec lipschitz_inverse(const PiecewiseConvexFunction& f, const Vec& ell, const Box& search_box,
                             double tol = 1e-9) {
  f.check(ell);
  search_box.validate();
  require_dims(search_box.dim() == f.dim(), "lipschitz_inverse: box dimension mismatch");
  const double q = f.quadratic_coeff();
  if (!(q > 0.0)) throw RangeError("lipschitz_inverse: function is not strongly convex (q = 0)");
  const auto& ps = f.pieces();
  const auto p = static_cast<Eigen::Index>(ps.size());
  const int n = f.dim();
  Mat g(n, p);
  Vec b(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    g.col(i) = ps[static_cast<std::size_t>(i)].gradient;
    b[i] = ps[static_cast<std::size_t>(i)].offset;
  }
  // Dual over the simplex: h(lambda) = |G lambda - ell|^2 / 4q - b.lambda,
  // minimized by Frank-Wolfe with away steps; x(lambda) = (ell - G lambda) / 2q.
  Vec lambda = Vec::Zero(p);
  lambda[0] = 1.0;
  auto x_of = [&](const Vec& lam) -> Vec { return (ell - g * lam) / (2.0 * q); };
  Vec x = x_of(lambda);
  for (int it = 0; it < 20000; ++it) {
    const Vec fv = g.transpose() * x + b;  // -grad h
    Eigen::Index s = 0, a = -1;
    fv.maxCoeff(&s);
    double amin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p; ++i)
      if (lambda[i] > 0.0 && fv[i] < amin) {
        amin = fv[i];
        a = i;
      }
    const double gap_fw = fv[s] - lambda.dot(fv);
    if (gap_fw <= 1e-15 * (1.0 + std::abs(fv[s]))) break;
    Vec dir;
    double gmax = 1.0;
    if (a >= 0 && fv[s] - lambda.dot(fv) >= lambda.dot(fv) - fv[a]) {
      dir = -lambda;
      dir[s] += 1.0;
    } else {
      dir = lambda;
      dir[a] -= 1.0;
      gmax = lambda[a] / (1.0 - lambda[a]);
      if (!std::isfinite(gmax)) gmax = 1.0;
    }
    const Vec gd = g * dir;
    const double slope = -fv.dot(dir);  // directional derivative of h
    const double curv = gd.squaredNorm() / (2.0 * q);
    double step = curv > 0 ? -slope / curv : gmax;
    step = std::clamp(step, 0.0, gmax);
    if (step <= 0.0) break;
    lambda += step * dir;
    for (Eigen::Index i = 0; i < p; ++i)
      if (lambda[i] < 1e-300) lambda[i] = 0.0;
    lambda /= lambda.sum();
    x = x_of(lambda);
  }
  // Polish with an exact active-set solve near the approximate minimizer.
  const double m = f.affine_max(x);
  std::vector<std::pair<double, std::size_t>> near;
  for (std::size_t i = 0; i < ps.size(); ++i) near.emplace_back(m - ps[i](x), i);
  std::sort(near.begin(), near.end());
  std::vector<std::size_t> act;
  for (const auto& [gap, i] : near)
    if (gap <= 1e-6 * (1.0 + std::abs(m)) && act.size() < 12) act.push_back(i);
  Vec best = x;
  double best_val = f(x) - ell.dot(x);
  for (std::size_t size = 1; size <= std::min<std::size_t>(act.size(), static_cast<std::size_t>(n) + 1); ++size) {
    std::vector<int> pick(act.size(), 0);
    std::fill(pick.end() - static_cast<std::ptrdiff_t>(size), pick.end(), 1);
    do {
      std::vector<std::size_t> s;
      for (std::size_t t = 0; t < act.size(); ++t)
        if (pick[t]) s.push_back(act[t]);
      Vec cand;
      if (detail::kkt_candidate(f, ell, s, cand)) {
        const double v = f(cand) - ell.dot(cand);
        if (v <= best_val + 1e-14 * (1.0 + std::abs(best_val))) {
          best = cand;
          best_val = v;
        }
      }
    } while (std::next_permutation(pick.begin(), pick.end()));
  }
  if (!search_box.contains(best, tol))
    throw RangeError("lipschitz_inverse: subgradient is not attained inside the search box");
  return best;
}

// ---------------------------------------------------------------------------
// Legendre conjugate of a piecewise-linear function

/// f* restricted to its domain conv{g_i}: a max of affine pieces that is exact
/// on the domain and +infinity outside it.
struct ConvexConjugate {
  PiecewiseConvexFunction pieces;
  std::vector<Vec> domain_points;  // piece gradients of f (hull generators)
  int domain_dimension = 0;

  bool in_domain(const Vec& y, double tol = 1e-9) const {
    const int n = pieces.dim();
    const auto p = static_cast<Eigen::Index>(domain_points.size());
    lp::LinearProgram prog;
    prog.matrix = Mat::Zero(n + 1, p);
    for (Eigen::Index i = 0; i < p; ++i) {
      prog.matrix.block(0, i, n, 1) = domain_points[static_cast<std::size_t>(i)];
      prog.matrix(n, i) = 1.0;
    }
    prog.rhs = Vec(n + 1);
    prog.rhs.head(n) = y;
    prog.rhs[n] = 1.0;
    prog.objective = Vec::Zero(p);
    lp::SolverOptions opt;
    opt.feasibility_tol = tol;
    return lp::solve(prog, opt).optimal();
  }

  double operator()(const Vec& y) const {
    if (!in_domain(y)) return std::numeric_limits<double>::infinity();
    return pieces.affine_max(y);
  }

  /// f** as a max of affine pieces x -> d.x - f*(d) over the domain generators.
  PiecewiseConvexFunction conjugate() const {
    std::vector<AffinePiece> out;
    for (const Vec& d : domain_points) out.push_back({d, -pieces.affine_max(d)});
    return PiecewiseConvexFunction(std::move(out));
  }
};

/// f*(y) by the linear program  min -b.lambda  s.t.  G lambda = y, lambda in the simplex.
inline double conjugate_value_lp(const PiecewiseConvexFunction& f, const Vec& y) {
  f.check(y);
  const int n = f.dim();
  const auto p = static_cast<Eigen::Index>(f.pieces().size());
  lp::LinearProgram prog;
  prog.matrix = Mat::Zero(n + 1, p);
  prog.objective = Vec(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    prog.matrix.block(0, i, n, 1) = f.pieces()[static_cast<std::size_t>(i)].gradient;
    prog.matrix(n, i) = 1.0;
    prog.objective[i] = -f.pieces()[static_cast<std::size_t>(i)].offset;
  }
  prog.rhs = Vec(n + 1);
  prog.rhs.head(n) = y;
  prog.rhs[n] = 1.0;
  const auto sol = lp::solve(prog);
  if (!sol.optimal()) return std::numeric_limits<double>::infinity();
  return sol.value;
}

/// Pieces of f* from the vertices of the epigraph of f, computed in the affine
/// hull of the gradients; a degenerate hull is reported via domain_dimension.
inline ConvexConjugate legendre_conjugate(const PiecewiseConvexFunction& f) {
  if (f.quadratic_coeff() != 0.0)
    throw RangeError("legendre_conjugate: only piecewise-linear functions (q = 0) are supported");
  const int n = f.dim();
  const auto& ps = f.pieces();
  std::vector<Vec> grads;
  for (const auto& p : ps) grads.push_back(p.gradient);
  const Vec g0 = grads.front();
  Mat diffs(n, static_cast<Eigen::Index>(grads.size()));
  for (std::size_t i = 0; i < grads.size(); ++i) diffs.col(static_cast<Eigen::Index>(i)) = grads[i] - g0;
  const int r = numerical_rank(diffs);

  std::vector<AffinePiece> out;
  if (r == 0) {
    double bmax = -std::numeric_limits<double>::infinity();
    for (const auto& p : ps) bmax = std::max(bmax, p.offset);
    out.push_back({Vec::Zero(n), -bmax});
    return {PiecewiseConvexFunction(std::move(out)), grads, 0};
  }
  Eigen::JacobiSVD<Mat> svd(diffs, Eigen::ComputeThinU);
  const Mat basis = svd.matrixU().leftCols(r);  // n x r
  std::vector<Vec> h;
  for (const Vec& g : grads) h.push_back(basis.transpose() * (g - g0));

  std::vector<Vec> zs;
  std::vector<int> pick(ps.size(), 0);
  if (static_cast<int>(ps.size()) >= r + 1) {
    std::fill(pick.end() - (r + 1), pick.end(), 1);
    do {
      std::vector<std::size_t> s;
      for (std::size_t t = 0; t < ps.size(); ++t)
        if (pick[t]) s.push_back(t);
      Mat m(r + 1, r + 1);
      Vec rhs(r + 1);
      for (int row = 0; row <= r; ++row) {
        m.block(row, 0, 1, r) = h[s[static_cast<std::size_t>(row)]].transpose();
        m(row, r) = -1.0;
        rhs[row] = -ps[s[static_cast<std::size_t>(row)]].offset;
      }
      Eigen::FullPivLU<Mat> lu(m);
      if (lu.rank() < r + 1) continue;
      const Vec zt = lu.solve(rhs);
      const Vec z = zt.head(r);
      const double t = zt[r];
      bool ok = true;
      for (std::size_t i = 0; i < ps.size() && ok; ++i)
        if (h[i].dot(z) + ps[i].offset > t + 1e-10 * (1.0 + std::abs(t))) ok = false;
      if (!ok) continue;
      const bool dup = std::any_of(zs.begin(), zs.end(), [&](const Vec& w) {
        return (w.head(r) - z).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + z.cwiseAbs().maxCoeff());
      });
      if (dup) continue;
      Vec zt_store(r + 1);
      zt_store << z, t;
      zs.push_back(zt_store);
    } while (std::next_permutation(pick.begin(), pick.end()));
  }
  for (const Vec& zt : zs) {
    const Vec gy = basis * zt.head(r);
    // y -> (U z).(y - g0) - t
    out.push_back({gy, -gy.dot(g0) - zt[r]});
  }
  require(!out.empty(), "legendre_conjugate: no epigraph vertex found");
  return {PiecewiseConvexFunction(std::move(out)), grads, r};
}

}  // namespace amlab::convex
