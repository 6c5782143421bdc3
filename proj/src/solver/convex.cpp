#include "wiretap/solver/convex.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace wiretap::convex {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

int svec_size(int n) { return n * (n + 1) / 2; }

Vec svec(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  Vec v(svec_size(n));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) v[k++] = (i == j) ? a(i, j) : kSqrt2 * a(i, j);
  return v;
}

Mat smat(const Vec& v, int n) {
  Mat a(n, n);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      double x = (i == j) ? v[k] : v[k] / kSqrt2;
      a(i, j) = x;
      a(j, i) = x;
      ++k;
    }
  return a;
}

namespace {

// Symmetric basis matrix of svec coordinate k within an n x n variable.
Mat svec_basis(int n, int k) {
  Mat b = Mat::Zero(n, n);
  int idx = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) {
      if (idx == k) {
        if (i == j) {
          b(i, j) = 1;
        } else {
          b(i, j) = 1 / kSqrt2;
          b(j, i) = 1 / kSqrt2;
        }
        return b;
      }
      ++idx;
    }
  throw std::logic_error("svec_basis: coordinate out of range");
}

}  // namespace

Mat MatrixAffine::eval(const Vec& x) const {
  Mat out = s0;
  for (const auto& [coord, basis] : terms) out += x[coord] * basis;
  return out;
}

void MatrixAffine::add_congruence(const Mat& a, const SymVar& v) {
  if (s0.size() == 0) s0 = Mat::Zero(a.rows(), a.rows());
  for (int k = 0; k < svec_size(v.n); ++k) {
    Mat t = a * svec_basis(v.n, k) * a.transpose();
    terms.emplace_back(v.offset + k, symmetrize(t));
  }
}

void MatrixAffine::add_var(const SymVar& v, double w) {
  if (s0.size() == 0) s0 = Mat::Zero(v.n, v.n);
  for (int k = 0; k < svec_size(v.n); ++k)
    terms.emplace_back(v.offset + k, w * svec_basis(v.n, k));
}

void MatrixAffine::add_scalar(const ScalarVar& t, Mat coeff) {
  if (s0.size() == 0) s0 = Mat::Zero(coeff.rows(), coeff.rows());
  terms.emplace_back(t.offset, symmetrize(coeff));
}

namespace {
void grow(Vec& v, int dim) {
  Vec next = Vec::Zero(dim);
  next.head(v.size()) = v;
  v = std::move(next);
}
}  // namespace

SymVar Program::sym_var(int n) {
  SymVar v{dim, n};
  dim += svec_size(n);
  grow(c, dim);
  grow(start, dim);
  MatrixAffine cone;
  cone.add_var(v);
  cones.push_back(std::move(cone));
  sym_vars.push_back(v);
  return v;
}

ScalarVar Program::scalar_var(double lo) {
  ScalarVar t{dim};
  dim += 1;
  grow(c, dim);
  grow(start, dim);
  Vec a = Vec::Zero(dim);
  a[t.offset] = 1;
  add_constraint(std::move(a), lo, Sense::ge, "scalar_lower_bound");
  scalar_vars.push_back(t);
  return t;
}

void Program::finish() {
  grow(c, dim);
  grow(start, dim);
  for (auto& con : lin) grow(con.a, dim);
}

void Program::add_linear_objective(const SymVar& v, const Mat& w) {
  grow(c, dim);
  add_trace(c, v, w);
}

void Program::add_linear_objective(const ScalarVar& t, double w) {
  grow(c, dim);
  c[t.offset] += w;
}

void Program::add_trace(Vec& a, const SymVar& v, const Mat& w) {
  Mat ws = symmetrize(w);
  int k = 0;
  for (int j = 0; j < v.n; ++j)
    for (int i = 0; i <= j; ++i) {
      a[v.offset + k] += (i == j) ? ws(i, j) : kSqrt2 * ws(i, j);
      ++k;
    }
}

void Program::add_coeff(Vec& a, const ScalarVar& t, double w) { a[t.offset] += w; }

void Program::add_constraint(Vec a, double b, Sense sense, std::string name) {
  lin.push_back(LinearConstraint{std::move(a), b, sense, std::move(name)});
}

Mat Program::get(const Vec& x, const SymVar& v) const {
  return smat(x.segment(v.offset, svec_size(v.n)), v.n);
}

double Program::get(const Vec& x, const ScalarVar& t) const { return x[t.offset]; }

void Program::set(Vec& x, const SymVar& v, const Mat& val) const {
  x.segment(v.offset, svec_size(v.n)) = svec(symmetrize(val));
}

void Program::set(Vec& x, const ScalarVar& t, double val) const { x[t.offset] = val; }

namespace {

struct Piece {
  double mult = 1.0;  // positive multiplier of -mult * logdet(arg) inside the potential
  const MatrixAffine* arg = nullptr;
};

struct Ineq {
  Vec a;  // normalized to a'x <= b
  double b = 0;
  int source = -1;  // index into prog.lin, -1 for synthetic
  bool flipped = false;
};

bool chol_pd(const Mat& m, Eigen::LLT<Mat>& llt) {
  llt.compute(symmetrize(m));
  return llt.info() == Eigen::Success;
}

struct Potential {
  // psi(x) = -tau * (c'x + sum w logdet C) - sum logdet B_j - sum ln(b_i - a_i'x)
  const Vec* c = nullptr;
  std::vector<Piece> obj_pieces;   // mult = tau * w
  std::vector<Piece> cone_pieces;  // mult = 1
  const std::vector<Ineq>* ineqs = nullptr;
  double tau = 1;

  bool strictly_feasible(const Vec& x) const {
    Eigen::LLT<Mat> llt;
    for (const auto& p : obj_pieces)
      if (!chol_pd(p.arg->eval(x), llt)) return false;
    for (const auto& p : cone_pieces)
      if (!chol_pd(p.arg->eval(x), llt)) return false;
    for (const auto& q : *ineqs)
      if (q.b - q.a.dot(x) <= 0) return false;
    return true;
  }

  // Returns false when x leaves the domain.
  bool value(const Vec& x, double& out) const {
    double acc = -tau * c->dot(x);
    Eigen::LLT<Mat> llt;
    auto ld = [&](const MatrixAffine& m, double& v) {
      if (!chol_pd(m.eval(x), llt)) return false;
      double s = 0;
      for (Eigen::Index i = 0; i < llt.matrixL().rows(); ++i) s += std::log(llt.matrixL()(i, i));
      v = 2 * s;
      return true;
    };
    for (const auto& p : obj_pieces) {
      double v = 0;
      if (!ld(*p.arg, v)) return false;
      acc -= p.mult * v;
    }
    for (const auto& p : cone_pieces) {
      double v = 0;
      if (!ld(*p.arg, v)) return false;
      acc -= v;
    }
    for (const auto& q : *ineqs) {
      double s = q.b - q.a.dot(x);
      if (s <= 0) return false;
      acc -= std::log(s);
    }
    out = acc;
    return true;
  }

  void derivatives(const Vec& x, Vec& grad, Mat& hess) const {
    const int n = static_cast<int>(x.size());
    grad = -tau * (*c);
    hess = Mat::Zero(n, n);
    Eigen::LLT<Mat> llt;
    auto accumulate = [&](const Piece& p) {
      const Mat arg = p.arg->eval(x);
      llt.compute(symmetrize(arg));
      const auto& terms = p.arg->terms;
      const int d = static_cast<int>(arg.rows());
      const int m = static_cast<int>(terms.size());
      Mat cols(svec_size(d), m);
      for (int t = 0; t < m; ++t) {
        Mat half = llt.matrixL().solve(terms[t].second);
        Mat w = llt.matrixL().solve(half.transpose());  // L^-1 K L^-T, symmetric
        w = symmetrize(w);
        grad[terms[t].first] -= p.mult * w.trace();
        cols.col(t) = svec(w);
      }
      Mat gram = cols.transpose() * cols;
      for (int s = 0; s < m; ++s)
        for (int t = 0; t < m; ++t) hess(terms[s].first, terms[t].first) += p.mult * gram(s, t);
    };
    for (const auto& p : obj_pieces) accumulate(p);
    for (const auto& p : cone_pieces) accumulate(p);
    for (const auto& q : *ineqs) {
      double s = q.b - q.a.dot(x);
      grad += q.a / s;
      hess += (q.a * q.a.transpose()) / (s * s);
    }
  }
};

struct CenterOutcome {
  bool early_stop = false;
  int steps = 0;
};

// Damped Newton on psi over the affine slice x = x0 + Z y.
CenterOutcome center(const Potential& pot, const Mat& z, Vec& x, const ConvexConfig& cfg,
                     const std::function<bool(const Vec&)>& stop_early) {
  CenterOutcome out;
  Vec grad;
  Mat hess;
  for (int it = 0; it < cfg.max_newton_per_center; ++it) {
    pot.derivatives(x, grad, hess);
    Vec gy = z.transpose() * grad;
    Mat hy = z.transpose() * hess * z;
    double reg = 0;
    Vec dy;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::LDLT<Mat> ldlt(hy + reg * Mat::Identity(hy.rows(), hy.cols()));
      if (ldlt.info() == Eigen::Success) {
        dy = ldlt.solve(-gy);
        if (dy.allFinite() && gy.dot(dy) < 0) break;
      }
      reg = (reg == 0) ? 1e-10 * (1 + hy.diagonal().cwiseAbs().maxCoeff()) : reg * 100;
      dy.setZero(gy.size());
    }
    if (dy.size() == 0 || !dy.allFinite() || gy.dot(dy) >= 0) break;
    double decrement2 = -gy.dot(dy);
    if (decrement2 / 2 <= cfg.newton_tol) break;

    double psi0 = 0;
    if (!pot.value(x, psi0)) break;
    Vec dx = z * dy;
    double step = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Vec trial = x + step * dx;
      double psi1 = 0;
      if (pot.value(trial, psi1) && psi1 <= psi0 + 1e-4 * step * gy.dot(dy)) {
        x = trial;
        moved = true;
        break;
      }
      step /= 2;
    }
    ++out.steps;
    if (!moved) break;
    if (stop_early && stop_early(x)) {
      out.early_stop = true;
      return out;
    }
  }
  return out;
}

struct NormalizedProblem {
  std::vector<Ineq> ineqs;
  Mat a_eq;  // m x n, sourced equality rows first, then pin rows
  Vec b_eq;
  std::vector<int> eq_source;
};

NormalizedProblem normalize(const Program& prog, const std::vector<char>& drop_lin,
                            const std::vector<char>& pinned) {
  NormalizedProblem np;
  std::vector<Vec> eq_rows;
  std::vector<double> eq_rhs;
  for (int i = 0; i < static_cast<int>(prog.lin.size()); ++i) {
    if (drop_lin[i]) continue;
    const auto& con = prog.lin[i];
    Vec a = con.a;
    if (a.size() < prog.dim) {
      Vec full = Vec::Zero(prog.dim);
      full.head(a.size()) = a;
      a = std::move(full);
    }
    switch (con.sense) {
      case Sense::le:
        np.ineqs.push_back(Ineq{a, con.b, i, false});
        break;
      case Sense::ge:
        np.ineqs.push_back(Ineq{-a, -con.b, i, true});
        break;
      case Sense::eq:
        eq_rows.push_back(a);
        eq_rhs.push_back(con.b);
        np.eq_source.push_back(i);
        break;
    }
  }
  for (int k = 0; k < prog.dim; ++k) {
    if (!pinned[k]) continue;
    Vec a = Vec::Zero(prog.dim);
    a[k] = 1;
    eq_rows.push_back(std::move(a));
    eq_rhs.push_back(0);
  }
  np.a_eq = Mat::Zero(static_cast<int>(eq_rows.size()), prog.dim);
  np.b_eq = Vec::Zero(static_cast<int>(eq_rows.size()));
  for (int r = 0; r < static_cast<int>(eq_rows.size()); ++r) {
    np.a_eq.row(r) = eq_rows[r].transpose();
    np.b_eq[r] = eq_rhs[r];
  }
  return np;
}

// A <=-constraint whose functional is nonnegative over the cone product and
// whose bound is ~0 has no interior; it forces the variables carrying a
// positive definite coefficient block to zero. Detect those and pin them so
// the barrier never sees the degenerate constraint.
struct PinOutcome {
  std::vector<char> pinned;
  std::vector<char> drop_lin;
  std::vector<char> drop_cone;
  bool infeasible = false;
  std::string message;
};

PinOutcome pin_zero_budgets(const Program& prog, double margin) {
  PinOutcome out;
  out.pinned.assign(prog.dim, 0);
  out.drop_lin.assign(prog.lin.size(), 0);
  out.drop_cone.assign(prog.cones.size(), 0);

  for (int i = 0; i < static_cast<int>(prog.lin.size()); ++i) {
    const auto& con = prog.lin[i];
    if (con.sense != Sense::le || con.b > margin) continue;
    Vec a = Vec::Zero(prog.dim);
    a.head(con.a.size()) = con.a;
    double scale = 1 + a.cwiseAbs().maxCoeff();
    bool eligible = true;
    std::vector<const SymVar*> to_pin;
    std::vector<char> claimed(prog.dim, 0);
    for (const auto& v : prog.sym_vars) {
      int sz = svec_size(v.n);
      for (int k = 0; k < sz; ++k) claimed[v.offset + k] = 1;
      Mat w = smat(a.segment(v.offset, sz), v.n);
      if (w.norm() <= 1e-14 * scale) continue;
      double lo = min_eig(w);
      if (lo < -1e-12 * scale) {
        eligible = false;
        break;
      }
      if (lo >= 1e-10 * std::max(1.0, w.norm()))
        to_pin.push_back(&v);
      else
        eligible = false;  // PSD but singular: only a subspace is forced
    }
    if (eligible)
      for (const auto& t : prog.scalar_vars) {
        claimed[t.offset] = 1;
        if (std::abs(a[t.offset]) > 1e-14 * scale) eligible = false;
      }
    if (eligible)
      for (int k = 0; k < prog.dim; ++k)
        if (!claimed[k] && std::abs(a[k]) > 1e-14 * scale) eligible = false;
    if (!eligible) continue;
    if (con.b < -10 * margin) {
      out.infeasible = true;
      out.message = "nonnegative functional bounded above by a negative value";
      return out;
    }
    for (const SymVar* v : to_pin)
      for (int k = 0; k < svec_size(v->n); ++k) out.pinned[v->offset + k] = 1;
    out.drop_lin[i] = 1;
  }

  bool any = false;
  for (char p : out.pinned) any = any || p;
  if (!any) return out;

  // Constraints whose support is now entirely pinned reduce to constants.
  for (int i = 0; i < static_cast<int>(prog.lin.size()); ++i) {
    if (out.drop_lin[i]) continue;
    const auto& con = prog.lin[i];
    Vec a = Vec::Zero(prog.dim);
    a.head(con.a.size()) = con.a;
    double scale = 1 + a.cwiseAbs().maxCoeff();
    bool supported = false;
    for (int k = 0; k < prog.dim; ++k)
      if (std::abs(a[k]) > 1e-14 * scale && !out.pinned[k]) supported = true;
    if (supported) continue;
    bool ok = false;
    switch (con.sense) {
      case Sense::le: ok = con.b >= -10 * margin; break;
      case Sense::ge: ok = con.b <= 10 * margin; break;
      case Sense::eq: ok = std::abs(con.b) <= 10 * margin; break;
    }
    if (!ok) {
      out.infeasible = true;
      out.message = "constraint '" + con.name + "' unsatisfiable once variables are pinned";
      return out;
    }
    out.drop_lin[i] = 1;
  }

  // Cones that collapse to constants under the pins.
  for (size_t j = 0; j < prog.cones.size(); ++j) {
    bool constant = true;
    for (const auto& [coord, basis] : prog.cones[j].terms)
      if (!out.pinned[coord] && basis.norm() > 0) constant = false;
    if (!constant) continue;
    if (prog.cones[j].s0.size() > 0 && min_eig(prog.cones[j].s0) < -1e-12) {
      out.infeasible = true;
      out.message = "cone constant is indefinite once variables are pinned";
      return out;
    }
    out.drop_cone[j] = 1;
  }
  return out;
}

// Orthonormal basis of the nullspace of a (via full QR of a').
Mat nullspace_basis(const Mat& a, int dim) {
  if (a.rows() == 0) return Mat::Identity(dim, dim);
  Eigen::HouseholderQR<Mat> qr(a.transpose());
  Mat q = qr.householderQ();
  // Rank detection from the R diagonal.
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  int rank = 0;
  double scale = std::max(1.0, r.diagonal().cwiseAbs().maxCoeff());
  for (int i = 0; i < std::min(r.rows(), r.cols()); ++i)
    if (std::abs(r(i, i)) > 1e-13 * scale) ++rank;
  return q.rightCols(dim - rank);
}

double objective_value(const Program& prog, const Vec& x) {
  double v = prog.c.dot(x);
  for (const auto& t : prog.logdets) v += t.weight * logdet_psd(t.arg.eval(x));
  return v;
}

}  // namespace

ConvexResult solve(const Program& prog_in, const ConvexConfig& cfg) {
  ConvexResult res;
  Program prog = prog_in;  // local copy: finish() pads rows in place
  prog.finish();

  const double feas_margin = std::max(cfg.feas_tol, 1e-14);
  PinOutcome pins = pin_zero_budgets(prog, feas_margin);
  if (pins.infeasible) {
    res.status = ConvexStatus::infeasible;
    res.message = pins.message;
    return res;
  }

  NormalizedProblem np = normalize(prog, pins.drop_lin, pins.pinned);
  std::vector<const MatrixAffine*> live_cones;
  for (size_t j = 0; j < prog.cones.size(); ++j)
    if (!pins.drop_cone[j]) live_cones.push_back(&prog.cones[j]);

  // Equality repair: project the start onto the equality slice (pins included).
  Vec x = prog.start;
  if (np.a_eq.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(np.a_eq);
    x += cod.solve(np.b_eq - np.a_eq * x);
    if ((np.a_eq * x - np.b_eq).cwiseAbs().maxCoeff() > 1e-8 * (1 + np.b_eq.cwiseAbs().maxCoeff())) {
      res.status = ConvexStatus::infeasible;
      res.message = "inconsistent equality constraints";
      return res;
    }
  }

  // The barrier needs the start strictly inside every log-det argument.
  {
    Eigen::LLT<Mat> llt;
    for (const auto& t : prog.logdets)
      if (!chol_pd(t.arg.eval(x), llt)) {
        res.status = ConvexStatus::error;
        res.message = "start leaves a log-det argument indefinite";
        return res;
      }
    for (const MatrixAffine* cone : live_cones)
      if (!chol_pd(cone->eval(x), llt)) {
        res.status = ConvexStatus::error;
        res.message = "start violates a cone strictly";
        return res;
      }
  }

  Mat z = nullspace_basis(np.a_eq, prog.dim);
  if (z.cols() == 0) {
    // Fully determined by equalities and pins; just evaluate.
    res.x = x;
    bool ok = true;
    for (const auto& q : np.ineqs) ok = ok && (q.a.dot(x) <= q.b + feas_margin);
    res.status = ok ? ConvexStatus::optimal : ConvexStatus::infeasible;
    if (ok) res.objective = objective_value(prog, x);
    res.cone_duals.clear();
    for (const auto& cone : prog.cones) res.cone_duals.push_back(Mat::Zero(cone.s0.rows(), cone.s0.rows()));
    res.lin_duals.assign(prog.lin.size(), 0.0);
    return res;
  }

  // Phase 1: restore strict inequality feasibility with a shared slack.
  {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& q : np.ineqs) worst = std::max(worst, q.a.dot(x) - q.b);
    if (np.ineqs.empty()) worst = -1;
    if (worst > -feas_margin) {
      const int n1 = prog.dim + 1;
      std::vector<Ineq> ineqs1;
      for (const auto& q : np.ineqs) {
        Vec a = Vec::Zero(n1);
        a.head(prog.dim) = q.a;
        a[prog.dim] = -1;
        ineqs1.push_back(Ineq{a, q.b, -1, false});
      }
      Vec c1 = Vec::Zero(n1);
      c1[prog.dim] = -1;  // maximize -s
      // Cones and objective log-det arguments both stay strict while moving.
      std::vector<MatrixAffine> lifted;
      lifted.reserve(live_cones.size() + prog.logdets.size());
      for (const MatrixAffine* cone : live_cones) lifted.push_back(*cone);
      for (const auto& t : prog.logdets) lifted.push_back(t.arg);
      Potential pot;
      pot.c = &c1;
      pot.ineqs = &ineqs1;
      for (const auto& m : lifted) pot.cone_pieces.push_back(Piece{1.0, &m});

      Mat a_eq1 = Mat::Zero(np.a_eq.rows(), n1);
      a_eq1.leftCols(prog.dim) = np.a_eq;
      Mat z1 = nullspace_basis(a_eq1, n1);
      Vec x1 = Vec::Zero(n1);
      x1.head(prog.dim) = x;
      x1[prog.dim] = worst + 1.0;

      double nu1 = static_cast<double>(ineqs1.size());
      for (const auto& m : lifted) nu1 += static_cast<double>(m.s0.rows());

      auto reached = [&](const Vec& v) { return v[prog.dim] < -2 * feas_margin; };
      bool found = reached(x1);
      double tau = cfg.tau0;
      // The slack hunt only needs a strictly feasible point, not a centered
      // one, so the per-stage Newton tolerance stays loose.
      ConvexConfig cfg1 = cfg;
      cfg1.newton_tol = std::max(cfg.newton_tol, 5e-3);
      for (int outer = 0; outer < cfg.max_outer && !found; ++outer) {
        pot.tau = tau;
        auto oc = center(pot, z1, x1, cfg1, reached);
        res.newton_steps += oc.steps;
        found = oc.early_stop || reached(x1);
        if (found) break;
        if (nu1 / tau <= 0.05 * feas_margin || tau >= cfg.tau_max) break;
        tau *= cfg.tau_factor;
      }
      if (!found) {
        res.status = ConvexStatus::infeasible;
        res.message =
            "no strictly feasible point (phase-1 slack " + std::to_string(x1[prog.dim]) + ")";
        return res;
      }
      x = x1.head(prog.dim);
    }
  }

  // Phase 2.
  Potential pot;
  pot.c = &prog.c;
  pot.ineqs = &np.ineqs;
  for (const MatrixAffine* cone : live_cones) pot.cone_pieces.push_back(Piece{1.0, cone});
  std::vector<Piece> obj_template;
  for (const auto& t : prog.logdets) obj_template.push_back(Piece{t.weight, &t.arg});

  double nu = static_cast<double>(np.ineqs.size());
  for (const MatrixAffine* cone : live_cones) nu += static_cast<double>(cone->s0.rows());
  if (nu == 0) nu = 1;

  double tau = cfg.tau0;
  double tau_centered = tau;
  double gap = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    pot.tau = tau;
    pot.obj_pieces = obj_template;
    for (auto& p : pot.obj_pieces) p.mult *= tau;
    // Intermediate stages only need to stay inside the next stage's Newton
    // basin; full centering accuracy matters at the final barrier weight,
    // where the cone inverses become the dual certificate.
    bool final_stage = nu / tau <= cfg.gap_tol || tau >= cfg.tau_max;
    ConvexConfig stage_cfg = cfg;
    if (!final_stage) stage_cfg.newton_tol = std::max(cfg.newton_tol, 5e-3);
    auto oc = center(pot, z, x, stage_cfg, nullptr);
    res.newton_steps += oc.steps;
    tau_centered = tau;
    gap = nu / tau;
    if (gap <= cfg.gap_tol || tau >= cfg.tau_max) break;
    tau *= cfg.tau_factor;
  }

  res.x = x;
  res.objective = objective_value(prog, x);
  res.gap = gap;
  res.status = (gap <= cfg.gap_tol) ? ConvexStatus::optimal : ConvexStatus::iteration_limit;

  // Dual recovery from the barrier gradients at the final center.
  res.cone_duals.clear();
  Eigen::LLT<Mat> llt;
  for (size_t j = 0; j < prog.cones.size(); ++j) {
    const Mat& s0 = prog.cones[j].s0;
    if (pins.drop_cone[j]) {
      res.cone_duals.push_back(Mat::Zero(s0.rows(), s0.rows()));
      continue;
    }
    Mat b = prog.cones[j].eval(x);
    llt.compute(symmetrize(b));
    Mat inv = llt.solve(Mat::Identity(b.rows(), b.cols()));
    res.cone_duals.push_back(symmetrize(inv / tau_centered));
  }
  res.lin_duals.assign(prog.lin.size(), 0.0);
  for (const auto& q : np.ineqs) {
    double s = q.b - q.a.dot(x);
    if (q.source >= 0) res.lin_duals[q.source] = 1 / (tau_centered * std::max(s, 1e-300));
  }

  // Scalar duals carry an O(gap) barrier error. Polish them: keep the cone
  // duals fixed, treat the active inequality duals and all equality prices as
  // unknowns, and fit the stationarity identity
  //   grad f + sum adj(M_j) - sum lambda a_int - A_eq' nu = 0
  // by least squares, re-solving with offenders removed until lambda >= 0.
  Vec r_base = prog.c;
  for (const auto& t : prog.logdets) {
    Mat arg = t.arg.eval(x);
    llt.compute(symmetrize(arg));
    Mat inv = llt.solve(Mat::Identity(arg.rows(), arg.cols()));
    for (const auto& [coord, basis] : t.arg.terms)
      r_base[coord] += t.weight * (inv * basis).trace();
  }
  for (size_t j = 0; j < prog.cones.size(); ++j)
    for (const auto& [coord, basis] : prog.cones[j].terms)
      r_base[coord] += (res.cone_duals[j] * basis).trace();

  std::vector<int> active;  // indices into np.ineqs
  for (int i = 0; i < static_cast<int>(np.ineqs.size()); ++i) {
    const auto& q = np.ineqs[i];
    if (q.source >= 0 && res.lin_duals[q.source] >= 1e-6) active.push_back(i);
  }
  Vec r_final = r_base;
  for (const auto& q : np.ineqs)
    if (q.source >= 0) r_final -= res.lin_duals[q.source] * q.a;
  for (int round = 0; round < 8; ++round) {
    const int m = static_cast<int>(active.size()) + static_cast<int>(np.a_eq.rows());
    if (m == 0) break;
    Mat cols(prog.dim, m);
    int cidx = 0;
    for (int i : active) cols.col(cidx++) = np.ineqs[i].a;
    for (int r = 0; r < np.a_eq.rows(); ++r) cols.col(cidx++) = np.a_eq.row(r).transpose();
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(cols);
    Vec sol = cod.solve(r_base);
    int worst = -1;
    double worst_val = -1e-12;
    for (int i = 0; i < static_cast<int>(active.size()); ++i)
      if (sol[i] < worst_val) {
        worst_val = sol[i];
        worst = i;
      }
    if (worst >= 0) {
      active.erase(active.begin() + worst);
      continue;
    }
    Vec r_try = r_base - cols * sol;
    if (r_try.norm() <= r_final.norm()) {
      r_final = r_try;
      for (int i = 0; i < static_cast<int>(active.size()); ++i)
        res.lin_duals[np.ineqs[active[i]].source] = sol[i];
      for (int r = 0; r < static_cast<int>(np.eq_source.size()); ++r)
        res.lin_duals[np.eq_source[r]] = sol[static_cast<int>(active.size()) + r];
    }
    break;
  }
  res.stationarity = r_final.norm();
  return res;
}

}  // namespace wiretap::convex
