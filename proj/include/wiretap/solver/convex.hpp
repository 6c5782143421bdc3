#pragma once

#include "wiretap/matrix_core.hpp"

#include <string>
#include <vector>

namespace wiretap::convex {

// Scaled-vec layout for symmetric matrices: diagonal entries as-is, each
// off-diagonal pair stored once scaled by sqrt(2), so dot products equal
// Frobenius inner products.
int svec_size(int n);
Vec svec(const Mat& a);
Mat smat(const Vec& v, int n);

struct SymVar {
  int offset = -1;
  int n = 0;
};

struct ScalarVar {
  int offset = -1;
};

// S(x) = s0 + sum_k x[coord_k] * basis_k, all basis matrices symmetric.
struct MatrixAffine {
  Mat s0;
  std::vector<std::pair<int, Mat>> terms;

  explicit MatrixAffine(Mat base = Mat()) : s0(std::move(base)) {}
  Mat eval(const Vec& x) const;
  // += a * X_v * a', mapped through the svec coordinates of v.
  void add_congruence(const Mat& a, const SymVar& v);
  void add_var(const SymVar& v, double w = 1.0);
  void add_scalar(const ScalarVar& t, Mat coeff);
};

enum class Sense { le, ge, eq };

struct LinearConstraint {
  Vec a;
  double b = 0;
  Sense sense = Sense::le;
  std::string name;
};

struct LogDetTerm {
  double weight = 1.0;  // > 0; term contributes weight * logdet(arg(x))
  MatrixAffine arg;
};

/**
 * maximize  c'x + sum_i w_i logdet(C_i(x))
 * s.t.      cone_j(x) PSD, linear constraints, A_eq x = b_eq
 *
 * start must satisfy equalities exactly and every cone strictly; inequality
 * violations at start are repaired by a phase-1 pass.
 */
struct Program {
  int dim = 0;
  Vec c;
  std::vector<LogDetTerm> logdets;
  std::vector<MatrixAffine> cones;
  std::vector<LinearConstraint> lin;
  Vec start;
  std::vector<SymVar> sym_vars;        // registry, filled by sym_var()
  std::vector<ScalarVar> scalar_vars;  // registry, filled by scalar_var()

  SymVar sym_var(int n);            // allocates coords and a PSD cone on the variable
  ScalarVar scalar_var(double lo);  // allocates one coord with x >= lo
  void finish();                    // sizes c/start once all vars exist

  void add_linear_objective(const SymVar& v, const Mat& w);  // c += tr(W X_v) functional
  void add_linear_objective(const ScalarVar& t, double w);

  Vec functional() const { return Vec::Zero(dim); }
  static void add_trace(Vec& a, const SymVar& v, const Mat& w);
  static void add_coeff(Vec& a, const ScalarVar& t, double w);
  void add_constraint(Vec a, double b, Sense sense, std::string name = {});

  Mat get(const Vec& x, const SymVar& v) const;
  double get(const Vec& x, const ScalarVar& t) const;
  void set(Vec& x, const SymVar& v, const Mat& val) const;
  void set(Vec& x, const ScalarVar& t, double val) const;
};

enum class ConvexStatus { optimal, infeasible, iteration_limit, error };

struct ConvexConfig {
  double gap_tol = 1e-9;    // absolute target on the barrier duality gap
  double feas_tol = 1e-9;   // absolute slack used by phase 1 and feasibility checks
  double tau0 = 1.0;
  double tau_factor = 30.0;
  double tau_max = 1e12;
  int max_outer = 40;
  int max_newton_per_center = 80;
  double newton_tol = 1e-11;  // on the squared Newton decrement
};

struct ConvexResult {
  ConvexStatus status = ConvexStatus::error;
  Vec x;
  double objective = 0;
  std::vector<Mat> cone_duals;     // multiplier for cone_j(x) PSD
  std::vector<double> lin_duals;   // >= 0 for inequalities, free for equalities
  double gap = 0;                  // final barrier gap bound
  double stationarity = 0;         // residual norm of the recovered dual certificate
  int newton_steps = 0;
  std::string message;
};

ConvexResult solve(const Program& prog, const ConvexConfig& cfg);

}  // namespace wiretap::convex
