#include "wiretap/solver/secrecy.hpp"

#include "wiretap/random.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace wiretap {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::mean: return "mean";
    case Scheme::an: return "an";
    case Scheme::plain: return "plain";
  }
  return "?";
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::degenerate: return "degenerate";
    case SolveStatus::iteration_limit: return "iteration_limit";
    case SolveStatus::error: return "error";
  }
  return "?";
}

namespace {

using convex::MatrixAffine;
using convex::Program;
using convex::ScalarVar;
using convex::Sense;
using convex::SymVar;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Nudges a tie between restarts or keeps a damped step from flapping.
constexpr double kRateTieTol = 1e-9;
// Weight of the carrier-power tie-break term added to schemes whose
// objective ignores q2; keeps the reported carrier on the cheapest face.
constexpr double kCarrierEps = 1e-7;

struct EnergyRow {
  Receiver rcv = Receiver::eve;
  BoundKind kind = BoundKind::min;
  double tilde = 0;
  Mat gram;
};

std::vector<EnergyRow> energy_rows(const WiretapChannel& ch, const PowerSpec& spec) {
  std::vector<EnergyRow> rows;
  if (spec.eve) rows.push_back({Receiver::eve, spec.eve->kind, spec.eve->tilde, ch.gram_g()});
  if (spec.bob) rows.push_back({Receiver::bob, spec.bob->kind, spec.bob->tilde, ch.gram_h()});
  return rows;
}

// Gradient of ln|I + M Q M'| in Q.
Mat dbl_grad(const Mat& m, const Mat& q) {
  Mat inner = Mat::Identity(m.rows(), m.rows()) + m * q * m.transpose();
  Eigen::LLT<Mat> llt(symmetrize(inner));
  Mat solved = llt.solve(m);  // (I + MQM')^-1 M
  return symmetrize(m.transpose() * solved);
}

Vec canonical_sign(Vec v) {
  int arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0) v = -v;
  return v;
}

double lambda_max(const Mat& m) { return m.rows() == 0 ? 0.0 : eig_sym(m).vals[0]; }

// One convex subproblem: solved iterate, its duals, and the engine verdict.
struct StepResult {
  convex::ConvexStatus status = convex::ConvexStatus::error;
  CovariancePair pair;
  DualSet duals;
  double stationarity = 0;
  std::string message;
};

struct SubLayout {
  Program prog;
  SymVar q1;
  SymVar q2;
  bool with_q2 = false;
  int trace_idx = -1;
  std::vector<int> energy_idx;
  std::vector<EnergyRow> rows;
};

void add_budget_rows(SubLayout& lay, const WiretapChannel& ch, const PowerSpec& spec) {
  lay.rows = energy_rows(ch, spec);
  Vec a = lay.prog.functional();
  Program::add_trace(a, lay.q1, Mat::Identity(ch.nt(), ch.nt()));
  if (lay.with_q2) Program::add_trace(a, lay.q2, Mat::Identity(ch.nt(), ch.nt()));
  lay.trace_idx = static_cast<int>(lay.prog.lin.size());
  lay.prog.add_constraint(a, spec.p, Sense::le, "power");
  for (const auto& row : lay.rows) {
    Vec e = lay.prog.functional();
    Program::add_trace(e, lay.q1, row.gram);
    if (lay.with_q2) Program::add_trace(e, lay.q2, row.gram);
    lay.energy_idx.push_back(static_cast<int>(lay.prog.lin.size()));
    lay.prog.add_constraint(e, row.tilde, row.kind == BoundKind::min ? Sense::ge : Sense::le,
                            row.rcv == Receiver::eve ? "energy_eve" : "energy_bob");
  }
}

void harvest_duals(const SubLayout& lay, const convex::ConvexResult& res, double scale_check,
                   DualSet& duals) {
  duals.m1 = res.cone_duals[0];
  duals.m2 = lay.with_q2 ? res.cone_duals[1] : Mat();
  duals.trace = lay.trace_idx >= 0 ? res.lin_duals[lay.trace_idx] : 0.0;
  duals.eve = 0;
  duals.bob = 0;
  for (size_t i = 0; i < lay.rows.size(); ++i) {
    double v = res.lin_duals[lay.energy_idx[i]];
    (lay.rows[i].rcv == Receiver::eve ? duals.eve : duals.bob) = v;
  }
  duals.valid = res.status == convex::ConvexStatus::optimal &&
                res.stationarity <= 1e-5 * scale_check;
}

CovariancePair default_start(const WiretapChannel& ch, const PowerSpec& spec, bool with_q2);

// A warm iterate usually sits on the tight rows, where a bare nudge lands the
// start outside and triggers the phase-1 hunt on every tangent solve. Mixing a
// little of the deterministic interior point back in restores the row margins
// while keeping the carried eigenstructure.
void seed_start(SubLayout& lay, const WiretapChannel& ch, const PowerSpec& spec,
                const CovariancePair& pair, double nudge) {
  const int nt = static_cast<int>(pair.q1.rows());
  const Mat id = Mat::Identity(nt, nt);
  const double th = 0.1;
  CovariancePair mix = default_start(ch, spec, lay.with_q2);
  CovariancePair s;
  s.q1 = (1 - th) * pair.q1 + th * mix.q1 + nudge * id;
  s.q2 = lay.with_q2 ? Mat((1 - th) * pair.q2 + th * mix.q2 + nudge * id) : Mat::Zero(nt, nt);
  double margin = spec.p - s.s().trace();
  for (const auto& row : lay.rows) {
    double delivered = (row.gram * s.s()).trace();
    margin = std::min(margin, row.kind == BoundKind::min ? delivered - row.tilde
                                                         : row.tilde - delivered);
  }
  if (!(margin > 1e-8 * (1 + spec.p))) {
    s.q1 = pair.q1 + nudge * id;
    s.q2 = lay.with_q2 ? Mat(pair.q2 + nudge * id) : Mat::Zero(nt, nt);
  }
  lay.prog.set(lay.prog.start, lay.q1, s.q1);
  if (lay.with_q2) lay.prog.set(lay.prog.start, lay.q2, s.q2);
}

// Mean/plain surrogate linearized at q1_lin: the eavesdropper log-det is
// replaced by its tangent, leaving a concave program whose multipliers match
// the stationarity conditions of the doubled secrecy rate.
StepResult mean_step(const WiretapChannel& ch, const PowerSpec& spec, const Mat& q1_lin,
                     bool with_q2, const CovariancePair& start, const SolverConfig& cfg) {
  const int nt = ch.nt();
  SubLayout lay;
  lay.q1 = lay.prog.sym_var(nt);
  lay.with_q2 = with_q2;
  if (with_q2) lay.q2 = lay.prog.sym_var(nt);
  lay.prog.finish();

  convex::LogDetTerm bob;
  bob.weight = 1.0;
  bob.arg.s0 = Mat::Identity(ch.nr(), ch.nr());
  bob.arg.add_congruence(ch.h, lay.q1);
  lay.prog.logdets.push_back(std::move(bob));
  lay.prog.add_linear_objective(lay.q1, -dbl_grad(ch.g, q1_lin));
  if (with_q2)
    lay.prog.add_linear_objective(lay.q2, -kCarrierEps * Mat::Identity(nt, nt));

  add_budget_rows(lay, ch, spec);
  seed_start(lay, ch, spec, start, 1e-7 * (1 + spec.p) / nt);

  auto res = convex::solve(lay.prog, cfg.inner);
  StepResult out;
  out.status = res.status;
  out.message = res.message;
  out.stationarity = res.stationarity;
  if (res.x.size() > 0) {
    out.pair.q1 = psd_project(lay.prog.get(res.x, lay.q1));
    out.pair.q2 = with_q2 ? psd_project(lay.prog.get(res.x, lay.q2)) : Mat::Zero(nt, nt);
    harvest_duals(lay, res, 1 + spec.p, out.duals);
  }
  return out;
}

// Artificial-noise surrogate linearized at (s_lin, q2_lin): both convex
// log-dets of the doubled rate are replaced by tangents.
StepResult an_step(const WiretapChannel& ch, const PowerSpec& spec, const CovariancePair& lin,
                   const CovariancePair& start, const SolverConfig& cfg) {
  const int nt = ch.nt();
  SubLayout lay;
  lay.q1 = lay.prog.sym_var(nt);
  lay.q2 = lay.prog.sym_var(nt);
  lay.with_q2 = true;
  lay.prog.finish();

  convex::LogDetTerm bob;
  bob.weight = 1.0;
  bob.arg.s0 = Mat::Identity(ch.nr(), ch.nr());
  bob.arg.add_congruence(ch.h, lay.q1);
  bob.arg.add_congruence(ch.h, lay.q2);
  lay.prog.logdets.push_back(std::move(bob));
  convex::LogDetTerm evebase;
  evebase.weight = 1.0;
  evebase.arg.s0 = Mat::Identity(ch.ne(), ch.ne());
  evebase.arg.add_congruence(ch.g, lay.q2);
  lay.prog.logdets.push_back(std::move(evebase));

  Mat b = dbl_grad(ch.g, lin.s());       // tangent of eve's total log-det
  Mat a = dbl_grad(ch.h, lin.q2);        // tangent of bob's prefix log-det
  lay.prog.add_linear_objective(lay.q1, -b);
  lay.prog.add_linear_objective(lay.q2, -(a + b));

  add_budget_rows(lay, ch, spec);
  seed_start(lay, ch, spec, start, 1e-7 * (1 + spec.p) / nt);

  auto res = convex::solve(lay.prog, cfg.inner);
  StepResult out;
  out.status = res.status;
  out.message = res.message;
  out.stationarity = res.stationarity;
  if (res.x.size() > 0) {
    out.pair.q1 = psd_project(lay.prog.get(res.x, lay.q1));
    out.pair.q2 = psd_project(lay.prog.get(res.x, lay.q2));
    harvest_duals(lay, res, 1 + spec.p, out.duals);
  }
  return out;
}

// Weighted broadcast surrogate at the given encoding order; the interfered
// user's penalty log-det is linearized at the current iterate.
StepResult bc_step(const WiretapChannel& ch, const PowerSpec& spec, double a1, double a2,
                   DpcOrder order, const CovariancePair& lin, const CovariancePair& start,
                   const SolverConfig& cfg) {
  const int nt = ch.nt();
  SubLayout lay;
  lay.q1 = lay.prog.sym_var(nt);
  lay.q2 = lay.prog.sym_var(nt);
  lay.with_q2 = true;
  lay.prog.finish();

  const bool first = order == DpcOrder::user1_first;
  const Mat& m_clean = first ? ch.h : ch.g;   // encoded first, sees no interference
  const Mat& m_late = first ? ch.g : ch.h;    // decodes both layers
  const SymVar& v_clean = first ? lay.q1 : lay.q2;
  const double w_clean = first ? a1 : a2;
  const double w_late = first ? a2 : a1;

  if (w_clean > 0) {
    convex::LogDetTerm t;
    t.weight = w_clean / 2;
    t.arg.s0 = Mat::Identity(m_clean.rows(), m_clean.rows());
    t.arg.add_congruence(m_clean, v_clean);
    lay.prog.logdets.push_back(std::move(t));
  }
  if (w_late > 0) {
    convex::LogDetTerm t;
    t.weight = w_late / 2;
    t.arg.s0 = Mat::Identity(m_late.rows(), m_late.rows());
    t.arg.add_congruence(m_late, lay.q1);
    t.arg.add_congruence(m_late, lay.q2);
    lay.prog.logdets.push_back(std::move(t));
    Mat pen = dbl_grad(m_late, first ? lin.q1 : lin.q2);
    lay.prog.add_linear_objective(v_clean, -(w_late / 2) * pen);
  }
  if (w_clean == 0)
    lay.prog.add_linear_objective(v_clean, -kCarrierEps * Mat::Identity(nt, nt));

  add_budget_rows(lay, ch, spec);
  seed_start(lay, ch, spec, start, 1e-7 * (1 + spec.p) / nt);

  auto res = convex::solve(lay.prog, cfg.inner);
  StepResult out;
  out.status = res.status;
  out.message = res.message;
  out.stationarity = res.stationarity;
  if (res.x.size() > 0) {
    out.pair.q1 = psd_project(lay.prog.get(res.x, lay.q1));
    out.pair.q2 = psd_project(lay.prog.get(res.x, lay.q2));
    harvest_duals(lay, res, 1 + spec.p, out.duals);
  }
  return out;
}

using StepFn = std::function<StepResult(const CovariancePair& lin, const CovariancePair& start)>;
using RateFn = std::function<double(const CovariancePair&)>;
using KktFn = std::function<double(const CovariancePair&, const DualSet&)>;

struct ScpOutcome {
  SolveStatus status = SolveStatus::error;
  CovariancePair pair;
  double rate = -kInf;
  DualSet duals;
  int iterations = 0;
  std::vector<double> rate_trace;
  std::string message;
};

// Successive surrogate loop with monotone acceptance: a step that lowers the
// true objective is damped toward the previous iterate before being rejected.
// The next linearization point is chosen by secant extrapolation over the last
// few steps, which removes the slow crawl along flat directions; any misstep
// falls back to the plain iteration through the damping rule. Convergence is
// judged on the residual of the true stationarity system; rate stagnation
// alone merely stops the loop once it persists.
ScpOutcome run_scp(const StepFn& step, const RateFn& true_rate, const KktFn& kkt,
                   const CovariancePair& init, const SolverConfig& cfg, double p) {
  ScpOutcome out;
  const double tol = cfg.scp_tol * (1 + p);
  const double kkt_target = 0.25 * cfg.kkt_tol * (1 + p);
  CovariancePair cur = init;
  double cur_rate = -kInf;
  bool converged = false;
  bool have_duals = false;
  int stalled = 0;

  const Eigen::Index b1 = init.q1.size(), b2 = init.q2.size();
  const auto r1 = init.q1.rows(), r2 = init.q2.rows();
  auto pack = [&](const CovariancePair& pr) {
    Vec z(b1 + b2);
    z.head(b1) = Eigen::Map<const Vec>(pr.q1.data(), b1);
    z.tail(b2) = Eigen::Map<const Vec>(pr.q2.data(), b2);
    return z;
  };
  auto unpack = [&](const Vec& z) {
    CovariancePair pr;
    pr.q1 = psd_project(Eigen::Map<const Mat>(z.data(), r1, r1));
    pr.q2 = psd_project(Eigen::Map<const Mat>(z.data() + b1, r2, r2));
    return pr;
  };
  std::vector<Vec> hist_in, hist_out;  // linearization points and step outputs
  CovariancePair lin = cur;
  bool lin_is_cur = true;

  for (int it = 0; it < cfg.max_scp_iters; ++it) {
    StepResult sr = step(lin, cur);
    ++out.iterations;
    if (sr.status == convex::ConvexStatus::infeasible) {
      out.status = SolveStatus::infeasible;
      out.message = sr.message;
      return out;
    }
    if (sr.status == convex::ConvexStatus::error) {
      if (it == 0) {
        out.status = SolveStatus::error;
        out.message = sr.message;
        return out;
      }
      break;
    }
    CovariancePair cand = sr.pair;
    double cand_rate = true_rate(cand);
    bool damped = false;
    if (it > 0 && cand_rate < cur_rate - kRateTieTol * (1 + p)) {
      bool recovered = false;
      for (int d = 0; d < 6; ++d) {
        cand.q1 = 0.5 * (cand.q1 + cur.q1);
        cand.q2 = 0.5 * (cand.q2 + cur.q2);
        cand_rate = true_rate(cand);
        if (cand_rate >= cur_rate - kRateTieTol * (1 + p)) {
          recovered = true;
          break;
        }
      }
      if (!recovered) {
        if (!lin_is_cur) {
          // The rejected step came from an extrapolated linearization; only a
          // tangent step at the accepted iterate can justify stopping.
          hist_in.clear();
          hist_out.clear();
          lin = cur;
          lin_is_cur = true;
          continue;
        }
        converged = true;  // the tangent step no longer improves the true rate
        break;
      }
      damped = true;
    }
    double delta = it == 0 ? kInf : cand_rate - cur_rate;
    cur = cand;
    cur_rate = cand_rate;
    out.rate_trace.push_back(cur_rate);
    if (!damped && sr.duals.valid && kkt(cur, sr.duals) <= kkt_target) {
      out.duals = sr.duals;
      have_duals = true;
      converged = true;
      break;
    }
    stalled = std::abs(delta) <= tol ? stalled + 1 : 0;
    if (stalled >= 10) {
      converged = true;
      break;
    }

    if (damped) {
      hist_in.clear();
      hist_out.clear();
      lin = cur;
      lin_is_cur = true;
      continue;
    }
    hist_in.push_back(pack(lin));
    hist_out.push_back(pack(sr.pair));
    const size_t mem = 4;
    if (hist_in.size() > mem) {
      hist_in.erase(hist_in.begin());
      hist_out.erase(hist_out.begin());
    }
    Vec znext = hist_out.back();
    const int m = static_cast<int>(hist_in.size()) - 1;
    if (m >= 1) {
      Mat dr(b1 + b2, m), dw(b1 + b2, m);
      for (int j = 0; j < m; ++j) {
        Vec res_a = hist_out[j] - hist_in[j];
        Vec res_b = hist_out[j + 1] - hist_in[j + 1];
        dr.col(j) = res_b - res_a;
        dw.col(j) = hist_out[j + 1] - hist_out[j];
      }
      Vec gamma = dr.colPivHouseholderQr().solve(hist_out.back() - hist_in.back());
      Vec accel = znext - dw * gamma;
      if (accel.allFinite() && accel.norm() <= 100 * (1 + znext.norm())) znext = accel;
    }
    lin = unpack(znext);
    lin_is_cur = (lin.q1 - cur.q1).norm() + (lin.q2 - cur.q2).norm() <= 1e-12 * (1 + p);
  }

  if (!have_duals) {
    // One more surrogate solve linearized at the accepted iterate; at a fixed
    // point it reproduces the iterate and its multipliers apply exactly.
    StepResult cert = step(cur, cur);
    ++out.iterations;
    if (cert.status == convex::ConvexStatus::optimal) {
      double cert_rate = true_rate(cert.pair);
      if (cert_rate >= cur_rate - 10 * tol) {
        cur = cert.pair;
        cur_rate = cert_rate;
        out.duals = cert.duals;
      } else {
        out.duals = cert.duals;
        out.duals.valid = false;
        out.message = "certify step moved away; multipliers approximate";
      }
    } else {
      out.duals.valid = false;
    }
  }

  out.pair = cur;
  out.rate = cur_rate;
  out.status = converged ? SolveStatus::optimal : SolveStatus::iteration_limit;
  return out;
}

// Deterministic start: spread half the budget over the message covariance and
// aim any remainder needed by min-floors along the matched beam.
CovariancePair default_start(const WiretapChannel& ch, const PowerSpec& spec, bool with_q2) {
  const int nt = ch.nt();
  CovariancePair pair;
  pair.q1 = (spec.p / (2.0 * nt)) * Mat::Identity(nt, nt);
  pair.q2 = Mat::Zero(nt, nt);
  if (!with_q2) {
    pair.q1 = (spec.p / nt) * Mat::Identity(nt, nt) * 0.5;
    return pair;
  }
  double def_e = 0, def_b = 0;
  if (spec.eve && spec.eve->kind == BoundKind::min)
    def_e = std::max(0.0, spec.eve->tilde - (ch.gram_g() * pair.q1).trace());
  if (spec.bob && spec.bob->kind == BoundKind::min)
    def_b = std::max(0.0, spec.bob->tilde - (ch.gram_h() * pair.q1).trace());
  if (def_e > 0 || def_b > 0) {
    WeightedBeam beam = weighted_beam(ch, def_e, def_b);
    double ge = beam.dir.dot(ch.gram_g() * beam.dir);
    double hb = beam.dir.dot(ch.gram_h() * beam.dir);
    double rho = 0;
    if (def_e > 0 && ge > 1e-14) rho = std::max(rho, def_e / ge);
    if (def_b > 0 && hb > 1e-14) rho = std::max(rho, def_b / hb);
    rho = std::min(1.05 * rho, std::max(0.0, spec.p - pair.q1.trace()));
    pair.q2 = rho * beam.dir * beam.dir.transpose();
  }
  return pair;
}

std::vector<CovariancePair> build_starts(const WiretapChannel& ch, const PowerSpec& spec,
                                         bool with_q2, const SolverConfig& cfg) {
  const int nt = ch.nt();
  std::vector<CovariancePair> starts;
  if (cfg.start && cfg.start->q1.rows() == nt) {
    starts.push_back(*cfg.start);
    if (!with_q2) starts.back().q2 = Mat::Zero(nt, nt);
  } else {
    starts.push_back(default_start(ch, spec, with_q2));
  }
  for (int r = 0; r < cfg.restarts; ++r) {
    GaussianRng rng(cfg.seed + 1000003ull * static_cast<std::uint64_t>(r + 1));
    CovariancePair pair;
    double c1 = spec.p * (0.2 + 0.6 * rng.uniform());
    pair.q1 = rng.psd_with_trace(nt, c1);
    pair.q2 = with_q2 ? rng.psd_with_trace(nt, 0.5 * std::max(0.0, spec.p - c1))
                      : Mat::Zero(nt, nt);
    starts.push_back(std::move(pair));
  }
  return starts;
}

// Residuals of the stationarity system the duals are normalized against.
// Eigenvector columns whose eigenvalues sit on the cone boundary.
Mat active_face(const Mat& q, double eps) {
  auto ed = eig_sym(q);
  const int n = static_cast<int>(ed.vals.size());
  int a = 0;
  while (a < n && ed.vals[n - 1 - a] <= eps) ++a;
  return ed.vecs.rightCols(a);
}

// Rebuilds the multipliers from the accepted point alone. Barrier multipliers
// stop improving once the center reaches the round-off wall, while the active
// faces and tight rows give a small least-squares system for the stationarity
// blocks whose solution, clipped to the dual cone, is limited only by the
// primal's accuracy.
DualSet polish_duals(const WiretapChannel& ch, const PowerSpec& spec, const CovariancePair& pair,
                     const Mat& grad1, const Mat& grad2, bool with_q2) {
  const int nt = ch.nt();
  const int nn = nt * nt;
  DualSet out;
  out.m1 = Mat::Zero(nt, nt);
  out.m2 = with_q2 ? Mat::Zero(nt, nt) : Mat();
  out.valid = true;

  Mat u1 = active_face(pair.q1, 1e-6 * (1 + pair.q1.trace()));
  Mat u2 = with_q2 ? active_face(pair.q2, 1e-6 * (1 + pair.q2.trace())) : Mat::Zero(nt, 0);
  const int a1 = static_cast<int>(u1.cols()), a2 = static_cast<int>(u2.cols());

  const auto rows = energy_rows(ch, spec);
  const double tr_s = pair.s().trace();
  const bool tr_active = spec.p - tr_s <= 1e-6 * (1 + spec.p);
  std::vector<size_t> tight;
  for (size_t i = 0; i < rows.size(); ++i) {
    double delivered = (rows[i].gram * pair.s()).trace();
    double slack = rows[i].kind == BoundKind::min ? delivered - rows[i].tilde
                                                  : rows[i].tilde - delivered;
    if (slack <= 1e-6 * (1 + std::abs(rows[i].tilde))) tight.push_back(i);
  }

  const int t1 = a1 * (a1 + 1) / 2, t2 = a2 * (a2 + 1) / 2;
  const int cols = t1 + t2 + (tr_active ? 1 : 0) + static_cast<int>(tight.size());
  if (cols == 0) return out;

  const int brows = with_q2 ? 2 * nn : nn;
  Mat sys = Mat::Zero(brows, cols);
  Vec rhs(brows);
  Mat g1 = symmetrize(grad1);
  rhs.head(nn) = -Eigen::Map<const Vec>(g1.data(), nn);
  Mat g2;
  if (with_q2) {
    g2 = symmetrize(grad2);
    rhs.tail(nn) = -Eigen::Map<const Vec>(g2.data(), nn);
  }

  int c = 0;
  auto face_cols = [&](const Mat& u, int a, int block) {
    for (int k = 0; k < a; ++k)
      for (int l = k; l < a; ++l) {
        Mat b = u.col(k) * u.col(l).transpose();
        b = Mat(symmetrize(b));
        sys.block(block * nn, c, nn, 1) = Eigen::Map<const Vec>(b.data(), nn);
        ++c;
      }
  };
  face_cols(u1, a1, 0);
  if (with_q2) face_cols(u2, a2, 1);
  if (tr_active) {
    Mat id = Mat::Identity(nt, nt);
    sys.block(0, c, nn, 1) = -Eigen::Map<const Vec>(id.data(), nn);
    if (with_q2) sys.block(nn, c, nn, 1) = -Eigen::Map<const Vec>(id.data(), nn);
    ++c;
  }
  for (size_t i : tight) {
    double sgn = rows[i].kind == BoundKind::min ? 1.0 : -1.0;
    Mat b = sgn * rows[i].gram;
    sys.block(0, c, nn, 1) = Eigen::Map<const Vec>(b.data(), nn);
    if (with_q2) sys.block(nn, c, nn, 1) = Eigen::Map<const Vec>(b.data(), nn);
    ++c;
  }

  Vec sol = sys.colPivHouseholderQr().solve(rhs);

  c = 0;
  auto face_unpack = [&](const Mat& u, int a) {
    Mat m = Mat::Zero(nt, nt);
    for (int k = 0; k < a; ++k)
      for (int l = k; l < a; ++l) {
        Mat b = u.col(k) * u.col(l).transpose();
        m += sol[c] * Mat(symmetrize(b));
        ++c;
      }
    return psd_project(m);
  };
  out.m1 = face_unpack(u1, a1);
  if (with_q2) out.m2 = face_unpack(u2, a2);
  if (tr_active) out.trace = std::max(0.0, sol[c++]);
  for (size_t i : tight) {
    double v = std::max(0.0, sol[c++]);
    (rows[i].rcv == Receiver::eve ? out.eve : out.bob) = v;
  }

  // The clips above can strand residual that another multiplier could absorb
  // (a boundary point whose cone dual wants to be negative forces the row dual
  // up instead). A few rounds of coordinate descent between the exact clipped
  // face step and a re-fit of the scalar duals settle the split.
  const int n_theta = (tr_active ? 1 : 0) + static_cast<int>(tight.size());
  if (n_theta > 0) {
    Mat th_sys(brows, n_theta);
    int tc = 0;
    if (tr_active) {
      Mat id = Mat::Identity(nt, nt);
      th_sys.block(0, tc, nn, 1) = -Eigen::Map<const Vec>(id.data(), nn);
      if (with_q2) th_sys.block(nn, tc, nn, 1) = -Eigen::Map<const Vec>(id.data(), nn);
      ++tc;
    }
    for (size_t i : tight) {
      double sgn = rows[i].kind == BoundKind::min ? 1.0 : -1.0;
      Mat b = sgn * rows[i].gram;
      th_sys.block(0, tc, nn, 1) = Eigen::Map<const Vec>(b.data(), nn);
      if (with_q2) th_sys.block(nn, tc, nn, 1) = Eigen::Map<const Vec>(b.data(), nn);
      ++tc;
    }
    Eigen::ColPivHouseholderQR<Mat> th_qr(th_sys);
    auto price_of = [&](const DualSet& d) {
      Mat pr = d.trace * Mat::Identity(nt, nt);
      for (size_t i : tight) {
        double sgn = rows[i].kind == BoundKind::min ? 1.0 : -1.0;
        pr -= sgn * (rows[i].rcv == Receiver::eve ? d.eve : d.bob) * rows[i].gram;
      }
      return pr;
    };
    for (int round = 0; round < 8; ++round) {
      Mat pr = price_of(out);
      if (a1 > 0) out.m1 = u1 * psd_project(Mat(u1.transpose() * (pr - g1) * u1)) * u1.transpose();
      if (with_q2 && a2 > 0)
        out.m2 = u2 * psd_project(Mat(u2.transpose() * (pr - g2) * u2)) * u2.transpose();
      Vec resid(brows);
      Mat r1 = g1 + out.m1;
      resid.head(nn) = -Eigen::Map<const Vec>(r1.data(), nn);
      if (with_q2) {
        Mat r2 = g2 + out.m2;
        resid.tail(nn) = -Eigen::Map<const Vec>(r2.data(), nn);
      }
      Vec th = th_qr.solve(resid);
      tc = 0;
      if (tr_active) out.trace = std::max(0.0, th[tc++]);
      for (size_t i : tight) {
        double v = std::max(0.0, th[tc++]);
        (rows[i].rcv == Receiver::eve ? out.eve : out.bob) = v;
      }
    }
    Mat pr = price_of(out);
    if (a1 > 0) out.m1 = u1 * psd_project(Mat(u1.transpose() * (pr - g1) * u1)) * u1.transpose();
    if (with_q2 && a2 > 0)
      out.m2 = u2 * psd_project(Mat(u2.transpose() * (pr - g2) * u2)) * u2.transpose();
  }
  return out;
}

KktReport assemble_kkt(const WiretapChannel& ch, const PowerSpec& spec, const CovariancePair& pair,
                       const DualSet& duals, const Mat& grad1, const Mat& grad2, bool with_q2) {
  KktReport rep;
  const int nt = ch.nt();
  Mat price = duals.trace * Mat::Identity(nt, nt);
  for (const auto& row : energy_rows(ch, spec)) {
    double gamma = row.rcv == Receiver::eve ? duals.eve : duals.bob;
    double sgn = row.kind == BoundKind::min ? 1.0 : -1.0;
    price -= sgn * gamma * row.gram;
  }
  Mat m1 = duals.m1.size() > 0 ? duals.m1 : Mat::Zero(nt, nt);
  rep.stationarity1 = (grad1 + m1 - price).norm();
  if (with_q2) {
    Mat m2 = duals.m2.size() > 0 ? duals.m2 : Mat::Zero(nt, nt);
    rep.stationarity2 = (grad2 + m2 - price).norm();
  }

  double tr_s = pair.s().trace();
  rep.comp_slack = std::abs(duals.trace * (spec.p - tr_s));
  rep.comp_slack += std::abs((m1 * pair.q1).trace());
  if (with_q2 && duals.m2.size() > 0) rep.comp_slack += std::abs((duals.m2 * pair.q2).trace());
  rep.primal = std::max(0.0, tr_s - spec.p);
  rep.primal += std::max(0.0, -min_eig(pair.q1));
  if (with_q2) rep.primal += std::max(0.0, -min_eig(pair.q2));
  for (const auto& row : energy_rows(ch, spec)) {
    double delivered = (row.gram * pair.s()).trace();
    double gamma = row.rcv == Receiver::eve ? duals.eve : duals.bob;
    double slack = row.kind == BoundKind::min ? delivered - row.tilde : row.tilde - delivered;
    rep.primal += std::max(0.0, -slack);
    rep.comp_slack += std::abs(gamma * slack);
  }
  rep.dual_psd = std::max(0.0, -min_eig(m1));
  if (with_q2 && duals.m2.size() > 0) rep.dual_psd += std::max(0.0, -min_eig(duals.m2));
  rep.dual_psd += std::max(0.0, -duals.trace);
  rep.dual_psd += std::max(0.0, -duals.eve) + std::max(0.0, -duals.bob);
  rep.max_residual = std::max({rep.stationarity1, rep.stationarity2, rep.comp_slack, rep.primal,
                               rep.dual_psd});
  return rep;
}

// Gradients of the doubled objective, matching the scale of harvested duals.
void scheme_grads(const WiretapChannel& ch, Scheme scheme, const CovariancePair& pair, Mat& grad1,
                  Mat& grad2) {
  if (scheme == Scheme::an) {
    grad1 = 2 * grad_rate_an_q1(ch, pair);
    grad2 = 2 * grad_rate_an_q2(ch, pair);
  } else {
    grad1 = 2 * grad_rate_mean(ch, pair.q1);
    grad2 = Mat::Zero(ch.nt(), ch.nt());
  }
}

double scheme_kkt(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                  const CovariancePair& pair, const DualSet& duals) {
  Mat grad1, grad2;
  scheme_grads(ch, scheme, pair, grad1, grad2);
  return assemble_kkt(ch, spec, pair, duals, grad1, grad2, scheme != Scheme::plain).max_residual;
}

void extract_mean(const WiretapChannel& ch, const PowerSpec& spec, SecrecySolution& sol) {
  const double scale = 1 + spec.p;
  auto ed = eig_sym(sol.pair.q2);
  double l1 = ed.vals.size() > 0 ? std::max(0.0, ed.vals[0]) : 0.0;
  if (l1 <= 1e-9 * scale) {
    sol.mean = Vec::Zero(ch.nt());
    sol.mean_unique = true;
    return;
  }
  sol.mean = canonical_sign(std::sqrt(l1) * ed.vecs.col(0));
  double l2 = ed.vals.size() > 1 ? std::max(0.0, ed.vals[1]) : 0.0;
  sol.mean_unique = (l1 - l2) >= 1e-6 * l1;
  if (l2 > 1e-6 * l1 && sol.message.empty())
    sol.message = "carrier covariance not rank one; mean is its principal component";
}

SecrecySolution finish_solution(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                                const ScpOutcome& scp, const SolverConfig& cfg) {
  SecrecySolution sol;
  sol.scheme = scheme;
  sol.status = scp.status;
  sol.pair = scp.pair;
  sol.duals = scp.duals;
  sol.iterations = scp.iterations;
  sol.rate_trace = scp.rate_trace;
  sol.message = scp.message;
  if (scp.status == SolveStatus::infeasible || scp.status == SolveStatus::error) return sol;

  sol.objective_raw = scp.rate;
  sol.rate_nats = clamp_rate(scp.rate);
  const bool with_q2 = scheme != Scheme::plain;
  Mat grad1, grad2;
  scheme_grads(ch, scheme, sol.pair, grad1, grad2);
  sol.kkt = assemble_kkt(ch, spec, sol.pair, sol.duals, grad1, grad2, with_q2);
  DualSet repaired = polish_duals(ch, spec, sol.pair, grad1, grad2, with_q2);
  KktReport rep = assemble_kkt(ch, spec, sol.pair, repaired, grad1, grad2, with_q2);
  if (!sol.duals.valid || rep.max_residual < sol.kkt.max_residual) {
    sol.duals = repaired;
    sol.kkt = rep;
  }
  // The certificate decides the status in both directions: a converged claim
  // without verifying residuals demotes, a capped run whose final residuals
  // verify promotes.
  const bool certified =
      sol.duals.valid && sol.kkt.max_residual <= cfg.kkt_tol * (1 + spec.p);
  if (sol.status == SolveStatus::optimal && !certified)
    sol.status = SolveStatus::iteration_limit;
  else if (sol.status == SolveStatus::iteration_limit && certified)
    sol.status = SolveStatus::optimal;

  if (scheme == Scheme::mean)
    extract_mean(ch, spec, sol);
  else
    sol.mean = Vec();
  return sol;
}

bool better(const ScpOutcome& a, const ScpOutcome& b, double p) {
  // Highest rate, then the cheaper carrier.
  if (a.rate > b.rate + kRateTieTol * (1 + p)) return true;
  if (a.rate < b.rate - kRateTieTol * (1 + p)) return false;
  return a.pair.q2.trace() < b.pair.q2.trace();
}

// A zero budget forces both covariances to zero, so the solution is immediate:
// the rate is zero and the trace multiplier absorbs the objective gradient.
SecrecySolution zero_power_solution(const WiretapChannel& ch, const PowerSpec& spec,
                                    Scheme scheme) {
  SecrecySolution sol;
  sol.scheme = scheme;
  const int nt = ch.nt();
  for (const auto& row : energy_rows(ch, spec)) {
    bool ok = row.kind == BoundKind::min ? row.tilde <= 0 : row.tilde >= 0;
    if (!ok) {
      sol.status = SolveStatus::infeasible;
      sol.message = "energy bound unreachable with a zero power budget";
      return sol;
    }
  }
  sol.status = SolveStatus::optimal;
  sol.pair = zero_pair(nt);
  sol.rate_nats = 0;
  sol.objective_raw = 0;
  sol.iterations = 0;
  sol.rate_trace = {0.0};
  Mat grad1, grad2;
  scheme_grads(ch, scheme, sol.pair, grad1, grad2);
  double gamma = std::max(0.0, lambda_max(grad1));
  if (scheme != Scheme::plain) gamma = std::max(gamma, lambda_max(grad2));
  sol.duals.trace = gamma;
  sol.duals.eve = 0;
  sol.duals.bob = 0;
  sol.duals.m1 = psd_project(gamma * Mat::Identity(nt, nt) - grad1);
  if (scheme != Scheme::plain)
    sol.duals.m2 = psd_project(gamma * Mat::Identity(nt, nt) - grad2);
  sol.duals.valid = true;
  sol.kkt = assemble_kkt(ch, spec, sol.pair, sol.duals, grad1, grad2, scheme != Scheme::plain);
  if (scheme == Scheme::mean) {
    sol.mean = Vec::Zero(nt);
    sol.mean_unique = true;
  }
  return sol;
}

SecrecySolution run_restarted(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                              const StepFn& step, const RateFn& rate, bool with_q2,
                              const SolverConfig& cfg) {
  SecrecySolution fail;
  fail.scheme = scheme;
  if (spec.p < 0 || !std::isfinite(spec.p)) {
    fail.status = SolveStatus::error;
    fail.message = "power budget must be a finite nonnegative value";
    return fail;
  }
  if (spec.p == 0) return zero_power_solution(ch, spec, scheme);
  KktFn kkt = [&](const CovariancePair& pair, const DualSet& duals) {
    return scheme_kkt(ch, spec, scheme, pair, duals);
  };
  auto starts = build_starts(ch, spec, with_q2, cfg);
  ScpOutcome best;
  bool have = false;
  int total_iters = 0;
  for (const auto& s0 : starts) {
    ScpOutcome out = run_scp(step, rate, kkt, s0, cfg, spec.p);
    total_iters += out.iterations;
    if (out.status == SolveStatus::infeasible || out.status == SolveStatus::error) {
      if (!have) best = out;
      if (out.status == SolveStatus::infeasible) {
        best = out;
        break;  // the constraint set is shared; one verdict settles all starts
      }
      continue;
    }
    if (!have || better(out, best, spec.p)) {
      best = out;
      have = true;
    }
  }
  best.iterations = total_iters;
  return finish_solution(ch, spec, scheme, best, cfg);
}

}  // namespace

SecrecySolution solve_mimo_mean_scp(const WiretapChannel& ch, const PowerSpec& spec,
                                    const SolverConfig& cfg) {
  StepFn step = [&](const CovariancePair& lin, const CovariancePair& start) {
    return mean_step(ch, spec, lin.q1, true, start, cfg);
  };
  RateFn rate = [&](const CovariancePair& pair) { return rate_mean(ch, pair.q1); };
  return run_restarted(ch, spec, Scheme::mean, step, rate, true, cfg);
}

SecrecySolution solve_plain_gaussian(const WiretapChannel& ch, const PowerSpec& spec,
                                     const SolverConfig& cfg) {
  StepFn step = [&](const CovariancePair& lin, const CovariancePair& start) {
    return mean_step(ch, spec, lin.q1, false, start, cfg);
  };
  RateFn rate = [&](const CovariancePair& pair) { return rate_mean(ch, pair.q1); };
  return run_restarted(ch, spec, Scheme::plain, step, rate, false, cfg);
}

SecrecySolution solve_mimo_an_scp(const WiretapChannel& ch, const PowerSpec& spec,
                                  const SolverConfig& cfg) {
  StepFn step = [&](const CovariancePair& lin, const CovariancePair& start) {
    return an_step(ch, spec, lin, start, cfg);
  };
  RateFn rate = [&](const CovariancePair& pair) { return rate_an(ch, pair); };
  return run_restarted(ch, spec, Scheme::an, step, rate, true, cfg);
}

SecrecySolution solve_miso_mean(const WiretapChannel& ch, const PowerSpec& spec,
                                const SolverConfig& cfg) {
  SecrecySolution sol;
  sol.scheme = Scheme::mean;
  if (ch.nr() != 1 || ch.ne() != 1) {
    sol.status = SolveStatus::error;
    sol.message = "ratio transform needs single-antenna receivers";
    return sol;
  }
  if (spec.p < 0 || !std::isfinite(spec.p)) {
    sol.status = SolveStatus::error;
    sol.message = "power budget must be a finite nonnegative value";
    return sol;
  }
  if (spec.p == 0) return zero_power_solution(ch, spec, Scheme::mean);
  const int nt = ch.nt();
  const Mat gram_g = ch.gram_g();
  const Mat gram_h = ch.gram_h();
  const double gg = gram_g.trace();  // |g|^2

  Program prog;
  SymVar q1t = prog.sym_var(nt);
  SymVar q2t = prog.sym_var(nt);
  double t_lo = 0.25 / (1 + spec.p * std::max(lambda_max(gram_g), 1e-12));
  ScalarVar t = prog.scalar_var(std::min(t_lo, 0.25));
  prog.finish();

  prog.add_linear_objective(t, 1.0);
  prog.add_linear_objective(q1t, gram_h);

  Vec eq = prog.functional();
  Program::add_coeff(eq, t, 1.0);
  Program::add_trace(eq, q1t, gram_g);
  prog.add_constraint(eq, 1.0, Sense::eq, "ratio");

  Vec tr = prog.functional();
  Program::add_trace(tr, q1t, Mat::Identity(nt, nt));
  Program::add_trace(tr, q2t, Mat::Identity(nt, nt));
  Program::add_coeff(tr, t, -spec.p);
  prog.add_constraint(tr, 0.0, Sense::le, "power");

  for (const auto& row : energy_rows(ch, spec)) {
    Vec e = prog.functional();
    Program::add_trace(e, q1t, row.gram);
    Program::add_trace(e, q2t, row.gram);
    Program::add_coeff(e, t, -row.tilde);
    prog.add_constraint(e, 0.0, row.kind == BoundKind::min ? Sense::ge : Sense::le,
                        row.rcv == Receiver::eve ? "energy_eve" : "energy_bob");
  }

  double delta = std::min(1e-4, 0.1 / (1 + gg));
  prog.set(prog.start, q1t, delta * Mat::Identity(nt, nt));
  prog.set(prog.start, q2t, delta * Mat::Identity(nt, nt));
  prog.set(prog.start, t, 1 - delta * gg);

  auto res = convex::solve(prog, cfg.inner);
  if (res.status == convex::ConvexStatus::infeasible) {
    sol.status = SolveStatus::infeasible;
    sol.message = res.message;
    return sol;
  }
  if (res.status == convex::ConvexStatus::error) {
    sol.status = SolveStatus::error;
    sol.message = res.message;
    return sol;
  }
  double tv = prog.get(res.x, t);
  if (tv <= cfg.t_floor) {
    sol.status = SolveStatus::degenerate;
    sol.message = "ratio variable collapsed";
    return sol;
  }
  CovariancePair pair;
  pair.q1 = psd_project(prog.get(res.x, q1t) / tv);
  pair.q2 = psd_project(prog.get(res.x, q2t) / tv);

  // Certify with tangent steps from the mapped-back optimum; they reproduce it
  // and produce multipliers on the doubled-rate scale.
  StepFn step = [&](const CovariancePair& lin, const CovariancePair& start) {
    return mean_step(ch, spec, lin.q1, true, start, cfg);
  };
  RateFn rate_fn = [&](const CovariancePair& pr) { return rate_mean(ch, pr.q1); };
  KktFn kkt = [&](const CovariancePair& pr, const DualSet& duals) {
    return scheme_kkt(ch, spec, Scheme::mean, pr, duals);
  };
  double cc_rate = rate_mean(ch, pair.q1);
  // The mapped-back optimum usually certifies as it stands through the
  // rebuilt multipliers; the tangent polish only runs when it does not.
  {
    ScpOutcome direct;
    direct.status = res.status == convex::ConvexStatus::optimal ? SolveStatus::optimal
                                                                : SolveStatus::iteration_limit;
    direct.pair = pair;
    direct.rate = cc_rate;
    direct.rate_trace = {cc_rate};
    direct.iterations = 1;
    SecrecySolution ready = finish_solution(ch, spec, Scheme::mean, direct, cfg);
    if (ready.status == SolveStatus::optimal) return ready;
  }
  SolverConfig pcfg = cfg;
  pcfg.max_scp_iters = std::min(cfg.max_scp_iters, 30);
  ScpOutcome scp = run_scp(step, rate_fn, kkt, pair, pcfg, spec.p);
  bool usable = (scp.status == SolveStatus::optimal || scp.status == SolveStatus::iteration_limit) &&
                scp.rate >= cc_rate - 1e-7 * (1 + spec.p);
  if (!usable) {
    scp = ScpOutcome{};
    scp.status = res.status == convex::ConvexStatus::optimal ? SolveStatus::optimal
                                                             : SolveStatus::iteration_limit;
    scp.pair = pair;
    scp.rate = cc_rate;
    scp.duals.valid = false;
    scp.message = "certificate solve disagreed with the ratio optimum";
    scp.rate_trace = {cc_rate};
  }
  ++scp.iterations;  // the ratio-transform solve itself
  return finish_solution(ch, spec, Scheme::mean, scp, cfg);
}

namespace {

struct BetaEval {
  bool feasible = false;
  double rate = -kInf;
  CovariancePair pair;
  convex::ConvexStatus status = convex::ConvexStatus::error;
};

// Inner problem at a fixed cap beta on the eavesdropper power ratio
// (1 + g'Sg) / (1 + g'Q2 g); the objective is a lower bound on the doubled
// rate that is tight when the cap binds, so the scan's best true rate attains
// the optimum.
BetaEval an_inner(const WiretapChannel& ch, const PowerSpec& spec, double beta,
                  const SolverConfig& cfg) {
  BetaEval ev;
  const int nt = ch.nt();
  const Mat gram_g = ch.gram_g();
  const Mat gram_h = ch.gram_h();
  const double hh = gram_h.trace();

  Program prog;
  SymVar q1t = prog.sym_var(nt);
  SymVar q2t = prog.sym_var(nt);
  double t_lo = 0.25 / (beta * (1 + spec.p * std::max(lambda_max(gram_h), 1e-12)));
  ScalarVar t = prog.scalar_var(std::min(t_lo, 0.25));
  prog.finish();

  prog.add_linear_objective(t, 1.0);
  prog.add_linear_objective(q1t, gram_h);
  prog.add_linear_objective(q2t, gram_h);

  Vec eq = prog.functional();
  Program::add_coeff(eq, t, beta);
  Program::add_trace(eq, q2t, beta * gram_h);
  prog.add_constraint(eq, 1.0, Sense::eq, "prefix_ratio");

  Vec cap = prog.functional();
  Program::add_trace(cap, q1t, gram_g);
  Program::add_trace(cap, q2t, -(beta - 1) * gram_g);
  Program::add_coeff(cap, t, -(beta - 1));
  prog.add_constraint(cap, 0.0, Sense::le, "eve_ratio_cap");

  Vec tr = prog.functional();
  Program::add_trace(tr, q1t, Mat::Identity(nt, nt));
  Program::add_trace(tr, q2t, Mat::Identity(nt, nt));
  Program::add_coeff(tr, t, -spec.p);
  prog.add_constraint(tr, 0.0, Sense::le, "power");

  for (const auto& row : energy_rows(ch, spec)) {
    Vec e = prog.functional();
    Program::add_trace(e, q1t, row.gram);
    Program::add_trace(e, q2t, row.gram);
    Program::add_coeff(e, t, -row.tilde);
    prog.add_constraint(e, 0.0, row.kind == BoundKind::min ? Sense::ge : Sense::le,
                        row.rcv == Receiver::eve ? "energy_eve" : "energy_bob");
  }

  double d2 = std::min(1e-4, 0.2 / (beta * (1 + hh)));
  double tv0 = 1 / beta - d2 * hh;
  double d1 = std::min(d2, 0.25 * (beta - 1) * tv0 / std::max(gram_g.trace(), 1e-12));
  prog.set(prog.start, q1t, std::max(d1, 1e-12) * Mat::Identity(nt, nt));
  prog.set(prog.start, q2t, d2 * Mat::Identity(nt, nt));
  prog.set(prog.start, t, tv0);

  auto res = convex::solve(prog, cfg.inner);
  ev.status = res.status;
  if (res.status != convex::ConvexStatus::optimal &&
      res.status != convex::ConvexStatus::iteration_limit)
    return ev;
  double tv = prog.get(res.x, t);
  if (tv <= cfg.t_floor) return ev;
  ev.pair.q1 = psd_project(prog.get(res.x, q1t) / tv);
  ev.pair.q2 = psd_project(prog.get(res.x, q2t) / tv);
  ev.rate = rate_an(ch, ev.pair);
  ev.feasible = true;
  return ev;
}

// Gradients of the doubled weighted sum a1 r1 + a2 r2 under the given
// encoding order; the late user's covariance only enters through the sum.
void bc_grads(const WiretapChannel& ch, double a1, double a2, DpcOrder order,
              const CovariancePair& pair, Mat& grad1, Mat& grad2) {
  const bool first = order == DpcOrder::user1_first;
  Mat gs_late = first ? dbl_grad(ch.g, pair.s()) : dbl_grad(ch.h, pair.s());
  Mat gpen = first ? dbl_grad(ch.g, pair.q1) : dbl_grad(ch.h, pair.q2);
  Mat gclean = first ? dbl_grad(ch.h, pair.q1) : dbl_grad(ch.g, pair.q2);
  double w_clean = first ? a1 : a2;
  double w_late = first ? a2 : a1;
  Mat grad_clean = 0.5 * (w_clean * gclean + w_late * (gs_late - gpen));
  Mat grad_other = 0.5 * w_late * gs_late;
  grad1 = first ? grad_clean : grad_other;
  grad2 = first ? grad_other : grad_clean;
}

}  // namespace

SecrecySolution solve_miso_an(const WiretapChannel& ch, const PowerSpec& spec,
                              const SolverConfig& cfg) {
  SecrecySolution sol;
  sol.scheme = Scheme::an;
  if (ch.nr() != 1 || ch.ne() != 1) {
    sol.status = SolveStatus::error;
    sol.message = "level search needs single-antenna receivers";
    return sol;
  }
  if (spec.p < 0 || !std::isfinite(spec.p)) {
    sol.status = SolveStatus::error;
    sol.message = "power budget must be a finite nonnegative value";
    return sol;
  }
  if (spec.p == 0) return zero_power_solution(ch, spec, Scheme::an);
  const double range = spec.p * lambda_max(ch.gram_g());
  const double lo = 1 + 1e-9 * (1 + range);
  const double hi = 1 + range + 1e-9;

  int evals = 0;
  BetaEval best;
  double best_beta = hi;
  auto eval = [&](double beta) {
    ++evals;
    BetaEval ev = an_inner(ch, spec, std::max(beta, lo), cfg);
    if (ev.feasible && (!best.feasible || ev.rate > best.rate)) {
      best = ev;
      best_beta = beta;
    }
    return ev;
  };

  const int k = std::max(cfg.beta_grid, 4);
  double step = (hi - lo) / (k - 1);
  const bool warm = cfg.start && cfg.start->q1.rows() == ch.nt() &&
                    cfg.start->q2.rows() == ch.nt();
  if (warm) {
    // A carried start pins down the level's neighborhood; a coarse sentinel
    // net guards against the optimum having moved basins.
    const int kc = 7;
    step = (hi - lo) / (kc - 1);
    for (int i = 0; i < kc; ++i) eval(lo + step * i);
    double beta0 = 1 + (ch.gram_g() * cfg.start->q2).trace();
    eval(std::clamp(beta0, lo, hi));
  } else {
    for (int i = 0; i < k; ++i) eval(lo + step * i);
  }
  if (!best.feasible) {
    BetaEval probe = an_inner(ch, spec, hi, cfg);
    sol.status = probe.status == convex::ConvexStatus::infeasible ? SolveStatus::infeasible
                                                                  : SolveStatus::error;
    sol.message = "no feasible point along the level scan";
    return sol;
  }

  double a = std::max(lo, best_beta - step);
  double b = std::min(hi, best_beta + step);
  const double invphi = (std::sqrt(5.0) - 1) / 2;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  BetaEval f1 = eval(x1), f2 = eval(x2);
  while (b - a > cfg.beta_refine * (hi - lo)) {
    if ((f1.feasible ? f1.rate : -kInf) >= (f2.feasible ? f2.rate : -kInf)) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = eval(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = eval(x2);
    }
  }

  // Certify with tangent steps from the scan optimum; they polish the iterate
  // to stationarity and produce multipliers on the doubled-rate scale.
  StepFn step_fn = [&](const CovariancePair& lin, const CovariancePair& start) {
    return an_step(ch, spec, lin, start, cfg);
  };
  RateFn rate_fn = [&](const CovariancePair& pr) { return rate_an(ch, pr); };
  KktFn kkt = [&](const CovariancePair& pr, const DualSet& duals) {
    return scheme_kkt(ch, spec, Scheme::an, pr, duals);
  };
  double scan_rate = best.rate;
  SolverConfig pcfg = cfg;
  pcfg.max_scp_iters = std::min(cfg.max_scp_iters, 30);
  ScpOutcome scp = run_scp(step_fn, rate_fn, kkt, best.pair, pcfg, spec.p);
  bool usable = (scp.status == SolveStatus::optimal || scp.status == SolveStatus::iteration_limit) &&
                scp.rate >= scan_rate - 1e-7 * (1 + spec.p);
  if (!usable) {
    scp = ScpOutcome{};
    scp.status = SolveStatus::optimal;
    scp.pair = best.pair;
    scp.rate = scan_rate;
    scp.duals.valid = false;
    scp.message = "certificate solve disagreed with the level-scan optimum";
    scp.rate_trace = {scan_rate};
  }
  scp.iterations += evals;
  return finish_solution(ch, spec, Scheme::an, scp, cfg);
}

SecrecySolution solve_secrecy(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                              const SolverConfig& cfg) {
  const bool single = ch.nr() == 1 && ch.ne() == 1;
  switch (scheme) {
    case Scheme::mean:
      return single ? solve_miso_mean(ch, spec, cfg) : solve_mimo_mean_scp(ch, spec, cfg);
    case Scheme::an:
      return single ? solve_miso_an(ch, spec, cfg) : solve_mimo_an_scp(ch, spec, cfg);
    case Scheme::plain:
      return solve_plain_gaussian(ch, spec, cfg);
  }
  SecrecySolution sol;
  sol.status = SolveStatus::error;
  return sol;
}

SecrecySolution solve_bc_weighted(const WiretapChannel& ch, const PowerSpec& spec, double a1,
                                  double a2, DpcOrder order, const SolverConfig& cfg) {
  SecrecySolution bad;
  bad.scheme = Scheme::an;
  if (a1 < 0 || a2 < 0 || a1 + a2 <= 0) {
    bad.status = SolveStatus::error;
    bad.message = "weights must be nonnegative with a positive sum";
    return bad;
  }
  StepFn step = [&](const CovariancePair& lin, const CovariancePair& start) {
    return bc_step(ch, spec, a1, a2, order, lin, start, cfg);
  };
  RateFn rate = [&](const CovariancePair& pair) {
    RatePoint r = dpc_rates(ch, pair, order);
    return a1 * r.r1 + a2 * r.r2;
  };
  if (spec.p < 0 || !std::isfinite(spec.p)) {
    bad.status = SolveStatus::error;
    bad.message = "power budget must be a finite nonnegative value";
    return bad;
  }
  KktFn kkt = [&](const CovariancePair& pair, const DualSet& duals) {
    Mat g1, g2;
    bc_grads(ch, a1, a2, order, pair, g1, g2);
    return assemble_kkt(ch, spec, pair, duals, g1, g2, true).max_residual;
  };
  auto starts = build_starts(ch, spec, true, cfg);
  ScpOutcome best;
  bool have = false;
  int total = 0;
  for (const auto& s0 : starts) {
    ScpOutcome out = run_scp(step, rate, kkt, s0, cfg, spec.p);
    total += out.iterations;
    if (out.status == SolveStatus::infeasible || out.status == SolveStatus::error) {
      if (!have) best = out;
      if (out.status == SolveStatus::infeasible) {
        best = out;
        break;
      }
      continue;
    }
    if (!have || better(out, best, spec.p)) {
      best = out;
      have = true;
    }
  }
  best.iterations = total;

  SecrecySolution sol;
  sol.scheme = Scheme::an;
  sol.status = best.status;
  sol.pair = best.pair;
  sol.duals = best.duals;
  sol.iterations = best.iterations;
  sol.rate_trace = best.rate_trace;
  sol.message = best.message;
  if (best.status == SolveStatus::infeasible || best.status == SolveStatus::error) return sol;
  sol.objective_raw = best.rate;
  sol.rate_nats = clamp_rate(best.rate);

  Mat grad1, grad2;
  bc_grads(ch, a1, a2, order, sol.pair, grad1, grad2);
  sol.kkt = assemble_kkt(ch, spec, sol.pair, sol.duals, grad1, grad2, true);
  DualSet repaired = polish_duals(ch, spec, sol.pair, grad1, grad2, true);
  KktReport rep = assemble_kkt(ch, spec, sol.pair, repaired, grad1, grad2, true);
  if (!sol.duals.valid || rep.max_residual < sol.kkt.max_residual) {
    sol.duals = repaired;
    sol.kkt = rep;
  }
  const bool certified =
      sol.duals.valid && sol.kkt.max_residual <= cfg.kkt_tol * (1 + spec.p);
  if (sol.status == SolveStatus::optimal && !certified)
    sol.status = SolveStatus::iteration_limit;
  else if (sol.status == SolveStatus::iteration_limit && certified)
    sol.status = SolveStatus::optimal;
  sol.mean = Vec();
  return sol;
}

SecrecySolution solve_mean_under_total(const WiretapChannel& ch, const Mat& s2,
                                       const SolverConfig& cfg) {
  SecrecySolution sol;
  sol.scheme = Scheme::plain;
  const int nt = ch.nt();
  Mat s2s = symmetrize(s2);
  auto ed = eig_sym(s2s);
  double top = ed.vals.size() > 0 ? std::max(ed.vals[0], 0.0) : 0.0;
  int rank = 0;
  for (int i = 0; i < ed.vals.size(); ++i)
    if (ed.vals[i] > std::max(1e-10 * top, 1e-12)) ++rank;
  if (rank == 0) {
    sol.status = SolveStatus::optimal;
    sol.pair = zero_pair(nt);
    sol.rate_nats = 0;
    sol.objective_raw = 0;
    return sol;
  }
  // Work inside the range of the total covariance so both ordering cones keep
  // a strict interior.
  Mat u = ed.vecs.leftCols(rank);
  Vec lam = ed.vals.head(rank);
  WiretapChannel sub = WiretapChannel::make(ch.h * u, ch.g * u);
  const double scale = 1 + lam.sum();

  auto step = [&](const CovariancePair& lin, const CovariancePair& start) {
    Program prog;
    SymVar x = prog.sym_var(rank);
    prog.finish();
    convex::LogDetTerm bob;
    bob.weight = 1.0;
    bob.arg.s0 = Mat::Identity(sub.nr(), sub.nr());
    bob.arg.add_congruence(sub.h, x);
    prog.logdets.push_back(std::move(bob));
    prog.add_linear_objective(x, -dbl_grad(sub.g, lin.q1));
    MatrixAffine upper(Mat(lam.asDiagonal()));
    upper.add_var(x, -1.0);
    prog.cones.push_back(std::move(upper));
    Mat x0 = start.q1;
    // Pull the start strictly inside 0 < X < Lam.
    Mat shrunk = 0.98 * x0 + 0.01 * Mat(lam.asDiagonal());
    prog.set(prog.start, x, shrunk);
    auto res = convex::solve(prog, cfg.inner);
    StepResult out;
    out.status = res.status;
    out.message = res.message;
    out.stationarity = res.stationarity;
    if (res.x.size() > 0) {
      out.pair.q1 = psd_project(prog.get(res.x, x));
      out.pair.q2 = Mat::Zero(rank, rank);
      out.duals.m1 = res.cone_duals[0];
      out.duals.m2 = res.cone_duals[1];  // multiplier of the upper cone
      out.duals.valid = res.status == convex::ConvexStatus::optimal;
    }
    return out;
  };
  RateFn rate = [&](const CovariancePair& pair) { return rate_mean(sub, pair.q1); };
  KktFn kkt = [&](const CovariancePair& pair, const DualSet& duals) {
    if (duals.m1.size() == 0 || duals.m2.size() == 0) return kInf;
    Mat grad = 2 * grad_rate_mean(sub, pair.q1);
    double r = (grad + duals.m1 - duals.m2).norm();
    double cs = std::abs((duals.m1 * pair.q1).trace()) +
                std::abs((duals.m2 * (Mat(lam.asDiagonal()) - pair.q1)).trace());
    double dp = std::max(0.0, -min_eig(duals.m1)) + std::max(0.0, -min_eig(duals.m2));
    return std::max({r, cs, dp});
  };

  // The box 0 <= X <= Lam always has interior, but the rate landscape is not
  // concave; spread starts across the box and keep the best stationary point.
  ScpOutcome out;
  bool have = false;
  int total_iters = 0;
  for (double f : {0.5, 0.05, 0.95}) {
    CovariancePair init;
    init.q1 = f * Mat(lam.asDiagonal());
    init.q2 = Mat::Zero(rank, rank);
    ScpOutcome o = run_scp(step, rate, kkt, init, cfg, scale - 1);
    total_iters += o.iterations;
    if (o.status == SolveStatus::infeasible || o.status == SolveStatus::error) {
      if (!have) out = o;
      continue;
    }
    if (!have || better(o, out, scale - 1)) {
      out = o;
      have = true;
    }
  }
  out.iterations = total_iters;
  sol.status = out.status;
  sol.iterations = out.iterations;
  sol.rate_trace = out.rate_trace;
  sol.message = out.message;
  if (out.status == SolveStatus::infeasible || out.status == SolveStatus::error) return sol;
  sol.objective_raw = out.rate;
  sol.rate_nats = clamp_rate(out.rate);
  sol.pair.q1 = psd_project(u * out.pair.q1 * u.transpose());
  sol.pair.q2 = psd_project(s2s - sol.pair.q1);
  // Stationarity of the doubled rate between the two ordering cones.
  Mat grad = 2 * grad_rate_mean(sub, out.pair.q1);
  Mat lam_mat = Mat(lam.asDiagonal());
  auto box_kkt = [&](const DualSet& d) {
    KktReport rep;
    rep.stationarity1 = (grad + d.m1 - d.m2).norm();
    rep.comp_slack = std::abs((d.m1 * out.pair.q1).trace()) +
                     std::abs((d.m2 * (lam_mat - out.pair.q1)).trace());
    rep.dual_psd = std::max(0.0, -min_eig(d.m1)) + std::max(0.0, -min_eig(d.m2));
    rep.max_residual = std::max({rep.stationarity1, rep.comp_slack, rep.dual_psd});
    return rep;
  };
  if (out.duals.valid) {
    sol.kkt = box_kkt(out.duals);
    sol.duals = out.duals;
  }
  {
    // Rebuild the two face multipliers by least squares on the stationarity
    // block, mirroring the repair in finish_solution.
    DualSet rd;
    rd.valid = true;
    Mat u1 = active_face(out.pair.q1, 1e-6 * (1 + lam.sum()));
    Mat u2 = active_face(lam_mat - out.pair.q1, 1e-6 * (1 + lam.sum()));
    const int nn = rank * rank;
    const int a1 = static_cast<int>(u1.cols()), a2 = static_cast<int>(u2.cols());
    const int t1 = a1 * (a1 + 1) / 2, t2 = a2 * (a2 + 1) / 2;
    rd.m1 = Mat::Zero(rank, rank);
    rd.m2 = Mat::Zero(rank, rank);
    if (t1 + t2 > 0) {
      Mat sys = Mat::Zero(nn, t1 + t2);
      Mat gs = symmetrize(grad);
      Vec rhs = -Eigen::Map<const Vec>(gs.data(), nn);
      int c = 0;
      auto fill = [&](const Mat& u, int a, double sgn) {
        for (int k = 0; k < a; ++k)
          for (int l = k; l < a; ++l) {
            Mat b = sgn * Mat(symmetrize(u.col(k) * u.col(l).transpose()));
            sys.col(c++) = Eigen::Map<const Vec>(b.data(), nn);
          }
      };
      fill(u1, a1, 1.0);
      fill(u2, a2, -1.0);
      Vec cf = sys.colPivHouseholderQr().solve(rhs);
      c = 0;
      auto unpack_face = [&](const Mat& u, int a) {
        Mat m = Mat::Zero(rank, rank);
        for (int k = 0; k < a; ++k)
          for (int l = k; l < a; ++l)
            m += cf[c++] * Mat(symmetrize(u.col(k) * u.col(l).transpose()));
        return psd_project(m);
      };
      rd.m1 = unpack_face(u1, a1);
      rd.m2 = unpack_face(u2, a2);
      for (int round = 0; round < 6; ++round) {
        if (a1 > 0)
          rd.m1 = u1 * psd_project(Mat(u1.transpose() * (rd.m2 - gs) * u1)) * u1.transpose();
        if (a2 > 0)
          rd.m2 = u2 * psd_project(Mat(u2.transpose() * (rd.m1 + gs) * u2)) * u2.transpose();
      }
    }
    KktReport rep = box_kkt(rd);
    if (!sol.duals.valid || rep.max_residual < sol.kkt.max_residual) {
      sol.duals = rd;
      sol.kkt = rep;
    }
  }
  const bool certified = sol.duals.valid && sol.kkt.max_residual <= cfg.kkt_tol * scale;
  if (sol.status == SolveStatus::optimal && !certified)
    sol.status = SolveStatus::iteration_limit;
  else if (sol.status == SolveStatus::iteration_limit && certified)
    sol.status = SolveStatus::optimal;
  return sol;
}

}  // namespace wiretap
