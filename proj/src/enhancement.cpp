#include "wiretap/enhancement.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace wiretap {

namespace {

// Residual reported when a log-ratio side fails to be positive definite.
constexpr double kBadRatio = 1.0;

Mat inv_pd(const Mat& m, const char* ctx = "enhancement") {
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(ctx) + ": matrix is not positive definite");
  return symmetrize(llt.solve(Mat::Identity(m.rows(), m.cols())));
}

double try_ld(const Mat& m) {
  try {
    return logdet_psd(symmetrize(m));
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

double eq_gap(const Mat& lhs, const Mat& rhs) { return (lhs - rhs).norm() / (1 + rhs.norm()); }

// low <= high in the semidefinite order
double below_gap(const Mat& low, const Mat& high) {
  return std::max(0.0, -min_eig(high - low)) / (1 + high.norm());
}

double psd_gap(const Mat& m) { return std::max(0.0, -min_eig(m)) / (1 + m.norm()); }

// slack * mult = 0, the complementarity form of the preservation lemmas
double product_gap(const Mat& slack, const Mat& mult) {
  return (slack * mult).norm() / (1 + slack.norm() * mult.norm());
}

double ratio_gap(double lhs, double rhs) {
  if (!std::isfinite(lhs) || !std::isfinite(rhs)) return kBadRatio;
  return std::abs(lhs - rhs) / (1 + std::abs(rhs));
}

void require_square(const Mat& m, int n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

void EnhancementReport::add(std::string name, double residual, double tol) {
  CheckResult c;
  c.name = std::move(name);
  c.residual = std::isfinite(residual) ? residual : std::numeric_limits<double>::max();
  c.tol = tol;
  c.pass = c.residual <= tol;
  if (!c.pass) all_pass = false;
  checks.push_back(std::move(c));
}

const CheckResult* EnhancementReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

AlignedMultipliers aligned_multipliers(const DualSet& duals, const PowerSpec& spec,
                                       const AlignedChannel& al, int nt) {
  AlignedMultipliers am;
  am.m1 = duals.m1.size() > 0 ? symmetrize(duals.m1) : Mat::Zero(nt, nt);
  am.m2 = duals.m2.size() > 0 ? symmetrize(duals.m2) : Mat::Zero(nt, nt);
  Mat price = duals.trace * Mat::Identity(nt, nt);
  if (spec.eve) {
    double sgn = spec.eve->kind == BoundKind::min ? 1.0 : -1.0;
    price -= sgn * duals.eve * inv_pd(al.n2, "aligned_multipliers");
  }
  if (spec.bob) {
    double sgn = spec.bob->kind == BoundKind::min ? 1.0 : -1.0;
    price -= sgn * duals.bob * inv_pd(al.n1, "aligned_multipliers");
  }
  am.m4 = psd_project(price);
  am.m3 = symmetrize(am.m4 - price);
  return am;
}

Mat build_enhanced_mean(const Mat&, const Mat& m1, const AlignedChannel& al) {
  Mat inner = inv_pd(al.n1, "build_enhanced_mean") + symmetrize(m1);
  return inv_pd(inner, "build_enhanced_mean");
}

EnhancementReport verify_mean_scheme(const SecrecySolution& sol, const PowerSpec& spec,
                                     const AlignedChannel& al, const Mat& s2, double tol) {
  EnhancementReport rep;
  if (!sol.duals.valid) {
    rep.add("duals_present", 1.0, 0.0);
    return rep;
  }
  const int n = static_cast<int>(al.n1.rows());
  require_square(s2, n, "verify_mean_scheme");
  require_square(sol.pair.q1, n, "verify_mean_scheme");
  AlignedMultipliers am = aligned_multipliers(sol.duals, spec, al, n);
  const Mat q1 = symmetrize(sol.pair.q1);
  // The carrier cone is absent in a no-carrier solve; its multiplier is then
  // pinned by the budget prices alone.
  const Mat m2 = sol.duals.m2.size() > 0 ? am.m2 : Mat(am.m4 - am.m3);
  const Mat en = build_enhanced_mean(q1, am.m1, al);
  rep.n_tilde = en;

  rep.add("enhanced_psd", psd_gap(en), tol);
  rep.add("enhanced_below_bob", below_gap(en, al.n1), tol);
  rep.add("enhanced_below_eve", below_gap(en, al.n2), tol);
  rep.add("defining_equality",
          eq_gap(inv_pd(q1 + al.n2, "verify_mean_scheme") + m2,
                 inv_pd(q1 + al.n1, "verify_mean_scheme") + am.m1),
          tol);
  rep.add("bob_rate_preserved",
          ratio_gap(try_ld(q1 + en) - try_ld(en), try_ld(q1 + al.n1) - try_ld(al.n1)), tol);
  rep.add("cap_slack_complementarity", product_gap(s2 - q1, m2), tol);
  rep.add("eve_rate_preserved",
          ratio_gap(try_ld(s2 + en) - try_ld(s2 + al.n2), try_ld(q1 + en) - try_ld(q1 + al.n2)),
          tol);
  double enhanced = 0.5 * (try_ld(s2 + en) - try_ld(en)) -
                    0.5 * (try_ld(s2 + al.n2) - try_ld(al.n2));
  double achieved = 0.5 * (try_ld(q1 + al.n1) - try_ld(al.n1)) -
                    0.5 * (try_ld(q1 + al.n2) - try_ld(al.n2));
  rep.add("capacity_match", ratio_gap(enhanced, achieved), tol);
  return rep;
}

EnhancementReport verify_an_scheme(const SecrecySolution& sol, const PowerSpec& spec,
                                   const AlignedChannel& al, const Mat& s2, double tol) {
  EnhancementReport rep;
  if (!sol.duals.valid) {
    rep.add("duals_present", 1.0, 0.0);
    return rep;
  }
  const int n = static_cast<int>(al.n1.rows());
  require_square(s2, n, "verify_an_scheme");
  require_square(sol.pair.q1, n, "verify_an_scheme");
  require_square(sol.pair.q2, n, "verify_an_scheme");
  AlignedMultipliers am = aligned_multipliers(sol.duals, spec, al, n);
  const Mat q1 = symmetrize(sol.pair.q1);
  const Mat q2 = symmetrize(sol.pair.q2);
  const Mat en =
      symmetrize(inv_pd(inv_pd(q2 + al.n1, "verify_an_scheme") + am.m1, "verify_an_scheme") - q2);
  rep.n_tilde = en;

  rep.add("enhanced_psd", psd_gap(en), tol);
  rep.add("enhanced_below_bob", below_gap(en, al.n1), tol);
  rep.add("enhanced_below_eve", below_gap(en, al.n2), tol);
  rep.add("defining_equality",
          eq_gap(inv_pd(q2 + al.n2, "verify_an_scheme") + am.m2,
                 inv_pd(q2 + al.n1, "verify_an_scheme") + am.m1),
          tol);
  rep.add("cap_fully_used", (s2 - q1 - q2).norm() / (1 + s2.norm()), tol);
  rep.add("cap_slack_complementarity", product_gap(s2 - q2, am.m1), tol);
  rep.add("eve_rate_preserved",
          ratio_gap(try_ld(q2 + en) - try_ld(en), try_ld(q2 + al.n2) - try_ld(al.n2)), tol);
  rep.add("bob_rate_preserved",
          ratio_gap(try_ld(s2 + en) - try_ld(q2 + en), try_ld(s2 + al.n1) - try_ld(q2 + al.n1)),
          tol);
  double enhanced = 0.5 * (try_ld(s2 + en) - try_ld(en)) -
                    0.5 * (try_ld(s2 + al.n2) - try_ld(al.n2));
  double achieved = 0.5 * (try_ld(q1 + q2 + al.n1) - try_ld(q2 + al.n1)) -
                    0.5 * (try_ld(q1 + q2 + al.n2) - try_ld(q2 + al.n2));
  rep.add("capacity_match", ratio_gap(enhanced, achieved), tol);
  return rep;
}

EnhancementReport verify_bc_dpc(const SecrecySolution& sol, const PowerSpec& spec,
                                const AlignedChannel& al, const Mat& s2, double a1, double a2,
                                double tol) {
  if (!(a1 > 0) || !(a1 <= a2))
    throw std::invalid_argument("verify_bc_dpc: weights must satisfy 0 < a1 <= a2");
  EnhancementReport rep;
  if (!sol.duals.valid) {
    rep.add("duals_present", 1.0, 0.0);
    return rep;
  }
  const int n = static_cast<int>(al.n1.rows());
  require_square(s2, n, "verify_bc_dpc");
  require_square(sol.pair.q1, n, "verify_bc_dpc");
  require_square(sol.pair.q2, n, "verify_bc_dpc");
  AlignedMultipliers am = aligned_multipliers(sol.duals, spec, al, n);
  const Mat q1 = symmetrize(sol.pair.q1);
  const Mat q2 = symmetrize(sol.pair.q2);
  const Mat r1 = inv_pd(q1 + al.n1, "verify_bc_dpc") + (2.0 / a1) * am.m1;
  const Mat r2 = inv_pd(q1 + al.n2, "verify_bc_dpc") + (2.0 / a2) * am.m2;
  const Mat en1 = symmetrize(inv_pd(r1, "verify_bc_dpc") - q1);
  const Mat en2 = symmetrize(inv_pd(r2, "verify_bc_dpc") - q1);
  rep.n_tilde_1 = en1;
  rep.n_tilde_2 = en2;

  rep.add("weighted_resolvent_match", eq_gap(r1, (a2 / a1) * r2), tol);
  rep.add("degraded_order", below_gap(en1, en2), tol);
  rep.add("enhanced_below_bob", below_gap(en1, al.n1), tol);
  rep.add("enhanced_below_eve", below_gap(en2, al.n2), tol);
  rep.add("bob_rate_preserved",
          ratio_gap(try_ld(q1 + en1) - try_ld(en1), try_ld(q1 + al.n1) - try_ld(al.n1)), tol);
  rep.add("eve_rate_preserved",
          ratio_gap(try_ld(q1 + q2 + en2) - try_ld(q1 + en2),
                    try_ld(q1 + q2 + al.n2) - try_ld(q1 + al.n2)),
          tol);
  rep.add("cap_fully_used", (s2 - q1 - q2).norm() / (1 + s2.norm()), tol);
  return rep;
}

KktReport kkt_residuals(const SecrecySolution& sol, const PowerSpec& spec,
                        const AlignedChannel& al) {
  KktReport rep;
  const int n = static_cast<int>(al.n1.rows());
  AlignedMultipliers am = aligned_multipliers(sol.duals, spec, al, n);
  const Mat q1 = symmetrize(sol.pair.q1);
  const Mat q2 = sol.pair.q2.size() > 0 ? symmetrize(sol.pair.q2) : Mat::Zero(n, n);
  const bool with_q2 = sol.scheme != Scheme::plain;

  Mat g1, g2;
  if (sol.scheme == Scheme::an) {
    Mat isum1 = inv_pd(q1 + q2 + al.n1, "kkt_residuals");
    Mat isum2 = inv_pd(q1 + q2 + al.n2, "kkt_residuals");
    g1 = isum1 - isum2;
    g2 = g1 - inv_pd(q2 + al.n1, "kkt_residuals") + inv_pd(q2 + al.n2, "kkt_residuals");
  } else {
    g1 = inv_pd(q1 + al.n1, "kkt_residuals") - inv_pd(q1 + al.n2, "kkt_residuals");
    g2 = Mat::Zero(n, n);
  }

  rep.stationarity1 = (g1 + am.m1 + am.m3 - am.m4).norm();
  rep.stationarity2 = with_q2 ? (g2 + am.m2 + am.m3 - am.m4).norm() : 0.0;
  rep.comp_slack = std::abs((q1 * am.m1).trace()) + std::abs((q2 * am.m2).trace());
  rep.primal = std::max(0.0, -min_eig(q1)) + std::max(0.0, -min_eig(q2));
  rep.dual_psd = std::max(0.0, -min_eig(am.m1)) + std::max(0.0, -min_eig(am.m2)) +
                 std::max(0.0, -min_eig(am.m3)) + std::max(0.0, -min_eig(am.m4));
  rep.max_residual = std::max(
      {rep.stationarity1, rep.stationarity2, rep.comp_slack, rep.primal, rep.dual_psd});
  return rep;
}

}  // namespace wiretap
