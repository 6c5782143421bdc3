#include "wiretap/solver/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace wiretap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoeffEps = 1e-12;
constexpr double kGridSlack = 1e-9;

struct ScanRow {
  bool at_eve = false;
  bool is_min = false;
  double tilde = 0;
};

std::vector<ScanRow> scan_rows(const PowerSpec& spec) {
  std::vector<ScanRow> rows;
  if (spec.eve) rows.push_back({true, spec.eve->kind == BoundKind::min, spec.eve->tilde});
  if (spec.bob) rows.push_back({false, spec.bob->kind == BoundKind::min, spec.bob->tilde});
  return rows;
}

// Clip the feasible interval of a scalar power x whose delivery adds c*x on
// top of base; rhs is the remaining requirement tilde - base.
bool clip(double c, double rhs, bool is_min, double& lo, double& hi) {
  if (is_min) {
    if (c <= kCoeffEps) return rhs <= kGridSlack * (1 + std::abs(rhs));
    lo = std::max(lo, rhs / c);
  } else {
    if (c <= kCoeffEps) return rhs >= -kGridSlack * (1 + std::abs(rhs));
    hi = std::min(hi, rhs / c);
  }
  return true;
}

SecrecySolution finish(const WiretapChannel& ch, Scheme scheme, bool found, double best,
                       const CovariancePair& pair, long long evals) {
  SecrecySolution sol;
  sol.scheme = scheme;
  sol.iterations = static_cast<int>(std::min<long long>(evals, std::numeric_limits<int>::max()));
  if (!found) {
    sol.status = SolveStatus::infeasible;
    sol.pair = zero_pair(ch.nt());
    sol.message = "no feasible point on the scan grid";
    return sol;
  }
  sol.status = SolveStatus::optimal;
  sol.objective_raw = best;
  sol.rate_nats = clamp_rate(best);
  sol.pair = pair;
  return sol;
}

SecrecySolution scalar_scan(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                            int res) {
  const double p = spec.p;
  const double hh = ch.gram_h()(0, 0);
  const double gg = ch.gram_g()(0, 0);
  auto rows = scan_rows(spec);
  bool found = false;
  double best = -kInf, bq1 = 0, bq2 = 0;
  long long evals = 0;
  for (int i = 0; i <= res; ++i) {
    double q1 = p * i / res;
    const int jmax = scheme == Scheme::plain ? 0 : res;
    for (int j = 0; j <= jmax; ++j) {
      double q2 = scheme == Scheme::plain ? 0.0 : (p - q1) * j / res;
      ++evals;
      double de = gg * (q1 + q2), db = hh * (q1 + q2);
      bool ok = true;
      for (const auto& r : rows) {
        double d = r.at_eve ? de : db;
        double slack = kGridSlack * (1 + std::abs(r.tilde));
        ok = ok && (r.is_min ? d >= r.tilde - slack : d <= r.tilde + slack);
      }
      if (!ok) continue;
      double rate = scheme == Scheme::an
                        ? 0.5 * (std::log1p(hh * (q1 + q2)) - std::log1p(hh * q2) +
                                 std::log1p(gg * q2) - std::log1p(gg * (q1 + q2)))
                        : 0.5 * (std::log1p(hh * q1) - std::log1p(gg * q1));
      if (!found || rate > best) {
        found = true;
        best = rate;
        bq1 = q1;
        bq2 = q2;
      }
    }
  }
  CovariancePair pair;
  pair.q1 = bq1 * Mat::Identity(1, 1);
  pair.q2 = bq2 * Mat::Identity(1, 1);
  return finish(ch, scheme, found, best, pair, evals);
}

struct AngleForms {
  std::vector<double> fh, fg;  // (h u)^2 and (g u)^2 per direction
};

AngleForms angle_forms(const WiretapChannel& ch, int res) {
  AngleForms f;
  f.fh.resize(res);
  f.fg.resize(res);
  const double h0 = ch.h(0, 0), h1 = ch.h(0, 1);
  const double g0 = ch.g(0, 0), g1 = ch.g(0, 1);
  for (int i = 0; i < res; ++i) {
    double th = M_PI * i / res;
    double c = std::cos(th), s = std::sin(th);
    double dh = h0 * c + h1 * s;
    double dg = g0 * c + g1 * s;
    f.fh[i] = dh * dh;
    f.fg[i] = dg * dg;
  }
  return f;
}

Mat beam(double th, double power) {
  Vec u(2);
  u << std::cos(th), std::sin(th);
  return power * u * u.transpose();
}

// Message beam scan; a separate carrier beam only has to repair feasibility,
// so each candidate needs one compatible carrier direction with a nonempty
// power interval.
SecrecySolution beam_scan_mean(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                               int res) {
  const double p = spec.p;
  auto rows = scan_rows(spec);
  AngleForms f = angle_forms(ch, res);
  bool found = false;
  double best = -kInf, bp1 = 0, bp2 = 0;
  int bi1 = 0, bi2 = 0;
  long long evals = 0;
  for (int i1 = 0; i1 < res; ++i1) {
    for (int k = 0; k <= res; ++k) {
      double p1 = p * k / res;
      ++evals;
      double rate = 0.5 * (std::log1p(f.fh[i1] * p1) - std::log1p(f.fg[i1] * p1));
      if (found && rate <= best) continue;
      double base_e = f.fg[i1] * p1, base_b = f.fh[i1] * p1;
      bool feasible = false;
      double p2 = 0;
      int i2 = 0;
      if (scheme == Scheme::plain) {
        feasible = true;
        for (const auto& r : rows) {
          double d = r.at_eve ? base_e : base_b;
          double slack = kGridSlack * (1 + std::abs(r.tilde));
          feasible = feasible && (r.is_min ? d >= r.tilde - slack : d <= r.tilde + slack);
        }
      } else {
        for (int j = 0; j < res && !feasible; ++j) {
          double lo = 0, hi = p - p1;
          bool ok = true;
          for (const auto& r : rows) {
            double c = r.at_eve ? f.fg[j] : f.fh[j];
            double base = r.at_eve ? base_e : base_b;
            ok = ok && clip(c, r.tilde - base, r.is_min, lo, hi);
          }
          if (ok && lo <= hi + kGridSlack * (1 + p)) {
            feasible = true;
            p2 = std::max(lo, 0.0);
            i2 = j;
          }
        }
      }
      if (!feasible) continue;
      found = true;
      best = rate;
      bp1 = p1;
      bp2 = p2;
      bi1 = i1;
      bi2 = i2;
    }
  }
  CovariancePair pair;
  pair.q1 = beam(M_PI * bi1 / res, bp1);
  pair.q2 = scheme == Scheme::plain ? Mat::Zero(2, 2) : beam(M_PI * bi2 / res, bp2);
  return finish(ch, scheme, found, best, pair, evals);
}

// Two-beam scan for the noise scheme. For fixed directions and carrier power
// the rate is monotone in the message power, so only the endpoints of its
// feasible interval matter.
SecrecySolution beam_scan_an(const WiretapChannel& ch, const PowerSpec& spec, int res) {
  const double p = spec.p;
  auto rows = scan_rows(spec);
  AngleForms f = angle_forms(ch, res);
  bool found = false;
  double best = -kInf, bt1 = 0, bt2 = 0;
  int bi1 = 0, bi2 = 0;
  long long evals = 0;
  for (int i1 = 0; i1 < res; ++i1) {
    for (int i2 = 0; i2 < res; ++i2) {
      for (int k = 0; k <= res; ++k) {
        double t2 = p * k / res;
        ++evals;
        double a2 = f.fh[i2] * t2, b2 = f.fg[i2] * t2;
        double lo = 0, hi = p - t2;
        bool ok = true;
        for (const auto& r : rows) {
          double c = r.at_eve ? f.fg[i1] : f.fh[i1];
          double base = r.at_eve ? b2 : a2;
          ok = ok && clip(c, r.tilde - base, r.is_min, lo, hi);
        }
        if (!ok || lo > hi + kGridSlack * (1 + p)) continue;
        for (double t1 : {std::max(lo, 0.0), hi}) {
          double a1 = f.fh[i1] * t1, b1 = f.fg[i1] * t1;
          double rate = 0.5 * (std::log1p(a1 + a2) - std::log1p(a2) + std::log1p(b2) -
                               std::log1p(b1 + b2));
          if (!found || rate > best) {
            found = true;
            best = rate;
            bt1 = t1;
            bt2 = t2;
            bi1 = i1;
            bi2 = i2;
          }
        }
      }
    }
  }
  CovariancePair pair;
  pair.q1 = beam(M_PI * bi1 / res, bt1);
  pair.q2 = beam(M_PI * bi2 / res, bt2);
  return finish(ch, Scheme::an, found, best, pair, evals);
}

}  // namespace

SecrecySolution oracle_grid(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                            int resolution) {
  const int res = std::max(resolution, 100);
  if (ch.nt() == 1) return scalar_scan(ch, spec, scheme, res);
  if (ch.nt() == 2 && ch.nr() == 1 && ch.ne() == 1) {
    return scheme == Scheme::an ? beam_scan_an(ch, spec, res)
                                : beam_scan_mean(ch, spec, scheme, res);
  }
  throw std::invalid_argument(
      "oracle_grid: scan families cover single-antenna links and two-antenna transmitters with "
      "single-antenna receivers only");
}

}  // namespace wiretap
