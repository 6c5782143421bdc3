#pragma once

#include "wiretap/objectives.hpp"
#include "wiretap/solver/convex.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace wiretap {

enum class Scheme { mean, an, plain };
const char* scheme_name(Scheme s);

enum class SolveStatus { optimal, infeasible, degenerate, iteration_limit, error };
const char* status_name(SolveStatus s);

struct SolverConfig {
  // Stopping tolerances, each applied relative to the problem scale 1 + p.
  double kkt_tol = 1e-6;
  double scp_tol = 1e-7;
  double feas_tol = 1e-8;
  int max_scp_iters = 150;
  int restarts = 3;  // random restarts added to the two deterministic starts
  std::uint64_t seed = 1;
  int beta_grid = 64;
  double beta_refine = 1e-4;  // golden-section window, as a fraction of the range
  double t_floor = 1e-9;  // ratio variable below this reports degenerate
  // When set, replaces the deterministic start (sweeps warm-start from the
  // previous grid point through this).
  std::optional<CovariancePair> start;
  convex::ConvexConfig inner;
};

// Multipliers of the doubled-rate formulation (mean/an) or the half-weighted
// broadcast formulation; trace/energy duals are the scalar constraint prices.
struct DualSet {
  Mat m1;  // for q1 PSD
  Mat m2;  // for q2 PSD (zero-size when the scheme has no q2 variable)
  double trace = 0;
  double eve = 0;
  double bob = 0;
  bool valid = false;
};

struct KktReport {
  double stationarity1 = 0;
  double stationarity2 = 0;
  double comp_slack = 0;
  double primal = 0;
  double dual_psd = 0;
  double max_residual = 0;
};

struct SecrecySolution {
  SolveStatus status = SolveStatus::error;
  Scheme scheme = Scheme::mean;
  double rate_nats = 0;      // clamped at zero for reporting
  double objective_raw = 0;  // unclamped secrecy rate in nats
  CovariancePair pair;
  Vec mean;  // zero-size when the scheme carries no mean
  bool mean_unique = true;
  DualSet duals;
  KktReport kkt;
  int iterations = 0;
  std::vector<double> rate_trace;  // accepted objective per outer iteration
  std::string message;
};

// Ratio-transform path; requires single-antenna receivers.
SecrecySolution solve_miso_mean(const WiretapChannel& ch, const PowerSpec& spec,
                                const SolverConfig& cfg = {});

// Eavesdropper-level line search with an inner convex solve per level.
SecrecySolution solve_miso_an(const WiretapChannel& ch, const PowerSpec& spec,
                              const SolverConfig& cfg = {});

// Successive convex surrogate path, any antenna counts.
SecrecySolution solve_mimo_mean_scp(const WiretapChannel& ch, const PowerSpec& spec,
                                    const SolverConfig& cfg = {});
SecrecySolution solve_mimo_an_scp(const WiretapChannel& ch, const PowerSpec& spec,
                                  const SolverConfig& cfg = {});

// q2 pinned to zero: the transmitted signal alone meets every energy bound.
SecrecySolution solve_plain_gaussian(const WiretapChannel& ch, const PowerSpec& spec,
                                     const SolverConfig& cfg = {});

// Dispatch: ratio/line-search paths for single-antenna receivers, surrogates otherwise.
SecrecySolution solve_secrecy(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                              const SolverConfig& cfg = {});

// Weighted-sum broadcast solve, a1 * R1 + a2 * R2 at the given encoding order.
SecrecySolution solve_bc_weighted(const WiretapChannel& ch, const PowerSpec& spec, double a1,
                                  double a2, DpcOrder order, const SolverConfig& cfg = {});

// maximize rate_mean(q1) over 0 <= q1 <= s2 (fixed total covariance).
SecrecySolution solve_mean_under_total(const WiretapChannel& ch, const Mat& s2,
                                       const SolverConfig& cfg = {});

}  // namespace wiretap
