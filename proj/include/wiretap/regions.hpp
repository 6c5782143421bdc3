#pragma once

#include "wiretap/solver/oracle.hpp"
#include "wiretap/solver/secrecy.hpp"

namespace wiretap {

struct RegionSample {
  double e_level = 0;  // raw received-energy level (noise included)
  SecrecySolution sol;
};

struct RegionCurve {
  Scheme scheme = Scheme::mean;
  Receiver swept = Receiver::eve;
  BoundKind kind = BoundKind::min;
  std::vector<RegionSample> samples;
  bool monotone = true;  // non-increasing rate over feasible min-sweep points
};

// Sweep one receiver-energy bound over e_grid; warm starts between points when
// running sequentially, cold deterministic batches when WIRETAP_OPT_THREADS > 1.
RegionCurve sweep_energy(const WiretapChannel& ch, double p, const std::vector<double>& e_grid,
                         Scheme scheme, Receiver r, BoundKind kind, const SolverConfig& cfg = {});

// Minimum-energy sweep at the eavesdropper.
RegionCurve sweep_min_energy(const WiretapChannel& ch, double p, const std::vector<double>& e_grid,
                             Scheme scheme, const SolverConfig& cfg = {});

// Both receivers carry minimum-energy floors e1 (eve) and e2 (bob).
SecrecySolution solve_dual_min(const WiretapChannel& ch, double p, double e1, double e2,
                               Scheme scheme, const SolverConfig& cfg = {});

// Both receivers carry maximum-energy caps; zero-mean transmission is optimal.
SecrecySolution solve_max_constraints(const WiretapChannel& ch, double p, double e1_cap,
                                      double e2_cap, const SolverConfig& cfg = {});

struct WeightedPoint {
  double a1 = 0;
  double a2 = 0;
  DpcOrder order = DpcOrder::user1_first;
  SolveStatus status = SolveStatus::error;
  RatePoint rates;
  CovariancePair pair;
};

// Weighted-sum samples of the dirty-paper broadcast region under floors e1/e2
// (pass a level <= noise power to leave a side unconstrained).
std::vector<WeightedPoint> bc_dpc_region(const WiretapChannel& ch, double p, double e1, double e2,
                                         int weight_count = 33, const SolverConfig& cfg = {});

struct BccmCorner {
  SolveStatus status = SolveStatus::error;
  SecrecySolution r1_solve;           // secrecy-rate-maximal corner
  RatePoint rates;                    // (r1, r2) at the corner, unclamped
  double decomposition_residual = 0;  // r2 vs r1 + log-det offset identity
  double r2_standalone = 0;           // open-rate maximum at the same total covariance
};

// Corner of the confidential-plus-open-message region; the region is a
// rectangle, so the corner attains both single-message maxima at once.
BccmCorner bccm_corner(const WiretapChannel& ch, double p, double e1, double e2,
                       const SolverConfig& cfg = {});

}  // namespace wiretap
