#pragma once

#include "wiretap/solver/secrecy.hpp"

#include <string>
#include <vector>

namespace wiretap {

// Multipliers of the double-sided-correlation form, mapped from the scalar
// trace/energy prices: m4 - m3 equals the price-weighted Gram combination.
struct AlignedMultipliers {
  Mat m1;
  Mat m2;
  Mat m3;
  Mat m4;
};

AlignedMultipliers aligned_multipliers(const DualSet& duals, const PowerSpec& spec,
                                       const AlignedChannel& al, int nt);

// Enhanced noise covariance (n1^-1 + m1)^-1 for a zero-prefix optimum.
Mat build_enhanced_mean(const Mat& q1, const Mat& m1, const AlignedChannel& al);

struct CheckResult {
  std::string name;
  double residual = 0;
  double tol = 0;
  bool pass = false;
};

struct EnhancementReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
  Mat n_tilde;
  Mat n_tilde_1;  // broadcast only
  Mat n_tilde_2;

  void add(std::string name, double residual, double tol);
  const CheckResult* find(const std::string& name) const;
};

// Degradedness + rate-preservation certificate for a mean-scheme optimum.
EnhancementReport verify_mean_scheme(const SecrecySolution& sol, const PowerSpec& spec,
                                     const AlignedChannel& al, const Mat& s2, double tol = 1e-5);

// Same certificate with the prefix covariance in the enhanced-channel role.
EnhancementReport verify_an_scheme(const SecrecySolution& sol, const PowerSpec& spec,
                                   const AlignedChannel& al, const Mat& s2, double tol = 1e-5);

// Two-sided enhancement certificate for a weighted broadcast optimum (a1 <= a2).
EnhancementReport verify_bc_dpc(const SecrecySolution& sol, const PowerSpec& spec,
                                const AlignedChannel& al, const Mat& s2, double a1, double a2,
                                double tol = 1e-5);

// Stationarity and complementary-slackness residuals in the aligned variables.
KktReport kkt_residuals(const SecrecySolution& sol, const PowerSpec& spec,
                        const AlignedChannel& al);

}  // namespace wiretap
