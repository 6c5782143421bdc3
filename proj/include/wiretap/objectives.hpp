#pragma once

#include "wiretap/channel.hpp"

namespace wiretap {

// Message covariance q1 plus the non-message covariance q2 (mean power or
// artificial noise). Both symmetric PSD, nt x nt.
struct CovariancePair {
  Mat q1;
  Mat q2;
  Mat s() const { return q1 + q2; }
};

CovariancePair zero_pair(int nt);

struct RatePoint {
  double r1 = 0;
  double r2 = 0;
};

inline double clamp_rate(double r) { return r < 0 ? 0 : r; }

// All rates are in nats and returned unclamped; clamping happens at reporting.

// Secrecy rate of a zero-prefix scheme carrying q1 alone.
double rate_mean(const WiretapChannel& ch, const Mat& q1);

// Secrecy rate with artificial-noise prefix q2; equals rate_mean when q2 = 0.
double rate_an(const WiretapChannel& ch, const CovariancePair& pair);

// Total received power at one receiver, noise floor included.
double received_power(const WiretapChannel& ch, const CovariancePair& pair, Receiver r);

Mat grad_rate_mean(const WiretapChannel& ch, const Mat& q1);
Mat grad_rate_an_q1(const WiretapChannel& ch, const CovariancePair& pair);
Mat grad_rate_an_q2(const WiretapChannel& ch, const CovariancePair& pair);

enum class DpcOrder { user1_first = 1, user2_first = 2 };

// Dirty-paper region corner rates for the two-user broadcast channel.
RatePoint dpc_rates(const WiretapChannel& ch, const CovariancePair& pair, DpcOrder order);

// Broadcast rates with confidential messages to both users: r1 is the layer-1
// secrecy rate, r2 the swapped-role rate of the second layer with the first as
// its known prefix. Raw values; clamp at reporting.
RatePoint bccm_rates(const WiretapChannel& ch, const CovariancePair& pair);

}  // namespace wiretap
