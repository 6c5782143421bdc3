#include "wiretap/objectives.hpp"

namespace wiretap {

namespace {

void check_var(const WiretapChannel& ch, const Mat& q, const char* who) {
  if (q.rows() != ch.nt() || q.cols() != ch.nt())
    throw std::invalid_argument(std::string(who) + ": covariance dimension mismatch");
  if (!q.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite covariance");
}

// 1/2 logdet(I + M Q M')
double half_logdet_term(const Mat& m, const Mat& q) {
  Mat a = Mat::Identity(m.rows(), m.rows()) + m * q * m.transpose();
  return 0.5 * logdet_psd(a);
}

// d/dQ 1/2 logdet(I + M Q M') = 1/2 M'(I + M Q M')^-1 M
Mat half_logdet_grad(const Mat& m, const Mat& q) {
  Mat a = Mat::Identity(m.rows(), m.rows()) + m * q * m.transpose();
  Mat inv = symmetrize(a).llt().solve(Mat::Identity(m.rows(), m.rows()));
  return symmetrize(0.5 * m.transpose() * inv * m);
}

}  // namespace

CovariancePair zero_pair(int nt) { return CovariancePair{Mat::Zero(nt, nt), Mat::Zero(nt, nt)}; }

double rate_mean(const WiretapChannel& ch, const Mat& q1) {
  check_var(ch, q1, "rate_mean");
  return half_logdet_term(ch.h, q1) - half_logdet_term(ch.g, q1);
}

double rate_an(const WiretapChannel& ch, const CovariancePair& pair) {
  check_var(ch, pair.q1, "rate_an");
  check_var(ch, pair.q2, "rate_an");
  Mat s = pair.s();
  return (half_logdet_term(ch.h, s) - half_logdet_term(ch.h, pair.q2)) -
         (half_logdet_term(ch.g, s) - half_logdet_term(ch.g, pair.q2));
}

double received_power(const WiretapChannel& ch, const CovariancePair& pair, Receiver r) {
  check_var(ch, pair.q1, "received_power");
  check_var(ch, pair.q2, "received_power");
  const Mat& m = (r == Receiver::eve) ? ch.g : ch.h;
  const double noise = static_cast<double>(m.rows());
  return (m * pair.s() * m.transpose()).trace() + noise;
}

Mat grad_rate_mean(const WiretapChannel& ch, const Mat& q1) {
  check_var(ch, q1, "grad_rate_mean");
  return half_logdet_grad(ch.h, q1) - half_logdet_grad(ch.g, q1);
}

Mat grad_rate_an_q1(const WiretapChannel& ch, const CovariancePair& pair) {
  check_var(ch, pair.q1, "grad_rate_an_q1");
  Mat s = pair.s();
  return half_logdet_grad(ch.h, s) - half_logdet_grad(ch.g, s);
}

Mat grad_rate_an_q2(const WiretapChannel& ch, const CovariancePair& pair) {
  check_var(ch, pair.q1, "grad_rate_an_q2");
  Mat s = pair.s();
  return (half_logdet_grad(ch.h, s) - half_logdet_grad(ch.h, pair.q2)) -
         (half_logdet_grad(ch.g, s) - half_logdet_grad(ch.g, pair.q2));
}

RatePoint dpc_rates(const WiretapChannel& ch, const CovariancePair& pair, DpcOrder order) {
  check_var(ch, pair.q1, "dpc_rates");
  check_var(ch, pair.q2, "dpc_rates");
  Mat s = pair.s();
  RatePoint out;
  if (order == DpcOrder::user1_first) {
    out.r1 = half_logdet_term(ch.h, pair.q1);
    out.r2 = half_logdet_term(ch.g, s) - half_logdet_term(ch.g, pair.q1);
  } else {
    out.r1 = half_logdet_term(ch.h, s) - half_logdet_term(ch.h, pair.q2);
    out.r2 = half_logdet_term(ch.g, pair.q2);
  }
  return out;
}

RatePoint bccm_rates(const WiretapChannel& ch, const CovariancePair& pair) {
  check_var(ch, pair.q1, "bccm_rates");
  check_var(ch, pair.q2, "bccm_rates");
  Mat s = pair.s();
  RatePoint out;
  out.r1 = half_logdet_term(ch.h, pair.q1) - half_logdet_term(ch.g, pair.q1);
  out.r2 = (half_logdet_term(ch.g, s) - half_logdet_term(ch.g, pair.q1)) -
           (half_logdet_term(ch.h, s) - half_logdet_term(ch.h, pair.q1));
  return out;
}

}  // namespace wiretap
