#include "wiretap/channel.hpp"

#include <cmath>

namespace wiretap {

namespace {

// Deterministic sign: flip so the largest-magnitude component is positive.
Vec canonical_sign(Vec v) {
  int imax = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
  if (v.size() > 0 && v[imax] < 0) v = -v;
  return v;
}

}  // namespace

WiretapChannel WiretapChannel::make(Mat h, Mat g) {
  if (h.size() == 0 || g.size() == 0) throw std::invalid_argument("channel: empty matrix");
  if (h.cols() != g.cols())
    throw std::invalid_argument("channel: transmit dimensions differ between receivers");
  if (!h.allFinite() || !g.allFinite()) throw std::invalid_argument("channel: non-finite entry");
  return WiretapChannel{std::move(h), std::move(g)};
}

WiretapChannel swap_roles(const WiretapChannel& ch) { return WiretapChannel{ch.g, ch.h}; }

PowerSpec PowerSpec::unconstrained(double p) {
  if (!(p >= 0)) throw std::invalid_argument("power budget must be non-negative");
  PowerSpec s;
  s.p = p;
  return s;
}

PowerSpec& PowerSpec::set_eve(const WiretapChannel& ch, BoundKind kind, double level) {
  eve = EnergyBound{kind, level, level - ch.ne()};
  return *this;
}

PowerSpec& PowerSpec::set_bob(const WiretapChannel& ch, BoundKind kind, double level) {
  bob = EnergyBound{kind, level, level - ch.nr()};
  return *this;
}

PowerSpec swap_roles(const PowerSpec& spec) {
  PowerSpec out = spec;
  std::swap(out.eve, out.bob);
  return out;
}

std::optional<AlignedChannel> try_align(const WiretapChannel& ch, double cond_limit) {
  if (ch.nr() != ch.nt() || ch.ne() != ch.nt()) return std::nullopt;
  auto cond_of = [&](const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    return smin <= 0 ? std::numeric_limits<double>::infinity() : smax / smin;
  };
  if (cond_of(ch.h) > cond_limit || cond_of(ch.g) > cond_limit) return std::nullopt;
  Mat eye = Mat::Identity(ch.nt(), ch.nt());
  Mat hinv = ch.h.partialPivLu().solve(eye);
  Mat ginv = ch.g.partialPivLu().solve(eye);
  AlignedChannel al;
  al.n1 = symmetrize(hinv * hinv.transpose());
  al.n2 = symmetrize(ginv * ginv.transpose());
  return al;
}

AlignedChannel align(const WiretapChannel& ch, double cond_limit) {
  auto al = try_align(ch, cond_limit);
  if (!al) throw AlignmentError("alignment unavailable: channel not square invertible");
  return *al;
}

double max_deliverable_energy(const WiretapChannel& ch, double p, Receiver r) {
  if (!(p >= 0)) throw std::invalid_argument("power budget must be non-negative");
  const Mat gram = (r == Receiver::eve) ? ch.gram_g() : ch.gram_h();
  return p * eig_sym(gram).vals[0];
}

Lemma1Mean lemma1_mean(const WiretapChannel& ch, double p_mean) {
  if (!(p_mean >= 0)) throw std::invalid_argument("mean power must be non-negative");
  auto ed = eig_sym(ch.gram_g());
  Vec q = canonical_sign(ed.vecs.col(0));
  Lemma1Mean out;
  out.mean = std::sqrt(p_mean) * q;
  out.delivered = (ch.g * out.mean).squaredNorm();
  if (ed.vals.size() < 2) {
    out.unique = true;
  } else {
    double scale = std::max(std::abs(ed.vals[0]), 1e-300);
    out.unique = (ed.vals[0] - ed.vals[1]) / scale >= 1e-6;
  }
  return out;
}

WeightedBeam weighted_beam(const WiretapChannel& ch, double a1_eve, double a2_bob) {
  Mat m = a1_eve * ch.gram_g() + a2_bob * ch.gram_h();
  auto ed = eig_sym(m);
  return WeightedBeam{canonical_sign(ed.vecs.col(0)), ed.vals[0]};
}

namespace {

// Margin of the best single-beam covariance at mixing weight theta:
// how much slack a scaled beam in direction d(theta) leaves on every bound.
double probe_margin(const WiretapChannel& ch, const PowerSpec& spec, double theta) {
  Vec d = weighted_beam(ch, std::cos(theta), std::sin(theta)).dir;
  const double xe = spec.p * (ch.g * d).squaredNorm();
  const double xb = spec.p * (ch.h * d).squaredNorm();
  double rho_lo = 0, rho_hi = 1;
  auto apply = [&](const std::optional<EnergyBound>& b, double full) {
    if (!b) return;
    if (b->kind == BoundKind::min) {
      if (b->tilde <= 0) return;
      if (full <= 0) {
        rho_lo = std::numeric_limits<double>::infinity();
        return;
      }
      rho_lo = std::max(rho_lo, b->tilde / full);
    } else {
      if (b->tilde < 0) {
        rho_hi = -std::numeric_limits<double>::infinity();
        return;
      }
      if (full > 0) rho_hi = std::min(rho_hi, b->tilde / full);
    }
  };
  apply(spec.eve, xe);
  apply(spec.bob, xb);
  return rho_hi - rho_lo;
}

}  // namespace

bool feasible(const WiretapChannel& ch, const PowerSpec& spec) {
  if (!(spec.p >= 0)) return false;
  for (const auto* b : {&spec.eve, &spec.bob})
    if (*b && (*b)->kind == BoundKind::max && (*b)->tilde < 0) return false;
  bool has_floor = (spec.eve && spec.eve->kind == BoundKind::min && spec.eve->tilde > 0) ||
                   (spec.bob && spec.bob->kind == BoundKind::min && spec.bob->tilde > 0);
  if (!has_floor) return true;  // the zero covariance satisfies caps alone

  const int coarse = 128;
  double best = -std::numeric_limits<double>::infinity();
  double best_theta = 0;
  for (int i = 0; i < coarse; ++i) {
    double theta = 2 * 3.141592653589793 * i / coarse;
    double m = probe_margin(ch, spec, theta);
    if (m > best) {
      best = m;
      best_theta = theta;
    }
  }
  if (best >= 0) return true;
  // Golden-section refinement around the best coarse angle.
  const double gr = 0.6180339887498949;
  double lo = best_theta - 2 * 3.141592653589793 / coarse;
  double hi = best_theta + 2 * 3.141592653589793 / coarse;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = probe_margin(ch, spec, x1), f2 = probe_margin(ch, spec, x2);
  for (int it = 0; it < 48; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = probe_margin(ch, spec, x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = probe_margin(ch, spec, x1);
    }
    if (std::max(f1, f2) >= 0) return true;
  }
  return std::max(f1, f2) >= 0;
}

}  // namespace wiretap
