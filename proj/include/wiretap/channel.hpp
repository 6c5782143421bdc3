#pragma once

#include "wiretap/matrix_core.hpp"

#include <optional>

namespace wiretap {

struct AlignmentError : NumericError {
  using NumericError::NumericError;
};

/**
 * Gaussian wiretap channel with unit-covariance noise at both receivers.
 * h: main receiver matrix (nr x nt), g: eavesdropper matrix (ne x nt).
 */
struct WiretapChannel {
  Mat h;
  Mat g;

  int nt() const { return static_cast<int>(h.cols()); }
  int nr() const { return static_cast<int>(h.rows()); }
  int ne() const { return static_cast<int>(g.rows()); }

  Mat gram_h() const { return h.transpose() * h; }
  Mat gram_g() const { return g.transpose() * g; }

  static WiretapChannel make(Mat h, Mat g);
};

// Swap the roles of the two receivers.
WiretapChannel swap_roles(const WiretapChannel& ch);

enum class BoundKind { min, max };
enum class Receiver { bob, eve };

struct EnergyBound {
  BoundKind kind = BoundKind::min;
  double level = 0;  // total received power, noise included
  double tilde = 0;  // level minus the receiver noise power (its antenna count)
};

/**
 * Transmit power budget plus optional per-receiver energy bounds.
 * tilde floors/caps are cached at construction against the channel's noise dims.
 */
struct PowerSpec {
  double p = 0;
  std::optional<EnergyBound> eve;
  std::optional<EnergyBound> bob;

  static PowerSpec unconstrained(double p);
  PowerSpec& set_eve(const WiretapChannel& ch, BoundKind kind, double level);
  PowerSpec& set_bob(const WiretapChannel& ch, BoundKind kind, double level);
  bool constrained() const { return eve.has_value() || bob.has_value(); }
};

PowerSpec swap_roles(const PowerSpec& spec);

// Noise covariances of the aligned model; defined for square invertible channels.
struct AlignedChannel {
  Mat n1;  // main receiver
  Mat n2;  // eavesdropper
};

std::optional<AlignedChannel> try_align(const WiretapChannel& ch, double cond_limit = 1e8);
AlignedChannel align(const WiretapChannel& ch, double cond_limit = 1e8);

// Largest received signal power a budget-p transmitter can place at one receiver.
double max_deliverable_energy(const WiretapChannel& ch, double p, Receiver r);

// Fast feasibility probe for a power spec (beamforming scan; solvers re-check exactly).
bool feasible(const WiretapChannel& ch, const PowerSpec& spec);

struct Lemma1Mean {
  Vec mean;          // sqrt(p_mean) times the top eigenvector of g's Gram
  double delivered;  // signal power this mean places at the eavesdropper
  bool unique;       // false when the top eigenvalue is tied (relative gap < 1e-6)
};

// Optimal rank-one placement of mean power at the eavesdropper.
Lemma1Mean lemma1_mean(const WiretapChannel& ch, double p_mean);

struct WeightedBeam {
  Vec dir;      // unit vector
  double gain;  // top eigenvalue of a1 * G'G + a2 * H'H
};

// Direction maximizing a1 |g q|^2 + a2 |h q|^2 over unit vectors.
WeightedBeam weighted_beam(const WiretapChannel& ch, double a1_eve, double a2_bob);

}  // namespace wiretap
