#pragma once

#include "wiretap/solver/secrecy.hpp"

#include <map>
#include <optional>
#include <string>

namespace wiretap {

struct ProblemParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optional fault-injection block for checker self-tests: perturbations applied
// to a solved certificate before verification.
struct PerturbSpec {
  std::optional<double> m1_shift;  // m1 += delta * I
  std::optional<double> m2_shift;
  std::optional<double> s2_scale;  // s2 *= factor
  std::optional<double> q1_shift;
  bool any() const { return m1_shift || m2_shift || s2_scale || q1_shift; }
};

struct ProblemFile {
  WiretapChannel channel;
  PowerSpec spec;
  std::optional<Scheme> scheme;  // absent means mean
  std::uint64_t seed = 1;
  SolverConfig solver;
  PerturbSpec perturb;
};

// Strict parser: unknown keys anywhere are rejected.
ProblemFile parse_problem_text(const std::string& text);
ProblemFile parse_problem_file(const std::string& path);

}  // namespace wiretap
